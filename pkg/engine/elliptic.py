"""Jacobi elliptic functions sn, cn, dn and the complete integral K.

Amplitude by the arithmetic-geometric mean with descending Landen
transformations: run the AGM on (1, k') recording c_n, start from
phi_N = 2^N a_N t and walk back with

    phi_{n-1} = (phi_n + asin(c_n / a_n * sin(phi_n))) / 2

then sn = sin(phi_0), cn = cos(phi_0), dn = sqrt(1 - k^2 sn^2).
Accuracy is guaranteed for k <= 0.99; larger moduli still work but lose
digits as k' -> 0.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, ParameterError

MAX_ITERATIONS = 32
TOLERANCE = 1e-16


@dataclass(frozen=True)
class EllipticModulus:
    k: float

    def __post_init__(self):
        check_modulus(self.k)

    @property
    def complementary(self) -> float:
        return math.sqrt(1.0 - self.k * self.k)


def check_modulus(k) -> float:
    if isinstance(k, EllipticModulus):
        return k.k
    k = float(k)
    if not math.isfinite(k) or not 0.0 <= k < 1.0:
        raise ParameterError(f"Elliptic modulus must satisfy 0 <= k < 1, got {k}")
    return k


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two positive numbers."""
    for _ in range(MAX_ITERATIONS):
        if abs(a - b) <= TOLERANCE * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def complete_K(k) -> float:
    """Quarter period K(k) = pi / (2 AGM(1, k'))."""
    k = check_modulus(k)
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - k * k)))


def _landen_sequence(k: float) -> tuple[list[float], list[float]]:
    a = [1.0]
    c = [k]
    b = math.sqrt(1.0 - k * k)
    for _ in range(MAX_ITERATIONS):
        if abs(c[-1]) <= TOLERANCE:
            break
        a_next = 0.5 * (a[-1] + b)
        # c_{n+1} = (a_n - b_n)/2 without the cancellation
        c.append(c[-1] * c[-1] / (4.0 * a_next))
        b = math.sqrt(a[-1] * b)
        a.append(a_next)
    return a, c


def ellipj(t, k):
    """(sn, cn, dn) at t for modulus k; t may be a scalar or an array."""
    k = check_modulus(k)
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise NonFiniteError("Elliptic functions need a finite argument")
    if k == 0.0:
        sn, cn, dn = np.sin(t_arr), np.cos(t_arr), np.ones_like(t_arr)
    else:
        a, c = _landen_sequence(k)
        n = len(a) - 1
        phi = (2.0 ** n) * a[n] * t_arr
        for i in range(n, 0, -1):
            phi = 0.5 * (phi + np.arcsin(c[i] / a[i] * np.sin(phi)))
        sn = np.sin(phi)
        cn = np.cos(phi)
        dn = np.sqrt(1.0 - k * k * sn * sn)
    if np.ndim(t) == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def sn(t, k):
    return ellipj(t, k)[0]


def cn(t, k):
    return ellipj(t, k)[1]


def dn(t, k):
    return ellipj(t, k)[2]
