"""Lie groups acting on the builtin systems: SE(2), R^m translations, scalings.

Each group is described by its structure constants [e_a, e_b] = sum c_ab^c e_c,
a matrix realization of the basis, a dual basis with the trace pairing
<mu, X> = scale * tr(mu X), and orientation signs eps linking the momentum
components of a system to the equivariant momentum map: j_a = eps_a J_a.
For SE(2) the components j1 = px, j2 = py, j3 = y px - x py have eps = (1, 1, -1)
(j3 is minus the usual angular momentum), which gives the bracket table

    {j1, j2} = 0,  {j2, j3} = -j1,  {j3, j1} = -j2.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionError
from .poly import Poly


# ---------------------------------------------------------------------------
# Group elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SE2Element:
    """Planar rigid motion: rotation by theta, then translation by (u, v)."""

    theta: float = 0.0
    u: float = 0.0
    v: float = 0.0

    @classmethod
    def from_params(cls, params) -> 'SE2Element':
        theta, u, v = (float(x) for x in params)
        return cls(theta, u, v)

    def params(self) -> np.ndarray:
        return np.array([self.theta, self.u, self.v])

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def matrix(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = self.rotation()
        m[:2, 2] = (self.u, self.v)
        return m

    def compose(self, other: 'SE2Element') -> 'SE2Element':
        tu, tv = self.rotation() @ (other.u, other.v)
        return SE2Element(self.theta + other.theta, tu + self.u, tv + self.v)

    def inverse(self) -> 'SE2Element':
        tu, tv = -(self.rotation().T @ (self.u, self.v))
        return SE2Element(-self.theta, tu, tv)

    @classmethod
    def exp(cls, xi) -> 'SE2Element':
        """exp(xi1 e1 + xi2 e2 + xi3 e3) in closed form."""
        x1, x2, theta = (float(x) for x in xi)
        if abs(theta) < 1e-8:
            s, c1 = 1.0 - theta * theta / 6.0, 0.5 * theta
        else:
            s, c1 = math.sin(theta) / theta, (1.0 - math.cos(theta)) / theta
        return cls(theta, s * x1 - c1 * x2, c1 * x1 + s * x2)

    def coordinate_velocity(self, xi) -> np.ndarray:
        """d/dt (theta, u, v) when gdot = g * xi (left trivialized)."""
        xi = np.asarray(xi, dtype=float)
        tu, tv = self.rotation() @ xi[:2]
        return np.array([xi[2], tu, tv])


@dataclass(frozen=True)
class Translation:
    shift: tuple[float, ...] = (0.0,)

    @classmethod
    def from_params(cls, params) -> 'Translation':
        return cls(tuple(float(x) for x in params))

    def params(self) -> np.ndarray:
        return np.array(self.shift, dtype=float)

    def matrix(self) -> np.ndarray:
        m = np.eye(len(self.shift) + 1)
        m[:-1, -1] = self.shift
        return m

    def compose(self, other: 'Translation') -> 'Translation':
        return Translation(tuple(a + b for a, b in zip(self.shift, other.shift)))

    def inverse(self) -> 'Translation':
        return Translation(tuple(-a for a in self.shift))

    @classmethod
    def exp(cls, xi) -> 'Translation':
        return cls.from_params(xi)

    def coordinate_velocity(self, xi) -> np.ndarray:
        return np.asarray(xi, dtype=float)


@dataclass(frozen=True)
class Scaling:
    """Multiplication by exp(log_factor)."""

    log_factor: float = 0.0

    @classmethod
    def from_params(cls, params) -> 'Scaling':
        (s,) = params
        return cls(float(s))

    def params(self) -> np.ndarray:
        return np.array([self.log_factor])

    def matrix(self) -> np.ndarray:
        return np.array([[math.exp(self.log_factor)]])

    def compose(self, other: 'Scaling') -> 'Scaling':
        return Scaling(self.log_factor + other.log_factor)

    def inverse(self) -> 'Scaling':
        return Scaling(-self.log_factor)

    @classmethod
    def exp(cls, xi) -> 'Scaling':
        return cls.from_params(xi)

    def coordinate_velocity(self, xi) -> np.ndarray:
        return np.asarray(xi, dtype=float)


# ---------------------------------------------------------------------------
# Group descriptor
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    name: str
    dimension: int
    structure: tuple            # structure[a][b][c] = c_ab^c (Fractions)
    basis: tuple                # matrices e_a
    dual_basis: tuple           # matrices f^a with <f^a, e_b> = delta
    pairing_scale: Fraction = Fraction(1)
    orientation: tuple = field(default=())
    element_type: type = Translation

    def __post_init__(self):
        m = self.dimension
        if len(self.structure) != m or len(self.basis) != m or len(self.dual_basis) != m:
            raise DimensionError(f"Group {self.name}: tables disagree with dimension {m}")
        if not self.orientation:
            object.__setattr__(self, 'orientation', (1,) * m)
        check_structure(self.structure)
        for a in range(m):
            for b in range(m):
                expected = 1.0 if a == b else 0.0
                if abs(self.pairing(self.dual_basis[a], self.basis[b]) - expected) > 1e-12:
                    raise ValueError(f"Group {self.name}: f^{a + 1} is not dual to e_{b + 1}")

    # --- algebra ----------------------------------------------------------

    def bracket(self, xi, eta) -> np.ndarray:
        c = np.array(self.structure, dtype=float)
        return np.einsum('a,b,abc->c', np.asarray(xi, float), np.asarray(eta, float), c)

    def momentum_bracket_table(self, momenta: list[Poly]) -> dict[tuple[int, int], Poly]:
        """Expected {j_a, j_b} = eps_a eps_b sum_c c_ab^c eps_c j_c for a < b."""
        if len(momenta) != self.dimension:
            raise DimensionError(
                f"Group {self.name} has dimension {self.dimension}, got {len(momenta)} momenta")
        eps = self.orientation
        nvars = momenta[0].nvars
        table = {}
        for a in range(self.dimension):
            for b in range(a + 1, self.dimension):
                expected = Poly.zero(nvars)
                for c in range(self.dimension):
                    coeff = self.structure[a][b][c] * eps[a] * eps[b] * eps[c]
                    if coeff:
                        expected = expected + momenta[c] * coeff
                table[(a, b)] = expected
        return table

    # --- dual -------------------------------------------------------------

    def pairing(self, mu_matrix, x_matrix) -> float:
        return float(self.pairing_scale) * float(np.trace(np.asarray(mu_matrix) @ np.asarray(x_matrix)))

    def coalgebra_matrix(self, mu) -> np.ndarray:
        return sum(float(m) * f for m, f in zip(mu, self.dual_basis))

    def coadjoint(self, g, mu) -> np.ndarray:
        """Image of mu under g, matching j(phi_g s) = coadjoint(g, j(s))."""
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.dimension,):
            raise DimensionError(f"Expected {self.dimension} components, got {mu.shape}")
        eps = np.array(self.orientation, dtype=float)
        mu_matrix = self.coalgebra_matrix(eps * mu)
        g_mat = g.matrix()
        g_inv = np.linalg.inv(g_mat)
        image = np.array([self.pairing(mu_matrix, g_inv @ e @ g_mat) for e in self.basis])
        return eps * image

    def ad_star_matrix(self, mu) -> np.ndarray:
        """M with (ad*_xi mu)_b = sum_a M[b, a] xi_a."""
        eps = np.array(self.orientation, dtype=float)
        c = np.array(self.structure, dtype=float)
        return np.einsum('abc,c->ba', c, eps * np.asarray(mu, dtype=float))

    # --- elements ---------------------------------------------------------

    def identity(self):
        return self.element_type.from_params(np.zeros(self.dimension))

    def exp(self, xi):
        return self.element_type.exp(xi)

    def random_element(self, rng: np.random.Generator, scale: float = 1.0):
        return self.exp(rng.normal(0.0, scale, size=self.dimension))


def check_structure(structure) -> None:
    """Antisymmetry and Jacobi identity of the structure constants, exactly."""
    m = len(structure)
    for a in range(m):
        for b in range(m):
            for c in range(m):
                if structure[a][b][c] != -structure[b][a][c]:
                    raise ValueError(f"Structure constants not antisymmetric at ({a}, {b}, {c})")
    for a in range(m):
        for b in range(m):
            for c in range(m):
                for e in range(m):
                    total = sum(structure[a][b][d] * structure[d][c][e]
                                + structure[b][c][d] * structure[d][a][e]
                                + structure[c][a][d] * structure[d][b][e]
                                for d in range(m))
                    if total:
                        raise ValueError(f"Jacobi identity fails for ({a}, {b}, {c})")


def isotropy_subalgebra(group: GroupDescriptor, mu, tol: float = 1e-9) -> list[np.ndarray]:
    """Orthonormal basis of {xi : ad*_xi mu = 0}, singular values below tol are zero."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    matrix = group.ad_star_matrix(mu)
    _, singular, vt = np.linalg.svd(matrix)
    kernel = []
    for s, row in zip(singular, vt):
        if s < tol:
            pivot = np.argmax(np.abs(row))
            kernel.append(row * np.sign(row[pivot]))
    return kernel


# ---------------------------------------------------------------------------
# Builtin groups
# ---------------------------------------------------------------------------

def _zero_structure(m: int) -> tuple:
    return tuple(tuple(tuple(Fraction(0) for _ in range(m)) for _ in range(m)) for _ in range(m))


def _unit(shape, index) -> np.ndarray:
    m = np.zeros(shape)
    m[index] = 1.0
    return m


def se2() -> GroupDescriptor:
    e1 = _unit((3, 3), (0, 2))
    e2 = _unit((3, 3), (1, 2))
    e3 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    c = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
    # [e3, e1] = e2, [e3, e2] = -e1
    c[2][0][1], c[0][2][1] = Fraction(1), Fraction(-1)
    c[2][1][0], c[1][2][0] = Fraction(-1), Fraction(1)
    structure = tuple(tuple(tuple(row) for row in plane) for plane in c)
    return GroupDescriptor(
        name='se2', dimension=3, structure=structure,
        basis=(e1, e2, e3), dual_basis=(2 * e1.T, 2 * e2.T, e3.T),
        pairing_scale=Fraction(1, 2), orientation=(1, 1, -1),
        element_type=SE2Element)


def translations(m: int = 1) -> GroupDescriptor:
    basis = tuple(_unit((m + 1, m + 1), (a, m)) for a in range(m))
    return GroupDescriptor(
        name=f'r{m}', dimension=m, structure=_zero_structure(m),
        basis=basis, dual_basis=tuple(e.T for e in basis),
        element_type=Translation)


def scalings() -> GroupDescriptor:
    unit = np.array([[1.0]])
    return GroupDescriptor(
        name='scaling', dimension=1, structure=_zero_structure(1),
        basis=(unit,), dual_basis=(unit,), element_type=Scaling)
