"""Exact polynomials over the rationals in canonical coordinates.

A phase-space polynomial in n degrees of freedom lives in 2n variables
ordered q1..qn, p1..pn. The same class also carries polynomials in
generator variables J1..Jm (the answers of express_in_generators), so the
variable count is not required to be even except where a bracket is taken.

Poisson bracket convention (omega = sum dq_i ^ dp_i):

    {f, g} = sum_i  df/dq_i dg/dp_i - df/dp_i dg/dq_i
"""

import logging
import math
from fractions import Fraction
from itertools import product
from types import MappingProxyType

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import DimensionError

logger = logging.getLogger(__name__)

Monomial = tuple[int, ...]


def as_fraction(value) -> Fraction:
    """Exact coefficient for an int, Fraction, decimal string or float.

    Floats go through their shortest repr so 0.5 -> 1/2 and 0.3 -> 3/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Non-finite coefficient: {value}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Cannot use {type(value).__name__} as a coefficient")


def _format_fraction(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def default_names(nvars: int) -> list[str]:
    """q1..qn, p1..pn for an even count; J1..Jm otherwise."""
    if nvars % 2 == 0:
        n = nvars // 2
        return [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
    return generator_names(nvars)


def generator_names(m: int) -> list[str]:
    return [f"J{i + 1}" for i in range(m)]


class Poly:
    """Immutable polynomial: a map from exponent tuples to nonzero Fractions."""

    __slots__ = ('nvars', '_terms', '_hash')

    def __init__(self, nvars: int, terms=None):
        if nvars < 1:
            raise DimensionError(f"Polynomial needs at least one variable, got {nvars}")
        clean: dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != nvars:
                raise DimensionError(
                    f"Monomial {mono} has {len(mono)} exponents, expected {nvars}")
            if any(e < 0 for e in mono):
                raise ValueError(f"Negative exponent in monomial {mono}")
            c = clean.get(mono, Fraction(0)) + as_fraction(coeff)
            if c:
                clean[mono] = c
            else:
                clean.pop(mono, None)
        self.nvars = nvars
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> 'Poly':
        # terms already canonical: right length, no zero coefficients
        poly = cls.__new__(cls)
        poly.nvars = nvars
        poly._terms = terms
        poly._hash = None
        return poly

    # --- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> 'Poly':
        return cls(nvars)

    @classmethod
    def constant(cls, value, nvars: int) -> 'Poly':
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, index: int, nvars: int) -> 'Poly':
        if not 0 <= index < nvars:
            raise DimensionError(f"Variable index {index} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[index] = 1
        return cls(nvars, {tuple(mono): 1})

    @classmethod
    def q(cls, i: int, n_dof: int) -> 'Poly':
        """Position q_{i+1} (0-based i)."""
        return cls.var(i, 2 * n_dof)

    @classmethod
    def p(cls, i: int, n_dof: int) -> 'Poly':
        """Momentum p_{i+1} (0-based i)."""
        return cls.var(n_dof + i, 2 * n_dof)

    # --- structure --------------------------------------------------------

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    @property
    def n_dof(self) -> int:
        if self.nvars % 2:
            raise DimensionError(f"{self.nvars} variables is not a phase space")
        return self.nvars // 2

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self._terms)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    # --- arithmetic -------------------------------------------------------

    def _lift(self, other) -> 'Poly':
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionError(
                    f"Dimension mismatch: {self.nvars} vs {other.nvars} variables")
            return other
        return Poly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self._terms)
        for mono, c in other._terms.items():
            s = terms.get(mono, 0) + c
            if s:
                terms[mono] = s
            else:
                terms.pop(mono, None)
        return Poly._raw(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = as_fraction(other)
            if not c:
                return Poly.zero(self.nvars)
            return Poly._raw(self.nvars, {m: v * c for m, v in self._terms.items()})
        other = self._lift(other)
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return Poly._raw(self.nvars, {m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if not other.is_constant() or other.is_zero():
                raise ValueError("Can only divide by a nonzero constant")
            other = other.coefficient((0,) * other.nvars)
        c = as_fraction(other)
        if not c:
            raise ZeroDivisionError("Polynomial divided by zero")
        return self * (1 / c)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError(f"Exponent must be a non-negative integer, got {exponent}")
        result = Poly.constant(1, self.nvars)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def partial(self, index: int) -> 'Poly':
        """Exact derivative with respect to variable `index` (0-based)."""
        if not 0 <= index < self.nvars:
            raise DimensionError(f"Variable index {index} out of range for {self.nvars} variables")
        terms = {}
        for mono, c in self._terms.items():
            e = mono[index]
            if e:
                lowered = mono[:index] + (e - 1,) + mono[index + 1:]
                terms[lowered] = c * e
        return Poly._raw(self.nvars, terms)

    # --- evaluation and substitution -------------------------------------

    def evaluate(self, point) -> float:
        if len(point) != self.nvars:
            raise DimensionError(f"Point has {len(point)} coordinates, expected {self.nvars}")
        total = 0.0
        for mono, c in self._terms.items():
            term = float(c)
            for x, e in zip(point, mono):
                if e:
                    term *= float(x) ** e
            total += term
        return total

    def compose(self, gens: list['Poly']) -> 'Poly':
        """Substitute gens[i] for variable i (exact)."""
        if len(gens) != self.nvars:
            raise DimensionError(f"Need {self.nvars} substitutions, got {len(gens)}")
        target = gens[0].nvars
        for g in gens:
            if g.nvars != target:
                raise DimensionError("Substituted polynomials disagree in dimension")
        powers: dict[tuple[int, int], Poly] = {}

        def power(i, e):
            if (i, e) not in powers:
                powers[(i, e)] = gens[i] ** e
            return powers[(i, e)]

        result = Poly.zero(target)
        for mono, c in self._terms.items():
            term = Poly.constant(c, target)
            for i, e in enumerate(mono):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    # --- comparison and printing -----------------------------------------

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        try:
            return self == Poly.constant(other, self.nvars)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending graded-lex order with q1 < ... < qn < p1 < ... < pn."""
        return sorted(self._terms.items(),
                      key=lambda item: (sum(item[0]), item[0][::-1]),
                      reverse=True)

    def to_string(self, names: list[str] | None = None) -> str:
        names = names or default_names(self.nvars)
        if len(names) != self.nvars:
            raise DimensionError(f"Need {self.nvars} names, got {len(names)}")
        if not self._terms:
            return '0'
        pieces = []
        for idx, (mono, c) in enumerate(self.sorted_terms()):
            factors = '*'.join(
                names[i] if e == 1 else f"{names[i]}^{e}"
                for i, e in enumerate(mono) if e)
            magnitude = abs(c)
            if not factors:
                body = _format_fraction(magnitude)
            elif magnitude == 1:
                body = factors
            else:
                body = f"{_format_fraction(magnitude)}*{factors}"
            if idx == 0:
                pieces.append(f"-{body}" if c < 0 else body)
            else:
                pieces.append(f" - {body}" if c < 0 else f" + {body}")
        return ''.join(pieces)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Poly({self.nvars}, {self.to_string()!r})"


# ---------------------------------------------------------------------------
# Poisson algebra
# ---------------------------------------------------------------------------

def _check_phase_pair(*polys: Poly) -> int:
    nvars = polys[0].nvars
    for f in polys:
        if f.nvars != nvars:
            raise DimensionError(f"Dimension mismatch: {f.nvars} vs {nvars} variables")
    if nvars % 2:
        raise DimensionError(f"{nvars} variables is not a phase space")
    return nvars // 2


def poisson_bracket(f: Poly, g: Poly) -> Poly:
    n = _check_phase_pair(f, g)
    result = Poly.zero(2 * n)
    for i in range(n):
        result = result + f.partial(i) * g.partial(n + i) - f.partial(n + i) * g.partial(i)
    return result


def jacobi_identity_residual(f: Poly, g: Poly, h: Poly) -> Poly:
    """{f,{g,h}} + {g,{h,f}} + {h,{f,g}}; zero for a correct bracket."""
    _check_phase_pair(f, g, h)
    return (poisson_bracket(f, poisson_bracket(g, h))
            + poisson_bracket(g, poisson_bracket(h, f))
            + poisson_bracket(h, poisson_bracket(f, g)))


def hamiltonian_field_polys(h: Poly) -> list[Poly]:
    """Components of X_h: qdot_i = dh/dp_i, pdot_i = -dh/dq_i."""
    n = h.n_dof
    return [h.partial(n + i) for i in range(n)] + [-h.partial(i) for i in range(n)]


def lie_derivative(field: list[Poly], f: Poly) -> Poly:
    """X.f for a polynomial vector field given by its components."""
    if len(field) != f.nvars:
        raise DimensionError(f"Field has {len(field)} components, function has {f.nvars} variables")
    result = Poly.zero(f.nvars)
    for i, component in enumerate(field):
        result = result + component * f.partial(i)
    return result


def in_momentum_ideal(f: Poly) -> bool:
    """True when every monomial carries at least one momentum variable."""
    n = f.n_dof
    return all(any(mono[n:]) for mono in f.terms)


# ---------------------------------------------------------------------------
# Functional dependence on generators
# ---------------------------------------------------------------------------

def _exponent_grid(m: int, max_degree: int) -> list[Monomial]:
    grid = [alpha for alpha in product(range(max_degree + 1), repeat=m)
            if sum(alpha) <= max_degree]
    return sorted(grid, key=lambda a: (sum(a), a[::-1]))


def _solve_exact(rows: list[dict[int, Fraction]], rhs: list[Fraction],
                 ncols: int) -> list[Fraction] | None:
    """Row-reduce [A | b] over QQ; free unknowns are set to zero."""
    zero = QQ.zero
    augmented = []
    for row, b in zip(rows, rhs):
        dense = [zero] * (ncols + 1)
        for col, c in row.items():
            dense[col] = QQ(c.numerator, c.denominator)
        dense[ncols] = QQ(b.numerator, b.denominator)
        augmented.append(dense)
    reduced, pivots = DomainMatrix(augmented, (len(rows), ncols + 1), QQ).rref()
    if ncols in pivots:
        return None
    values = reduced.to_Matrix()
    solution = [Fraction(0)] * ncols
    for i, col in enumerate(pivots):
        r = values[i, ncols]
        solution[col] = Fraction(int(r.p), int(r.q))
    return solution


def express_in_generators(target: Poly, gens: list[Poly], max_degree: int) -> Poly | None:
    """Find F with target = F(gens) and deg F <= max_degree, or None.

    Expands every generator monomial up to max_degree and matches
    coefficients exactly. The answer is a Poly in len(gens) variables.
    """
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    if not gens:
        raise ValueError("Need at least one generator")
    for g in gens:
        if g.nvars != target.nvars:
            raise DimensionError(f"Dimension mismatch: {g.nvars} vs {target.nvars} variables")

    m = len(gens)
    alphas = _exponent_grid(m, max_degree)
    expansions: dict[Monomial, Poly] = {(0,) * m: Poly.constant(1, target.nvars)}
    for alpha in alphas[1:]:
        i = next(j for j, e in enumerate(alpha) if e)
        parent = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
        expansions[alpha] = expansions[parent] * gens[i]

    row_index: dict[Monomial, int] = {}
    rows: list[dict[int, Fraction]] = []
    for col, alpha in enumerate(alphas):
        for mono, c in expansions[alpha].terms.items():
            if mono not in row_index:
                row_index[mono] = len(rows)
                rows.append({})
            rows[row_index[mono]][col] = c
    rhs = [Fraction(0)] * len(rows)
    for mono, c in target.terms.items():
        if mono not in row_index:
            # target uses a monomial no generator product can reach
            return None
        rhs[row_index[mono]] = c

    solution = _solve_exact(rows, rhs, len(alphas))
    if solution is None:
        logger.debug("%s is not a polynomial of degree <= %d in the generators",
                     target, max_degree)
        return None
    return Poly(m, {alpha: c for alpha, c in zip(alphas, solution) if c})


# ---------------------------------------------------------------------------
# Float evaluation
# ---------------------------------------------------------------------------

class PolyMap:
    """A list of polynomials compiled for vectorised float evaluation.

    Call with an array whose last axis has `nvars` entries; the result has
    one trailing entry per polynomial.
    """

    def __init__(self, polys: list[Poly]):
        if not polys:
            raise ValueError("Need at least one polynomial")
        self.nvars = polys[0].nvars
        for f in polys:
            if f.nvars != self.nvars:
                raise DimensionError("Compiled polynomials disagree in dimension")
        monos = sorted(set().union(*(f.terms.keys() for f in polys)))
        self.exponents = np.array(monos, dtype=np.int64).reshape(len(monos), self.nvars)
        self.coefficients = np.array(
            [[float(f.coefficient(m)) for m in monos] for f in polys],
            dtype=float).reshape(len(polys), len(monos))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.nvars:
            raise DimensionError(f"Expected {self.nvars} coordinates, got {x.shape[-1]}")
        monomials = np.prod(x[..., None, :] ** self.exponents, axis=-1)
        return monomials @ self.coefficients.T


def compile_polys(polys: list[Poly]) -> PolyMap:
    return PolyMap(list(polys))
