"""Builtin systems: phase spaces, Hamiltonians, group actions, momentum maps.

    linear-gravity   h = p^2/2 + q, translations in q, j = p
    elliptic         the elliptic particle on T*R^2 with SE(2) symmetry
    free-particle    h = |p|^2/2 with the same SE(2) action
    halfplane-demo   the raw field d/dx + y^2 d/dy on {y > 0}, scaling in y

The momentum components of each Hamiltonian system are checked against the
group's bracket table exactly when the system is built.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import (BracketTableError, DimensionError, NonFiniteError,
                     NonSymplecticError, ParameterError, UnknownSystemError)
from .groups import GroupDescriptor, scalings, se2, translations
from .parser import parse_poly
from .poly import (Poly, as_fraction, compile_polys, hamiltonian_field_polys,
                   poisson_bracket)

logger = logging.getLogger(__name__)

BUILTIN_NAMES = ['linear-gravity', 'elliptic', 'free-particle', 'halfplane-demo']

DEFAULT_K = Fraction(1, 2)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    name: str
    n_dof: int
    hamiltonian: Poly | None
    momentum: tuple[Poly, ...]
    invariants: tuple[Poly, ...]
    group: GroupDescriptor
    action: Callable
    coordinate_names: tuple[str, ...]
    invariant_names: tuple[str, ...]
    default_state: tuple[float, ...]
    default_t_span: tuple[float, float] = (0.0, 10.0)
    parameters: dict = field(default_factory=dict)
    field_polys: tuple[Poly, ...] | None = None
    closure_forms: dict = field(default_factory=dict)
    split_invariant: Poly | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        nvars = 2 * self.n_dof
        polys = list(self.momentum) + list(self.invariants)
        if self.hamiltonian is not None:
            polys.append(self.hamiltonian)
        if self.field_polys is not None:
            polys.extend(self.field_polys)
        for f in polys:
            if f.nvars != nvars:
                raise DimensionError(f"{self.name}: {f} lives in {f.nvars} variables, expected {nvars}")
        if len(self.coordinate_names) != nvars:
            raise DimensionError(f"{self.name}: need {nvars} coordinate names")
        if self.hamiltonian is None and self.field_polys is None:
            raise ValueError(f"{self.name}: need a Hamiltonian or a vector field")
        if self.symplectic:
            check_bracket_table(self)

    @property
    def symplectic(self) -> bool:
        return self.hamiltonian is not None

    @property
    def dimension(self) -> int:
        return 2 * self.n_dof

    def compiled(self, key: str, build: Callable):
        """Memoised compiled maps (the system itself is immutable)."""
        if key not in self._cache:
            logger.debug("%s: compiling %s", self.name, key)
            self._cache[key] = build()
        return self._cache[key]


def check_bracket_table(spec: SystemSpec) -> None:
    expected = spec.group.momentum_bracket_table(list(spec.momentum))
    for (a, b), want in expected.items():
        got = poisson_bracket(spec.momentum[a], spec.momentum[b])
        if got != want:
            raise BracketTableError(
                f"{spec.name}: {{j{a + 1}, j{b + 1}}} = {got}, group table says {want}")


# ---------------------------------------------------------------------------
# States and actions
# ---------------------------------------------------------------------------

def as_state(spec: SystemSpec, state) -> np.ndarray:
    s = np.asarray(state, dtype=float)
    if s.shape != (spec.dimension,):
        raise DimensionError(f"{spec.name}: state needs {spec.dimension} coordinates, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NonFiniteError(f"{spec.name}: non-finite state {s}")
    return s


def act_se2(g, state) -> np.ndarray:
    """Cotangent lift of the affine SE(2) action: q -> R q + t, p -> R p."""
    s = np.asarray(state, dtype=float)
    if s.shape[-1] != 4:
        raise DimensionError(f"SE(2) acts on 4-dimensional phase space, got {s.shape[-1]}")
    rot = g.rotation()
    q = s[..., :2] @ rot.T + (g.u, g.v)
    p = s[..., 2:] @ rot.T
    return np.concatenate([q, p], axis=-1)


def act_translation(g, state) -> np.ndarray:
    s = np.asarray(state, dtype=float)
    n = len(g.shift)
    if s.shape[-1] != 2 * n:
        raise DimensionError(f"R^{n} acts on {2 * n}-dimensional phase space, got {s.shape[-1]}")
    moved = s.copy()
    moved[..., :n] += g.shift
    return moved


def act_scaling(g, state) -> np.ndarray:
    s = np.asarray(state, dtype=float)
    if s.shape[-1] != 2:
        raise DimensionError(f"Height scaling acts on the 2-dimensional half-plane, got {s.shape[-1]}")
    moved = s.copy()
    moved[..., 1] *= math.exp(g.log_factor)
    return moved


def act(spec: SystemSpec, g, state) -> np.ndarray:
    return spec.action(g, as_state(spec, state))


def momentum_map(spec: SystemSpec, state) -> np.ndarray:
    if not spec.momentum:
        raise NonSymplecticError(f"{spec.name} has no momentum map")
    state = as_state(spec, state)
    return spec.compiled('momentum', lambda: compile_polys(spec.momentum))(state)


def invariant_values(spec: SystemSpec, states) -> np.ndarray:
    return spec.compiled('invariants', lambda: compile_polys(spec.invariants))(states)


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------

def vector_field_polys(spec: SystemSpec) -> list[Poly]:
    if spec.symplectic:
        return hamiltonian_field_polys(spec.hamiltonian)
    return list(spec.field_polys)


def _finite_field(spec: SystemSpec, key: str, polys_factory):
    compiled = spec.compiled(key, lambda: compile_polys(polys_factory()))
    dim = spec.dimension

    def evaluate(state):
        s = np.asarray(state, dtype=float)
        if s.shape[-1] != dim:
            raise DimensionError(f"{spec.name}: state needs {dim} coordinates, got {s.shape[-1]}")
        if not np.all(np.isfinite(s)):
            raise NonFiniteError(f"{spec.name}: non-finite state {s}")
        return compiled(s)

    return evaluate


def vector_field(spec: SystemSpec):
    """X_h for Hamiltonian systems, the raw field otherwise."""
    return _finite_field(spec, 'field', lambda: vector_field_polys(spec))


def hamiltonian_vector_field(spec: SystemSpec):
    """state -> (qdot, pdot) with qdot = dh/dp, pdot = -dh/dq."""
    if not spec.symplectic:
        raise NonSymplecticError(f"{spec.name} is not a Hamiltonian system")
    return vector_field(spec)


def hamiltonian_vector_field_of(spec: SystemSpec, h: Poly, key: str):
    """Field of an auxiliary Hamiltonian on the same phase space."""
    return _finite_field(spec, key, lambda: hamiltonian_field_polys(h))


def infinitesimal_generators(spec: SystemSpec, state) -> np.ndarray:
    """Columns X_{e_a}(state) = X_{eps_a j_a}(state) of the action's generators."""
    if not spec.symplectic:
        raise NonSymplecticError(f"{spec.name} has no momentum map")

    def build():
        polys = []
        for eps, j in zip(spec.group.orientation, spec.momentum):
            polys.extend(hamiltonian_field_polys(j * eps))
        return compile_polys(polys)

    flat = spec.compiled('generators', build)(as_state(spec, state))
    return flat.reshape(spec.group.dimension, spec.dimension).T


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _check_k(k) -> Fraction:
    try:
        value = as_fraction(k)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"Invalid modulus k={k!r}") from exc
    if not 0 < value < 1:
        raise ParameterError(f"Elliptic particle needs 0 < k < 1, got k={float(value)}")
    return value


def _se2_system(name: str, h_text: str, parameters: dict, closure_forms: dict) -> SystemSpec:
    symbols = dict(parameters)
    h = parse_poly(h_text, 2, symbols)
    j = [parse_poly(text, 2) for text in ('px', 'py', 'y*px - x*py')]
    sigma = parse_poly('px^2 + py^2', 2)
    return SystemSpec(
        name=name, n_dof=2, hamiltonian=h, momentum=tuple(j), invariants=(sigma,),
        group=se2(), action=act_se2,
        coordinate_names=('x', 'y', 'px', 'py'), invariant_names=('sigma',),
        default_state=(-1.0, 0.0, 0.0, 1.0), parameters=parameters,
        closure_forms=closure_forms, split_invariant=sigma / 2)


def linear_gravity() -> SystemSpec:
    return SystemSpec(
        name='linear-gravity', n_dof=1,
        hamiltonian=parse_poly('p^2/2 + q', 1),
        momentum=(parse_poly('p', 1),), invariants=(parse_poly('p', 1),),
        group=translations(1), action=act_translation,
        coordinate_names=('q', 'p'), invariant_names=('inv1',),
        default_state=(0.0, 1.0), closure_forms={0: '-1'})


def elliptic(k=DEFAULT_K) -> SystemSpec:
    k = _check_k(k)
    return _se2_system(
        'elliptic',
        '((1 + k^2/2 + y^2)*px^2 - 2*x*y*px*py + (1 - k^2/2 + x^2)*py^2)/2',
        {'k': k},
        {0: 'J2*J3', 1: '-J1*J3', 2: '-k^2*J1*J2'})


def free_particle() -> SystemSpec:
    return _se2_system('free-particle', '(px^2 + py^2)/2', {}, {0: '0', 1: '0', 2: '0'})


def halfplane_demo() -> SystemSpec:
    one = Poly.constant(1, 2)
    y = Poly.p(0, 1)
    return SystemSpec(
        name='halfplane-demo', n_dof=1, hamiltonian=None,
        momentum=(), invariants=(Poly.q(0, 1),),
        group=scalings(), action=act_scaling,
        coordinate_names=('x', 'y'), invariant_names=('inv1',),
        default_state=(0.0, 1.0), default_t_span=(0.0, 2.0),
        field_polys=(one, y * y))


def builtin(name: str, k=None) -> SystemSpec:
    """Build a catalog system by name; k only applies to the elliptic particle."""
    if name == 'elliptic':
        return elliptic(DEFAULT_K if k is None else k)
    factories = {
        'linear-gravity': linear_gravity,
        'free-particle': free_particle,
        'halfplane-demo': halfplane_demo,
    }
    if name not in factories:
        raise UnknownSystemError(f"Unknown system: {name!r} (known: {', '.join(BUILTIN_NAMES)})")
    return factories[name]()
