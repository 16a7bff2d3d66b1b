"""Not-quite-Hamiltonian reduction and reconstruction.

A system (P, h) with momentum components j_a is reducible in this sense when
every {j_a, h} is a polynomial f_a(j_1, ..., j_m) in the momenta. Then

- invariant functions f evolve by fdot = {f, h} (reduced dynamics),
- the momentum curve mu(t) solves mudot_a = f_a(mu) (first reconstruction),
- a trajectory is rebuilt as c(t) = phi(g(t), b(t)) from a lift b(t) with
  j(b(t)) = mu(t) by solving for the group curve g(t) (second reconstruction).

For SE(2) systems the lift is the moving line j_3 = y mu_1 - x mu_2 in the
plane, with the arc-length coordinate integrated alongside mu. When the
Hamiltonian splits into commuting invariant and collective parts, the flow
is the composition of the two flows.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ClosureError, DegenerateMomentumError, DimensionError,
                     InconsistentLiftError, NonInvariantError, NonSymplecticError, NumericalFailure,
                     ParameterError, SplitError)
from .groups import SE2Element, Translation, isotropy_subalgebra
from .integrate import (IntegratorConfig, Status, Trajectory, derivative_along,
                        integrate_ode, interpolation_weights,
                        sample_times, sample_window)
from .parser import parse_poly
from .poly import (Poly, compile_polys, express_in_generators, generator_names,
                   in_momentum_ideal, lie_derivative, poisson_bracket)
from .systems import (SystemSpec, as_state, hamiltonian_vector_field,
                      hamiltonian_vector_field_of, infinitesimal_generators,
                      invariant_values, momentum_map, vector_field, vector_field_polys)

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEGREE = 4
DEFAULT_SAMPLES = 1001
LIFT_THRESHOLD = 1e-6
SIGMA_FLOOR = 1e-14

MODES = ('line', 'second', 'split')
SPLIT_ORDERS = ('sigma-first', 'j-first')


# ---------------------------------------------------------------------------
# Closure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosureEntry:
    index: int
    bracket: Poly
    expression: Poly | None
    displayed: str | None = None
    displayed_matches: bool | None = None

    @property
    def passed(self) -> bool:
        return self.expression is not None

    def to_dict(self, coordinate_names, m: int) -> dict:
        return {
            'a': self.index + 1,
            'bracket': self.bracket.to_string(list(coordinate_names)),
            'f': None if self.expression is None else self.expression.to_string(generator_names(m)),
            'displayed': self.displayed,
            'displayed_matches': self.displayed_matches,
            'status': 'pass' if self.passed else 'fail',
        }


@dataclass(frozen=True)
class ClosureReport:
    system: str
    entries: tuple[ClosureEntry, ...]
    max_degree: int
    coordinate_names: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def verdict(self) -> str:
        return 'pass' if self.passed else 'fail'

    def functions(self) -> list[Poly]:
        """The f_a as polynomials in J1..Jm; ClosureError unless every one was found."""
        missing = [e.index + 1 for e in self.entries if not e.passed]
        if missing:
            raise ClosureError(
                f"{self.system}: {{j_a, h}} is not a polynomial of degree <= {self.max_degree} "
                f"in the momenta for a = {missing}")
        return [e.expression for e in self.entries]

    def to_dict(self) -> dict:
        m = len(self.entries)
        return {
            'system': self.system,
            'max_degree': self.max_degree,
            'verdict': self.verdict,
            'entries': [e.to_dict(self.coordinate_names, m) for e in self.entries],
        }


def _require_symplectic(spec: SystemSpec, what: str) -> None:
    if not spec.symplectic:
        raise NonSymplecticError(f"{what} needs a Hamiltonian system; {spec.name} is a raw vector field")


def verify_closure(spec: SystemSpec, max_degree: int = DEFAULT_MAX_DEGREE) -> ClosureReport:
    """Compute each {j_a, h} exactly and express it in the momenta if possible."""
    _require_symplectic(spec, "Closure verification")
    m = len(spec.momentum)
    entries = []
    for a, j in enumerate(spec.momentum):
        bracket = poisson_bracket(j, spec.hamiltonian)
        expression = express_in_generators(bracket, list(spec.momentum), max_degree)
        displayed = spec.closure_forms.get(a)
        matches = None
        if displayed is not None and expression is not None:
            matches = parse_poly(displayed, symbols=spec.parameters, nvars=m) == expression
        entries.append(ClosureEntry(a, bracket, expression, displayed, matches))
        logger.debug("%s: {j%d, h} = %s -> %s", spec.name, a + 1, bracket, expression)
    return ClosureReport(spec.name, tuple(entries), max_degree, spec.coordinate_names)


def stratum_check(spec: SystemSpec) -> bool:
    """True when every component of X_h lies in the ideal generated by the momenta.

    Then X_h vanishes wherever p = 0, so that stratum is pointwise fixed.
    """
    _require_symplectic(spec, "Stratum check")
    return all(in_momentum_ideal(c) for c in vector_field_polys(spec))


def collective_form(spec: SystemSpec, max_degree: int = 2) -> Poly | None:
    """h as a polynomial in the momenta, when it is collective."""
    _require_symplectic(spec, "Collectivity check")
    return express_in_generators(spec.hamiltonian, list(spec.momentum), max_degree)


# ---------------------------------------------------------------------------
# Invariant functions and reduced dynamics
# ---------------------------------------------------------------------------

def _derivative_along_field(spec: SystemSpec, f: Poly) -> Poly:
    if spec.symplectic:
        return poisson_bracket(f, spec.hamiltonian)
    return lie_derivative(vector_field_polys(spec), f)


def _random_states(spec: SystemSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    states = rng.normal(0.0, 1.0, size=(n, spec.dimension))
    if spec.group.name == 'scaling':
        # the half-plane
        states[:, 1] = np.abs(states[:, 1]) + 0.1
    return states


@dataclass(frozen=True)
class DescentReport:
    system: str
    function: str
    derivative: str
    samples: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            'system': self.system,
            'function': self.function,
            'derivative': self.derivative,
            'samples': self.samples,
            'max_deviation': self.max_deviation,
            'tolerance': self.tolerance,
            'status': 'pass' if self.passed else 'fail',
        }


def check_invariant(spec: SystemSpec, f: Poly, rng: np.random.Generator | None = None,
                    n_samples: int = 20) -> None:
    """NonInvariantError unless f is constant on group orbits.

    Exact for Hamiltonian systems ({j_a, f} = 0 for every a), sampled otherwise.
    """
    if f.nvars != spec.dimension:
        raise DimensionError(f"{f} has {f.nvars} variables, {spec.name} has {spec.dimension}")
    if spec.symplectic:
        for a, j in enumerate(spec.momentum):
            bracket = poisson_bracket(j, f)
            if not bracket.is_zero():
                raise NonInvariantError(f"{spec.name}: {{j{a + 1}, {f}}} = {bracket}, not invariant")
        return
    rng = rng or np.random.default_rng(0)
    compiled = compile_polys([f])
    for s in _random_states(spec, rng, n_samples):
        g = spec.group.random_element(rng)
        before = compiled(s)[0]
        after = compiled(spec.action(g, s))[0]
        if abs(after - before) > 1e-9 * max(1.0, abs(before)):
            raise NonInvariantError(f"{spec.name}: {f} changes along a group orbit")


def verify_invariant_descent(spec: SystemSpec, f: Poly, n_samples: int = 100, seed: int = 0,
                             tolerance: float = 1e-9) -> DescentReport:
    """Sample (X_h . f)(phi_g s) against (X_h . f)(s) for random g and s."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    check_invariant(spec, f, rng)
    derivative = _derivative_along_field(spec, f)
    compiled = compile_polys([derivative])
    worst = 0.0
    for s in _random_states(spec, rng, n_samples):
        g = spec.group.random_element(rng)
        at_s = compiled(s)[0]
        at_gs = compiled(spec.action(g, s))[0]
        worst = max(worst, abs(at_gs - at_s) / max(1.0, abs(at_s)))
    names = list(spec.coordinate_names)
    report = DescentReport(spec.name, f.to_string(names), derivative.to_string(names),
                           n_samples, worst, tolerance)
    logger.debug("%s: descent of %s, max deviation %.3g", spec.name, report.function, worst)
    return report


def reduced_dynamics(spec: SystemSpec, f: Poly, max_degree: int = DEFAULT_MAX_DEGREE) -> Poly | None:
    """{f, h} (or X.f) as a polynomial in the invariant generators, if it is one."""
    derivative = _derivative_along_field(spec, f)
    return express_in_generators(derivative, list(spec.invariants), max_degree)


def reduced_trajectory(spec: SystemSpec, s0, t_span, cfg: IntegratorConfig | None = None,
                       t_eval=None) -> Trajectory:
    """Integrate the reduced field on the invariant generator values.

    For the half-plane demo this is xdot = 1, which exists for all time even
    where the full field blows up.
    """
    s0 = as_state(spec, s0)
    rhs = []
    for name, inv in zip(spec.invariant_names, spec.invariants):
        expression = reduced_dynamics(spec, inv)
        if expression is None:
            raise ClosureError(f"{spec.name}: d{name}/dt is not a polynomial in the invariants")
        rhs.append(expression)
    compiled = compile_polys(rhs)
    z0 = invariant_values(spec, s0)
    return integrate_ode(compiled, z0, t_span, cfg, t_eval=t_eval, system=f"{spec.name}:reduced")


# ---------------------------------------------------------------------------
# First reconstruction
# ---------------------------------------------------------------------------

def first_reconstruction(spec: SystemSpec, mu0, t_span, cfg: IntegratorConfig | None = None,
                         t_eval=None, report: ClosureReport | None = None) -> Trajectory:
    """Integrate mudot_a = f_a(mu) on the dual of the Lie algebra."""
    report = report or verify_closure(spec)
    functions = compile_polys(report.functions())
    mu0 = np.asarray(mu0, dtype=float).ravel()
    if mu0.shape != (len(spec.momentum),):
        raise DimensionError(f"{spec.name}: mu needs {len(spec.momentum)} components, got {mu0.shape}")
    return integrate_ode(functions, mu0, t_span, cfg, t_eval=t_eval, system=f"{spec.name}:coalgebra")


def first_reconstruction_residual(spec: SystemSpec, traj: Trajectory,
                                  report: ClosureReport | None = None) -> float:
    """max |dj/dt - f(j)| along a sampled phase-space trajectory."""
    report = report or verify_closure(spec)
    j = spec.compiled('momentum', lambda: compile_polys(spec.momentum))(traj.states)
    f_of_j = compile_polys(report.functions())(j)
    return float(np.max(np.abs(derivative_along(traj.times, j) - f_of_j)))


def direct_trajectory(spec: SystemSpec, s0, t_span, cfg: IntegratorConfig | None = None,
                      t_eval=None) -> Trajectory:
    """Integrate the full field (X_h or the raw field) from s0."""
    return integrate_ode(vector_field(spec), as_state(spec, s0), t_span, cfg,
                         t_eval=t_eval, system=spec.name)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

def _worst_status(*statuses: Status) -> Status:
    for status in (Status.BLOW_UP, Status.STEP_LIMIT):
        if status in statuses:
            return status
    return Status.COMPLETED


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    system: str
    mode: str
    phase: Trajectory
    coordinate_names: tuple[str, ...]
    coalgebra: Trajectory | None = None
    reduced: Trajectory | None = None
    reference: Trajectory | None = None
    line_speed: np.ndarray | None = None
    arc_length: np.ndarray | None = None
    group_curve: Trajectory | None = None
    residual: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def status(self) -> Status:
        parts = [t.status for t in (self.phase, self.coalgebra, self.reference) if t is not None]
        return _worst_status(*parts)

    @property
    def max_error(self) -> dict[str, float] | None:
        """Max abs difference per coordinate against the reference, on shared samples."""
        if self.reference is None:
            return None
        n = min(len(self.phase), len(self.reference))
        if not np.allclose(self.phase.times[:n], self.reference.times[:n], rtol=0, atol=1e-12):
            raise ValueError("Reconstruction and reference are sampled on different grids")
        diff = np.abs(self.phase.states[:n] - self.reference.states[:n])
        return {name: float(diff[:, i].max()) for i, name in enumerate(self.coordinate_names)}

    def metrics(self) -> dict:
        speed = self.line_speed
        metrics = {
            'system': self.system,
            'mode': self.mode,
            'max_error': self.max_error,
            's_dot_mean': None if speed is None else float(np.mean(speed)),
            's_dot_stddev': None if speed is None else float(np.std(speed)),
            'status': self.status.value,
        }
        if self.residual is not None:
            metrics['residual'] = self.residual
        metrics.update(self.extras)
        return metrics


def _with_states(traj: Trajectory, states, system: str) -> Trajectory:
    return Trajectory(times=traj.times, states=states, status=traj.status,
                      end_time=traj.end_time, system=system, config=traj.config)


# ---------------------------------------------------------------------------
# Moving line (SE(2) systems)
# ---------------------------------------------------------------------------

def _require_se2(spec: SystemSpec, what: str) -> None:
    _require_symplectic(spec, what)
    if spec.group.name != 'se2' or spec.n_dof != 2:
        raise ParameterError(f"{what} needs an SE(2) system on T*R^2, got {spec.name}")


def line_geometry(mu) -> tuple[np.ndarray, np.ndarray]:
    """Nearest point to the origin and unit direction of the line j_3 = y mu_1 - x mu_2."""
    mu1, mu2, mu3 = (float(m) for m in mu)
    sigma = mu1 * mu1 + mu2 * mu2
    if sigma <= SIGMA_FLOOR:
        raise DegenerateMomentumError("sigma = 0: the moving line is undefined")
    root = math.sqrt(sigma)
    return (mu3 / sigma) * np.array([-mu2, mu1]), np.array([mu1, mu2]) / root


def line_state(mu, s: float) -> np.ndarray:
    """Phase point at arc length s along the line, with momenta (mu_1, mu_2)."""
    q0, u = line_geometry(mu)
    return np.concatenate([q0 + s * u, np.asarray(mu, dtype=float)[:2]])


def moving_line_reconstruction(spec: SystemSpec, s0, t_span, cfg: IntegratorConfig | None = None,
                               t_eval=None, reference: bool = True) -> ReconstructionResult:
    """Rebuild positions from mu(t) and the arc length along the moving line.

    The arc length s = <q, u> obeys sdot = <u, qdot> + <q, udot>; the first
    term is the along-line speed reported as line_speed (2h/sqrt(sigma) for
    Hamiltonians quadratic in the momenta), the second is the rotation of
    the line.
    """
    _require_se2(spec, "Moving-line reconstruction")
    s0 = as_state(spec, s0)
    if t_eval is None:
        t_eval = sample_times(t_span, DEFAULT_SAMPLES)
    report = verify_closure(spec)
    functions = compile_polys(report.functions())
    field_h = hamiltonian_vector_field(spec)

    mu0 = momentum_map(spec, s0)
    _, u0 = line_geometry(mu0)
    arc0 = float(s0[:2] @ u0)

    def augmented(z):
        mu, s = z[:3], z[3]
        mu_dot = functions(mu)
        q0, u = line_geometry(mu)
        state = np.concatenate([q0 + s * u, mu[:2]])
        sigma = mu[0] ** 2 + mu[1] ** 2
        u_dot = mu_dot[:2] / math.sqrt(sigma) - u * (mu[:2] @ mu_dot[:2]) / sigma
        s_dot = u @ field_h(state)[:2] + state[:2] @ u_dot
        return np.append(mu_dot, s_dot)

    combined = integrate_ode(augmented, np.append(mu0, arc0), t_span, cfg, t_eval=t_eval,
                             system=f"{spec.name}:line")
    mu = combined.states[:, :3]
    arc = combined.states[:, 3]
    phase = np.array([line_state(m, s) for m, s in zip(mu, arc)])
    speed = np.array([line_geometry(m)[1] @ field_h(c)[:2] for m, c in zip(mu, phase)])

    phase_traj = _with_states(combined, phase, spec.name)
    result = ReconstructionResult(
        system=spec.name, mode='line', phase=phase_traj,
        coordinate_names=spec.coordinate_names,
        coalgebra=_with_states(combined, mu, f"{spec.name}:coalgebra"),
        reduced=_with_states(combined, invariant_values(spec, phase), f"{spec.name}:reduced"),
        reference=direct_trajectory(spec, s0, t_span, cfg, t_eval) if reference else None,
        line_speed=speed, arc_length=arc)
    logger.debug("%s: moving line, s(0)=%.6g, mean speed %.12g", spec.name, arc0, speed.mean())
    return result


# ---------------------------------------------------------------------------
# Second reconstruction
# ---------------------------------------------------------------------------

def canonical_lift(spec: SystemSpec, mu: Trajectory) -> Trajectory:
    """A curve b(t) with j(b(t)) = mu(t).

    SE(2): the nearest point of the moving line with momenta (mu_1, mu_2).
    Translations: q = 0, p = mu.
    """
    _require_symplectic(spec, "Lifting")
    if spec.group.name == 'se2':
        states = np.array([line_state(m, 0.0) for m in mu.states])
    elif isinstance(spec.group.identity(), Translation):
        states = np.hstack([np.zeros_like(mu.states), mu.states])
    else:
        raise ParameterError(f"No canonical lift for the {spec.group.name} action")
    if states.shape[1] != spec.dimension:
        raise DimensionError(f"{spec.name}: lift has {states.shape[1]} coordinates")
    return _with_states(mu, states, f"{spec.name}:lift")


def perturb_lift(spec: SystemSpec, lift: Trajectory, delta: float) -> Trajectory:
    """Shift a lift off j(b) = mu: positions normal to p for n=2, the momentum for n=1."""
    states = np.array(lift.states)
    n = spec.n_dof
    if n == 2:
        p = states[:, 2:]
        norm = np.linalg.norm(p, axis=1, keepdims=True)
        if np.any(norm <= 0):
            raise DegenerateMomentumError("Cannot perturb a lift with p = 0")
        states[:, :2] += delta * np.column_stack([-p[:, 1], p[:, 0]]) / norm
    else:
        states[:, n:] += delta
    return _with_states(lift, states, lift.system)


def initial_group_element(spec: SystemSpec, b0, s0):
    """Translation g with phi_g(b0) = s0; the momenta must already agree."""
    b0, s0 = as_state(spec, b0), as_state(spec, s0)
    n = spec.n_dof
    if not np.allclose(b0[n:], s0[n:], rtol=0, atol=1e-9):
        raise InconsistentLiftError(f"{spec.name}: lift momenta {b0[n:]} differ from {s0[n:]}")
    shift = s0[:n] - b0[:n]
    if spec.group.name == 'se2':
        return SE2Element(0.0, float(shift[0]), float(shift[1]))
    if isinstance(spec.group.identity(), Translation):
        return Translation(tuple(float(x) for x in shift))
    raise ParameterError(f"No translation part in the {spec.group.name} action")


class LiftInterpolator:
    """Quartic local interpolation of a sampled lift and its velocity."""

    width = 5

    def __init__(self, lift: Trajectory):
        if len(lift) < self.width:
            raise ValueError(f"Lift needs at least {self.width} samples, got {len(lift)}")
        self.times = lift.times
        self.states = lift.states

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = int(np.clip(np.searchsorted(self.times, t), 0, len(self.times) - 1))
        window = sample_window(len(self.times), i, self.width)
        w, dw = interpolation_weights(self.times[window], t)
        nodes = self.states[window]
        return w @ nodes, dw @ nodes


def _algebra_velocity(spec: SystemSpec, field_h, g, b, b_dot, restrict: bool):
    """Minimal-norm xi with xi_P(b) = Dphi_g^-1 X_h(phi_g b) - bdot, and the residual."""
    c = spec.action(g, b)
    g_inv = g.inverse()
    # phi_g is affine, so its inverse differential is a difference of images
    target = spec.action(g_inv, c + field_h(c)) - spec.action(g_inv, c) - b_dot
    generators = infinitesimal_generators(spec, b)
    if restrict:
        kernel = isotropy_subalgebra(spec.group, momentum_map(spec, b))
        if not kernel:
            return np.zeros(spec.group.dimension), float(np.linalg.norm(target))
        basis = np.column_stack(kernel)
        eta = np.linalg.lstsq(generators @ basis, target, rcond=None)[0]
        xi = basis @ eta
    else:
        xi = np.linalg.lstsq(generators, target, rcond=None)[0]
    return xi, float(np.linalg.norm(generators @ xi - target))


def _lift_error(spec, lift: Trajectory, mu) -> float:
    if mu is None:
        return first_reconstruction_residual(spec, lift)
    mu_states = mu.states if isinstance(mu, Trajectory) else np.asarray(mu, dtype=float)
    if mu_states.shape != (len(lift), len(spec.momentum)):
        raise DimensionError(f"mu has shape {mu_states.shape}, lift has {len(lift)} samples")
    j = spec.compiled('momentum', lambda: compile_polys(spec.momentum))(lift.states)
    return float(np.max(np.abs(j - mu_states)))


def second_reconstruction(spec: SystemSpec, lift: Trajectory, cfg: IntegratorConfig | None = None,
                          mu=None, mode: str = 'full', threshold: float = LIFT_THRESHOLD,
                          g0=None, reference: Trajectory | None = None) -> ReconstructionResult:
    """Solve for g(t) with c(t) = phi(g(t), b(t)) a trajectory of X_h.

    At each time the algebra velocity xi (gdot = g xi) is the minimal-norm
    least-squares solution over the whole algebra, or over the isotropy
    subalgebra of j(b) with mode='isotropy' (which only reports its residual).
    The lift is checked against mu when given, otherwise against the first
    reconstruction equation.
    """
    _require_symplectic(spec, "Second reconstruction")
    if mode not in ('full', 'isotropy'):
        raise ParameterError(f"Unknown second-reconstruction mode {mode!r}")
    lift_error = _lift_error(spec, lift, mu)
    if lift_error > threshold:
        raise InconsistentLiftError(
            f"{spec.name}: lift misses j(b) = mu by {lift_error:.3g} (threshold {threshold:g})")

    field_h = hamiltonian_vector_field(spec)
    interpolate = LiftInterpolator(lift)
    element_type = spec.group.element_type
    g0 = g0 or spec.group.identity()
    restrict = mode == 'isotropy'

    def group_field(z):
        g = element_type.from_params(z[:-1])
        b, b_dot = interpolate(z[-1])
        xi, _ = _algebra_velocity(spec, field_h, g, b, b_dot, restrict)
        return np.append(g.coordinate_velocity(xi), 1.0)

    t_span = (lift.times[0], lift.times[-1])
    z0 = np.append(g0.params(), t_span[0])
    curve = integrate_ode(group_field, z0, t_span, cfg, t_eval=lift.times,
                          system=f"{spec.name}:group")

    phase, residuals = [], []
    for z, b in zip(curve.states, lift.states):
        g = element_type.from_params(z[:-1])
        _, b_dot = interpolate(z[-1])
        residuals.append(_algebra_velocity(spec, field_h, g, b, b_dot, restrict)[1])
        phase.append(spec.action(g, b))
    residual = max(residuals)
    if mode == 'full' and residual > threshold:
        raise InconsistentLiftError(
            f"{spec.name}: second reconstruction residual {residual:.3g} exceeds {threshold:g}")
    logger.debug("%s: second reconstruction (%s), lift error %.3g, residual %.3g",
                 spec.name, mode, lift_error, residual)

    group_curve = _with_states(curve, curve.states[:, :-1], f"{spec.name}:group")
    coalgebra = mu if isinstance(mu, Trajectory) else None
    phase_states = np.array(phase)
    return ReconstructionResult(
        system=spec.name, mode='second', phase=_with_states(curve, phase_states, spec.name),
        coordinate_names=spec.coordinate_names, coalgebra=coalgebra,
        reduced=_with_states(curve, invariant_values(spec, phase_states), f"{spec.name}:reduced"),
        reference=reference, group_curve=group_curve, residual=residual,
        extras={'lift_error': lift_error, 'second_mode': mode})


def lift_and_reconstruct(spec: SystemSpec, s0, t_span, cfg: IntegratorConfig | None = None,
                         t_eval=None, perturb: float = 0.0, mode: str = 'full',
                         threshold: float = LIFT_THRESHOLD,
                         reference: bool = True) -> ReconstructionResult:
    """First reconstruction, canonical lift, then second reconstruction from s0."""
    s0 = as_state(spec, s0)
    if t_eval is None:
        t_eval = sample_times(t_span, DEFAULT_SAMPLES)
    mu = first_reconstruction(spec, momentum_map(spec, s0), t_span, cfg, t_eval)
    if not mu.completed:
        raise NumericalFailure(f"{spec.name}: first reconstruction stopped with {mu.status.value}")
    lift = canonical_lift(spec, mu)
    g0 = initial_group_element(spec, lift.states[0], s0)
    if perturb:
        lift = perturb_lift(spec, lift, perturb)
    direct = direct_trajectory(spec, s0, t_span, cfg, t_eval) if reference else None
    return second_reconstruction(spec, lift, cfg, mu=mu, mode=mode, threshold=threshold,
                                 g0=g0, reference=direct)


# ---------------------------------------------------------------------------
# Split flow
# ---------------------------------------------------------------------------

def split_hamiltonian(spec: SystemSpec) -> tuple[Poly, Poly]:
    """(h_sigma, h_j) with h = h_sigma + h_j, checked to commute exactly."""
    _require_symplectic(spec, "Split flow")
    if spec.split_invariant is None:
        raise ParameterError(f"{spec.name} declares no invariant/collective split")
    h_sigma = spec.split_invariant
    h_j = spec.hamiltonian - h_sigma
    bracket = poisson_bracket(h_sigma, h_j)
    if not bracket.is_zero():
        raise SplitError(f"{spec.name}: {{h_sigma, h_j}} = {bracket}, the split does not commute")
    return h_sigma, h_j


def free_flow(state, t: float) -> np.ndarray:
    """Exact flow of |p|^2/2: (q, p) -> (q + t p, p)."""
    s = np.asarray(state, dtype=float)
    n = s.shape[-1] // 2
    moved = s.copy()
    moved[..., :n] += t * s[..., n:]
    return moved


def _is_kinetic(h: Poly) -> bool:
    n = h.n_dof
    kinetic = Poly.zero(h.nvars)
    for i in range(n):
        kinetic = kinetic + Poly.p(i, n) ** 2 / 2
    return h == kinetic


def _flow(spec: SystemSpec, h: Poly, key: str, state, t: float, cfg) -> np.ndarray:
    if t == 0:
        return np.array(state, dtype=float)
    if _is_kinetic(h):
        return free_flow(state, t)
    traj = integrate_ode(hamiltonian_vector_field_of(spec, h, key), state, (0.0, t), cfg,
                         system=f"{spec.name}:{key}")
    if not traj.completed:
        raise NumericalFailure(f"{spec.name}: {key} flow stopped with {traj.status.value}")
    return np.array(traj.final_state)


def split_flow_reconstruction(spec: SystemSpec, s0, t: float, cfg: IntegratorConfig | None = None,
                              order: str = 'sigma-first') -> np.ndarray:
    """State at time t by composing the flows of h_sigma and h_j."""
    if order not in SPLIT_ORDERS:
        raise ParameterError(f"Unknown split order {order!r} (known: {', '.join(SPLIT_ORDERS)})")
    if t < 0:
        raise ParameterError(f"Split flow runs forward only, got t={t}")
    h_sigma, h_j = split_hamiltonian(spec)
    state = as_state(spec, s0)
    steps = [(h_sigma, 'split-sigma'), (h_j, 'split-j')]
    if order == 'j-first':
        steps.reverse()
    for h, key in steps:
        state = _flow(spec, h, key, state, t, cfg)
    return state


def split_flow_trajectory(spec: SystemSpec, s0, t_span, cfg: IntegratorConfig | None = None,
                          t_eval=None, reference: bool = True) -> ReconstructionResult:
    """Whole-grid split flow: integrate h_j once, then apply the exact h_sigma flow per sample."""
    h_sigma, h_j = split_hamiltonian(spec)
    s0 = as_state(spec, s0)
    if t_eval is None:
        t_eval = sample_times(t_span, DEFAULT_SAMPLES)
    t0 = float(t_span[0])
    j_flow = integrate_ode(hamiltonian_vector_field_of(spec, h_j, 'split-j'), s0, t_span, cfg,
                           t_eval=t_eval, system=f"{spec.name}:split-j")
    if _is_kinetic(h_sigma):
        phase = np.array([free_flow(s, t - t0) for t, s in zip(j_flow.times, j_flow.states)])
    else:
        phase = np.array([_flow(spec, h_sigma, 'split-sigma', s, t - t0, cfg)
                          for t, s in zip(j_flow.times, j_flow.states)])
    return ReconstructionResult(
        system=spec.name, mode='split', phase=_with_states(j_flow, phase, spec.name),
        coordinate_names=spec.coordinate_names,
        reduced=_with_states(j_flow, invariant_values(spec, phase), f"{spec.name}:reduced"),
        reference=direct_trajectory(spec, s0, t_span, cfg, t_eval) if reference else None)


# ---------------------------------------------------------------------------
# Isotropy
# ---------------------------------------------------------------------------

def isotropy_check(spec: SystemSpec, mu) -> dict:
    """Computed isotropy kernel at mu, and whether 2mu1 e1 - 2mu2 e2 + mu3 e3 lies in it."""
    _require_se2(spec, "Isotropy check")
    mu = np.asarray(mu, dtype=float)
    kernel = isotropy_subalgebra(spec.group, mu)
    displayed = np.array([2 * mu[0], -2 * mu[1], mu[2]])
    if kernel:
        basis = np.column_stack(kernel)
        projection = basis @ (basis.T @ displayed)
        in_kernel = bool(np.linalg.norm(displayed - projection) <= 1e-9 * max(1.0, np.linalg.norm(displayed)))
    else:
        in_kernel = bool(np.linalg.norm(displayed) <= 1e-12)
    if not in_kernel:
        logger.info("%s: 2mu1 e1 - 2mu2 e2 + mu3 e3 is not in the isotropy kernel at mu=%s",
                    spec.name, mu.tolist())
    return {
        'mu': mu.tolist(),
        'kernel': [k.tolist() for k in kernel],
        'displayed_generator': displayed.tolist(),
        'displayed_in_kernel': in_kernel,
    }


def reconstruct(spec: SystemSpec, s0, t_span, mode: str, cfg: IntegratorConfig | None = None,
                t_eval=None, perturb: float = 0.0) -> ReconstructionResult:
    """Dispatch on mode: 'line', 'second' or 'split'."""
    if mode == 'line':
        return moving_line_reconstruction(spec, s0, t_span, cfg, t_eval)
    if mode == 'second':
        return lift_and_reconstruct(spec, s0, t_span, cfg, t_eval, perturb=perturb)
    if mode == 'split':
        return split_flow_trajectory(spec, s0, t_span, cfg, t_eval)
    raise ParameterError(f"Unknown mode {mode!r} (known: {', '.join(MODES)})")
