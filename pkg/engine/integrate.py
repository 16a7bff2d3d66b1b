"""ODE integration shared by dynamics, reduction and reconstruction.

Two methods:
- dp45-adaptive: Dormand-Prince 5(4) with the standard controller
  (safety 0.9, step factor clamped to [0.2, 5]) and Shampine's 4th-order
  continuous extension for output at requested times.
- rk4-fixed: classical RK4 on a uniform grid, cubic Hermite output.

Blow-up is a termination status, not an exception: the trajectory keeps
everything accepted up to the last good time.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError, NonFiniteError, ParameterError
from .poly import Poly, compile_polys

logger = logging.getLogger(__name__)

METHODS = ('rk4-fixed', 'dp45-adaptive')

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

# Dormand-Prince tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth order minus embedded fourth order
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Shampine's dense output: y(t + s h) = y + h K^T P [s, s^2, s^3, s^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class Status(str, Enum):
    COMPLETED = 'completed'
    BLOW_UP = 'blow-up'
    STEP_LIMIT = 'step-limit'


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = 'dp45-adaptive'
    step: float | None = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 1_000_000
    min_step: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"Unknown method {self.method!r} (known: {', '.join(METHODS)})")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ParameterError("Tolerances must be positive")
        if self.max_steps < 1:
            raise ParameterError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.min_step is not None and self.min_step <= 0:
            raise ParameterError(f"min_step must be positive, got {self.min_step}")
        if self.step is not None and self.step <= 0:
            raise ParameterError(f"step must be positive, got {self.step}")

    def min_step_for(self, span: float) -> float:
        return self.min_step if self.min_step is not None else 1e-14 * span


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    status: Status = Status.COMPLETED
    end_time: float | None = None
    system: str = ''
    config: IntegratorConfig | None = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(len(times), -1)
        if times.ndim != 1 or len(times) == 0 or len(times) != len(states):
            raise DimensionError("Trajectory needs matching, non-empty times and states")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'states', states)
        object.__setattr__(self, 'status', Status(self.status))
        if self.end_time is None:
            object.__setattr__(self, 'end_time', float(times[-1]))

    def __len__(self):
        return len(self.times)

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def column(self, index: int) -> np.ndarray:
        return self.states[:, index]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _evaluate(field, y) -> np.ndarray | None:
    """Field value, or None when it is not finite."""
    try:
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            value = np.asarray(field(y), dtype=float)
    except (NonFiniteError, OverflowError, FloatingPointError):
        return None
    if value.shape != y.shape:
        raise DimensionError(f"Field returned shape {value.shape} for state shape {y.shape}")
    if not np.all(np.isfinite(value)):
        return None
    return value


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if x.size else 0.0


def _initial_step(field, y0, f0, span, cfg) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = _evaluate(field, y0 + h0 * f0)
    if f1 is None:
        return h0 * 1e-3
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _check_t_eval(t_eval, t0, t1) -> np.ndarray | None:
    if t_eval is None:
        return None
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or len(t_eval) == 0:
        raise ValueError("t_eval must be a non-empty 1-D sequence")
    if np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be strictly increasing")
    slack = 1e-12 * max(1.0, abs(t1 - t0))
    if t_eval[0] < t0 - slack or t_eval[-1] > t1 + slack:
        raise ValueError(f"t_eval must lie inside [{t0}, {t1}]")
    return np.clip(t_eval, t0, t1)


class _Sampler:
    """Collects output either at every accepted step or at requested times."""

    def __init__(self, t_eval, t0, y0):
        self.t_eval = t_eval
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.next = 0
        if t_eval is None:
            self._add(t0, y0)
        else:
            while self.next < len(t_eval) and t_eval[self.next] <= t0:
                self._add(t_eval[self.next], y0)
                self.next += 1

    def _add(self, t, y):
        self.times.append(float(t))
        self.states.append(np.array(y, dtype=float))

    def step(self, t_old, t_new, y_new, interpolate):
        if self.t_eval is None:
            self._add(t_new, y_new)
            return
        while self.next < len(self.t_eval) and self.t_eval[self.next] <= t_new:
            s = self.t_eval[self.next]
            self._add(s, y_new if s == t_new else interpolate(s))
            self.next += 1

    def result(self, t0, y0):
        if not self.times:
            return [t0], [np.array(y0, dtype=float)]
        return self.times, self.states


# ---------------------------------------------------------------------------
# Integrators
# ---------------------------------------------------------------------------

def _dp45(field, y0, t0, t1, cfg, sampler):
    span = t1 - t0
    min_step = cfg.min_step_for(span)
    t, y = t0, y0
    f = _evaluate(field, y)
    if f is None:
        return Status.BLOW_UP, t, 0, 0
    h = _initial_step(field, y, f, span, cfg)
    accepted = rejected = 0
    k = np.empty((7, y.size))
    while t < t1:
        if accepted + rejected >= cfg.max_steps:
            return Status.STEP_LIMIT, t, accepted, rejected
        # accepted steps shrink h too; t + h must still move
        if h < min_step or t + h <= t:
            return Status.BLOW_UP, t, accepted, rejected
        last = t + h >= t1 - 1e-12 * span
        if last:
            h = t1 - t
        k[0] = f
        ok = True
        for stage in range(1, 7):
            y_stage = y + h * (np.dot(_A[stage], k[:stage]))
            value = _evaluate(field, y_stage)
            if value is None:
                ok = False
                break
            k[stage] = value
        if ok:
            y_new = y + h * (_B @ k)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(h * (_E @ k)) / scale))
            ok = np.all(np.isfinite(y_new)) and math.isfinite(err)
        if not ok:
            rejected += 1
            h *= MIN_FACTOR
            continue
        if err <= 1.0:
            t_new = t1 if last else t + h
            q = k.T @ _P
            t_old, y_old, h_used = t, y, h

            def interpolate(s, q=q, t_old=t_old, y_old=y_old, h_used=h_used):
                x = (s - t_old) / h_used
                return y_old + h_used * (q @ np.array([x, x * x, x ** 3, x ** 4]))

            sampler.step(t_old, t_new, y_new, interpolate)
            t, y, f = t_new, y_new, k[6].copy()
            accepted += 1
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
            h *= factor
        else:
            rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
    return Status.COMPLETED, t1, accepted, rejected


def _rk4(field, y0, t0, t1, cfg, sampler):
    span = t1 - t0
    n = max(1, math.ceil(span / (cfg.step or span / 1000) - 1e-9))
    h = span / n
    y = y0
    f = _evaluate(field, y)
    if f is None:
        return Status.BLOW_UP, t0, 0, 0
    for i in range(n):
        if i >= cfg.max_steps:
            return Status.STEP_LIMIT, t0 + i * h, i, 0
        t = t0 + i * h
        k1 = f
        k2 = _evaluate(field, y + 0.5 * h * k1)
        k3 = None if k2 is None else _evaluate(field, y + 0.5 * h * k2)
        k4 = None if k3 is None else _evaluate(field, y + h * k3)
        if k4 is None:
            return Status.BLOW_UP, t, i, 0
        y_new = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        f_new = _evaluate(field, y_new)
        if f_new is None:
            return Status.BLOW_UP, t, i, 0
        t_new = t1 if i == n - 1 else t0 + (i + 1) * h

        def interpolate(s, t=t, y=y, f=f, y_new=y_new, f_new=f_new):
            x = (s - t) / h
            h00 = 2 * x ** 3 - 3 * x ** 2 + 1
            h10 = x ** 3 - 2 * x ** 2 + x
            h01 = -2 * x ** 3 + 3 * x ** 2
            h11 = x ** 3 - x ** 2
            return h00 * y + h10 * h * f + h01 * y_new + h11 * h * f_new

        sampler.step(t, t_new, y_new, interpolate)
        y, f = y_new, f_new
    return Status.COMPLETED, t1, n, 0


def integrate_ode(field, y0, t_span, cfg: IntegratorConfig | None = None,
                  t_eval=None, system: str = '') -> Trajectory:
    """Integrate ydot = field(y) over t_span.

    Output is every accepted step, or the requested `t_eval` times. On
    blow-up or step-limit the trajectory stops at the last accepted time and
    carries the status.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = (float(t) for t in t_span)
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise ValueError(f"t_span must satisfy t0 < t1, got {t_span}")
    y0 = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y0)):
        raise NonFiniteError(f"Initial state is not finite: {y0}")
    sampler = _Sampler(_check_t_eval(t_eval, t0, t1), t0, y0)

    run = _dp45 if cfg.method == 'dp45-adaptive' else _rk4
    status, end_time, accepted, rejected = run(field, y0, t0, t1, cfg, sampler)

    if status is Status.COMPLETED:
        logger.debug("%s: %s finished, %d accepted / %d rejected steps",
                     system or 'ode', cfg.method, accepted, rejected)
    else:
        logger.warning("%s: %s stopped with %s at t=%.6g after %d steps",
                       system or 'ode', cfg.method, status.value, end_time, accepted)
    times, states = sampler.result(t0, y0)
    return Trajectory(times=times, states=states, status=status, end_time=end_time,
                      system=system, config=cfg)


# ---------------------------------------------------------------------------
# Along-curve evaluation
# ---------------------------------------------------------------------------

def observable_along(traj: Trajectory, f) -> np.ndarray:
    """Evaluate a Poly (or a callable on single states) at every sample."""
    if isinstance(f, Poly):
        if f.nvars != traj.states.shape[1]:
            raise DimensionError(
                f"Observable has {f.nvars} variables, states have {traj.states.shape[1]}")
        return compile_polys([f])(traj.states)[:, 0]
    return np.array([f(s) for s in traj.states], dtype=float)


def interpolation_weights(nodes, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange weights for the value and first derivative at x."""
    nodes = np.asarray(nodes, dtype=float)
    center = nodes.mean()
    z = nodes - center
    x = x - center
    m = len(z)
    w = np.ones(m)
    dw = np.zeros(m)
    for j in range(m):
        others = [i for i in range(m) if i != j]
        denom = np.prod([z[j] - z[i] for i in others])
        w[j] = np.prod([x - z[i] for i in others]) / denom
        dw[j] = sum(np.prod([x - z[i] for i in others if i != skip]) for skip in others) / denom
    return w, dw


def sample_window(n: int, i: int, width: int = 5) -> slice:
    """Indices of `width` consecutive samples centred on i, clamped to the grid."""
    start = min(max(0, i - width // 2), max(0, n - width))
    return slice(start, min(n, start + width))


def derivative_along(times, states) -> np.ndarray:
    """4th-order finite-difference time derivative of sampled states."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if len(times) < 5:
        raise ValueError("Need at least 5 samples for a 4th-order derivative")
    out = np.empty_like(states)
    for i, t in enumerate(times):
        window = sample_window(len(times), i)
        _, dw = interpolation_weights(times[window], t)
        out[i] = dw @ states[window]
    return out


def sample_times(t_span, samples: int) -> np.ndarray:
    """Uniform output grid with `samples` points including both ends."""
    t0, t1 = (float(t) for t in t_span)
    if samples < 2:
        raise ParameterError(f"Need at least 2 samples, got {samples}")
    if t1 <= t0:
        raise ParameterError(f"t_span must satisfy t0 < t1, got {t_span}")
    return np.linspace(t0, t1, samples)
