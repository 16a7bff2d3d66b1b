"""FastAPI app — the verification, simulation and reconstruction runs as JSON."""

import logging

from fastapi import FastAPI, HTTPException, Query

from engine.elliptic import ellipj
from engine.errors import NumericalFailure
from engine.integrate import IntegratorConfig, sample_times
from engine.reduction import MODES, direct_trajectory, reconstruct
from engine.reports import parameters, systems_listing, verification_report
from engine.systems import as_state, builtin

logger = logging.getLogger(__name__)

app = FastAPI(title="Reduction Engine")

MAX_SAMPLES = 20001


def _grid(t0: float, t1: float, samples: int):
    if samples > MAX_SAMPLES:
        raise ValueError(f"samples must be <= {MAX_SAMPLES}, got {samples}")
    return sample_times((t0, t1), samples)


def _run(handler):
    """Domain errors become 400s; a stopped integration becomes a 422."""
    try:
        return handler()
    except NumericalFailure as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/systems")
def get_systems():
    """Builtin systems with their default states and parameters."""
    return {"systems": systems_listing(), "modes": list(MODES)}


@app.get("/verify")
def get_verify(
    system: str = Query("elliptic"),
    k: float | None = Query(None),
    max_degree: int = Query(4),
):
    """Exact closure, invariance and split checks for one system."""
    return _run(lambda: verification_report(builtin(system, k), max_degree))


@app.get("/elliptic")
def get_elliptic(
    k: float = Query(0.5),
    t0: float = Query(0.0),
    t1: float = Query(10.0),
    samples: int = Query(101),
):
    """sn, cn, dn on a uniform grid."""
    def handler():
        t = _grid(t0, t1, samples)
        sn, cn, dn = ellipj(t, k)
        return {"k": k, "t": t.tolist(), "sn": sn.tolist(), "cn": cn.tolist(), "dn": dn.tolist()}

    return _run(handler)


@app.get("/simulate")
def get_simulate(
    system: str = Query("elliptic"),
    k: float | None = Query(None),
    t1: float | None = Query(None),
    samples: int = Query(201),
):
    """Direct integration from the system's default state, as columns."""
    def handler():
        spec = builtin(system, k)
        t0 = spec.default_t_span[0]
        end = spec.default_t_span[1] if t1 is None else t1
        traj = direct_trajectory(spec, as_state(spec, spec.default_state), (t0, end),
                                 IntegratorConfig(), _grid(t0, end, samples))
        columns = {"t": traj.times.tolist()}
        for i, name in enumerate(spec.coordinate_names):
            columns[name] = traj.column(i).tolist()
        return {
            "system": spec.name,
            "parameters": parameters(spec),
            "status": traj.status.value,
            "end_time": traj.end_time,
            "columns": columns,
        }

    return _run(handler)


@app.get("/reconstruct")
def get_reconstruct(
    system: str = Query("elliptic"),
    k: float | None = Query(None),
    mode: str = Query("line"),
    t1: float | None = Query(None),
    samples: int = Query(1001),
    tol: float = Query(1e-5),
):
    """Reconstruction metrics against direct integration."""
    def handler():
        spec = builtin(system, k)
        t0 = spec.default_t_span[0]
        end = spec.default_t_span[1] if t1 is None else t1
        result = reconstruct(spec, spec.default_state, (t0, end), mode, IntegratorConfig(),
                             _grid(t0, end, samples))
        metrics = result.metrics()
        errors = metrics["max_error"] or {}
        metrics["tolerance"] = tol
        metrics["passed"] = result.status.value == "completed" and max(errors.values(), default=0.0) <= tol
        return metrics

    return _run(handler)
