"""Command-line front end.

    python -m cli verify --system elliptic --k 0.5
    python -m cli simulate --system halfplane-demo --out demo.csv
    python -m cli reconstruct --system elliptic --mode line --report line.json
    python -m cli elliptic-table --k 0.5 --t1 10 --samples 101
    python -m cli systems

Exit codes: 0 success, 1 verification or tolerance failure, 2 usage error,
3 numerical failure (blow-up or step limit).

reconstruct writes its CSV to --out (default stdout) and its JSON metrics to
--report; with neither flag given the JSON goes to stderr.
"""

import argparse
import io
import json
import logging
import sys
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from engine import csvio
from engine.elliptic import ellipj
from engine.errors import (ClosureError, InconsistentLiftError, NumericalFailure,
                           ParameterError, SplitError)
from engine.integrate import IntegratorConfig, Status, sample_times
from engine.reduction import MODES, direct_trajectory, reconstruct
from engine.reports import parameters, systems_listing, verification_report
from engine.systems import BUILTIN_NAMES, SystemSpec, as_state, builtin

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# worst first when combining sweep runs
_SEVERITY = {EXIT_NUMERICAL: 2, EXIT_FAILURE: 1, EXIT_OK: 0}


class RunConfig(BaseModel):
    """Merged flags and --config file, validated."""

    model_config = ConfigDict(extra='forbid')

    system: str = 'elliptic'
    k: float | None = None
    state: list[float] | None = None
    t0: float | None = None
    t1: float | None = None
    samples: int = Field(1001, ge=2)
    method: Literal['rk4-fixed', 'dp45-adaptive'] = 'dp45-adaptive'
    abs_tol: float = Field(1e-10, gt=0)
    rel_tol: float = Field(1e-10, gt=0)
    step: float | None = Field(None, gt=0)
    tol: float = Field(1e-5, gt=0)
    mode: Literal['line', 'second', 'split'] = 'line'
    out: str | None = None
    report: str | None = None
    max_degree: int = Field(4, ge=1)
    perturb_lift: float = 0.0
    sweep: str | None = None

    @field_validator('state', mode='before')
    @classmethod
    def _split_state(cls, value):
        if isinstance(value, str):
            try:
                return [float(x) for x in value.split(',')]
            except ValueError as exc:
                raise ValueError(f"state must be comma-separated numbers, got {value!r}") from exc
        return value

    @model_validator(mode='after')
    def _check_span(self):
        if self.t0 is not None and self.t1 is not None and self.t1 <= self.t0:
            raise ValueError(f"t1 must exceed t0 (got t0={self.t0}, t1={self.t1})")
        return self

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(method=self.method, step=self.step,
                                abs_tol=self.abs_tol, rel_tol=self.rel_tol)


# ---------------------------------------------------------------------------
# Run context
# ---------------------------------------------------------------------------

def _system(cfg: RunConfig) -> SystemSpec:
    return builtin(cfg.system, cfg.k)


def _initial_state(spec: SystemSpec, cfg: RunConfig) -> np.ndarray:
    return as_state(spec, cfg.state if cfg.state is not None else spec.default_state)


def _t_span(spec: SystemSpec, cfg: RunConfig) -> tuple[float, float]:
    t0 = spec.default_t_span[0] if cfg.t0 is None else cfg.t0
    t1 = spec.default_t_span[1] if cfg.t1 is None else cfg.t1
    if t1 <= t0:
        raise ParameterError(f"t1 must exceed t0 (got t0={t0}, t1={t1})")
    return t0, t1


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        csvio.write_text(path, text)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    spec = _system(cfg)
    report = verification_report(spec, cfg.max_degree)
    _emit(csvio.report_json(report), cfg.report)
    logger.info("%s: verification %s", spec.name, 'passed' if report['passed'] else 'failed')
    return EXIT_OK if report['passed'] else EXIT_FAILURE


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    spec = _system(cfg)
    s0 = _initial_state(spec, cfg)
    t_span = _t_span(spec, cfg)
    traj = direct_trajectory(spec, s0, t_span, cfg.integrator(), sample_times(t_span, cfg.samples))
    _emit(csvio.trajectory_csv(spec, traj), cfg.out)
    if cfg.report is not None:
        table = csvio.trajectory_table(spec, traj)
        columns = csvio.trajectory_columns(spec)
        drift = {name: float(np.max(np.abs(table[:, i] - table[0, i])))
                 for i, name in enumerate(columns) if i > spec.dimension}
        csvio.write_text(cfg.report, csvio.report_json({
            'system': spec.name, 'parameters': parameters(spec), 'status': traj.status.value,
            'end_time': traj.end_time, 'samples': len(traj), 'drift': drift}))
    if traj.status is not Status.COMPLETED:
        logger.warning("%s: integration stopped with %s at t=%.6g",
                       spec.name, traj.status.value, traj.end_time)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------

def cmd_reconstruct(cfg: RunConfig) -> int:
    spec = _system(cfg)
    s0 = _initial_state(spec, cfg)
    t_span = _t_span(spec, cfg)
    if cfg.perturb_lift and cfg.mode != 'second':
        logger.warning("--perturb-lift only applies to --mode second; ignored")
    result = reconstruct(spec, s0, t_span, cfg.mode, cfg.integrator(),
                         sample_times(t_span, cfg.samples), perturb=cfg.perturb_lift)
    metrics = result.metrics()
    worst = max(metrics['max_error'].values()) if metrics['max_error'] else 0.0
    completed = result.status is Status.COMPLETED
    metrics['tolerance'] = cfg.tol
    metrics['passed'] = completed and worst <= cfg.tol
    _emit(csvio.trajectory_csv(spec, result.phase), cfg.out)
    report = csvio.report_json(metrics)
    if cfg.out is None and cfg.report is None:
        # stdout already carries the CSV
        sys.stderr.write(report)
    else:
        _emit(report, cfg.report)
    if not completed:
        return EXIT_NUMERICAL
    if not metrics['passed']:
        logger.warning("%s: %s reconstruction error %.3g exceeds --tol %g",
                       spec.name, cfg.mode, worst, cfg.tol)
        return EXIT_FAILURE
    return EXIT_OK


# ---------------------------------------------------------------------------
# elliptic-table and systems
# ---------------------------------------------------------------------------

def cmd_elliptic_table(cfg: RunConfig) -> int:
    k = 0.5 if cfg.k is None else cfg.k
    t0 = 0.0 if cfg.t0 is None else cfg.t0
    t1 = 10.0 if cfg.t1 is None else cfg.t1
    t = sample_times((t0, t1), cfg.samples)
    sn, cn, dn = ellipj(t, k)
    buffer = io.StringIO()
    csvio.write_table(buffer, ['t', 'sn', 'cn', 'dn'], zip(t, sn, cn, dn))
    _emit(buffer.getvalue(), cfg.out)
    return EXIT_OK


def cmd_systems(cfg: RunConfig) -> int:
    _emit(csvio.report_json({'systems': systems_listing()}), cfg.report)
    return EXIT_OK


COMMANDS = {
    'verify': cmd_verify,
    'simulate': cmd_simulate,
    'reconstruct': cmd_reconstruct,
    'elliptic-table': cmd_elliptic_table,
    'systems': cmd_systems,
}
SWEEPABLE = ('verify', 'simulate', 'reconstruct')


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def parse_sweep(text: str) -> tuple[str, list[float]]:
    """'k=0.1:0.9:0.1' -> ('k', [0.1, 0.2, ..., 0.9])."""
    try:
        name, bounds = text.split('=', 1)
        start, stop, step = (float(x) for x in bounds.split(':'))
    except ValueError as exc:
        raise ParameterError(f"--sweep expects name=start:stop:step, got {text!r}") from exc
    if name.strip() != 'k':
        raise ParameterError(f"Only k can be swept, got {name!r}")
    if step <= 0 or stop < start:
        raise ParameterError(f"Empty sweep {text!r}")
    count = int(round((stop - start) / step)) + 1
    return 'k', [round(start + i * step, 12) for i in range(count)]


def _suffixed(path: str | None, value: float) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}-k{value:g}{p.suffix}"))


def run_sweep(command: str, cfg: RunConfig) -> int:
    _, values = parse_sweep(cfg.sweep)
    worst = EXIT_OK
    for value in values:
        run = cfg.model_copy(update={'k': value, 'sweep': None,
                                     'out': _suffixed(cfg.out, value),
                                     'report': _suffixed(cfg.report, value)})
        code = COMMANDS[command](run)
        logger.info("sweep k=%g: exit %d", value, code)
        if _SEVERITY[code] > _SEVERITY[worst]:
            worst = code
    return worst


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--system', help=f"one of {', '.join(BUILTIN_NAMES)}")
    parser.add_argument('--k', type=float, help="elliptic modulus, 0 < k < 1")
    parser.add_argument('--state', help="initial state, comma separated (e.g. -1,0,0,1)")
    parser.add_argument('--t0', type=float)
    parser.add_argument('--t1', type=float)
    parser.add_argument('--samples', type=int, help="output samples including both ends")
    parser.add_argument('--method', choices=['rk4-fixed', 'dp45-adaptive'])
    parser.add_argument('--abs-tol', type=float)
    parser.add_argument('--rel-tol', type=float)
    parser.add_argument('--step', type=float, help="rk4-fixed step size")
    parser.add_argument('--out', help="CSV output path (default stdout)")
    parser.add_argument('--report', help="JSON report path (default stdout)")
    parser.add_argument('--config', help="JSON file with the same keys as the flags")
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='cli', description="Not-quite-Hamiltonian reduction and reconstruction.",
        argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest='command', required=True)

    verify = sub.add_parser('verify', help="exact closure and invariance checks",
                            argument_default=argparse.SUPPRESS)
    _common(verify)
    verify.add_argument('--max-degree', type=int)
    verify.add_argument('--sweep', help="k=start:stop:step")

    simulate = sub.add_parser('simulate', help="integrate the full system to CSV",
                              argument_default=argparse.SUPPRESS)
    _common(simulate)
    simulate.add_argument('--sweep', help="k=start:stop:step")

    recon = sub.add_parser('reconstruct', help="rebuild a trajectory from reduced data",
                           argument_default=argparse.SUPPRESS)
    _common(recon)
    recon.add_argument('--mode', choices=list(MODES))
    recon.add_argument('--tol', type=float, help="max coordinate error for exit 0 (default 1e-5)")
    recon.add_argument('--perturb-lift', type=float, help="shift the lift off j(b) = mu (test hook)")
    recon.add_argument('--sweep', help="k=start:stop:step")

    table = sub.add_parser('elliptic-table', help="sn, cn, dn on a uniform grid",
                           argument_default=argparse.SUPPRESS)
    _common(table)

    systems = sub.add_parser('systems', help="list builtin systems",
                             argument_default=argparse.SUPPRESS)
    _common(systems)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """File settings first, flags on top."""
    data = {}
    config_path = getattr(args, 'config', None)
    if config_path is not None:
        with open(config_path, encoding='utf-8') as handle:
            loaded = json.load(handle)
        if not isinstance(loaded, dict):
            raise ParameterError(f"{config_path}: expected a JSON object")
        data.update({key.replace('-', '_'): value for key, value in loaded.items()})
    flags = {key: value for key, value in vars(args).items()
             if key not in ('command', 'config', 'log_level')}
    data.update(flags)
    return RunConfig.model_validate(data)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(level=getattr(args, 'log_level', 'WARNING'), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if cfg.sweep is not None:
            if args.command not in SWEEPABLE:
                raise ParameterError(f"{args.command} does not take --sweep")
            return run_sweep(args.command, cfg)
        return COMMANDS[args.command](cfg)
    except (InconsistentLiftError, SplitError, ClosureError) as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    except NumericalFailure as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
