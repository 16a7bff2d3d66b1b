"""Deterministic CSV trajectories and JSON reports.

Floats are written with 17 significant digits, lines end in LF, and a
trajectory file always closes with a `# status: <status>` comment line.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .integrate import Trajectory
from .poly import compile_polys
from .systems import SystemSpec


def format_value(value) -> str:
    return f"{float(value):.17g}"


def trajectory_columns(spec: SystemSpec) -> list[str]:
    """t, coordinates, then h, j1..jm and the invariants where the system has them."""
    columns = ['t', *spec.coordinate_names]
    if spec.symplectic:
        columns.append('h')
    columns.extend(f"j{a + 1}" for a in range(len(spec.momentum)))
    columns.extend(spec.invariant_names)
    return columns


def trajectory_table(spec: SystemSpec, traj: Trajectory) -> np.ndarray:
    states = traj.states
    if states.shape[1] != spec.dimension:
        raise ValueError(f"{spec.name}: trajectory has {states.shape[1]} coordinates, "
                         f"expected {spec.dimension}")
    observables = []
    if spec.symplectic:
        observables.append(spec.hamiltonian)
    observables.extend(spec.momentum)
    observables.extend(spec.invariants)
    parts = [traj.times[:, None], states]
    if observables:
        parts.append(compile_polys(observables)(states))
    return np.hstack(parts)


def write_table(stream, header: list[str], rows, status: str | None = None) -> None:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    if status is not None:
        stream.write(f"# status: {status}\n")


def trajectory_csv(spec: SystemSpec, traj: Trajectory) -> str:
    buffer = io.StringIO()
    write_table(buffer, trajectory_columns(spec), trajectory_table(spec, traj), traj.status.value)
    return buffer.getvalue()


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        handle.write(text)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + '\n'
