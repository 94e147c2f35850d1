"""CSV / JSON writers with round-trip float formatting."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import DIAGNOSTIC_COLUMNS
from .dynamics import Trajectory


def fmt(value) -> str:
    """Shortest text that parses back to the same float; integers and strings pass through."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and float rows of a numeric table (empty fields become NaN)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) if v else np.nan for v in r] for r in body], dtype=float)
    return header, data.reshape(len(body), len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n")
    return path


def trajectory_header(N: int) -> list[str]:
    return (["t"] + [f"q{j}" for j in range(1, N + 1)] + [f"qd{j}" for j in range(1, N + 1)]
            + list(DIAGNOSTIC_COLUMNS))


def write_trajectory(path: str | Path, traj: Trajectory) -> Path:
    d = traj.diagnostics
    cols = [traj.times[:, None], traj.q, traj.qdot] + [np.asarray(d[c], float)[:, None] for c in DIAGNOSTIC_COLUMNS]
    table = np.hstack(cols)
    return write_csv(path, trajectory_header(traj.N), table.tolist())


def flutter_header(N: int) -> list[str]:
    n = 2 * N
    return ["U"] + [f"re{j}" for j in range(1, n + 1)] + [f"im{j}" for j in range(1, n + 1)]


def write_flutter_table(path: str | Path, U: np.ndarray, table: np.ndarray, N: int) -> Path:
    rows = ([float(u)] + list(r.real) + list(r.imag) for u, r in zip(U, table))
    return write_csv(path, flutter_header(N), rows)


SWEEP_COLUMNS = ("param", "value", "status", "classification", "t_end_reached", "E_initial", "E_max",
                 "E_final", "wL_final", "uL_final", "arc_dev_max", "balance_residual_max")


def sweep_header(n_q: int) -> list[str]:
    return list(SWEEP_COLUMNS) + [f"q{j}_final" for j in range(1, n_q + 1)]


def write_sweep(path: str | Path, rows: list[dict], n_q: int) -> Path:
    def line(r):
        q = list(r.get("q_final") or [])
        return [r.get(c) for c in SWEEP_COLUMNS] + q + [None] * (n_q - len(q))

    return write_csv(path, sweep_header(n_q), (line(r) for r in rows))
