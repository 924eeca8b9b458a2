"""CSV/JSON writers with a fixed 17-significant-digit float format.

Everything written here is a pure function of its input, so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from quenchsplit.semidiscrete import OracleTrajectory
from quenchsplit.splitting import Trajectory

TRAJECTORY_COLUMNS = ("k", "t", "tau", "max_U", "residual", "kappa_ratio", "bound_margin", "monotone_ok")


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt_float(v)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats as %.17g; non-finite floats become strings."""
    return _encode(obj, 0, indent) + "\n"


def _encode(obj, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt_float(x) if math.isfinite(x) else json.dumps(fmt_float(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, level + 1, indent)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, level + 1, indent) for v in obj) + "]"
        items = [pad + _encode(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def trajectory_rows(traj: Trajectory):
    margins = traj.bound_margins()
    rows = []
    for s, m in zip(traj.states, margins):
        tau = s.tau_prev if s.k > 0 else float("nan")
        mon = s.monitors
        rows.append([s.k, s.t, tau, float(np.max(s.U)), mon.residual, mon.kappa_ratio, m, mon.monotone_ok])
    return list(TRAJECTORY_COLUMNS), rows


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    return write_csv(path, *trajectory_rows(traj))


def write_oracle_csv(path, traj: OracleTrajectory) -> Path:
    return write_csv(path, *traj.to_csv_rows())
