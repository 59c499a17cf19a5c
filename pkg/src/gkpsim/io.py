"""Deterministic CSV and JSON writers for run directories.

Every writer emits byte-identical output for identical inputs: floats are
printed with %.17g (full round trip), JSON keys are sorted, and nothing
records wall-clock time. Run directories follow a fixed layout:
trajectories/*.csv, wigner/*.csv, fits.json, sweep_table.csv,
certificate.json, manifest.json.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("N", "purity", "Z", "X", "Y", "fidelity")


def _fmt(value):
    return "%.17g" % float(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    path.write_text(text + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def config_hash(config):
    """Stable sha256 over the canonical JSON encoding of a config mapping."""
    canonical = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(path, config, extra=None):
    """Echo the fully resolved configuration before any computation runs."""
    payload = {
        "tool": "gkpsim",
        "config": _jsonable(config),
        "config_hash": config_hash(config),
    }
    if extra:
        payload.update(_jsonable(extra))
    return write_json(path, payload)


def write_trajectory_csv(path, record, extra_columns=()):
    """Time series table: t, standard observables, then any extra columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(TRAJECTORY_COLUMNS) + [
        c for c in sorted(record.observables) if c not in TRAJECTORY_COLUMNS
    ]
    columns = [c for c in columns if c in record.observables]
    for c in extra_columns:
        if c not in columns:
            raise KeyError(f"column {c!r} not recorded")
    lines = ["t," + ",".join(columns)]
    for i, t in enumerate(record.times):
        row = [_fmt(t)] + [_fmt(record.observables[c][i]) for c in columns]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_columns_csv(path, names, arrays):
    """Plain column table with a header row, e.g. (t, contrast) series."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    if len({a.shape[0] for a in arrays}) != 1:
        raise ValueError("columns must share a length")
    lines = [",".join(names)]
    for i in range(arrays[0].shape[0]):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_wigner_csv(path, grid):
    """Header row carries x samples, first column p samples, body is W(x, p)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["p\\x," + ",".join(_fmt(x) for x in grid.x)]
    for j, p in enumerate(grid.p):
        lines.append(_fmt(p) + "," + ",".join(_fmt(v) for v in grid.values[j, :]))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_gap_table_csv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["sigma,lambda1,gamma,n_grid,convergence"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    _fmt(row["sigma"]),
                    _fmt(row["lambda1"]),
                    _fmt(row["gamma"]),
                    str(int(row["n_grid"])),
                    _fmt(row["convergence"]),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sweep_table_csv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["kappa,epsilon,rate,residual,n_points,t_min,t_max,valid"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    _fmt(row["kappa"]),
                    _fmt(row["epsilon"]),
                    _fmt(row["rate"]),
                    _fmt(row["residual"]),
                    str(int(row["n_points"])),
                    _fmt(row["t_min"]),
                    _fmt(row["t_max"]),
                    "1" if row["valid"] else "0",
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path
