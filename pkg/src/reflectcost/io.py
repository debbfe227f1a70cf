"""CSV/JSON serialization for measures, matrices, and result tables.

CSV is the canonical format; JSON mirrors the same payload losslessly.
Every table starts with '#'-prefixed metadata lines (seed, tolerances);
loaders skip them.  Floats are written with repr-roundtrip precision so a
rerun with the same seed is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = [
    "write_measure",
    "read_measure",
    "write_matrix",
    "read_matrix",
    "write_grid_measure",
    "read_grid_measure",
    "write_table",
]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and x == int(x) and abs(x) < 1e15:
        return repr(x)
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _meta_lines(metadata: dict | None) -> list[str]:
    if not metadata:
        return []
    return [f"# {k} = {v}" for k, v in metadata.items()]


def write_measure(path, weights, metadata: dict | None = None):
    path = Path(path)
    w = np.asarray(weights, dtype=float)
    if path.suffix == ".json":
        path.write_text(json.dumps({"metadata": metadata or {},
                                    "weights": w.tolist()}, indent=1) + "\n")
        return
    lines = _meta_lines(metadata) + ["index,weight"]
    lines += [f"{i},{_fmt(v)}" for i, v in enumerate(w)]
    path.write_text("\n".join(lines) + "\n")


def read_measure(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        return np.asarray(json.loads(path.read_text())["weights"], dtype=float)
    rows = [ln for ln in path.read_text().splitlines()
            if ln.strip() and not ln.startswith("#")]
    if rows and rows[0].lower().startswith("index"):
        rows = rows[1:]
    out = np.empty(len(rows))
    for ln in rows:
        i, v = ln.split(",")
        out[int(i)] = float(v)
    return out


def write_matrix(path, entries, metadata: dict | None = None):
    path = Path(path)
    e = np.asarray(entries, dtype=float)
    if path.suffix == ".json":
        path.write_text(json.dumps({"metadata": metadata or {},
                                    "entries": e.tolist()}, indent=1) + "\n")
        return
    lines = _meta_lines(metadata)
    lines += [",".join(_fmt(v) for v in row) for row in e]
    path.write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        return np.asarray(json.loads(path.read_text())["entries"], dtype=float)
    rows = [ln for ln in path.read_text().splitlines()
            if ln.strip() and not ln.startswith("#")]
    return np.asarray([[float(v) for v in ln.split(",")] for ln in rows])


def write_grid_measure(path, n_theta: int, n_phi: int, weights,
                       metadata: dict | None = None):
    """Sphere-grid measure: rows of (colatitude index, longitude index, weight)."""
    path = Path(path)
    w = np.asarray(weights, dtype=float).reshape(n_theta, n_phi)
    if path.suffix == ".json":
        path.write_text(json.dumps({"metadata": metadata or {},
                                    "n_theta": n_theta, "n_phi": n_phi,
                                    "weights": w.tolist()}, indent=1) + "\n")
        return
    lines = _meta_lines(metadata) + ["colat_index,lon_index,weight"]
    for i in range(n_theta):
        for j in range(n_phi):
            lines.append(f"{i},{j},{_fmt(w[i, j])}")
    path.write_text("\n".join(lines) + "\n")


def read_grid_measure(path):
    """Returns (n_theta, n_phi, flat weights)."""
    path = Path(path)
    if path.suffix == ".json":
        d = json.loads(path.read_text())
        w = np.asarray(d["weights"], dtype=float)
        return d["n_theta"], d["n_phi"], w.reshape(-1)
    rows = [ln for ln in path.read_text().splitlines()
            if ln.strip() and not ln.startswith("#")]
    if rows and rows[0].lower().startswith("colat"):
        rows = rows[1:]
    triples = [(int(a), int(b), float(c)) for a, b, c in
               (ln.split(",") for ln in rows)]
    n_theta = max(t[0] for t in triples) + 1
    n_phi = max(t[1] for t in triples) + 1
    w = np.zeros((n_theta, n_phi))
    for i, j, v in triples:
        w[i, j] = v
    return n_theta, n_phi, w.reshape(-1)


def write_table(path, columns, rows, metadata: dict | None = None, fmt: str = "csv"):
    """Write a result table; fmt 'csv' (canonical) or 'json' (lossless mirror)."""
    path = Path(path)
    if fmt == "json" or path.suffix == ".json":
        payload = {"metadata": metadata or {}, "columns": list(columns),
                   "rows": [[(v if isinstance(v, str) else float(v)) for v in r]
                            for r in rows]}
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return
    lines = _meta_lines(metadata) + [",".join(columns)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n")
