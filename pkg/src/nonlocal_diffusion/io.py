"""CSV and JSON input/output with round-trip float formatting."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import UsageError


def fmt(x: float) -> str:
    """Shortest string that round-trips; independent of locale."""
    return repr(float(x))


def write_solution_csv(path, t: np.ndarray, x: np.ndarray, u: np.ndarray) -> None:
    """Long format ``t,x,u``: one row per (time, node), time-major."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        xs = [fmt(v) for v in x]
        for ti, row in zip(t, u):
            ts = fmt(ti)
            w.writerows([ts, xv, fmt(uv)] for xv, uv in zip(xs, row))


def read_solution_csv(path):
    """Inverse of :func:`write_solution_csv`; returns ``(t, x, u)``."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"solution file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "x", "u"]:
            raise UsageError(f"{path}: expected header t,x,u, got {header}")
        try:
            data = np.array([[float(v) for v in row] for row in reader if row])
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    if data.size == 0:
        raise UsageError(f"{path}: no rows")
    t = np.unique(data[:, 0])
    x = data[: np.count_nonzero(data[:, 0] == data[0, 0]), 1]
    if len(t) * len(x) != len(data):
        raise UsageError(f"{path}: rows do not form a full time x space table")
    return t, x, data[:, 2].reshape(len(t), len(x))


def write_columns_csv(path, columns: dict) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])


def write_matrix_csv(path, A: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(A, dtype=float):
            w.writerow([fmt(v) for v in row])


def read_profile_csv(path):
    """Two columns ``x, value`` (header optional) for a spatial data profile."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0:
                    continue
                raise UsageError(f"{path}: cannot parse row {i + 1}") from None
    if len(rows) < 2:
        raise UsageError(f"{path}: need at least two rows")
    arr = np.array(sorted(rows))
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise UsageError(f"{path}: x values must be distinct")
    return arr[:, 0], arr[:, 1]


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
