"""Trajectory CSV and density-matrix JSON snapshots.

Floats are written with 17 significant digits, which round-trips IEEE-754
doubles exactly.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from pathlib import Path

import numpy as np

from ..evolve import Trajectory
from ..fock import FockConfig

BASE_COLUMNS = ("t", "trace", "min_eig", "V", "l_norm", "a_norm")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def csv_header(n_invariants: int) -> list[str]:
    return list(BASE_COLUMNS) + [f"inv_{j}" for j in range(n_invariants)]


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> Path:
    path = Path(path)
    cols = traj.columns()
    header = csv_header(traj.invariants.shape[1])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(traj)):
            w.writerow([fmt(cols[name][i]) for name in header])
    return path


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def _float_list(values: np.ndarray) -> str:
    if not np.all(np.isfinite(values)):
        raise ValueError("snapshot contains non-finite entries")
    return "[" + ",".join(fmt(v) for v in values) + "]"


def snapshot_to_json(cfg: FockConfig, rho: np.ndarray) -> str:
    """``{dim, k, alpha, re, im}`` with row-major flattened real and imaginary parts."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (cfg.dim, cfg.dim):
        raise ValueError(f"state shape {rho.shape} does not match dim={cfg.dim}")
    flat = rho.ravel(order="C")
    return (
        "{"
        f'"dim": {cfg.dim}, "k": {cfg.k}, "alpha": {fmt(cfg.alpha)}, '
        f'"re": {_float_list(flat.real)}, "im": {_float_list(flat.imag)}'
        "}\n"
    )


def snapshot_from_json(text: str) -> tuple[FockConfig, np.ndarray]:
    obj = json.loads(text)
    try:
        dim, k, alpha = int(obj["dim"]), int(obj["k"]), float(obj["alpha"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed snapshot: {exc}") from exc
    if re.size != dim * dim or im.size != dim * dim:
        raise ValueError(f"snapshot arrays have {re.size}/{im.size} entries, expected {dim * dim}")
    rho = (re + 1j * im).reshape(dim, dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = FockConfig(dim, k, alpha)
    return cfg, rho


def write_snapshot(path: str | Path, cfg: FockConfig, rho: np.ndarray) -> Path:
    path = Path(path)
    path.write_text(snapshot_to_json(cfg, rho))
    return path


def read_snapshot(path: str | Path) -> tuple[FockConfig, np.ndarray]:
    return snapshot_from_json(Path(path).read_text())


def snapshot_name(t: float) -> str:
    if not math.isfinite(t):
        raise ValueError("snapshot time must be finite")
    return f"snapshot_t{t:.6g}.json"
