"""Conserved observables, steady states and limit-state prediction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedPairing, RankMismatch
from .fock import FockConfig, cat_state, kernel_basis
from .lindblad import apply_adjoint, unvec, vectorize_generator
from .numerics import hermitize

log = logging.getLogger(__name__)

NULL_RTOL = 1e-8
MIN_GAP_RATIO = 1e3
MAX_PAIRING_COND = 1e8


def explicit_invariant_labels(k: int) -> list[str]:
    labels = [f"cos_{m}" for m in range(0, math.ceil((k - 1) / 2) + 1)]
    labels += [f"sin_{m}" for m in range(1, (k - 1) // 2 + 1)]
    return labels


def explicit_invariants(cfg: FockConfig) -> dict[str, np.ndarray]:
    """The k diagonal invariants ``sum_n cos(2 pi m n / k) |n><n|`` and
    ``sum_n sin(2 pi m n / k) |n><n|``, keyed ``cos_m`` / ``sin_m``.

    ``cos_0`` is the identity (trace conservation); for k = 2, ``cos_1`` is
    photon-number parity.
    """
    n = np.arange(cfg.dim)
    out = {}
    for label in explicit_invariant_labels(cfg.k):
        kind, m = label.split("_")
        phase = 2.0 * np.pi * int(m) * n / cfg.k
        vals = np.cos(phase) if kind == "cos" else np.sin(phase)
        if kind == "cos" and int(m) == 0:
            vals = np.ones(cfg.dim)
        out[label] = np.diag(vals.astype(complex))
    return out


@dataclass(frozen=True)
class InvariantSet:
    """k^2 conserved observables paired with k^2 steady states.

    ``pairing[i, j] = tr(observables[i] @ steady_basis[j])``. The singular
    values of the generator (ascending), the null threshold and the gap ratio
    between the last null and first non-null singular value are kept for
    reporting.
    """

    observables: tuple[np.ndarray, ...]
    steady_basis: tuple[np.ndarray, ...]
    pairing: np.ndarray
    singular_values: np.ndarray
    null_threshold: float
    gap_ratio: float

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.pairing))

    @property
    def size(self) -> int:
        return len(self.observables)


def residue_blocks(cfg: FockConfig) -> list[np.ndarray]:
    """Index sets of the column-stacked operator space grouped by
    ``(i mod k, j mod k)``.

    The jump operator only moves between levels of the same residue, so the
    generator never couples two different groups.
    """
    d, k = cfg.dim, cfg.k
    flat = np.arange(d * d)
    i, j = flat % d, flat // d
    label = (i % k) * k + (j % k)
    return [flat[label == b] for b in range(k * k) if np.any(label == b)]


def _hermitian_span(mats: list[np.ndarray], rtol: float = 1e-8) -> list[np.ndarray]:
    """Real-orthonormal basis (trace inner product) of the Hermitian parts
    of ``mats`` and ``1j * mats``."""
    if not mats:
        return []
    d = mats[0].shape[0]
    cols = []
    for X in mats:
        for Y in (X, 1j * X):
            H = hermitize(Y)
            cols.append(np.concatenate([H.real.ravel(), H.imag.ravel()]))
    R = np.array(cols).T
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    rank = int(np.sum(s > rtol * s[0]))
    out = []
    for c in U[:, :rank].T:
        H = (c[: d * d] + 1j * c[d * d:]).reshape(d, d)
        out.append(hermitize(H))
    return out


def _near_null(cfg: FockConfig, blocked: bool):
    """Singular values of the generator plus left/right singular vectors for
    every block, as (values, left, right) lists of full-size vectors."""
    Lm = vectorize_generator(cfg)
    n = Lm.shape[0]
    blocks = residue_blocks(cfg) if blocked else [np.arange(n)]
    values, lefts, rights = [], [], []
    for idx in blocks:
        U, s, Vh = np.linalg.svd(Lm[np.ix_(idx, idx)])
        for j, sv in enumerate(s):
            values.append(sv)
            lefts.append((idx, U[:, j]))
            rights.append((idx, Vh[j].conj()))
    return np.array(values), lefts, rights


def numeric_invariants(cfg: FockConfig, rel_threshold: float = NULL_RTOL,
                       min_gap: float = MIN_GAP_RATIO, blocked: bool = True) -> InvariantSet:
    """Conserved observables from the near-null space of the dual generator.

    Left singular vectors of the vectorized generator with singular value at
    most ``rel_threshold * sigma_max`` are the conserved observables; the
    matching right singular vectors are steady states. Both sets are reduced
    to real-orthonormal Hermitian bases of dimension ``k**2``.

    Raises :class:`RankMismatch` when the null count differs from ``k**2`` or
    the singular-value gap at ``k**2`` is below ``min_gap``.
    """
    d, k = cfg.dim, cfg.k
    values, lefts, rights = _near_null(cfg, blocked)
    order = np.argsort(values)
    sv = values[order]
    thresh = rel_threshold * sv[-1]
    count = int(np.sum(sv <= thresh))
    want = k * k
    if want < sv.size:
        gap = float(sv[want] / sv[want - 1]) if sv[want - 1] > 0 else math.inf
    else:
        gap = math.inf
    if count != want or gap <= min_gap:
        raise RankMismatch(
            f"near-null dimension {count} (expected {want}) at threshold {thresh:.3e}; "
            f"gap ratio sigma[{want}]/sigma[{want - 1}] = {gap:.3e} (need > {min_gap:.0e})"
        )

    def embed(idx, v):
        full = np.zeros(d * d, dtype=complex)
        full[idx] = v
        return unvec(full, d)

    obs = _hermitian_span([embed(*lefts[i]) for i in order[:want]])
    steady = _hermitian_span([embed(*rights[i]) for i in order[:want]])
    if len(obs) != want or len(steady) != want:
        raise RankMismatch(f"Hermitian reduction produced {len(obs)}/{len(steady)} of {want}")
    # positive trace for the steady basis where possible
    steady = [s if np.trace(s).real >= 0 else -s for s in steady]
    pairing = np.array([[np.real(np.trace(Q @ s)) for s in steady] for Q in obs])
    return InvariantSet(tuple(obs), tuple(steady), pairing, sv, float(thresh), gap)


def adjoint_residuals(cfg: FockConfig, inv: InvariantSet, interior: int | None = None) -> list[float]:
    """``||dual generator(Q)||_F / ||Q||_F`` on the leading ``interior`` block."""
    n = cfg.dim - 2 * cfg.k if interior is None else interior
    out = []
    for Q in inv.observables:
        R = apply_adjoint(cfg, Q)[:n, :n]
        out.append(float(np.linalg.norm(R) / np.linalg.norm(Q)))
    return out


def predict_limit(cfg: FockConfig, inv: InvariantSet, rho0: np.ndarray,
                  max_cond: float = MAX_PAIRING_COND) -> np.ndarray:
    """Long-time limit of ``rho0`` from its invariant expectations.

    Solves ``pairing @ c = [tr(Q_i rho0)]`` and returns ``sum_j c_j sigma_j``.
    No projection onto the PSD cone is applied; a negative eigenvalue below
    -1e-6 is logged as a warning.
    """
    cond = inv.condition_number
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditionedPairing(f"pairing condition number {cond:.3e} > {max_cond:.0e}")
    q = np.array([np.real(np.trace(Q @ rho0)) for Q in inv.observables])
    c = np.linalg.solve(inv.pairing, q)
    rho_bar = hermitize(sum(cj * s for cj, s in zip(c, inv.steady_basis)))
    floor = float(np.linalg.eigvalsh(rho_bar)[0])
    if floor < -1e-6:
        log.warning("predicted limit has eigenvalue %.3e (k=%d, dim=%d)", floor, cfg.k, cfg.dim)
    return rho_bar


def kernel_leakage(cfg: FockConfig, rho: np.ndarray) -> float:
    """Frobenius norm of ``rho`` outside the kernel span, relative to ``rho``."""
    B = np.column_stack(kernel_basis(cfg))
    P = B @ B.conj().T
    scale = np.linalg.norm(rho)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(rho - P @ rho @ P) / scale)


@dataclass(frozen=True)
class CatEigenEntry:
    ell: int
    invariant: str
    measured: float
    stated: float
    residual: float

    @property
    def magnitude_ok(self) -> bool:
        return abs(abs(self.measured) - abs(self.stated)) <= 1e-9

    @property
    def sign_agrees(self) -> bool:
        if abs(self.stated) <= 1e-12:
            return abs(self.measured) <= 1e-9
        return math.copysign(1.0, self.measured) == math.copysign(1.0, self.stated)

    @property
    def is_eigenvector(self) -> bool:
        return self.residual <= 1e-9


def cat_eigen_check(cfg: FockConfig) -> list[CatEigenEntry]:
    """Eigenvalue of each cat state under each diagonal invariant.

    ``stated`` is ``cos(2 pi ell m / k)`` or ``sin(2 pi ell m / k)``; the
    measured value is the Rayleigh quotient. The cat built from legs
    ``alpha exp(2 i pi m / k)`` lives on levels n = -ell (mod k), so the sine
    eigenvalue comes out as ``-sin(2 pi ell m / k)``; the sign is reported,
    not enforced.
    """
    if cfg.alpha <= 0:
        raise ValueError("cat states need alpha > 0")
    k = cfg.k
    entries = []
    invs = explicit_invariants(cfg)
    for ell in range(k):
        v = cat_state(cfg, ell)
        for label, Q in invs.items():
            kind, m = label.split("_")
            phase = 2.0 * np.pi * ell * int(m) / k
            stated = math.cos(phase) if kind == "cos" else math.sin(phase)
            Qv = Q @ v
            mu = float(np.real(np.vdot(v, Qv)))
            entries.append(CatEigenEntry(ell, label, mu, stated, float(np.linalg.norm(Qv - mu * v))))
    return entries
