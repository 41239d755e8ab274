"""Truncated Fock-space operators and states for the k-photon oscillator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import TailTooHeavy
from .numerics import hermitian_eig, psd_sqrt, singular_values

NULL_RTOL = 1e-8


class TruncationWarning(UserWarning):
    """The truncation dimension is below the guard-band heuristic."""


def guard_dim(k: int, alpha: float) -> float:
    """Smallest dimension considered safe: alpha^2 + 10 alpha + 4k."""
    return alpha * alpha + 10.0 * alpha + 4.0 * k


def default_dim(k: int, alpha: float) -> int:
    """Guard dimension rounded up to a multiple of ``k``, plus 20 levels."""
    d = math.ceil(guard_dim(k, alpha))
    d = k * math.ceil(d / k)
    return d + 20


@dataclass(frozen=True)
class FockConfig:
    """Truncation ``dim`` (levels 0..dim-1), photon order ``k`` and drive
    amplitude ``alpha``."""

    dim: int
    k: int
    alpha: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be a finite real >= 0, got {self.alpha!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.dim < guard_dim(self.k, self.alpha):
            warnings.warn(
                f"dim={self.dim} is below the guard band "
                f"{guard_dim(self.k, self.alpha):.1f} for k={self.k}, alpha={self.alpha}",
                TruncationWarning,
                stacklevel=3,
            )

    @classmethod
    def with_default_dim(cls, k: int, alpha: float, dim: int | None = None) -> "FockConfig":
        return cls(default_dim(k, alpha) if dim is None else dim, k, alpha)

    @property
    def drive(self) -> float:
        """The scalar alpha^k subtracted in the jump operator."""
        return self.alpha ** self.k


def _real_dtype(dtype) -> np.dtype:
    return np.finfo(np.dtype(dtype)).dtype


def annihilation(cfg: FockConfig, dtype=complex) -> np.ndarray:
    """Lowering operator with ``a|n> = sqrt(n)|n-1>``."""
    d = cfg.dim
    a = np.zeros((d, d), dtype=dtype)
    idx = np.arange(1, d)
    a[idx - 1, idx] = np.sqrt(idx.astype(_real_dtype(dtype)))
    return a


def creation(cfg: FockConfig, dtype=complex) -> np.ndarray:
    return annihilation(cfg, dtype).conj().T.copy()


def number_op(cfg: FockConfig, dtype=complex) -> np.ndarray:
    return np.diag(np.arange(cfg.dim).astype(dtype))


def falling_factorial(n: np.ndarray, k: int) -> np.ndarray:
    """n (n-1) ... (n-k+1) elementwise, zero when n < k. Exact (Python ints)."""
    n = np.asarray(n).astype(object)
    out = np.ones_like(n)
    for j in range(k):
        out = out * np.maximum(n - j, 0)
    return out


def rising_factorial(n: np.ndarray, k: int) -> np.ndarray:
    """(n+1) (n+2) ... (n+k) elementwise, exact."""
    n = np.asarray(n).astype(object)
    out = np.ones_like(n)
    for j in range(1, k + 1):
        out = out * (n + j)
    return out


def ladder_power(cfg: FockConfig, dtype=complex) -> np.ndarray:
    """``a^k`` built entrywise: ``(a^k)[n-k, n] = sqrt(n (n-1) ... (n-k+1))``.

    One square root of an exact integer per entry, instead of the k rounded
    factors a repeated matrix product would accumulate.
    """
    d, k = cfg.dim, cfg.k
    ak = np.zeros((d, d), dtype=dtype)
    idx = np.arange(k, d)
    ak[idx - k, idx] = np.sqrt(falling_factorial(idx, k).astype(_real_dtype(dtype)))
    return ak


def lindblad_L(cfg: FockConfig, dtype=complex) -> np.ndarray:
    """Jump operator ``L = a^k - alpha^k I``."""
    drive = np.asarray(cfg.alpha, dtype=_real_dtype(dtype)) ** cfg.k
    return ladder_power(cfg, dtype) - drive * np.eye(cfg.dim, dtype=dtype)


def commutator_M(cfg: FockConfig, dtype=complex) -> np.ndarray:
    """Closed-form diagonal ``M = (N+1)...(N+k) - N (N-1)^+ ... (N-k+1)^+``.

    Equal to ``[L, L^dagger]`` away from the top ``k`` truncated levels.
    """
    n = np.arange(cfg.dim)
    diag = rising_factorial(n, cfg.k) - falling_factorial(n, cfg.k)
    return np.diag(diag.astype(dtype))


def weight_S(cfg: FockConfig) -> np.ndarray:
    """``S = sqrt(I + L^dagger L)``, the weight of the L-norm."""
    L = lindblad_L(cfg)
    return psd_sqrt(np.eye(cfg.dim) + L.conj().T @ L)


class Operators(NamedTuple):
    """Cached read-only operator set for one configuration."""

    a: np.ndarray
    L: np.ndarray
    Ld: np.ndarray
    LdL: np.ndarray
    S: np.ndarray
    M: np.ndarray


@lru_cache(maxsize=32)
def operators(cfg: FockConfig) -> Operators:
    a = annihilation(cfg)
    L = lindblad_L(cfg)
    Ld = L.conj().T.copy()
    LdL = Ld @ L
    LdL = 0.5 * (LdL + LdL.conj().T)
    S = psd_sqrt(np.eye(cfg.dim) + LdL)
    ops = Operators(a, L, Ld, LdL, S, commutator_M(cfg))
    for arr in ops:
        arr.setflags(write=False)
    return ops


def fock_state(cfg: FockConfig, n: int) -> np.ndarray:
    if not 0 <= n < cfg.dim:
        raise ValueError(f"Fock level {n} outside 0..{cfg.dim - 1}")
    v = np.zeros(cfg.dim, dtype=complex)
    v[n] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def _check_tail(cfg: FockConfig, beta: complex) -> None:
    r = abs(beta)
    if r * r + 10.0 * r > cfg.dim:
        raise TailTooHeavy(
            f"|beta|^2 + 10|beta| = {r * r + 10 * r:.2f} exceeds dim={cfg.dim}"
        )


def coherent_state(cfg: FockConfig, beta: complex) -> np.ndarray:
    """Truncated coherent state ``|beta>``, renormalized after truncation."""
    _check_tail(cfg, beta)
    beta = complex(beta)
    c = np.empty(cfg.dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(beta) ** 2)
    for n in range(1, cfg.dim):
        c[n] = c[n - 1] * beta / math.sqrt(n)
    return c / np.linalg.norm(c)


def leg_amplitudes(cfg: FockConfig) -> np.ndarray:
    """The k coherent amplitudes ``alpha exp(2 i pi m / k)``, m = 1..k."""
    m = np.arange(1, cfg.k + 1)
    return cfg.alpha * np.exp(2j * np.pi * m / cfg.k)


def cat_state(cfg: FockConfig, ell: int) -> np.ndarray:
    """Normalized ``sum_m exp(2 i pi ell m / k) |alpha_m>`` over the k legs.

    The normalization is taken numerically from the truncated sum.
    """
    if cfg.alpha <= 0:
        raise ValueError("cat states need alpha > 0")
    _check_tail(cfg, cfg.alpha)
    k = cfg.k
    psi = np.zeros(cfg.dim, dtype=complex)
    for m, beta in zip(range(1, k + 1), leg_amplitudes(cfg)):
        psi += np.exp(2j * np.pi * ell * m / k) * coherent_state(cfg, beta)
    return psi / np.linalg.norm(psi)


def coherent_legs(cfg: FockConfig) -> np.ndarray:
    """Columns are the k coherent states spanning the protected subspace."""
    return np.column_stack([coherent_state(cfg, b) for b in leg_amplitudes(cfg)])


def _gram_schmidt(vectors: list[np.ndarray]) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for _ in range(2):  # second pass restores orthogonality lost to round-off
            for b in basis:
                w -= np.vdot(b, w) * b
        basis.append(w / np.linalg.norm(w))
    return basis


def kernel_basis(cfg: FockConfig) -> list[np.ndarray]:
    """Orthonormal basis of the (near-)kernel of L from the ladder recurrence.

    Seeding ``psi_r = 1`` for each residue ``r < k`` and propagating
    ``psi_{m+k} = alpha^k psi_m / sqrt((m+1)...(m+k))`` gives k vectors, each
    supported on a single residue class of n mod k.
    """
    k, d = cfg.k, cfg.dim
    drive = cfg.drive
    seeds = []
    for r in range(min(k, d)):
        psi = np.zeros(d, dtype=complex)
        psi[r] = 1.0
        for m in range(r, d - k, k):
            psi[m + k] = drive * psi[m] / math.sqrt(float(rising_factorial(m, k)))
        seeds.append(psi)
    return _gram_schmidt(seeds)


class KernelSVD(NamedTuple):
    singular_values: np.ndarray
    sigma_max: float
    null_count: int
    null_space: np.ndarray


def svd_kernel(cfg: FockConfig, rel_threshold: float = NULL_RTOL, method: str = "lapack") -> KernelSVD:
    """Independent view of ker L from singular values.

    Singular values come from the Hermitian dilation of L; the null space is
    the eigenvectors of L^dagger L belonging to the ``null_count`` smallest
    eigenvalues.
    """
    ops = operators(cfg)
    sv = singular_values(ops.L, method)
    smax = float(sv[-1])
    count = int(np.sum(sv < rel_threshold * smax))
    eig = hermitian_eig(ops.LdL, method)
    return KernelSVD(sv, smax, count, eig.eigenvectors[:, :count])


def orthonormal_columns(A: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    U, s, _ = np.linalg.svd(np.asarray(A), full_matrices=False)
    rank = int(np.sum(s > rtol * s[0])) if s.size else 0
    return U[:, :rank]


def max_principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle between ``span(A)`` and ``span(B)`` (columns).

    When the dimensions differ this measures how far the smaller span is from
    lying inside the larger one. Computed from sines, so small angles keep
    full relative accuracy.
    """
    QA = orthonormal_columns(A)
    QB = orthonormal_columns(B)
    if QA.shape[1] > QB.shape[1]:
        QA, QB = QB, QA
    resid = QA - QB @ (QB.conj().T @ QA)
    s = np.linalg.norm(resid, 2) if resid.size else 0.0
    return float(np.arcsin(min(1.0, s)))


def ladder_sum_bound(cfg: FockConfig, psi: np.ndarray) -> tuple[float, float]:
    """Both sides of ``<psi|(a^dag^k + a^k)^2|psi> <= 2 sum_n ((n+k)^k + n^k) |psi_n|^2``.

    ``psi`` must vanish on the top ``k`` levels so that the truncated raising
    power acts exactly; otherwise a ValueError is raised.
    """
    psi = np.asarray(psi, dtype=complex)
    k = cfg.k
    if psi.shape != (cfg.dim,):
        raise ValueError(f"expected a vector of length {cfg.dim}")
    if np.any(psi[cfg.dim - k:] != 0):
        raise ValueError("psi must vanish on the top k levels")
    ak = ladder_power(cfg)
    X = ak + ak.conj().T
    Xpsi = X @ psi
    lhs = float(np.vdot(Xpsi, Xpsi).real)
    n = np.arange(cfg.dim, dtype=float)
    rhs = float(2.0 * np.sum(((n + k) ** k + n ** k) * np.abs(psi) ** 2))
    return lhs, rhs
