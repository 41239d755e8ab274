"""The dissipative generator, its superoperator matrices, the L-norm and the
Lyapunov functional.

Sign convention: ``generator`` is the right-hand side of d rho/dt, and
``apply_A`` is its negative (the accretive operator of the well-posedness
argument).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionTooLarge, InvalidState
from .fock import FockConfig, operators
from .numerics import check_hermitian, hermitian_eigvals, hermitize, trace_norm

MAX_SUPER_DIM = 40000


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def _generator(L, Ld, LdL, rho):
    # rho Hermitian => rho LdL = (LdL rho)^dagger
    X = LdL @ rho
    return L @ rho @ Ld - 0.5 * (X + X.conj().T)


def apply_generator(cfg: FockConfig, rho: np.ndarray) -> np.ndarray:
    """``L rho L^dagger - (L^dagger L rho + rho L^dagger L) / 2``."""
    rho = check_hermitian(rho)
    ops = operators(cfg)
    return hermitize(_generator(ops.L, ops.Ld, ops.LdL, rho))


def apply_A(cfg: FockConfig, rho: np.ndarray) -> np.ndarray:
    return -apply_generator(cfg, rho)


def apply_adjoint(cfg: FockConfig, Q: np.ndarray) -> np.ndarray:
    """Heisenberg-picture generator ``L^dagger Q L - {L^dagger L, Q} / 2``.

    Works for any square ``Q``; Hermitian input gives Hermitian output.
    """
    ops = operators(cfg)
    Q = np.asarray(Q, dtype=complex)
    return ops.Ld @ Q @ ops.L - 0.5 * (ops.LdL @ Q + Q @ ops.LdL)


def _check_super_dim(cfg: FockConfig) -> None:
    if cfg.dim ** 2 > MAX_SUPER_DIM:
        raise DimensionTooLarge(f"dim^2 = {cfg.dim ** 2} exceeds {MAX_SUPER_DIM}")


def vectorize_generator(cfg: FockConfig) -> np.ndarray:
    """Matrix of the generator acting on column-stacked operators:
    ``conj(L) (x) L - I (x) L^dag L / 2 - (L^dag L)^T (x) I / 2``."""
    _check_super_dim(cfg)
    ops = operators(cfg)
    eye = np.eye(cfg.dim)
    return (
        np.kron(ops.L.conj(), ops.L)
        - 0.5 * np.kron(eye, ops.LdL)
        - 0.5 * np.kron(ops.LdL.T, eye)
    )


def adjoint_generator(cfg: FockConfig) -> np.ndarray:
    """Matrix of the dual generator under the pairing ``tr(Q^dagger rho)``,
    i.e. the conjugate transpose of :func:`vectorize_generator`."""
    return vectorize_generator(cfg).conj().T


def l_norm(cfg: FockConfig, rho: np.ndarray) -> float:
    """``tr |S rho S|`` with ``S = sqrt(I + L^dagger L)``."""
    rho = check_hermitian(rho)
    S = operators(cfg).S
    return trace_norm(hermitize(S @ rho @ S))


def lyapunov_V(cfg: FockConfig, rho: np.ndarray) -> float:
    """``V(rho) = tr(L rho L^dagger)``; equals ``||rho||_L - 1`` on states."""
    ops = operators(cfg)
    return float(np.real(np.trace(ops.L @ rho @ ops.Ld)))


def dissipation_rate(cfg: FockConfig, rho: np.ndarray) -> float:
    """``-tr(L A(rho) L^dagger)``, the time derivative of V along the flow."""
    ops = operators(cfg)
    return float(np.real(np.trace(ops.L @ apply_generator(cfg, rho) @ ops.Ld)))


def interior_dim(cfg: FockConfig) -> int:
    """Levels below which truncation leaves the ladder identities intact."""
    return cfg.dim - 2 * cfg.k


def validate_density(rho: np.ndarray, herm_tol: float = 1e-11, eig_floor: float = -1e-8,
                     trace_tol: float = 1e-9) -> np.ndarray:
    """Return the Hermitian part of ``rho`` after checking it is a state."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"expected a square matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidState("non-finite entries")
    asym = np.linalg.norm(rho - rho.conj().T)
    if asym > herm_tol * max(1.0, np.linalg.norm(rho)):
        raise InvalidState(f"not Hermitian (asymmetry {asym:.2e})")
    rho = hermitize(rho.astype(complex))
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise InvalidState(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < eig_floor:
        raise InvalidState(f"minimum eigenvalue {lo:.3e} below {eig_floor:.0e}")
    return rho


def random_density(dim: int, rng: np.random.Generator, support: int | None = None,
                   rank: int | None = None) -> np.ndarray:
    """Random state supported on levels ``0..support-1`` (Ginibre ensemble)."""
    support = dim if support is None else support
    if not 1 <= support <= dim:
        raise ValueError(f"support {support} outside 1..{dim}")
    rank = support if rank is None else rank
    G = rng.normal(size=(support, rank)) + 1j * rng.normal(size=(support, rank))
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:support, :support] = G @ G.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_hermitian(dim: int, rng: np.random.Generator, support: int | None = None) -> np.ndarray:
    support = dim if support is None else support
    G = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    X = np.zeros((dim, dim), dtype=complex)
    X[:support, :support] = G + G.conj().T
    return X


def min_eig(rho: np.ndarray) -> float:
    return float(hermitian_eigvals(rho, rtol=1e-8)[0])
