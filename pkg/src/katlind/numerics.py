"""Dense complex linear algebra for Hermitian matrices.

Everything here is a pure function of its inputs. Two eigensolver back ends
are available: a cyclic complex Jacobi solver written out in full, and the
LAPACK driver behind :func:`numpy.linalg.eigh`. LAPACK is the default because
the integrators call the eigensolver thousands of times per trajectory; the
Jacobi path is kept selectable and is tested against the same residual
contracts.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, NotHermitian, NotPositiveDefinite, NotPSD

HERMITIAN_RTOL = 1e-12
PSD_CLAMP = 1e-10
EIG_METHODS = ("lapack", "jacobi")


class EigDecomposition(NamedTuple):
    """Eigenvalues in ascending order and the unitary matrix of eigenvectors
    (one per column)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


def hermitize(A: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (A + A^dagger) / 2."""
    return 0.5 * (A + A.conj().T)


def relative_asymmetry(A: np.ndarray) -> float:
    A = np.asarray(A)
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(A - A.conj().T) / scale)


def check_hermitian(A: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate that ``A`` is square, finite and Hermitian to ``rtol``.

    Returns the exactly Hermitian part of ``A`` as a complex array.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NotHermitian("matrix has non-finite entries")
    asym = relative_asymmetry(A)
    if asym > rtol:
        raise NotHermitian(f"relative asymmetry {asym:.3e} exceeds {rtol:.1e}")
    return hermitize(A.astype(complex, copy=False))


def jacobi_eig(A: np.ndarray, max_sweeps: int = 100, rel_threshold: float = 1e-14) -> EigDecomposition:
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Each sweep visits every pivot pair (p, q) with p < q and applies the
    complex Givens rotation that annihilates entry (p, q). Iteration stops once
    the Frobenius norm of the off-diagonal part is below
    ``rel_threshold * ||A||_F``.
    """
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    V = np.eye(n, dtype=complex)
    scale = np.linalg.norm(H)
    if n < 2 or scale == 0.0:
        w = H.diagonal().real.copy()
        order = np.argsort(w)
        return EigDecomposition(w[order], V[:, order])
    threshold = rel_threshold * scale
    # pivots smaller than this cannot move the off-diagonal norm measurably
    skip = threshold / n

    def off_norm(X):
        return np.linalg.norm(X - np.diag(X.diagonal()))

    for _ in range(max_sweeps):
        if off_norm(H) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = H[p, q]
                g = abs(apq)
                if g <= skip:
                    continue
                phase = apq / g
                tau = (H[q, q].real - H[p, p].real) / (2.0 * g)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = [[c, s*phase], [-s*conj(phase), c]] on (p, q); H <- G^H H G
                col_p = H[:, p].copy()
                col_q = H[:, q]
                H[:, p] = c * col_p - s * np.conj(phase) * col_q
                H[:, q] = s * phase * col_p + c * col_q
                row_p = H[p, :].copy()
                row_q = H[q, :]
                H[p, :] = c * row_p - s * phase * row_q
                H[q, :] = s * np.conj(phase) * row_p + c * row_q
                H[p, q] = 0.0
                H[q, p] = 0.0
                H[p, p] = H[p, p].real
                H[q, q] = H[q, q].real
                v_p = V[:, p].copy()
                V[:, p] = c * v_p - s * np.conj(phase) * V[:, q]
                V[:, q] = s * phase * v_p + c * V[:, q]
    else:
        if off_norm(H) > threshold:
            raise NoConvergence(f"Jacobi sweep limit {max_sweeps} reached")
    w = H.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return EigDecomposition(w[order], V[:, order])


def hermitian_eig(A: np.ndarray, method: str = "lapack", rtol: float = HERMITIAN_RTOL) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises :class:`NotHermitian` when the relative asymmetry exceeds ``rtol``
    and :class:`NoConvergence` when the Jacobi sweep limit is exhausted.
    """
    H = check_hermitian(A, rtol)
    if method == "lapack":
        w, U = np.linalg.eigh(H)
        return EigDecomposition(w, U)
    if method == "jacobi":
        return jacobi_eig(H)
    raise ValueError(f"unknown eigensolver {method!r}; choose from {EIG_METHODS}")


def hermitian_eigvals(A: np.ndarray, method: str = "lapack", rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    if method == "lapack":
        return np.linalg.eigvalsh(check_hermitian(A, rtol))
    return hermitian_eig(A, method, rtol).eigenvalues


def trace_norm(A: np.ndarray, method: str = "lapack") -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(hermitian_eigvals(A, method))))


def split_pos_neg(A: np.ndarray, method: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    """Positive and negative parts ``(A+, A-)`` with ``A = A+ - A-``.

    Both parts are PSD and share the eigenbasis of ``A``; ``A+ + A-`` is
    the absolute value ``|A|``.
    """
    w, U = hermitian_eig(A, method)
    pos = (U * np.maximum(w, 0.0)) @ U.conj().T
    neg = (U * np.maximum(-w, 0.0)) @ U.conj().T
    return hermitize(pos), hermitize(neg)


def abs_hermitian(A: np.ndarray, method: str = "lapack") -> np.ndarray:
    pos, neg = split_pos_neg(A, method)
    return pos + neg


def psd_sqrt(A: np.ndarray, method: str = "lapack", clamp: float = PSD_CLAMP) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in ``[-clamp, 0)`` are treated as round-off and set to zero;
    anything more negative raises :class:`NotPSD`.
    """
    w, U = hermitian_eig(A, method)
    if w.size and w[0] < -clamp:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} below -{clamp:.0e}")
    root = np.sqrt(np.maximum(w, 0.0))
    return hermitize((U * root) @ U.conj().T)


class SylvesterSolver:
    """Solver for ``A X + X A = Y`` with a fixed Hermitian positive definite ``A``.

    ``A`` is diagonalized once, after which each solve costs two basis
    changes and an elementwise division ``Y_ij / (a_i + a_j)``.
    """

    def __init__(self, A: np.ndarray, method: str = "lapack", min_eig: float = 1e-12):
        w, U = hermitian_eig(A, method)
        if w[0] <= min_eig:
            raise NotPositiveDefinite(f"minimum eigenvalue {w[0]:.3e} <= {min_eig:.0e}")
        self.eigenvalues = w
        self.eigenvectors = U
        self._denom = w[:, None] + w[None, :]

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        Yt = U.conj().T @ Y @ U
        return U @ (Yt / self._denom) @ U.conj().T


def sylvester_solve(A: np.ndarray, X: np.ndarray, method: str = "lapack") -> np.ndarray:
    """Solve ``A rho + rho A = X`` for Hermitian positive definite ``A``."""
    return SylvesterSolver(A, method)(np.asarray(X, dtype=complex))


def singular_values(A: np.ndarray, method: str = "lapack") -> np.ndarray:
    """Singular values of an arbitrary square matrix, ascending.

    Computed from the Hermitian dilation ``[[0, A], [A^dagger, 0]]`` whose
    eigenvalues are ``+/- sigma_i``. Unlike the eigenvalues of ``A^dagger A``,
    this keeps absolute accuracy near ``eps * sigma_max`` for the smallest
    singular values.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    dil = np.zeros((2 * n, 2 * n), dtype=complex)
    dil[:n, n:] = A
    dil[n:, :n] = A.conj().T
    w = hermitian_eigvals(dil, method)
    return np.sort(np.abs(w[n:]))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of ``rho - sigma``."""
    return 0.5 * trace_norm(hermitize(np.asarray(rho) - np.asarray(sigma)))


def min_eigenvalue(A: np.ndarray) -> float:
    return float(hermitian_eigvals(A)[0])
