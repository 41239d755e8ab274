"""Time integration of d rho/dt = generator(rho).

Two integrators share the :class:`Trajectory` output: an explicit RK4 with
step-doubling error control, and backward Euler built on the resolvent
``(I + lam A)^{-1}``. The resolvent has two routes: a direct solve of the
vectorized linear system, and the fixed-point construction

    xi = f + r B(xi),   B(xi) = lam L Pi(xi) L^dagger,   rho_r = Pi(xi_r),

where ``Pi`` inverts the Sylvester map ``X -> A X + X A`` with
``A = (I + lam L^dagger L) / 2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import NoConvergence, PositivityLost, StepUnderflow
from .fock import FockConfig, operators
from .invariants import explicit_invariants
from .lindblad import _generator, validate_density, vec, unvec, vectorize_generator
from .numerics import SylvesterSolver, check_hermitian, hermitize

log = logging.getLogger(__name__)

R_SCHEDULE = (0.0, 0.5, 0.9, 0.99, 0.999, 1.0)
DIRECT_MAX_DIM = 60
POSITIVITY_FLOOR = -1e-6
DT_FLOOR = 1e-10
STABILITY_FACTOR = 2.0


@dataclass
class Trajectory:
    """Sampled solution with per-sample diagnostics.

    ``invariants[i, j]`` is the expectation of observable ``invariant_labels[j]``
    at ``times[i]``. ``snapshots`` maps requested times to states.
    """

    times: np.ndarray
    trace: np.ndarray
    min_eig: np.ndarray
    V: np.ndarray
    l_norm: np.ndarray
    a_norm: np.ndarray
    invariants: np.ndarray
    invariant_labels: tuple[str, ...]
    final: np.ndarray
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    steps: int = 0
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def columns(self) -> dict[str, np.ndarray]:
        cols = {
            "t": self.times,
            "trace": self.trace,
            "min_eig": self.min_eig,
            "V": self.V,
            "l_norm": self.l_norm,
            "a_norm": self.a_norm,
        }
        for j in range(self.invariants.shape[1]):
            cols[f"inv_{j}"] = self.invariants[:, j]
        return cols


class _Recorder:
    def __init__(self, cfg: FockConfig, observables: dict[str, np.ndarray] | None):
        self.ops = operators(cfg)
        obs = explicit_invariants(cfg) if observables is None else observables
        self.labels = tuple(obs)
        self.obs = [np.asarray(q) for q in obs.values()]
        self.rows: list[tuple] = []
        self.snapshots: dict[float, np.ndarray] = {}

    def record(self, t: float, rho: np.ndarray) -> float:
        ops = self.ops
        S = ops.S
        w = np.linalg.eigvalsh(rho)
        lrho = float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(S @ rho @ S)))))
        A_rho = -hermitize(_generator(ops.L, ops.Ld, ops.LdL, rho))
        anorm = float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(S @ A_rho @ S)))))
        V = float(np.real(np.trace(ops.L @ rho @ ops.Ld)))
        # tr(Q rho) without forming the product
        inv = tuple(float(np.real(np.sum(q * rho.T))) for q in self.obs)
        self.rows.append((t, float(np.trace(rho).real), float(w[0]), V, lrho, anorm) + inv)
        return float(w[0])

    def build(self, final: np.ndarray, steps: int, rejected: int) -> Trajectory:
        data = np.array(self.rows, dtype=float).reshape(len(self.rows), 6 + len(self.obs))
        return Trajectory(
            times=data[:, 0], trace=data[:, 1], min_eig=data[:, 2], V=data[:, 3],
            l_norm=data[:, 4], a_norm=data[:, 5], invariants=data[:, 6:],
            invariant_labels=self.labels, final=final, snapshots=self.snapshots,
            steps=steps, rejected=rejected,
        )


def _rk4(ops, rho: np.ndarray, dt: float) -> np.ndarray:
    L, Ld, LdL = ops.L, ops.Ld, ops.LdL
    k1 = _generator(L, Ld, LdL, rho)
    k2 = _generator(L, Ld, LdL, rho + 0.5 * dt * k1)
    k3 = _generator(L, Ld, LdL, rho + 0.5 * dt * k2)
    k4 = _generator(L, Ld, LdL, rho + dt * k3)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.conj().T)


def rk_step(cfg: FockConfig, rho: np.ndarray, dt: float) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step, re-Hermitized."""
    return _rk4(operators(cfg), check_hermitian(rho), dt)


def initial_dt(cfg: FockConfig) -> float:
    """0.1 over the largest eigenvalue of L^dagger L."""
    top = float(np.linalg.eigvalsh(operators(cfg).LdL)[-1])
    return 0.1 / max(top, 1.0)


def stability_dt(cfg: FockConfig) -> float:
    """Largest step that keeps the stiffest mode strongly damped.

    The generator's spectral radius is close to the top eigenvalue of
    L^dagger L, and the RK4 amplification factor on the negative real axis
    stays below 0.34 out to twice that.
    """
    top = float(np.linalg.eigvalsh(operators(cfg).LdL)[-1])
    return STABILITY_FACTOR / max(top, 1.0)


def _stops(t_end: float, t_eval, snapshot_times) -> np.ndarray:
    pts = {0.0, float(t_end)}
    for seq in (t_eval, snapshot_times):
        if seq is not None:
            pts.update(float(t) for t in seq)
    arr = np.array(sorted(pts))
    if arr[0] < 0 or arr[-1] > t_end:
        raise ValueError("requested times must lie in [0, t_end]")
    return arr


def integrate_rk(cfg: FockConfig, rho0: np.ndarray, t_end: float, tol: float = 1e-10,
                 t_eval=None, snapshot_times=(), observables: dict[str, np.ndarray] | None = None,
                 dt0: float | None = None, dt_max: float | None = None) -> Trajectory:
    """Adaptive RK4 integration from ``rho0`` to ``t_end``.

    The step is controlled by step doubling: a step of size h is compared
    with two steps of size h/2 and accepted when the Richardson error
    estimate ``||y_half - y_full||_F / 15`` is at most ``tol``. The two
    half-steps are kept.

    Diagnostics are recorded at every accepted step when ``t_eval`` is None,
    otherwise exactly at the ``t_eval`` times (the integrator shortens steps
    to land on them). Raises :class:`StepUnderflow` when the controller asks
    for a step below 1e-10 and :class:`PositivityLost` when a recorded state
    has an eigenvalue below -1e-6.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol {tol} outside [1e-12, 1e-4]")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    rho = validate_density(rho0)
    ops = operators(cfg)
    rec = _Recorder(cfg, observables)
    stops = _stops(t_end, t_eval, snapshot_times)
    record_all = t_eval is None
    record_at = set() if record_all else {float(t) for t in t_eval} | {0.0, float(t_end)}
    snap_at = {float(t) for t in snapshot_times}

    def visit(t):
        lo = rec.record(t, rho)
        if lo < POSITIVITY_FLOOR:
            raise PositivityLost(f"minimum eigenvalue {lo:.3e} at t={t:.6g}")

    t = 0.0
    visit(t)
    if 0.0 in snap_at:
        rec.snapshots[0.0] = rho.copy()
    dt = initial_dt(cfg) if dt0 is None else dt0
    dt_cap = stability_dt(cfg) if dt_max is None else dt_max
    steps = rejected = 0
    for stop in stops[1:]:
        while t < stop:
            remaining = stop - t
            h = min(dt, dt_cap, remaining)
            full = _rk4(ops, rho, h)
            half = _rk4(ops, _rk4(ops, rho, 0.5 * h), 0.5 * h)
            err = np.linalg.norm(half - full) / 15.0
            if err <= tol:
                rho = half
                landed = h == remaining
                t = stop if landed else t + h
                steps += 1
                # a step shortened to hit a stop says nothing about the next one
                if not (landed and h < dt):
                    dt = h * (min(2.0, 0.9 * (tol / err) ** 0.2) if err > 0 else 2.0)
                if record_all and t < stop:
                    visit(t)
            else:
                rejected += 1
                dt = h * max(0.2, 0.9 * (tol / err) ** 0.2)
                if dt < DT_FLOOR:
                    raise StepUnderflow(f"step size {dt:.3e} below {DT_FLOOR:.0e} at t={t:.6g}")
        if record_all or stop in record_at:
            visit(stop)
        if stop in snap_at:
            rec.snapshots[float(stop)] = rho.copy()
    return rec.build(rho, steps, rejected)


@dataclass(frozen=True)
class ResolventProblem:
    """Right-hand side ``f``, step ``lam > 0`` and relaxation ``r`` in [0, 1]."""

    f: np.ndarray
    lam: float
    r: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")


class ResolventKernel:
    """Sylvester inverse ``Pi`` and the map ``B`` for a fixed ``lam``."""

    def __init__(self, cfg: FockConfig, lam: float):
        ops = operators(cfg)
        self.ops = ops
        self.lam = lam
        A = 0.5 * (np.eye(cfg.dim) + lam * ops.LdL)
        self.pi = SylvesterSolver(A)

    def B(self, xi: np.ndarray) -> np.ndarray:
        return self.lam * (self.ops.L @ self.pi(xi) @ self.ops.Ld)

    def fixed_point(self, f: np.ndarray, r: float, xi0: np.ndarray | None = None,
                    rtol: float = 1e-14, max_iter: int = 100_000) -> tuple[np.ndarray, int]:
        """Iterate ``xi <- f + r B(xi)`` to a fixed point."""
        xi = f.copy() if xi0 is None else xi0.copy()
        scale = max(np.linalg.norm(f), 1e-300)
        prev = np.inf
        for it in range(1, max_iter + 1):
            new = f + r * self.B(xi)
            new = 0.5 * (new + new.conj().T)
            change = np.linalg.norm(new - xi)
            xi = new
            if change <= rtol * scale:
                return xi, it
            # round-off floor: the change stopped shrinking at a tiny level
            if change <= 1e-12 * scale and change >= prev:
                return xi, it
            prev = change
        raise NoConvergence(f"fixed point not reached in {max_iter} iterations (r={r})")


def sylvester_resolvent(cfg: FockConfig, prob: ResolventProblem, xi0: np.ndarray | None = None,
                        max_iter: int = 100_000) -> np.ndarray:
    """Solve ``A rho + rho A = f + r lam L rho L^dagger`` by the fixed point
    ``xi = f + r B(xi)``, ``rho = Pi(xi)``."""
    f = check_hermitian(prob.f)
    kern = ResolventKernel(cfg, prob.lam)
    xi, _ = kern.fixed_point(f, prob.r, xi0, max_iter=max_iter)
    return hermitize(kern.pi(xi))


def resolvent_series(cfg: FockConfig, f: np.ndarray, lam: float,
                     schedule=R_SCHEDULE, max_iter: int = 100_000) -> np.ndarray:
    """Resolvent by continuation in r along ``schedule``, warm-starting each
    fixed point from the previous one. The final stage runs at r = 1, where
    the map is still a strict contraction in finite dimension."""
    f = check_hermitian(f)
    kern = ResolventKernel(cfg, lam)
    xi = f.copy()
    for r in schedule:
        xi, its = kern.fixed_point(f, r, xi, max_iter=max_iter)
        log.debug("r=%g converged in %d iterations", r, its)
    return hermitize(kern.pi(xi))


def eq7_matrix(cfg: FockConfig, lam: float, r: float) -> np.ndarray:
    """Vectorized left-hand side of ``A rho + rho A - r lam L rho L^dagger``."""
    ops = operators(cfg)
    eye = np.eye(cfg.dim)
    A = 0.5 * (eye + lam * ops.LdL)
    return np.kron(eye, A) + np.kron(A.T, eye) - r * lam * np.kron(ops.L.conj(), ops.L)


def resolvent_direct_r(cfg: FockConfig, prob: ResolventProblem) -> np.ndarray:
    """Direct dim^2 linear solve of the relaxed resolvent equation."""
    f = check_hermitian(prob.f)
    sol = np.linalg.solve(eq7_matrix(cfg, prob.lam, prob.r), vec(f))
    return hermitize(unvec(sol, cfg.dim))


@lru_cache(maxsize=8)
def _direct_lu(cfg: FockConfig, lam: float):
    n = cfg.dim ** 2
    return scipy.linalg.lu_factor(np.eye(n) - lam * vectorize_generator(cfg))


def resolvent_solve(cfg: FockConfig, f: np.ndarray, lam: float, method: str = "auto") -> np.ndarray:
    """Solve ``rho + lam A(rho) = f``.

    ``method`` is ``"direct"`` (LU of the vectorized system, cached per
    ``(cfg, lam)``), ``"series"`` (r-continuation of the fixed point) or
    ``"auto"`` (direct up to dim 60).
    """
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    f = check_hermitian(f)
    if method == "auto":
        method = "direct" if cfg.dim <= DIRECT_MAX_DIM else "series"
    if method == "direct":
        sol = scipy.linalg.lu_solve(_direct_lu(cfg, float(lam)), vec(f))
        return hermitize(unvec(sol, cfg.dim))
    if method == "series":
        return resolvent_series(cfg, f, lam)
    raise ValueError(f"unknown resolvent method {method!r}")


def integrate_backward_euler(cfg: FockConfig, rho0: np.ndarray, t_end: float, n_steps: int,
                             method: str = "auto", snapshot_times=(),
                             observables: dict[str, np.ndarray] | None = None) -> Trajectory:
    """Implicit Euler: ``n_steps`` resolvent applications with ``lam = t_end / n_steps``.

    The trace is renormalized to one after each step. Snapshots are taken at
    the grid point nearest each requested time.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    rho = validate_density(rho0)
    rec = _Recorder(cfg, observables)
    grid = np.linspace(0.0, t_end, n_steps + 1)
    snap_idx = {int(np.argmin(np.abs(grid - ts))): float(ts) for ts in snapshot_times}
    lam = t_end / n_steps

    def visit(i):
        lo = rec.record(float(grid[i]), rho)
        if lo < POSITIVITY_FLOOR:
            raise PositivityLost(f"minimum eigenvalue {lo:.3e} at t={grid[i]:.6g}")
        if i in snap_idx:
            rec.snapshots[snap_idx[i]] = rho.copy()

    visit(0)
    if lam > 0:
        for i in range(1, n_steps + 1):
            rho = resolvent_solve(cfg, rho, lam, method)
            rho = rho / np.trace(rho).real
            visit(i)
    return rec.build(rho, n_steps if lam > 0 else 0, 0)

