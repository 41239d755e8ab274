"""``katlind`` command line.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (including
a ``verify-all`` run with a failing check).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DimensionTooLarge, KatlindError, TailTooHeavy
from ..evolve import integrate_backward_euler, integrate_rk, resolvent_solve
from ..fock import FockConfig, TruncationWarning, cat_state, fock_state, projector
from ..invariants import adjoint_residuals, cat_eigen_check, numeric_invariants, predict_limit
from ..lindblad import interior_dim, l_norm, random_density
from ..numerics import trace_distance
from .config import RunConfig, build_config, parse_config_file
from .persist import snapshot_name, write_snapshot, write_trajectory_csv
from .verify import run_verification

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("katlind")


def initial_state(run: RunConfig, cfg: FockConfig) -> np.ndarray:
    kind, _, arg = run.initial.partition(":")
    if kind == "fock":
        return projector(fock_state(cfg, int(arg)))
    if kind == "cat":
        return projector(cat_state(cfg, int(arg) % cfg.k))
    return random_density(cfg.dim, np.random.default_rng(run.seed), support=interior_dim(cfg))


def _outdir(run: RunConfig) -> Path:
    run.output_dir.mkdir(parents=True, exist_ok=True)
    return run.output_dir


def _integrate(run: RunConfig, cfg: FockConfig, rho0: np.ndarray, t_end: float):
    if run.integrator == "rk":
        return integrate_rk(cfg, rho0, t_end, tol=run.tol, snapshot_times=run.snapshot_times)
    return integrate_backward_euler(cfg, rho0, t_end, run.n_steps, method=run.resolvent_method,
                                    snapshot_times=run.snapshot_times)


def cmd_simulate(run: RunConfig) -> int:
    cfg = run.fock_config()
    rho0 = initial_state(run, cfg)
    traj = _integrate(run, cfg, rho0, run.t_end)
    out = _outdir(run)
    write_trajectory_csv(out / "trajectory.csv", traj)
    for t, rho in traj.snapshots.items():
        write_snapshot(out / snapshot_name(t), cfg, rho)
    write_snapshot(out / "final.json", cfg, traj.final)
    print(f"{len(traj)} samples, {traj.steps} steps ({traj.rejected} rejected) -> {out / 'trajectory.csv'}")
    print(f"V: {traj.V[0]:.6g} -> {traj.V[-1]:.6g}   l_norm: {traj.l_norm[0]:.6g} -> {traj.l_norm[-1]:.6g}")
    return EXIT_OK


def cmd_resolvent(run: RunConfig) -> int:
    cfg = run.fock_config()
    f = initial_state(run, cfg)
    rho = resolvent_solve(cfg, f, run.lam, run.resolvent_method)
    out = _outdir(run)
    write_snapshot(out / "resolvent.json", cfg, rho)
    print(f"lambda={run.lam:g} method={run.resolvent_method}")
    print(f"l_norm(f)={l_norm(cfg, f):.12g}  l_norm(rho)={l_norm(cfg, rho):.12g}  "
          f"min_eig(rho)={np.linalg.eigvalsh(rho)[0]:.3e}")
    return EXIT_OK


def cmd_invariants(run: RunConfig) -> int:
    cfg = run.fock_config()
    inv = numeric_invariants(cfg)
    summary = {
        "dim": cfg.dim, "k": cfg.k, "alpha": cfg.alpha,
        "count": inv.size,
        "null_threshold": inv.null_threshold,
        "gap_ratio": inv.gap_ratio,
        "pairing_condition": inv.condition_number,
        "smallest_singular_values": inv.singular_values[: inv.size + 2].tolist(),
        "adjoint_residuals": adjoint_residuals(cfg, inv),
    }
    if cfg.alpha > 0:
        summary["cat_eigenvalues"] = [
            {"ell": e.ell, "invariant": e.invariant, "measured": e.measured, "stated": e.stated,
             "magnitude_ok": e.magnitude_ok, "sign_agrees": e.sign_agrees, "residual": e.residual}
            for e in cat_eigen_check(cfg)
        ]
    out = _outdir(run)
    (out / "invariants.json").write_text(json.dumps(summary, indent=2))
    print(f"{inv.size} conserved observables, gap ratio {inv.gap_ratio:.3e}, "
          f"pairing condition {inv.condition_number:.3g}")
    for e in summary.get("cat_eigenvalues", []):
        flag = "" if e["sign_agrees"] else "  (opposite sign)"
        print(f"  cat ell={e['ell']} {e['invariant']}: {e['measured']:+.12f}{flag}")
    return EXIT_OK


def cmd_predict(run: RunConfig, compare: bool) -> int:
    cfg = run.fock_config()
    rho0 = initial_state(run, cfg)
    rho_bar = predict_limit(cfg, numeric_invariants(cfg), rho0)
    out = _outdir(run)
    write_snapshot(out / "predicted.json", cfg, rho_bar)
    print(f"predicted limit: trace {np.trace(rho_bar).real:.12f}, "
          f"min eigenvalue {np.linalg.eigvalsh(rho_bar)[0]:.3e}")
    if compare:
        traj = _integrate(run, cfg, rho0, run.t_end)
        write_snapshot(out / "final.json", cfg, traj.final)
        print(f"trace distance to state at t={run.t_end:g}: {trace_distance(rho_bar, traj.final):.3e}")
    return EXIT_OK


def cmd_verify_all(args, run_dir: Path) -> int:
    ks = (args.k,) if args.k is not None else (1, 2, 3)
    t0 = time.perf_counter()
    report = run_verification(ks=ks, dim=args.dim, seed=args.seed if args.seed is not None else 20240601)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "report.json").write_text(report.to_json())
    print(report.table())
    print(f"total {time.perf_counter() - t0:.1f} s; report -> {run_dir / 'report.json'}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file; flags override it")
    common.add_argument("--k", type=int, help="photon order")
    common.add_argument("--alpha", type=float, help="drive amplitude")
    common.add_argument("--dim", type=int, help="truncation dimension (default: guard band + 20)")
    common.add_argument("--t-end", type=float, dest="t_end")
    common.add_argument("--tol", type=float, help="RK local error target")
    common.add_argument("--integrator", choices=("rk", "backward_euler"))
    common.add_argument("--n-steps", type=int, dest="n_steps", help="backward Euler steps")
    common.add_argument("--seed", type=int)
    common.add_argument("--initial", help="fock:N, cat:L or random")
    common.add_argument("--snapshots", help="comma-separated snapshot times")
    common.add_argument("--out", type=Path, help="output directory (fallback: $KATLIND_OUT)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="katlind", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate and write trajectory.csv")
    res = sub.add_parser("resolvent", parents=[common], help="apply (I + lam A)^-1 to the initial state")
    res.add_argument("--lam", type=float)
    res.add_argument("--method", choices=("auto", "direct", "series"), dest="resolvent_method")
    sub.add_parser("invariants", parents=[common], help="conserved observables and cat eigenvalues")
    pred = sub.add_parser("predict", parents=[common], help="predicted long-time limit")
    pred.add_argument("--compare", action="store_true", help="also integrate to t_end and compare")
    sub.add_parser("verify-all", parents=[common], help="run the property checks")
    return parser


def _run_config(args) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    snaps = None
    if args.snapshots:
        try:
            snaps = tuple(float(x) for x in args.snapshots.split(",") if x.strip())
        except ValueError as exc:
            raise ConfigError(f"bad --snapshots: {exc}") from exc
    return build_config(
        file_values,
        k=args.k, alpha=args.alpha, dim=args.dim, t_end=args.t_end, tol=args.tol,
        integrator=args.integrator, n_steps=args.n_steps, seed=args.seed, initial=args.initial,
        snapshot_times=snaps, output_dir=args.out,
        lam=getattr(args, "lam", None), resolvent_method=getattr(args, "resolvent_method", None),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("always", TruncationWarning)
    try:
        run = _run_config(args)
        if args.command == "verify-all":
            return cmd_verify_all(args, run.output_dir)
        if args.command == "simulate":
            return cmd_simulate(run)
        if args.command == "resolvent":
            return cmd_resolvent(run)
        if args.command == "invariants":
            return cmd_invariants(run)
        return cmd_predict(run, args.compare)
    except (ConfigError, TailTooHeavy, DimensionTooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KatlindError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
