"""Dissipative k-photon oscillator: truncated Lindblad dynamics, resolvent
stepping, conserved observables and limit-state prediction."""

from .errors import (
    ConfigError,
    DimensionTooLarge,
    IllConditionedPairing,
    InvalidState,
    KatlindError,
    NoConvergence,
    NotHermitian,
    NotPositiveDefinite,
    NotPSD,
    PositivityLost,
    RankMismatch,
    StepUnderflow,
    TailTooHeavy,
)
from .evolve import (
    ResolventProblem,
    Trajectory,
    integrate_backward_euler,
    integrate_rk,
    resolvent_solve,
    rk_step,
    sylvester_resolvent,
)
from .fock import FockConfig, cat_state, coherent_state, default_dim, fock_state, kernel_basis, projector
from .invariants import InvariantSet, cat_eigen_check, explicit_invariants, numeric_invariants, predict_limit
from .lindblad import apply_A, apply_generator, l_norm, lyapunov_V

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DimensionTooLarge", "IllConditionedPairing", "InvalidState", "KatlindError",
    "NoConvergence", "NotHermitian", "NotPositiveDefinite", "NotPSD", "PositivityLost",
    "RankMismatch", "StepUnderflow", "TailTooHeavy",
    "ResolventProblem", "Trajectory", "integrate_backward_euler", "integrate_rk",
    "resolvent_solve", "rk_step", "sylvester_resolvent",
    "FockConfig", "cat_state", "coherent_state", "default_dim", "fock_state", "kernel_basis", "projector",
    "InvariantSet", "cat_eigen_check", "explicit_invariants", "numeric_invariants", "predict_limit",
    "apply_A", "apply_generator", "l_norm", "lyapunov_V",
]
