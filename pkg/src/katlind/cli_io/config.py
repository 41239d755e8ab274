"""Run configuration: flat ``key = value`` files overridden by CLI flags."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..fock import FockConfig, default_dim

INTEGRATORS = ("rk", "backward_euler")
OUT_ENV = "KATLIND_OUT"


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def parse_config_file(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs. ``dim=None`` means the guard-band default.

    ``initial`` is ``fock:N``, ``cat:L`` or ``random`` (seeded, interior
    supported).
    """

    k: int = 2
    alpha: float = 1.5
    dim: int | None = None
    t_end: float = 8.0
    tol: float = 1e-10
    snapshot_times: tuple[float, ...] = ()
    integrator: str = "rk"
    n_steps: int = 200
    seed: int = 0
    initial: str = "fock:0"
    lam: float = 0.1
    resolvent_method: str = "auto"
    output_dir: Path = field(default_factory=lambda: Path(os.environ.get(OUT_ENV, "katlind_out")))

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ConfigError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        if self.dim is not None and (not isinstance(self.dim, int) or self.dim <= 2 * self.k):
            raise ConfigError(f"dim must be an integer > 2k = {2 * self.k}, got {self.dim!r}")
        if not math.isfinite(self.t_end) or self.t_end < 0:
            raise ConfigError(f"t_end must be finite and >= 0, got {self.t_end!r}")
        if not 1e-12 <= self.tol <= 1e-4:
            raise ConfigError(f"tol must lie in [1e-12, 1e-4], got {self.tol!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ConfigError(f"lam must be finite and > 0, got {self.lam!r}")
        if self.resolvent_method not in ("auto", "direct", "series"):
            raise ConfigError(f"unknown resolvent method {self.resolvent_method!r}")
        for t in self.snapshot_times:
            if not 0 <= t <= self.t_end:
                raise ConfigError(f"snapshot time {t} outside [0, t_end={self.t_end}]")
        kind, _, arg = self.initial.partition(":")
        if kind not in ("fock", "cat", "random"):
            raise ConfigError(f"initial state must be fock:N, cat:L or random, got {self.initial!r}")
        if kind in ("fock", "cat"):
            try:
                level = int(arg)
            except ValueError:
                raise ConfigError(f"initial state {self.initial!r} needs an integer argument") from None
            if level < 0 or (kind == "fock" and level >= self.resolved_dim):
                raise ConfigError(f"initial level {level} outside 0..{self.resolved_dim - 1}")
            if kind == "cat" and self.alpha <= 0:
                raise ConfigError("cat initial states need alpha > 0")

    @property
    def resolved_dim(self) -> int:
        return default_dim(self.k, self.alpha) if self.dim is None else self.dim

    def fock_config(self) -> FockConfig:
        return FockConfig(self.resolved_dim, self.k, self.alpha)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


_CASTS = {
    "k": int, "dim": int, "n_steps": int, "seed": int,
    "alpha": float, "t_end": float, "tol": float, "lam": float,
    "integrator": str, "initial": str, "resolvent_method": str,
    "output_dir": Path,
    "snapshot_times": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
}


def coerce(values: dict[str, str]) -> dict:
    """Convert raw strings to typed RunConfig fields; unknown keys are an error."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, raw in values.items():
        key = {"out": "output_dir", "method": "resolvent_method"}.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = None if key == "dim" and raw.lower() in ("", "auto") else _CASTS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return out


def build_config(file_values: dict[str, str] | None = None, **overrides) -> RunConfig:
    """File values first, then non-None overrides (CLI flags)."""
    merged = coerce(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
