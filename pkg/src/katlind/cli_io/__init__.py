"""Command line, run configuration, persistence and the verification driver."""

from .config import RunConfig, build_config, parse_config_file, parse_config_text
from .persist import (
    read_snapshot,
    read_trajectory_csv,
    snapshot_from_json,
    snapshot_to_json,
    write_snapshot,
    write_trajectory_csv,
)
from .verify import Check, VerificationReport, run_verification

__all__ = [
    "RunConfig", "build_config", "parse_config_file", "parse_config_text",
    "read_snapshot", "read_trajectory_csv", "snapshot_from_json", "snapshot_to_json",
    "write_snapshot", "write_trajectory_csv",
    "Check", "VerificationReport", "run_verification",
]
