"""Target harness: instrumented parser, bundled seed, targets and rewards."""

from .miniparser import FAULT_PROBES, Probe, builtin_miniparser
from .rewards import (
    evaluate_reward,
    reward_combined,
    reward_coverage,
    reward_path_length,
    reward_time,
)
from .seeds import sample_document
from .targets import (
    BuiltinTarget,
    CalibrationResult,
    ExternalTarget,
    RiggedTarget,
    Target,
    calibrate_timing,
    make_target,
)

__all__ = [
    "FAULT_PROBES",
    "BuiltinTarget",
    "CalibrationResult",
    "ExternalTarget",
    "Probe",
    "RiggedTarget",
    "Target",
    "builtin_miniparser",
    "calibrate_timing",
    "evaluate_reward",
    "make_target",
    "reward_combined",
    "reward_coverage",
    "reward_path_length",
    "reward_time",
    "sample_document",
]
