"""Revealed preference analysis for two-stage (shortlist, then choose) models."""

from .core import (
    Alternative,
    ChoiceDataset,
    Observation,
    StrictRelation,
    ViolationReport,
    density,
    direct_relation,
    find_warp_pairs,
    has_sarp_violation,
    rational_revealed,
    validate_dataset,
    violation_report,
    warp_directly_involved,
    warp_involved,
)
from .errors import RevprefError
from .models import (
    AMENDED_MODELS,
    BASE_MODELS,
    REPORT_MODELS,
    ModelSpec,
    RevealedResult,
    evaluate,
    is_rationalizable,
    lower_contour,
    revealed,
)

__version__ = "0.1.0"

__all__ = [
    "AMENDED_MODELS",
    "Alternative",
    "BASE_MODELS",
    "ChoiceDataset",
    "ModelSpec",
    "Observation",
    "REPORT_MODELS",
    "RevealedResult",
    "RevprefError",
    "StrictRelation",
    "ViolationReport",
    "density",
    "direct_relation",
    "evaluate",
    "find_warp_pairs",
    "has_sarp_violation",
    "is_rationalizable",
    "lower_contour",
    "rational_revealed",
    "revealed",
    "validate_dataset",
    "violation_report",
    "warp_directly_involved",
    "warp_involved",
]
