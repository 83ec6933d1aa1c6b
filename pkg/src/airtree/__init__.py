"""airtree: evaluation toolkit for tree-structured volumetric segmentations."""

__version__ = "0.1.0"

from .errors import (
    AirtreeError,
    EvaluationError,
    MaskFormatError,
    PhantomError,
    ShapeMismatchError,
)
from .volume import (
    ConfusionCounts,
    Spacing,
    VoxelMask,
    confusion,
    load_mask,
    save_mask,
    shape_check,
)
from .topology import (
    Branch,
    ComponentLabeling,
    SkeletonGraph,
    label_components,
    largest_component,
    parse_branches,
    skeletonize,
    tree_length,
)
from .metrics import (
    CaseMetrics,
    TreeCoverage,
    dsc,
    evaluate_case,
    precision,
    sensitivity,
    specificity,
    tree_coverage,
)
from .ranking import (
    Leaderboard,
    MEAN_SCORE,
    ScoreWeights,
    TOPOLOGY_WEIGHTED,
    TeamAggregate,
    aggregate,
    kendall_tau,
    rank,
    score,
)
from .phantom import PhantomSpec, PhantomTruth, degrade, generate

__all__ = [
    "AirtreeError", "EvaluationError", "MaskFormatError", "PhantomError",
    "ShapeMismatchError", "ConfusionCounts", "Spacing", "VoxelMask",
    "confusion", "load_mask", "save_mask", "shape_check", "Branch",
    "ComponentLabeling", "SkeletonGraph", "label_components",
    "largest_component", "parse_branches", "skeletonize", "tree_length",
    "CaseMetrics", "TreeCoverage", "dsc", "evaluate_case", "precision",
    "sensitivity", "specificity", "tree_coverage", "Leaderboard",
    "MEAN_SCORE", "ScoreWeights", "TOPOLOGY_WEIGHTED", "TeamAggregate",
    "aggregate", "kendall_tau", "rank", "score", "PhantomSpec",
    "PhantomTruth", "degrade", "generate", "__version__",
]
