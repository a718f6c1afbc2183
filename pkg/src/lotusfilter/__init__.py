"""Diverse nearest-neighbor search via cutoff-table post-filtering."""

from .cutoff import CutoffTable, build_cutoff_table, deserialize, serialize
from .dataset import (
    FormatError,
    QuerySet,
    VectorDataset,
    generate_synthetic,
    generate_synthetic_queries,
    load_binary,
    load_queries,
    pairwise_sqdist,
    save_binary,
    squared_distance,
)
from .filter import DiverseResult, FilterParams, filter_candidates, search_and_filter
from .index import ExactIndex, NeighborIndex, build_index
from .objective import (
    CostBreakdown,
    brute_force_optimal,
    clustering_baseline,
    cost_f,
    gmm_baseline,
)
from .ordered_set import OrderedSet
from .report import PACKAGE_VERSION as __version__
from .trainer import (
    RoundTrace,
    TrainConfig,
    TrainResult,
    estimate_eps_max,
    expected_f,
    train_epsilon,
)

__all__ = [
    "CostBreakdown",
    "CutoffTable",
    "DiverseResult",
    "ExactIndex",
    "FilterParams",
    "FormatError",
    "NeighborIndex",
    "OrderedSet",
    "QuerySet",
    "RoundTrace",
    "TrainConfig",
    "TrainResult",
    "VectorDataset",
    "__version__",
    "brute_force_optimal",
    "build_cutoff_table",
    "build_index",
    "clustering_baseline",
    "cost_f",
    "deserialize",
    "estimate_eps_max",
    "expected_f",
    "filter_candidates",
    "generate_synthetic",
    "generate_synthetic_queries",
    "gmm_baseline",
    "load_binary",
    "load_queries",
    "pairwise_sqdist",
    "save_binary",
    "search_and_filter",
    "serialize",
    "squared_distance",
    "train_epsilon",
]
