"""Greedy diversification of a candidate list using a cutoff table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoff import CutoffTable
from .index import NeighborIndex
from .ordered_set import OrderedSet


@dataclass(frozen=True)
class FilterParams:
    """s_candidates: how many neighbors to fetch; k_results: how many to keep."""

    s_candidates: int
    k_results: int
    safeguard: bool = False

    def __post_init__(self):
        if self.k_results < 1:
            raise ValueError("k_results must be >= 1")
        if self.s_candidates < self.k_results:
            raise ValueError("s_candidates must be >= k_results")


@dataclass(frozen=True)
class DiverseResult:
    ids: list[int]
    truncated: bool


def filter_candidates(
    candidates, table: CutoffTable, k: int, safeguard: bool = False
) -> DiverseResult:
    """Greedily keep heads from the candidate order, dropping their table neighbors.

    Candidates must be distinct ids valid for the table, ordered by priority
    (typically ascending distance to the query). The first candidate is always
    kept. Without the safeguard the result can be shorter than k; with it,
    a deletion that would leave fewer than k reachable results is skipped
    along with all later deletions, and the result is refilled in candidate
    order and flagged truncated.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = table.n_vectors
    if isinstance(candidates, np.ndarray):
        if candidates.ndim != 1 or candidates.dtype.kind not in "iu":
            raise ValueError("candidate array must be one-dimensional integers")
        if candidates.size and (candidates.min() < 0 or candidates.max() >= n):
            raise ValueError(f"candidate ids outside table of size {n}")
        cand = candidates.tolist()
    else:
        cand = [int(c) for c in candidates]
        for c in cand:
            if c < 0 or c >= n:
                raise ValueError(f"candidate id {c} outside table of size {n}")
    pool = OrderedSet(cand)
    selected: list[int] = []
    truncated = False
    while len(selected) < k and len(pool):
        head = pool.pop()
        selected.append(head)
        if len(selected) == k:
            break
        neighbors = table.neighbor_list(head)
        if safeguard:
            hits = pool.count_present(neighbors)
            if len(selected) + len(pool) - hits < k:
                fill = pool.drain_in_order()
                selected.extend(fill[: k - len(selected)])
                truncated = True
                break
        pool.remove_all(neighbors)
    if len(selected) < k:
        truncated = True
    return DiverseResult(ids=selected, truncated=truncated)


def search_and_filter(
    query: np.ndarray, index: NeighborIndex, table: CutoffTable, params: FilterParams
) -> DiverseResult:
    """Fetch s candidates by ascending distance, then diversify down to k."""
    if table.n_vectors != index.size():
        raise ValueError("table and index disagree on size")
    ids, _ = index.knn(query, params.s_candidates)
    return filter_candidates(ids, table, params.k_results, params.safeguard)
