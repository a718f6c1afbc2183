"""Threshold calibration: pick the cutoff that minimizes the expected objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoff import build_cutoff_table
from .dataset import QuerySet, VectorDataset, pairwise_sqdist
from .filter import FilterParams, filter_candidates, search_and_filter
from .index import NeighborIndex
from .objective import cost_f


@dataclass(frozen=True)
class TrainConfig:
    """Search window [0, eps_max], objective weight lam, filter shape (s, k).

    One refinement round per entry of width_schedule; each round evaluates
    width+1 evenly spaced thresholds, then halves the bracket around the
    best threshold seen so far.
    """

    eps_max: float
    lam: float
    s_candidates: int
    k_results: int
    rounds: int = 5
    width_schedule: tuple[int, ...] = (10, 10, 10, 10, 100)

    def __post_init__(self):
        if not self.eps_max > 0:
            raise ValueError("eps_max must be > 0")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.k_results < 1:
            raise ValueError("k_results must be >= 1")
        if self.s_candidates < self.k_results:
            raise ValueError("s_candidates must be >= k_results")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if len(self.width_schedule) != self.rounds:
            raise ValueError("width_schedule length must equal rounds")
        if any(w < 1 for w in self.width_schedule):
            raise ValueError("width_schedule entries must be >= 1")


@dataclass(frozen=True)
class RoundTrace:
    round_index: int
    grid: list[float]
    values: list[float]
    skipped: list[int]


@dataclass(frozen=True)
class TrainResult:
    eps_star: float
    f_star: float
    trace: list[RoundTrace] = field(repr=False)


def estimate_eps_max(dataset: VectorDataset, n_samples: int, seed: int) -> float:
    """Maximum squared distance over n_samples random vector pairs (self-pairs dropped)."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    n = dataset.n_vectors
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=n_samples)
    j = rng.integers(0, n, size=n_samples)
    mask = i != j
    if not mask.any():
        return 0.0
    a = dataset.data[i[mask]].astype(np.float64)
    b = dataset.data[j[mask]].astype(np.float64)
    d2 = ((a - b) ** 2).sum(axis=1)
    return float(d2.max())


def expected_f(
    eps: float,
    train_queries: QuerySet,
    index: NeighborIndex,
    dataset: VectorDataset,
    cfg: TrainConfig,
) -> float:
    """Mean objective over the training queries at threshold eps.

    Builds the full cutoff table at eps, runs the safeguarded filter per
    query, and averages the objective. Queries yielding fewer than two
    results are skipped. Empty average is +inf.
    """
    mean, _, _ = _expected_f_detail(eps, train_queries, index, dataset, cfg)
    return mean


def _expected_f_detail(
    eps: float,
    train_queries: QuerySet,
    index: NeighborIndex,
    dataset: VectorDataset,
    cfg: TrainConfig,
) -> tuple[float, int, int]:
    table = build_cutoff_table(index, dataset, eps)
    params = FilterParams(cfg.s_candidates, cfg.k_results, safeguard=True)
    total = 0.0
    used = 0
    skipped = 0
    for qi in range(train_queries.n_queries):
        q = train_queries.row(qi)
        res = search_and_filter(q, index, table, params)
        if len(res.ids) < 2:
            skipped += 1
            continue
        total += cost_f(q, res.ids, dataset, cfg.lam).total
        used += 1
    return (total / used if used else math.inf), used, skipped


class _PrefixView:
    """Cutoff-table stand-in over candidate positions.

    Row r of `order` holds the other candidate positions sorted by squared
    distance to candidate r; `d2s` holds those distances. The neighbor list
    at threshold eps is the strict-< prefix.
    """

    __slots__ = ("n_vectors", "_order", "_d2s", "_eps")

    def __init__(self, order: np.ndarray, d2s: np.ndarray, eps: float):
        self.n_vectors = order.shape[0]
        self._order = order
        self._d2s = d2s
        self._eps = eps

    def neighbor_list(self, pos: int) -> list[int]:
        cnt = int(np.searchsorted(self._d2s[pos], self._eps, side="left"))
        return self._order[pos, :cnt].tolist()


@dataclass(eq=False)
class _QueryEntry:
    ids: np.ndarray
    qd2: np.ndarray
    mat: np.ndarray   # candidate pairwise d2, diagonal forced to +inf
    order: np.ndarray
    d2s: np.ndarray


class _CandidateCache:
    """Per-query candidates and their pairwise distances, reused across thresholds.

    Candidate sets from knn do not depend on eps, so each threshold
    evaluation only re-runs the greedy filter against precomputed,
    per-row-sorted distances instead of rebuilding a full table.
    """

    def __init__(
        self,
        queries: QuerySet,
        index: NeighborIndex,
        dataset: VectorDataset,
        s_candidates: int,
    ):
        self.entries: list[_QueryEntry] = []
        for qi in range(queries.n_queries):
            q = queries.row(qi)
            ids, qd2 = index.knn(q, s_candidates)
            vecs = dataset.data[ids]
            mat = pairwise_sqdist(vecs, vecs)
            np.fill_diagonal(mat, np.inf)
            order = np.argsort(mat, axis=1, kind="stable").astype(np.int32)
            d2s = np.take_along_axis(mat, order.astype(np.int64), axis=1)
            self.entries.append(_QueryEntry(ids=ids, qd2=qd2, mat=mat, order=order, d2s=d2s))

    def evaluate(self, eps: float, lam: float, k: int) -> tuple[float, int, int]:
        """Mean objective, used count, skipped count; mirrors expected_f."""
        total = 0.0
        used = 0
        skipped = 0
        for e in self.entries:
            m = e.order.shape[0]
            view = _PrefixView(e.order, e.d2s, eps)
            res = filter_candidates(range(m), view, k, safeguard=True)
            if len(res.ids) < 2:
                skipped += 1
                continue
            sel = np.asarray(res.ids, dtype=np.int64)
            kk = sel.shape[0]
            search = (1.0 - lam) / kk * float(e.qd2[sel].sum())
            mn = float(e.mat[np.ix_(sel, sel)].min())
            total += search - lam * mn
            used += 1
        return (total / used if used else math.inf), used, skipped

    def selected_ids(self, eps: float, k: int, qi: int) -> list[int]:
        """Database ids the cached filter picks for query qi (test hook)."""
        e = self.entries[qi]
        m = e.order.shape[0]
        res = filter_candidates(range(m), _PrefixView(e.order, e.d2s, eps), k, safeguard=True)
        return [int(e.ids[p]) for p in res.ids]


def train_epsilon(
    train_queries: QuerySet,
    index: NeighborIndex,
    dataset: VectorDataset,
    cfg: TrainConfig,
) -> TrainResult:
    """Bracketing grid search for the threshold minimizing the expected objective.

    Round r evaluates width_schedule[r]+1 evenly spaced thresholds across the
    current bracket, keeps the best threshold seen so far (ties go to the
    smaller one), then halves the bracket radius around it. Threshold
    evaluations are memoized, so repeated grid points are free.
    """
    cache = _CandidateCache(train_queries, index, dataset, cfg.s_candidates)
    memo: dict[float, tuple[float, int, int]] = {}

    def ev(eps: float) -> tuple[float, int, int]:
        got = memo.get(eps)
        if got is None:
            got = memo[eps] = cache.evaluate(eps, cfg.lam, cfg.k_results)
        return got

    eps_left, eps_right = 0.0, cfg.eps_max
    radius = cfg.eps_max
    best_eps = math.inf
    best_f = math.inf
    trace: list[RoundTrace] = []
    for rnd, width in enumerate(cfg.width_schedule):
        grid = np.linspace(eps_left, eps_right, width + 1).tolist()
        values: list[float] = []
        skips: list[int] = []
        for e in grid:
            f, _, sk = ev(e)
            values.append(f)
            skips.append(sk)
            if f < best_f or (f == best_f and e < best_eps):
                best_f = f
                best_eps = e
        trace.append(RoundTrace(round_index=rnd, grid=grid, values=values, skipped=skips))
        radius /= 2.0
        eps_left = max(best_eps - radius, 0.0)
        eps_right = min(best_eps + radius, cfg.eps_max)
    return TrainResult(eps_star=float(best_eps), f_star=float(best_f), trace=trace)
