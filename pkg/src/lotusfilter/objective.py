"""Search-diversity objective and reference selection baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dataset import VectorDataset, pairwise_sqdist

# enumeration guard for the exact minimizer
MAX_BRUTE_SUBSETS = 1_000_000


@dataclass(frozen=True)
class CostBreakdown:
    """search_term + diversity_term = total; lower is better."""

    search_term: float
    diversity_term: float
    total: float


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return lam


def _check_ids(ids, n: int, what: str) -> list[int]:
    out = [int(i) for i in ids]
    if len(set(out)) != len(out):
        raise ValueError(f"{what} must be distinct")
    for i in out:
        if i < 0 or i >= n:
            raise ValueError(f"{what} id {i} outside dataset of size {n}")
    return out


def cost_f(query, selection, dataset: VectorDataset, lam: float) -> CostBreakdown:
    """Average query distance weighted by (1-lambda) minus lambda times the
    minimum pairwise squared distance within the selection.

    Needs at least two ids, otherwise the pairwise term is undefined.
    """
    lam = _check_lambda(lam)
    ids = _check_ids(selection, dataset.n_vectors, "selection")
    k = len(ids)
    if k < 2:
        raise ValueError("selection must contain at least two ids")
    vecs = dataset.data[ids]
    q = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if q.shape[1] != dataset.dim:
        raise ValueError(f"query dim {q.shape[1]} != dataset dim {dataset.dim}")
    qd2 = pairwise_sqdist(q, vecs)[0]
    search = (1.0 - lam) / k * float(qd2.sum())
    pair = pairwise_sqdist(vecs, vecs)
    iu = np.triu_indices(k, 1)
    diversity = -lam * float(pair[iu].min())
    return CostBreakdown(search_term=search, diversity_term=diversity, total=search + diversity)


def brute_force_optimal(
    query, candidates, k: int, dataset: VectorDataset, lam: float
) -> tuple[set[int], float]:
    """Exact minimizer of the objective over all k-subsets of the candidates.

    Ties go to the lexicographically smallest id set. Guarded: refuses more
    than MAX_BRUTE_SUBSETS subsets.
    """
    lam = _check_lambda(lam)
    cand = sorted(_check_ids(candidates, dataset.n_vectors, "candidates"))
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > len(cand):
        raise ValueError(f"k={k} exceeds candidate count {len(cand)}")
    n_subsets = math.comb(len(cand), k)
    if n_subsets > MAX_BRUTE_SUBSETS:
        raise ValueError(
            f"{n_subsets} subsets exceeds the enumeration guard of {MAX_BRUTE_SUBSETS}"
        )
    q = np.asarray(query, dtype=np.float64).reshape(1, -1)
    vecs = dataset.data[cand]
    qd2 = pairwise_sqdist(q, vecs)[0].tolist()
    pair = pairwise_sqdist(vecs, vecs)
    w_search = (1.0 - lam) / k
    best_f = math.inf
    best: tuple[int, ...] = ()
    # cand is sorted, so combinations arrive in lexicographic id order and
    # strict < keeps the smallest tied subset
    for subset in combinations(range(len(cand)), k):
        f = w_search * sum(qd2[p] for p in subset)
        mn = math.inf
        for a_i, a in enumerate(subset):
            row = pair[a]
            for b in subset[a_i + 1 :]:
                v = row[b]
                if v < mn:
                    mn = v
        f -= lam * mn
        if f < best_f:
            best_f = f
            best = subset
    return {cand[p] for p in best}, float(best_f)


def gmm_baseline(query, candidates, k: int, dataset: VectorDataset) -> list[int]:
    """Greedy max-min selection over the candidates.

    Starts from the candidate nearest the query, then repeatedly adds the
    candidate whose minimum squared distance to the current selection is
    largest. Ties break toward the smaller id.
    """
    cand = _check_ids(candidates, dataset.n_vectors, "candidates")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(cand):
        raise ValueError(f"k={k} exceeds candidate count {len(cand)}")
    cand_arr = np.asarray(cand, dtype=np.int64)
    vecs = dataset.data[cand_arr]
    q = np.asarray(query, dtype=np.float64).reshape(1, -1)
    qd2 = pairwise_sqdist(q, vecs)[0]
    pair = pairwise_sqdist(vecs, vecs)

    def _smallest_id_pos(tied_mask: np.ndarray) -> int:
        pos = np.flatnonzero(tied_mask)
        return int(pos[np.argmin(cand_arr[pos])])

    unpicked = np.ones(len(cand), dtype=bool)
    first = _smallest_id_pos(qd2 == qd2.min())
    order = [first]
    unpicked[first] = False
    mind2 = pair[first].copy()
    while len(order) < k:
        best = mind2[unpicked].max()
        pos = _smallest_id_pos(unpicked & (mind2 == best))
        order.append(pos)
        unpicked[pos] = False
        np.minimum(mind2, pair[pos], out=mind2)
    return [int(cand_arr[p]) for p in order]


def clustering_baseline(
    query, candidates, k: int, dataset: VectorDataset, seed: int
) -> list[int]:
    """k-means over the candidate vectors, then the nearest candidate to each
    centroid; a candidate already taken falls through to the next nearest.

    Seeding is distance-weighted (k-means++ style) from the given seed and
    Lloyd iterations are capped at 25, so results are deterministic.
    """
    cand = _check_ids(candidates, dataset.n_vectors, "candidates")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(cand):
        raise ValueError(f"k={k} exceeds candidate count {len(cand)}")
    cand_arr = np.asarray(cand, dtype=np.int64)
    vecs = dataset.data[cand_arr].astype(np.float64)
    m = len(cand)
    if k == m:
        return [int(c) for c in cand]
    rng = np.random.default_rng(seed)
    centers = np.empty((k, vecs.shape[1]), dtype=np.float64)
    chosen = np.zeros(m, dtype=bool)
    first = int(rng.integers(0, m))
    centers[0] = vecs[first]
    chosen[first] = True
    mind2 = pairwise_sqdist(vecs, centers[:1])[:, 0]
    for c in range(1, k):
        total = float(mind2.sum())
        if total > 0:
            pick = int(rng.choice(m, p=mind2 / total))
        else:
            # all remaining points coincide with a center; take the first free slot
            pick = int(np.flatnonzero(~chosen)[0])
        centers[c] = vecs[pick]
        chosen[pick] = True
        np.minimum(mind2, pairwise_sqdist(vecs, centers[c : c + 1])[:, 0], out=mind2)
    assign: np.ndarray | None = None
    for _ in range(25):
        new_assign = np.argmin(pairwise_sqdist(vecs, centers), axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = vecs[mask].mean(axis=0)
    d2 = pairwise_sqdist(centers, vecs)
    taken = np.zeros(m, dtype=bool)
    out: list[int] = []
    for c in range(k):
        for pos in np.argsort(d2[c], kind="stable"):
            if not taken[pos]:
                taken[pos] = True
                out.append(int(cand_arr[pos]))
                break
    return out
