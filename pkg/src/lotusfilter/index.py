"""Search backbone: k-NN / range-search contract plus the exact reference index."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from .dataset import VectorDataset


@runtime_checkable
class NeighborIndex(Protocol):
    """Contract any search backbone must satisfy.

    Implementations must return ids sorted by ascending squared distance,
    ties broken by ascending id, and must be deterministic for fixed input.
    Approximate backbones are allowed but must document their recall.
    """

    def knn(self, query: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]: ...

    def range_search(
        self, point: np.ndarray, eps: float, exclude_id: int | None = None
    ) -> np.ndarray: ...

    def size(self) -> int: ...


class ExactIndex:
    """Exhaustive scan over the dataset; float32 storage, float64 accumulation."""

    def __init__(self, dataset: VectorDataset):
        self._dataset = dataset
        self._base = dataset.data.astype(np.float64)
        self._base_sq = np.einsum("ij,ij->i", self._base, self._base)

    @property
    def dataset(self) -> VectorDataset:
        return self._dataset

    def size(self) -> int:
        return self._dataset.n_vectors

    @property
    def dim(self) -> int:
        return self._dataset.dim

    def _query_sqdist(self, query: np.ndarray) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.ndim != 1:
            raise ValueError("query must be a 1-D vector")
        if q.shape[0] != self.dim:
            raise ValueError(f"query dim {q.shape[0]} != index dim {self.dim}")
        if not np.all(np.isfinite(q)):
            raise ValueError("query contains non-finite values")
        d2 = self._base_sq - 2.0 * (self._base @ q) + np.dot(q, q)
        np.maximum(d2, 0.0, out=d2)
        return d2

    def sqdist_rows(self, lo: int, hi: int, col_start: int = 0) -> np.ndarray:
        """Squared distances between base rows [lo,hi) and base columns [col_start,N)."""
        blk = self._base[lo:hi]
        cols = self._base[col_start:]
        d2 = (
            self._base_sq[lo:hi, None]
            + self._base_sq[None, col_start:]
            - 2.0 * (blk @ cols.T)
        )
        np.maximum(d2, 0.0, out=d2)
        return d2

    def knn(self, query: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
        """Top-s ids by squared distance, ascending; ties broken by ascending id."""
        if s < 1:
            raise ValueError("s must be >= 1")
        d2 = self._query_sqdist(query)
        n = d2.shape[0]
        s_eff = min(s, n)
        if s_eff == n:
            cand = np.arange(n)
        else:
            part = np.argpartition(d2, s_eff - 1)[:s_eff]
            # gather every id tied with the cut so the id tie-break is exact
            thr = d2[part].max()
            cand = np.flatnonzero(d2 <= thr)
        order = np.argsort(d2[cand], kind="stable")
        ids = cand[order][:s_eff]
        return ids, d2[ids]

    def range_search(
        self, point: np.ndarray, eps: float, exclude_id: int | None = None
    ) -> np.ndarray:
        """Ids with squared distance strictly below eps, ascending by id."""
        if eps < 0:
            raise ValueError("eps must be >= 0")
        d2 = self._query_sqdist(point)
        ids = np.flatnonzero(d2 < eps)
        if exclude_id is not None:
            ids = ids[ids != exclude_id]
        return ids


def build_index(dataset: VectorDataset) -> ExactIndex:
    if not isinstance(dataset, VectorDataset):
        raise ValueError("build_index expects a VectorDataset")
    return ExactIndex(dataset)
