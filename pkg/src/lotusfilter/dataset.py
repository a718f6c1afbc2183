"""Vector containers, distance helpers, binary vector I/O, synthetic data."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LVEC_MAGIC = b"LVEC"
LVEC_VERSION = 1

# magic, version, n_vectors, dim; little-endian, no padding
_LVEC_HEADER = struct.Struct("<4sBQQ")


class FormatError(ValueError):
    """A binary vector or table file is malformed."""


def _validated_matrix(data: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"{what} must be a 2-D array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{what} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(eq=False, frozen=True)
class VectorDataset:
    """N x D float32 vectors, row-major, immutable after construction."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _validated_matrix(self.data, "dataset"))

    @property
    def n_vectors(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]


@dataclass(eq=False, frozen=True)
class QuerySet:
    """Query vectors, same layout as VectorDataset."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _validated_matrix(self.data, "query set"))

    @property
    def n_queries(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]


def squared_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Squared Euclidean distance.

    Accumulates sequentially over coordinates in double precision, so the
    result is bit-reproducible across platforms. Batch code paths use
    pairwise_sqdist instead.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.ndim != 1 or bv.ndim != 1:
        raise ValueError("squared_distance expects 1-D vectors")
    if av.shape != bv.shape:
        raise ValueError(f"dimension mismatch: {av.shape[0]} vs {bv.shape[0]}")
    total = 0.0
    for x, y in zip(av.tolist(), bv.tolist()):
        d = x - y
        total += d * d
    return total


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs squared distances between rows of `a` and rows of `b`.

    Returns a float64 matrix of shape (len(a), len(b)). Negative values
    from cancellation are clamped to zero.
    """
    a64 = np.asarray(a, dtype=np.float64)
    b64 = np.asarray(b, dtype=np.float64)
    if a64.ndim != 2 or b64.ndim != 2 or a64.shape[1] != b64.shape[1]:
        raise ValueError("pairwise_sqdist expects 2-D inputs with matching dim")
    a_sq = np.einsum("ij,ij->i", a64, a64)
    b_sq = np.einsum("ij,ij->i", b64, b64)
    d2 = a_sq[:, None] + b_sq[None, :] - 2.0 * (a64 @ b64.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def save_binary(vectors: VectorDataset | QuerySet, path: str | Path) -> None:
    """Write vectors as: magic, version, N, D (u64 LE), then float32 LE rows."""
    arr = vectors.data.astype("<f4", copy=False)
    with open(path, "wb") as fh:
        fh.write(_LVEC_HEADER.pack(LVEC_MAGIC, LVEC_VERSION, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def load_binary(path: str | Path) -> VectorDataset:
    """Read a vector file written by save_binary. Strict: rejects any malformed input."""
    blob = Path(path).read_bytes()
    if len(blob) < _LVEC_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, d = _LVEC_HEADER.unpack_from(blob)
    if magic != LVEC_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != LVEC_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: empty shape {n}x{d}")
    expected = _LVEC_HEADER.size + n * d * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: payload is {len(blob) - _LVEC_HEADER.size} bytes, expected {n * d * 4}")
    data = np.frombuffer(blob, dtype="<f4", offset=_LVEC_HEADER.size).reshape(n, d)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: non-finite values in payload")
    return VectorDataset(data)


def load_queries(path: str | Path) -> QuerySet:
    """Read a vector file and wrap it as a query set."""
    return QuerySet(load_binary(path).data)


def _mixture_rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    centers_ss, members_ss, queries_ss = ss.spawn(3)
    return (
        np.random.default_rng(centers_ss),
        np.random.default_rng(members_ss),
        np.random.default_rng(queries_ss),
    )


def generate_synthetic(
    n_clusters: int, per_cluster: int, dim: int, spread: float, seed: int
) -> VectorDataset:
    """Gaussian mixture: cluster centers uniform in [0,1]^dim, members N(center, spread^2).

    Rows are grouped by cluster. Deterministic for a fixed seed.
    """
    if n_clusters < 1 or per_cluster < 1 or dim < 1:
        raise ValueError("n_clusters, per_cluster and dim must be positive")
    if not spread > 0:
        raise ValueError("spread must be > 0")
    centers_rng, members_rng, _ = _mixture_rngs(seed)
    centers = centers_rng.uniform(0.0, 1.0, size=(n_clusters, dim))
    noise = members_rng.normal(0.0, spread, size=(n_clusters * per_cluster, dim))
    points = np.repeat(centers, per_cluster, axis=0) + noise
    return VectorDataset(points.astype(np.float32))


def generate_synthetic_queries(
    n_clusters: int, n_queries: int, dim: int, spread: float, seed: int
) -> QuerySet:
    """Queries drawn from the same mixture centers as generate_synthetic(seed)."""
    if n_clusters < 1 or n_queries < 1 or dim < 1:
        raise ValueError("n_clusters, n_queries and dim must be positive")
    if not spread > 0:
        raise ValueError("spread must be > 0")
    centers_rng, _, queries_rng = _mixture_rngs(seed)
    centers = centers_rng.uniform(0.0, 1.0, size=(n_clusters, dim))
    assign = queries_rng.integers(0, n_clusters, size=n_queries)
    noise = queries_rng.normal(0.0, spread, size=(n_queries, dim))
    points = centers[assign] + noise
    return QuerySet(points.astype(np.float32))
