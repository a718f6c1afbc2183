"""Cutoff table: per-vector lists of ids closer than a squared-distance threshold."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import FormatError, VectorDataset
from .index import ExactIndex, NeighborIndex

LOTF_MAGIC = b"LOTF"
LOTF_VERSION = 1

# magic, version, epsilon (f64), n_vectors (u64); little-endian, no padding
_LOTF_HEADER = struct.Struct("<4sBdQ")

# cap transient block memory during the all-pairs build
_BLOCK_TARGET_CELLS = 24_000_000


@dataclass(eq=False)
class CutoffTable:
    """For each vector n, the ids i != n with squared distance < epsilon.

    Lists are ascending by id. The table is symmetric: i in lists[n] iff
    n in lists[i].
    """

    epsilon: float
    lists: list[np.ndarray]
    _pylists: list[list[int] | None] = field(init=False, repr=False)

    def __post_init__(self):
        self._pylists = [None] * len(self.lists)

    @property
    def n_vectors(self) -> int:
        return len(self.lists)

    def neighbor_list(self, n: int) -> list[int]:
        """lists[n] as plain ints; cached because the filter hot loop iterates it."""
        cached = self._pylists[n]
        if cached is None:
            cached = self.lists[n].tolist()
            self._pylists[n] = cached
        return cached

    def total_entries(self) -> int:
        return sum(a.shape[0] for a in self.lists)

    def avg_list_length(self) -> float:
        return self.total_entries() / self.n_vectors

    def memory_bits(self) -> int:
        """64 bits per stored id."""
        return 64 * self.total_entries()


def build_cutoff_table(
    index: NeighborIndex, dataset: VectorDataset, eps: float
) -> CutoffTable:
    """Range-search every vector against the rest at threshold eps (strict <).

    The comparison excludes each vector itself; eps = 0 yields empty lists.
    Runs serially and is deterministic.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if index.size() != dataset.n_vectors:
        raise ValueError("index and dataset disagree on size")
    if isinstance(index, ExactIndex):
        lists = _build_blocked(index, eps)
    else:
        lists = [
            np.sort(index.range_search(dataset.row(n), eps, exclude_id=n)).astype(np.int64)
            for n in range(dataset.n_vectors)
        ]
    return CutoffTable(epsilon=float(eps), lists=lists)


def _build_blocked(index: ExactIndex, eps: float) -> list[np.ndarray]:
    # upper triangle only, mirrored afterwards, so symmetry holds exactly
    n = index.size()
    fwd: list[list[int]] = [[] for _ in range(n)]
    rev: list[list[int]] = [[] for _ in range(n)]
    block = max(1, _BLOCK_TARGET_CELLS // n)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        col0 = lo + 1
        if col0 >= n:
            break
        d2 = index.sqdist_rows(lo, hi, col_start=col0)
        hits = d2 < eps
        for i in range(hi - lo):
            r = lo + i
            cols = np.flatnonzero(hits[i, r - lo:])
            if cols.size:
                ids = (cols + (r + 1)).tolist()
                fwd[r] = ids
                for j in ids:
                    rev[j].append(r)
    # rev[n] entries arrive in ascending row order and all precede n,
    # fwd[n] entries are ascending and all follow n, so no sort is needed
    return [np.asarray(rev[i] + fwd[i], dtype=np.int64) for i in range(n)]


def serialize(table: CutoffTable, path: str | Path) -> None:
    """Write: magic, version, epsilon f64, N u64, N list lengths u64, then ids u64."""
    lengths = np.array([a.shape[0] for a in table.lists], dtype="<u8")
    with open(path, "wb") as fh:
        fh.write(_LOTF_HEADER.pack(LOTF_MAGIC, LOTF_VERSION, table.epsilon, table.n_vectors))
        fh.write(lengths.tobytes())
        for a in table.lists:
            fh.write(a.astype("<u8", copy=False).tobytes())


def deserialize(path: str | Path) -> CutoffTable:
    blob = Path(path).read_bytes()
    if len(blob) < _LOTF_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, eps, n = _LOTF_HEADER.unpack_from(blob)
    if magic != LOTF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != LOTF_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 1:
        raise FormatError(f"{path}: empty table")
    if eps < 0 or not np.isfinite(eps):
        raise FormatError(f"{path}: bad epsilon {eps}")
    off = _LOTF_HEADER.size
    if len(blob) < off + 8 * n:
        raise FormatError(f"{path}: truncated length block")
    lengths = np.frombuffer(blob, dtype="<u8", count=n, offset=off)
    off += 8 * n
    total = int(lengths.sum())
    if len(blob) != off + 8 * total:
        raise FormatError(f"{path}: payload is {len(blob) - off} bytes, expected {8 * total}")
    ids = np.frombuffer(blob, dtype="<u8", count=total, offset=off)
    if total and ids.max() >= n:
        raise FormatError(f"{path}: id {ids.max()} out of range for N={n}")
    lists: list[np.ndarray] = []
    pos = 0
    for ln in lengths.tolist():
        lists.append(ids[pos : pos + ln].astype(np.int64))
        pos += ln
    return CutoffTable(epsilon=float(eps), lists=lists)
