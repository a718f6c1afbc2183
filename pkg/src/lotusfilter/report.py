"""Benchmark reporting: file hashing, run manifests, timing aggregation, tables."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

PACKAGE_VERSION = "0.1.0"


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(
    command: str, argv: list[str], seed: int | None, inputs: dict[str, str | Path]
) -> dict:
    """Reproducibility block stored in every JSON artifact."""
    return {
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "package_version": PACKAGE_VERSION,
        "inputs": {
            name: {"path": str(p), "sha256": file_sha256(p)} for name, p in inputs.items()
        },
    }


def aggregate_times_ms(per_trial_ns: list[list[int]]) -> dict:
    """Aggregate a trials x queries nanosecond grid.

    The headline number is the mean over queries of each query's median
    across trials; the plain mean-of-means is published alongside it.
    """
    arr = np.asarray(per_trial_ns, dtype=np.float64) / 1e6
    per_query_median = np.median(arr, axis=0)
    per_query_mean = arr.mean(axis=0)
    return {
        "ms": float(per_query_median.mean()),
        "ms_mean": float(per_query_mean.mean()),
        "trials": arr.shape[0],
    }


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def write_json(path: str | Path, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
