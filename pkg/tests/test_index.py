"""Exact index: knn ordering, range search, purity."""

import numpy as np
import pytest

from lotusfilter import VectorDataset, build_index
from oracles import brute_knn, brute_range


def _dataset(rng, n, d, duplicates=False):
    data = rng.normal(size=(n, d)).astype(np.float32)
    if duplicates:
        # force exact ties by copying rows
        for _ in range(n // 4):
            i, j = rng.integers(0, n, size=2)
            data[i] = data[j]
    return VectorDataset(data)


class TestKnn:
    def test_hand_example(self):
        ds = VectorDataset(np.array([[0.0], [0.1], [1.0], [1.05], [2.0]], dtype=np.float32))
        idx = build_index(ds)
        ids, d2 = idx.knn(np.array([0.0]), 5)
        assert ids.tolist() == [0, 1, 2, 3, 4]
        np.testing.assert_allclose(d2, [0.0, 0.01, 1.0, 1.1025, 4.0], rtol=1e-6)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(10)
        for trial in range(30):
            ds = _dataset(rng, int(rng.integers(5, 60)), int(rng.integers(1, 6)),
                          duplicates=trial % 3 == 0)
            idx = build_index(ds)
            q = rng.normal(size=ds.dim)
            s = int(rng.integers(1, ds.n_vectors + 3))
            ids, d2 = idx.knn(q, s)
            want_ids, want_d2 = brute_knn(ds.data, q, s)
            assert ids.tolist() == want_ids
            np.testing.assert_allclose(d2, want_d2, rtol=1e-9, atol=1e-12)

    def test_ties_prefer_lower_id(self):
        row = np.array([1.0, 2.0], dtype=np.float32)
        ds = VectorDataset(np.stack([row, row, row, row]))
        idx = build_index(ds)
        ids, d2 = idx.knn(np.zeros(2), 3)
        assert ids.tolist() == [0, 1, 2]
        assert (d2 == d2[0]).all()

    def test_s_clamped_to_n(self):
        ds = VectorDataset(np.eye(3, dtype=np.float32))
        idx = build_index(ds)
        ids, _ = idx.knn(np.zeros(3), 10)
        assert len(ids) == 3

    def test_pure(self):
        rng = np.random.default_rng(11)
        ds = _dataset(rng, 40, 4)
        idx = build_index(ds)
        q = rng.normal(size=4)
        a = idx.knn(q, 7)
        b = idx.knn(q, 7)
        assert a[0].tolist() == b[0].tolist()
        assert a[1].tolist() == b[1].tolist()

    def test_errors(self):
        ds = VectorDataset(np.ones((3, 2), dtype=np.float32))
        idx = build_index(ds)
        with pytest.raises(ValueError):
            idx.knn(np.zeros(3), 2)
        with pytest.raises(ValueError):
            idx.knn(np.zeros(2), 0)
        with pytest.raises(ValueError):
            idx.knn(np.array([np.nan, 0.0]), 1)


class TestRangeSearch:
    def test_hand_examples(self):
        ds = VectorDataset(np.array([[0.0], [0.1], [1.0], [1.05], [2.0]], dtype=np.float32))
        idx = build_index(ds)
        assert idx.range_search(ds.row(0), 0.25, exclude_id=0).tolist() == [1]
        assert idx.range_search(ds.row(0), 100.0, exclude_id=0).tolist() == [1, 2, 3, 4]
        assert idx.range_search(ds.row(0), 0.0, exclude_id=0).tolist() == []

    def test_strict_inequality_at_boundary(self):
        ds = VectorDataset(np.array([[0.0], [1.0]], dtype=np.float32))
        idx = build_index(ds)
        # d2 is exactly 1.0; strict < excludes it
        assert idx.range_search(ds.row(0), 1.0, exclude_id=0).tolist() == []
        assert idx.range_search(ds.row(0), 1.0000001, exclude_id=0).tolist() == [1]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            ds = _dataset(rng, int(rng.integers(5, 80)), int(rng.integers(1, 5)))
            idx = build_index(ds)
            n = int(rng.integers(0, ds.n_vectors))
            eps = float(rng.uniform(0, 8))
            got = idx.range_search(ds.row(n), eps, exclude_id=n).tolist()
            assert got == brute_range(ds.data, ds.data[n], eps, exclude=n)

    def test_negative_eps_rejected(self):
        ds = VectorDataset(np.ones((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            build_index(ds).range_search(np.zeros(2), -1.0)


class TestBuildIndex:
    def test_size(self):
        ds = VectorDataset(np.ones((5, 2), dtype=np.float32))
        assert build_index(ds).size() == 5

    def test_requires_dataset(self):
        with pytest.raises(ValueError):
            build_index(np.ones((5, 2)))
        # empty data cannot even become a dataset
        with pytest.raises(ValueError):
            VectorDataset(np.zeros((0, 2)))

    def test_rebuild_identical(self):
        rng = np.random.default_rng(13)
        ds = _dataset(rng, 30, 3)
        q = rng.normal(size=3)
        a = build_index(ds).knn(q, 5)[0]
        b = build_index(ds).knn(q, 5)[0]
        assert a.tolist() == b.tolist()
