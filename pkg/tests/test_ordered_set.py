"""OrderedSet: hand traces plus differential fuzz against the tombstone oracle."""

import numpy as np
import pytest

from lotusfilter import OrderedSet
from oracles import TombstonePool


class TestHandTraces:
    def test_construction_and_pop(self):
        s = OrderedSet([5, 3, 9, 1])
        assert len(s) == 4
        assert s.pop() == 5

    def test_empty(self):
        s = OrderedSet([])
        assert len(s) == 0
        with pytest.raises(IndexError):
            s.pop()

    def test_remove_then_pop_skips(self):
        s = OrderedSet([5, 3, 9, 1])
        s.remove(3)
        assert s.pop() == 5
        assert s.pop() == 9

    def test_remove_idempotent(self):
        s = OrderedSet([1, 2, 3])
        s.remove(2)
        s.remove(2)
        assert len(s) == 2

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            OrderedSet([1, 2, 1])

    def test_drain_preserves_order(self):
        s = OrderedSet([5, 3, 9, 1])
        s.remove(9)
        assert s.drain_in_order() == [5, 3, 1]
        assert len(s) == 0
        assert OrderedSet([]).drain_in_order() == []

    def test_single_element_exhaustion(self):
        s = OrderedSet([7])
        assert s.pop() == 7
        with pytest.raises(IndexError):
            s.pop()

    def test_len_after_pops(self):
        s = OrderedSet(list(range(10)))
        for k in range(1, 4):
            s.pop()
            assert len(s) == 10 - k

    def test_contains(self):
        s = OrderedSet([4, 8])
        assert 4 in s and 9 not in s
        s.remove(4)
        assert 4 not in s

    def test_count_present(self):
        s = OrderedSet([1, 2, 3, 4])
        s.remove(2)
        assert s.count_present([1, 2, 5]) == 1
        assert s.count_present([]) == 0

    def test_remove_all(self):
        s = OrderedSet([1, 2, 3, 4])
        s.remove_all([2, 4, 9])
        assert s.pop() == 1
        assert s.pop() == 3
        assert len(s) == 0


def _random_trace(rng, universe, steps):
    """Run the same random ops on both structures, comparing outputs."""
    ids = rng.permutation(universe)[: rng.integers(1, universe + 1)].tolist()
    ours = OrderedSet(ids)
    ref = TombstonePool(ids)
    for _ in range(steps):
        op = rng.integers(0, 7)
        if op == 0:
            if len(ref):
                assert ours.pop() == ref.pop()
            else:
                with pytest.raises(IndexError):
                    ours.pop()
        elif op == 1:
            x = int(rng.integers(0, universe + 2))
            ours.remove(x)
            ref.remove(x)
        elif op == 2:
            assert len(ours) == len(ref)
        elif op == 3:
            x = int(rng.integers(0, universe + 2))
            assert (x in ours) == (x in ref)
        elif op == 4:
            batch = rng.integers(0, universe + 2, size=rng.integers(0, 6)).tolist()
            # intersection semantics: duplicates in the batch count once
            assert ours.count_present(batch) == sum(x in ref for x in set(batch))
        elif op == 5:
            batch = rng.integers(0, universe + 2, size=rng.integers(0, 6)).tolist()
            ours.remove_all(batch)
            for x in batch:
                ref.remove(x)
        else:
            assert ours.drain_in_order() == ref.drain_in_order()
    assert len(ours) == len(ref)
    return ours


class TestDifferential:
    def test_random_traces(self):
        rng = np.random.default_rng(30)
        for _ in range(500):
            _random_trace(rng, int(rng.integers(1, 25)), int(rng.integers(1, 40)))

    def test_skip_count_bounded_by_size(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            n = int(rng.integers(1, 50))
            s = OrderedSet(list(range(n)))
            # random removals, then consume fully
            for x in rng.integers(0, n, size=n // 2):
                s.remove(int(x))
            pops = 0
            while len(s):
                s.pop()
                pops += 1
            assert s.skip_count + pops <= n
            assert s.skip_count <= n
