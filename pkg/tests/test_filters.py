import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.errors import HogwildError
from core.filters import build_partition, fraction_to_blocks, sample_filter, sparsity_stats
from core.problem import Dataset, Objective


def single_sample(support, dimension=10):
    dataset = Dataset.from_rows([(support, [1.0] * len(support))], [1.0], dimension)
    return Objective.logistic(dataset, lam=0.1)


class TestBuildPartition:
    def test_blocks_are_near_equal(self):
        partition = build_partition(single_sample([1, 3, 7, 8, 9]), D=2, seed=0)
        assert partition.scale(0) == 2
        assert sorted(len(block) for block in partition.blocks(0)) == [2, 3]

    def test_small_support_gets_one_block(self):
        partition = build_partition(single_sample([4]), D=3, seed=0)
        assert partition.scale(0) == 1
        assert list(partition.block(0, 0)) == [4]

    def test_blocks_cover_the_support_exactly(self, tiny_dataset):
        obj = Objective.logistic(tiny_dataset, lam=0.1)
        partition = build_partition(obj, D=2, seed=11)
        for i in range(obj.n):
            union = np.concatenate(partition.blocks(i))
            assert sorted(union.tolist()) == obj.sample_support(i).tolist()
            assert len(np.unique(union)) == len(union)

    def test_same_seed_same_partition(self, small_logistic):
        first = build_partition(small_logistic, D=3, seed=5)
        second = build_partition(small_logistic, D=3, seed=5)
        np.testing.assert_array_equal(first.block_indices, second.block_indices)
        np.testing.assert_array_equal(first.block_ptr, second.block_ptr)

    def test_D_one_keeps_whole_support(self, small_logistic):
        partition = build_partition(small_logistic, D=1, seed=0)
        assert np.all(partition.scales == 1)
        np.testing.assert_array_equal(partition.block(7, 0), small_logistic.sample_support(7))

    def test_invalid_D(self, toy):
        with pytest.raises(HogwildError) as excinfo:
            build_partition(toy, D=0, seed=0)
        assert excinfo.value.code == "INVALID_CONFIG"

    def test_empty_support_is_rejected(self):
        obj = Objective.logistic(Dataset.from_rows([([], []), ([0], [1.0])], [1.0, -1.0], 2), lam=0.1)
        with pytest.raises(HogwildError) as excinfo:
            build_partition(obj, D=1, seed=0)
        assert excinfo.value.code == "EMPTY_SUPPORT"

    @given(D=st.integers(min_value=1, max_value=6), seed=st.integers(min_value=0, max_value=1000))
    @settings(max_examples=25, deadline=None)
    def test_block_sizes_differ_by_at_most_one(self, small_logistic, D, seed):
        partition = build_partition(small_logistic, D=D, seed=seed)
        for i in range(0, small_logistic.n, 17):
            sizes = [len(block) for block in partition.blocks(i)]
            assert len(sizes) == min(D, len(small_logistic.sample_support(i)))
            assert max(sizes) - min(sizes) <= 1


class TestSampleFilter:
    def test_single_block_does_not_consume_randomness(self, toy):
        partition = build_partition(toy, D=4, seed=0)
        rng = np.random.default_rng(1)
        block, scale = sample_filter(partition, 0, rng)
        assert scale == 1
        assert list(block) == [0]
        assert rng.integers(1 << 30) == np.random.default_rng(1).integers(1 << 30)

    def test_blocks_are_drawn_uniformly(self):
        partition = build_partition(single_sample([0, 1, 2, 3, 4, 5]), D=3, seed=2)
        rng = np.random.default_rng(0)
        counts = {}
        for _ in range(6000):
            block, scale = sample_filter(partition, 0, rng)
            assert scale == 3
            counts[tuple(block)] = counts.get(tuple(block), 0) + 1
        assert len(counts) == 3
        assert all(abs(count - 2000) < 200 for count in counts.values())

    def test_scaled_filter_is_unbiased(self, tiny_dataset):
        obj = Objective.logistic(tiny_dataset, lam=0.1)
        partition = build_partition(obj, D=2, seed=4)
        for i in range(obj.n):
            total = np.zeros(obj.dimension, dtype=np.int64)
            for block in partition.blocks(i):
                total[block] += 1
            expected = np.zeros(obj.dimension, dtype=np.int64)
            expected[obj.sample_support(i)] = 1
            np.testing.assert_array_equal(total, expected)


class TestFractions:
    @pytest.mark.parametrize("fraction, blocks", [(1.0, 1), (0.75, 1), (0.5, 2), (1 / 3, 3), (0.25, 4)])
    def test_fraction_to_blocks(self, fraction, blocks):
        assert fraction_to_blocks(fraction) == blocks

    @pytest.mark.parametrize("fraction", [0.0, -0.5, 1.5])
    def test_out_of_range(self, fraction):
        with pytest.raises(HogwildError):
            fraction_to_blocks(fraction)


class TestSparsityStats:
    def test_delta_bar_D(self):
        dataset = Dataset.from_rows([([0, 1], [1.0, 1.0]), ([2, 3, 4, 5, 6], [1.0] * 5)], [1.0, -1.0], 7)
        stats = sparsity_stats(Objective.logistic(dataset, lam=0.1), D=2)
        assert stats.delta_bar == 5
        assert stats.delta_bar_D == 4.0
        assert stats.mean_support == 3.5
        assert stats.delta == 0.5

    def test_toy(self, toy):
        stats = sparsity_stats(toy, D=1)
        assert stats.delta_bar == 1
        assert stats.delta_bar_D == 1.0
        assert stats.delta == 1.0

    def test_D_one_matches_mean_support(self, small_logistic):
        stats = sparsity_stats(small_logistic, D=1)
        assert stats.delta_bar_D == pytest.approx(stats.mean_support)
