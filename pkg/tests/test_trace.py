import numpy as np
import pytest

from core.errors import HogwildError
from core.trace import (AGGREGATE_SEED, Trace, aggregate_traces, geometric_checkpoints, standard_errors, summarize,
                        uniform_checkpoints)


def trace(seed, distances, t=(0, 1, 2)):
    return Trace(manifest={"engine": "sequential"}, t=list(t), t_prime=list(t), objective_gap=distances,
                 squared_distance=distances, seed=seed)


class TestCheckpoints:
    def test_geometric(self):
        points = geometric_checkpoints(20)
        assert list(points) == [0, 1, 2, 3, 4, 5, 7, 9, 11, 14, 18, 20]

    def test_geometric_ends_at_horizon(self):
        assert geometric_checkpoints(10 ** 6)[-1] == 10 ** 6

    def test_uniform(self):
        assert list(uniform_checkpoints(10, 4)) == [0, 4, 8, 10]

    @pytest.mark.parametrize("call", [lambda: geometric_checkpoints(0), lambda: geometric_checkpoints(10, 1.0),
                                      lambda: uniform_checkpoints(10, 0)])
    def test_invalid(self, call):
        with pytest.raises(HogwildError):
            call()


class TestAggregation:
    def test_mean(self):
        mean = aggregate_traces([trace(1, [4.0, 2.0, 1.0]), trace(2, [2.0, 0.0, 1.0])])
        np.testing.assert_array_equal(mean.squared_distance, [3.0, 1.0, 1.0])
        assert mean.seed == AGGREGATE_SEED
        assert mean.aggregated
        assert mean.manifest["seeds"] == [1, 2]

    def test_different_checkpoints(self):
        with pytest.raises(HogwildError) as excinfo:
            aggregate_traces([trace(1, [1.0, 1.0, 1.0]), trace(2, [1.0, 1.0, 1.0], t=(0, 1, 3))])
        assert excinfo.value.code == "TRACE_SCHEMA"

    def test_empty(self):
        with pytest.raises(HogwildError):
            aggregate_traces([])

    def test_standard_errors(self):
        errors = standard_errors([trace(1, [1.0, 1.0, 1.0]), trace(2, [3.0, 1.0, 1.0])])
        np.testing.assert_allclose(errors, [1.0, 0.0, 0.0])

    def test_summary(self):
        summary = summarize([trace(1, [4.0, 2.0, 1.0]), trace(2, [2.0, 0.0, 3.0])])
        assert summary == {"seeds": 2, "final_t": 2, "final_gap": 2.0, "final_distance": 2.0, "initial_gap": 3.0}


def test_checkpoints_must_increase():
    with pytest.raises(HogwildError):
        trace(1, [1.0, 1.0, 1.0], t=(0, 2, 1))
