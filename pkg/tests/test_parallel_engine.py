import threading

import numpy as np
import pytest

from core.delay_simulator import DelayModel, MaskPolicy, run_sequential
from core.errors import HogwildError
from core.filters import build_partition
from core.parallel_engine import ParallelConfig, ParallelEngine, run_parallel
from core.schedules import make_schedule
from core.shared_state import AtomicCounter, AtomicFloatArray, atomic_coordinate_add
from core.state_manager import StateManager
from core.states import CounterMode, EngineState, MaskPolicyKind, ScheduleKind


def hammer(parameters, threads, adds, index=0):
    def work():
        for _ in range(adds):
            parameters.add(index, 1.0)

    workers = [threading.Thread(target=work) for _ in range(threads)]
    for worker in workers:
        worker.start()
    for worker in workers:
        worker.join()


class TestAtomicFloatArray:
    def test_concurrent_adds_are_not_lost(self):
        parameters = AtomicFloatArray(np.zeros(2), stripes=1)
        hammer(parameters, threads=4, adds=5000)
        assert parameters.load(0) == 20000.0
        assert parameters.load(1) == 0.0

    @pytest.mark.slow
    def test_million_adds(self):
        parameters = AtomicFloatArray(np.zeros(1))
        hammer(parameters, threads=8, adds=125000)
        assert parameters.load(0) == 1e6

    def test_compare_and_swap(self):
        parameters = AtomicFloatArray([1.5])
        bits = np.float64(1.5).view(np.int64)
        assert not parameters.compare_and_swap(0, np.float64(2.0).view(np.int64), bits)
        assert parameters.compare_and_swap(0, bits, np.float64(-3.0).view(np.int64))
        assert parameters.load(0) == -3.0

    def test_snapshot_is_a_copy(self):
        parameters = AtomicFloatArray([1.0, 2.0])
        snapshot = parameters.snapshot()
        parameters.add(1, 1.0)
        assert snapshot[1] == 2.0
        assert parameters.load(1) == 3.0

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            atomic_coordinate_add(AtomicFloatArray([0.0]), 3, 1.0)


class TestAtomicCounter:
    def test_values_are_unique(self):
        counter = AtomicCounter()
        seen = []
        lock = threading.Lock()

        def work():
            local = [counter.fetch_add(1) for _ in range(2000)]
            with lock:
                seen.extend(local)

        workers = [threading.Thread(target=work) for _ in range(4)]
        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()
        assert sorted(seen) == list(range(8000))
        assert counter.load() == 8000


class TestStateManager:
    def test_lifecycle(self):
        manager = StateManager()
        for state in (EngineState.STARTING, EngineState.RUNNING, EngineState.STOPPING, EngineState.FINISHED):
            manager.set_state(state)
        assert manager.current_state == EngineState.FINISHED
        assert manager.elapsed >= 0.0

    def test_invalid_transition(self):
        with pytest.raises(HogwildError) as excinfo:
            StateManager().set_state(EngineState.RUNNING)
        assert excinfo.value.code == "INVALID_STATE_TRANSITION"

    def test_first_failure_wins(self):
        manager = StateManager()
        manager.record_failure(HogwildError("NON_FINITE_UPDATE", "first"))
        manager.record_failure(HogwildError("WORKER_FAILED", "second"))
        assert manager.error.code == "NON_FINITE_UPDATE"

    def test_observe_keeps_maximum(self):
        manager = StateManager()
        manager.observe(3, retries=2)
        manager.observe(1, retries=1)
        status = manager.status_dict
        assert status["observed_tau"] == 3
        assert status["cas_retries"] == 3

    def test_reset_on_idle(self):
        manager = StateManager()
        manager.set_state(EngineState.STARTING)
        manager.observe(5)
        manager.set_state(EngineState.ERROR)
        manager.set_state(EngineState.IDLE)
        assert manager.observed_tau == 0
        assert manager.error is None


class TestParallelConfig:
    def test_configured_tau(self, toy_constants):
        schedule = make_schedule(ScheduleKind.SGD_CONVEX, toy_constants)
        assert ParallelConfig(4, schedule, 100, 0, tau_factor=3).configured_tau == 12
        assert ParallelConfig(4, schedule, 100, 0, tau=5).configured_tau == 5

    @pytest.mark.parametrize("threads, total", [(0, 10), (4, 3)])
    def test_invalid(self, toy_constants, threads, total):
        schedule = make_schedule(ScheduleKind.SGD_CONVEX, toy_constants)
        with pytest.raises(HogwildError) as excinfo:
            ParallelConfig(threads, schedule, total, 0)
        assert excinfo.value.code == "INVALID_CONFIG"


class TestParallelEngine:
    def test_single_thread_matches_sequential(self, small_logistic, small_constants):
        schedule = make_schedule(ScheduleKind.SGD_CONVEX, small_constants)
        partition = build_partition(small_logistic, D=2, seed=0)
        w0 = np.zeros(small_logistic.dimension)
        checkpoints = np.array([0, 300])
        sequential = run_sequential(small_logistic, partition, schedule,
                                    DelayModel(0, MaskPolicy(MaskPolicyKind.ALL_INCLUDED)), w0, 300,
                                    checkpoints, seed=5, constants=small_constants)
        parallel = run_parallel(small_logistic, partition, ParallelConfig(1, schedule, 300, 5), w0,
                                small_constants, checkpoints)
        assert parallel.final_distance == sequential.final_distance
        assert parallel.final_gap == sequential.final_gap
        assert parallel.manifest["observed_tau"] == 0

    def test_multi_thread_run(self, small_logistic, small_constants):
        schedule = make_schedule(ScheduleKind.EXP_PERIOD, small_constants, tau=8)
        partition = build_partition(small_logistic, D=1, seed=0)
        w0 = np.zeros(small_logistic.dimension)
        engine = ParallelEngine(small_logistic, partition, ParallelConfig(4, schedule, 2000, 11), small_constants)
        trace = engine.run(w0, np.array([0, 500, 1000, 2000]))
        np.testing.assert_array_equal(trace.t, [0, 500, 1000, 2000])
        assert trace.final_distance < trace.squared_distance[0]
        assert engine.shared.completed.load() == 2000
        assert engine.state_manager.current_state == EngineState.FINISHED
        manifest = trace.manifest
        assert manifest["engine"] == "parallel"
        assert manifest["configured_tau"] == 8
        assert manifest["observed_tau"] >= 0
        assert manifest["snapshots"] == "coordinate_wise_inconsistent"

    def test_local_estimate_counter(self, small_logistic, small_constants):
        schedule = make_schedule(ScheduleKind.HOGWILD, small_constants, tau=4)
        partition = build_partition(small_logistic, D=1, seed=0)
        config = ParallelConfig(2, schedule, 400, 0, counter_mode=CounterMode.LOCAL_ESTIMATE)
        trace = run_parallel(small_logistic, partition, config, np.zeros(small_logistic.dimension),
                             small_constants, np.array([0, 400]))
        assert trace.manifest["counter_mode"] == "local_estimate"
        assert np.isfinite(trace.final_gap)

    def test_divergence_aborts_the_run(self, toy, toy_constants):
        schedule = make_schedule(ScheduleKind.CONSTANT, toy_constants, eta=1e308)
        engine = ParallelEngine(toy, build_partition(toy, 1, 0), ParallelConfig(2, schedule, 1000, 0),
                                toy_constants)
        with pytest.raises(HogwildError) as excinfo:
            engine.run(np.zeros(1), np.array([0]))
        assert excinfo.value.code == "NON_FINITE_UPDATE"
        assert engine.state_manager.current_state == EngineState.ERROR

    def test_schedule_mismatch(self, toy, toy_constants, small_constants):
        schedule = make_schedule(ScheduleKind.SGD_CONVEX, small_constants)
        with pytest.raises(HogwildError) as excinfo:
            run_parallel(toy, build_partition(toy, 1, 0), ParallelConfig(1, schedule, 10, 0), np.zeros(1),
                         toy_constants, np.array([10]))
        assert excinfo.value.code == "SCHEDULE_MISMATCH"
