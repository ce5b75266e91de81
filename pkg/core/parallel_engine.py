# parallel_engine.py

import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from config import Config
from .delay_simulator import check_run_inputs, checkpoint_metrics
from .errors import HogwildError
from .filters import FilterPartition, sample_filter, sparsity_stats
from .problem import Objective, ProblemConstants
from .schedules import StepSchedule
from .shared_state import AtomicCounter, AtomicFloatArray
from .state_manager import StateManager
from .states import CounterMode, EngineState, ScheduleKind
from .trace import Trace

logger = logging.getLogger(__name__)

IDLE_SLOT = np.iinfo(np.int64).max


@dataclass(frozen=True)
class ParallelConfig:
    threads: int
    schedule: StepSchedule
    total_iterations: int
    seed_base: int
    counter_mode: CounterMode = CounterMode.SHARED_ATOMIC
    tau: Optional[int] = None
    tau_factor: int = Config.TAU_FACTOR
    sampler_interval: float = Config.SAMPLER_INTERVAL
    stripes: int = Config.ATOMIC_STRIPES

    def __post_init__(self):
        if self.threads < 1:
            raise HogwildError("INVALID_CONFIG", f"threads must be >= 1, got {self.threads}")
        if self.total_iterations < self.threads:
            raise HogwildError(
                "INVALID_CONFIG",
                f"total_iterations ({self.total_iterations}) must be >= threads ({self.threads})"
            )
        if self.sampler_interval <= 0:
            raise HogwildError("INVALID_CONFIG", "sampler_interval must be positive")

    @property
    def configured_tau(self) -> int:
        """tau assumed by the schedule; c * P unless set explicitly"""
        return self.tau if self.tau is not None else self.tau_factor * self.threads


@dataclass
class SharedState:
    parameters: AtomicFloatArray
    iteration_counter: AtomicCounter = field(default_factory=AtomicCounter)
    completed: AtomicCounter = field(default_factory=AtomicCounter)
    stop: threading.Event = field(default_factory=threading.Event)

    def epoch_exponent(self, schedule: StepSchedule) -> Optional[int]:
        """h of the current period for exp_period schedules"""
        if schedule.kind != ScheduleKind.EXP_PERIOD:
            return None
        return schedule.period_index(self.iteration_counter.load())


class ParallelEngine:
    """P worker threads running the filtered recursion against one shared parameter vector"""

    def __init__(self, obj: Objective, partition: FilterPartition, config: ParallelConfig,
                 constants: ProblemConstants):
        self.obj = obj
        self.partition = partition
        self.config = config
        self.constants = constants
        self.state_manager = StateManager()
        self.shared: Optional[SharedState] = None
        self._in_flight = np.full(config.threads, IDLE_SLOT, dtype=np.int64)
        self._sampling_done = threading.Event()
        self._rows: List = []
        self._updates_per_iteration = 1.0

    def run(self, w0: np.ndarray, checkpoints: np.ndarray, manifest: Optional[Dict] = None) -> Trace:
        config = self.config
        check_run_inputs(self.obj, self.partition, config.schedule, self.constants, w0)
        stats = sparsity_stats(self.obj, self.partition.D)
        self._updates_per_iteration = stats.delta_bar_D / self.partition.D

        targets = sorted(set(int(c) for c in checkpoints if 0 <= c <= config.total_iterations))
        self.shared = SharedState(parameters=AtomicFloatArray(w0, stripes=config.stripes))
        self._in_flight.fill(IDLE_SLOT)
        self._sampling_done.clear()
        self._rows = []

        self.state_manager.set_state(EngineState.STARTING)
        logger.info(
            f"Starting parallel run: P={config.threads}, iterations={config.total_iterations}, "
            f"counter={config.counter_mode.value}, schedule={config.schedule.kind.value}"
        )
        if targets and targets[0] == 0:
            self._record(0, self.shared.parameters.snapshot())
            targets = targets[1:]

        sampler = threading.Thread(
            target=self._sample_checkpoints, args=(targets,), name="CheckpointSampler", daemon=True
        )
        workers = [
            threading.Thread(target=self._worker, args=(worker_id,), name=f"HogwildWorker-{worker_id}",
                             daemon=True)
            for worker_id in range(config.threads)
        ]
        started: List[threading.Thread] = []
        try:
            sampler.start()
            for worker in workers:
                worker.start()
                started.append(worker)
        except RuntimeError as e:
            self.shared.stop.set()
            self._sampling_done.set()
            for worker in started:
                worker.join()
            self.state_manager.set_state(EngineState.ERROR)
            raise HogwildError("THREAD_START_FAILED", f"Could not start worker threads: {e}",
                               {"started": len(started)})

        self.state_manager.set_state(EngineState.RUNNING)
        for worker in workers:
            worker.join()
        self.state_manager.set_state(EngineState.STOPPING)
        self._sampling_done.set()
        sampler.join()

        error = self.state_manager.error
        if error is not None:
            self.state_manager.set_state(EngineState.ERROR)
            logger.error(f"Parallel run aborted: {error.message}")
            raise error

        final = self.shared.parameters.snapshot()
        recorded = {row[0] for row in self._rows}
        for t in targets:
            if t not in recorded:
                self._record(t, final)
        self.state_manager.set_state(EngineState.FINISHED)

        status = self.state_manager.status_dict
        observed_tau = status["observed_tau"]
        if observed_tau > config.configured_tau:
            logger.warning(
                f"Observed delay {observed_tau} exceeded configured tau {config.configured_tau}"
            )
        logger.info(
            f"Parallel run finished in {status['elapsed']:.2f}s, observed tau={observed_tau}, "
            f"CAS retries={status['cas_retries']}"
        )

        run_manifest = dict(manifest or {})
        run_manifest.update({
            "engine": "parallel",
            "threads": config.threads,
            "seed_base": config.seed_base,
            "iterations": config.total_iterations,
            "counter_mode": config.counter_mode.value,
            "configured_tau": config.configured_tau,
            "observed_tau": observed_tau,
            "tau_exceeded": observed_tau > config.configured_tau,
            "cas_retries": status["cas_retries"],
            "elapsed_seconds": status["elapsed"],
            "snapshots": "coordinate_wise_inconsistent",
            "host": status["host"],
            "host_load": status["load"],
        })
        self._rows.sort(key=lambda row: row[0])
        t_col, gap_col, dist_col = zip(*self._rows) if self._rows else ((), (), ())
        t_arr = np.array(t_col, dtype=np.int64)
        return Trace(
            manifest=run_manifest,
            t=t_arr,
            t_prime=t_arr * self._updates_per_iteration,
            objective_gap=np.array(gap_col, dtype=float),
            squared_distance=np.array(dist_col, dtype=float),
            seed=config.seed_base,
        )

    def _worker(self, worker_id: int) -> None:
        config = self.config
        shared = self.shared
        schedule = config.schedule
        rng = np.random.default_rng(config.seed_base + worker_id)
        n = self.obj.n
        local_count = 0
        max_tau = 0
        retries = 0
        others = np.arange(config.threads) != worker_id

        try:
            while not shared.stop.is_set():
                t = shared.iteration_counter.fetch_add(1)
                if t >= config.total_iterations:
                    break
                self._in_flight[worker_id] = t
                oldest = self._in_flight[others].min() if config.threads > 1 else IDLE_SLOT
                if oldest < t:
                    max_tau = max(max_tau, int(t - oldest))

                step_t = t if config.counter_mode == CounterMode.SHARED_ATOMIC else local_count * config.threads
                i = int(rng.integers(n))
                w_hat = shared.parameters.snapshot()
                block, scale = sample_filter(self.partition, i, rng)
                gradient = self.obj.stochastic_gradient(w_hat, i)
                grad_block = gradient if scale == 1 else gradient.restrict(block)
                values = -(schedule.step(step_t) * scale) * grad_block.values
                if not np.isfinite(values).all():
                    raise HogwildError("NON_FINITE_UPDATE", f"Non-finite update at iteration {t}",
                                       {"t": t, "worker": worker_id})
                for index, delta in zip(grad_block.indices.tolist(), values.tolist()):
                    if delta != 0.0:
                        retries += shared.parameters.add(index, delta)

                self._in_flight[worker_id] = IDLE_SLOT
                shared.completed.fetch_add(1)
                local_count += 1
        except HogwildError as e:
            self.state_manager.record_failure(e)
            shared.stop.set()
        except Exception as e:
            logger.exception(f"Worker {worker_id} failed")
            self.state_manager.record_failure(HogwildError("WORKER_FAILED", str(e), {"worker": worker_id}))
            shared.stop.set()
        finally:
            self._in_flight[worker_id] = IDLE_SLOT
            self.state_manager.observe(max_tau, retries)
            logger.debug(f"Worker {worker_id} done after {local_count} iterations, max tau {max_tau}")

    def _sample_checkpoints(self, targets: List[int]) -> None:
        """Record each target once the completed-iteration count has reached it"""
        k = 0
        while k < len(targets) and not self._sampling_done.is_set():
            completed = self.shared.completed.load()
            if completed >= targets[k]:
                w = self.shared.parameters.snapshot()
                while k < len(targets) and targets[k] <= completed:
                    self._record(targets[k], w)
                    k += 1
                continue
            self._sampling_done.wait(self.config.sampler_interval)

    def _record(self, t: int, w: np.ndarray) -> None:
        gap, distance = checkpoint_metrics(self.obj, self.constants, w)
        self._rows.append((t, gap, distance))
        logger.debug(f"checkpoint t={t} gap={gap:.6e} dist={distance:.6e}")


def run_parallel(obj: Objective, partition: FilterPartition, config: ParallelConfig, w0: np.ndarray,
                 constants: ProblemConstants, checkpoints: np.ndarray,
                 manifest: Optional[Dict] = None) -> Trace:
    return ParallelEngine(obj, partition, config, constants).run(w0, checkpoints, manifest)
