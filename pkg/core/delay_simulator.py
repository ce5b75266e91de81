# delay_simulator.py

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .errors import HogwildError
from .filters import FilterPartition, sample_filter, sparsity_stats
from .problem import Objective, ProblemConstants, SparseVector
from .schedules import StepSchedule, tau_growth_cap
from .states import MaskPolicyKind
from .trace import Trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UpdateRecord:
    """The update applied in iteration j: delta = -eta_j d_xi [grad f(w_hat_j; xi_j)] on the block"""
    iteration: int
    block: np.ndarray
    delta: SparseVector


@dataclass(frozen=True)
class MaskPolicy:
    kind: MaskPolicyKind = MaskPolicyKind.BERNOULLI
    probability: float = 0.5

    def __post_init__(self):
        if not 0 <= self.probability <= 1:
            raise HogwildError("INVALID_CONFIG", f"Mask probability must lie in [0, 1], got {self.probability}")

    def describe(self) -> str:
        if self.kind == MaskPolicyKind.BERNOULLI:
            return f"per_coordinate_bernoulli({self.probability})"
        return self.kind.value


class DelayModel:
    """tau-bounded inconsistent reads: the last tau updates plus the vector they were applied to

    `lagged` always equals w_{t - len(history)}: it receives each evicted update
    in the same order the live vector did, so both stay bit-identical.
    """

    def __init__(self, tau: int, mask_policy: Optional[MaskPolicy] = None, growth: bool = False):
        if tau < 0:
            raise HogwildError("INVALID_CONFIG", f"Delay tau must be >= 0, got {tau}")
        self.tau = tau
        self.mask_policy = mask_policy or MaskPolicy()
        self.growth = growth
        self.history: deque = deque()
        self.lagged: Optional[np.ndarray] = None

    def reset(self, w0: np.ndarray) -> None:
        self.history.clear()
        self.lagged = w0.copy()

    def delay_at(self, t: int) -> int:
        """tau(t): constant, or min(tau, floor(sqrt(t L(t)))) in the growing regime"""
        if not self.growth:
            return self.tau
        if t < 3:
            return 0
        return min(self.tau, int(math.floor(tau_growth_cap(t))))

    def record(self, update: UpdateRecord) -> None:
        if self.tau == 0:
            return
        if len(self.history) == self.tau:
            evicted = self.history.popleft()
            self.lagged[evicted.delta.indices] += evicted.delta.values
        self.history.append(update)

    def describe(self) -> Dict:
        return {
            "tau": self.tau,
            "growth": self.growth,
            "mask_policy": self.mask_policy.kind.value,
            "mask_probability": self.mask_policy.probability,
        }


@dataclass
class SimulationState:
    w: np.ndarray
    t: int = 0


def read_inconsistent(state: SimulationState, t: int, delay: DelayModel,
                      rng: np.random.Generator) -> np.ndarray:
    """w_hat_t = w_{t-tau} plus the masked updates of iterations [t-tau, t)"""
    history = delay.history
    expected = min(delay.tau, t)
    if len(history) < expected or (history and history[-1].iteration != t - 1):
        raise HogwildError(
            "HISTORY_UNDERFLOW",
            f"History holds {len(history)} records, iterations [{t - expected}, {t}) are required",
            {"t": t}
        )
    policy = delay.mask_policy.kind
    if policy == MaskPolicyKind.ALL_INCLUDED or not history:
        return state.w.copy()

    tau_t = delay.delay_at(t)
    # records older than tau(t) are always part of the read
    settled = len(history) - min(tau_t, len(history))
    w_hat = delay.lagged.copy()

    if policy == MaskPolicyKind.NONE_INCLUDED:
        for j in range(settled):
            update = history[j].delta
            w_hat[update.indices] += update.values
        return w_hat

    sizes = [len(update.delta.indices) for update in history]
    indices = np.concatenate([update.delta.indices for update in history])
    values = np.concatenate([update.delta.values for update in history])
    keep = np.ones(len(indices), dtype=bool)
    settled_count = sum(sizes[:settled])
    if len(indices) > settled_count:
        keep[settled_count:] = rng.random(len(indices) - settled_count) < delay.mask_policy.probability
    w_hat += np.bincount(indices[keep], weights=values[keep], minlength=len(w_hat))
    return w_hat


def apply_update(state: SimulationState, block: np.ndarray, scale: int, grad_block: SparseVector,
                 eta: float, t: Optional[int] = None) -> UpdateRecord:
    """w[h] <- w[h] - eta * scale * g_h on the block; returns the applied delta"""
    iteration = state.t if t is None else t
    if len(grad_block.indices) and not np.isin(grad_block.indices, block).all():
        raise HogwildError("DIMENSION_MISMATCH", "Gradient support is not contained in the filter block")
    values = -(eta * scale) * grad_block.values
    if not np.isfinite(values).all():
        raise HogwildError(
            "NON_FINITE_UPDATE",
            f"Non-finite update at iteration {iteration}",
            {"t": iteration}
        )
    nonzero = values != 0
    indices = grad_block.indices[nonzero]
    values = values[nonzero]
    state.w[indices] += values
    return UpdateRecord(iteration, block, SparseVector(indices, values, grad_block.dimension))


def checkpoint_metrics(obj: Objective, constants: ProblemConstants, w: np.ndarray):
    diff = w - constants.w_star
    return obj.full_objective(w) - constants.F_star, float(diff @ diff)


def check_run_inputs(obj: Objective, partition: FilterPartition, schedule: StepSchedule,
                     constants: ProblemConstants, w0: np.ndarray) -> None:
    if w0.shape != (obj.dimension,):
        raise HogwildError(
            "DIMENSION_MISMATCH",
            f"w0 has shape {w0.shape}, objective dimension is {obj.dimension}"
        )
    if partition.n != obj.n:
        raise HogwildError(
            "PARTITION_MISMATCH",
            f"Partition covers {partition.n} samples, objective has {obj.n}"
        )
    if not (math.isclose(schedule.mu, constants.mu, rel_tol=1e-12)
            and math.isclose(schedule.L, constants.L, rel_tol=1e-12)):
        raise HogwildError(
            "SCHEDULE_MISMATCH",
            f"Schedule built for (L={schedule.L}, mu={schedule.mu}), "
            f"problem has (L={constants.L}, mu={constants.mu})"
        )


def run_sequential(obj: Objective, partition: FilterPartition, schedule: StepSchedule, delay: DelayModel,
                   w0: np.ndarray, iterations: int, checkpoints: np.ndarray, seed: int,
                   constants: ProblemConstants, manifest: Optional[Dict] = None) -> Trace:
    """Single-threaded, deterministic simulation of the filtered recursion under delay tau"""
    if iterations < 1:
        raise HogwildError("INVALID_CONFIG", f"iterations must be >= 1, got {iterations}")
    check_run_inputs(obj, partition, schedule, constants, w0)

    stats = sparsity_stats(obj, partition.D)
    updates_per_iteration = stats.delta_bar_D / partition.D
    wanted = set(int(c) for c in checkpoints if 0 <= c <= iterations)

    rng = np.random.default_rng(seed)
    # mask draws come from a child stream; sample and filter draws depend on `seed` alone
    mask_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    state = SimulationState(w=np.array(w0, dtype=float))
    delay.reset(state.w)
    n = obj.n

    rows: List = []

    def take_checkpoint(t: int) -> None:
        gap, distance = checkpoint_metrics(obj, constants, state.w)
        rows.append((t, t * updates_per_iteration, gap, distance))
        logger.debug(f"seed={seed} t={t} gap={gap:.6e} dist={distance:.6e}")

    if 0 in wanted:
        take_checkpoint(0)
    for t in range(iterations):
        state.t = t
        i = int(rng.integers(n))
        w_hat = read_inconsistent(state, t, delay, mask_rng)
        block, scale = sample_filter(partition, i, rng)
        gradient = obj.stochastic_gradient(w_hat, i)
        grad_block = gradient if scale == 1 else gradient.restrict(block)
        update = apply_update(state, block, scale, grad_block, schedule.step(t), t)
        delay.record(update)
        if t + 1 in wanted:
            take_checkpoint(t + 1)

    run_manifest = dict(manifest or {})
    run_manifest.update({"engine": "sequential", "seed": seed, "iterations": iterations})
    t_col, tp_col, gap_col, dist_col = zip(*rows) if rows else ((), (), (), ())
    return Trace(
        manifest=run_manifest,
        t=np.array(t_col, dtype=np.int64),
        t_prime=np.array(tp_col, dtype=float),
        objective_gap=np.array(gap_col, dtype=float),
        squared_distance=np.array(dist_col, dtype=float),
        seed=seed,
    )
