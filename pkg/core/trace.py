# trace.py

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .errors import HogwildError

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "t_prime", "objective_gap", "squared_distance", "seed")
AGGREGATE_SEED = -1


@dataclass
class Trace:
    """Checkpointed metrics of one run (or the seed average of several)"""
    manifest: Dict
    t: np.ndarray
    t_prime: np.ndarray
    objective_gap: np.ndarray
    squared_distance: np.ndarray
    seed: int
    aggregated: bool = False

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.t_prime = np.asarray(self.t_prime, dtype=float)
        self.objective_gap = np.asarray(self.objective_gap, dtype=float)
        self.squared_distance = np.asarray(self.squared_distance, dtype=float)
        lengths = {len(self.t), len(self.t_prime), len(self.objective_gap), len(self.squared_distance)}
        if len(lengths) != 1:
            raise HogwildError("TRACE_SCHEMA", f"Trace columns have different lengths: {sorted(lengths)}")
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise HogwildError("TRACE_SCHEMA", "Checkpoint iterations must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def same_data(self, other: "Trace") -> bool:
        return (
            self.seed == other.seed
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.t_prime, other.t_prime)
            and np.array_equal(self.objective_gap, other.objective_gap)
            and np.array_equal(self.squared_distance, other.squared_distance)
        )

    @property
    def final_gap(self) -> float:
        return float(self.objective_gap[-1])

    @property
    def final_distance(self) -> float:
        return float(self.squared_distance[-1])


def geometric_checkpoints(iterations: int, ratio: float = 1.3) -> np.ndarray:
    """{0} and ceil(ratio^k) up to the horizon, always ending at `iterations`"""
    if iterations < 1:
        raise HogwildError("INVALID_CONFIG", f"iterations must be >= 1, got {iterations}")
    if ratio <= 1:
        raise HogwildError("INVALID_CONFIG", f"Checkpoint ratio must be > 1, got {ratio}")
    points = {0, iterations}
    k = 0
    while True:
        value = math.ceil(ratio ** k)
        if value > iterations:
            break
        points.add(value)
        k += 1
    return np.array(sorted(points), dtype=np.int64)


def uniform_checkpoints(iterations: int, every: int) -> np.ndarray:
    if every < 1:
        raise HogwildError("INVALID_CONFIG", f"Checkpoint cadence must be >= 1, got {every}")
    points = set(range(0, iterations + 1, every)) | {iterations}
    return np.array(sorted(points), dtype=np.int64)


def aggregate_traces(traces: Sequence[Trace]) -> Trace:
    """Seed average over traces sharing the same checkpoints"""
    if not traces:
        raise HogwildError("TOO_FEW_SEEDS", "Cannot aggregate an empty set of traces")
    reference = traces[0]
    for trace in traces[1:]:
        if not np.array_equal(trace.t, reference.t):
            raise HogwildError("TRACE_SCHEMA", "Traces have different checkpoints and cannot be averaged")

    manifest = dict(reference.manifest)
    manifest["seeds"] = [trace.seed for trace in traces]
    manifest["aggregated"] = True
    return Trace(
        manifest=manifest,
        t=reference.t,
        t_prime=reference.t_prime,
        objective_gap=np.mean([trace.objective_gap for trace in traces], axis=0),
        squared_distance=np.mean([trace.squared_distance for trace in traces], axis=0),
        seed=AGGREGATE_SEED,
        aggregated=True,
    )


def standard_errors(traces: Sequence[Trace], column: str = "squared_distance") -> np.ndarray:
    values = np.array([getattr(trace, column) for trace in traces])
    if len(traces) < 2:
        return np.zeros(values.shape[1])
    return values.std(axis=0, ddof=1) / math.sqrt(len(traces))


def summarize(traces: List[Trace]) -> Dict:
    mean = aggregate_traces(traces)
    return {
        "seeds": len(traces),
        "final_t": int(mean.t[-1]),
        "final_gap": mean.final_gap,
        "final_distance": mean.final_distance,
        "initial_gap": float(mean.objective_gap[0]),
    }
