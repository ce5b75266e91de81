# filters.py

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import HogwildError
from .problem import Objective

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterPartition:
    """A-priori partition of every sample's support D_xi into near-equal blocks

    Blocks are stored flattened: sample i owns blocks
    sample_ptr[i] .. sample_ptr[i+1]-1, and block b covers
    block_indices[block_ptr[b]:block_ptr[b+1]] (sorted).
    """
    D: int
    seed: int
    block_indices: np.ndarray
    block_ptr: np.ndarray
    sample_ptr: np.ndarray

    @property
    def n(self) -> int:
        return len(self.sample_ptr) - 1

    def scale(self, i: int) -> int:
        """d_xi: the number of blocks of sample i"""
        return int(self.sample_ptr[i + 1] - self.sample_ptr[i])

    @property
    def scales(self) -> np.ndarray:
        return np.diff(self.sample_ptr)

    def blocks(self, i: int):
        first, last = self.sample_ptr[i], self.sample_ptr[i + 1]
        return [self.block_indices[self.block_ptr[b]:self.block_ptr[b + 1]] for b in range(first, last)]

    def block(self, i: int, u: int) -> np.ndarray:
        b = self.sample_ptr[i] + u
        return self.block_indices[self.block_ptr[b]:self.block_ptr[b + 1]]


def fraction_to_blocks(fraction: float) -> int:
    """Blocks of size about v|D_xi| correspond to D = round(1/v)"""
    if not 0 < fraction <= 1:
        raise HogwildError("INVALID_CONFIG", f"Fraction v must lie in (0, 1], got {fraction}")
    return max(1, int(round(1.0 / fraction)))


def build_partition(obj: Objective, D: int, seed: int) -> FilterPartition:
    """Shuffle each support once with the seeded generator and cut it into min(D, |D_xi|) blocks"""
    if D < 1:
        raise HogwildError("INVALID_CONFIG", f"Partition parameter D must be >= 1, got {D}")

    rng = np.random.default_rng(seed)
    block_indices = []
    block_ptr = [0]
    sample_ptr = [0]
    for i in range(obj.n):
        support = obj.sample_support(i)
        if len(support) == 0:
            raise HogwildError(
                "EMPTY_SUPPORT",
                f"Sample {i} has an empty support; filters require non-empty sets",
                {"sample": i}
            )
        shuffled = rng.permutation(support)
        for block in np.array_split(shuffled, min(D, len(support))):
            block_indices.append(np.sort(block))
            block_ptr.append(block_ptr[-1] + len(block))
        sample_ptr.append(len(block_ptr) - 1)

    partition = FilterPartition(
        D=D,
        seed=seed,
        block_indices=np.concatenate(block_indices).astype(np.int64),
        block_ptr=np.asarray(block_ptr, dtype=np.int64),
        sample_ptr=np.asarray(sample_ptr, dtype=np.int64),
    )
    logger.debug(f"Built partition D={D} over {obj.n} samples ({len(block_ptr) - 1} blocks)")
    return partition


def sample_filter(partition: FilterPartition, i: int, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """Uniformly chosen block of sample i together with the scale d_xi

    The generator is only consumed when the sample has more than one block.
    """
    scale = partition.scale(i)
    u = int(rng.integers(scale)) if scale > 1 else 0
    return partition.block(i, u), scale


@dataclass(frozen=True)
class SparsityStats:
    delta_bar: int
    delta_bar_D: float
    mean_support: float
    delta: float
    D: int

    def as_dict(self) -> dict:
        return {
            "delta_bar": self.delta_bar,
            "delta_bar_D": self.delta_bar_D,
            "mean_support": self.mean_support,
            "delta": self.delta,
            "D": self.D,
        }


def sparsity_stats(obj: Objective, D: int) -> SparsityStats:
    if D < 1:
        raise HogwildError("INVALID_CONFIG", f"Partition parameter D must be >= 1, got {D}")
    sizes = obj.support_sizes
    ceil_blocks = -(-sizes // D)
    return SparsityStats(
        delta_bar=int(sizes.max()),
        delta_bar_D=float(D * ceil_blocks.mean()),
        mean_support=float(sizes.mean()),
        delta=float(obj.support_counts.max() / obj.n),
        D=D,
    )
