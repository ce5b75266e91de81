# shared_state.py

import logging
import threading
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)


class AtomicFloatArray:
    """Fixed-length float64 cells with atomic per-cell reads and read-modify-write adds

    Adds run a compare-and-swap retry loop on the int64 bit pattern of a cell.
    CPython offers no hardware CAS on buffer memory, so the CAS primitive itself
    is a short critical section on one of `stripes` locks; no lock is ever held
    across more than one cell or across a gradient computation.
    """

    def __init__(self, values: Iterable[float], stripes: int = 64):
        self._cells = np.array(values, dtype=np.float64)
        self._bits = self._cells.view(np.int64)
        self._stripes = max(1, stripes)
        self._locks = [threading.Lock() for _ in range(self._stripes)]

    def __len__(self) -> int:
        return len(self._cells)

    def load(self, index: int) -> float:
        return float(self._cells[index])

    def snapshot(self) -> np.ndarray:
        """Coordinate-wise reads; no consistency across coordinates is implied"""
        return self._cells.copy()

    def compare_and_swap(self, index: int, expected_bits: np.int64, new_bits: np.int64) -> bool:
        with self._locks[index % self._stripes]:
            if self._bits[index] == expected_bits:
                self._bits[index] = new_bits
                return True
            return False

    def add(self, index: int, delta: float) -> int:
        """Atomically add `delta` to one cell; returns the number of CAS retries"""
        retries = 0
        while True:
            old_bits = self._bits[index]
            new_value = np.float64(old_bits.view(np.float64) + delta)
            if self.compare_and_swap(index, old_bits, new_value.view(np.int64)):
                return retries
            retries += 1


class AtomicCounter:
    """Shared non-decreasing iteration counter"""

    def __init__(self, value: int = 0):
        self._value = value
        self._lock = threading.Lock()

    def fetch_add(self, amount: int = 1) -> int:
        with self._lock:
            previous = self._value
            self._value += amount
            return previous

    def load(self) -> int:
        return self._value


def atomic_coordinate_add(parameters: AtomicFloatArray, index: int, delta: float) -> None:
    if not 0 <= index < len(parameters):
        raise IndexError(f"Coordinate {index} outside [0, {len(parameters)})")
    parameters.add(index, delta)
