# state_manager.py

import threading
import time
import logging
from typing import Dict, Optional
from .states import EngineState
from .system_monitor import SystemMonitor
from .errors import HogwildError

logger = logging.getLogger(__name__)


class StateManager:
    """Tracks the lifecycle and live counters of one parallel run"""

    VALID_TRANSITIONS = {
        EngineState.IDLE: [EngineState.STARTING],
        EngineState.STARTING: [EngineState.RUNNING, EngineState.ERROR],
        EngineState.RUNNING: [EngineState.STOPPING, EngineState.ERROR],
        EngineState.STOPPING: [EngineState.FINISHED, EngineState.ERROR],
        EngineState.FINISHED: [EngineState.IDLE],
        EngineState.ERROR: [EngineState.IDLE],
    }

    def __init__(self):
        self._lock = threading.RLock()
        self._state = EngineState.IDLE
        self._start_time: Optional[float] = None
        self._end_time: Optional[float] = None
        self._observed_tau = 0
        self._cas_retries = 0
        self._error: Optional[HogwildError] = None

    @property
    def current_state(self) -> EngineState:
        with self._lock:
            return self._state

    @property
    def observed_tau(self) -> int:
        with self._lock:
            return self._observed_tau

    @property
    def error(self) -> Optional[HogwildError]:
        with self._lock:
            return self._error

    @property
    def elapsed(self) -> float:
        """Wall-clock seconds since RUNNING was entered"""
        with self._lock:
            if not self._start_time:
                return 0.0
            return (self._end_time or time.time()) - self._start_time

    def set_state(self, new_state: EngineState) -> None:
        with self._lock:
            self.validate_state_transition(new_state)
            old_state = self._state
            self._state = new_state

            if new_state == EngineState.RUNNING:
                self._start_time = time.time()
            elif new_state in (EngineState.FINISHED, EngineState.ERROR):
                self._end_time = time.time()
            elif new_state == EngineState.IDLE:
                self._reset_state()

            logger.debug(f"Engine state transition: {old_state.name} -> {new_state.name}")

    def record_failure(self, error: HogwildError) -> None:
        """Only the first failure is kept"""
        with self._lock:
            if self._error is None:
                self._error = error

    def observe(self, tau: int, retries: int = 0) -> None:
        with self._lock:
            if tau > self._observed_tau:
                self._observed_tau = tau
            self._cas_retries += retries

    def _reset_state(self) -> None:
        self._start_time = None
        self._end_time = None
        self._observed_tau = 0
        self._cas_retries = 0
        self._error = None

    @property
    def status_dict(self) -> Dict:
        with self._lock:
            return {
                "state": self._state.name,
                "elapsed": self.elapsed,
                "observed_tau": self._observed_tau,
                "cas_retries": self._cas_retries,
                "error": self._error.code if self._error else None,
                "host": SystemMonitor.get_host_info(),
                "load": SystemMonitor.get_load(),
            }

    def validate_state_transition(self, target_state: EngineState) -> None:
        with self._lock:
            if target_state not in self.VALID_TRANSITIONS[self._state]:
                raise HogwildError(
                    "INVALID_STATE_TRANSITION",
                    f"Cannot transition from {self._state.name} to {target_state.name}"
                )
