# schedules.py

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .errors import HogwildError
from .problem import ProblemConstants
from .states import ScheduleKind

logger = logging.getLogger(__name__)

SGD_KINDS = (ScheduleKind.SGD_CONVEX, ScheduleKind.SGD_NONCONVEX)
HOGWILD_KINDS = (ScheduleKind.HOGWILD, ScheduleKind.HOGWILD_NONCONVEX, ScheduleKind.EXP_PERIOD)
NONCONVEX_KINDS = (ScheduleKind.SGD_NONCONVEX, ScheduleKind.HOGWILD_NONCONVEX)
DIMINISHING_KINDS = SGD_KINDS + HOGWILD_KINDS + (ScheduleKind.CUSTOM_DIMINISHING,)


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule t -> eta_t with the constants it was certified for"""
    kind: ScheduleKind
    alpha: float
    alpha_t_low: float
    E: float
    mu: float
    L: float
    kappa: float
    D: int = 1
    tau: int = 0
    eta_constant: Optional[float] = None

    def step(self, t: int) -> float:
        if self.kind == ScheduleKind.CONSTANT:
            return self.eta_constant
        if self.kind == ScheduleKind.EXP_PERIOD:
            return 4.0 / (self.mu * 2.0 ** self.period_index(t))
        return self.alpha_t_low / (self.mu * (t + self.E))

    def steps(self, horizon: int) -> np.ndarray:
        """step(t) for t = 0..horizon"""
        t = np.arange(horizon + 1, dtype=float)
        if self.kind == ScheduleKind.CONSTANT:
            return np.full(horizon + 1, self.eta_constant)
        if self.kind == ScheduleKind.EXP_PERIOD:
            _, exponents = np.frexp(t + self.E)
            return 4.0 / (self.mu * np.exp2(exponents - 1.0))
        return self.alpha_t_low / (self.mu * (t + self.E))

    def period_index(self, t: int) -> int:
        """h with t + E in [2^h, 2^(h+1))"""
        _, exponent = math.frexp(t + self.E)
        return exponent - 1

    def period_start(self, h: int) -> float:
        """First iteration of period h, i.e. 2^h - E"""
        return 2.0 ** h - self.E

    def implied_alpha(self, t: int) -> float:
        """alpha_t = eta_t * mu * (t + E)"""
        return self.step(t) * self.mu * (t + self.E)

    @property
    def eta0(self) -> float:
        return self.step(0)

    def as_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "alpha": self.alpha,
            "alpha_t_low": self.alpha_t_low,
            "E": self.E,
            "mu": self.mu,
            "L": self.L,
            "kappa": self.kappa,
            "D": self.D,
            "tau": self.tau,
            "eta_constant": self.eta_constant,
        }


def make_schedule(kind: ScheduleKind, constants: ProblemConstants, tau: int = 0, D: int = 1,
                  alpha: Optional[float] = None, alpha_t_low: float = 4.0,
                  E: Optional[float] = None, eta: Optional[float] = None) -> StepSchedule:
    """Build a schedule of the given kind, computing E from the kind's rule

    `E` overrides the formula for custom_diminishing and exp_period only;
    `eta` is the fixed step of the constant kind.
    """
    L, mu, kappa = constants.L, constants.mu, constants.kappa
    if L <= 0 or mu <= 0:
        raise HogwildError("INVALID_SCHEDULE", f"Schedules need L, mu > 0 (L={L}, mu={mu})")
    if tau < 0 or D < 1:
        raise HogwildError("INVALID_SCHEDULE", f"Need tau >= 0 and D >= 1 (tau={tau}, D={D})")

    if kind in SGD_KINDS:
        alpha = 2.0 if alpha is None else alpha
        if alpha != 2.0:
            raise HogwildError("INVALID_SCHEDULE", f"{kind.value} is certified for alpha = 2 only, got {alpha}")
        L_eff = L * kappa if kind == ScheduleKind.SGD_NONCONVEX else L
        E_value = 2.0 * alpha * L_eff / mu
        schedule = StepSchedule(kind, alpha, alpha, E_value, mu, L, kappa, D, tau)

    elif kind in (ScheduleKind.HOGWILD, ScheduleKind.HOGWILD_NONCONVEX):
        alpha = 4.0 if alpha is None else alpha
        if alpha_t_low not in (4.0, 12.0):
            raise HogwildError("INVALID_SCHEDULE", f"alpha_t lower bound must be 4 (or 12 for growing delay), got {alpha_t_low}")
        if alpha < alpha_t_low:
            raise HogwildError("INVALID_SCHEDULE", f"{kind.value} needs alpha >= {alpha_t_low}, got {alpha}")
        L_eff = L * kappa if kind == ScheduleKind.HOGWILD_NONCONVEX else L
        E_value = max(2.0 * tau, 4.0 * L_eff * alpha * D / mu)
        schedule = StepSchedule(kind, alpha, alpha_t_low, E_value, mu, L, kappa, D, tau)

    elif kind == ScheduleKind.EXP_PERIOD:
        alpha = 8.0 if alpha is None else alpha
        if alpha != 8.0:
            raise HogwildError("INVALID_SCHEDULE", f"exp_period realizes 4 <= alpha_t < 8, so alpha must be 8, got {alpha}")
        E_value = max(2.0 * tau, 4.0 * L * alpha * D / mu) if E is None else E
        if E_value < 1:
            raise HogwildError("INVALID_SCHEDULE", f"exp_period needs E >= 1, got {E_value}")
        schedule = StepSchedule(kind, alpha, 4.0, E_value, mu, L, kappa, D, tau)

    elif kind == ScheduleKind.CUSTOM_DIMINISHING:
        if alpha is None or alpha <= 0:
            raise HogwildError("INVALID_SCHEDULE", f"custom_diminishing needs alpha > 0, got {alpha}")
        E_value = 2.0 * alpha * L / mu if E is None else E
        if E_value <= 0:
            raise HogwildError("INVALID_SCHEDULE", f"custom_diminishing needs E > 0, got {E_value}")
        schedule = StepSchedule(kind, alpha, alpha, E_value, mu, L, kappa, D, tau)

    elif kind == ScheduleKind.CONSTANT:
        eta = 1.0 / (2.0 * L) if eta is None else eta
        if eta <= 0:
            raise HogwildError("INVALID_SCHEDULE", f"constant step must be > 0, got {eta}")
        schedule = StepSchedule(kind, 0.0, 0.0, 0.0, mu, L, kappa, D, tau, eta_constant=eta)

    else:
        raise HogwildError("INVALID_SCHEDULE", f"Unknown schedule kind: {kind}")

    logger.debug(f"Schedule: {schedule.as_dict()}")
    return schedule


@dataclass
class ConditionReport:
    """Outcome of checking the almost-sure convergence conditions"""
    step_bound: float
    horizon: int
    bound_holds: bool
    first_violation_t: Optional[int]
    sum_diverges: bool
    sum_squares_converges: bool
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_sufficient_conditions(schedule: StepSchedule, constants: ProblemConstants, horizon: int,
                                   convex: Optional[bool] = None) -> ConditionReport:
    """0 < eta_t <= 1/(2L) (or 1/(2L kappa)) up to the horizon, sum eta = inf, sum eta^2 < inf

    The series are classified analytically: every diminishing kind is within a
    constant factor of 1/(t+E); a constant step is not square-summable.
    """
    if horizon < 1:
        raise HogwildError("INVALID_HORIZON", f"Horizon must be >= 1, got {horizon}")
    if convex is None:
        convex = schedule.kind not in NONCONVEX_KINDS
    step_bound = 1.0 / (2.0 * constants.L) if convex else 1.0 / (2.0 * constants.L * constants.kappa)

    steps = schedule.steps(horizon)
    # relative slack for eta_0 = 1/(2L) computed through alpha/(mu E)
    bad = np.flatnonzero((steps <= 0) | (steps > step_bound * (1 + 1e-12)))
    first_violation = int(bad[0]) if len(bad) else None

    diminishing = schedule.kind in DIMINISHING_KINDS
    report = ConditionReport(
        step_bound=step_bound,
        horizon=horizon,
        bound_holds=first_violation is None,
        first_violation_t=first_violation,
        sum_diverges=True,
        sum_squares_converges=diminishing,
    )
    if first_violation is not None:
        report.failures.append(
            f"eta_{first_violation} = {steps[first_violation]:.6g} exceeds {step_bound:.6g}"
        )
    if not report.sum_squares_converges:
        report.failures.append("sum of eta_t^2 diverges")
    return report


def sgd_envelope(constants: ProblemConstants, alpha: float, t: float, T: float = 0.0,
                 E: Optional[float] = None) -> float:
    """Certified bound (4 alpha^2 N / mu^2) / (t - T + E) on E||w_t - w*||^2 for t >= T"""
    if E is None:
        E = 2.0 * alpha * constants.L / constants.mu
    T = max(T, 0.0)
    if t < T:
        raise HogwildError("BEFORE_THRESHOLD", f"Envelope only holds for t >= T = {T}, got t = {t}")
    return 4.0 * alpha ** 2 * constants.N / constants.mu ** 2 / (t - T + E)


def hogwild_envelope(constants: ProblemConstants, alpha: float, D: int, E: float, t: float) -> float:
    """Leading term (4 alpha^2 D N / mu^2) t / (t + E - 1)^2"""
    return 4.0 * alpha ** 2 * D * constants.N / constants.mu ** 2 * t / (t + E - 1.0) ** 2


def hogwild_remainder_estimate(t: float, E: float) -> float:
    """Shape ln t / (t + E - 1)^2 of the remainder, with unit constant (not certified)"""
    if t < 1:
        return 0.0
    return math.log(t) / (t + E - 1.0) ** 2


def tau_growth_cap(t: float) -> float:
    """sqrt(t L(t)) with L(t) = 1/ln t - 1/(ln t)^2, which is 0 up to t = e"""
    if t <= 2:
        raise HogwildError("INVALID_HORIZON", f"Delay growth cap is undefined for t <= 2, got {t}")
    log_t = math.log(t)
    return math.sqrt(max(0.0, t * (1.0 / log_t - 1.0 / log_t ** 2)))


@dataclass
class BoundReport:
    T: float
    T0: float
    T1: float
    envelope: Callable[[float], float]
    leading_constant: float
    leading_constant_t_prime: Optional[float] = None
    sgd_leading_constant_t_prime: Optional[float] = None
    flags: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "T": self.T,
            "T0": self.T0,
            "T1": self.T1,
            "leading_constant": self.leading_constant,
            "leading_constant_t_prime": self.leading_constant_t_prime,
            "sgd_leading_constant_t_prime": self.sgd_leading_constant_t_prime,
            "flags": list(self.flags),
        }


def thresholds(constants: ProblemConstants, alpha: float, D: int, w0: np.ndarray,
               delta: float = 1.0, E: Optional[float] = None, delta_bar_D: Optional[float] = None,
               nonconvex: bool = False) -> BoundReport:
    """T (SGD threshold), T0 (growing-delay threshold), T1 (initial-distance threshold)

    With alpha < 4 the envelope is the SGD bound; otherwise it is the Hogwild
    leading term with the given E (default max{0, 4 L alpha D / mu}).
    """
    if not 0 < delta <= 1:
        raise HogwildError("INVALID_CONFIG", f"Delta must lie in (0, 1], got {delta}")
    L, mu, N = constants.L, constants.mu, constants.N
    L_eff = L * constants.kappa if nonconvex else L
    distance = float(np.sum((w0 - constants.w_star) ** 2))
    flags = []

    if N > 0:
        T = max(0.0, 4.0 * L_eff / mu * max(L_eff * mu / N * distance, 1.0) - 4.0 * L_eff / mu)
        T1 = mu ** 2 / (alpha ** 2 * N * D) * distance
    else:
        T, T1 = 0.0, 0.0
        flags.append("N = 0: T and T1 defined as 0")
    T0 = math.exp(2.0 * math.sqrt(delta) * (1.0 + (L + mu) * alpha / mu))

    if alpha < 4:
        E_sgd = 2.0 * alpha * L_eff / mu
        leading = 4.0 * alpha ** 2 * N / mu ** 2
        envelope = lambda t: sgd_envelope(constants, alpha, t, T, E_sgd)
    else:
        if E is None:
            E = max(0.0, 4.0 * L_eff * alpha * D / mu)
        leading = 4.0 * alpha ** 2 * D * N / mu ** 2
        envelope = lambda t: hogwild_envelope(constants, alpha, D, E, t)
        flags.append("O(ln t/(t+E-1)^2) remainder not included (constant unspecified)")

    report = BoundReport(T=T, T0=T0, T1=T1, envelope=envelope, leading_constant=leading, flags=flags)
    if delta_bar_D is not None:
        report.leading_constant_t_prime = 4.0 * alpha ** 2 * delta_bar_D * N / mu ** 2
        report.sgd_leading_constant_t_prime = 4.0 * 2.0 ** 2 * delta_bar_D * N / mu ** 2
    return report
