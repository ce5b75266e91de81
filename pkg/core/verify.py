# verify.py

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm, qmc

from .errors import HogwildError
from .filters import FilterPartition, sparsity_stats
from .problem import Objective, ProblemConstants
from .trace import Trace, aggregate_traces, standard_errors

logger = logging.getLogger(__name__)

RELATIVE_TOL = 1e-8
PROBE_NORMS = (0.1, 1.0, 10.0, 100.0, 1000.0)
MIN_SLOPE_POINTS = 10
MIN_ENVELOPE_SEEDS = 10
COLLISION_ROW_BLOCK = 256


@dataclass
class VerificationReport:
    """Outcome of one inequality check; worst_margin is RHS - LHS at the tightest member"""
    name: str
    population: str
    passed: bool
    worst_margin: float
    tolerance: float
    details: List[Dict] = field(default_factory=list)
    gated: bool = True

    def as_dict(self) -> Dict:
        return {
            "name": self.name,
            "population": self.population,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "gated": self.gated,
            "details": self.details,
        }


def _report(name: str, population: str, lhs: np.ndarray, rhs: np.ndarray,
            labels: Sequence[str]) -> VerificationReport:
    """Pass iff LHS <= RHS + tol (1 + RHS) for every member"""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    margins = rhs - lhs
    relative = margins / (1.0 + np.abs(rhs))
    worst = int(np.argmin(relative))
    failing = np.flatnonzero(relative < -RELATIVE_TOL)
    details = [
        {"member": labels[k], "lhs": float(lhs[k]), "rhs": float(rhs[k]), "margin": float(margins[k])}
        for k in failing[:20]
    ]
    report = VerificationReport(
        name=name,
        population=population,
        passed=len(failing) == 0,
        worst_margin=float(margins[worst]),
        tolerance=RELATIVE_TOL * (1.0 + abs(float(rhs[worst]))),
        details=details,
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"{name}: {'pass' if report.passed else 'FAIL'} over {population}, "
                      f"worst margin {report.worst_margin:.3e}")
    return report


def make_probe_points(constants: ProblemConstants, w0: np.ndarray, count: int = 200,
                      seed: int = 0, norms: Sequence[float] = PROBE_NORMS) -> List[np.ndarray]:
    """w*, w0 and `count` points w* + r u with low-discrepancy unit directions u"""
    d = len(constants.w_star)
    points = [constants.w_star.copy(), np.asarray(w0, dtype=float).copy()]
    if count <= 0:
        return points
    uniform = qmc.Halton(d=d, scramble=True, seed=seed).random(count)
    directions = norm.ppf(np.clip(uniform, 1e-12, 1 - 1e-12))
    lengths = np.linalg.norm(directions, axis=1)
    for k in range(count):
        if lengths[k] == 0:
            direction = np.zeros(d)
            direction[0] = 1.0
        else:
            direction = directions[k] / lengths[k]
        points.append(constants.w_star + norms[k % len(norms)] * direction)
    return points


def _probe_labels(points: Sequence[np.ndarray], constants: ProblemConstants) -> List[str]:
    return [f"probe {k} (||w - w*|| = {np.linalg.norm(w - constants.w_star):.3g})" for k, w in enumerate(points)]


def _variance_bound_check(name: str, obj: Objective, constants: ProblemConstants,
                          probe_points: Sequence[np.ndarray], L_eff: float) -> VerificationReport:
    lhs = np.array([obj.gradient_second_moment(w) for w in probe_points])
    gaps = np.array([obj.full_objective(w) - constants.F_star for w in probe_points])
    rhs = 4.0 * L_eff * gaps + constants.N
    return _report(name, f"{len(probe_points)} probe points", lhs, rhs, _probe_labels(probe_points, constants))


def check_variance_bound_convex(obj: Objective, constants: ProblemConstants,
                                probe_points: Sequence[np.ndarray]) -> VerificationReport:
    """E||grad f(w; xi)||^2 <= 4L (F(w) - F*) + N, exact over the finite sum"""
    if not constants.convex_realizations:
        raise HogwildError(
            "NONCONVEX_REALIZATIONS",
            "The variance bound with 4L needs convex realizations; use check_variance_bound_general"
        )
    return _variance_bound_check("variance_bound_convex", obj, constants, probe_points, constants.L)


def check_variance_bound_general(obj: Objective, constants: ProblemConstants,
                                 probe_points: Sequence[np.ndarray]) -> VerificationReport:
    """E||grad f(w; xi)||^2 <= 4L kappa (F(w) - F*) + N, no convexity of realizations needed"""
    return _variance_bound_check(
        "variance_bound_general", obj, constants, probe_points, constants.L * constants.kappa
    )


check_lemma1 = check_variance_bound_convex
check_lemma2 = check_variance_bound_general


def _filtered_gradient_mean(partition: FilterPartition, obj: Objective, w: np.ndarray) -> np.ndarray:
    """E over (xi, u) of d_xi * S_u grad f(w; xi), enumerated exactly"""
    total = np.zeros(obj.dimension)
    for i in range(partition.n):
        gradient = obj.stochastic_gradient(w, i)
        scale = partition.scale(i)
        probability = 1.0 / scale
        for u in range(scale):
            part = gradient.restrict(partition.block(i, u))
            total[part.indices] += probability * scale * part.values
    return total / partition.n


def check_filter_unbiased(partition: FilterPartition, obj: Optional[Objective] = None,
                          points: Sequence[np.ndarray] = ()) -> VerificationReport:
    """d_xi times the mean block indicator equals the support indicator, by integer counting

    That identity holds iff every support coordinate lies in exactly one block
    and no block strays outside the support. Block sizes are checked too. At
    each of `points` the filtered gradient is also averaged over every
    (xi, u) and compared with grad F(w).
    """
    mismatches = []
    for i in range(partition.n):
        blocks = partition.blocks(i)
        covered = np.sort(np.concatenate(blocks))
        support = obj.sample_support(i) if obj is not None else np.unique(covered)
        problems = []
        if len(blocks) != partition.scale(i) or len(blocks) != min(partition.D, len(support)):
            problems.append(f"{len(blocks)} blocks for |D_xi| = {len(support)}, D = {partition.D}")
        if not np.array_equal(covered, support):
            problems.append("blocks do not cover the support exactly once")
        sizes = {len(block) for block in blocks}
        low, high = len(support) // len(blocks), -(-len(support) // len(blocks))
        if not sizes <= {low, high}:
            problems.append(f"block sizes {sorted(sizes)} outside {{{low}, {high}}}")
        if problems:
            mismatches.append({"member": f"sample {i}", "problems": problems})

    # restrict() needs every block inside the support
    if obj is not None and not mismatches:
        for k, w in enumerate(points):
            expected = obj.full_gradient(w)
            deviation = float(np.max(np.abs(_filtered_gradient_mean(partition, obj, w) - expected)))
            if deviation > RELATIVE_TOL * (1.0 + float(np.max(np.abs(expected)))):
                mismatches.append({"member": f"point {k}",
                                   "problems": [f"filtered gradient mean deviates by {deviation:.3e}"]})

    passed = not mismatches
    logger.log(logging.INFO if passed else logging.WARNING,
               f"filter_unbiased: {'pass' if passed else 'FAIL'} over {partition.n} samples, D={partition.D}")
    population = f"{partition.n} samples, D = {partition.D}"
    if len(points):
        population += f", {len(points)} points"
    return VerificationReport(
        name="filter_unbiased",
        population=population,
        passed=passed,
        worst_margin=-float(len(mismatches)),
        tolerance=0.0,
        details=mismatches[:20],
    )


def check_collision_inequality(obj: Objective,
                               pairs: Sequence[Tuple[np.ndarray, np.ndarray]]) -> VerificationReport:
    """E|<grad f(w1; xi1), grad f(w2; xi2)>| <= (sqrt(Delta)/2)(E||grad f(w1)||^2 + E||grad f(w2)||^2)

    Exact over all n^2 independent pairs (xi1, xi2). Only pairs with
    overlapping supports contribute, so the inner products are accumulated
    from sparse row blocks.
    """
    delta = sparsity_stats(obj, 1).delta
    lhs, rhs, labels = [], [], []
    for k, (w1, w2) in enumerate(pairs):
        G1 = obj.gradient_matrix(w1)
        G2 = obj.gradient_matrix(w2)
        G2T = G2.T.tocsr()
        total = 0.0
        for start in range(0, obj.n, COLLISION_ROW_BLOCK):
            inner = G1[start:start + COLLISION_ROW_BLOCK] @ G2T
            total += float(np.abs(inner.data).sum())
        lhs.append(total / obj.n ** 2)
        m1 = float(G1.multiply(G1).sum()) / obj.n
        m2 = float(G2.multiply(G2).sum()) / obj.n
        rhs.append(0.5 * math.sqrt(delta) * (m1 + m2))
        labels.append(f"pair {k}")
    return _report("collision_inequality", f"{len(pairs)} pairs, Delta = {delta:.4g}",
                   np.array(lhs), np.array(rhs), labels)


def check_strong_convexity(obj: Objective, constants: ProblemConstants,
                           probe_points: Sequence[np.ndarray]) -> VerificationReport:
    """2 mu (F(w) - F*) <= ||grad F(w)||^2"""
    lhs = np.array([2.0 * constants.mu * (obj.full_objective(w) - constants.F_star) for w in probe_points])
    rhs = np.array([float(np.sum(obj.full_gradient(w) ** 2)) for w in probe_points])
    return _report("strong_convexity", f"{len(probe_points)} probe points", lhs, rhs,
                   _probe_labels(probe_points, constants))


def check_gradient_growth(obj: Objective, constants: ProblemConstants,
                          probe_points: Sequence[np.ndarray]) -> VerificationReport:
    """E||grad f(w; xi)||^2 >= ||grad F(w)||^2 >= 2 mu (F(w) - F*)

    The second moment therefore grows with F(w) - F*, so no uniform bound G on
    it can hold; the largest value seen is reported.
    """
    moments = np.array([obj.gradient_second_moment(w) for w in probe_points])
    grad_sq = np.array([float(np.sum(obj.full_gradient(w) ** 2)) for w in probe_points])
    floors = np.array([2.0 * constants.mu * (obj.full_objective(w) - constants.F_star) for w in probe_points])
    labels = _probe_labels(probe_points, constants)

    # both links of the chain as one population: LHS <= RHS
    report = _report("gradient_growth", f"{len(probe_points)} probe points",
                     np.concatenate([grad_sq, floors]), np.concatenate([moments, grad_sq]),
                     [f"{label}: E||g||^2 >= ||grad F||^2" for label in labels]
                     + [f"{label}: ||grad F||^2 >= 2 mu gap" for label in labels])
    report.details.insert(0, {"max_second_moment": float(moments.max()),
                              "at_distance": float(np.linalg.norm(probe_points[int(moments.argmax())]
                                                                  - constants.w_star))})
    return report


def _as_mean_trace(traces: Union[Trace, Sequence[Trace]]) -> Trace:
    if isinstance(traces, Trace):
        return traces
    if len(traces) == 1:
        return traces[0]
    return aggregate_traces(traces)


def fit_rate_slope(traces: Union[Trace, Sequence[Trace]], tail_fraction: float = 0.5, x: str = "t") -> float:
    """Least-squares slope of log(squared_distance) against log(t) over the tail checkpoints"""
    if not 0 < tail_fraction <= 1:
        raise HogwildError("INVALID_CONFIG", f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    if x not in ("t", "t_prime"):
        raise HogwildError("INVALID_CONFIG", f"Slope axis must be 't' or 't_prime', got {x}")
    mean = _as_mean_trace(traces)
    xs = getattr(mean, x).astype(float)
    ys = mean.squared_distance

    usable = xs > 0
    xs, ys = xs[usable], ys[usable]
    start = len(xs) - int(math.ceil(tail_fraction * len(xs)))
    xs, ys = xs[start:], ys[start:]

    positive = ys > 0
    if not positive.all():
        logger.warning(f"Excluding {int((~positive).sum())} non-positive distances from the slope fit")
        xs, ys = xs[positive], ys[positive]
    if len(xs) < MIN_SLOPE_POINTS:
        raise HogwildError(
            "TOO_FEW_CHECKPOINTS",
            f"Slope fit needs at least {MIN_SLOPE_POINTS} checkpoints in the tail window, got {len(xs)}"
        )
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def check_envelope_domination(traces: Sequence[Trace], envelope: Callable[[float], float],
                              from_t: float, name: str = "envelope_domination") -> VerificationReport:
    """Seed mean minus 3 standard errors stays below the envelope at every t >= from_t"""
    if len(traces) < MIN_ENVELOPE_SEEDS:
        raise HogwildError(
            "TOO_FEW_SEEDS",
            f"Envelope checks need at least {MIN_ENVELOPE_SEEDS} seeds, got {len(traces)}"
        )
    mean = aggregate_traces(traces)
    errors = standard_errors(traces, "squared_distance")
    gated = mean.t >= from_t
    if not gated.any():
        raise HogwildError("TOO_FEW_CHECKPOINTS", f"No checkpoint at or after t = {from_t}")

    t_values = mean.t[gated]
    lower = (mean.squared_distance - 3.0 * errors)[gated]
    bounds = np.array([envelope(float(t)) for t in t_values])
    margins = bounds - lower
    failing = np.flatnonzero(margins < 0)
    report = VerificationReport(
        name=name,
        population=f"{len(traces)} seeds, {len(t_values)} checkpoints from t = {from_t:g}",
        passed=len(failing) == 0,
        worst_margin=float(margins.min()),
        tolerance=0.0,
        details=[
            {"t": int(t_values[k]), "mean_minus_3se": float(lower[k]), "envelope": float(bounds[k])}
            for k in failing[:20]
        ],
    )
    logger.log(logging.INFO if report.passed else logging.WARNING,
               f"{name}: {'pass' if report.passed else 'FAIL'}, worst margin {report.worst_margin:.3e}")
    return report


def run_battery(obj: Objective, constants: ProblemConstants, partitions: Sequence[FilterPartition],
                w0: np.ndarray, probe_count: int = 200, seed: int = 0) -> List[VerificationReport]:
    """Every exact check on one objective"""
    probes = make_probe_points(constants, w0, probe_count, seed)
    reports = []
    if constants.convex_realizations:
        reports.append(check_variance_bound_convex(obj, constants, probes))
    reports.append(check_variance_bound_general(obj, constants, probes))
    reports.append(check_strong_convexity(obj, constants, probes))
    reports.append(check_gradient_growth(obj, constants, probes))
    for partition in partitions:
        reports.append(check_filter_unbiased(partition, obj, probes[:3]))
    pair_probes = probes[:min(len(probes), 12)]
    pairs = [(constants.w_star, constants.w_star)] + list(zip(pair_probes[:-1], pair_probes[1:]))
    reports.append(check_collision_inequality(obj, pairs))
    return reports
