import numpy as np
import pytest

from config import Config
from core.data_io import SyntheticSpec, generate_synthetic
from core.delay_simulator import DelayModel, MaskPolicy, run_sequential
from core.experiment_manager import ExperimentManager, RunConfig
from core.filters import build_partition, fraction_to_blocks
from core.parallel_engine import ParallelConfig, run_parallel
from core.problem import Objective, ProblemConstants, compute_constants
from core.schedules import make_schedule, sgd_envelope, thresholds
from core.states import CounterMode, MaskPolicyKind, ObjectiveKind, ScheduleKind
from core.trace import aggregate_traces, geometric_checkpoints
from core.verify import check_envelope_domination, fit_rate_slope

pytestmark = pytest.mark.slow

FRACTIONS = (1.0, 3 / 4, 2 / 3, 1 / 2, 1 / 3, 1 / 4)
EPOCHS = 50
SEEDS = range(10)
# tail window of the slope fit starts well past E for every D in the fraction sweep
TAIL_FRACTION = 0.3


@pytest.fixture(scope="module")
def toy_sgd_traces():
    toy = Objective.toy_quadratic()
    constants = ProblemConstants(L=1.0, mu=0.5, kappa=2.0, N=2.0, w_star=np.array([-1.0]), F_star=-0.25)
    schedule = make_schedule(ScheduleKind.SGD_CONVEX, constants)
    partition = build_partition(toy, 1, 0)
    checkpoints = geometric_checkpoints(20000)
    traces = [
        run_sequential(toy, partition, schedule, DelayModel(0), np.zeros(1), 20000, checkpoints, seed, constants)
        for seed in range(30)
    ]
    return constants, schedule, traces


@pytest.fixture(scope="module")
def conditioned():
    """Unit-norm rows with half the coordinates in every support, so kappa stays near 3"""
    dataset = generate_synthetic(SyntheticSpec(n=200, d=100, s=50, noise=0.05, seed=21)).normalized_l2()
    objective = Objective.logistic(dataset, lam=0.5)
    return objective, compute_constants(objective, tol=1e-10)


def hogwild_traces(objective, constants, D, tau, seeds=SEEDS):
    iterations = EPOCHS * objective.n
    schedule = make_schedule(ScheduleKind.HOGWILD, constants, tau=tau, D=D)
    partition = build_partition(objective, D, 0)
    w0 = np.ones(objective.dimension)
    checkpoints = geometric_checkpoints(iterations)
    traces = [
        run_sequential(objective, partition, schedule,
                       DelayModel(tau, MaskPolicy(MaskPolicyKind.BERNOULLI, 0.5)),
                       w0, iterations, checkpoints, seed, constants)
        for seed in seeds
    ]
    return schedule, traces


@pytest.fixture(scope="module")
def fraction_sweep(conditioned):
    objective, constants = conditioned
    runs = {}
    for D in sorted({fraction_to_blocks(v) for v in FRACTIONS}):
        runs[D] = hogwild_traces(objective, constants, D, tau=10)
    return runs


def test_toy_sgd_stays_under_its_envelope(toy_sgd_traces):
    constants, schedule, traces = toy_sgd_traces
    report = check_envelope_domination(traces, lambda t: sgd_envelope(constants, 2.0, t), from_t=schedule.E)
    assert report.passed


def test_toy_sgd_rate_is_one_over_t(toy_sgd_traces):
    _, _, traces = toy_sgd_traces
    assert -1.3 <= fit_rate_slope(traces) <= -0.7


def test_run_command_reports_envelope(tmp_path):
    config = RunConfig(objective=ObjectiveKind.TOY_QUADRATIC, schedule=ScheduleKind.SGD_CONVEX,
                       iterations=20000, seeds=list(range(1, 11)), output_dir=str(tmp_path))
    summary = ExperimentManager(Config).cmd_run(config)
    assert summary["envelope_pass"] is True
    assert summary["slope"] < -0.5


class TestSequentialHogwild:
    def test_logistic_rate_is_one_over_t(self, fraction_sweep):
        _, traces = fraction_sweep[1]
        assert -1.3 <= fit_rate_slope(traces, TAIL_FRACTION) <= -0.7

    def test_stays_under_the_leading_term(self, conditioned, fraction_sweep):
        objective, constants = conditioned
        schedule, traces = fraction_sweep[1]
        bounds = thresholds(constants, schedule.alpha, 1, np.ones(objective.dimension), E=schedule.E)
        report = check_envelope_domination(traces, bounds.envelope, from_t=max(bounds.T1, 10 * schedule.E))
        assert report.passed, report.details

    @pytest.mark.parametrize("fraction", FRACTIONS)
    def test_every_fraction_converges_at_one_over_t_prime(self, fraction_sweep, fraction):
        _, traces = fraction_sweep[fraction_to_blocks(fraction)]
        mean = aggregate_traces(traces)
        assert mean.objective_gap[-1] < 0.1 * mean.objective_gap[0]
        assert -1.3 <= fit_rate_slope(traces, TAIL_FRACTION, x="t_prime") <= -0.7

    def test_delay_up_to_a_hundred_barely_matters(self, conditioned):
        objective, constants = conditioned
        gaps = []
        for tau in (1, 10, 100):
            _, traces = hogwild_traces(objective, constants, 1, tau)
            gaps.append(aggregate_traces(traces).objective_gap[-1])
        assert (max(gaps) - min(gaps)) / np.mean(gaps) < 0.1, gaps


@pytest.fixture(scope="module")
def sparse_problem():
    dataset = generate_synthetic(SyntheticSpec(n=500, d=100, s=20, noise=0.05, seed=13)).normalized_l2()
    objective = Objective.logistic(dataset, lam=0.5)
    constants = compute_constants(objective, tol=1e-10)
    schedule = make_schedule(ScheduleKind.EXP_PERIOD, constants, tau=16)
    return objective, constants, schedule, build_partition(objective, 1, 0)


PARALLEL_ITERATIONS = 3000


def parallel_distances(sparse_problem, threads, seeds, counter_mode=CounterMode.SHARED_ATOMIC):
    objective, constants, schedule, partition = sparse_problem
    w0 = np.zeros(objective.dimension)
    checkpoints = np.array([0, PARALLEL_ITERATIONS])
    # worker k draws from seed_base + k, so seed bases stay 100 apart
    return [
        run_parallel(objective, partition,
                     ParallelConfig(threads, schedule, PARALLEL_ITERATIONS, 100 * seed, counter_mode),
                     w0, constants, checkpoints).final_distance
        for seed in seeds
    ]


class TestParallelHogwild:
    def test_thread_count_leaves_the_final_distance_alone(self, sparse_problem):
        objective, constants, schedule, partition = sparse_problem
        seeds = range(20)
        w0 = np.zeros(objective.dimension)
        sequential = [
            run_sequential(objective, partition, schedule, DelayModel(0, MaskPolicy(MaskPolicyKind.ALL_INCLUDED)),
                           w0, PARALLEL_ITERATIONS, np.array([0, PARALLEL_ITERATIONS]), 100 * seed,
                           constants).final_distance
            for seed in seeds
        ]
        single = parallel_distances(sparse_problem, 1, seeds)
        assert single == sequential

        reference = float(np.mean(single))
        for threads in (2, 4, 8):
            assert np.mean(parallel_distances(sparse_problem, threads, seeds)) == pytest.approx(reference, rel=0.2)

    def test_local_counters_track_the_shared_counter(self, sparse_problem):
        seeds = range(80)
        shared = np.mean(parallel_distances(sparse_problem, 4, seeds))
        local = np.mean(parallel_distances(sparse_problem, 4, seeds, CounterMode.LOCAL_ESTIMATE))
        assert local == pytest.approx(shared, rel=0.1)
