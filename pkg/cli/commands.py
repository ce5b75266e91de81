import argparse
import json
import logging
from fractions import Fraction
from typing import List, Optional

from config import Config
from core.data_io import SyntheticSpec, json_default
from core.errors import HogwildError
from core.experiment_manager import ExperimentManager, RunConfig
from core.states import CounterMode, EngineKind, MaskPolicyKind, ObjectiveKind, RegularizationMode, ScheduleKind

logger = logging.getLogger(__name__)

OBJECTIVES = {
    "logistic": ObjectiveKind.LOGISTIC_L2,
    "least_squares": ObjectiveKind.LEAST_SQUARES_L2,
    "toy": ObjectiveKind.TOY_QUADRATIC,
}


def parse_seeds(text: str) -> List[int]:
    """'1..10' (inclusive) or '1,4,7'"""
    try:
        if ".." in text:
            first, last = text.split("..", 1)
            seeds = list(range(int(first), int(last) + 1))
        else:
            seeds = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise HogwildError("INVALID_CONFIG", f"Cannot read seeds from '{text}'")
    if not seeds:
        raise HogwildError("INVALID_CONFIG", f"No seeds in '{text}'")
    return seeds


def parse_number_list(text: Optional[str], cast=float) -> List:
    """Comma-separated numbers; fractions such as 3/4 are accepted"""
    if not text:
        return []
    try:
        return [cast(Fraction(item.strip())) for item in text.split(",") if item.strip()]
    except (ValueError, ZeroDivisionError):
        raise HogwildError("INVALID_CONFIG", f"Cannot read a number list from '{text}'")


def parse_lambda(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise HogwildError("INVALID_CONFIG", f"lambda must be a number or 'auto', got '{text}'")


def _add_problem_arguments(parser: argparse.ArgumentParser) -> None:
    data = parser.add_mutually_exclusive_group()
    data.add_argument("--dataset", help="LIBSVM file")
    data.add_argument("--synthetic", help="synthetic spec, e.g. n=1000,d=50,s=5,p=0.05,seed=7")
    parser.add_argument("--dimension", type=int, help="override d upward (companion test split)")
    parser.add_argument("--subsample", type=int, help="keep this many rows")
    parser.add_argument("--normalize", choices=["l2"], help="scale every sample to unit norm")
    parser.add_argument("--objective", choices=sorted(OBJECTIVES), default="logistic")
    parser.add_argument("--lambda", dest="lam", default="auto", help="number or 'auto' (= 1/n)")
    parser.add_argument("--regularization", choices=[m.value for m in RegularizationMode],
                        default=RegularizationMode.SUPPORT_WEIGHTED.value)
    parser.add_argument("--l-scale", type=float, default=1.0, help="multiply the estimated L")
    parser.add_argument("--output", default=Config.OUTPUT_DIR, help="output directory")
    parser.add_argument("--partition-seed", type=int, default=0)


def _add_schedule_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--schedule", choices=[k.value for k in ScheduleKind], default=ScheduleKind.HOGWILD.value)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--alpha-t-low", type=float, default=4.0, help="4, or 12 for growing delay")
    parser.add_argument("--E", dest="E", type=float, help="E override (exp_period, custom_diminishing)")
    parser.add_argument("--eta", type=float, help="fixed step of the constant schedule")
    parser.add_argument("--tau", type=int)
    parser.add_argument("--growth", action="store_true", help="tau(t) = min(tau, sqrt(t L(t)))")
    blocks = parser.add_mutually_exclusive_group()
    blocks.add_argument("--D", dest="D", type=int)
    blocks.add_argument("--fraction", type=lambda text: float(Fraction(text)), help="block fraction v in (0, 1]")
    parser.add_argument("--mask-policy", choices=[m.value for m in MaskPolicyKind])
    parser.add_argument("--mask-probability", type=float, default=Config.MASK_PROBABILITY)
    parser.add_argument("--engine", choices=[e.value for e in EngineKind], default=EngineKind.SEQUENTIAL.value)
    parser.add_argument("--threads", type=int, default=Config.DEFAULT_THREADS)
    parser.add_argument("--counter", choices=[c.value for c in CounterMode], default=CounterMode.SHARED_ATOMIC.value)
    horizon = parser.add_mutually_exclusive_group()
    horizon.add_argument("--iterations", type=int)
    horizon.add_argument("--epochs", type=float, help="one epoch is n iterations")
    parser.add_argument("--seeds", default="1", help="'1..10' or '1,2,3'")
    parser.add_argument("--checkpoint-every", type=int, help="uniform cadence instead of geometric")
    parser.add_argument("--checkpoint-ratio", type=float, default=Config.CHECKPOINT_RATIO)
    parser.add_argument("--tail-fraction", type=float, default=0.5)


def build_run_config(args: argparse.Namespace, command: str) -> RunConfig:
    get = lambda name, default=None: getattr(args, name, default)
    synthetic = SyntheticSpec.parse(args.synthetic) if get("synthetic") else None
    mask_policy = get("mask_policy")
    run_config = RunConfig(
        command=command,
        dataset=get("dataset"),
        synthetic=synthetic,
        dimension=get("dimension"),
        subsample=get("subsample"),
        normalize=get("normalize") == "l2",
        objective=OBJECTIVES[args.objective],
        lam=parse_lambda(args.lam),
        regularization=RegularizationMode(args.regularization),
        schedule=ScheduleKind(get("schedule", ScheduleKind.HOGWILD.value)),
        alpha=get("alpha"),
        alpha_t_low=get("alpha_t_low", 4.0),
        E=get("E"),
        eta=get("eta"),
        tau=get("tau"),
        growth=bool(get("growth", False)),
        D=get("D"),
        fraction=get("fraction"),
        mask_policy=MaskPolicyKind(mask_policy) if mask_policy else None,
        mask_probability=get("mask_probability", Config.MASK_PROBABILITY),
        engine=EngineKind(get("engine", EngineKind.SEQUENTIAL.value)),
        threads=get("threads", 1),
        counter_mode=CounterMode(get("counter", CounterMode.SHARED_ATOMIC.value)),
        tau_factor=Config.TAU_FACTOR,
        iterations=get("iterations"),
        epochs=get("epochs"),
        seeds=parse_seeds(get("seeds", "1")),
        checkpoint_every=get("checkpoint_every"),
        checkpoint_ratio=get("checkpoint_ratio", Config.CHECKPOINT_RATIO),
        output_dir=args.output,
        partition_seed=args.partition_seed,
        l_scale=args.l_scale,
        reference_tol=Config.REFERENCE_TOL,
        reference_max_iter=Config.REFERENCE_MAX_ITER,
        probe_count=get("probes", Config.PROBE_COUNT),
        tail_fraction=get("tail_fraction", 0.5),
        fractions=parse_number_list(get("fractions")),
        taus=parse_number_list(get("taus"), int),
        at_t=parse_number_list(get("at_t"), int),
    )
    run_config.validate()
    return run_config


def _print(result) -> None:
    print(json.dumps(result, indent=2, default=json_default))


def handle_run(args, manager: ExperimentManager) -> int:
    summary = manager.cmd_run(build_run_config(args, "run"))
    _print({key: summary.get(key) for key in
            ("lambda", "final_gap", "final_objective", "final_distance", "slope", "envelope_pass",
             "observed_tau", "configured_tau", "files") if key in summary})
    return 0


def handle_bounds(args, manager: ExperimentManager) -> int:
    table = manager.cmd_bounds(build_run_config(args, "bounds"))
    constants = table["constants"]
    sparsity = table["sparsity"]
    bounds = table["bounds"]
    _print({
        "L": constants["L"], "mu": constants["mu"], "kappa": constants["kappa"], "N": constants["N"],
        "delta_bar": sparsity["delta_bar"], "delta_bar_D": sparsity["delta_bar_D"], "delta": sparsity["delta"],
        "E": table["E"], "T": bounds["T"], "T0": bounds["T0"], "T1": bounds["T1"],
        "tau_growth_cap": table["tau_growth_cap"],
        "leading_constant": bounds["leading_constant"],
        "leading_constant_t_prime": bounds["leading_constant_t_prime"],
        "sgd_leading_constant_t_prime": bounds["sgd_leading_constant_t_prime"],
        "conditions_passed": table["conditions"]["passed"],
    })
    return 0


def handle_verify(args, manager: ExperimentManager) -> int:
    reports, passed = manager.cmd_verify(build_run_config(args, "verify"))
    for report in reports:
        status = "pass" if report.passed else "FAIL"
        print(f"{report.name:<24} {status:<5} worst margin {report.worst_margin: .6e}  ({report.population})")
    if not passed:
        failed = [report.name for report in reports if report.gated and not report.passed]
        raise HogwildError("VERIFICATION_FAILED", f"Checks failed: {', '.join(failed)}", {"failed": failed})
    return 0


def handle_sweep(args, manager: ExperimentManager) -> int:
    result = manager.cmd_sweep(build_run_config(args, "sweep"))
    for cell in result["cells"]:
        print(f"cell {cell['cell_id']}: v={cell['v']} D={cell['D']} tau={cell['tau']} P={cell['P']} "
              f"gap={cell['final_gap']} slope={cell['slope']} envelope={cell['envelope_pass']} [{cell['status']}]")
    return 2 if result["failed"] else 0


def handle_constants(args, manager: ExperimentManager) -> int:
    _print(manager.cmd_constants(build_run_config(args, "constants")))
    return 0


def register_commands(subparsers, manager: ExperimentManager) -> None:
    run = subparsers.add_parser("run", help="run seeds and write traces")
    _add_problem_arguments(run)
    _add_schedule_arguments(run)
    run.set_defaults(handler=handle_run)

    bounds = subparsers.add_parser("bounds", help="constants, thresholds and envelopes")
    _add_problem_arguments(bounds)
    _add_schedule_arguments(bounds)
    bounds.add_argument("--at-t", help="comma-separated t values for the delay growth cap")
    bounds.set_defaults(handler=handle_bounds)

    verify = subparsers.add_parser("verify", help="exact inequality checks")
    _add_problem_arguments(verify)
    verify.add_argument("--D", dest="D", type=int)
    verify.add_argument("--probes", type=int, default=Config.PROBE_COUNT)
    verify.set_defaults(handler=handle_verify)

    sweep = subparsers.add_parser("sweep", help="grid over fractions v and delays tau")
    _add_problem_arguments(sweep)
    _add_schedule_arguments(sweep)
    sweep.add_argument("--fractions", help="e.g. 1,3/4,2/3,1/2,1/3,1/4")
    sweep.add_argument("--taus", help="e.g. 1,10,100")
    sweep.set_defaults(handler=handle_sweep)

    constants = subparsers.add_parser("constants", help="L, mu, kappa, N, F* and sparsity")
    _add_problem_arguments(constants)
    constants.add_argument("--D", dest="D", type=int)
    constants.set_defaults(handler=handle_constants)
