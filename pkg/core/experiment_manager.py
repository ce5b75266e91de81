# experiment_manager.py

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .data_io import (RunManifest, SyntheticSpec, generate_synthetic, load_libsvm, read_document,
                      write_document, write_trace_csv)
from .delay_simulator import DelayModel, MaskPolicy, run_sequential
from .errors import HogwildError
from .filters import FilterPartition, SparsityStats, build_partition, fraction_to_blocks, sparsity_stats
from .parallel_engine import ParallelConfig, run_parallel
from .problem import Dataset, Objective, ProblemConstants, compute_constants
from .schedules import (SGD_KINDS, BoundReport, StepSchedule, make_schedule, tau_growth_cap, thresholds,
                        validate_sufficient_conditions)
from .states import (CounterMode, EngineKind, MaskPolicyKind, ObjectiveKind, RegularizationMode,
                     ScheduleKind)
from .trace import Trace, aggregate_traces, geometric_checkpoints, summarize, uniform_checkpoints
from .verify import (VerificationReport, check_envelope_domination, fit_rate_slope, run_battery,
                     MIN_ENVELOPE_SEEDS)

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("cell_id", "v", "D", "tau", "P", "final_gap", "slope", "envelope_pass")
SWEEP_TRACE_COLUMNS = ("cell_id", "v", "D", "tau", "P", "t", "t_prime", "objective_gap", "squared_distance")


@dataclass
class RunConfig:
    """Everything a command needs; built by the CLI, validated before use"""
    command: str = "run"
    dataset: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    dimension: Optional[int] = None
    subsample: Optional[int] = None
    normalize: bool = False
    objective: ObjectiveKind = ObjectiveKind.LOGISTIC_L2
    lam: Union[str, float] = "auto"
    regularization: RegularizationMode = RegularizationMode.SUPPORT_WEIGHTED
    schedule: ScheduleKind = ScheduleKind.HOGWILD
    alpha: Optional[float] = None
    alpha_t_low: float = 4.0
    E: Optional[float] = None
    eta: Optional[float] = None
    tau: Optional[int] = None
    growth: bool = False
    D: Optional[int] = None
    fraction: Optional[float] = None
    mask_policy: Optional[MaskPolicyKind] = None
    mask_probability: float = 0.5
    engine: EngineKind = EngineKind.SEQUENTIAL
    threads: int = 1
    counter_mode: CounterMode = CounterMode.SHARED_ATOMIC
    tau_factor: int = 2
    iterations: Optional[int] = None
    epochs: Optional[float] = None
    seeds: List[int] = field(default_factory=lambda: [1])
    checkpoint_every: Optional[int] = None
    checkpoint_ratio: float = 1.3
    output_dir: str = "./runs"
    partition_seed: int = 0
    l_scale: float = 1.0
    reference_tol: float = 1e-8
    reference_max_iter: int = 1_000_000
    probe_count: int = 200
    tail_fraction: float = 0.5
    fractions: List[float] = field(default_factory=list)
    taus: List[int] = field(default_factory=list)
    at_t: List[int] = field(default_factory=list)

    def validate(self) -> None:
        if self.command not in ("run", "bounds", "verify", "sweep", "constants"):
            raise HogwildError("INVALID_CONFIG", f"Unknown command: {self.command}")
        if self.objective == ObjectiveKind.TOY_QUADRATIC:
            if self.dataset or self.synthetic:
                raise HogwildError("INVALID_CONFIG", "The toy objective takes no dataset")
        elif (self.dataset is None) == (self.synthetic is None):
            raise HogwildError("INVALID_CONFIG", "Give exactly one of --dataset or --synthetic")
        if self.D is not None and self.fraction is not None:
            raise HogwildError("INVALID_CONFIG", "Give either D or the fraction v, not both")
        if self.D is not None and self.D < 1:
            raise HogwildError("INVALID_CONFIG", f"D must be >= 1, got {self.D}")
        if self.fraction is not None:
            fraction_to_blocks(self.fraction)
        if self.tau is not None and self.tau < 0:
            raise HogwildError("INVALID_CONFIG", f"tau must be >= 0, got {self.tau}")
        if self.engine == EngineKind.PARALLEL:
            if self.mask_policy is not None:
                raise HogwildError("INVALID_CONFIG", "The parallel engine has real reads; mask policies do not apply")
            if self.growth:
                raise HogwildError("INVALID_CONFIG", "The growing-delay regime is simulator-only")
            if self.threads < 1:
                raise HogwildError("INVALID_CONFIG", f"threads must be >= 1, got {self.threads}")
        if self.iterations is not None and self.epochs is not None:
            raise HogwildError("INVALID_CONFIG", "Give either iterations or epochs, not both")
        if self.command in ("run", "sweep") and self.iterations is None and self.epochs is None:
            raise HogwildError("INVALID_CONFIG", f"{self.command} needs --iterations or --epochs")
        if self.iterations is not None and self.iterations < 1:
            raise HogwildError("INVALID_CONFIG", f"iterations must be >= 1, got {self.iterations}")
        if self.epochs is not None and self.epochs <= 0:
            raise HogwildError("INVALID_CONFIG", f"epochs must be > 0, got {self.epochs}")
        if not self.seeds:
            raise HogwildError("INVALID_CONFIG", "At least one seed is required")
        if self.l_scale <= 0:
            raise HogwildError("INVALID_CONFIG", f"l-scale must be > 0, got {self.l_scale}")
        if isinstance(self.lam, str) and self.lam != "auto":
            raise HogwildError("INVALID_CONFIG", f"lambda must be a number or 'auto', got {self.lam}")
        if self.command == "sweep" and not (self.fractions or self.taus):
            raise HogwildError("INVALID_CONFIG", "Sweep grid is empty: give --fractions and/or --taus")

    @property
    def blocks(self) -> int:
        if self.D is not None:
            return self.D
        if self.fraction is not None:
            return fraction_to_blocks(self.fraction)
        return 1


@dataclass
class Problem:
    objective: Objective
    constants: ProblemConstants
    dataset_info: Dict


@dataclass
class PreparedRun:
    problem: Problem
    partition: FilterPartition
    stats: SparsityStats
    schedule: StepSchedule
    tau: int
    iterations: int
    checkpoints: np.ndarray
    checkpoint_spec: Dict
    w0: np.ndarray
    manifest: RunManifest


class ExperimentManager:
    """Builds problems, runs engines over seeds and writes the artifacts of every command"""

    def __init__(self, config):
        self.config = config

    # -- problem construction

    def load_dataset(self, run_config: RunConfig) -> Tuple[Dataset, Dict]:
        if run_config.synthetic is not None:
            dataset = generate_synthetic(run_config.synthetic)
            info = {"source": "synthetic", "spec": run_config.synthetic.as_dict()}
        else:
            dataset = load_libsvm(run_config.dataset, run_config.dimension)
            info = {"source": "libsvm", "path": str(run_config.dataset), "dimension": run_config.dimension}
        if run_config.subsample is not None:
            dataset = dataset.subsample(run_config.subsample, run_config.partition_seed)
            info["subsample"] = run_config.subsample
            info["subsample_seed"] = run_config.partition_seed
        if run_config.normalize:
            dataset = dataset.normalized_l2()
        info.update({
            "normalize": "l2" if run_config.normalize else None,
            "n": dataset.n,
            "d": dataset.dimension,
            "fingerprint": dataset.fingerprint(),
            "label_rule": dataset.label_rule,
        })
        return dataset, info

    def build_problem(self, run_config: RunConfig) -> Problem:
        if run_config.objective == ObjectiveKind.TOY_QUADRATIC:
            objective = Objective.toy_quadratic()
            info = {"source": "toy"}
        else:
            dataset, info = self.load_dataset(run_config)
            lam = 1.0 / dataset.n if run_config.lam == "auto" else float(run_config.lam)
            objective = Objective(run_config.objective, dataset, lam, run_config.regularization)
        logger.info(f"Objective: {objective.describe()}")
        constants = compute_constants(
            objective, run_config.reference_tol, run_config.reference_max_iter, run_config.l_scale
        )
        return Problem(objective, constants, info)

    def _schedule_tau(self, run_config: RunConfig) -> int:
        if run_config.engine == EngineKind.PARALLEL and run_config.tau is None:
            return run_config.tau_factor * run_config.threads
        return run_config.tau or 0

    def _iterations(self, run_config: RunConfig, n: int) -> int:
        if run_config.iterations is not None:
            return run_config.iterations
        if run_config.epochs is not None:
            return max(1, int(round(run_config.epochs * n)))
        raise HogwildError("INVALID_CONFIG", "Iterations are required for this command")

    def _checkpoints(self, run_config: RunConfig, iterations: int) -> Tuple[np.ndarray, Dict]:
        if run_config.checkpoint_every is not None:
            spec = {"kind": "uniform", "every": run_config.checkpoint_every}
            return uniform_checkpoints(iterations, run_config.checkpoint_every), spec
        spec = {"kind": "geometric", "ratio": run_config.checkpoint_ratio}
        return geometric_checkpoints(iterations, run_config.checkpoint_ratio), spec

    def prepare(self, run_config: RunConfig, problem: Problem) -> PreparedRun:
        objective, constants = problem.objective, problem.constants
        D = run_config.blocks
        tau = self._schedule_tau(run_config)
        partition = build_partition(objective, D, run_config.partition_seed)
        stats = sparsity_stats(objective, D)
        schedule = make_schedule(
            run_config.schedule, constants, tau=tau, D=D, alpha=run_config.alpha,
            alpha_t_low=run_config.alpha_t_low, E=run_config.E, eta=run_config.eta
        )
        iterations = self._iterations(run_config, objective.n)
        checkpoints, checkpoint_spec = self._checkpoints(run_config, iterations)
        w0 = np.zeros(objective.dimension)

        if run_config.engine == EngineKind.PARALLEL:
            delay = {"configured_tau": tau, "rule": "observed"}
        else:
            policy = MaskPolicy(run_config.mask_policy or MaskPolicyKind(self.config.MASK_POLICY),
                                run_config.mask_probability)
            delay = DelayModel(tau, policy, run_config.growth).describe()

        manifest = RunManifest(
            objective=objective.describe(),
            schedule=schedule.as_dict(),
            D=D,
            fraction=run_config.fraction,
            delay=delay,
            seeds=list(run_config.seeds),
            engine=run_config.engine.value,
            threads=run_config.threads if run_config.engine == EngineKind.PARALLEL else 1,
            iterations=iterations,
            checkpoints=checkpoint_spec,
            dataset=problem.dataset_info,
            constants=constants.as_dict(),
            sparsity=stats.as_dict(),
            partition_seed=run_config.partition_seed,
            extra={
                "counter_mode": run_config.counter_mode.value,
                "l_scale": run_config.l_scale,
                "reference_max_iter": run_config.reference_max_iter,
            },
        )
        return PreparedRun(problem, partition, stats, schedule, tau, iterations, checkpoints,
                           checkpoint_spec, w0, manifest)

    # -- engines

    def _delay_model(self, manifest: RunManifest) -> DelayModel:
        delay = manifest.delay
        policy = MaskPolicy(MaskPolicyKind(delay["mask_policy"]), delay["mask_probability"])
        return DelayModel(delay["tau"], policy, delay["growth"])

    def run_seed(self, prepared: PreparedRun, seed: int) -> Trace:
        manifest = prepared.manifest
        problem = prepared.problem
        base = manifest.to_dict()
        if manifest.engine == EngineKind.PARALLEL.value:
            parallel_config = ParallelConfig(
                threads=manifest.threads,
                schedule=prepared.schedule,
                total_iterations=prepared.iterations,
                seed_base=seed,
                counter_mode=CounterMode(manifest.extra["counter_mode"]),
                tau=prepared.tau,
                sampler_interval=self.config.SAMPLER_INTERVAL,
                stripes=self.config.ATOMIC_STRIPES,
            )
            trace = run_parallel(problem.objective, prepared.partition, parallel_config, prepared.w0,
                                 problem.constants, prepared.checkpoints, base)
        else:
            trace = run_sequential(problem.objective, prepared.partition, prepared.schedule,
                                   self._delay_model(manifest), prepared.w0, prepared.iterations,
                                   prepared.checkpoints, seed, problem.constants, base)
        logger.info(f"Seed {seed} finished: gap {trace.final_gap:.4e}, distance {trace.final_distance:.4e}")
        return trace

    def run_seeds(self, prepared: PreparedRun) -> List[Trace]:
        return [self.run_seed(prepared, seed) for seed in prepared.manifest.seeds]

    def envelope_start(self, prepared: PreparedRun, bounds: BoundReport) -> float:
        if prepared.schedule.kind in SGD_KINDS:
            return max(bounds.T, prepared.schedule.E)
        return max(bounds.T1, 10.0 * prepared.schedule.E)

    def bound_report(self, prepared: PreparedRun) -> Optional[BoundReport]:
        schedule = prepared.schedule
        if schedule.kind in (ScheduleKind.CONSTANT, ScheduleKind.CUSTOM_DIMINISHING):
            return None
        return thresholds(
            prepared.problem.constants, schedule.alpha, prepared.partition.D, prepared.w0,
            delta=prepared.stats.delta, E=schedule.E, delta_bar_D=prepared.stats.delta_bar_D,
            nonconvex=schedule.kind in (ScheduleKind.SGD_NONCONVEX, ScheduleKind.HOGWILD_NONCONVEX),
        )

    def evaluate(self, prepared: PreparedRun, traces: List[Trace], slope_axis: str = "t",
                 tail_fraction: float = 0.5) -> Dict:
        """Final gap, rate slope and envelope outcome of a set of seed traces"""
        summary = summarize(traces)
        summary["final_objective"] = summary["final_gap"] + prepared.problem.constants.F_star
        try:
            summary["slope"] = fit_rate_slope(traces, tail_fraction, slope_axis)
        except HogwildError as e:
            logger.warning(f"Slope not fitted: {e.message}")
            summary["slope"] = None

        summary["envelope_pass"] = None
        bounds = self.bound_report(prepared)
        if bounds is not None and len(traces) >= MIN_ENVELOPE_SEEDS:
            try:
                report = check_envelope_domination(traces, bounds.envelope, self.envelope_start(prepared, bounds))
                summary["envelope_pass"] = report.passed
                summary["envelope"] = report.as_dict()
            except HogwildError as e:
                logger.warning(f"Envelope not checked: {e.message}")
        return summary

    # -- commands

    def cmd_run(self, run_config: RunConfig) -> Dict:
        run_config.validate()
        problem = self.build_problem(run_config)
        prepared = self.prepare(run_config, problem)
        output = Path(run_config.output_dir)
        logger.info(f"Running {len(run_config.seeds)} seeds x {prepared.iterations} iterations "
                    f"({run_config.engine.value} engine) into {output}")

        traces = self.run_seeds(prepared)
        files = [str(write_trace_csv(trace, output / f"seed_{trace.seed}.csv")) for trace in traces]
        mean = aggregate_traces(traces)
        files.append(str(write_trace_csv(mean, output / "mean.csv")))

        summary = self.evaluate(prepared, traces, "t", run_config.tail_fraction)
        summary["lambda"] = problem.objective.lam
        if run_config.engine == EngineKind.PARALLEL:
            summary["observed_tau"] = max(trace.manifest["observed_tau"] for trace in traces)
            summary["configured_tau"] = prepared.tau
        write_document("run_manifest", prepared.manifest.to_dict(), output / "manifest.json")
        write_document("run_summary", summary, output / "summary.json")
        summary["files"] = files
        return summary

    def replay(self, manifest_source: Union[str, Path, Dict], seed: Optional[int] = None) -> Trace:
        """Re-run one seed of a sequential run from its manifest alone"""
        data = manifest_source if isinstance(manifest_source, dict) else read_document(manifest_source)
        manifest = RunManifest.from_dict(data)
        if manifest.engine != EngineKind.SEQUENTIAL.value:
            raise HogwildError("INVALID_CONFIG", "Only sequential runs replay bit-exactly")
        run_config = self._config_from_manifest(manifest)
        problem = self.build_problem(run_config)
        if problem.dataset_info.get("fingerprint") != manifest.dataset.get("fingerprint"):
            raise HogwildError("INVALID_CONFIG", "Dataset content differs from the one recorded in the manifest")
        prepared = self.prepare(run_config, problem)
        if prepared.schedule.as_dict() != manifest.schedule:
            raise HogwildError("SCHEDULE_MISMATCH", "Rebuilt schedule differs from the recorded one")
        if seed is None:
            seed = data.get("seed", manifest.seeds[0])
        return self.run_seed(prepared, seed)

    def _config_from_manifest(self, manifest: RunManifest) -> RunConfig:
        dataset = manifest.dataset
        schedule = manifest.schedule
        delay = manifest.delay
        kind = ScheduleKind(schedule["kind"])
        run_config = RunConfig(
            objective=ObjectiveKind(manifest.objective["kind"]),
            lam=manifest.objective["lambda"],
            regularization=RegularizationMode(manifest.objective["regularization_mode"]),
            schedule=kind,
            alpha=schedule["alpha"] if kind != ScheduleKind.CONSTANT else None,
            alpha_t_low=schedule["alpha_t_low"] if kind in (ScheduleKind.HOGWILD, ScheduleKind.HOGWILD_NONCONVEX) else 4.0,
            E=schedule["E"] if kind in (ScheduleKind.EXP_PERIOD, ScheduleKind.CUSTOM_DIMINISHING) else None,
            eta=schedule["eta_constant"],
            tau=delay["tau"],
            growth=delay["growth"],
            D=manifest.D,
            mask_policy=MaskPolicyKind(delay["mask_policy"]),
            mask_probability=delay["mask_probability"],
            iterations=manifest.iterations,
            seeds=list(manifest.seeds),
            partition_seed=manifest.partition_seed,
            l_scale=manifest.extra.get("l_scale", 1.0),
            reference_tol=manifest.constants["reference_tol"],
            reference_max_iter=manifest.extra.get("reference_max_iter", 1_000_000),
        )
        if manifest.checkpoints["kind"] == "uniform":
            run_config.checkpoint_every = manifest.checkpoints["every"]
        else:
            run_config.checkpoint_ratio = manifest.checkpoints["ratio"]
        if dataset["source"] == "synthetic":
            spec = dataset["spec"]
            run_config.synthetic = SyntheticSpec(spec["n"], spec["d"], spec["s"], spec["p"], spec["seed"])
        elif dataset["source"] == "libsvm":
            run_config.dataset = dataset["path"]
            run_config.dimension = dataset.get("dimension")
        if "subsample" in dataset:
            run_config.subsample = dataset["subsample"]
        run_config.normalize = dataset.get("normalize") == "l2"
        return run_config

    def cmd_bounds(self, run_config: RunConfig) -> Dict:
        run_config.validate()
        problem = self.build_problem(run_config)
        if run_config.iterations is None and run_config.epochs is None:
            run_config = replace(run_config, iterations=50 * problem.objective.n)
        prepared = self.prepare(run_config, problem)
        bounds = self.bound_report(prepared)
        if bounds is None:
            raise HogwildError("INVALID_CONFIG", f"{prepared.schedule.kind.value} steps carry no certified envelope")

        conditions = validate_sufficient_conditions(prepared.schedule, problem.constants, prepared.iterations)
        at_t = run_config.at_t or [prepared.iterations]
        tau_caps = {}
        for t in at_t:
            tau_caps[str(t)] = tau_growth_cap(t) if t > 2 else None

        # the SGD envelope starts at T, the Hogwild leading term at t = 1
        first_t = max(bounds.T, 1.0) if prepared.schedule.kind in SGD_KINDS else 1.0
        envelope_rows = [
            {"t": int(t), "t_prime": float(t * prepared.stats.delta_bar_D / prepared.partition.D),
             "envelope": float(bounds.envelope(float(t)))}
            for t in prepared.checkpoints if t >= first_t
        ]
        table = {
            "constants": problem.constants.as_dict(),
            "sparsity": prepared.stats.as_dict(),
            "schedule": prepared.schedule.as_dict(),
            "E": prepared.schedule.E,
            "eta0": prepared.schedule.eta0,
            "bounds": bounds.as_dict(),
            "conditions": {
                "passed": conditions.passed,
                "step_bound": conditions.step_bound,
                "failures": conditions.failures,
            },
            "tau_growth_cap": tau_caps,
            "envelope": envelope_rows,
        }
        output = Path(run_config.output_dir)
        write_document("bounds", table, output / "bounds.json")
        self._write_rows(output / "envelope.csv", ("t", "t_prime", "envelope"), envelope_rows)
        return table

    def cmd_constants(self, run_config: RunConfig) -> Dict:
        run_config.validate()
        problem = self.build_problem(run_config)
        stats = sparsity_stats(problem.objective, run_config.blocks)
        return {
            "objective": problem.objective.describe(),
            "dataset": problem.dataset_info,
            "constants": problem.constants.as_dict(),
            "sparsity": stats.as_dict(),
        }

    def cmd_verify(self, run_config: RunConfig) -> Tuple[List[VerificationReport], bool]:
        run_config.validate()
        problem = self.build_problem(run_config)
        objective = problem.objective
        delta_bar = int(objective.support_sizes.max())
        blocks = sorted({1, 2, 3, delta_bar, run_config.blocks})
        partitions = [build_partition(objective, D, run_config.partition_seed) for D in blocks]
        reports = run_battery(objective, problem.constants, partitions, np.zeros(objective.dimension),
                              run_config.probe_count, run_config.partition_seed)
        passed = all(report.passed for report in reports if report.gated)
        write_document(
            "verification",
            {"passed": passed, "constants": problem.constants.as_dict(),
             "reports": [report.as_dict() for report in reports]},
            Path(run_config.output_dir) / "verify.json"
        )
        return reports, passed

    def cmd_sweep(self, run_config: RunConfig) -> Dict:
        """Cross product of fractions v and delays tau; failed cells are recorded and skipped"""
        run_config.validate()
        problem = self.build_problem(run_config)
        fractions = run_config.fractions or [run_config.fraction]
        taus = run_config.taus or [run_config.tau]
        output = Path(run_config.output_dir)

        rows, long_rows, cells = [], [], []
        for cell_id, (fraction, tau) in enumerate((v, tau) for v in fractions for tau in taus):
            cell_config = replace(run_config, fraction=fraction, tau=tau, D=None if fraction is not None else run_config.D)
            P = run_config.threads if run_config.engine == EngineKind.PARALLEL else 1
            row = {"cell_id": cell_id, "v": fraction, "D": None, "tau": tau, "P": P,
                   "final_gap": None, "slope": None, "envelope_pass": None}
            try:
                D = row["D"] = cell_config.blocks
                logger.info(f"Sweep cell {cell_id}: v={fraction}, D={D}, tau={tau}, P={P}")
                prepared = self.prepare(cell_config, problem)
                traces = self.run_seeds(prepared)
                mean = aggregate_traces(traces)
                write_trace_csv(mean, output / f"cell_{cell_id}.csv")
                summary = self.evaluate(prepared, traces, "t_prime", run_config.tail_fraction)
                row.update({"final_gap": summary["final_gap"], "slope": summary["slope"],
                            "envelope_pass": summary["envelope_pass"]})
                for k in range(len(mean)):
                    long_rows.append({
                        "cell_id": cell_id, "v": fraction, "D": D, "tau": tau, "P": P,
                        "t": int(mean.t[k]), "t_prime": float(mean.t_prime[k]),
                        "objective_gap": float(mean.objective_gap[k]),
                        "squared_distance": float(mean.squared_distance[k]),
                    })
                cells.append({**row, "status": "ok", "summary": summary,
                              "manifest": prepared.manifest.to_dict()})
            except HogwildError as e:
                logger.warning(f"Sweep cell {cell_id} failed: [{e.code}] {e.message}")
                cells.append({**row, "status": "failed", "error": {"code": e.code, "message": e.message}})
            rows.append(row)

        self._write_rows(output / "sweep_traces.csv", SWEEP_TRACE_COLUMNS, long_rows)
        self._write_rows(output / "sweep_summary.csv", SUMMARY_COLUMNS, rows)
        failed = sum(1 for cell in cells if cell["status"] == "failed")
        result = {"cells": cells, "failed": failed, "F_star": problem.constants.F_star}
        write_document("sweep_summary", result, output / "sweep_summary.json")
        return result

    def _write_rows(self, path: Path, columns, rows: List[Dict]) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=list(columns))
                writer.writeheader()
                for row in rows:
                    writer.writerow({key: ("" if row.get(key) is None else row.get(key)) for key in columns})
        except OSError as e:
            raise HogwildError("IO_ERROR", f"Failed to write {path}: {e}")
        logger.info(f"Wrote {len(rows)} rows to {path}")
