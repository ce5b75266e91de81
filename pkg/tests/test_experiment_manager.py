import csv
import json

import pytest

from config import Config
from core.data_io import SyntheticSpec, read_document, read_trace_csv
from core.errors import HogwildError
from core.experiment_manager import SUMMARY_COLUMNS, ExperimentManager, RunConfig
from core.schedules import hogwild_envelope
from core.states import EngineKind, MaskPolicyKind, ObjectiveKind, ScheduleKind
from main import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VERIFICATION, main

SYNTHETIC = "n=200,d=20,s=4,p=0.05,seed=3"


@pytest.fixture
def manager():
    return ExperimentManager(Config)


def synthetic_config(tmp_path, **overrides):
    values = dict(
        synthetic=SyntheticSpec.parse(SYNTHETIC),
        schedule=ScheduleKind.HOGWILD,
        tau=3,
        D=2,
        iterations=400,
        seeds=[1, 2, 3],
        output_dir=str(tmp_path),
    )
    values.update(overrides)
    return RunConfig(**values)


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class TestRunConfig:
    @pytest.mark.parametrize("overrides", [
        {"synthetic": None},
        {"D": 2, "fraction": 0.5},
        {"D": 0},
        {"iterations": None},
        {"iterations": 10, "epochs": 1.0},
        {"seeds": []},
        {"l_scale": 0.0},
        {"lam": "often"},
        {"engine": EngineKind.PARALLEL, "mask_policy": MaskPolicyKind.ALL_INCLUDED},
        {"engine": EngineKind.PARALLEL, "growth": True},
    ])
    def test_rejected(self, tmp_path, overrides):
        with pytest.raises(HogwildError) as excinfo:
            synthetic_config(tmp_path, **overrides).validate()
        assert excinfo.value.code == "INVALID_CONFIG"

    def test_toy_takes_no_dataset(self, tmp_path):
        with pytest.raises(HogwildError):
            synthetic_config(tmp_path, objective=ObjectiveKind.TOY_QUADRATIC).validate()

    def test_empty_sweep_grid(self, tmp_path):
        with pytest.raises(HogwildError):
            synthetic_config(tmp_path, command="sweep").validate()

    def test_blocks(self, tmp_path):
        assert synthetic_config(tmp_path, D=None, fraction=1 / 3).blocks == 3
        assert synthetic_config(tmp_path, D=None).blocks == 1


class TestExperimentManager:
    def test_auto_lambda(self, manager, tmp_path):
        problem = manager.build_problem(synthetic_config(tmp_path))
        assert problem.objective.lam == pytest.approx(1 / 200)
        assert problem.dataset_info["fingerprint"]

    def test_epochs(self, manager, tmp_path):
        config = synthetic_config(tmp_path, iterations=None, epochs=1.5)
        prepared = manager.prepare(config, manager.build_problem(config))
        assert prepared.iterations == 300

    def test_run_writes_artifacts(self, manager, tmp_path):
        summary = manager.cmd_run(synthetic_config(tmp_path))
        for name in ("seed_1.csv", "seed_2.csv", "seed_3.csv", "mean.csv", "manifest.json", "summary.json"):
            assert (tmp_path / name).exists()
        assert summary["seeds"] == 3
        assert summary["final_t"] == 400
        assert summary["envelope_pass"] is None
        assert read_trace_csv(tmp_path / "mean.csv").aggregated
        payload = read_document(tmp_path / "manifest.json", "run_manifest")
        assert payload["seeds"] == [1, 2, 3]
        assert payload["delay"]["tau"] == 3

    def test_replay_from_trace_manifest(self, manager, tmp_path):
        manager.cmd_run(synthetic_config(tmp_path))
        replayed = manager.replay(tmp_path / "seed_2.manifest.json")
        assert replayed.same_data(read_trace_csv(tmp_path / "seed_2.csv"))

    def test_replay_from_run_manifest(self, manager, tmp_path):
        manager.cmd_run(synthetic_config(tmp_path, schedule=ScheduleKind.EXP_PERIOD, checkpoint_every=50))
        replayed = manager.replay(tmp_path / "manifest.json")
        assert replayed.same_data(read_trace_csv(tmp_path / "seed_1.csv"))

    def test_replay_detects_schedule_tampering(self, manager, tmp_path):
        manager.cmd_run(synthetic_config(tmp_path))
        data = read_document(tmp_path / "manifest.json")
        data["schedule"]["E"] += 1.0
        with pytest.raises(HogwildError) as excinfo:
            manager.replay(data)
        assert excinfo.value.code == "SCHEDULE_MISMATCH"

    def test_replay_detects_other_data(self, manager, tmp_path):
        manager.cmd_run(synthetic_config(tmp_path))
        data = read_document(tmp_path / "manifest.json")
        data["dataset"]["fingerprint"] = "0" * 64
        with pytest.raises(HogwildError) as excinfo:
            manager.replay(data)
        assert excinfo.value.code == "INVALID_CONFIG"

    def test_parallel_run(self, manager, tmp_path):
        config = synthetic_config(tmp_path, engine=EngineKind.PARALLEL, threads=2, tau=None, seeds=[1])
        summary = manager.cmd_run(config)
        assert summary["configured_tau"] == 4
        assert summary["observed_tau"] >= 0
        with pytest.raises(HogwildError):
            manager.replay(tmp_path / "manifest.json")

    def test_bounds_toy(self, manager, tmp_path):
        config = RunConfig(command="bounds", objective=ObjectiveKind.TOY_QUADRATIC,
                           schedule=ScheduleKind.SGD_CONVEX, output_dir=str(tmp_path))
        table = manager.cmd_bounds(config)
        assert table["E"] == pytest.approx(8.0)
        assert table["eta0"] == pytest.approx(0.5)
        assert table["conditions"]["passed"]
        assert (tmp_path / "bounds.json").exists()
        rows = read_rows(tmp_path / "envelope.csv")
        assert rows and float(rows[0]["t"]) >= 1

    @pytest.mark.parametrize("schedule, alpha", [(ScheduleKind.HOGWILD, 8.0), (ScheduleKind.EXP_PERIOD, None)])
    def test_envelope_uses_the_upper_alpha(self, manager, tmp_path, schedule, alpha):
        config = RunConfig(command="bounds", objective=ObjectiveKind.TOY_QUADRATIC, schedule=schedule,
                           alpha=alpha, tau=1, iterations=1000, output_dir=str(tmp_path))
        prepared = manager.prepare(config, manager.build_problem(config))
        constants = prepared.problem.constants
        bounds = manager.bound_report(prepared)
        assert bounds.leading_constant == pytest.approx(4 * 64 * constants.N / constants.mu ** 2)
        assert bounds.envelope(1000.0) == pytest.approx(
            hogwild_envelope(constants, 8.0, 1, prepared.schedule.E, 1000.0))
        distance = float(constants.w_star @ constants.w_star)
        assert bounds.T1 == pytest.approx(constants.mu ** 2 / (64 * constants.N) * distance)

    def test_bounds_need_a_certified_schedule(self, manager, tmp_path):
        config = RunConfig(command="bounds", objective=ObjectiveKind.TOY_QUADRATIC,
                           schedule=ScheduleKind.CONSTANT, output_dir=str(tmp_path))
        with pytest.raises(HogwildError):
            manager.cmd_bounds(config)

    def test_constants(self, manager, tmp_path):
        result = manager.cmd_constants(RunConfig(command="constants", objective=ObjectiveKind.TOY_QUADRATIC))
        assert result["constants"]["L"] == 1.0
        assert result["constants"]["mu"] == 0.5
        assert result["constants"]["F_star"] == pytest.approx(-0.25)

    def test_verify_writes_report(self, manager, tmp_path):
        config = synthetic_config(tmp_path, command="verify", probe_count=20, iterations=None)
        reports, passed = manager.cmd_verify(config)
        assert passed
        assert read_document(tmp_path / "verify.json", "verification")["passed"]
        assert sum(report.name == "filter_unbiased" for report in reports) == 4


class TestCommandLine:
    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK

    def test_run(self, tmp_path, capsys):
        code = main(["run", "--objective", "toy", "--schedule", "sgd_convex", "--iterations", "300",
                     "--seeds", "1..2", "--output", str(tmp_path)])
        assert code == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert len(printed["files"]) == 3
        assert (tmp_path / "seed_2.csv").exists()

    def test_unknown_option(self):
        assert main(["run", "--bogus"]) == EXIT_USAGE

    def test_both_block_options(self, tmp_path):
        assert main(["run", "--synthetic", SYNTHETIC, "--D", "2", "--fraction", "1/2", "--iterations", "10",
                     "--output", str(tmp_path)]) == EXIT_USAGE

    def test_missing_horizon(self, tmp_path):
        assert main(["run", "--synthetic", SYNTHETIC, "--output", str(tmp_path)]) == EXIT_USAGE

    def test_missing_dataset_file(self, tmp_path):
        assert main(["constants", "--dataset", str(tmp_path / "absent.svm")]) == EXIT_RUNTIME

    def test_verify_passes(self, tmp_path):
        assert main(["verify", "--objective", "toy", "--probes", "50", "--output", str(tmp_path)]) == EXIT_OK

    def test_verify_catches_bad_L(self, tmp_path):
        assert main(["verify", "--objective", "toy", "--probes", "200", "--l-scale", "0.5",
                     "--output", str(tmp_path)]) == EXIT_VERIFICATION

    def test_bounds(self, tmp_path, capsys):
        code = main(["bounds", "--objective", "toy", "--schedule", "hogwild", "--tau", "10",
                     "--at-t", "4585050,20335450", "--output", str(tmp_path)])
        assert code == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert printed["E"] == 32.0
        assert printed["tau_growth_cap"]["4585050"] == pytest.approx(524, rel=0.02)

    def test_sweep(self, tmp_path):
        code = main(["sweep", "--synthetic", SYNTHETIC, "--fractions", "1,1/2", "--taus", "0,2",
                     "--iterations", "300", "--output", str(tmp_path)])
        assert code == EXIT_OK
        rows = read_rows(tmp_path / "sweep_summary.csv")
        assert len(rows) == 4
        assert tuple(rows[0].keys()) == SUMMARY_COLUMNS
        assert {row["D"] for row in rows} == {"1", "2"}
        assert read_rows(tmp_path / "sweep_traces.csv")
        assert (tmp_path / "cell_3.csv").exists()

    def test_sweep_with_a_failing_cell(self, tmp_path):
        code = main(["sweep", "--synthetic", SYNTHETIC, "--taus=-1,1", "--iterations", "200",
                     "--output", str(tmp_path)])
        assert code == EXIT_RUNTIME
        result = read_document(tmp_path / "sweep_summary.json", "sweep_summary")
        assert result["failed"] == 1
        assert [cell["status"] for cell in result["cells"]] == ["failed", "ok"]


def test_identical_manifests_give_identical_files(manager, tmp_path):
    for name in ("first", "second"):
        manager.cmd_run(synthetic_config(tmp_path / name, seeds=[4]))
    for name in ("seed_4.csv", "mean.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()
