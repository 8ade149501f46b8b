"""实验运行器与命令行"""

import json

import pytest

from main import main
from src.config import AppConfig, ComputeConfig
from src.experiments import (
    EXIT_BUDGET,
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_UNDECIDED,
    EXIT_USAGE,
    Job,
    ExperimentRunner,
    TaskResult,
    TaskStatus,
    aggregate_exit_code,
    dump_csv,
    run_experiment,
    write_atomic,
)
from src.errors import ModelError
from src.gallery import find_instance
from src.model_io import dump_model
from src.periodic_model import Edge, QuotientGraph


@pytest.fixture
def runner(tmp_path):
    return ExperimentRunner(ComputeConfig(), AppConfig(out_dir=tmp_path, max_workers=1))


def _report(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_write_atomic(tmp_path):
    target = tmp_path / "nested" / "report.json"
    write_atomic(target, "first\n")
    write_atomic(target, "second\n")
    assert target.read_text(encoding="utf-8") == "second\n"
    assert [p.name for p in target.parent.iterdir()] == ["report.json"]


def test_dump_csv():
    assert dump_csv([{"k": 0, "count": 1}, {"k": 1, "count": 4}]) == "k,count\n0,1\n1,4\n"
    assert dump_csv([]) == ""


@pytest.mark.parametrize("codes, expected", [
    ([0, 0], EXIT_PASS),
    ([0, 3], EXIT_UNDECIDED),
    ([3, 2], EXIT_FAIL),
    ([2, 4], EXIT_BUDGET),
    ([4, 1], EXIT_USAGE),
])
def test_aggregate_exit_code(codes, expected):
    results = [TaskResult(f"t{i}", TaskStatus.COMPLETED, exit_code=c) for i, c in enumerate(codes)]
    assert aggregate_exit_code(results) == expected


def test_runner_writes_reports(runner, tmp_path, rose2):
    result = runner.run(Job("invariants", rose2, {"radius": 10}))
    assert result.exit_code == EXIT_PASS
    report = _report(tmp_path / "invariants" / "report.json")
    assert report["experiment"] == "invariants"
    assert report["verdict"] == "pass"
    assert report["omega"] == "2"
    assert (tmp_path / "invariants" / "stable_ball.svg").exists()
    assert runner.results == [result]


def test_reports_are_deterministic(tmp_path, cayley3):
    texts = []
    for folder in ("a", "b"):
        runner = ExperimentRunner(ComputeConfig(), AppConfig(out_dir=tmp_path / folder))
        runner.run(Job("qbd-scan", cayley3, {"radius": 12}))
        texts.append([(tmp_path / folder / "qbd-scan" / name).read_text(encoding="utf-8")
                      for name in ("report.json", "table.csv", "deviation.svg")])
    assert texts[0] == texts[1]


def test_qbd_scan_table(runner, tmp_path, cayley3):
    result = runner.run(Job("qbd-scan", cayley3, {"radius": 30}))
    assert result.exit_code == EXIT_PASS
    report = _report(tmp_path / "qbd-scan" / "report.json")
    assert report["max_deviation"] == "4/3"
    lines = (tmp_path / "qbd-scan" / "table.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "gamma,d,stable,deviation,relative_bound,mass,parts"
    assert len(lines) == report["orbit_points"] + 1


def test_invalid_model_exits_with_usage(runner):
    g = QuotientGraph(1, ("v",), (Edge("v", "v", 1, (2,)),), "v")
    result = runner.run(Job("validate", g))
    assert result.exit_code == EXIT_USAGE
    assert result.verdict.value == "fail"


def test_budget_maps_to_exit_code(tmp_path, rose2):
    runner = ExperimentRunner(ComputeConfig(node_budget=50), AppConfig(out_dir=tmp_path))
    result = runner.run(Job("invariants", rose2, {"radius": 20}))
    assert result.exit_code == EXIT_BUDGET
    assert result.status == TaskStatus.FAILED


def test_graph_experiment_needs_graph(runner):
    assert runner.run(Job("annuli", find_instance("linf-2").subject, {"delta": 9, "kmax": 1})).exit_code == EXIT_USAGE
    assert runner.run(Job("no-such-experiment")).exit_code == EXIT_USAGE


def test_margulis_on_normed_lattice(runner, tmp_path):
    result = runner.run(Job("margulis", find_instance("linf-2").subject))
    assert result.exit_code == EXIT_PASS
    report = _report(tmp_path / "margulis" / "report.json")
    assert report["upper"]["equality"] is True


def test_run_experiment_helper(tmp_path):
    result = run_experiment("margulis", find_instance("rose-2").subject, app_config=AppConfig(out_dir=tmp_path))
    assert result.exit_code == EXIT_PASS
    assert (tmp_path / "margulis" / "report.json").exists()


def test_batch_rejects_duplicate_names(runner):
    with pytest.raises(ModelError):
        runner.run_batch([Job("constants"), Job("constants")])


def test_random_batch(tmp_path):
    runner = ExperimentRunner(ComputeConfig(), AppConfig(out_dir=tmp_path, max_workers=2))
    jobs = [Job("random", None, {"seed": s}, label=f"random-{s}") for s in range(3)]
    seen = []
    results = runner.run_batch(jobs, lambda done, total, result: seen.append((done, total)))
    assert [r.name for r in results] == ["random-0", "random-1", "random-2"]
    assert sorted(seen) == [(1, 3), (2, 3), (3, 3)]
    assert (tmp_path / "random-1" / "model.json").exists()


# ==================== 命令行 ====================

def test_cli_gallery_single(tmp_path):
    assert main(["--out", str(tmp_path), "--no-svg", "gallery", "--name", "rose-2"]) == EXIT_PASS
    report = _report(tmp_path / "gallery" / "report.json")
    assert report["matched"] == report["total"] == 4


def test_cli_qbd_scan(tmp_path):
    assert main(["--instance", "cayley-Z-3", "--out", str(tmp_path), "qbd-scan", "--radius", "15"]) == EXIT_PASS
    assert (tmp_path / "qbd-scan" / "table.csv").exists()
    assert (tmp_path / "qbd-scan" / "deviation.svg").exists()


def test_cli_constants(tmp_path):
    code = main(["--out", str(tmp_path), "constants", "--n", "1", "--D", "1", "--Omega", "2", "--sigma", "1"])
    assert code == EXIT_PASS
    report = _report(tmp_path / "constants" / "report.json")
    assert report["c_simplified"]["value"] == "31850496"
    assert report["c_full"]["lo"] == "1474600"
    assert report["almost_isometry_upper"]["value"] == "31850499"


def test_cli_model_file(tmp_path, rose2):
    model = tmp_path / "rose2.json"
    model.write_text(dump_model(rose2), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["--model", str(model), "--out", str(out), "--no-svg", "annuli",
                 "--delta", "9", "--kmax", "2"]) == EXIT_PASS
    assert _report(out / "annuli" / "report.json")["A"] == "36"


def test_cli_annuli_precondition(tmp_path):
    code = main(["--instance", "rose-2", "--out", str(tmp_path), "annuli", "--delta", "8", "--kmax", "1"])
    assert code == EXIT_USAGE


def test_cli_usage_errors(tmp_path):
    assert main(["--out", str(tmp_path), "no-such-command"]) == EXIT_USAGE
    assert main(["--out", str(tmp_path), "annuli"]) == EXIT_USAGE
    assert main(["--model", str(tmp_path / "missing.json"), "--out", str(tmp_path), "validate"]) == EXIT_USAGE
    assert main(["--instance", "rose-2", "--out", str(tmp_path), "constants", "--n", "1",
                 "--D", "0", "--Omega", "1"]) == EXIT_USAGE


def test_cli_random_writes_models(tmp_path):
    assert main(["--out", str(tmp_path), "random", "--seed", "5", "--count", "2"]) == EXIT_PASS
    assert (tmp_path / "random-5" / "model.json").exists()
    assert (tmp_path / "random-6" / "model.json").exists()


def test_cli_bp_demo_dimension_one(tmp_path):
    assert main(["--out", str(tmp_path), "bp-demo", "--dim", "1", "--count", "3"]) == EXIT_PASS
    assert _report(tmp_path / "bp-demo" / "report.json")["all_verified"] is True
