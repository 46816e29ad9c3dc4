import json
import subprocess
import sys
from importlib import resources

import pytest

from lamsym.cli import CORPUS, corpus_reports, main
from lamsym.expr import Const, format_expr
from lamsym.problem import ProblemError, load_problem
from lamsym.runner import RunConfig, report_to_json, report_to_text, run_checks
from fractions import Fraction


def bundled(name: str) -> str:
    with resources.as_file(resources.files("lamsym").joinpath("problems", name)) as p:
        return str(p)


def write_problem(tmp_path, doc, name="prob.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


MINIMAL = {
    "kind": "hamiltonian",
    "n": 1,
    "hamiltonian": "(p1^2+q1^2)/2",
    "vector_field": {"phi": ["q1"], "psi": ["p1"]},
}


# ------------------------------------------------------------------ loading

def test_load_bundled_crossed_example():
    problem = load_problem(bundled("example2.json"))
    assert problem.n == 2
    assert problem.kind == "hamiltonian"
    assert problem.lam.size == 4
    diag = [format_expr(problem.lam.entries[i][i]) for i in range(4)]
    assert diag == ["0", "0", "1", "1"]
    assert problem.chart is not None


def test_missing_n_is_a_schema_error(tmp_path):
    doc = dict(MINIMAL)
    del doc["n"]
    with pytest.raises(ProblemError, match="n: missing"):
        load_problem(write_problem(tmp_path, doc))


def test_wrong_lambda_size_is_rejected(tmp_path):
    doc = dict(MINIMAL)
    doc["lambda"] = {"entries": [["0"] * 3] * 3}
    with pytest.raises(ProblemError, match="lambda.entries"):
        load_problem(write_problem(tmp_path, doc))


def test_expression_parse_error_carries_location(tmp_path):
    doc = dict(MINIMAL, hamiltonian="q1 + + p1")
    with pytest.raises(ProblemError, match="hamiltonian.*offset"):
        load_problem(write_problem(tmp_path, doc))


def test_parameters_are_substituted_exactly(tmp_path):
    doc = dict(MINIMAL, parameters={"eps": 0.1}, hamiltonian="eps*q1*p1")
    problem = load_problem(write_problem(tmp_path, doc))
    from lamsym.expr import simplify, parse
    assert simplify(problem.hamiltonian) == simplify(parse("q1*p1/10"))


def test_unknown_candidate_is_rejected(tmp_path):
    doc = dict(MINIMAL, candidates={"bogus": "1"})
    with pytest.raises(ProblemError, match="unknown candidate"):
        load_problem(write_problem(tmp_path, doc))


def test_lagrangian_kind_rejects_psi(tmp_path):
    doc = {
        "kind": "lagrangian", "n": 1, "lagrangian": "dq1^2/2",
        "vector_field": {"phi": ["q1"], "psi": ["p1"]},
    }
    with pytest.raises(ProblemError, match="psi"):
        load_problem(write_problem(tmp_path, doc))


# ------------------------------------------------------------------ running

def test_perturbed_rotation_checks_pass():
    report = run_checks(load_problem(bundled("example4.json")), ("las", "dts"))
    assert report.status == "pass"
    assert report.record("las").verdict in ("ProvenZero", "NumericallyZero")
    assert "2*p1*q1" in report.record("dts").detail or "2*q1*p1" in report.record("dts").detail


def test_exact_symmetry_fails_on_perturbed_system():
    report = run_checks(load_problem(bundled("example4.json")), ("cs", "ds"))
    assert report.status == "fail"
    assert report.record("cs").verdict == "NonZero"
    assert report.record("cs").witness is not None
    assert report.record("ds").verdict == "Skipped"


def test_log_scaling_skips_separated_equation():
    report = run_checks(load_problem(bundled("example3.json")),
                        ("las", "chart", "wzl", "sep"))
    assert report.record("sep").verdict == "Skipped"
    assert "scalar" in report.record("sep").detail
    assert report.status == "pass"


def test_log_pair_full_pipeline_passes():
    report = run_checks(load_problem(bundled("example6.json")))
    assert report.status == "pass"
    names = [r.name for r in report.checks]
    assert names == ["xll", "leg", "xh", "lh", "las", "g", "dtg", "dts",
                     "chart", "wzl", "sep", "gamma", "gl", "lala", "lz", "mon"]


def test_unknown_selection_is_an_error():
    with pytest.raises(ValueError, match="unknown checks"):
        run_checks(load_problem(bundled("example1.json")), ("nope",))


def test_missing_inputs_give_skipped_not_failures():
    report = run_checks(load_problem(bundled("example1.json")),
                        ("las", "chart", "gamma"))
    for record in report.checks:
        assert record.verdict == "Skipped"
    assert report.status == "pass"


# ------------------------------------------------------------------ reports

def test_text_report_one_line_per_check():
    report = run_checks(load_problem(bundled("example4.json")), ("las", "dts"))
    text = report_to_text(report)
    lines = text.strip().split("\n")
    assert lines[1].startswith("las    [LAS] ")
    assert lines[2].startswith("dts    [DTS] ")
    assert lines[-1] == "status: pass"


def test_json_report_schema():
    report = run_checks(load_problem(bundled("example4.json")), ("las",))
    doc = json.loads(report_to_json(report))
    assert set(doc) == {"problem", "seed", "checks", "status"}
    assert doc["status"] == "pass"
    entry = doc["checks"][0]
    assert entry["name"] == "las"
    assert entry["eq"] == "LAS"
    assert entry["verdict"] in ("ProvenZero", "NumericallyZero")


# ------------------------------------------------------------------ corpus and cli

def test_corpus_all_examples_pass():
    reports = corpus_reports(RunConfig())
    assert len(reports) == len(CORPUS)
    for report in reports:
        assert report.status == "pass", report_to_text(report)


def test_cli_exit_codes(tmp_path):
    assert main(["check", "--problem", bundled("example4.json"),
                 "--select", "las,dts", "--out", str(tmp_path / "r.txt")]) == 0
    assert main(["check", "--problem", bundled("example4.json"),
                 "--select", "cs", "--out", str(tmp_path / "r2.txt")]) == 1
    assert main(["check", "--problem", str(tmp_path / "missing.json")]) == 2


def test_cli_corpus_json_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["corpus", "--seed", "7", "--report", "json", "--out", str(a)]) == 0
    assert main(["corpus", "--seed", "7", "--report", "json", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_integrate_emits_csv(tmp_path):
    out = tmp_path / "traj.csv"
    code = main(["integrate", "--problem", bundled("example1.json"),
                 "--ic", "q1=1.0,p1=0.0", "--t1", "0.01", "--step", "0.001",
                 "--monitor", "(p1^2+q1^2)/2", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,q1,p1,(p1^2+q1^2)/2"
    assert len(lines) == 12
    assert float(lines[-1].split(",")[3]) == pytest.approx(0.5, abs=1e-12)


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "lamsym.cli", "check", "--problem",
         bundled("example1.json"), "--select", "cs"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "cs" in proc.stdout


def test_cli_integrate_lagrangian_kind(tmp_path):
    out = tmp_path / "traj.csv"
    code = main(["integrate", "--problem", bundled("example7.json"),
                 "--ic", "q1=0.5,dq1=0.1", "--t1", "0.05", "--step", "0.001",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,q1,dq1"
    assert len(lines) == 52


def test_runner_records_error_for_impossible_extension(tmp_path):
    # velocity-dependent matrix without a velocity map: construction fails
    doc = {
        "kind": "lagrangian", "n": 1,
        "lagrangian": "(dq1/q1 + 1)^2*exp(-2*q1)/2",
        "vector_field": {"phi": ["q1"]},
        "lambda": {"entries": [["q1+dq1^2"]], "velocity_dependent": True},
    }
    problem = load_problem(write_problem(tmp_path, doc))
    report = run_checks(problem, ("xh",))
    assert report.record("xh").verdict == "Error"
    assert "velocity map" in report.record("xh").detail
