import csv
import io
import json

import pytest

from multiscale_lattice.cli import EXIT_OK, EXIT_STRUCTURAL, EXIT_THRESHOLD, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_catalog_lists_all_models(capsys):
    code, data = run_json(capsys, "catalog", "--format", "json")
    assert code == EXIT_OK and len(data) == 7


def test_catalog_single_entry(capsys):
    code, data = run_json(capsys, "catalog", "--id", "kdv-asym", "--format", "json")
    assert code == EXIT_OK
    assert [e["expected"] for e in data] == ["NonIntegrable"]


def test_catalog_text(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == EXIT_OK and "toda-hirota" in out and "hietarinta" in out


def test_catalog_unknown_id(capsys):
    code, _, err = run(capsys, "catalog", "--id", "nope")
    assert code == EXIT_USAGE and "UnknownModel" in err


def test_analyze_burgers(capsys):
    code, data = run_json(capsys, "analyze", "--id", "burgers-dd", "--param", "a=1", "--kappa", "1.2")
    assert code == EXIT_OK
    assert data["classification"] == "LinearSchrodinger"
    assert data["rho2"] == {"re": 0.0, "im": 0.0}


@pytest.mark.parametrize("jobs", ["1", "3"])
def test_analyze_sweep(capsys, jobs):
    code, data = run_json(capsys, "analyze", "--id", "toda-hirota", "--param", "a=0.5",
                          "--kappa-sweep", "0.3:2.7:9", "--jobs", jobs)
    assert code == EXIT_OK
    rows = data["results"]
    assert [r["kappa"] for r in rows] == pytest.approx([0.3 * i for i in range(1, 10)])
    assert {r["classification"] for r in rows} == {"IntegrableNLS"}


def test_sweep_is_independent_of_jobs(capsys):
    args = ("analyze", "--id", "kdv-asym", "--kappa-sweep", "0.4:2.0:5")
    _, serial, _ = run(capsys, *args, "--jobs", "1")
    _, parallel, _ = run(capsys, *args, "--jobs", "2")
    assert serial == parallel


def test_output_is_byte_identical(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["analyze", "--id", "kdv-sym", "--kappa", "0.7", "--out", str(p)]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()
    text = paths[0].read_text()
    assert "0.69999999999999996" in text  # 17 significant digits


def test_degenerate_equation_is_structural(capsys):
    code, _, err = run(capsys, "analyze", "--eq", "u[0,0]^2", "--kappa", "1.0")
    assert code == EXIT_STRUCTURAL and "DegenerateLinearPart" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--eq", "u[0,0] +", "--kappa", "1.0"],
        ["analyze", "--id", "kdv-sym", "--eq", "u[0,1]-u[0,0]", "--kappa", "1.0"],
        ["analyze", "--id", "kdv-sym", "--kappa", "3.5"],
        ["analyze", "--id", "kdv-sym", "--kappa-sweep", "0.3:2.7:0"],
        ["analyze", "--id", "kdv-sym", "--param", "a"],
        ["analyze", "--id", "kdv-sym"],
        ["simulate", "--id", "toda-naive", "--eps", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_USAGE


def test_resonant_parameters_are_structural(capsys):
    code, _, _ = run(capsys, "analyze", "--id", "hietarinta", "--param", "o1=1", "--param", "o2=3",
                     "--kappa", "1.0")
    assert code == EXIT_STRUCTURAL


def test_custom_equation(capsys):
    code, data = run_json(capsys, "analyze", "--eq", "u[0,1] - 2*u[0,0] + u[0,-1] = c*(exp(u[-1,0]-u[0,0]) - exp(u[0,0]-u[1,0]))",
                          "--param", "c=0.5", "--kappa", "1.0")
    assert code == EXIT_OK and data["classification"] == "IntegrableNLS"


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"equation": "kdv-sym", "params": {"a": 0.5}, "kappa": {"start": 0.5, "stop": 1.5, "count": 3}}))
    code, data = run_json(capsys, "analyze", "--config", str(cfg))
    assert code == EXIT_OK and len(data["results"]) == 3 and data["params"]["a"] == 0.5
    code, data = run_json(capsys, "analyze", "--config", str(cfg), "--param", "a=0.7", "--kappa", "1.0")
    assert code == EXIT_OK and data["params"]["a"] == 0.7 and data["kappa"] == 1.0


def test_csv_sweep(capsys):
    code, out, _ = run(capsys, "analyze", "--id", "kdv-asym", "--kappa-sweep", "0.5:1.5:3", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert {"kappa", "rho2_re", "rho2_im", "classification"} <= set(rows[0])
    assert all(r["classification"] == "NonIntegrable" for r in rows)


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    code = main(["simulate", "--id", "burgers-dd", "--eps", "0.1", "--out", str(out), "--history"])
    assert code == EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["metrics"]["rel_l2_aligned"] <= 0.15
    for name in ("lattice_envelope.csv", "nls_envelope.csv"):
        with open(out / name) as fh:
            assert next(csv.reader(fh)) == ["index", "re", "im"]
    with open(out / "history.csv") as fh:
        assert next(csv.reader(fh)) == ["step", "index", "re", "im"]


def test_simulate_threshold(capsys):
    code, out, _ = run(capsys, "simulate", "--id", "burgers-dd", "--eps", "0.1", "--threshold", "1e-6")
    assert code == EXIT_THRESHOLD
    assert json.loads(out)["metrics"]["rel_l2_aligned"] > 1e-6


def test_simulate_unstable_parameters(capsys):
    code, _, err = run(capsys, "simulate", "--id", "kdv-sym", "--param", "a=1", "--eps", "0.1")
    assert code == EXIT_STRUCTURAL and "UnstableScheme" in err


def test_check_oracles_passing_subset(capsys):
    code, data = run_json(capsys, "check-oracles", "--id", "kdv-sym", "--format", "json")
    assert code == EXIT_OK
    assert len(data["rows"]) == 4 and all(r["passed"] for r in data["rows"])


def test_check_oracles_fault_injection(capsys):
    code, data = run_json(capsys, "check-oracles", "--id", "burgers-dd", "--inject-fault", "1e-6", "--format", "json")
    assert code == EXIT_THRESHOLD
    assert {r["quantity"] for r in data["rows"] if not r["passed"]} >= {"omega", "rho1"}


def test_check_oracles_constraint_violation(capsys):
    code, data = run_json(capsys, "check-oracles", "--id", "hietarinta", "--param", "o1=5", "--format", "json")
    assert code == EXIT_THRESHOLD
    assert any("ConstraintViolated" in r["note"] for r in data["rows"])
