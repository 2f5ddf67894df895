import json
import subprocess
import sys

import numpy as np
import pytest

from pbdlearn.cli import EXIT_BUDGET, EXIT_EXHAUSTED, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def binomial_spec(tmp_path, capsys):
    path = tmp_path / "bin.json"
    assert run(capsys, "gen", "--kind", "binomial", "--n", 100, "--p", 0.5, "--out", path)[0] == EXIT_OK
    return path


def test_gen_binomial(binomial_spec):
    doc = json.loads(binomial_spec.read_text())
    assert doc == {"type": "pbd", "p": [0.5] * 100}


def test_gen_sparse(capsys):
    code, out, _ = run(capsys, "gen", "--kind", "sparse", "--n", 50, "--ell", 5, "--seed", 3)
    p = np.array(json.loads(out)["p"])
    assert code == EXIT_OK and p.size == 50
    assert np.sum((p > 0) & (p < 1)) == 5


@pytest.mark.parametrize("kind", ["binomial", "uniform-p", "random", "sparse", "weighted"])
def test_gen_deterministic(capsys, kind):
    a = run(capsys, "gen", "--kind", kind, "--n", 20, "--seed", 9)
    b = run(capsys, "gen", "--kind", kind, "--n", 20, "--seed", 9)
    assert a == b and a[0] == EXIT_OK


def test_gen_weighted_document(capsys):
    code, out, _ = run(capsys, "gen", "--kind", "weighted", "--n", 10, "--weights", "1,3", "--seed", 1)
    doc = json.loads(out)
    assert doc["type"] == "weighted"
    assert [c["weight"] for c in doc["classes"]] == ["1", "3"]
    assert sum(len(c["p"]) for c in doc["classes"]) == 10


def test_sample_file(tmp_path, capsys, binomial_spec):
    out = tmp_path / "s.txt"
    assert run(capsys, "sample", "--spec", binomial_spec, "--m", 500, "--seed", 2, "--out", out)[0] == EXIT_OK
    values = [int(x) for x in out.read_text().split()]
    assert len(values) == 500 and 0 <= min(values) and max(values) <= 100


def test_learn_with_truth_reports_tv(tmp_path, capsys, binomial_spec):
    hyp, met = tmp_path / "h.json", tmp_path / "m.json"
    code, _, _ = run(capsys, "learn", "--spec", binomial_spec, "--eps", 0.3, "--delta", 0.2,
                     "--seed", 1, "--out", hyp, "--metrics", met)
    assert code == EXIT_OK
    metrics = json.loads(met.read_text())
    assert metrics["tv"] <= 0.3
    assert metrics["branch"] in ("sparse", "poisson")
    assert metrics["total_draws"] == metrics["samples_used"]
    assert "seconds" not in metrics
    code, out, _ = run(capsys, "eval", "--hypothesis", hyp, "--truth", binomial_spec)
    assert json.loads(out)["tv"] == pytest.approx(metrics["tv"])


def test_learn_proper_outputs_valid_spec(tmp_path, capsys, binomial_spec):
    hyp = tmp_path / "h.json"
    code, out, _ = run(capsys, "learn", "--spec", binomial_spec, "--eps", 0.3, "--delta", 0.2,
                       "--mode", "proper", "--out", hyp)
    assert code == EXIT_OK
    doc = json.loads(hyp.read_text())
    p = np.array(doc["p"])
    assert doc["type"] == "pbd" and p.size == 100 and np.all((p >= 0) & (p <= 1))
    assert "tv" in json.loads(out)


def test_learn_timing_flag(tmp_path, capsys, binomial_spec):
    met = tmp_path / "m.json"
    run(capsys, "learn", "--spec", binomial_spec, "--eps", 0.3, "--delta", 0.2, "--timing",
        "--out", tmp_path / "h.json", "--metrics", met)
    assert json.loads(met.read_text())["seconds"] >= 0


def test_learn_from_short_sample_file_exhausts(tmp_path, capsys):
    samples = tmp_path / "s.txt"
    samples.write_text("3\n4\n5\n")
    code, _, err = run(capsys, "learn", "--samples", samples, "--n", 10, "--eps", 0.3, "--delta", 0.2)
    assert code == EXIT_EXHAUSTED and "exhausted" in err


def test_learn_from_samples_needs_n(tmp_path, capsys):
    samples = tmp_path / "s.txt"
    samples.write_text("3\n")
    assert run(capsys, "learn", "--samples", samples)[0] == EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--kind", "nonsense", "--n", "5"],
        ["gen", "--kind", "binomial", "--n", "5", "--p", "1.5"],
        ["poisson-pmf", "--lambda", "1/0", "--k", "1", "--t", "10"],
        ["poisson-pmf", "--lambda", "-3", "--k", "1", "--t", "10"],
        ["bench", "--n", "", "--eps", "0.2"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_USAGE


def test_budget_refusal_exit_code(tmp_path, capsys):
    spec = tmp_path / "w.json"
    run(capsys, "gen", "--kind", "weighted", "--n", 40, "--weights", "1,3", "--out", spec)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"candidate_budget": 100}))
    code, _, err = run(capsys, "learn-weighted", "--spec", spec, "--eps", 0.2, "--config", cfg)
    assert code == EXIT_BUDGET and "candidates" in err


def test_learn_weighted_reports_tv(tmp_path, capsys):
    spec = tmp_path / "w.json"
    spec.write_text(json.dumps({"type": "weighted", "classes": [{"weight": "1", "p": [1.0, 0.0]},
                                                                {"weight": "3", "p": [1.0, 0.0]}]}))
    code, out, _ = run(capsys, "learn-weighted", "--spec", spec, "--eps", 0.15, "--delta", 0.1,
                       "--out", tmp_path / "h.json")
    assert code == EXIT_OK
    assert json.loads(out)["tv"] <= 0.15


def test_tournament_command(tmp_path, capsys):
    cands = tmp_path / "c.json"
    cands.write_text(json.dumps([
        {"type": "pmf", "origin": 0, "mass": [0.9, 0.1]},
        {"type": "pmf", "origin": 0, "mass": [0.1, 0.9]},
    ]))
    samples = tmp_path / "s.txt"
    samples.write_text("0\n" * 5000)
    code, out, _ = run(capsys, "tournament", "--candidates", cands, "--samples", samples, "--eps", 0.1)
    doc = json.loads(out)
    assert code == EXIT_OK and doc["winner"] == 0 and not doc["failed"]
    assert doc["verdict_matrix"] == [[0, 1], [-1, 0]]


def test_poisson_pmf_command(capsys):
    code, out, _ = run(capsys, "poisson-pmf", "--lambda", "1", "--k", 0, "--t", 100)
    assert code == EXIT_OK and abs(float(out) - 0.3678794) <= 0.01


def test_bench_single_cell(capsys):
    code, out, _ = run(capsys, "bench", "--n", 50, "--eps", 0.3, "--trials", 2, "--delta", 0.2)
    lines = out.strip().splitlines()
    assert code == EXIT_OK and len(lines) == 2
    assert lines[0] == "n,eps,trials,median_tv,p90_tv,samples_used,seconds"
    row = lines[1].split(",")
    assert float(row[3]) <= 0.3 and row[-1] == ""


def test_bench_samples_constant_across_n(capsys):
    code, out, _ = run(capsys, "bench", "--n", "100,10000,1000000", "--eps", 0.3, "--trials", 1, "--delta", 0.2)
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    assert code == EXIT_OK and len({r[5] for r in rows}) == 1


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "pbdlearn", "poisson-pmf", "--lambda", "10", "--k", "10", "--t", "1000000"],
                         capture_output=True, text=True, check=True)
    assert abs(float(out.stdout) - 0.125110035721133) <= 1e-6


COMMANDS = [
    ["gen", "--kind", "random", "--n", "30", "--seed", "5"],
    ["sample", "--spec", "{spec}", "--m", "200", "--seed", "5"],
    ["learn", "--spec", "{spec}", "--eps", "0.3", "--delta", "0.2", "--seed", "5", "--out", "{out}"],
    ["learn", "--spec", "{spec}", "--eps", "0.3", "--delta", "0.2", "--seed", "5", "--mode", "proper", "--out", "{out}"],
    ["eval", "--hypothesis", "{spec}", "--truth", "{spec}"],
    ["bench", "--n", "30", "--eps", "0.3", "--trials", "2", "--delta", "0.2", "--seed", "5"],
    ["poisson-pmf", "--lambda", "7/3", "--k", "4", "--t", "1000"],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=[c[0] + str(i) for i, c in enumerate(COMMANDS)])
def test_commands_byte_identical_on_rerun(tmp_path, capsys, argv):
    spec = tmp_path / "spec.json"
    run(capsys, "gen", "--kind", "random", "--n", 30, "--seed", 5, "--out", spec)
    results = []
    for rep in range(2):
        out = tmp_path / f"out{rep}.json"
        args = [a.format(spec=spec, out=out) for a in argv]
        code, stdout, _ = run(capsys, *args)
        results.append((code, stdout, out.read_bytes() if out.exists() else b""))
    assert results[0] == results[1] and results[0][0] == EXIT_OK
