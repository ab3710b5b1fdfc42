import json

import pytest

from pfilter.cli import EXIT_INTERNAL, EXIT_INVALID, EXIT_OK, EXIT_ORACLE_SIZE, main, plot_path

BH_DOC = {"n": 4, "p": [0.01, 0.02, 0.03, 0.9],
          "layers": [{"groups": [[0], [1], [2], [3]], "alpha": 0.1}]}


@pytest.fixture
def bh_file(tmp_path):
    path = tmp_path / "bh.json"
    path.write_text(json.dumps(BH_DOC))
    return str(path)


def test_run_bh_fixture(bh_file, tmp_path, caplog):
    out = tmp_path / "out.json"
    with caplog.at_level("INFO"):
        assert main(["run", "--input", bh_file, "--output", str(out)]) == EXIT_OK
    res = json.loads(out.read_text())
    assert res["rejected"] == [0, 1, 2]
    assert res["k_hat"] == [3.0]
    assert "unit weights" in caplog.text


def test_run_to_stdout(bh_file, capsys):
    assert main(["run", "--input", bh_file, "--ic", "strong"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["rejected"] == [0, 1, 2]


def test_run_csv(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("p\n0.01\n0.02\n0.03\n0.9\n")
    assert main(["run", "--input", str(path)]) == EXIT_INVALID  # alpha missing
    assert main(["run", "--input", str(path), "--alpha", "0.1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["rejected"] == [0, 1, 2]


def test_validation_failure_exit_2(tmp_path, caplog):
    bad = dict(BH_DOC, layers=[{"groups": [[0], [1], [2], [3]], "alpha": 0.1, "w": [2, 2, 2, 2]}])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["run", "--input", str(path)]) == EXIT_INVALID
    assert "weight normalization" in caplog.text


def test_bad_json_exit_2(tmp_path, caplog):
    path = tmp_path / "bad.json"
    path.write_text('{"p": [0.1,\n')
    assert main(["run", "--input", str(path)]) == EXIT_INVALID
    assert "line" in caplog.text


def test_missing_file_and_bad_args():
    assert main(["run", "--input", "/nonexistent/x.json"]) == EXIT_INVALID
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == EXIT_INVALID


def test_oracle_match(bh_file, capsys):
    assert main(["oracle", "--input", bh_file]) == EXIT_OK
    assert "verdict: match" in capsys.readouterr().out


def test_oracle_too_large(tmp_path, caplog):
    n = 10**5
    doc = {"p": [0.5] * n, "layers": [{"groups": [[i] for i in range(n)], "alpha": 0.1}]}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(doc))
    assert main(["oracle", "--input", str(path)]) == EXIT_ORACLE_SIZE
    assert "limit" in caplog.text


def test_simulate_is_deterministic(tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"scenario": "prds", "rho": 0.25, "alphas": [0.1]}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--config", str(cfg), "--reps", "1000", "--seed", "5", "--output", str(out)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.plot.csv").read_bytes() == (tmp_path / "b.plot.csv").read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "layer,alpha,bound,fdr,fdr_se,power,power_se,within_bound,reps,seed"
    assert len(lines) == 3
    assert len((tmp_path / "a.plot.csv").read_text().splitlines()) == 5


def test_simulate_problem_config(tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "problem": {"n": 4, "layers": [{"groups": [[0], [1], [2], [3]], "alpha": 0.2}]},
        "model": {"nulls": [2, 3], "dependence": {"gaussian_equicorrelated": 0.3}, "mu": 2.5},
    }))
    out = tmp_path / "r.csv"
    assert main(["simulate", "--config", str(cfg), "--reps", "1000", "--output", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[1].split(",")[7] == "true"


def test_simulate_rejects_few_reps(tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"scenario": "prds"}))
    assert main(["simulate", "--config", str(cfg), "--reps", "0"]) == EXIT_INVALID
    cfg.write_text(json.dumps({"scenario": "nope"}))
    assert main(["simulate", "--config", str(cfg), "--reps", "1000"]) == EXIT_INVALID


def test_plot_path():
    assert plot_path("/x/report.csv") == "/x/report.plot.csv"


def test_check_lemmas(capsys):
    assert main(["check-lemmas", "--suite", "bogus"]) == EXIT_INVALID
    assert main(["check-lemmas", "--suite", "inverse-binomial", "--reps", "10"]) == EXIT_INVALID
    code = main(["check-lemmas", "--suite", "inverse-binomial", "--reps", "20000"])
    out = capsys.readouterr().out.splitlines()
    assert code == EXIT_OK and out and all(line.startswith("PASS") for line in out)


def test_internal_code_is_distinct():
    assert len({EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_ORACLE_SIZE}) == 4
