import json

from vrpower.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "simulate", "--dim", "2")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    code, _, err = run(capsys, "simulate", "--dim", "1", "--t", "10", "--delta", "5",
                       "--spec", "1:0", "--reps", "3")
    assert code == 2 and "delta" in err
    code, _, err = run(capsys, "predict", "--dim", "2", "--t", "10", "--delta", "0.1", "--spec", "3:1")
    assert code == 2 and "alpha=0 for k>d" in err
    assert run(capsys, "simulate", "--dim", "2", "--t", "10", "--delta", "0.1", "--regime", "1,0.5",
               "--spec", "1:0")[0] == 2


def test_simulate_json_and_csv(capsys, tmp_path):
    args = ["simulate", "--dim", "1", "--t", "200", "--delta", "0.002", "--spec", "1:0",
            "--reps", "300", "--seed", "2"]
    code, out, _ = run(capsys, *args)
    rep = json.loads(out)
    assert code == 0 and rep["passed"] is True
    assert rep["config"]["seed"] == 2
    path = tmp_path / "rows.csv"
    code, _, _ = run(capsys, *args, "--format", "csv", "--out", str(path))
    assert code == 0
    assert path.read_text().splitlines()[1] == "rep_id,complex,k,alpha,value,f_k,t,delta,seed"


def test_simulate_tolerance_failure_exit_code(capsys):
    code, out, _ = run(capsys, "simulate", "--dim", "1", "--t", "200", "--delta", "0.002",
                       "--spec", "1:0", "--reps", "300", "--se-multiplier", "0", "--bias-slack", "0")
    assert code == 1 and json.loads(out)["passed"] is False


def test_moments_and_predict(capsys, tmp_path):
    cache = tmp_path / "m.json"
    code, out, _ = run(capsys, "moments", "--dim", "2", "--spec", "1:0,2:0", "--samples", "20000",
                       "--moments-cache", str(cache))
    assert code == 0 and cache.exists()
    assert "mu_mixed|2,2,2|0.0,0.0|2" in json.loads(out)["entries"]
    code, out, _ = run(capsys, "predict", "--dim", "2", "--t", "1000", "--regime", "50,0.5",
                       "--spec", "1:0,2:0", "--moments-cache", str(cache), "--complex", "both",
                       "--samples", "20000")
    rep = json.loads(out)
    assert code == 0
    rips = rep["complexes"]["rips"]
    assert rips["regime"]["mode"] == "thermodynamic"
    assert rips["rank"] == "2 (generic)"
    for key in ("expectations", "covariance", "normalizers", "limit_sigma", "rate_shape"):
        assert key in rips
    code, out, _ = run(capsys, "predict", "--dim", "2", "--t", "1000", "--regime", "1,0.3",
                       "--spec", "1:0,2:0", "--moments-cache", str(cache))
    assert json.loads(out)["complexes"]["rips"]["rank"] == "1"


def test_clt_and_compare(capsys):
    code, out, _ = run(capsys, "clt", "--dim", "2", "--t", "50,200", "--regime", "1,0.5",
                       "--spec", "1:1", "--reps", "60", "--format", "json")
    rep = json.loads(out)
    assert code in (0, 1)
    assert "univariate KS" in rep["note"] and len(rep["sweep"]) == 2
    code, out, _ = run(capsys, "compare", "--dim", "2", "--t", "100", "--delta", "0.15",
                       "--spec", "1:0,2:0", "--reps", "3", "--samples", "20000")
    rep = json.loads(out)
    assert code == 0 and rep["sandwich_violations"] == 0
    assert all(o["passed"] for o in rep["prediction_ordering"])
