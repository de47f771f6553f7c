import json

import numpy as np
import pytest

from riesz_compare.basis import FeatureBuilder
from riesz_compare.cli import main
from riesz_compare.data import AteDgpConfig, ShiftDgpConfig
from riesz_compare.errors import ConfigurationError
from riesz_compare.experiment import (
    RESULT_FIELDS,
    EstimatorSpec,
    ExperimentConfig,
    ResultRow,
    read_results,
    run_experiment,
    run_replication,
    write_results,
)


def _config(**overrides):
    base = dict(
        dgp=AteDgpConfig(n=100),
        basis=FeatureBuilder.parse("poly-t:1"),
        estimators=(EstimatorSpec("riesz-loss"),),
        sample_sizes=(100,),
        replications=2,
        master_seed=3,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_row_cardinality():
    assert len(run_experiment(_config())) == 2


def test_row_count_and_order():
    ests = (EstimatorSpec("riesz-loss"), EstimatorSpec("rayleigh"), EstimatorSpec("lasso", l1=0.05))
    cfg = _config(estimators=ests, sample_sizes=(80, 120), replications=3)
    rows = run_experiment(cfg)
    assert len(rows) == 3 * 2 * 3
    keys = [(r.n, r.estimator, r.replication) for r in rows]
    order = {"riesz-loss": 0, "rayleigh": 1, "lasso": 2}
    assert keys == sorted(keys, key=lambda k: (k[0], order[k[1]], k[2]))


def test_same_config_same_bytes(tmp_path):
    cfg = _config(estimators=(EstimatorSpec("riesz-loss"), EstimatorSpec("rayleigh-l1", l1=0.05)))
    run_experiment(cfg, tmp_path / "a.csv")
    run_experiment(cfg, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_equivalence_column_filled():
    ests = (EstimatorSpec("riesz-loss"), EstimatorSpec("rayleigh"), EstimatorSpec("lasso", l1=0.1))
    rows = run_experiment(_config(estimators=ests, replications=3))
    for r in rows:
        if r.estimator in ("riesz-loss", "rayleigh"):
            assert r.equivalence_max_rel_diff <= 1e-8
        else:
            assert r.equivalence_max_rel_diff is None


def test_ridge_pairs_compared():
    ests = (EstimatorSpec("riesz-loss", l2=0.1), EstimatorSpec("rayleigh", l2=0.1), EstimatorSpec("rayleigh"))
    rows = run_experiment(_config(estimators=ests, replications=1))
    assert rows[0].equivalence_max_rel_diff <= 1e-8
    assert rows[2].equivalence_max_rel_diff is None


def test_replication_depends_only_on_its_seed():
    cfg = _config(replications=4)
    rows = run_experiment(cfg)
    alone = run_replication(cfg, 100, 2)
    assert alone[0] == rows[2]
    shifted = run_experiment(_config(replications=2, master_seed=5))
    assert shifted[0] == ResultRow(**{**rows[2].__dict__, "replication": 0})


def test_failures_are_recorded_not_fatal():
    # A constant-only basis under the ATE functional has L = 0: the Rayleigh problem is degenerate.
    ests = (EstimatorSpec("riesz-loss"), EstimatorSpec("rayleigh"))
    rows = run_experiment(_config(basis=FeatureBuilder.parse("poly:0"), estimators=ests))
    assert len(rows) == 4
    assert all(r.error == "" for r in rows if r.estimator == "riesz-loss")
    assert all(r.error == "DegenerateFunctionalError" for r in rows if r.estimator == "rayleigh")


def test_shift_experiment():
    cfg = ExperimentConfig(
        dgp=ShiftDgpConfig(n_target=300, mean_shift=0.5),
        basis=FeatureBuilder.parse("poly:2"),
        estimators=(EstimatorSpec("riesz-loss"), EstimatorSpec("nn-rayleigh", hidden=(4,), lr=5e-2, epochs=30)),
        sample_sizes=(150,),
        replications=1,
    )
    rows = run_experiment(cfg)
    assert [r.error for r in rows] == ["", ""]
    assert all(np.isfinite(r.rr_mse) for r in rows)


def test_runtime_recorded_on_request():
    rows = run_experiment(_config(record_runtime=True))
    assert all(r.runtime_ms > 0 for r in rows)
    assert all(r.runtime_ms is None for r in run_experiment(_config()))


def test_write_empty(tmp_path):
    write_results([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(RESULT_FIELDS) + "\n"


def test_write_one_row(tmp_path):
    write_results([ResultRow("riesz-loss", 10, 0, 0.5, 1.0, None, -2.0)], tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 2


def test_round_trip(tmp_path):
    rows = run_experiment(_config(estimators=(EstimatorSpec("riesz-loss"), EstimatorSpec("rayleigh"))))
    write_results(rows, tmp_path / "r.csv")
    assert read_results(tmp_path / "r.csv") == rows


def test_unwritable_output(tmp_path):
    with pytest.raises(OSError):
        run_experiment(_config(), tmp_path / "missing" / "r.csv")


@pytest.mark.parametrize(
    "kwargs",
    [dict(replications=0), dict(estimators=()), dict(sample_sizes=())],
)
def test_invalid_experiment(kwargs):
    with pytest.raises(ConfigurationError):
        _config(**kwargs)


def test_invalid_estimators():
    with pytest.raises(ConfigurationError):
        EstimatorSpec("boosting")
    with pytest.raises(ConfigurationError):
        EstimatorSpec("lasso")


def test_config_json_round_trip():
    cfg = _config(estimators=(EstimatorSpec("riesz-loss", l2=0.1), EstimatorSpec("nn-riesz", hidden=(8,))))
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


# --- CLI --------------------------------------------------------------------


def test_cli_generate_and_fit(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["generate", "--dgp", "ate", "--n", "200", "--seed", "1", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "w1,w2,w3,t,y,alpha0"
    capsys.readouterr()
    fit_json = tmp_path / "fit.json"
    assert main(["fit", "--data", str(out), "--basis", "poly-t:1", "--estimator", "rayleigh", "--out", str(fit_json)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n"] == 200 and report["rr_mse"] >= 0
    fit = json.loads(fit_json.read_text())
    assert fit["objective_kind"] == "rayleigh" and len(fit["theta"]) == 8


def test_cli_shift_round_trip(tmp_path, capsys):
    data, aux = tmp_path / "s.csv", tmp_path / "aux.csv"
    assert main(["generate", "--dgp", "shift", "--n", "150", "--mu", "0.5", "--out", str(data), "--aux-out", str(aux)]) == 0
    assert main(["fit", "--data", str(data), "--aux", str(aux), "--functional", "shift-mean", "--basis", "poly:2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["functional"] == "shift-mean"


def test_cli_neural_fit(tmp_path, capsys):
    fit_json = tmp_path / "nn.json"
    args = ["fit", "--n", "150", "--estimator", "nn-rayleigh", "--hidden", "4", "--epochs", "20", "--out", str(fit_json)]
    assert main(args) == 0
    fit = json.loads(fit_json.read_text())
    assert fit["trainer"] == "constrained-rayleigh" and fit["hidden_widths"] == [4]
    assert "scale_c" in fit and "final_objective" in fit


def test_cli_experiment(tmp_path):
    cfg = {
        "dgp": {"kind": "ate", "p": 3},
        "basis": "poly-t:1",
        "estimators": [{"name": "riesz-loss"}, {"name": "rayleigh"}],
        "sample_sizes": [100],
        "replications": 2,
        "master_seed": 0,
        "output_path": str(tmp_path / "from_config.csv"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "override.csv"
    assert main(["experiment", "--config", str(path), "--output", str(out), "--replications", "3"]) == 0
    rows = read_results(out)
    assert len(rows) == 6
    assert not (tmp_path / "from_config.csv").exists()


def test_cli_equivalence(capsys):
    assert main(["equivalence", "--instances", "10", "--check"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("l2,") and len(lines) == 5


def test_cli_errors(tmp_path, capsys):
    assert main(["experiment", "--config", str(tmp_path / "nope.json")]) != 0
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["experiment", "--config", str(bad)]) != 0
    assert main(["fit", "--basis", "spline:3"]) != 0
    assert main(["fit", "--data", str(tmp_path / "missing.csv")]) != 0
    capsys.readouterr()
