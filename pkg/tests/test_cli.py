import json

import pytest

from riccilab.cli import main
from riccilab.io import dumps, load_metric, metric_to_dict, write_curvature_csv
from riccilab.metric import constant_curvature


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def model_file(tmp_path):
    out = tmp_path / "model.json"
    assert main(["model", "build", "--n", "5", "--k", "2", "-o", str(out)]) == 0
    return str(out)


def test_model_build(tmp_path, model_file):
    spec = json.loads(open(model_file).read())
    assert spec["schema_version"] == 1
    assert spec["d"] == 3 and spec["kind"] == "warped_product"
    out = tmp_path / "b.json"
    assert main(["model-build", "--n", "4", "--k", "2", "--a", "3", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["b"] == pytest.approx(1.5)


def test_model_build_usage_errors(capsys):
    assert main(["model", "build", "--n", "4", "--k", "3"]) == 2
    assert main(["model", "build", "--n", "4"]) == 2
    assert main(["model", "build", "--n", "6", "--k", "1", "--b", "2"]) == 2
    assert main(["nonsense"]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_model_positive(tmp_path, model_file):
    out = tmp_path / "ric.json"
    samples = tmp_path / "samples.csv"
    code = main(["verify", "ric-k", "--metric", model_file, "--k", "2", "--budget", "2000", "-o", str(out),
                 "--samples-csv", str(samples)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "strictly positive"
    assert rep["min_ric_k"]["min_value"] > 0
    assert len(samples.read_text().splitlines()) == 2001


def test_verify_flat_fails(tmp_path):
    metric = _write(tmp_path / "flat.json", {"kind": "euclidean", "n": 4})
    assert main(["verify-ric-k", "--metric", metric, "--k", "1", "--budget", "100"]) == 1


def test_verify_bad_dimension(tmp_path):
    metric = _write(tmp_path / "flat.json", {"kind": "euclidean", "n": 4})
    assert main(["verify", "ric-k", "--metric", metric, "--k", "4", "--budget", "100"]) == 2
    assert main(["verify", "ric-k", "--metric", metric, "--k", "1", "--point", "0,0"]) == 2
    assert main(["verify", "ric-k", "--metric", str(tmp_path / "missing.json"), "--k", "1"]) == 2


def test_seed_determinism(tmp_path, model_file, monkeypatch):
    outs = []
    for name, seed in [("a", "7"), ("b", "7"), ("c", "8")]:
        monkeypatch.setenv("RICCILAB_SEED", seed)
        out = tmp_path / f"{name}.json"
        main(["verify", "ric-k", "--metric", model_file, "--k", "2", "--budget", "500", "-o", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]
    assert json.loads(outs[0])["min_ric_k"]["seed"] == 7
    monkeypatch.setenv("RICCILAB_SEED", "x")
    assert main(["model", "build", "--n", "4", "--k", "1"]) == 2


def test_bound_check(tmp_path, model_file, capsys):
    flat = _write(tmp_path / "flat.json", {"kind": "euclidean", "n": 6})
    assert main(["bound", "check", "--metric", flat, "--slice", "0,1,2,3,4", "--k", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "nonpositive_pair_found"
    assert abs(rep["ric_value"]) <= 1e-8
    assert main(["bound-check", "--metric", model_file, "--k", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "hypothesis_not_violated"


def test_text_and_csv_formats(capsys):
    assert main(["model", "build", "--n", "4", "--k", "2", "--format", "text"]) == 0
    text = capsys.readouterr().out
    assert "mu:" in text and "{" not in text
    assert main(["model", "build", "--n", "4", "--k", "2", "--format", "csv"]) == 2


def test_sew_taylor(tmp_path, capsys):
    metric = _write(tmp_path / "sphere.json", {"kind": "constant_curvature", "n": 3})
    csv_path = tmp_path / "taylor.csv"
    assert main(["sew", "taylor", "--metric", metric, "--levels", "3", "--csv", str(csv_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["relative_error"] < 1e-3
    assert len(csv_path.read_text().splitlines()) == 4
    assert main(["sew", "taylor", "--metric", metric, "--levels", "3", "--format", "csv"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "t,gap,normalized_gap"
    assert main(["sew", "taylor", "--metric", metric, "--pair", "0;1"]) == 2


def test_sew_run_usage(tmp_path):
    metric = _write(tmp_path / "sphere.json", {"kind": "constant_curvature", "n": 3})
    assert main(["sew", "run", "--metric", metric, "--delta", "-1"]) == 2
    other = tmp_path / "m.json"
    main(["model", "build", "--n", "4", "--k", "2", "-o", str(other)])
    assert main(["sew", "run", "--metric", metric, "--model", str(other), "--delta", "0.1"]) == 2


def test_full_repro_small(tmp_path):
    out = tmp_path / "manifest.json"
    assert main(["full-repro", "--nmax", "3", "--budget", "500", "--no-sew", "-o", str(out)]) == 0
    manifest = json.loads(out.read_text())
    assert manifest["verdict"] == "pass"
    assert [(c["n"], c["k"]) for c in manifest["grid"]] == [(3, 1)]


def test_io_round_trip(tmp_path):
    g = constant_curvature(3, 0.5)
    path = tmp_path / "g.json"
    path.write_text(dumps(metric_to_dict(g)))
    back = load_metric(path)
    assert back.meta["kappa"] == 0.5
    write_curvature_csv(back, [[0.0, 0.0, 0.0]], tmp_path / "R.csv")
    lines = (tmp_path / "R.csv").read_text().splitlines()
    assert lines[0] == "x0,x1,x2,i,j,k,l,R"
    assert len(lines) == 1 + 81
