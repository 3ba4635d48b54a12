import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from factortree.cli import main
from factortree.copula import GUMBEL, tau_to_theta
from factortree.data import CutpointSet, write_csv
from factortree.model import ModelSpec, ParamVector
from factortree.report import fit_from_dict, read_json
from factortree.simulate import path_tree, sample

FIXTURE = Path(__file__).parent / "data" / "ptsd_format_fixture.csv"


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    d = 5
    spec = ModelSpec.build(d, 1, f1=GUMBEL, tree=path_tree(d), tree_family=GUMBEL)
    par = ParamVector([tau_to_theta(GUMBEL, t) for t in np.linspace(0.7, 0.4, d)],
                      delta=[tau_to_theta(GUMBEL, t) for t in np.linspace(0.4, 0.1, d - 1)])
    data = sample(400, CutpointSet.equal(d, 4), spec, par, np.random.default_rng(3))
    path = tmp_path_factory.mktemp("cli") / "small.csv"
    write_csv(data, path)
    return path


def _spec_file(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


@pytest.fixture(scope="module")
def fixture_fits(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("fits")
    spec = _spec_file(tmp, {"p": 1, "f1": "bvn"})
    out15, out35 = tmp / "fit15.json", tmp / "fit35.json"
    assert main(["fit", "--input", str(FIXTURE), "--spec", str(spec), "--out", str(out15)]) == 0
    assert main(["fit", "--input", str(FIXTURE), "--spec", str(spec), "--nq", "35", "--no-se",
                 "--out", str(out35)]) == 0
    return read_json(out15), read_json(out35), out15


def test_fit_report_contract(fixture_fits):
    rep, _, _ = fixture_fits
    assert rep["schema_version"] == 1 and rep["command"] == "fit" and rep["nq"] == 15
    m = rep["model"]
    assert np.isfinite(m["aic"]) and m["aic"] == pytest.approx(-2 * m["loglik"] + 2 * m["n_params"])
    assert m["n"] == 221 and m["n_params"] == 20 and m["converged"]
    assert len(m["standard_errors"]["tau"]["theta1"]) == 20
    assert m["standard_errors"]["method"] == "naive inverse Hessian"
    assert rep["label_remap"]["B1"] == {"1": 0, "2": 1, "3": 2, "4": 3, "5": 4}


def test_nq_stability_of_aic(fixture_fits):
    a, b, _ = fixture_fits
    assert abs(a["model"]["aic"] - b["model"]["aic"]) < 0.01


def test_report_round_trip(fixture_fits):
    rep, _, path = fixture_fits
    text = path.read_text()
    again = json.loads(text)
    assert again == rep
    fit = fit_from_dict(rep)
    assert fit.loglik == rep["model"]["loglik"]
    assert fit.params.theta1.tolist() == rep["model"]["theta"]["theta1"]


def test_malformed_csv_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n1,2\n")
    spec = _spec_file(tmp_path, {"p": 1})
    out = tmp_path / "out.json"
    assert main(["fit", "--input", str(bad), "--spec", str(spec), "--out", str(out)]) == 2
    assert not out.exists()
    assert not list(tmp_path.glob(".tmp-*"))


def test_missing_input_exit_2(tmp_path):
    spec = _spec_file(tmp_path, {"p": 1})
    out = tmp_path / "out.json"
    assert main(["fit", "--input", str(tmp_path / "none.csv"), "--spec", str(spec),
                 "--out", str(out)]) == 2
    assert not out.exists()


def test_model_failure_exit_3(tmp_path, small_csv):
    spec = _spec_file(tmp_path, {"p": 1, "f1": "clayton"})
    out = tmp_path / "out.json"
    assert main(["fit", "--input", str(small_csv), "--spec", str(spec), "--out", str(out)]) == 3
    rep = read_json(out)
    assert rep["status"] == "error" and rep["error"] == "DomainError"


def test_input_not_modified(tmp_path, small_csv):
    before = small_csv.read_bytes()
    spec = _spec_file(tmp_path, {"p": 1, "tree": "partial", "tree_family": "gumbel"})
    out = tmp_path / "fit.json"
    assert main(["fit", "--input", str(small_csv), "--spec", str(spec), "--no-se",
                 "--out", str(out)]) == 0
    assert small_csv.read_bytes() == before
    rep = read_json(out)
    assert rep["tree_source"] == "partial-1f" and len(rep["model"]["spec"]["tree"]) == 4


def test_simulate_reproducible(tmp_path):
    args = ["simulate", "--design", "d8-1ftree-drawable", "--reps", "3", "--seed", "7", "--n", "60"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == [f"d8-1ftree-drawable_seed7_rep{r:04d}.csv" for r in range(3)]
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_list(capsys, tmp_path):
    assert main(["simulate", "--design", "list", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 12 and lines[0].startswith("d8-1ftree-drawable")


def test_select_report(tmp_path, small_csv):
    spec = _spec_file(tmp_path, {"p": 1, "factor_candidates": ["bvn", "gumbel"],
                                 "tree_candidates": ["bvn", "gumbel"]})
    out = tmp_path / "sel.json"
    assert main(["select", "--input", str(small_csv), "--spec", str(spec), "--out", str(out)]) == 0
    rep = read_json(out)
    assert [s["stage"] for s in rep["steps"]] == ["factor1", "tree-partial", "tree-polychoric"]
    for s in rep["steps"]:
        assert s["winner"] in s["candidates"]
    assert rep["winner_tree"] in ("partial", "polychoric")
    assert rep["model"]["aic"] == rep["tree_fits"][rep["winner_tree"]]["aic"]


def test_compare_and_diagnose(tmp_path, small_csv):
    s1 = _spec_file(tmp_path, {"p": 1}, "s1.json")
    s2 = _spec_file(tmp_path, {"p": 1, "tree": [[1, 2], [2, 3], [3, 4], [4, 5]]}, "s2.json")
    f1, f2 = tmp_path / "f1.json", tmp_path / "f2.json"
    for s, f in ((s1, f1), (s2, f2)):
        assert main(["fit", "--input", str(small_csv), "--spec", str(s), "--no-se",
                     "--out", str(f)]) == 0
    out = tmp_path / "cmp.json"
    assert main(["compare", "--input", str(small_csv), "--model1", str(f1),
                 "--model2", str(f1), "--out", str(out)]) == 0
    same = read_json(out)["vuong"]
    assert same["dbar"] == 0.0 and same["ci_low"] <= 0 <= same["ci_high"]
    assert main(["compare", "--input", str(small_csv), "--model1", str(f1), "--model2", str(f2),
                 "--out", str(out)]) == 0
    v = read_json(out)["vuong"]
    assert v["dim_diff"] == 4 and v["ci_low"] < v["ci_high"]
    diag = tmp_path / "diag.json"
    assert main(["diagnose", "--input", str(small_csv), "--model", str(f2),
                 "--out", str(diag)]) == 0
    rep = read_json(diag)
    assert set(rep["discrepancies"]) == {"D1", "D2", "D3"}
    assert set(rep["semi_correlations"]["theoretical"]) == {"bvn", "t2", "t5", "frank", "gumbel",
                                                             "sgumbel"}


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "factortree.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("fit", "select", "simulate", "compare", "diagnose"):
        assert cmd in res.stdout
