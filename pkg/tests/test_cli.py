import io
import json

import numpy as np
import pytest

from wgelab.cli import main
from wgelab.io import read_embeddings
from wgelab.model import reference_model


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_closed_form_text():
    code, out, _ = run("closed-form")
    assert code == 0
    assert "|dd|^2=31.25" in out and "|dc|^2=62.5" in out and "orthogonal=True" in out
    srm_line = next(line for line in out.splitlines() if line.startswith("SRM"))
    assert "0.185780" in srm_line
    assert "0.002594" in next(line for line in out.splitlines() if line.startswith("DS"))


def test_closed_form_json_schema():
    code, out, _ = run("closed-form", "--format", "json", "--methods", "srm,ds,uw,mu(2)")
    report = json.loads(out)
    assert code == 0 and report["schema"] == 1
    assert report["orthogonal"] is True
    assert [r["method"] for r in report["methods"]] == ["SRM", "DS", "UW", "MU(2)"]
    for row in report["methods"]:
        assert row["wge"] == pytest.approx(row["wge_closed_orthogonal"], abs=1e-10)
        assert set(row["group_errors"]) == {"(0,T)", "(0,S)", "(1,T)", "(1,S)"}
    assert report["methods"][1]["w"] == pytest.approx([-3.54609929, 0.0], abs=1e-8)


def test_balanced_prior_rows_coincide():
    report = json.loads(run("closed-form", "--pi0", "0.25", "--format", "json")[1])
    srm, ds = report["methods"][:2]
    assert srm["w"] == pytest.approx(ds["w"], rel=1e-12)
    assert srm["wge"] == pytest.approx(ds["wge"], abs=1e-12)


def test_non_orthogonal_model_has_no_closed_column():
    m = reference_model().replace(delta_c=[0.1, 0.25])
    code, out, _ = run("closed-form", "--model", m.to_json(), "--format", "json")
    report = json.loads(out)
    assert code == 0 and report["orthogonal"] is False
    assert all("wge_closed_orthogonal" not in r for r in report["methods"])


def test_model_file_and_pi0_override(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(reference_model().to_json())
    report = json.loads(run("closed-form", "--model", path, "--pi0", "0.1", "--format", "json")[1])
    assert report["model"]["pi0"] == 0.1


@pytest.mark.parametrize("argv, code", [
    (["closed-form", "--model", '{"dim": 2, "mu_base": [0, 0], "delta_c": [0, 1], "delta_d": [1, 0], '
      '"sigma": [1, 2, 2, 1], "pi0": 0.1}'], 3),
    (["closed-form", "--model", '{"dim": 2, "mu_base": [0, 0], "delta_c": [0, 1], "delta_d": [1, 0], '
      '"sigma": [1, 0, 0, 1], "pi0": 0.4}'], 2),
    (["closed-form", "--model", "/nonexistent.json"], 2),
    (["closed-form", "--methods", "srm,bogus"], 2),
    (["sweep", "--grid", "500,100"], 2),
    (["sweep", "--eval", "holdout"], 2),
])
def test_exit_codes(argv, code):
    got, _, err = run(*argv)
    assert got == code
    assert err.startswith("error:")


def test_sweep_csv_and_files(tmp_path):
    argv = ["sweep", "--grid", "1000,2000", "--seeds", "2", "--trials", "2", "--methods", "srm,ds",
            "--out", tmp_path, "--svg", "--per-trial"]
    code, out, err = run(*argv)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "method,grid_kind,grid_value,statistic,mean,std,trials,failures"
    assert len(lines) == 5
    assert (tmp_path / "wge-vs-n.csv").read_text() == out
    assert (tmp_path / "wge-vs-n.svg").read_text().startswith("<svg")
    assert len((tmp_path / "wge-vs-n_trials.csv").read_text().splitlines()) == 1 + 2 * 2 * 4
    assert run(*argv)[1] == out  # byte-identical rerun


def test_sweep_strict_failures():
    argv = ["sweep", "--grid", "100,150", "--seeds", "5", "--trials", "1", "--methods", "ds"]
    code, out, err = run(*argv)
    assert code == 0 and "failed" in err
    assert run(*argv, "--strict")[0] == 4


def test_sweep_pi0_kind():
    code, out, _ = run("sweep", "--kind", "wge-vs-pi0", "--grid", "0.05,0.25", "--n", "3000",
                       "--seeds", "2", "--trials", "1", "--methods", "srm")
    assert code == 0
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert [r[1] for r in rows] == ["pi0", "pi0"]
    assert float(rows[0][4]) > float(rows[1][4])


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"methods": "srm", "seeds": 2, "trials": 1, "grid": "1000,2000,3000",
                               "seed": 5}))
    out_cfg = run("sweep", "--config", cfg)[1]
    assert len(out_cfg.splitlines()) == 4
    out_cli = run("sweep", "--config", cfg, "--methods", "uw")[1]
    assert out_cli.splitlines()[1].startswith("UW,")
    explicit = run("sweep", "--methods", "srm", "--seeds", "2", "--trials", "1",
                   "--grid", "1000,2000,3000", "--seed", "5")[1]
    assert explicit == out_cfg


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run("closed-form", "--config", cfg)[0] == 2


def test_gen_data_and_fit(tmp_path):
    path = tmp_path / "emb.csv"
    code, _, err = run("gen-data", "--n", "20000", "--out", path, "--seed", "3")
    assert code == 0 and "wrote 20000 rows" in err
    assert read_embeddings(path).n == 20000
    code, out, err = run("fit", path, "--repeats", "3", "--lambda", "0.001", "--format", "json")
    assert code == 0 and "train:" in err
    rows = {r["method"]: r for r in json.loads(out)["rows"]}
    assert set(rows) == {"SRM", "DS", "UW", "MU(1)", "DS+L1(0.001)", "UW+L1(0.001)"}
    assert rows["UW"]["wge_std"] == 0.0 and rows["SRM"]["wge_std"] == 0.0
    assert rows["UW"]["wge_mean"] < rows["SRM"]["wge_mean"]


def test_fit_balanced_file_erm_equals_uw(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "bal.csv"
    lines = ["x_0,x_1,y,d"]
    for y, d in [(0, "T"), (0, "S"), (1, "T"), (1, "S")]:
        for _ in range(100):
            x = rng.standard_normal(2) + [y, 0.5 * (d == "S")]
            lines.append(f"{float(x[0])!r},{float(x[1])!r},{y},{d}")
    path.write_text("\n".join(lines) + "\n")
    # evaluation on the training file itself keeps every group balanced
    code, out, _ = run("fit", path, "--eval-file", path, "--methods", "srm,uw", "--repeats", "2",
                       "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert rows[0]["wge_mean"] == pytest.approx(rows[1]["wge_mean"], abs=1e-12)


def test_fit_empty_group(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("x_0,y,d\n1,0,S\n2,1,T\n3,1,S\n4,1,S\n")
    code, _, err = run("fit", path)
    assert code == 5
    assert "n(0,T)=0" in err


def test_fit_malformed(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("x_0,y,d\n1,0\n")
    assert run("fit", path)[0] == 2
