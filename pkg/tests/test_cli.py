import json
import shutil

import numpy as np
import pytest

from implicit_sindy.cli import main
from implicit_sindy.dynamics import read_trajectory_csv


@pytest.fixture(scope="module")
def mm_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("mm") / "run"
    assert main(["simulate", "--benchmark", "michaelis_menten", "--n-ics", "2", "--output-dir", str(out)]) == 0
    assert main(["identify", "--output-dir", str(out)]) == 0
    assert main(["validate", "--output-dir", str(out)]) == 0
    return out


def test_simulate_outputs(mm_run):
    files = sorted((mm_run / "data").glob("traj_*.csv"))
    assert len(files) == 2
    manifest = json.loads((mm_run / "data" / "manifest.json").read_text())
    assert manifest["ics"] == [[0.5], [1.0]]
    tr = read_trajectory_csv(files[0])
    assert tr.states.shape == (1000, 1) and tr.derivs is not None


def test_identify_outputs(mm_run):
    model = json.loads((mm_run / "model.json").read_text())
    state = model["states"][0]
    assert len(state["numerator"]) == 2 and len(state["denominator"]) == 2
    log = json.loads((mm_run / "run_log.json").read_text())
    assert log["states"][0]["term_count"] == 4
    header = (mm_run / "pareto_x1.csv").read_text().splitlines()[0]
    assert header == "lambda,term_count,residual"


def test_validate_and_report(mm_run, capsys):
    report = json.loads((mm_run / "validation.json").read_text())
    assert report["max_param_rel_error"] < 0.02
    capsys.readouterr()
    assert main(["report", str(mm_run)]) == 0
    text = capsys.readouterr().out
    assert "4 terms" in text
    cliff = float(text.split("cliff ")[1].split(" decades")[0])
    assert cliff >= 2
    assert (mm_run / "summary.txt").read_text() == text
    assert (mm_run / "parameters.csv").is_file()


def test_self_validation_is_exact(mm_run):
    model = mm_run / "model.json"
    assert main(["validate", "--output-dir", str(mm_run), "--model", str(model), "--truth", str(model)]) == 0
    report = json.loads((mm_run / "validation.json").read_text())
    assert max(report["max_rel_error_by_state"]) == 0.0
    # restore the benchmark validation for the other tests
    assert main(["validate", "--output-dir", str(mm_run)]) == 0


def test_deterministic_outputs(mm_run, tmp_path):
    snapshot = tmp_path / "first"
    shutil.copytree(mm_run, snapshot)
    assert main(["simulate", "--output-dir", str(mm_run), "--benchmark", "michaelis_menten", "--n-ics", "2"]) == 0
    assert main(["identify", "--output-dir", str(mm_run)]) == 0
    assert main(["validate", "--output-dir", str(mm_run)]) == 0
    for f in snapshot.rglob("*"):
        if f.is_file():
            assert (mm_run / f.relative_to(snapshot)).read_bytes() == f.read_bytes(), f.name


def test_regulatory_simulate(tmp_path):
    out = tmp_path / "reg"
    assert main(["simulate", "--benchmark", "regulatory", "--n-ics", "40", "--seed", "7",
                 "--output-dir", str(out), "--set", "n_samples=50"]) == 0
    assert len(list((out / "data").glob("traj_*.csv"))) == 40


def test_missing_config_exit_code(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["simulate", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_empty_data_dir(tmp_path):
    (tmp_path / "data").mkdir()
    assert main(["identify", "--output-dir", str(tmp_path)]) == 2


def test_bad_usage():
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
    assert main(["simulate", "--set", "no_such_field=1"]) == 2


def test_config_file_and_overrides(tmp_path, capsys):
    assert main(["--print-defaults", "--benchmark", "glycolysis"]) == 0
    defaults = json.loads(capsys.readouterr().out)
    assert defaults["d_num"] == 6 and defaults["state_overrides"]["x6"]["n_ics"] == 2400
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"benchmark": "regulatory", "n_ics": 3, "n_samples": 20}))
    out = tmp_path / "r"
    assert main(["simulate", "--config", str(cfg), "--n-ics", "2", "--output-dir", str(out)]) == 0
    saved = json.loads((out / "config.json").read_text())
    assert saved["n_ics"] == 2 and saved["n_samples"] == 20 and saved["d_num"] == 6


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("IMPLICIT_SINDY_OUTPUT_ROOT", str(tmp_path))
    assert main(["simulate", "--benchmark", "michaelis_menten", "--set", "n_samples=10"]) == 0
    assert (tmp_path / "michaelis_menten" / "data" / "manifest.json").is_file()


def test_partial_report(tmp_path, capsys):
    assert main(["simulate", "--benchmark", "michaelis_menten", "--output-dir", str(tmp_path),
                 "--set", "n_samples=10"]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "identification: absent" in text and "missing stages: identify, validate" in text


def test_no_cliff_surfaces_in_report(tmp_path, capsys):
    out = tmp_path / "nc"
    main(["simulate", "--benchmark", "michaelis_menten", "--output-dir", str(out)])
    # a drop threshold no front can meet forces the fallback
    code = main(["identify", "--output-dir", str(out), "--set", "drop_threshold=50"])
    assert code == 1
    capsys.readouterr()
    main(["report", str(out)])
    assert "warning: NoCliff: no residual drop of 50 decades" in capsys.readouterr().out


def test_differentiate_command(tmp_path):
    data = tmp_path / "run"
    assert main(["simulate", "--benchmark", "michaelis_menten", "--output-dir", str(data),
                 "--set", "derivatives=\"central\""]) == 0
    src = sorted((data / "data").glob("traj_*.csv"))
    assert read_trajectory_csv(src[0]).derivs is None
    out = tmp_path / "diff"
    assert main(["differentiate", str(data / "data"), "--output", str(out)]) == 0
    tr = read_trajectory_csv(out / src[0].name)
    assert tr.derivs.shape == tr.states.shape
    assert np.all(tr.derivs[:, 0] < 0.1)


def test_count_command(capsys):
    assert main(["count", "--n", "5", "--d", "4"]) == 0
    out = capsys.readouterr().out
    assert "N_m = 126" in out and "10^37.93" in out
