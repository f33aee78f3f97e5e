import json

import numpy as np
import pytest

from sparsefw.harness import ConfigError, OutputLocked, default_config, load_config, parse_config, run_experiment
from sparsefw.harness.cli import main
from sparsefw.harness.config import KINDS
from sparsefw.harness.csvio import csv_text, format_value, read_csv
from sparsefw.harness.plotdata import emit_plot_data
from sparsefw.harness.runner import LOCK_NAME, resolve_workers


def test_every_kind_has_valid_defaults():
    for kind in KINDS:
        assert default_config(kind).kind == kind


def test_config_collects_all_problems():
    with pytest.raises(ConfigError) as exc:
        parse_config({"kind": "fw_run", "steps": 0, "algo": "newton", "colour": "red"})
    text = "\n".join(exc.value.problems)
    assert "colour: unknown key" in text and "steps:" in text and "algo:" in text
    with pytest.raises(ConfigError, match="kind"):
        parse_config({"kind": "nope"})
    with pytest.raises(ConfigError, match="target: must have 3 entries"):
        parse_config({"kind": "fw_run", "domain": "simplex", "d": 3, "target": [0.5, 0.5]})
    with pytest.raises(ConfigError, match="vertices: required"):
        parse_config({"kind": "fw_run", "domain": "polytope"})


def test_load_config_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "kind": "fw_run",\n  "steps": ,\n}')
    with pytest.raises(ConfigError, match=r"bad.json:3:12"):
        load_config(path)


def test_hash_ignores_output_and_workers():
    a = parse_config({"kind": "fw_run", "seed": 4})
    assert a.hash() == a.replace(out="elsewhere", workers=3).hash()
    assert a.hash() != a.replace(seed=5).hash()


def test_csv_formatting():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(float("nan")) == "nan"
    assert format_value(True) == "true" and format_value(None) == "" and format_value(np.int64(3)) == "3"
    assert csv_text(["a", "b"], [{"a": 1, "b": "x,y"}]) == 'a,b\r\n1,"x,y"\r\n'


def test_fw_run_outputs(tmp_path):
    cfg = parse_config({"kind": "fw_run", "domain": "simplex", "d": 3, "steps": 12, "trials": 2})
    res = run_experiment(cfg, out=tmp_path)
    assert res.status == 0
    header, rows = read_csv(tmp_path / "trace_0000.csv")
    assert header == ["iter", "f", "gap", "sparsity", "gamma", "step_kind"]
    assert len(rows) <= 13
    f = [float(r["f"]) for r in rows]
    assert all(a >= b for a, b in zip(f, f[1:]))
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == cfg.hash() and manifest["exit_status"] == 0
    assert not (tmp_path / LOCK_NAME).exists()


def test_partial_failure_and_success_fraction(tmp_path):
    raw = {"kind": "linear_rate", "domain": "simplex", "d": 5, "r_grid": [0.05, 5.0], "k_max": 20, "trials": 2}
    res = run_experiment(parse_config(raw), out=tmp_path / "strict")
    assert res.status == 3 and len(res.errors) == 2
    _, err_rows = read_csv(tmp_path / "strict" / "errors.csv")
    assert "not realizable" in err_rows[0]["error"]
    _, rows = read_csv(tmp_path / "strict" / "linear_rate.csv")
    assert len(rows) == 2
    res = run_experiment(parse_config({**raw, "min_success_fraction": 0.5}), out=tmp_path / "lenient")
    assert res.status == 0


def test_lock_prevents_concurrent_use(tmp_path):
    (tmp_path / LOCK_NAME).write_text("123")
    with pytest.raises(OutputLocked):
        run_experiment(default_config("bounds_table"), out=tmp_path)


def test_compressibility_bound_file(tmp_path):
    cfg = parse_config({"kind": "compressibility", "domain": "l1", "d": 8, "eps": 0.05, "bound": "l1",
                        "trials": 3, "algo": "fully_corrective"})
    res = run_experiment(cfg, out=tmp_path)
    assert res.status == 0
    _, rows = read_csv(tmp_path / "bound.csv")
    assert rows[0]["status"] == "consistent"


def test_compressibility_tolerance_mismatch_rejected(tmp_path):
    cfg = parse_config({"kind": "compressibility", "domain": "l1", "d": 8, "eps": 0.05, "bound": "l1",
                        "delta": 0.1, "trials": 1})
    with pytest.raises(ConfigError, match="tolerance mismatch"):
        run_experiment(cfg, out=tmp_path)


def test_resolve_workers(monkeypatch):
    cfg = default_config("fw_run")
    monkeypatch.setenv("SPARSEFW_WORKERS", "3")
    assert resolve_workers(cfg) == 3
    assert resolve_workers(cfg, 2) == 2
    monkeypatch.setenv("SPARSEFW_WORKERS", "many")
    with pytest.raises(ConfigError):
        resolve_workers(cfg)


def test_plot_data(tmp_path):
    src = tmp_path / "r.csv"
    src.write_text("n,err,g\r\n10,1.0,a\r\n10,3.0,a\r\n100,0.1,a\r\n10,5,b\r\n")
    res = emit_plot_data(src, "n", "err", tmp_path / "plots", group_by="g", log_axes=True, fit=True)
    path, slope = res["a"]
    assert slope == pytest.approx(-1.30103, abs=1e-4)
    lines = path.read_text().splitlines()
    assert lines[1] == "# axes: log-log" and lines[3].startswith("10 2 ")
    with pytest.raises(KeyError, match="available columns: n, err, g"):
        emit_plot_data(src, "n", "missing", tmp_path)
    empty = tmp_path / "e.csv"
    empty.write_text("n,err\r\n")
    (path, _), = emit_plot_data(empty, "n", "err", tmp_path / "p2").values()
    assert path.read_text() == ""


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["bounds", "table", "--out", str(out)]) == 0
    assert "formula" in capsys.readouterr().out
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "cap_study"}))
    assert main(["fw", "run", "--config", str(cfg), "--out", str(out)]) == 2
    assert "config is 'cap_study'" in capsys.readouterr().err
    assert main(["fw", "run", "--seed", "-1"]) == 2
    assert main(["stat", "linrate", "--config", str(_write(tmp_path, {
        "kind": "linear_rate", "d": 5, "r_grid": [5.0], "k_max": 5})), "--out", str(tmp_path / "l")]) == 3
    assert main(["plot", str(out / "bounds_table.csv"), "--x", "d", "--y", "value", "--group-by", "formula",
                 "--out", str(tmp_path / "pl")]) == 0


def _write(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_seed_and_trials_override_config(tmp_path):
    path = _write(tmp_path, {"kind": "fw_run", "seed": 1, "trials": 1, "steps": 5})
    assert main(["fw", "run", "--config", str(path), "--seed", "9", "--trials", "2", "--out", str(tmp_path / "o")]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["items"] == 2
