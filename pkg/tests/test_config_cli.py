import json
import subprocess
import sys

import numpy as np
import pytest

from terank.cli import cmd_validate, main, nyquist_fraction
from terank.config import RunConfig
from terank.errors import ConfigError, IngestError
from terank.signals import TagMeta, TimeSeriesSet, write_csv, write_tag_metadata
from terank.simulators import ARConfig, simulate_var


def _dataset(tmp_path, n_tags=2, n=600, seed=0, metadata=True):
    if n_tags == 2:
        ts = simulate_var(ARConfig(length=n, rng_seed=seed))
    else:
        rng = np.random.default_rng(seed)
        ts = TimeSeriesSet(tuple(TagMeta(f"t{i}", "", "PV", 0.0, -5.0, 5.0) for i in range(n_tags)),
                           1.0, rng.standard_normal((n, n_tags)))
    write_csv(ts, tmp_path / "data.csv")
    if metadata:
        write_tag_metadata(ts.tags, tmp_path / "tags.json")
    return ts


def _config(tmp_path, **extra):
    d = {"data": "data.csv", "metadata": "tags.json", "output_dir": "out",
         "delays": {"samples": [1, 3, 5, 7]}}
    d.update(extra)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(d))
    return path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# ----- RunConfig -------------------------------------------------------------


def test_config_defaults_and_paths(tmp_path):
    cfg = RunConfig.load(_config(tmp_path))
    assert cfg.data == str(tmp_path / "data.csv")
    assert cfg.output_dir == str(tmp_path / "out")
    assert cfg.surrogate_policy() is None
    assert cfg.delay_grid(1.0) == (1, 3, 5, 7)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="colour"):
        RunConfig.from_dict({"data": "x.csv", "colour": "red"})
    with pytest.raises(ConfigError, match="rank"):
        RunConfig.from_dict({"data": "x.csv", "rank": {"damping": 0.5}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"metadata": "x.json"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"data": "x.csv", "scaling": "minmax"})


def test_config_round_trip():
    cfg = RunConfig.from_dict({
        "data": "/d.csv", "delays": {"samples": [0, 2]}, "surrogates": {"method": "shuffle"},
        "rank": {"reset_bias": {"a": 2.0}}, "window": {"mtr_samples": 100},
    })
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_config_translations():
    cfg = RunConfig.from_dict({
        "data": "/d.csv", "delays": {"max_seconds": 300, "start": 1},
        "surrogates": {"alpha": 0.01}, "rank": {"reset_bias": {"b": 3.0}},
        "window": {"length": 100},
    })
    assert cfg.delay_grid(30.0) == tuple(range(1, 11))
    assert cfg.surrogate_policy().count == 99
    assert cfg.rank_spec(["a", "b"]).reset_bias == (1.0, 3.0)
    with pytest.raises(ConfigError):
        cfg.rank_spec(["a", "c"])
    assert cfg.analysis_slice(1000) == (900, 100)
    with pytest.raises(ConfigError):
        cfg.window_plan(1000)


def test_with_overrides_ignores_none():
    cfg = RunConfig.from_dict({"data": "/d.csv", "seed": 4})
    assert cfg.with_overrides(seed=None, workers=2).seed == 4
    assert cfg.with_overrides(seed=7).seed == 7


# ----- validate --------------------------------------------------------------


def test_validate_ok(tmp_path):
    _dataset(tmp_path, n=2500)
    report = cmd_validate(RunConfig.load(_config(tmp_path)))
    assert report["status"] == "ok" and report["n_tags"] == 2
    assert report["warnings"] == []
    # 7-sample delay grid at 1 s is short
    assert any("delay grid" in a for a in report["advisories"])


def test_validate_sixty_tags_warns(tmp_path):
    _dataset(tmp_path, n_tags=60, n=100)
    report = cmd_validate(RunConfig.load(_config(tmp_path)))
    assert report["status"] == "ok"
    assert any("60 tags" in w for w in report["warnings"])
    # 100 samples is far below the recommended window
    assert any("below the 2000" in a for a in report["advisories"])


def test_validate_missing_metadata_names_tag(tmp_path):
    _dataset(tmp_path)
    (tmp_path / "tags.json").write_text(json.dumps([{"name": "x"}]))
    with pytest.raises(IngestError, match="y"):
        cmd_validate(RunConfig.load(_config(tmp_path)))


def test_validate_limit_scale_needs_metadata(tmp_path):
    _dataset(tmp_path, metadata=False)
    cfg = RunConfig.load(_config(tmp_path, metadata=None, scaling="limit_scale"))
    with pytest.raises(ConfigError):
        cmd_validate(cfg)


def test_nyquist_fraction():
    t = np.arange(1000)
    assert nyquist_fraction(np.sin(2 * np.pi * t / 100)) < 0.01
    assert nyquist_fraction(np.cos(np.pi * t)) > 0.9
    assert nyquist_fraction(np.ones(10)) == 0.0


# ----- end-to-end through main() -----------------------------------------------


def test_cli_analyse_outputs_and_rerun(tmp_path, capsys):
    _dataset(tmp_path, n=1500)
    cfg = _config(tmp_path)
    code, out, err = _run(["analyse", cfg], capsys)
    assert code == 0, err
    summary = json.loads(out)
    assert summary["tags"] == ["x", "y"]
    files = {p: (tmp_path / "out" / p).read_bytes()
             for p in ("edges.csv", "ranking.csv", "itn.gml", "summary.json")}
    assert files["ranking.csv"].decode().splitlines()[1].split(",")[1] == "x"
    code, _, _ = _run(["analyse", cfg], capsys)
    assert code == 0
    for name, content in files.items():
        assert (tmp_path / "out" / name).read_bytes() == content


def test_cli_analyse_katz_and_overrides(tmp_path, capsys):
    _dataset(tmp_path, n=800)
    cfg = _config(tmp_path, rank={"method": "katz"})
    code, out, err = _run(["analyse", cfg, "--seed", "3", "--out-dir", tmp_path / "k"], capsys)
    assert code == 0, err
    assert json.loads(out)["seed"] == 3
    assert (tmp_path / "k" / "ranking.csv").exists()


def test_cli_independent_noise_near_empty(tmp_path, capsys):
    _dataset(tmp_path, n_tags=3, n=800, seed=4)
    cfg = _config(tmp_path, surrogates={"method": "shuffle"})
    code, out, err = _run(["analyse", cfg], capsys)
    assert code == 0, err
    assert json.loads(out)["edges_written"] <= 1


def test_cli_mtr(tmp_path, capsys):
    _dataset(tmp_path, n=1200)
    cfg = _config(tmp_path, window={"mtr_samples": 600, "overlap": 0.5})
    code, out, err = _run(["mtr", cfg, "--per-window"], capsys)
    assert code == 0, err
    summary = json.loads(out)
    assert summary["windows"] == 3 and summary["step"] == 300
    lines = (tmp_path / "out" / "mtr.csv").read_text().splitlines()
    assert lines[0] == "window_mid_time,x,y" and len(lines) == 4
    assert len(list((tmp_path / "out").glob("ranking_window_*.csv"))) == 3


def test_cli_simulate_var_and_mixing(tmp_path, capsys):
    scen = tmp_path / "var.json"
    scen.write_text(json.dumps({"kind": "var", "length": 300, "rng_seed": 2}))
    code, out, err = _run(["simulate", scen, "--out-dir", tmp_path / "v"], capsys)
    assert code == 0, err
    assert json.loads(out)["n_samples"] == 300
    resolved = json.loads((tmp_path / "v" / "scenario.json").read_text())
    assert resolved["kind"] == "var" and resolved["rng_seed"] == 2

    mix = tmp_path / "mix.json"
    mix.write_text(json.dumps({"kind": "mixing", "duration": 2.0, "F_B_noise_interval": [0, 1],
                               "x_sp_interval": [1, 2]}))
    code, out, err = _run(["simulate", mix, "--out-dir", tmp_path / "m"], capsys)
    assert code == 0, err
    assert json.loads(out)["tags"][:3] == ["F_A", "F_B", "F_out"]
    tags = json.loads((tmp_path / "m" / "tags.json").read_text())
    assert {t["name"] for t in tags} >= {"x_sp", "h"}


def test_cli_export_gml(tmp_path, capsys):
    _dataset(tmp_path, n=800)
    assert _run(["analyse", _config(tmp_path)], capsys)[0] == 0
    code, out, err = _run(["export-gml", tmp_path / "out" / "edges.csv", "--out",
                           tmp_path / "x.gml", "--percentile", "50"], capsys)
    assert code == 0, err
    assert json.loads(out)["edges_written"] <= 1
    assert (tmp_path / "x.gml").read_text().startswith("graph [")


def test_cli_errors_are_json(tmp_path, capsys):
    code, out, err = _run(["analyse", tmp_path / "missing.json"], capsys)
    assert code == 1 and json.loads(err)["error"] == "config_error"

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"data": "data.csv", "oops": 1}))
    code, _, err = _run(["validate", bad], capsys)
    assert code == 1 and "oops" in json.loads(err)["message"]

    _dataset(tmp_path)
    code, _, err = _run(["export-gml", tmp_path / "data.csv", "--out", tmp_path / "no" / "g.gml"], capsys)
    assert code != 0 and "error" in json.loads(err.splitlines()[-1])


def test_cli_warnings_go_to_stderr(tmp_path, capsys):
    _dataset(tmp_path, n_tags=51, n=40)
    cfg = _config(tmp_path, delays={"samples": [1]}, estimator={"theiler_window": 0})
    code, out, err = _run(["analyse", cfg], capsys)
    assert code == 0
    assert any("at most 50" in json.loads(line).get("warning", "") for line in err.splitlines())


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "terank", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("terank ")
