import json
from pathlib import Path

import numpy as np
import pytest

from nmqsd import cli
from nmqsd.errors import ConfigError
from nmqsd.experiments import PRESETS, ExperimentConfig, ExperimentResult
from nmqsd.io import (read_csv, read_densities, read_json, read_q_field, read_series,
                      write_csv, write_densities, write_json, write_q_field, write_series)

GOLDEN = Path(__file__).parent / "golden"


def test_csv_round_trip_is_lossless(tmp_path):
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(20, 3)) * 10.0 ** rng.integers(-300, 300, size=(20, 3))
    write_csv(tmp_path / "a.csv", ["x", "y", "z"], rows, comment="source=test")
    header, back, comment = read_csv(tmp_path / "a.csv")
    assert header == ["x", "y", "z"] and comment == "source=test"
    np.testing.assert_array_equal(np.asarray(back), rows)


def test_series_round_trip(tmp_path):
    t = np.linspace(0, 1, 7) / 3
    means = {"sz": np.exp(1j * t), "n": t + 0j}
    ses = {"sz": t / 7}
    write_series(tmp_path / "s.csv", t, means, ses, source="ensemble")
    t2, m2, s2, src = read_series(tmp_path / "s.csv")
    np.testing.assert_array_equal(t2, t)
    np.testing.assert_array_equal(m2["sz"], means["sz"])
    np.testing.assert_array_equal(m2["n"], means["n"])
    np.testing.assert_array_equal(s2["sz"], ses["sz"])
    assert src == "ensemble"


def test_q_field_and_density_round_trip(tmp_path):
    re, im = np.linspace(-1, 1, 5), np.linspace(-2, 2, 4)
    q = np.random.default_rng(1).random((5, 4)) / 7
    write_q_field(tmp_path / "q.csv", re, im, q)
    r2, i2, q2 = read_q_field(tmp_path / "q.csv")
    np.testing.assert_array_equal(r2, re)
    np.testing.assert_array_equal(i2, im)
    np.testing.assert_array_equal(q2, q)
    rhos = np.random.default_rng(2).normal(size=(3, 2, 2)) + 1j / 3
    write_densities(tmp_path / "r.json", np.arange(3) / 3, rhos, source="oracle")
    t, back, src = read_densities(tmp_path / "r.json")
    np.testing.assert_array_equal(back, rhos)
    assert src == "oracle"


def test_json_round_trip_with_numpy(tmp_path):
    obj = {"a": np.float64(1 / 3), "b": np.arange(3), "c": np.bool_(True)}
    write_json(tmp_path / "x.json", obj)
    assert read_json(tmp_path / "x.json") == {"a": 1 / 3, "b": [0, 1, 2], "c": True}


def test_io_errors_carry_path(tmp_path):
    target = tmp_path / "missing" / "deeper" / "a.csv"
    (tmp_path / "missing").write_text("a file, not a directory")
    with pytest.raises(OSError, match="missing"):
        write_csv(target, ["x"], [[1.0]])


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_default_manifests_are_byte_stable(tmp_path, name):
    path = write_json(tmp_path / "m.json", ExperimentConfig.preset(name).manifest())
    assert Path(path).read_bytes() == (GOLDEN / f"{name}_manifest.json").read_bytes()


@pytest.mark.parametrize("overrides", [
    {"gamma": -1.0}, {"n_paths": 1}, {"n_paths": 2.5}, {"dt": float("nan")},
    {"seed": -1}, {"kappa": 0.3}, {"T": "auto"}, {"gamma": 2.5},
])
def test_invalid_configs_rejected(overrides):
    with pytest.raises(ConfigError):
        ExperimentConfig.preset("fig1b", **overrides)


def test_from_dict_checks_schema_and_name():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fig9"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fig1a", "schema": 2})
    cfg = ExperimentConfig.from_dict({"experiment": "fig1a", "seed": 4})
    assert cfg.params["seed"] == 4


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert cli.main(["run", "fig1a", "--set", "gamma=-2", "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "nope"]) == 2
    assert cli.main(["run", "fig1a", "--set", "bogus"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["validate", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_validate_accepts_manifest(tmp_path, capsys):
    assert cli.main(["validate", str(GOLDEN / "cut_manifest.json")]) == 0
    assert json.loads(capsys.readouterr().out)["experiment"] == "cut"


def test_empty_result_writes_manifest_only(tmp_path, monkeypatch, caplog):
    cfg = ExperimentConfig.preset("fig1a")
    monkeypatch.setattr(cli, "run", lambda cfg, workers=None: ExperimentResult(cfg))
    code, _ = cli.run_experiment(cfg, tmp_path)
    assert code == 0
    assert [p.name for p in tmp_path.iterdir()] == ["manifest.json"]
    assert "no results" in caplog.text


def test_numerical_fault_exit_4(monkeypatch, capsys):
    from nmqsd.errors import EnsembleFailure

    def boom(cfg, workers=None):
        raise EnsembleFailure({3: "non-finite state"})
    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["run", "fig1a", "--paths", "4"]) == 4
    assert "path 3" in capsys.readouterr().err


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


def test_replay_is_bit_identical_across_worker_counts(tmp_path, monkeypatch):
    args = ["run", "fig1b", "--paths", "1500", "--set", "T=5.0", "--set", "dt=0.01",
            "--seed", "11"]
    monkeypatch.setenv("NMQSD_THREADS", "1")
    cli.main(args + ["--out", str(tmp_path / "a")])
    monkeypatch.setenv("NMQSD_THREADS", "2")
    cli.main(["replay", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")])
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert len(a) > 2 and a == b


def test_cli_outputs_parse_back(tmp_path):
    out = tmp_path / "o"
    code = cli.main(["run", "noise_stats", "--paths", "400", "--out", str(out)])
    assert code in (0, 3)
    summary = read_json(out / "noise_stats_summary.json")
    assert summary["experiment"] == "noise_stats" and "checks" in summary
    for p in out.glob("*.csv"):
        header, rows, _ = read_csv(p)
        assert rows and all(len(r) == len(header) for r in rows)


@pytest.mark.slow
def test_fig2_emits_q_fields(tmp_path):
    out = tmp_path / "f"
    cli.main(["run", "fig2", "--paths", "8", "--out", str(out)])
    qs = sorted(out.glob("fig2_q_*.csv"))
    assert len(qs) >= 8
    re, im, q = read_q_field(qs[0])
    assert q.shape == (re.size, im.size)
    manifest = read_json(out / "manifest.json")
    assert isinstance(manifest["config"]["T"], float)
