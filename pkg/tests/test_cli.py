import json
import math

import pytest
import yaml

from qaesim.cli import main
from qaesim.config import (
    ConfigError,
    format_float,
    load_config,
    parse_config,
    write_csv,
)
from qaesim.experiments import COLUMNS, run_mlae


def write_yaml(path, doc):
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def small_adaptive(tmp_path, **overrides):
    doc = {
        "experiment": "adaptive",
        "seed": 3,
        "threads": 1,
        "out": str(tmp_path / "out"),
        "params": {"n": 2, "n_shot": 200, "m_levels": 2, "n_sample": 2},
    }
    doc.update(overrides)
    return write_yaml(tmp_path / "config.yaml", doc)


def test_parse_config_defaults():
    cfg = parse_config({"experiment": "adaptive"})
    assert cfg.params["n"] == 3
    assert cfg.params["n_shot"] == 10_000
    assert cfg.params["m_levels"] == 7
    assert cfg.params["n_sample"] == 200
    assert cfg.params["p"] == 0.95
    assert cfg.seed == 0 and cfg.threads == 1


def test_parse_config_field_errors():
    with pytest.raises(ConfigError, match="experiment"):
        parse_config({"experiment": "nope"})
    with pytest.raises(ConfigError, match="missing required"):
        parse_config({})
    with pytest.raises(ConfigError, match="seed"):
        parse_config({"experiment": "mlae", "seed": -1})
    with pytest.raises(ConfigError, match="threads"):
        parse_config({"experiment": "mlae", "threads": 0})
    with pytest.raises(ConfigError, match="params.n_shot"):
        parse_config({"experiment": "mlae", "params": {"n_shot": 0}})
    with pytest.raises(ConfigError, match="params.p"):
        parse_config({"experiment": "mlae", "params": {"p": 1.5}})
    with pytest.raises(ConfigError, match="unknown field"):
        parse_config({"experiment": "mlae", "params": {"bogus": 1}})
    with pytest.raises(ConfigError, match="unknown top-level"):
        parse_config({"experiment": "mlae", "extra": 1})
    with pytest.raises(ConfigError, match="basis_mode"):
        parse_config({"experiment": "adaptive", "params": {"basis_mode": "magic"}})


def test_format_float_round_trip():
    for x in [math.pi, 1.0 / 3.0, 2.5e-17, 123456.789]:
        assert float(format_float(x)) == x


def test_run_writes_csv_figure_manifest(tmp_path, capsys):
    rc = main(["run", small_adaptive(tmp_path)])
    assert rc == 0
    out = tmp_path / "out"
    csv_text = (out / "adaptive.csv").read_text()
    assert csv_text.splitlines()[0] == ",".join(COLUMNS["adaptive"])
    assert len(csv_text.splitlines()) == 1 + 3  # header + m_levels+1 rows
    assert (out / "adaptive.png").stat().st_size > 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "adaptive"
    assert manifest["run_info"]["outputs"] == ["adaptive.csv", "adaptive.png"]


def test_run_no_figures_flag(tmp_path):
    rc = main(["run", small_adaptive(tmp_path), "--no-figures"])
    assert rc == 0
    assert not (tmp_path / "out" / "adaptive.png").exists()


def test_run_invalid_config_exit_code(tmp_path, capsys):
    path = write_yaml(tmp_path / "bad.yaml", {"experiment": "mlae", "params": {"n": 0}})
    rc = main(["run", path])
    assert rc == 2
    assert "params.n" in capsys.readouterr().err


def test_run_empty_sample_produces_header_only_csv(tmp_path):
    path = write_yaml(
        tmp_path / "c.yaml",
        {
            "experiment": "four-param",
            "out": str(tmp_path / "out"),
            "params": {"n": 2, "n_shot": 100, "m_levels": 1, "n_sample": 0},
        },
    )
    assert main(["run", path, "--no-figures"]) == 0
    lines = (tmp_path / "out" / "four-param.csv").read_text().splitlines()
    assert lines == [",".join(COLUMNS["four-param"])]


def test_run_deterministic_and_seed_override(tmp_path):
    cfg = small_adaptive(tmp_path)
    main(["run", cfg, "--out", str(tmp_path / "a"), "--no-figures"])
    main(["run", cfg, "--out", str(tmp_path / "b"), "--no-figures"])
    main(["run", cfg, "--out", str(tmp_path / "c"), "--seed", "4", "--no-figures"])
    a = (tmp_path / "a" / "adaptive.csv").read_bytes()
    b = (tmp_path / "b" / "adaptive.csv").read_bytes()
    c = (tmp_path / "c" / "adaptive.csv").read_bytes()
    assert a == b
    assert a != c


def test_threads_do_not_change_results(tmp_path):
    cfg = small_adaptive(tmp_path)
    main(["run", cfg, "--out", str(tmp_path / "t1"), "--threads", "1", "--no-figures"])
    main(["run", cfg, "--out", str(tmp_path / "t4"), "--threads", "4", "--no-figures"])
    assert (tmp_path / "t1" / "adaptive.csv").read_bytes() == (
        tmp_path / "t4" / "adaptive.csv"
    ).read_bytes()


def test_manifest_round_trip(tmp_path):
    cfg = small_adaptive(tmp_path)
    main(["run", cfg, "--no-figures"])
    manifest = tmp_path / "out" / "manifest.json"
    loaded = load_config(manifest)
    assert loaded.params["n_shot"] == 200
    main(["run", str(manifest), "--out", str(tmp_path / "again"), "--no-figures"])
    assert (tmp_path / "out" / "adaptive.csv").read_bytes() == (
        tmp_path / "again" / "adaptive.csv"
    ).read_bytes()


def test_row_seed_reproduces_row():
    """The seed column regenerates that row's sampled values in isolation."""
    params = {"n": 2, "b_max": 0.25, "p": 0.95, "n_shot": 200, "m_levels": 2, "n_sample": 3}
    rows = run_mlae(params, seed=9)
    single = dict(params, m_levels=1)
    redo = run_mlae(single, seed=9)
    assert redo[1]["seed"] == rows[1]["seed"]
    assert redo[1]["rmse_comp"] == rows[1]["rmse_comp"]


def test_all_experiments_smoke(tmp_path):
    cases = {
        "qcrb-sweep": {"n": 2, "m_levels": 2},
        "mlae": {"n": 2, "n_shot": 100, "m_levels": 1, "n_sample": 2},
        "four-param": {"n": 2, "n_shot": 500, "m_levels": 2, "n_sample": 1},
        "vqc-train": {"n": 2, "ansatz_layers": 2, "n_max_itr": 2},
        "barren": {"n_list": [2], "nl_list": [2], "n_sample": 3},
        "phase-mse": {"n": 2, "n_phi_list": [50], "n_sample": 3},
    }
    for experiment, params in cases.items():
        path = write_yaml(
            tmp_path / f"{experiment}.yaml",
            {"experiment": experiment, "out": str(tmp_path / experiment), "params": params},
        )
        assert main(["run", path]) == 0
        lines = (tmp_path / experiment / f"{experiment}.csv").read_text().splitlines()
        assert lines[0] == ",".join(COLUMNS[experiment])
        assert len(lines) > 1
        assert (tmp_path / experiment / f"{experiment}.png").exists()


def test_verify_subset_passes(tmp_path, capsys):
    path = write_yaml(
        tmp_path / "tol.yaml",
        {
            "seed": 0,
            "criteria": {
                1: {"off_diagonal_abs": 1e-9, "diagonal_rel": 1e-8},
                7: {"abs_gap": 5e-3},
                9: {"enabled": 1},
            },
        },
    )
    rc = main(["verify", path, "--out", str(tmp_path / "rep")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "verification: PASS" in out
    report = (tmp_path / "rep" / "verify_report.txt").read_text()
    assert report.count("[PASS]") == 3


def test_verify_corrupted_tolerances_fails_named_criterion(tmp_path, capsys):
    path = write_yaml(
        tmp_path / "tol.yaml",
        {"criteria": {1: {"off_diagonal_abs": 1e-9}, 7: {"abs_gap": 5e-3}}},
    )
    rc = main(["verify", path])
    out = capsys.readouterr().out
    assert rc == 1
    assert "[FAIL] criterion 1" in out
    assert "diagonal_rel" in out
    assert "[PASS] criterion 7" in out


def test_verify_unknown_criterion_number(tmp_path, capsys):
    path = write_yaml(tmp_path / "tol.yaml", {"criteria": {42: {}}})
    rc = main(["verify", path])
    assert rc == 2
    assert "no criterion numbered 42" in capsys.readouterr().err


def test_verify_tight_tolerance_fails(tmp_path, capsys):
    path = write_yaml(
        tmp_path / "tol.yaml", {"criteria": {7: {"abs_gap": 1e-12}}}
    )
    rc = main(["verify", path])
    out = capsys.readouterr().out
    assert rc == 1
    assert "[FAIL] criterion 7" in out


def test_write_csv_float_format(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(path, ["a", "b"], [{"a": 1, "b": 1.0 / 3.0}])
    assert path.read_text() == "a,b\n1,0.33333333333333331\n"
