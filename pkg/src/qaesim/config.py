"""Run-configuration parsing, validation, and the run manifest.

Config files are YAML (JSON is a subset, so a saved manifest reloads as a
config). Recognized top-level keys: experiment, seed, threads, out, params.
A manifest adds a `run_info` block, which the validator ignores.
"""

from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml


class ConfigError(ValueError):
    """Invalid or missing configuration value; message names the field."""


def _check_int(params, name, lo=None, hi=None):
    v = params[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"params.{name}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"params.{name}: must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"params.{name}: must be <= {hi}, got {v}")


def _check_float(params, name, lo=None, hi=None, lo_open=False, hi_closed=True):
    v = params[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"params.{name}: expected a number, got {v!r}")
    v = float(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        op = ">" if lo_open else ">="
        raise ConfigError(f"params.{name}: must be {op} {lo}, got {v}")
    if hi is not None and (v > hi if hi_closed else v >= hi):
        raise ConfigError(f"params.{name}: must be <= {hi}, got {v}")
    params[name] = v


def _check_int_list(params, name, lo=None):
    v = params[name]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"params.{name}: expected a non-empty list, got {v!r}")
    for x in v:
        if isinstance(x, bool) or not isinstance(x, int):
            raise ConfigError(f"params.{name}: expected integers, got {x!r}")
        if lo is not None and x < lo:
            raise ConfigError(f"params.{name}: entries must be >= {lo}, got {x}")
    params[name] = list(v)


# Defaults follow the reference experiment settings: n=3 register qubits,
# 10^4 shots per circuit, exponential schedule up to 2^6, 200 samples,
# survival probability 0.95 per amplification step.
_COMMON = {"n": 3, "b_max": 0.25, "p": 0.95, "n_shot": 10_000, "m_levels": 7}

PARAM_DEFAULTS = {
    "qcrb-sweep": dict(_COMMON),
    "mlae": dict(_COMMON, n_sample=200),
    "adaptive": dict(
        _COMMON,
        n_sample=200,
        n_phi_shot=None,
        basis_mode="exact",
        ansatz_layers=6,
        n_max_itr=50,
        learning_rate=0.1,
    ),
    "four-param": dict(_COMMON, n_shot=100_000, n_sample=50, pc0=0.942, pc1=0.880),
    "vqc-train": dict(
        _COMMON, m_levels=0, ansatz_layers=6, n_max_itr=100, learning_rate=0.1
    ),
    "barren": {
        "b_max": 0.25,
        "n_list": [4, 6, 8],
        "nl_list": [4, 6, 8, 10, 12, 14],
        "n_sample": 300,
    },
    "phase-mse": {
        "n": 3,
        "b_max": 2.0 / 3.0,
        "n_phi_list": [100, 1000, 10_000],
        "n_sample": 200,
    },
}

EXPERIMENTS = tuple(PARAM_DEFAULTS)


def _validate_params(experiment: str, params: dict) -> dict:
    defaults = PARAM_DEFAULTS[experiment]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(
            f"params: unknown field(s) {sorted(unknown)} for experiment {experiment!r}"
        )
    merged = {**defaults, **params}
    if "n" in merged:
        _check_int(merged, "n", lo=1, hi=12)
    if "b_max" in merged:
        _check_float(merged, "b_max", lo=0.0, lo_open=True, hi=float(np.pi))
    if "p" in merged:
        _check_float(merged, "p", lo=0.0, lo_open=True, hi=1.0)
    if "n_shot" in merged:
        _check_int(merged, "n_shot", lo=1)
    if "m_levels" in merged:
        _check_int(merged, "m_levels", lo=0, hi=12)
    if "n_sample" in merged:
        _check_int(merged, "n_sample", lo=0)
    if "n_phi_shot" in merged and merged["n_phi_shot"] is not None:
        _check_int(merged, "n_phi_shot", lo=1)
    if "basis_mode" in merged and merged["basis_mode"] not in ("exact", "train"):
        raise ConfigError(
            f"params.basis_mode: expected 'exact' or 'train', got {merged['basis_mode']!r}"
        )
    if "ansatz_layers" in merged:
        _check_int(merged, "ansatz_layers", lo=1)
    if "n_max_itr" in merged:
        _check_int(merged, "n_max_itr", lo=1)
    if "learning_rate" in merged:
        _check_float(merged, "learning_rate", lo=0.0, lo_open=True)
    if "pc0" in merged:
        _check_float(merged, "pc0", lo=0.0, lo_open=True, hi=1.0)
    if "pc1" in merged:
        _check_float(merged, "pc1", lo=0.0, lo_open=True, hi=1.0)
    if "n_list" in merged:
        _check_int_list(merged, "n_list", lo=1)
    if "nl_list" in merged:
        _check_int_list(merged, "nl_list", lo=1)
    if "n_phi_list" in merged:
        _check_int_list(merged, "n_phi_list", lo=1)
    return merged


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    threads: int = 1
    out: str = "results"
    params: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "threads": self.threads,
            "out": self.out,
            "params": self.params,
        }


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"config root: expected a mapping, got {type(raw).__name__}")
    known = {"experiment", "seed", "threads", "out", "params", "run_info"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"config: unknown top-level field(s) {sorted(unknown)}")
    if "experiment" not in raw:
        raise ConfigError("config: missing required field 'experiment'")
    experiment = raw["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment: {experiment!r} is not one of {sorted(EXPERIMENTS)}"
        )
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: expected a non-negative integer, got {seed!r}")
    threads = raw.get("threads", 1)
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads: expected a positive integer, got {threads!r}")
    out = raw.get("out", "results")
    if not isinstance(out, str) or not out:
        raise ConfigError(f"out: expected a non-empty path string, got {out!r}")
    params = raw.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError(f"params: expected a mapping, got {type(params).__name__}")
    params = _validate_params(experiment, params)
    return ExperimentConfig(
        experiment=experiment, seed=seed, threads=threads, out=out, params=params
    )


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config: could not parse {path}: {e}") from e
    return parse_config(raw)


def format_float(x) -> str:
    """17-significant-digit decimal form, round-trip exact for doubles."""
    return format(float(x), ".17g")


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            if isinstance(v, bool):
                cells.append(str(int(v)))
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(format_float(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def write_manifest(
    path: Path, config: ExperimentConfig, wall_time: float, outputs: list[str]
) -> None:
    import qaesim

    doc = config.resolved()
    doc["run_info"] = {
        "package_version": qaesim.__version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "wall_time_seconds": wall_time,
        "outputs": outputs,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
