"""Command-line entry point: `qae run <config>` and `qae verify <tolerances>`."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import yaml

from .acceptance import CRITERIA, run_all
from .config import ConfigError, load_config, write_csv, write_manifest
from .experiments import COLUMNS, DRIVERS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qae",
        description="Amplitude-estimation experiment runner with seeded reproducibility.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one experiment from a config file")
    run_p.add_argument("config", help="YAML config file (a saved manifest also works)")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--threads", type=int, default=None, help="trial-level worker threads")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument(
        "--no-figures", action="store_true", help="skip rendering the PNG figure"
    )

    ver_p = sub.add_parser("verify", help="run the acceptance criteria against stored tolerances")
    ver_p.add_argument("config", help="YAML/JSON tolerances file")
    ver_p.add_argument("--seed", type=int, default=None, help="override the verification seed")
    ver_p.add_argument("--threads", type=int, default=None, help="accepted for symmetry; unused")
    ver_p.add_argument("--out", default=None, help="also write the report to this directory")
    return parser


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config.seed = args.seed
    if args.threads is not None:
        config.threads = args.threads
    if args.out is not None:
        config.out = args.out

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows = DRIVERS[config.experiment](config.params, config.seed, config.threads)
    wall = time.perf_counter() - start

    csv_path = out_dir / f"{config.experiment}.csv"
    write_csv(csv_path, COLUMNS[config.experiment], rows)
    outputs = [csv_path.name]
    if not args.no_figures:
        from .figures import render

        fig_path = out_dir / f"{config.experiment}.png"
        render(config.experiment, rows, fig_path)
        outputs.append(fig_path.name)
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest_path, config, wall, outputs)
    outputs.append(manifest_path.name)
    for name in outputs:
        print(out_dir / name)
    return 0


def _load_tolerances(path: str):
    doc = yaml.safe_load(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ConfigError(f"tolerances: expected a mapping, got {type(doc).__name__}")
    seed = doc.get("seed", 0)
    body = doc.get("criteria", None)
    if body is None:
        body = {k: v for k, v in doc.items() if k not in ("seed",)}
    if not isinstance(body, dict):
        raise ConfigError("tolerances: 'criteria' must be a mapping")
    normalized = {}
    for k, v in body.items():
        try:
            num = int(k)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerances: criterion key {k!r} is not an integer")
        if num not in CRITERIA:
            raise ConfigError(f"tolerances: no criterion numbered {num}")
        normalized[num] = v
    return normalized, seed


def cmd_verify(args) -> int:
    try:
        tolerances, seed = _load_tolerances(args.config)
    except (ConfigError, OSError, yaml.YAMLError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        seed = args.seed
    results = run_all(tolerances, seed=seed, numbers=sorted(tolerances))
    lines = [r.report_line() for r in results]
    for line in lines:
        print(line)
    all_passed = all(r.passed for r in results)
    print("verification:", "PASS" if all_passed else "FAIL")
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "verify_report.txt").write_text("\n".join(lines) + "\n")
    return 0 if all_passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
