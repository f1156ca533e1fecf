"""Command-line entry point.

Usage::

    rmtwave {lot,theorem,kwe,weingarten-validate,rigidity} [--config PATH] [--seed U64] [--threads INT] [--out DIR]
    rmtwave run CONFIG [--seed U64] [--threads INT] [--out DIR]

Each run writes ``<name>_report.json``, ``<name>_summary.json`` and CSV or JSON
data files into the output directory.

Exit codes
----------
0  every enabled check passed
1  at least one check failed
2  invalid configuration or arguments
3  output directory not writable
4  numerical or ensemble failure during the run
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..dynamics import EnsembleError, write_moments_csv, EnsembleMoment
from ..kwe import write_density_csv
from .checks import kwe_experiment, rigidity_experiment, weingarten_validate
from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .experiments import StatisticalPowerError, WindowError, lot_experiment, theorem_experiment, write_csv

__all__ = ["EXIT_OK", "EXIT_FAILED", "EXIT_CONFIG", "EXIT_OUTPUT", "EXIT_RUNTIME", "main", "run", "execute"]

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3
EXIT_RUNTIME = 4


def _u64(raw: str) -> int:
    try:
        v = int(raw, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{raw!r} is not an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(raw: str) -> int:
    try:
        v = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{raw!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtwave", description="Random-matrix wave turbulence experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment configuration file")
    common.add_argument("--seed", type=_u64, help="master seed (overrides [ensemble] seed)")
    common.add_argument("--threads", type=_positive, help="worker threads (overrides [ensemble] threads)")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sub.add_parser(kind, parents=[common], help=f"run the {kind} experiment")
    run_p = sub.add_parser("run", parents=[common], help="run the experiment named in the config file")
    run_p.add_argument("config_path", nargs="?", type=Path, help="configuration file")
    return parser


def _write_artifacts(config: ExperimentConfig, report, payload) -> list:
    out = config.out_dir
    name = config.name
    files = []
    kind = config.kind
    if kind == "lot":
        for res in payload:
            path = out / f"{name}_N{res.N}.csv"
            k = np.arange(-res.N, res.N + 1)
            pred = res.prediction
            rows = []
            for i, t in enumerate(res.times):
                for j in range(k.size):
                    rows.append(
                        (
                            float(t),
                            int(k[j]),
                            float(res.expansion[i, j]),
                            float(res.expansion_stderr[i, j]),
                            float(pred[i, j]),
                            float(res.parts[i, 1, j]),
                            float(res.stderr[i, 1, j]),
                        )
                    )
            write_csv(path, ["t", "k", "expansion", "stderr", "prediction", "mu2_mean", "mu2_stderr"], rows)
            files.append(path.name)
    elif kind == "theorem":
        for p in payload:
            path = out / f"{name}_N{p.N}.csv"
            write_moments_csv(path, [EnsembleMoment(p.t, p.mean, p.stderr, int(report.inputs["ensemble"]))])
            files.append(path.name)
    elif kind == "kwe":
        path = out / f"{name}_density.csv"
        write_density_csv(path, payload.times, payload.densities)
        files.append(path.name)
    elif kind == "weingarten-validate":
        path = out / f"{name}_tables.json"
        path.write_text(json.dumps(payload, indent=2) + "\n")
        files.append(path.name)
    elif kind == "rigidity":
        path = out / f"{name}_rigidity.csv"
        rows = [(int(r[0]),) + tuple(float(x) for x in r[1:]) for r in payload]
        write_csv(path, ["N", "l1", "p50", "p90", "p99", "bulk_count", "bulk_predicted"], rows)
        files.append(path.name)
    return files


def execute(config: ExperimentConfig):
    """Run the configured experiment, returning ``(report, payload)``."""
    if config.kind == "lot":
        return lot_experiment(config)
    if config.kind == "theorem":
        return theorem_experiment(config)
    if config.kind == "kwe":
        return kwe_experiment(config)
    if config.kind == "weingarten-validate":
        return weingarten_validate(config)
    return rigidity_experiment(config)


def run(config: ExperimentConfig, stream=None) -> int:
    """Execute, write report, summary and data files, and return the exit code."""
    stream = sys.stdout if stream is None else stream
    out = config.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc.strerror}", file=sys.stderr)
        return EXIT_OUTPUT
    try:
        report, payload = execute(config)
    except (ConfigError, WindowError, StatisticalPowerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EnsembleError, FloatingPointError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        report.artifacts = _write_artifacts(config, report, payload)
        (out / f"{config.name}_report.json").write_text(report.to_json() + "\n")
        (out / f"{config.name}_summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"error: cannot write results: {exc.strerror}", file=sys.stderr)
        return EXIT_OUTPUT
    for m in report.metrics:
        status = "info" if m.passed is None else ("PASS" if m.passed else "FAIL")
        print(f"{status:4s}  {m.name} = {m.value:.6g}" + (f"  [{m.tolerance}]" if m.tolerance else ""), file=stream)
    return EXIT_OK if report.all_passed else EXIT_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            path = args.config_path or args.config
            if path is None:
                parser.error("run needs a configuration file")
            config = load_config(path)
        else:
            config = load_config(args.config) if args.config else ExperimentConfig(kind=args.command)
            config = replace(config, kind=args.command)
        config = config.with_overrides(seed=args.seed, threads=args.threads, out_dir=args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
