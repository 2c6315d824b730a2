"""Command-line front end: ``simulate``, ``estimate``, ``evaluate`` and ``batch``.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data
errors. Diagnostics go to stderr as ``gyrosat: <kind> error: <message>``.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .config import ConfigError, load_kv, rig_config, scenario
from .freefall import RecoveryError
from .imu import StreamError
from .metrics import (
    ErrorReport,
    EvaluationError,
    aggregate,
    align_truth,
    plot_series,
    saturation_error_stats,
)
from .pipeline import estimate
from .sim import ScenarioError, run_scenario
from .smoother import SmoothingError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DATA_ERRORS = (
    io.CsvFormatError,
    StreamError,
    SmoothingError,
    EvaluationError,
    RecoveryError,
    ScenarioError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"gyrosat: usage error: {message}\n")


@dataclass
class RunManifest:
    """What produced the files in an output directory."""

    command: str
    out: str
    inputs: list[str] = field(default_factory=list)
    config: str | None = None
    seed: int | None = None
    flags: dict[str, object] = field(default_factory=dict)

    def text(self) -> str:
        lines = [f"command = {self.command}"]
        if self.config is not None:
            lines.append(f"config = {self.config}")
        if self.seed is not None:
            lines.append(f"seed = {self.seed}")
        for path in self.inputs:
            lines.append(f"input = {path}")
        lines.append(f"out = {self.out}")
        for key in sorted(self.flags):
            lines.append(f"{key} = {self.flags[key]}")
        return "\n".join(lines) + "\n"

    def write(self, directory: Path) -> Path:
        path = directory / f"manifest_{self.command}.txt"
        io.atomic_write(path, self.text())
        return path


def _require_file(path: str | os.PathLike, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


def _kv(config: str | None) -> dict[str, str]:
    if config is None:
        return {}
    _require_file(config, "config file")
    return load_kv(config)


# -- simulate ---------------------------------------------------------------


def simulate_to(config: str | None, seed: int | None, out: Path) -> None:
    kv = _kv(config)
    sc = scenario(kv, seed)
    result = run_scenario(sc)
    out.mkdir(parents=True, exist_ok=True)
    io.write_imu_csv(out / "measurements.csv", result.measurements)
    io.write_truth_csv(out / "truth.csv", result.truth_t, result.truth_omega)
    RunManifest(
        "simulate",
        str(out),
        config=config,
        seed=sc.seed,
        flags={"duration": repr(sc.duration), "collisions": len(sc.collisions)},
    ).write(out)


def cmd_simulate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    simulate_to(args.config, args.seed, out)
    print(f"wrote {out / 'measurements.csv'} and {out / 'truth.csv'}")
    return EXIT_OK


# -- estimate ---------------------------------------------------------------


def estimate_to(measurements: Path, config: str | None, out: Path, frozen_axis: bool) -> None:
    cfg = rig_config(_kv(config), frozen_axis=frozen_axis or None)
    samples = io.read_imu_csv(measurements)
    if len(samples) < 2:
        raise SmoothingError(f"{measurements}: at least 2 samples are required")
    result = estimate(samples, cfg)
    traj = result.trajectory
    out.mkdir(parents=True, exist_ok=True)
    io.write_estimates_csv(
        out / "estimates.csv", traj.times, traj.omega, traj.omega_var, traj.input_sources
    )
    io.write_windows_csv(out / "windows.csv", result.windows)
    RunManifest(
        "estimate",
        str(out),
        inputs=[str(measurements)],
        config=config,
        flags={"frozen_axis": cfg.frozen_axis, "windows": len(result.windows)},
    ).write(out)


def cmd_estimate(args: argparse.Namespace) -> int:
    measurements = _require_file(args.measurements, "measurement file")
    out = Path(args.out)
    estimate_to(measurements, args.config, out, args.frozen_axis)
    print(f"wrote {out / 'estimates.csv'} and {out / 'windows.csv'}")
    return EXIT_OK


# -- evaluate ---------------------------------------------------------------


def _read_stream(path: Path):
    """Estimates CSV or a raw measurement CSV, as ``(t, omega, var)``."""
    if io.header_of(path) == io.IMU_HEADER:
        samples = io.read_imu_csv(path)
        t = np.array([s.t for s in samples])
        return t, np.array([s.gyro for s in samples]).reshape(-1, 3), None
    t, omega, var, _ = io.read_estimates_csv(path)
    return t, omega, var


def evaluate_run(
    run: str,
    estimates: Path,
    truth: Path,
    windows: Path,
    measurements: Path,
    norm: str = "axis",
    plot_path: Path | None = None,
) -> ErrorReport:
    truth_arrays = io.read_truth_csv(truth)
    wins = io.read_windows_csv(windows)
    t_est, w_est, v_est = _read_stream(estimates)
    t_raw, w_raw, _ = _read_stream(measurements)

    raw_pairs = align_truth(truth_arrays, (t_raw, w_raw))
    est_pairs = align_truth(truth_arrays, (t_est, w_est, v_est))
    report = saturation_error_stats(raw_pairs, est_pairs, wins, run, norm)
    if plot_path is not None:
        rows = plot_series(raw_pairs, est_pairs, wins)
        io.atomic_write(
            plot_path,
            "t,axis,truth,raw,estimate,lower,upper\n"
            + "".join(
                f"{io.fmt(t)},{a},{io.fmt(tr)},{io.fmt(r)},{io.fmt(e)},{io.fmt(lo)},{io.fmt(hi)}\n"
                for t, a, tr, r, e, lo, hi in rows
            ),
        )
    return report


def _report_files(
    out: Path, reports: Sequence[ErrorReport], pooling: str, skipped: Sequence[str] = ()
) -> ErrorReport | None:
    rows = [row for r in reports for row in r.rows()]
    headline = None
    text = [r.text() for r in reports]
    if len(reports) > 1:
        pooled = aggregate(reports, "pooled")
        per_run = aggregate(reports, "per-run")
        rows += pooled.rows() + per_run.rows()
        headline = pooled if pooling == "pooled" else per_run
        text.append(headline.text())
        text.append(f"median error reduction ({pooling}): {headline.median_reduction:.1f}%")
    elif reports:
        headline = reports[0]
        text.append(f"median error reduction: {headline.median_reduction:.1f}%")
    for run in skipped:
        text.append(f"run {run}: skipped (no saturated samples)")
    out.mkdir(parents=True, exist_ok=True)
    io.write_report_csv(out / "report.csv", rows)
    io.atomic_write(out / "report.txt", "\n".join(text) + "\n")
    return headline


def _run_dirs(root: Path) -> list[Path]:
    return sorted(
        d for d in root.iterdir()
        if d.is_dir() and all((d / f).is_file() for f in ("estimates.csv", "truth.csv", "windows.csv", "measurements.csv"))
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    norm = "vector" if args.vector_norm else "axis"
    pooling = "per-run" if args.per_run else "pooled"
    if args.runs:
        root = Path(args.runs)
        if not root.is_dir():
            raise UsageError(f"runs directory not found: {root}")
        reports, skipped = [], []
        for d in _run_dirs(root):
            try:
                reports.append(evaluate_run(
                    d.name, d / "estimates.csv", d / "truth.csv", d / "windows.csv",
                    d / "measurements.csv", norm,
                    d / "plot_data.csv" if args.plot_data else None,
                ))
            except EvaluationError:
                skipped.append(d.name)
        if not reports:
            raise EvaluationError(f"no evaluable runs under {root}")
    else:
        missing = [n for n in ("estimates", "truth", "windows", "measurements") if getattr(args, n) is None]
        if missing:
            raise UsageError("missing " + ", ".join(f"--{m}" for m in missing) + " (or use --runs)")
        paths = {n: _require_file(getattr(args, n), f"{n} file") for n in ("estimates", "truth", "windows", "measurements")}
        reports = [evaluate_run(
            args.run_name, paths["estimates"], paths["truth"], paths["windows"],
            paths["measurements"], norm, out / "plot_data.csv" if args.plot_data else None,
        )]
        skipped = []
    headline = _report_files(out, reports, pooling, skipped)
    print(headline.text() if headline else "")
    return EXIT_OK


# -- batch ------------------------------------------------------------------


def _batch_one(job: tuple[str | None, int, str, bool]) -> str:
    config, seed, run_dir, frozen = job
    d = Path(run_dir)
    simulate_to(config, seed, d)
    estimate_to(d / "measurements.csv", config, d, frozen)
    return run_dir


def cmd_batch(args: argparse.Namespace) -> int:
    if args.config is not None:
        _require_file(args.config, "config file")
        load_kv(args.config)
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    out = Path(args.out)
    first = args.seed if args.seed is not None else 0
    jobs = [
        (args.config, seed, str(out / f"seed_{seed:04d}"), args.frozen_axis)
        for seed in range(first, first + args.runs)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(_batch_one, jobs))
    else:
        for job in jobs:
            _batch_one(job)

    norm = "vector" if args.vector_norm else "axis"
    reports, skipped = [], []
    for _, _, run_dir, _ in jobs:
        d = Path(run_dir)
        try:
            reports.append(evaluate_run(
                d.name, d / "estimates.csv", d / "truth.csv", d / "windows.csv",
                d / "measurements.csv", norm, d / "plot_data.csv" if args.plot_data else None,
            ))
        except EvaluationError:
            skipped.append(d.name)
    if not reports:
        raise EvaluationError("no run produced saturated samples")
    pooling = "per-run" if args.per_run else "pooled"
    headline = _report_files(out, reports, pooling, skipped)
    RunManifest(
        "batch", str(out), config=args.config, seed=first,
        flags={"runs": args.runs, "frozen_axis": args.frozen_axis, "pooling": pooling, "norm": norm},
    ).write(out)
    print(headline.text())
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gyrosat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a tumbling run")
    p.add_argument("--config", help="scenario config file")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="recover and smooth a measurement file")
    p.add_argument("measurements", help="IMU CSV (t,gx,gy,gz,ax,ay,az)")
    p.add_argument("--config", help="rig config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--frozen-axis", action="store_true",
                   help="keep the rotation axis fixed at window entry")
    p.set_defaults(func=cmd_estimate)

    def eval_flags(p: argparse.ArgumentParser) -> None:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--pooled", action="store_true", help="headline pools all samples (default)")
        g.add_argument("--per-run", action="store_true", help="headline is the median of per-run statistics")
        p.add_argument("--plot-data", action="store_true", help="write plot_data.csv per run")
        p.add_argument("--vector-norm", action="store_true",
                       help="score the 3-vector error norm instead of the saturated axis")

    p = sub.add_parser("evaluate", help="score estimates against truth inside saturation windows")
    p.add_argument("--estimates")
    p.add_argument("--truth")
    p.add_argument("--windows")
    p.add_argument("--measurements", help="raw IMU CSV used as the baseline")
    p.add_argument("--runs", help="directory of run subdirectories to evaluate together")
    p.add_argument("--run-name", default="run")
    p.add_argument("--out", required=True)
    eval_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("batch", help="simulate, estimate and evaluate several seeds")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, help="first seed (default 0)")
    p.add_argument("--runs", type=int, default=32, help="number of seeds")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--frozen-axis", action="store_true")
    eval_flags(p)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"gyrosat: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"gyrosat: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
