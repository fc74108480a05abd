"""Command-line front end: ``dualmuscle {run,compare,sweep,validate}``.

Exit codes: 0 ok, 1 failed self-check, 2 bad config, 3 simulation halted.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .checks import all_checks
from .config import MANIFEST_MARKER, apply_overrides, dumps_config, load_config, parse_text
from .observers import ParameterCollapseError
from .simkit import ConfigError, SimulationHalted, compute_metrics, run_scenario

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_HALT = 0, 1, 2, 3

COMPARE_COLUMNS = ("state.max_abs", "x2.rmse", "delta.rmse", "u1.rmse", "u2.rmse",
                   "a1.rmse", "a2.rmse", "x2.convergence_time")


def metrics_window(duration):
    return (min(5.0, 0.5 * duration), duration)


def build_config(args, extra=()):
    """Config from --config plus --set, --seed, --step and --observers, validated."""
    cfg = load_config(args.config)
    overrides = list(args.set or []) + list(extra)
    if args.seed is not None:
        overrides.append(f"noise.seed={args.seed}")
    if args.step is not None:
        overrides.append(f"sim.step={args.step}")
    if args.observers:
        overrides.append(f"sim.observers={args.observers}")
    return apply_overrides(cfg, overrides).validate()


def write_manifest(path, command, cfg, outputs, wall_clock):
    lines = [
        "# dualmuscle run manifest; rerun with: dualmuscle run --config <this file>",
        f"version = {__version__}",
        f"command = {command}",
        f"seed = {cfg.noise.seed}",
        f"wall_clock_s = {wall_clock:.3f}",
    ]
    lines += [f"output.{k} = {v}" for k, v in outputs.items()]
    Path(path).write_text("\n".join(lines) + "\n" + MANIFEST_MARKER + "\n" + dumps_config(cfg),
                          encoding="utf-8")


def execute(cfg, outdir, command="run", plots=False, extra_outputs=None):
    """Simulate, then write trajectory, metrics, config snapshot and manifest.

    Returns ``(log, metrics)``. On a halt the partial trajectory is still
    written before ``SimulationHalted`` propagates.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outputs = {"trajectory": "trajectory.csv", "config": "config.cfg", "manifest": "manifest.txt"}
    (out / "config.cfg").write_text(dumps_config(cfg), encoding="utf-8")
    try:
        log = run_scenario(cfg)
    except SimulationHalted as exc:
        if exc.log is not None:
            exc.log.to_csv(out / "trajectory.csv")
        write_manifest(out / "manifest.txt", command, cfg, outputs, time.perf_counter() - t0)
        raise
    log.to_csv(out / "trajectory.csv")
    metrics = compute_metrics(log, window=metrics_window(cfg.duration), config=cfg)
    (out / "metrics.txt").write_text(metrics.to_text(), encoding="utf-8")
    outputs["metrics"] = "metrics.txt"
    if plots:
        from .plots import plot_all

        for p in plot_all(log, out):
            outputs[p.stem] = p.name
    outputs.update(extra_outputs or {})
    write_manifest(out / "manifest.txt", command, cfg, outputs, time.perf_counter() - t0)
    return log, metrics


def _halted(exc):
    print(f"error: simulation halted at tau={exc.tau:.6g}: {exc.reason}", file=sys.stderr)
    return EXIT_HALT


def cmd_run(args):
    cfg = build_config(args)
    try:
        _, metrics = execute(cfg, args.out)
    except SimulationHalted as exc:
        return _halted(exc)
    m = metrics.values
    print(f"wrote {args.out}: tracking max |x1 - r| = {m.get('tracking.max_abs', math.nan):.3e}")
    return EXIT_OK


def comparison_rows(metrics, observers):
    return [[o] + [metrics.values.get(f"{o}.{c}", math.nan) for c in COMPARE_COLUMNS] for o in observers]


def cmd_compare(args):
    cfg = build_config(args)
    if len(cfg.observers) < 2:
        raise ConfigError(f"compare needs at least 2 observers, got {list(cfg.observers)}")
    try:
        _, metrics = execute(cfg, args.out, command="compare", plots=True,
                             extra_outputs={"comparison": "comparison.csv"})
    except SimulationHalted as exc:
        return _halted(exc)
    rows = comparison_rows(metrics, cfg.observers)
    with open(Path(args.out) / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("observer",) + COMPARE_COLUMNS)
        w.writerows(rows)
    print(f"{'observer':<9}" + "".join(f"{c:>22}" for c in COMPARE_COLUMNS))
    for r in rows:
        print(f"{r[0]:<9}" + "".join(f"{v:>22.4e}" for v in r[1:]))
    rank = sorted(cfg.observers, key=lambda o: metrics.values[f"{o}.x2.rmse"])
    print("x2 rmse ordering (best first): " + " < ".join(rank))
    return EXIT_OK


def _sweep_one(job):
    text, outdir = job
    from .config import loads_config

    cfg = loads_config(text)
    try:
        _, metrics = execute(cfg, outdir, command="sweep")
    except SimulationHalted as exc:
        return "halted", {}, str(exc)
    except ParameterCollapseError as exc:
        return "halted", {}, str(exc)
    return "ok", metrics.values, ""


def cmd_sweep(args):
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if len(values) < 2:
        raise ConfigError(f"sweep needs at least 2 values, got {values}")
    base = build_config(args)
    if args.param not in parse_text(dumps_config(base)) and not args.param.startswith("tendon."):
        raise ConfigError(f"unknown sweep parameter {args.param!r}")
    jobs, dirs = [], []
    for i, v in enumerate(values):
        cfg = apply_overrides(base, [f"{args.param}={v}"]).validate()
        d = Path(args.out) / f"run{i:02d}"
        dirs.append(d)
        jobs.append((dumps_config(cfg), str(d)))
    workers = max(1, min(args.jobs or os.cpu_count() or 1, len(jobs)))
    if workers == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    keys = sorted({k for _, m, _ in results for k in m})
    Path(args.out).mkdir(parents=True, exist_ok=True)
    with open(Path(args.out) / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "value", "status", "directory"] + keys)
        for v, d, (status, m, _) in zip(values, dirs, results):
            w.writerow([args.param, v, status, d.name] + [repr(m.get(k, math.nan)) for k in keys])
    worst = EXIT_OK
    for v, (status, _, msg) in zip(values, results):
        print(f"{args.param} = {v}: {status}" + (f" ({msg})" if msg else ""))
        if status != "ok":
            worst = EXIT_HALT
    return worst


def cmd_validate(args):
    checks = all_checks()
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def make_parser():
    ap = argparse.ArgumentParser(prog="dualmuscle", description="Two-muscle plant, controller and observer runs")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", default="scenario_noisefree.cfg",
                       help="config file, run manifest, or a bundled scenario name")
        if out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int, help="noise seed")
        p.add_argument("--step", type=float, help="integration step")
        p.add_argument("--observers", help="comma-separated subset of hgo,smo,asmo")

    common(sub.add_parser("run", help="simulate one scenario"))
    common(sub.add_parser("compare", help="run several observers on the same measurements"))
    sw = sub.add_parser("sweep", help="one run per parameter value")
    common(sw)
    sw.add_argument("--param", required=True, help="dotted config key, e.g. observer.hgo.eps_h")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--jobs", type=int, help="worker processes")
    common(sub.add_parser("validate", help="run the model and gain self-checks"), out=False)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    handler = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterCollapseError as exc:
        print(f"error: simulation halted: {exc}", file=sys.stderr)
        return EXIT_HALT


if __name__ == "__main__":
    sys.exit(main())
