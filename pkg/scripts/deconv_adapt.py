#!/usr/bin/env python3
"""
Adaptive deconvolution under stable noise of unknown self-similarity index.

Subcommands:
  experiment  Monte Carlo selection study (success counts per cell)
  probe       selection histogram at an off-grid index
  simulate    write a simulated sample, one value per line
  select      select the noise index for a sample
  density     deconvolution density estimate on an x grid
  quadfun     estimate of the integral of f^2
  gof         L2 goodness-of-fit test against a named null

CSV goes to stdout (or --out); status lines go to stderr.
"""

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace

# Add parent directory to path to find the utils package
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

import numpy as np

from scripts.utils.errors import ConfigError, NumericalError
from scripts.utils.gof import null_from_name
from scripts.utils.harness import ExperimentRunner, emit_report, write_manifest
from scripts.utils.harness import pipelines
from scripts.utils.harness.report import write_report
from scripts.utils.settings import load_settings

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def status(message):
    print(message, file=sys.stderr)


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"❌ {message}\n")


def _csv_writer(out):
    return csv.writer(out, lineterminator="\n")


def _open_out(path):
    if path is None:
        return sys.stdout
    try:
        return open(path, "w", newline="")
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from e


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def cmd_experiment(args, settings):
    config = settings.experiment
    if args.workers is not None or args.m is not None or args.seed is not None:
        config = replace(
            config,
            workers=args.workers if args.workers is not None else config.workers,
            m=args.m if args.m is not None else config.m,
            master_seed=args.seed if args.seed is not None else config.master_seed,
        )
    cells = len(config.cells())
    status(f"🚀 Running {cells} cell(s), m={config.m}, workers={config.workers}")
    status(f"📊 Grid {config.selector.grid.values}, signals {[s.name for s in config.signals]}, n {config.ns}")

    def progress(cell):
        mark = "❌" if cell.error else "✅"
        status(f"  {mark} {cell.signal} s={cell.s:g} n={cell.n}: {cell.success_count}/{cell.m}"
               + (f" ({cell.error})" if cell.error else ""))

    report = ExperimentRunner(config, progress).run_experiment()
    if args.out:
        emit_report(report, args.out)
        manifest = write_manifest(config, args.out, report)
        status(f"📄 Report: {args.out}")
        status(f"📄 Manifest: {manifest}")
    else:
        write_report(report, sys.stdout)
    if report.failed:
        status(f"⚠️  {len(report.failed)} cell(s) failed")
    return EXIT_OK


def cmd_probe(args, settings):
    config = settings.experiment
    status(f"🚀 Off-grid probe at s={args.true_s:g}, m={config.m}")
    cells = ExperimentRunner(config).run_offgrid_probe(args.true_s, args.n)
    out = _open_out(args.out)
    try:
        writer = _csv_writer(out)
        writer.writerow(["signal", "n", "true_s", "m", "selected", "count", "mode", "modal_share", "error"])
        for cell in cells:
            for value, count in cell.counts or ((None, 0),):
                writer.writerow([cell.signal, cell.n, _fmt(cell.true_s), cell.m, _fmt(value), count,
                                 _fmt(cell.mode), f"{cell.modal_share:.2f}", cell.error])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_simulate(args, settings):
    sample = pipelines.simulate(args.signal, args.s, args.n, args.seed, args.pre_scale, args.gamma)
    if args.out:
        sample.write(args.out)
        status(f"✅ Wrote {sample.n} observations to {args.out}")
    else:
        np.savetxt(sys.stdout, sample.values, fmt="%.17g")
    return EXIT_OK


def cmd_select(args, settings):
    sample = pipelines.load_sample(args.sample)
    result = pipelines.select(sample, settings.selector, args.gamma)
    writer = _csv_writer(sys.stdout)
    writer.writerow(["s_hat", "fallback_used", "selected"])
    writer.writerow([_fmt(result.s_hat), str(result.fallback_used).lower(), " ".join(map(str, result.selected))])
    writer.writerow([])
    writer.writerow(["k", "s_k", "u", "modulus", "lower", "upper", "member"])
    for d in result.diagnostics:
        writer.writerow([d.k, _fmt(d.s_k), _fmt(d.u), _fmt(d.modulus), _fmt(d.lower), _fmt(d.upper),
                         str(d.member).lower()])
    status(f"✅ Selected s={result.s_hat:g}" + (" (fallback)" if result.fallback_used else ""))
    return EXIT_OK


def cmd_density(args, settings):
    sample = pipelines.load_sample(args.sample)
    if args.points < 1:
        raise ConfigError("--points must be >= 1")
    xs = np.linspace(args.x_min, args.x_max, args.points)
    result = pipelines.density(sample, settings, xs, args.gamma, args.s)
    estimate = result.estimate
    out = _open_out(args.out)
    try:
        writer = _csv_writer(out)
        writer.writerow(["x", "density", "converged"])
        for x, value, ok in zip(estimate.xs, estimate.values, estimate.converged):
            writer.writerow([_fmt(float(x)), _fmt(float(value)), str(bool(ok)).lower()])
    finally:
        if out is not sys.stdout:
            out.close()
    status(f"✅ Density at {xs.size} point(s), s={estimate.s_hat:g}, h={estimate.h:.6g}")
    if not estimate.all_converged:
        status("⚠️  Quadrature did not converge at some points")
    return EXIT_OK


def cmd_quadfun(args, settings):
    sample = pipelines.load_sample(args.sample)
    result = pipelines.quadfun(sample, settings, args.gamma, args.s)
    writer = _csv_writer(sys.stdout)
    writer.writerow(["T_hat", "h", "s_hat", "n"])
    writer.writerow([_fmt(result.value), _fmt(result.h), _fmt(result.s_hat), result.n])
    return EXIT_OK


def cmd_gof(args, settings):
    sample = pipelines.load_sample(args.sample)
    null = null_from_name(args.null, args.pre_scale)
    if args.c_star is not None:
        settings = replace(settings, test=settings.test.with_c_star(args.c_star))
    outcome = pipelines.gof(sample, null, settings, args.gamma, args.s)
    writer = _csv_writer(sys.stdout)
    writer.writerow(["statistic", "threshold_sq", "c_star", "reject", "s_hat", "h", "rate"])
    writer.writerow([_fmt(outcome.statistic), _fmt(outcome.threshold_sq), _fmt(outcome.c_star),
                     str(outcome.reject).lower(), _fmt(outcome.s_hat), _fmt(outcome.h), _fmt(outcome.rate)])
    status(f"{'❌ Reject' if outcome.reject else '✅ Accept'} H0 ({args.null}): "
           f"ratio {outcome.ratio:.4g} vs C* {outcome.c_star:.4g}")
    return EXIT_OK


def build_parser():
    ap = ArgumentParser(prog="deconv-adapt", description="Adaptive deconvolution under stable noise")
    ap.add_argument("--verbose", action="store_true", help="Enable debug logging")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def with_config(p):
        p.add_argument("--config", help="Path to a TOML configuration file")
        return p

    p = with_config(sub.add_parser("experiment", help="Run the Monte Carlo selection study"))
    p.add_argument("--default", action="store_true", help="Use the built-in simulation protocol")
    p.add_argument("--out", help="Report CSV path (a manifest is written next to it)")
    p.add_argument("--workers", type=int, help="Worker processes")
    p.add_argument("--m", type=int, help="Replications per cell")
    p.add_argument("--seed", type=int, help="Master seed")
    p.set_defaults(handler=cmd_experiment)

    p = with_config(sub.add_parser("probe", help="Selection histogram at an off-grid index"))
    p.add_argument("--true-s", type=float, required=True, help="True noise index in (0, 2]")
    p.add_argument("--n", type=int, nargs="+", help="Sample sizes (default: from config)")
    p.add_argument("--out", help="CSV path")
    p.set_defaults(handler=cmd_probe)

    p = sub.add_parser("simulate", help="Write a simulated sample")
    p.add_argument("--signal", default="laplace5", help="laplace<count> or gamma")
    p.add_argument("--s", type=float, required=True, help="Noise index in (0, 2]")
    p.add_argument("--n", type=int, required=True, help="Sample size")
    p.add_argument("--seed", type=int, default=0, help="Random seed")
    p.add_argument("--pre-scale", type=float, default=0.1, help="Scale applied to the signal")
    p.add_argument("--gamma", type=float, default=1.0, help="Noise scale")
    p.add_argument("--out", help="Output file (default: stdout)")
    p.set_defaults(handler=cmd_simulate)

    for name, handler, text in (
        ("select", cmd_select, "Select the noise index"),
        ("density", cmd_density, "Deconvolution density estimate"),
        ("quadfun", cmd_quadfun, "Estimate the integral of f^2"),
        ("gof", cmd_gof, "Goodness-of-fit test"),
    ):
        p = with_config(sub.add_parser(name, help=text))
        p.add_argument("sample", help="Sample file, one value per line")
        p.add_argument("--gamma", type=float, default=1.0, help="Known noise scale")
        if name != "select":
            p.add_argument("--s", type=float, help="Known noise index (skips selection)")
        p.set_defaults(handler=handler)
        if name == "density":
            p.add_argument("--x-min", type=float, default=-1.0)
            p.add_argument("--x-max", type=float, default=1.0)
            p.add_argument("--points", type=int, default=101)
            p.add_argument("--out", help="CSV path")
        if name == "gof":
            p.add_argument("--null", required=True, help="laplace5, gamma or shifted:<offset>")
            p.add_argument("--pre-scale", type=float, default=0.1, help="Scale of the null signal")
            p.add_argument("--c-star", type=float, help="Decision constant (default: calibrate)")
    return ap


def main(argv=None):
    """Parse arguments, run one subcommand, map failures to exit codes."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config_file = getattr(args, "config", None)
        if getattr(args, "default", False):
            config_file = None
        settings = load_settings(config_file)
        if config_file:
            status(f"📋 Configuration: {config_file}")
        return args.handler(args, settings)
    except ConfigError as e:
        status(f"❌ {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        status(f"❌ Numerical failure: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
