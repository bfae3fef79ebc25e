"""
CSV reports and YAML run manifests for the Monte Carlo study.
"""

import csv
import io
import sys
from datetime import datetime
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..selector import ExplicitPoints
from .experiment import CellResult, MCReport

REPORT_FIELDS = ("signal", "s", "n", "m", "success_count", "fallback_count", "mean_runtime", "error")


def _rows(report):
    for cell in report.cells:
        yield (
            cell.signal,
            repr(float(cell.s)),
            cell.n,
            cell.m,
            cell.success_count,
            cell.fallback_count,
            f"{cell.mean_runtime:.6f}",
            cell.error,
        )


def write_report(report, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    writer.writerows(_rows(report))


def emit_report(report, path):
    """Write the report as CSV, one row per cell in report order."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            write_report(report, f)
    except OSError as e:
        raise ConfigError(f"cannot write report {path}: {e}") from e


def format_report(report):
    buffer = io.StringIO()
    write_report(report, buffer)
    return buffer.getvalue()


def parse_report(path):
    path = Path(path)
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if tuple(reader.fieldnames or ()) != REPORT_FIELDS:
                raise ConfigError(f"{path}: unexpected report header {reader.fieldnames}")
            cells = [
                CellResult(
                    signal=row["signal"],
                    s=float(row["s"]),
                    n=int(row["n"]),
                    m=int(row["m"]),
                    success_count=int(row["success_count"]),
                    fallback_count=int(row["fallback_count"]),
                    mean_runtime=float(row["mean_runtime"]),
                    error=row["error"],
                )
                for row in reader
            ]
    except OSError as e:
        raise ConfigError(f"cannot read report {path}: {e}") from e
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{path}: malformed report row: {e}") from e
    return MCReport(tuple(cells))


def config_to_dict(config):
    selector = config.selector
    if isinstance(selector.eval_points, ExplicitPoints):
        points = {"eval_points": list(selector.eval_points.values)}
    else:
        points = {"delta": selector.eval_points.delta}
    return {
        "signals": [
            {"name": signal.name, "pre_scale": signal.pre_scale, "shift": signal.shift} for signal in config.signals
        ],
        "noise_indices": list(config.noise_indices),
        "ns": list(config.ns),
        "m": config.m,
        "master_seed": config.master_seed,
        "gamma": config.gamma,
        "workers": config.workers,
        "selector": {
            "grid": list(selector.grid.values),
            **points,
            "A": selector.A,
            "beta_prime": selector.beta_prime,
            "c": selector.c,
        },
    }


def manifest_path(report_path):
    report_path = Path(report_path)
    return report_path.with_name(report_path.stem + ".manifest.yml")


def write_manifest(config, report_path, report=None):
    """Record the configuration next to the report it produced."""
    path = manifest_path(report_path)
    manifest = {
        "created": datetime.now().isoformat(),
        "report": Path(report_path).name,
        "python": sys.version.split()[0],
        "experiment": config_to_dict(config),
    }
    if report is not None:
        manifest["cells"] = len(report.cells)
        manifest["failed_cells"] = [f"{c.signal} s={c.s:g} n={c.n}: {c.error}" for c in report.failed]
    try:
        with open(path, "w") as f:
            yaml.safe_dump(manifest, f, sort_keys=False)
    except OSError as e:
        raise ConfigError(f"cannot write manifest {path}: {e}") from e
    return path
