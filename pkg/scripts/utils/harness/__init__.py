"""
Monte Carlo harness: experiment runner, seeds, reports and CLI pipelines.
"""

from .experiment import CellResult, ExperimentConfig, ExperimentRunner, MCReport, ProbeCell
from .experiment import run_experiment, run_offgrid_probe
from .report import emit_report, parse_report, write_manifest
from .seeds import derive_seed

__all__ = [
    'CellResult',
    'ExperimentConfig',
    'ExperimentRunner',
    'MCReport',
    'ProbeCell',
    'derive_seed',
    'emit_report',
    'parse_report',
    'run_experiment',
    'run_offgrid_probe',
    'write_manifest',
]
