import logging
import os
from dataclasses import replace

import pytest
import yaml

from scripts.utils.errors import ConfigError
from scripts.utils.harness import (
    CellResult,
    ExperimentConfig,
    ExperimentRunner,
    MCReport,
    derive_seed,
    emit_report,
    parse_report,
    run_experiment,
    run_offgrid_probe,
    write_manifest,
)
from scripts.utils.harness.experiment import run_cell
from scripts.utils.harness.report import REPORT_FIELDS, format_report, manifest_path
from scripts.utils.models import signal_from_name
from scripts.utils.selector import FormulaPoints, SelectorConfig

SELECTOR = SelectorConfig.simulation_default()
LAPLACE = signal_from_name("laplace5", 0.1)
GAMMA = signal_from_name("gamma", 0.1)

# published success counts per (signal, s) at n = 500, 1000, 2000, 5000
PUBLISHED = {
    ("laplace5", 0.5): (85, 93, 98, 100),
    ("laplace5", 1.0): (66, 87, 95, 100),
    ("laplace5", 1.5): (65, 82, 93, 100),
    ("laplace5", 2.0): (73, 90, 93, 99),
    ("gamma", 0.5): (94, 99, 100, 100),
    ("gamma", 1.0): (71, 88, 98, 100),
    ("gamma", 1.5): (91, 98, 100, 100),
    ("gamma", 2.0): (69, 79, 84, 98),
}
STUDY_NS = (500, 1000, 2000, 5000)

UNREACHABLE = pytest.mark.xfail(
    reason="k=3 membership interval at u=1.5 is narrower than the ECF noise at this n (DESIGN.md, Simulation tables)"
)


def study_cells():
    for (signal, s), counts in PUBLISHED.items():
        for n, published in zip(STUDY_NS, counts):
            marks = UNREACHABLE if (signal, s) == ("gamma", 1.5) and n < 5000 else ()
            yield pytest.param(signal, s, n, published, marks=marks, id=f"{signal}-{s:g}-{n}")


def small_config(**overrides):
    values = dict(signals=(LAPLACE, GAMMA), noise_indices=(1.0, 2.0), ns=(500, 1000), m=3, selector=SELECTOR)
    values.update(overrides)
    return ExperimentConfig(**values)


class TestSeeds:
    def test_stable(self):
        assert derive_seed(0, "laplace5", 1.0, 500, 3) == derive_seed(0, "laplace5", 1.0, 500, 3)

    def test_every_coordinate_matters(self):
        base = derive_seed(0, "laplace5", 1.0, 500, 3)
        others = {
            derive_seed(1, "laplace5", 1.0, 500, 3),
            derive_seed(0, "gamma", 1.0, 500, 3),
            derive_seed(0, "laplace5", 1.5, 500, 3),
            derive_seed(0, "laplace5", 1.0, 1000, 3),
            derive_seed(0, "laplace5", 1.0, 500, 4),
        }
        assert base not in others
        assert len(others) == 5

    def test_integer_index_matches_float(self):
        assert derive_seed(0, "gamma", 1, 500, 0) == derive_seed(0, "gamma", 1.0, 500, 0)

    def test_fits_in_64_bits(self):
        assert 0 <= derive_seed(7, "gamma", 0.5, 5000, 99) < 2 ** 64


class TestExperimentConfig:
    def test_simulation_default(self):
        config = ExperimentConfig.simulation_default()
        assert len(config.cells()) == 32
        assert config.m == 100
        assert [signal.name for signal in config.signals] == ["laplace5", "gamma"]
        assert config.cells()[0] == (LAPLACE, 0.5, 500)
        assert config.cells()[1] == (LAPLACE, 0.5, 1000)

    def test_values_are_sorted(self):
        config = small_config(noise_indices=(2.0, 1.0), ns=(1000, 500))
        assert config.noise_indices == (1.0, 2.0)
        assert config.ns == (500, 1000)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"signals": ()},
            {"signals": (LAPLACE, LAPLACE)},
            {"noise_indices": (1.25,)},
            {"ns": ()},
            {"ns": (0,)},
            {"m": 0},
            {"gamma": 0.0},
            {"workers": 0},
        ],
    )
    def test_rejects_invalid(self, overrides):
        with pytest.raises(ConfigError):
            small_config(**overrides)


class TestRunner:
    def test_report_order(self):
        report = run_experiment(small_config())
        assert [cell.key for cell in report.cells] == [
            (signal.name, s, n) for signal, s, n in small_config().cells()
        ]

    def test_deterministic(self):
        assert run_experiment(small_config()) == run_experiment(small_config())

    def test_cell_reproducible_alone(self):
        report = run_experiment(small_config())
        alone = run_cell(GAMMA, 2.0, 1000, 3, SELECTOR, 0)
        assert report.cell("gamma", 2.0, 1000) == alone

    def test_single_replication(self):
        report = run_experiment(small_config(m=1))
        for cell in report.cells:
            assert cell.m == 1
            assert cell.success_count in (0, 1)

    def test_counts_bounded(self):
        for cell in run_experiment(small_config()).cells:
            assert 0 <= cell.success_count <= cell.m
            assert 0 <= cell.fallback_count <= cell.m
            assert cell.mean_runtime >= 0.0

    def test_workers_do_not_change_results(self):
        assert run_experiment(small_config(workers=2)) == run_experiment(small_config())

    def test_progress_callback(self):
        seen = []
        ExperimentRunner(small_config(), seen.append).run_experiment()
        assert len(seen) == len(small_config().cells())

    def test_failed_cell_is_reported(self):
        selector = SelectorConfig(SELECTOR.grid, eval_points=FormulaPoints(1.0))
        report = run_experiment(small_config(ns=(20,), selector=selector))
        assert len(report.failed) == len(report.cells)
        assert all(cell.success_count == 0 for cell in report.failed)
        assert "too small" in report.failed[0].error

    def test_delta_warning_once_per_run(self, caplog):
        selector = SelectorConfig(SELECTOR.grid, eval_points=FormulaPoints(1.0))
        with caplog.at_level(logging.WARNING):
            run_experiment(small_config(ns=(500,), selector=selector))
        assert len([r for r in caplog.records if r.getMessage().startswith("delta=")]) == 1

    def test_missing_cell(self):
        with pytest.raises(KeyError):
            run_experiment(small_config()).cell("laplace5", 0.5, 500)


class TestProbe:
    def test_histogram(self):
        cells = run_offgrid_probe(small_config(m=5), 1.25, ns=(500,))
        assert [(cell.signal, cell.n) for cell in cells] == [("laplace5", 500), ("gamma", 500)]
        for cell in cells:
            assert sum(count for _, count in cell.counts) == 5
            assert cell.mode in SELECTOR.grid
            assert 0.0 < cell.modal_share <= 1.0
            assert cell.true_s == 1.25

    def test_rejects_invalid_index(self):
        with pytest.raises(ConfigError):
            run_offgrid_probe(small_config(), 2.5)

    @pytest.mark.slow
    def test_probe_between_grid_values(self):
        cells = run_offgrid_probe(small_config(m=100, signals=(LAPLACE,)), 1.25, ns=(5000,))
        assert cells[0].mode in (1.0, 1.5)
        assert cells[0].modal_share >= 0.6


class TestReport:
    def test_round_trip(self, tmp_path):
        report = run_experiment(small_config())
        path = tmp_path / "out" / "report.csv"
        emit_report(report, path)
        assert parse_report(path) == report

    def test_header_only_for_empty_report(self):
        assert format_report(MCReport()) == ",".join(REPORT_FIELDS) + "\n"

    def test_simulation_table_has_32_rows(self):
        cells = tuple(
            CellResult(signal.name, s, n, 1, 1, 0)
            for signal, s, n in ExperimentConfig.simulation_default().cells()
        )
        lines = format_report(MCReport(cells)).splitlines()
        assert len(lines) == 33
        assert lines[1] == "laplace5,0.5,500,1,1,0,0.000000,"

    def test_error_column(self, tmp_path):
        report = MCReport((CellResult("gamma", 1.0, 20, 3, 0, 0, 0.0, "n=20 too small, base <= 0"),))
        path = tmp_path / "report.csv"
        emit_report(report, path)
        assert parse_report(path).failed[0].error == "n=20 too small, base <= 0"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "report.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError):
            parse_report(path)

    def test_missing_report(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_report(tmp_path / "nope.csv")

    def test_manifest(self, tmp_path):
        config = small_config()
        report = run_experiment(config)
        path = write_manifest(config, tmp_path / "report.csv", report)
        assert path == manifest_path(tmp_path / "report.csv")
        assert path.name == "report.manifest.yml"
        manifest = yaml.safe_load(path.read_text())
        assert manifest["report"] == "report.csv"
        assert manifest["cells"] == 8
        assert manifest["failed_cells"] == []
        assert manifest["experiment"]["m"] == 3
        assert manifest["experiment"]["selector"]["eval_points"] == [2.5, 1.7, 1.5, 1.45]
        assert manifest["experiment"]["signals"][0] == {"name": "laplace5", "pre_scale": 0.1, "shift": 0.0}


@pytest.fixture(scope="module")
def simulation_report():
    config = replace(ExperimentConfig.simulation_default(), workers=min(4, os.cpu_count() or 1))
    return run_experiment(config)


def within_tolerance(count, published, n):
    if n == 5000:
        return count >= 95
    return abs(count - published) <= (12 if n < 2000 else 8)


@pytest.mark.slow
class TestSimulationStudy:
    @pytest.mark.parametrize("signal,s,n,published", list(study_cells()))
    def test_cell_matches_published_count(self, simulation_report, signal, s, n, published):
        count = simulation_report.cell(signal, s, n).success_count
        assert within_tolerance(count, published, n), f"{signal} s={s:g} n={n}: {count} vs {published}"

    def test_hardest_cell(self, simulation_report):
        assert 55 <= simulation_report.cell("gamma", 2.0, 500).success_count <= 83

    @pytest.mark.parametrize("signal,s", list(PUBLISHED))
    def test_more_observations_do_not_hurt(self, simulation_report, signal, s):
        small = simulation_report.cell(signal, s, 500)
        large = simulation_report.cell(signal, s, 5000)
        assert large.m - large.success_count <= small.m - small.success_count
        assert large.success_count >= small.success_count - 5

    def test_no_failed_cells(self, simulation_report):
        assert simulation_report.failed == ()

    def test_rerun_is_identical(self):
        config = ExperimentConfig.simulation_default(m=10)
        assert run_experiment(config) == run_experiment(config)
