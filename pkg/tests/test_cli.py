import csv
import io

import pytest

from scripts import deconv_adapt
from scripts.utils.harness import parse_report
from scripts.utils.harness import pipelines
from scripts.utils.models import Sample

SMALL_EXPERIMENT = """
[experiment]
signals = ["laplace5"]
noise_indices = [1.0]
ns = [500]
m = 2
"""


def rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "sample.txt"
    assert deconv_adapt.main(["simulate", "--s", "1.0", "--n", "400", "--seed", "5", "--out", str(path)]) == 0
    return path


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_EXPERIMENT)
    return path


class TestSimulate:
    def test_writes_file(self, sample_file):
        assert Sample.read(sample_file) == pipelines.simulate("laplace5", 1.0, 400, 5)

    def test_stdout(self, capsys):
        assert deconv_adapt.main(["simulate", "--signal", "gamma", "--s", "0.5", "--n", "10"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 10
        assert [float(line) for line in lines] == list(pipelines.simulate("gamma", 0.5, 10, 0).values)


class TestEstimators:
    def test_select(self, sample_file, capsys):
        assert deconv_adapt.main(["select", str(sample_file)]) == 0
        table = rows(capsys.readouterr().out)
        assert table[0] == ["s_hat", "fallback_used", "selected"]
        assert float(table[1][0]) in (0.5, 1.0, 1.5, 2.0)
        assert table[3] == ["k", "s_k", "u", "modulus", "lower", "upper", "member"]
        assert len(table) == 8

    def test_density(self, sample_file, tmp_path):
        out = tmp_path / "density.csv"
        argv = ["density", str(sample_file), "--s", "1.0", "--points", "5", "--out", str(out)]
        assert deconv_adapt.main(argv) == 0
        table = rows(out.read_text())
        assert table[0] == ["x", "density", "converged"]
        assert len(table) == 6
        assert float(table[1][0]) == -1.0

    def test_quadfun(self, sample_file, capsys):
        assert deconv_adapt.main(["quadfun", str(sample_file), "--s", "1.0"]) == 0
        table = rows(capsys.readouterr().out)
        assert table[0] == ["T_hat", "h", "s_hat", "n"]
        assert table[1][2:] == ["1.0", "400"]

    def test_gof(self, sample_file, capsys):
        argv = ["gof", str(sample_file), "--null", "laplace5", "--s", "1.0", "--c-star", "1000"]
        assert deconv_adapt.main(argv) == 0
        captured = capsys.readouterr()
        table = rows(captured.out)
        assert table[0] == ["statistic", "threshold_sq", "c_star", "reject", "s_hat", "h", "rate"]
        assert table[1][3] == "false"
        assert "Accept" in captured.err


class TestExperiment:
    def test_report_and_manifest(self, small_config, tmp_path):
        out = tmp_path / "results" / "report.csv"
        assert deconv_adapt.main(["experiment", "--config", str(small_config), "--out", str(out)]) == 0
        report = parse_report(out)
        assert len(report.cells) == 1
        assert report.cells[0].m == 2
        assert (tmp_path / "results" / "report.manifest.yml").exists()

    def test_overrides(self, small_config, capsys):
        assert deconv_adapt.main(["experiment", "--config", str(small_config), "--m", "1", "--seed", "4"]) == 0
        table = rows(capsys.readouterr().out)
        assert table[1][:4] == ["laplace5", "1.0", "500", "1"]

    def test_probe(self, small_config, capsys):
        assert deconv_adapt.main(["probe", "--config", str(small_config), "--true-s", "1.25"]) == 0
        table = rows(capsys.readouterr().out)
        assert table[0][0] == "signal"
        assert sum(int(row[5]) for row in table[1:]) == 2


class TestExitCodes:
    def test_missing_sample(self, tmp_path, capsys):
        assert deconv_adapt.main(["select", str(tmp_path / "missing.txt")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_bad_config(self, sample_file, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("[selector]\nwidth = 2\n")
        assert deconv_adapt.main(["select", str(sample_file), "--config", str(config)]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            deconv_adapt.main(["simulate", "--n", "10"])
        assert info.value.code == 1

    def test_numerical_failure(self, tmp_path, capsys):
        path = tmp_path / "one.txt"
        path.write_text("0.5\n")
        assert deconv_adapt.main(["density", str(path), "--s", "1.0"]) == 2
        assert "Numerical failure" in capsys.readouterr().err

    def test_formula_points_too_small_n(self, tmp_path):
        sample = tmp_path / "small.txt"
        sample.write_text("\n".join(str(v) for v in range(20)) + "\n")
        config = tmp_path / "formula.toml"
        config.write_text("[selector]\ndelta = 1.0\n")
        assert deconv_adapt.main(["select", str(sample), "--config", str(config)]) == 2
