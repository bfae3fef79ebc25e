from pathlib import Path

import pytest

from scripts.utils.deconv import BandwidthSpec
from scripts.utils.errors import ConfigError
from scripts.utils.quadrature import QuadratureSpec
from scripts.utils.selector import FormulaPoints, SelectorConfig
from scripts.utils.settings import default_settings, load_config_file, load_settings, settings_from_dict

ROOT = Path(__file__).resolve().parents[1]


def write_config(tmp_path, text):
    path = tmp_path / "config.toml"
    path.write_text(text)
    return path


class TestDefaults:
    def test_no_file_gives_simulation_protocol(self):
        settings = load_settings()
        assert settings == default_settings()
        assert settings.selector == SelectorConfig.simulation_default()
        assert settings.density == BandwidthSpec.density()
        assert settings.test.spec == BandwidthSpec.test()
        assert settings.quadrature == QuadratureSpec()

    def test_shipped_config_matches_defaults(self):
        assert load_settings(ROOT / "experiment-config.toml") == default_settings()

    def test_empty_file_keeps_defaults(self, tmp_path):
        assert load_settings(write_config(tmp_path, "")) == default_settings()


class TestLoading:
    def test_partial_sections(self, tmp_path):
        path = write_config(tmp_path, '[experiment]\nm = 5\nsignals = ["gamma"]\n\n[test]\nc_star = 2\n')
        settings = load_settings(path)
        assert settings.experiment.m == 5
        assert [signal.name for signal in settings.experiment.signals] == ["gamma"]
        assert settings.test.c_star == 2.0
        assert settings.quadrature == QuadratureSpec()

    def test_formula_points(self, tmp_path):
        path = write_config(tmp_path, "[selector]\ngrid = [1.0, 2.0]\ndelta = 3.0\n")
        selector = load_settings(path).selector
        assert selector.grid.values == (1.0, 2.0)
        assert selector.eval_points == FormulaPoints(3.0)
        assert load_settings(path).experiment.noise_indices == (1.0, 2.0)

    def test_quadrature_section(self, tmp_path):
        path = write_config(tmp_path, '[quadrature]\nnodes = 2048\nscheme = "midpoint"\n')
        quad = load_settings(path).quadrature
        assert quad.nodes == 2048
        assert quad.scheme == "midpoint"

    def test_raw_tables(self, tmp_path):
        path = write_config(tmp_path, "[bandwidth]\nbeta_bar = 2.0\n")
        assert load_config_file(path) == {"bandwidth": {"beta_bar": 2.0}}


class TestErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_settings(tmp_path / "missing.toml")

    def test_unparseable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_settings(write_config(tmp_path, "[experiment\nm = 1\n"))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown section"):
            load_settings(write_config(tmp_path, "[plots]\nwidth = 3\n"))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key"):
            load_settings(write_config(tmp_path, "[experiment]\nreplications = 3\n"))

    def test_key_outside_section(self, tmp_path):
        with pytest.raises(ConfigError):
            load_settings(write_config(tmp_path, "m = 3\n"))

    @pytest.mark.parametrize(
        "data",
        [
            {"selector": {"grid": [1.0, 2.0]}},
            {"selector": {"delta": 3.0, "eval_points": [2.5, 1.7, 1.5, 1.45]}},
            {"selector": {"grid": [1.0, 3.0], "delta": 3.0}},
            {"experiment": {"m": "ten"}},
            {"experiment": {"signals": ["cauchy"]}},
            {"experiment": {"noise_indices": [1.25]}},
            {"bandwidth": {"beta_bar": 0.5}},
            {"test": {"level": 2.0}},
            {"quadrature": {"nodes": 8}},
            {"quadrature": {"scheme": "simpson"}},
        ],
    )
    def test_invalid_values(self, data):
        with pytest.raises(ConfigError):
            settings_from_dict(data)
