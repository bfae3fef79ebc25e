#!/usr/bin/env python3
"""Configuration loading for the deconvolution tools."""

from dataclasses import dataclass, field
from pathlib import Path

# Handle both Python 3.11+ (tomllib) and older versions (toml)
try:
    import tomllib
except ImportError:
    try:
        import toml as tomllib
    except ImportError:
        raise ImportError("Either 'tomllib' (Python 3.11+) or 'toml' package is required")

from .deconv import BandwidthSpec
from .errors import ConfigError
from .gof import TestSettings
from .harness.experiment import SIMULATION_PRE_SCALE, ExperimentConfig
from .models import signal_from_name
from .quadrature import QuadratureSpec
from .selector import ExplicitPoints, FormulaPoints, Grid, SelectorConfig

DEFAULT_CONFIG_FILE = "experiment-config.toml"

SECTION_KEYS = {
    "experiment": {"signals", "noise_indices", "ns", "m", "master_seed", "pre_scale", "gamma", "workers"},
    "selector": {"grid", "eval_points", "delta", "A", "beta_prime", "c"},
    "bandwidth": {"beta_bar", "beta_lower"},
    "test": {"beta_bar", "beta_lower", "c_star", "level", "reps", "seed"},
    "quadrature": {"nodes", "order", "scheme", "refine_tol", "max_nodes"},
}


@dataclass(frozen=True)
class Settings:
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig.simulation_default)
    density: BandwidthSpec = field(default_factory=BandwidthSpec.density)
    test: TestSettings = field(default_factory=TestSettings)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    @property
    def selector(self):
        return self.experiment.selector


def default_settings():
    """Settings of the simulation study, used when no config file is given."""
    return Settings()


def load_config_file(config_file=DEFAULT_CONFIG_FILE):
    """Load and validate the raw TOML tables of a config file."""
    path = Path(config_file)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e

    unknown = set(data) - set(SECTION_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {', '.join(sorted(unknown))}")
    for section, table in data.items():
        if not isinstance(table, dict):
            raise ConfigError(f"{path}: '{section}' must be a [section]")
        bad = set(table) - SECTION_KEYS[section]
        if bad:
            raise ConfigError(f"{path}: unknown key(s) in [{section}]: {', '.join(sorted(bad))}")
    return data


def _selector(table):
    default = SelectorConfig.simulation_default()
    grid = Grid(tuple(table.get("grid", default.grid.values)))
    if "eval_points" in table and "delta" in table:
        raise ConfigError("[selector] takes either eval_points or delta, not both")
    if "delta" in table:
        points = FormulaPoints(float(table["delta"]))
    elif "eval_points" in table:
        points = ExplicitPoints(tuple(table["eval_points"]))
    elif grid == default.grid:
        points = default.eval_points
    else:
        raise ConfigError("[selector] needs eval_points or delta for a custom grid")
    return SelectorConfig(
        grid=grid,
        A=float(table.get("A", default.A)),
        beta_prime=float(table.get("beta_prime", default.beta_prime)),
        eval_points=points,
        c=float(table.get("c", default.c)),
    )


def _experiment(table, selector):
    default = ExperimentConfig.simulation_default()
    pre_scale = float(table.get("pre_scale", SIMULATION_PRE_SCALE))
    names = table.get("signals", [signal.name for signal in default.signals])
    return ExperimentConfig(
        signals=tuple(signal_from_name(name, pre_scale) for name in names),
        noise_indices=tuple(table.get("noise_indices", selector.grid.values)),
        ns=tuple(table.get("ns", default.ns)),
        m=table.get("m", default.m),
        selector=selector,
        master_seed=int(table.get("master_seed", default.master_seed)),
        gamma=float(table.get("gamma", default.gamma)),
        workers=int(table.get("workers", default.workers)),
    )


def settings_from_dict(data):
    """Build Settings from validated tables; missing keys keep the simulation defaults."""
    try:
        selector = _selector(data.get("selector", {}))
        experiment = _experiment(data.get("experiment", {}), selector)
        bandwidth = data.get("bandwidth", {})
        density_default = BandwidthSpec.density()
        density = BandwidthSpec.density(
            float(bandwidth.get("beta_bar", density_default.beta_bar)),
            float(bandwidth.get("beta_lower", density_default.beta_lower)),
        )
        test = data.get("test", {})
        test_default = TestSettings()
        c_star = test.get("c_star")
        test_settings = TestSettings(
            spec=BandwidthSpec.test(
                float(test.get("beta_bar", test_default.spec.beta_bar)),
                float(test.get("beta_lower", test_default.spec.beta_lower)),
            ),
            c_star=None if c_star is None else float(c_star),
            level=float(test.get("level", test_default.level)),
            reps=int(test.get("reps", test_default.reps)),
            seed=int(test.get("seed", test_default.seed)),
        )
        quadrature = QuadratureSpec(**data.get("quadrature", {}))
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid configuration value: {e}") from e
    return Settings(experiment=experiment, density=density, test=test_settings, quadrature=quadrature)


def load_settings(config_file=None):
    """Settings from a TOML file, or the simulation defaults when no file is given."""
    if config_file is None:
        return default_settings()
    return settings_from_dict(load_config_file(config_file))
