"""
Monte Carlo runner for the grid selection study.
"""

import logging
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Tuple

from ..errors import ConfigError, DeconvError
from ..models import NoiseModel, SignalModel, rescale, signal_from_name, simulate_observations
from ..selector import SelectorConfig, delta_bound_check, grid_spacing_check, select_index
from .seeds import derive_seed

LOGGER = logging.getLogger(__name__)

SIMULATION_NS = (500, 1000, 2000, 5000)
SIMULATION_SIGNALS = ("laplace5", "gamma")
SIMULATION_PRE_SCALE = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    """Cells (signal x noise index x sample size), replications and selector."""

    signals: Tuple[SignalModel, ...]
    noise_indices: Tuple[float, ...]
    ns: Tuple[int, ...]
    m: int
    selector: SelectorConfig
    master_seed: int = 0
    gamma: float = 1.0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "noise_indices", tuple(sorted(float(s) for s in self.noise_indices)))
        object.__setattr__(self, "ns", tuple(sorted(int(n) for n in self.ns)))
        if not self.signals:
            raise ConfigError("experiment needs at least one signal")
        names = [signal.name for signal in self.signals]
        if len(set(names)) != len(names):
            raise ConfigError(f"signal names must be unique, got {names}")
        if not self.noise_indices:
            raise ConfigError("experiment needs at least one noise index")
        missing = [s for s in self.noise_indices if s not in self.selector.grid]
        if missing:
            raise ConfigError(f"noise indices {missing} are not grid values {self.selector.grid.values}")
        if not self.ns:
            raise ConfigError("experiment needs at least one sample size")
        if any(n < 1 for n in self.ns):
            raise ConfigError(f"sample sizes must be >= 1, got {self.ns}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ConfigError(f"replications m must be >= 1, got {self.m!r}")
        if not self.gamma > 0:
            raise ConfigError(f"noise scale gamma must be positive, got {self.gamma}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @classmethod
    def simulation_default(cls, m=100, master_seed=0):
        selector = SelectorConfig.simulation_default()
        return cls(
            signals=tuple(signal_from_name(name, SIMULATION_PRE_SCALE) for name in SIMULATION_SIGNALS),
            noise_indices=selector.grid.values,
            ns=SIMULATION_NS,
            m=m,
            selector=selector,
            master_seed=master_seed,
        )

    def cells(self):
        """(signal, s, n) in report order: signal as configured, then s, then n ascending."""
        return [(signal, s, n) for signal in self.signals for s in self.noise_indices for n in self.ns]


@dataclass(frozen=True)
class CellResult:
    signal: str
    s: float
    n: int
    m: int
    success_count: int
    fallback_count: int
    mean_runtime: float = field(default=0.0, compare=False)
    error: str = ""

    @property
    def key(self):
        return (self.signal, self.s, self.n)


@dataclass(frozen=True)
class MCReport:
    cells: Tuple[CellResult, ...] = ()

    def cell(self, signal, s, n):
        for result in self.cells:
            if result.key == (signal, float(s), int(n)):
                return result
        raise KeyError((signal, s, n))

    @property
    def failed(self):
        return tuple(result for result in self.cells if result.error)


@dataclass(frozen=True)
class ProbeCell:
    """Histogram of selected grid values for one (signal, n) at a fixed true s."""

    signal: str
    n: int
    true_s: float
    m: int
    counts: Tuple[Tuple[float, int], ...]
    error: str = ""

    @property
    def mode(self):
        if not self.counts:
            return None
        return max(self.counts, key=lambda item: (item[1], -item[0]))[0]

    @property
    def modal_share(self):
        if not self.counts:
            return 0.0
        return dict(self.counts)[self.mode] / self.m


def _selections(signal, s, n, m, selector, master_seed, gamma):
    """Yield (SelectionResult, seconds) for each replication of one cell."""
    noise = NoiseModel(s, gamma)
    for r in range(m):
        start = time.perf_counter()
        sample = simulate_observations(signal, noise, n, derive_seed(master_seed, signal.name, s, n, r))
        result = select_index(rescale(sample, gamma), selector)
        yield result, time.perf_counter() - start


def run_cell(signal, s, n, m, selector, master_seed, gamma=1.0):
    """Tally one cell; a DeconvError becomes the cell's error column."""
    successes = fallbacks = 0
    elapsed = 0.0
    try:
        for result, seconds in _selections(signal, s, n, m, selector, master_seed, gamma):
            successes += result.s_hat == s
            fallbacks += result.fallback_used
            elapsed += seconds
    except DeconvError as e:
        LOGGER.warning("cell %s s=%g n=%d failed: %s", signal.name, s, n, e)
        return CellResult(signal.name, s, n, m, 0, 0, 0.0, str(e))
    return CellResult(signal.name, s, n, m, successes, fallbacks, elapsed / m)


def run_probe_cell(signal, true_s, n, m, selector, master_seed, gamma=1.0):
    """Tally the selected grid values of one (signal, n) cell at a true index that may be off the grid."""
    tally = Counter()
    try:
        for result, _ in _selections(signal, true_s, n, m, selector, master_seed, gamma):
            tally[result.s_hat] += 1
    except DeconvError as e:
        LOGGER.warning("probe %s s=%g n=%d failed: %s", signal.name, true_s, n, e)
        return ProbeCell(signal.name, n, true_s, m, (), str(e))
    return ProbeCell(signal.name, n, true_s, m, tuple(sorted(tally.items())))


class ExperimentRunner:
    """Runs the selection study cell by cell, optionally in a process pool.

    Results are reassembled by cell key, so the report does not depend on the
    order in which workers finish.
    """

    def __init__(self, config, progress=None):
        self.config = config
        self.progress = progress

    def run_experiment(self):
        config = self.config
        delta_bound_check(config.selector)
        for n in config.ns:
            grid_spacing_check(config.selector.grid, n, config.selector.c, config.selector.beta_prime)
        jobs = [
            (signal, s, n, config.m, config.selector, config.master_seed, config.gamma)
            for signal, s, n in config.cells()
        ]
        results = {result.key: result for result in self._map(run_cell, jobs)}
        return MCReport(tuple(results[(signal.name, s, n)] for signal, s, n in config.cells()))

    def run_offgrid_probe(self, true_s, ns=None):
        config = self.config
        NoiseModel(true_s, config.gamma)
        delta_bound_check(config.selector)
        ns = config.ns if ns is None else tuple(sorted(int(n) for n in ns))
        jobs = [
            (signal, float(true_s), n, config.m, config.selector, config.master_seed, config.gamma)
            for signal in config.signals
            for n in ns
        ]
        cells = {(cell.signal, cell.n): cell for cell in self._map(run_probe_cell, jobs)}
        return tuple(cells[(signal.name, n)] for signal in config.signals for n in ns)

    def _map(self, fn, jobs):
        if self.config.workers == 1 or len(jobs) == 1:
            results = []
            for job in jobs:
                results.append(fn(*job))
                self._report(results[-1])
            return results
        with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
            futures = [pool.submit(fn, *job) for job in jobs]
            results = []
            for future in futures:
                results.append(future.result())
                self._report(results[-1])
            return results

    def _report(self, result):
        if self.progress is not None:
            self.progress(result)


def run_experiment(config, progress=None):
    return ExperimentRunner(config, progress).run_experiment()


def run_offgrid_probe(config, true_s, ns=None, progress=None):
    return ExperimentRunner(config, progress).run_offgrid_probe(true_s, ns)
