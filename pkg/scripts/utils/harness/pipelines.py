"""
End-to-end pipelines behind the command-line subcommands.

Each pipeline selects s on the rescaled sample unless a known s is given, then
runs one estimator with the matching bandwidth.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..deconv import DensityEstimate, bandwidth, estimate_density, quad_functional
from ..gof import calibrate_c_star, run_test
from ..models import NoiseModel, Sample, rescale, signal_from_name, simulate_observations
from ..selector import SelectionResult, delta_bound_check, envelope_ordering_check, resolve_points, select_index

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadFunctionalResult:
    value: float
    h: float
    s_hat: float
    n: int


@dataclass(frozen=True)
class DensityResult:
    estimate: DensityEstimate
    selection: Optional[SelectionResult]


def simulate(signal_name, s, n, seed, pre_scale=0.1, gamma=1.0):
    signal = signal_from_name(signal_name, pre_scale)
    return simulate_observations(signal, NoiseModel(s, gamma), n, seed)


def select(sample, selector, gamma=1.0):
    delta_bound_check(selector)
    envelope_ordering_check(selector, resolve_points(selector, sample.n))
    return select_index(rescale(sample, gamma), selector)


def _index(sample, selector, gamma, s_known):
    if s_known is not None:
        return s_known, None
    selection = select(sample, selector, gamma)
    return selection.s_hat, selection


def density(sample, settings, xs, gamma=1.0, s_known=None):
    s_hat, selection = _index(sample, settings.selector, gamma, s_known)
    estimate = estimate_density(sample, s_hat, settings.density, settings.quadrature, np.asarray(xs), gamma=gamma)
    return DensityResult(estimate, selection)


def quadfun(sample, settings, gamma=1.0, s_known=None):
    s_hat, _ = _index(sample, settings.selector, gamma, s_known)
    h = bandwidth(settings.density, sample.n, s_hat)
    value = quad_functional(sample, s_hat, settings.density, settings.quadrature, h=h, gamma=gamma)
    return QuadFunctionalResult(value=value, h=h, s_hat=s_hat, n=sample.n)


def gof(sample, null, settings, gamma=1.0, s_known=None):
    """Run the test; C* is calibrated under H0 at the selected s when not configured."""
    test = settings.test
    if test.c_star is None:
        s_hat, _ = _index(sample, settings.selector, gamma, s_known)
        LOGGER.info("calibrating C* for n=%d at s=%g with %d replications", sample.n, s_hat, test.reps)
        c_star = calibrate_c_star(
            null,
            NoiseModel(s_hat, gamma),
            sample.n,
            test.level,
            test.reps,
            test.seed,
            settings.selector,
            test,
            settings.quadrature,
            s_known=s_known,
        )
        test = test.with_c_star(c_star)
    return run_test(sample, null, settings.selector, test, settings.quadrature, gamma=gamma, s_known=s_known)


def load_sample(path):
    return Sample.read(path)
