#!/usr/bin/env python3
"""
L2 goodness-of-fit test of H0: f = f0 under stable noise.

The statistic is the U-statistic estimate of ||f - f0||^2, written as
T - (2/n) sum_j <K_j, f0> + ||f0||^2 where T is the quadratic functional.
H0 is rejected when |statistic| / t^2 exceeds C*, with the random threshold
t^2 = (log n / 2)^(-2 beta_bar / s).
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .deconv import BandwidthSpec, BandwidthVariant, bandwidth, l2_norm_sq, quad_functional
from .ecf import ecf_batch
from .errors import ConfigError, NumericalError
from .models import NoiseModel, Sample, SignalModel, rescale, signal_from_name, simulate_observations
from .quadrature import check_exponent, integrate, require_converged
from .selector import delta_bound_check, select_index

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class NullSpec:
    """Null density f0 given by its characteristic function.

    ``signal`` is the matching sampler used for calibration. ``diagnostic``
    admits f0_cf = 0, which reduces the statistic to the quadratic functional.
    """

    f0_cf: Callable
    f0_l2sq: Optional[float] = None
    name: str = "custom"
    signal: Optional[SignalModel] = None
    diagnostic: bool = False

    def __post_init__(self):
        probe = np.array([0.0, 0.5, 1.0, 2.0, 5.0])
        values = np.abs(np.broadcast_to(self.f0_cf(probe), probe.shape))
        if self.diagnostic:
            return
        if abs(values[0] - 1.0) > 1e-12:
            raise ConfigError(f"null '{self.name}': f0_cf(0) = {values[0]:g}, expected 1")
        if np.any(values > 1.0 + 1e-12):
            raise ConfigError(f"null '{self.name}': |f0_cf| exceeds 1")
        if self.f0_l2sq is not None and not self.f0_l2sq > 0:
            raise ConfigError(f"null '{self.name}': f0_l2sq must be positive")

    @classmethod
    def from_signal(cls, signal, name=None):
        return cls(f0_cf=signal.cf, name=name or signal.name, signal=signal)

    @classmethod
    def zero(cls):
        return cls(f0_cf=lambda u: np.zeros(np.shape(u)), f0_l2sq=0.0, name="zero", diagnostic=True)


@dataclass(frozen=True)
class TestSettings:
    """Bandwidth rule and decision constant for the test."""

    __test__ = False

    spec: BandwidthSpec = BandwidthSpec.test()
    c_star: Optional[float] = None
    level: float = 0.05
    reps: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.spec.variant is not BandwidthVariant.TEST:
            raise ConfigError("the test needs the test bandwidth variant")
        if self.c_star is not None and not self.c_star > 0:
            raise ConfigError(f"c_star must be > 0, got {self.c_star}")
        if not (0.0 < self.level < 1.0):
            raise ConfigError(f"level must lie in (0, 1), got {self.level}")
        if self.reps < 50:
            raise ConfigError(f"calibration needs at least 50 replications, got {self.reps}")

    def with_c_star(self, c_star):
        return replace(self, c_star=c_star)


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    statistic: float
    threshold_sq: float
    c_star: float
    reject: bool
    s_hat: float
    h: float
    rate: float = math.nan

    @property
    def ratio(self):
        return abs(self.statistic) / self.threshold_sq


def null_from_name(name, pre_scale=0.1):
    """laplace5 | gamma | shifted:<offset> (the Laplace null moved by offset)."""
    if name in ("laplace5", "gamma"):
        signal = signal_from_name(name, pre_scale)
    elif name.startswith("shifted:"):
        try:
            offset = float(name.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad shift in null spec '{name}'") from None
        signal = signal_from_name("laplace5", pre_scale, offset)
    else:
        raise ConfigError(f"unknown null '{name}' (expected laplace5, gamma or shifted:<offset>)")
    return NullSpec.from_signal(signal, name=name)


def threshold_sq(n, s_hat, beta_bar):
    """(log n / 2)^(-2 beta_bar / s)."""
    log_n = math.log(n)
    if not log_n > 0:
        raise ConfigError(f"threshold needs log n > 0, got n={n}")
    return (log_n / 2.0) ** (-2.0 * beta_bar / s_hat)


def testing_rate(n, beta, s):
    """Separation rate (log n / 2)^(-beta / s) of the test."""
    return (math.log(n) / 2.0) ** (-beta / s)


def _null_norm(null, quad):
    if null.f0_l2sq is not None:
        return null.f0_l2sq
    return l2_norm_sq(null.f0_cf, quad)


def _cross_term(sample, null, s_hat, upper, gamma, quad):
    """(1/n) sum_j <K_j, f0> = (1/pi) int_0^upper exp((gamma u)^s) Re(conj(ecf) conj(Phi_f0)) du."""
    check_exponent((gamma * upper) ** s_hat, "cross term")
    # sorted so the sums do not depend on input order
    sample = Sample(np.sort(sample.values))
    low, high = np.quantile(sample.values, [0.005, 0.995])

    def weight(u):
        return np.exp((gamma * u) ** s_hat)

    mass = float(integrate(lambda u, w: np.sum(w * weight(u)), upper, quad).value)

    def integrand(u, w):
        product = np.conj(ecf_batch(sample, u)) * np.conj(np.broadcast_to(null.f0_cf(u), u.shape))
        return np.sum(w * weight(u) * product.real)

    result = require_converged(integrate(integrand, upper, quad, spread=float(high - low), scale=mass), "cross term")
    return float(result.value) / math.pi


def test_statistic(sample, null, s_hat, spec, quad, h=None, gamma=1.0):
    """Centred U-statistic estimating ||f - f0||^2."""
    if spec.variant is not BandwidthVariant.TEST:
        raise ConfigError("test_statistic needs the test bandwidth variant")
    if h is None:
        h = bandwidth(spec, sample.n, s_hat)
    quadratic = quad_functional(sample, s_hat, spec, quad, h=h, gamma=gamma)
    if null.diagnostic:
        return quadratic
    cross = _cross_term(sample, null, s_hat, 1.0 / (gamma * h), gamma, quad)
    return quadratic - 2.0 * cross + _null_norm(null, quad)


test_statistic.__test__ = False


def run_test(sample, null, selector, settings, quad, gamma=1.0, s_known=None):
    """Select s (unless known), then compute the statistic, threshold and decision."""
    if s_known is None:
        s_hat = select_index(rescale(sample, gamma), selector).s_hat
    else:
        s_hat = s_known
    if settings.c_star is None:
        raise ConfigError("no C* configured; calibrate it or pass one explicitly")
    spec = settings.spec
    h = bandwidth(spec, sample.n, s_hat)
    statistic = test_statistic(sample, null, s_hat, spec, quad, h=h, gamma=gamma)
    t_sq = threshold_sq(sample.n, s_hat, spec.beta_bar)
    reject = abs(statistic) / t_sq > settings.c_star
    LOGGER.debug("test statistic %.6g, threshold %.6g, s=%g, reject=%s", statistic, t_sq, s_hat, reject)
    return TestOutcome(
        statistic=statistic,
        threshold_sq=t_sq,
        c_star=settings.c_star,
        reject=bool(reject),
        s_hat=s_hat,
        h=h,
        rate=testing_rate(sample.n, spec.beta_bar, s_hat),
    )


def null_ratios(null, noise, n, selector, settings, quad, reps, seed, s_known=None):
    """|statistic| / t^2 over ``reps`` samples simulated under H0.

    Replications failing with a NumericalError count as infinite ratios.
    """
    if null.signal is None:
        raise ConfigError(f"null '{null.name}' has no sampler for simulation")
    if not null.diagnostic and null.f0_l2sq is None:
        null = replace(null, f0_l2sq=l2_norm_sq(null.f0_cf, quad))
    if s_known is None:
        delta_bound_check(selector)
    ratios = np.empty(reps)
    streams = np.random.SeedSequence(seed).spawn(reps)
    for r, stream in enumerate(streams):
        sample = simulate_observations(null.signal, noise, n, stream)
        try:
            outcome = run_test(sample, null, selector, settings.with_c_star(math.inf), quad, noise.gamma, s_known)
            ratios[r] = outcome.ratio
        except NumericalError as e:
            LOGGER.warning("calibration replication %d failed: %s", r, e)
            ratios[r] = math.inf
    return ratios


def calibrate_c_star(null, noise, n, level, reps, seed, selector, settings, quad, s_known=None):
    """(1 - level) empirical quantile of the null ratios."""
    if not (0.0 < level < 1.0):
        raise ConfigError(f"level must lie in (0, 1), got {level}")
    if reps < 50:
        raise ConfigError(f"calibration needs at least 50 replications, got {reps}")
    if not isinstance(noise, NoiseModel):
        raise ConfigError("calibrate_c_star expects a NoiseModel")
    ratios = null_ratios(null, noise, n, selector, settings, quad, reps, seed, s_known)
    c_star = float(np.quantile(ratios, 1.0 - level, method="inverted_cdf"))
    LOGGER.info("calibrated C* = %.6g at level %g from %d replications", c_star, level, reps)
    return c_star
