#!/usr/bin/env python3
"""
Deconvolution density estimator and quadratic-functional U-statistic.

Both estimators work in the frequency domain on [0, 1/h]: the deconvolution
kernel has transform exp((|t|/h)^s) on |t| <= 1, so after scaling every
integral carries the weight exp(u^s) (or exp(2 u^s) for inner products of two
kernels).
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ecf import as_transform, ecf_batch
from .errors import ConfigError, NumericalError
from .models import Sample
from .quadrature import (
    check_exponent,
    integrate,
    integrate_cos_filon,
    panels_resolve,
    power_tail,
    require_converged,
)

LOGGER = logging.getLogger(__name__)


class BandwidthVariant(enum.Enum):
    DENSITY = "density"
    TEST = "test"


@dataclass(frozen=True)
class BandwidthSpec:
    """Bandwidth rule: the density variant or the testing variant."""

    variant: BandwidthVariant
    beta_bar: float
    beta_lower: float

    def __post_init__(self):
        if not isinstance(self.variant, BandwidthVariant):
            object.__setattr__(self, "variant", BandwidthVariant(self.variant))
        if not (self.beta_bar > self.beta_lower > 0):
            raise ConfigError(f"need beta_bar > beta_lower > 0, got {self.beta_bar} and {self.beta_lower}")
        if self.variant is BandwidthVariant.DENSITY and self.beta_lower <= 0.5:
            LOGGER.warning("density bandwidth with beta_lower=%g <= 1/2 is outside the consistency range", self.beta_lower)

    @classmethod
    def density(cls, beta_bar=1.0, beta_lower=0.75):
        return cls(BandwidthVariant.DENSITY, beta_bar, beta_lower)

    @classmethod
    def test(cls, beta_bar=0.25, beta_lower=0.125):
        return cls(BandwidthVariant.TEST, beta_bar, beta_lower)


@dataclass(frozen=True)
class DensityEstimate:
    xs: np.ndarray
    values: np.ndarray
    h: float
    s_hat: float
    converged: np.ndarray
    error_estimate: np.ndarray

    @property
    def all_converged(self):
        return bool(np.all(self.converged))


def _check_index(s):
    if not (0.0 < s <= 2.0):
        raise ConfigError(f"self-similarity index must lie in (0, 2], got {s}")


def _check_bandwidth(h):
    if not (h > 0 and math.isfinite(h)):
        raise ConfigError(f"bandwidth must be positive and finite, got {h}")


def bandwidth(spec, n, s):
    """h = (log n / 2 - c log log n)^(-1/s) with c from the variant."""
    _check_index(s)
    log_n = math.log(n) if n > 1 else 0.0
    if log_n <= 0:
        raise NumericalError(f"n={n} too small for a bandwidth")
    if spec.variant is BandwidthVariant.DENSITY:
        coefficient = (spec.beta_bar - s + 0.5) / s
    else:
        coefficient = 2.0 * spec.beta_bar / s
    base = log_n / 2.0 - coefficient * math.log(log_n)
    if base <= 0:
        raise NumericalError(
            f"n={n} too small for the {spec.variant.value} bandwidth at s={s:g}, beta_bar={spec.beta_bar:g} "
            f"(base {base:.4g} <= 0)"
        )
    return base ** (-1.0 / s)


def deconv_kernel_cf(u, s, h, gamma=1.0):
    """exp((gamma |u| / h)^s) on |u| <= 1, zero outside."""
    _check_bandwidth(h)
    check_exponent((gamma / h) ** s, "deconvolution kernel")
    u_arr = np.abs(np.asarray(u, dtype=float))
    inside = u_arr <= 1.0
    values = np.where(inside, np.exp((gamma * np.where(inside, u_arr, 0.0) / h) ** s), 0.0)
    if np.ndim(u) == 0:
        return float(values)
    return values


def _weight(s, gamma, factor):
    def weight(u):
        return np.exp(factor * (gamma * u) ** s)
    return weight


def _envelope_mass(weight, upper, quad):
    """int_0^upper weight, the scale every weighted integral is judged against."""
    result = integrate(lambda u, w: np.sum(w * weight(u)), upper, quad)
    return float(result.value)


def _cos_transform(ds, s, upper, gamma, factor, quad, what):
    """(1/pi) int_0^upper exp(factor (gamma u)^s) cos(u d) du for every d in ``ds``."""
    ds = np.abs(np.atleast_1d(np.asarray(ds, dtype=float)))
    check_exponent(factor * (gamma * upper) ** s, what)
    weight = _weight(s, gamma, factor)
    mass = _envelope_mass(weight, upper, quad)
    spread = float(ds.max()) if ds.size else 0.0
    if panels_resolve(upper, quad, spread):
        result = integrate(
            lambda u, w: np.cos(np.multiply.outer(ds, u)) @ (w * weight(u)),
            upper,
            quad,
            spread=spread,
            scale=mass,
        )
    else:
        LOGGER.debug("%s: gap %.3g too wide for panels, using Filon", what, spread)
        result = integrate_cos_filon(weight, upper, ds, quad, mass)
    require_converged(result, what)
    return result.value / math.pi


def pair_kernel(d, s, h, quad, gamma=1.0):
    """Inner product of two scaled kernels at distance d: (1/pi) int_0^{1/h} exp(2 u^s) cos(u d) du."""
    _check_index(s)
    _check_bandwidth(h)
    values = _cos_transform(d, s, 1.0 / (gamma * h), gamma, 2.0, quad, "pair kernel")
    if np.ndim(d) == 0:
        return float(values[0])
    return values


def deconv_kernel(t, s, h, quad, gamma=1.0):
    """Space-domain kernel K(t) = (1/pi) int_0^1 exp((gamma v / h)^s) cos(v t) dv."""
    _check_index(s)
    _check_bandwidth(h)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    values = h * _cos_transform(h * t_arr, s, 1.0 / (gamma * h), gamma, 1.0, quad, "deconvolution kernel")
    if np.ndim(t) == 0:
        return float(values[0])
    return values


def estimate_density(data, s_hat, spec, quad, xs, h=None, gamma=1.0):
    """Spectral form of the deconvolution estimator at every x in ``xs``.

    ``data`` is a Sample or an observation transform. Values are not clipped;
    points whose node doubling did not settle are flagged in ``converged``.
    """
    _check_index(s_hat)
    transform = as_transform(data)
    if h is None:
        h = bandwidth(spec, transform.n, s_hat)
    _check_bandwidth(h)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    upper = 1.0 / (gamma * h)
    check_exponent((gamma * upper) ** s_hat, "density estimate")
    weight = _weight(s_hat, gamma, 1.0)
    mass = _envelope_mass(weight, upper, quad)
    spread = transform.spread + (float(np.max(np.abs(xs - transform.centre))) if xs.size else 0.0)

    def integrand(u, w):
        phi = transform(u)
        weighted = w * weight(u)
        ux = np.multiply.outer(xs, u)
        return np.cos(ux) @ (weighted * phi.real) - np.sin(ux) @ (weighted * phi.imag)

    result = integrate(integrand, upper, quad, spread=spread, scale=mass)
    if not result.all_converged:
        bad = xs[~result.converged]
        LOGGER.warning("density quadrature did not converge at %d point(s), first x=%g", bad.size, bad[0])
    return DensityEstimate(
        xs=xs,
        values=result.value / math.pi,
        h=h,
        s_hat=s_hat,
        converged=np.asarray(result.converged, dtype=bool),
        error_estimate=result.error_estimate / math.pi,
    )


def estimate_density_direct(sample, s_hat, h, xs, quad, gamma=1.0):
    """The same estimator as an average of scaled kernels (1/h) K((Y_j - x) / h)."""
    _check_index(s_hat)
    _check_bandwidth(h)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    gaps = np.subtract.outer(xs, sample.values)
    values = _cos_transform(gaps.ravel(), s_hat, 1.0 / (gamma * h), gamma, 1.0, quad, "direct density estimate")
    return values.reshape(gaps.shape).mean(axis=1)


def quad_functional(sample, s_hat, spec, quad, h=None, gamma=1.0):
    """U-statistic estimate of int f^2 over all unordered pairs of observations.

    Uses sum_{k != j} cos(u (Y_k - Y_j)) = |sum_j exp(i u Y_j)|^2 - n on the
    sorted sample, so the value does not depend on the input order.
    """
    _check_index(s_hat)
    n = sample.n
    if n < 2:
        raise ConfigError(f"quadratic functional needs n >= 2, got {n}")
    if h is None:
        h = bandwidth(spec, n, s_hat)
    _check_bandwidth(h)
    upper = 1.0 / (gamma * h)
    check_exponent(2.0 * (gamma * upper) ** s_hat + 2.0 * math.log(n), "quadratic functional")
    ordered = Sample(np.sort(sample.values))
    low, high = np.quantile(ordered.values, [0.005, 0.995])
    weight = _weight(s_hat, gamma, 2.0)
    mass = _envelope_mass(weight, upper, quad)

    def integrand(u, w):
        phi = ecf_batch(ordered, u)
        energy = n * n * (phi.real ** 2 + phi.imag ** 2) - n
        return np.sum(w * weight(u) * energy) / (n * (n - 1))

    result = require_converged(
        integrate(integrand, upper, quad, spread=float(high - low), scale=mass),
        "quadratic functional",
    )
    return float(result.value) / math.pi


def l2_norm_sq(cf, quad, cutoff=16.0, max_cutoff=float(1 << 20), tol=None):
    """Squared L2 norm (1/2pi) int |cf|^2 of a density given its characteristic function.

    The range doubles until the power-law tail estimate is below ``tol``
    relative to the integral; the tail is added to the result.
    """
    tol = quad.refine_tol if tol is None else tol

    def energy(u):
        return np.abs(np.broadcast_to(cf(u), np.shape(u))) ** 2

    while True:
        result = require_converged(integrate(lambda u, w: np.sum(w * energy(u)), cutoff, quad), "L2 norm")
        value = float(result.value)
        tail = power_tail(energy, cutoff)
        if not math.isfinite(tail):
            raise NumericalError("characteristic function is not square-integrable")
        if tail <= tol * max(value, np.finfo(float).tiny):
            return (value + tail) / math.pi
        if cutoff >= max_cutoff:
            raise NumericalError(f"L2 norm tail {tail / math.pi:.3g} still above tolerance at cutoff {cutoff:g}")
        cutoff *= 2.0
