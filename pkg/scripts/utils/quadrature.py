#!/usr/bin/env python3
"""Composite quadrature on [0, B] for the one-sided spectral integrals.

Every integral in the estimators has the form (1/pi) * int_0^B w(u) g(u) du with
a smooth, fast-growing weight and an oscillatory data-dependent factor. Panels
are Gauss-Legendre (or midpoint) rules; the panel count starts from the
oscillation scale of the data and doubles until two successive refinements
agree to ``refine_tol`` relative to a caller-supplied scale.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NumericalError, QuadratureError

LOGGER = logging.getLogger(__name__)

SCHEMES = ("gauss", "midpoint")

# log of the largest double; exponents above this overflow
LOG_FLOAT_MAX = float(np.log(np.finfo(float).max))


@dataclass(frozen=True)
class QuadratureSpec:
    """Panel quadrature settings.

    nodes: initial number of nodes (panels * order) before node doubling.
    order: nodes per panel.
    scheme: ``gauss`` (Gauss-Legendre panels) or ``midpoint``.
    refine_tol: relative agreement required between two successive doublings.
    max_nodes: ceiling on the node count; reaching it without agreement is a
        non-convergence.
    """

    nodes: int = 1024
    order: int = 16
    scheme: str = "gauss"
    refine_tol: float = 1e-5
    max_nodes: int = 1 << 16

    def __post_init__(self):
        if self.nodes < 16:
            raise ConfigError(f"quadrature nodes must be >= 16, got {self.nodes}")
        if self.order < 1:
            raise ConfigError(f"quadrature order must be >= 1, got {self.order}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown quadrature scheme '{self.scheme}' (expected one of {', '.join(SCHEMES)})")
        if not self.refine_tol > 0:
            raise ConfigError(f"refine_tol must be > 0, got {self.refine_tol}")
        if self.max_nodes < 2 * self.nodes:
            raise ConfigError(f"max_nodes ({self.max_nodes}) must allow at least one doubling of nodes ({self.nodes})")

    def tightened(self, refine_tol):
        return replace(self, refine_tol=refine_tol)


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray
    error_estimate: np.ndarray
    nodes: int
    converged: np.ndarray

    @property
    def all_converged(self):
        return bool(np.all(self.converged))


@lru_cache(maxsize=16)
def _reference_rule(order, scheme):
    if scheme == "gauss":
        return np.polynomial.legendre.leggauss(order)
    points = (np.arange(order) + 0.5) * (2.0 / order) - 1.0
    return points, np.full(order, 2.0 / order)


def panel_nodes(upper, panels, spec):
    """Nodes and weights of the composite rule with ``panels`` equal panels on [0, upper]."""
    ref_x, ref_w = _reference_rule(spec.order, spec.scheme)
    edges = np.linspace(0.0, upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return nodes, weights


def initial_panels(upper, spec, spread=0.0):
    """Panel count resolving cos(u * spread) with width <= min(pi / (4 spread), upper / 64)."""
    width = upper / 64.0
    if spread > 0:
        width = min(width, math.pi / (4.0 * spread))
    panels = max(math.ceil(spec.nodes / spec.order), math.ceil(upper / width))
    cap = max(1, spec.max_nodes // (2 * spec.order))
    return min(panels, cap)


def panels_resolve(upper, spec, spread):
    """Whether Gauss panels can resolve cos(u * spread) within ``max_nodes``."""
    if spread <= 0:
        return True
    return math.ceil(4.0 * upper * spread / math.pi) <= spec.max_nodes // (2 * spec.order)


def integrate(integrand, upper, spec, *, spread=0.0, scale=None):
    """Integrate on [0, upper] with node doubling.

    ``integrand(nodes, weights)`` returns the weighted sum(s) for one rule; any
    array shape is allowed and convergence is judged elementwise. ``scale`` is
    the magnitude the tolerance is relative to (defaults to the estimate itself).
    """
    if not upper > 0:
        raise ConfigError(f"integration range must be positive, got {upper}")
    panels = initial_panels(upper, spec, spread)
    nodes, weights = panel_nodes(upper, panels, spec)
    coarse = np.asarray(integrand(nodes, weights), dtype=float)
    while True:
        panels *= 2
        nodes, weights = panel_nodes(upper, panels, spec)
        fine = np.asarray(integrand(nodes, weights), dtype=float)
        error = np.abs(fine - coarse)
        reference = np.abs(fine) if scale is None else np.abs(scale)
        converged = error <= spec.refine_tol * reference
        if np.all(converged) or 2 * panels * spec.order > spec.max_nodes:
            break
        coarse = fine
    LOGGER.debug("quadrature on [0, %.6g]: %d nodes, max error %.3g", upper, nodes.size, float(np.max(error)))
    return QuadratureResult(value=fine, error_estimate=error, nodes=nodes.size, converged=converged)


def require_converged(result, what):
    if not result.all_converged:
        raise QuadratureError(
            f"{what}: node doubling did not converge (error estimate {float(np.max(result.error_estimate)):.3g} "
            f"at {result.nodes} nodes)",
            value=result.value,
            error_estimate=result.error_estimate,
        )
    return result


def _filon_weights(theta):
    """Filon alpha, beta, gamma for theta = step * frequency."""
    theta = np.asarray(theta, dtype=float)
    alpha = np.empty_like(theta)
    beta = np.empty_like(theta)
    gamma = np.empty_like(theta)
    small = np.abs(theta) < 0.1
    # series near zero; the closed forms cancel catastrophically there
    t = theta[small]
    t2 = t * t
    alpha[small] = t * t2 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * 2.0 / 4725.0))
    beta[small] = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * 2.0 / 567.0))
    gamma[small] = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 / 11340.0))
    t = theta[~small]
    sin_t, cos_t = np.sin(t), np.cos(t)
    t2 = t * t
    inv_t3 = 1.0 / (t2 * t)
    alpha[~small] = inv_t3 * (t2 + t * sin_t * cos_t - 2.0 * sin_t * sin_t)
    beta[~small] = 2.0 * inv_t3 * (t * (1.0 + cos_t * cos_t) - 2.0 * sin_t * cos_t)
    gamma[~small] = 4.0 * inv_t3 * (sin_t - t * cos_t)
    return alpha, beta, gamma


def filon_cos(f, upper, frequencies, intervals):
    """int_0^upper f(u) cos(k u) du for every k in ``frequencies`` by Filon's rule.

    ``f`` is sampled on 2 * intervals + 1 equally spaced points; the cosine is
    integrated exactly against the piecewise quadratic interpolant of f.
    """
    k = np.atleast_1d(np.asarray(frequencies, dtype=float))
    u = np.linspace(0.0, upper, 2 * intervals + 1)
    step = u[1] - u[0]
    values = np.asarray(f(u), dtype=float)
    alpha, beta, gamma = _filon_weights(step * k)
    phase = np.cos(np.multiply.outer(k, u))
    phase[:, 0] *= 0.5
    phase[:, -1] *= 0.5
    even = phase[:, 0::2] @ values[0::2]
    odd = phase[:, 1::2] @ values[1::2]
    boundary = values[-1] * np.sin(k * upper) - values[0] * np.sin(k * 0.0)
    return step * (alpha * boundary + beta * even + gamma * odd)


def integrate_cos_filon(f, upper, frequencies, spec, scale):
    """Filon integration with interval doubling until successive results agree."""
    intervals = max(8, spec.nodes // 2)
    coarse = filon_cos(f, upper, frequencies, intervals)
    while True:
        intervals *= 2
        fine = filon_cos(f, upper, frequencies, intervals)
        error = np.abs(fine - coarse)
        converged = error <= spec.refine_tol * np.abs(scale)
        if np.all(converged) or 2 * intervals + 1 > spec.max_nodes:
            break
        coarse = fine
    return QuadratureResult(value=fine, error_estimate=error, nodes=2 * intervals + 1, converged=converged)


def power_tail(g, cutoff):
    """Tail mass int_cutoff^inf g from a power-law fit through g(cutoff/2) and g(cutoff).

    Returns ``inf`` when the fitted exponent is >= -1 (non-integrable tail).
    """
    g_hi = float(g(np.array([cutoff]))[0])
    if g_hi == 0.0:
        return 0.0
    g_lo = float(g(np.array([cutoff / 2.0]))[0])
    if g_lo <= 0.0:
        return g_hi * cutoff
    exponent = math.log(g_hi / g_lo) / math.log(2.0)
    if exponent >= -1.0:
        return math.inf
    return g_hi * cutoff / (-exponent - 1.0)


def check_exponent(exponent, what):
    """Fail instead of letting exp(exponent) overflow to infinity."""
    if exponent >= LOG_FLOAT_MAX:
        raise NumericalError(f"{what}: exp({exponent:.4g}) exceeds the floating-point range")
    return exponent
