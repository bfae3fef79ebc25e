#!/usr/bin/env python3
"""
Signal and noise models for the convolution model Y = X + eps.

Provides exact characteristic functions of the symmetric stable noise and of the
simulation signals, seeded samplers for both, and the Sobolev seminorm used as
a smoothness diagnostic.
"""

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, NumericalError
from .quadrature import QuadratureSpec, integrate, power_tail

LOGGER = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, None]

# |s - 1| below this uses the Cauchy branch of the stable sampler
CAUCHY_TOLERANCE = 1e-8


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _as_output(u, values):
    """Return a scalar for scalar input, an array otherwise."""
    if np.ndim(u) == 0:
        return values.item()
    return values


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Sample:
    """Immutable sample of real observations."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 1:
            raise ConfigError("sample must contain at least one observation")
        if not np.all(np.isfinite(values)):
            raise ConfigError("sample contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return int(self.values.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    def scaled(self, factor):
        return Sample(self.values * factor)

    def write(self, path):
        """Write one value per line with full round-trip precision."""
        path = Path(path)
        try:
            np.savetxt(path, self.values, fmt="%.17g")
        except OSError as e:
            raise ConfigError(f"cannot write sample to {path}: {e}") from e

    @classmethod
    def read(cls, path):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"sample file not found: {path}")
        try:
            values = np.loadtxt(path, dtype=float, ndmin=1)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot parse sample file {path}: {e}") from e
        try:
            return cls(values)
        except ConfigError as e:
            raise ConfigError(f"{path}: {e}") from e


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Symmetric stable noise with characteristic function exp(-|gamma u|^s)."""

    s: float
    gamma: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.s <= 2.0):
            raise ConfigError(f"self-similarity index must lie in (0, 2], got {self.s}")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ConfigError(f"noise scale gamma must be positive, got {self.gamma}")


def noise_cf(model, u):
    """exp(-|gamma u|^s); scalar in, scalar out."""
    u_arr = np.asarray(u, dtype=float)
    return _as_output(u, np.exp(-np.abs(model.gamma * u_arr) ** model.s))


def sample_stable(model, n, seed=None):
    """Draw n symmetric stable variates by the Chambers-Mallows-Stuck transform.

    s = 2 draws N(0, 2 gamma^2) and s near 1 draws a Cauchy variate directly.
    """
    if not isinstance(model, NoiseModel):
        raise ConfigError("sample_stable expects a NoiseModel")
    if n < 1:
        raise ConfigError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(_seed_sequence(seed))
    s = model.s
    if s == 2.0:
        draws = rng.normal(0.0, math.sqrt(2.0), size=n)
    elif abs(s - 1.0) < CAUCHY_TOLERANCE:
        draws = np.tan(rng.uniform(-math.pi / 2, math.pi / 2, size=n))
    else:
        draws = _cms(rng, s, n)
        bad = ~np.isfinite(draws)
        while np.any(bad):
            draws[bad] = _cms(rng, s, int(bad.sum()))
            bad = ~np.isfinite(draws)
    return Sample(model.gamma * draws)


def _cms(rng, s, size):
    phi = rng.uniform(-math.pi / 2, math.pi / 2, size=size)
    w = rng.standard_exponential(size=size)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        return (np.sin(s * phi) / np.cos(phi) ** (1.0 / s)) * (np.cos((1.0 - s) * phi) / w) ** ((1.0 - s) / s)


def rescale(sample, gamma):
    """Divide observations by the known noise scale so the selector sees gamma = 1."""
    if gamma == 1.0:
        return sample
    return Sample(sample.values / gamma)


# ---------------------------------------------------------------------------
# Signals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaplaceSum:
    """Sum of ``count`` standard Laplace variates, cf (1 + u^2)^-count."""

    count: int = 5

    def __post_init__(self):
        if not isinstance(self.count, (int, np.integer)) or self.count < 1:
            raise ConfigError(f"LaplaceSum count must be a positive integer, got {self.count!r}")

    @property
    def name(self):
        return f"laplace{self.count}"


@dataclass(frozen=True)
class GammaSignal:
    """Gamma(shape, scale) variate, cf (1 - i scale u)^-shape."""

    shape: float = 1.5
    scale: float = 2.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ConfigError(f"GammaSignal needs positive shape and scale, got ({self.shape}, {self.scale})")

    @property
    def name(self):
        return "gamma"


@dataclass(frozen=True)
class CustomSignal:
    """User-supplied characteristic function and sampler ``sampler(rng, n)``."""

    name: str
    cf: Callable
    sampler: Callable

    def __post_init__(self):
        at_zero = complex(np.asarray(self.cf(np.zeros(1)))[0])
        if abs(at_zero - 1.0) > 1e-12:
            raise ConfigError(f"custom signal '{self.name}': characteristic function at 0 is {at_zero}, expected 1")


SignalKind = Union[LaplaceSum, GammaSignal, CustomSignal]


@dataclass(frozen=True)
class SignalModel:
    """Signal law of X = pre_scale * Z + shift with Z drawn from ``kind``."""

    kind: SignalKind
    pre_scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, (LaplaceSum, GammaSignal, CustomSignal)):
            raise ConfigError(f"unsupported signal kind: {self.kind!r}")
        if not (self.pre_scale > 0 and math.isfinite(self.pre_scale)):
            raise ConfigError(f"pre_scale must be positive, got {self.pre_scale}")
        if not math.isfinite(self.shift):
            raise ConfigError(f"shift must be finite, got {self.shift}")

    @property
    def name(self):
        return self.kind.name

    def cf(self, u):
        return signal_cf(self, u)

    def shifted(self, offset):
        return SignalModel(self.kind, self.pre_scale, self.shift + offset)


def signal_cf(model, u):
    """E[exp(i u X)] of the signal, including pre-scale and shift."""
    u_arr = np.asarray(u, dtype=float)
    v = model.pre_scale * u_arr
    kind = model.kind
    if isinstance(kind, LaplaceSum):
        values = ((1.0 + v * v) ** (-kind.count)).astype(complex)
    elif isinstance(kind, GammaSignal):
        values = np.exp(-kind.shape * np.log(1.0 - 1j * kind.scale * v))
    else:
        values = np.asarray(kind.cf(np.atleast_1d(v)), dtype=complex).reshape(v.shape)
    if model.shift != 0.0:
        values = values * np.exp(1j * u_arr * model.shift)
    return _as_output(u, np.asarray(values, dtype=complex))


def sample_signal(model, n, seed=None):
    """Draw n signal values X = pre_scale * Z + shift."""
    if n < 1:
        raise ConfigError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(_seed_sequence(seed))
    kind = model.kind
    if isinstance(kind, LaplaceSum):
        base = rng.laplace(0.0, 1.0, size=(n, kind.count)).sum(axis=1)
    elif isinstance(kind, GammaSignal):
        base = rng.gamma(kind.shape, kind.scale, size=n)
    else:
        base = np.asarray(kind.sampler(rng, n), dtype=float).ravel()
        if base.size != n:
            raise ConfigError(f"custom signal '{kind.name}' sampler returned {base.size} values, expected {n}")
    return Sample(model.pre_scale * base + model.shift)


def simulate_observations(signal, noise, n, seed=None):
    """Y_j = X_j + eps_j with independent signal and noise streams spawned from ``seed``."""
    signal_seed, noise_seed = _seed_sequence(seed).spawn(2)
    x = sample_signal(signal, n, signal_seed)
    eps = sample_stable(noise, n, noise_seed)
    return Sample(x.values + eps.values)


# ---------------------------------------------------------------------------
# Smoothness diagnostic
# ---------------------------------------------------------------------------

def sobolev_seminorm(cf, beta, cutoff, nodes=1024, tol=1e-6, check_tail=True):
    """(1/2pi) int_{|u| <= cutoff} |cf(u)|^2 |u|^(2 beta) du.

    With ``check_tail`` the power-law tail beyond ``cutoff`` is estimated and a
    NumericalError is raised when it is not below ``tol`` relative to the value.
    """
    if not beta > 0:
        raise ConfigError(f"beta must be > 0, got {beta}")
    if not cutoff > 0:
        raise ConfigError(f"cutoff must be > 0, got {cutoff}")

    def density(u):
        return np.abs(np.broadcast_to(cf(u), u.shape)) ** 2 * u ** (2.0 * beta)

    spec = QuadratureSpec(nodes=max(16, nodes), max_nodes=max(1 << 16, 4 * nodes), refine_tol=tol)
    result = integrate(lambda u, w: np.sum(w * density(u)), cutoff, spec)
    value = float(result.value) / math.pi
    if not check_tail:
        return value

    tail = power_tail(density, cutoff) / math.pi
    if not math.isfinite(tail):
        raise NumericalError(f"seminorm integral diverges: |cf|^2 |u|^{2 * beta:g} is not integrable")
    if tail > tol * max(value, np.finfo(float).tiny):
        raise NumericalError(f"seminorm tail beyond cutoff {cutoff:g} is {tail:.3g}, above tolerance")
    return value


def signal_from_name(name, pre_scale=1.0, shift=0.0):
    """Build a signal from its report name: ``laplace<count>`` or ``gamma``."""
    if name == "gamma":
        return SignalModel(GammaSignal(1.5, 2.0), pre_scale, shift)
    match = re.fullmatch(r"laplace(\d+)", name)
    if match:
        return SignalModel(LaplaceSum(int(match.group(1))), pre_scale, shift)
    raise ConfigError(f"unknown signal '{name}' (expected laplace<count> or gamma)")
