#!/usr/bin/env python3
"""
Empirical characteristic function (1/n) sum exp(-i u Y_j).

The sign convention is the conjugate of the model transforms E[exp(i u X)];
ExactTransform conjugates an analytic cf so both sources can be used
interchangeably by the selector and the estimators.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import Sample

# cap on the size of one (frequencies x observations) phase block
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class EcfValue:
    u: float
    value: complex
    n: int

    @classmethod
    def of(cls, sample, u):
        return cls(float(u), ecf(sample, u), sample.n)

    @property
    def modulus(self):
        return min(abs(self.value), 1.0)


def ecf_batch(sample, us):
    """ECF at every frequency in ``us``; each row is summed pairwise over the sample."""
    us = np.asarray(us, dtype=float).ravel()
    out = np.empty(us.size, dtype=complex)
    if us.size == 0:
        return out
    y = sample.values
    n = y.size
    magnitudes = np.abs(us)
    block = max(1, _BLOCK_ELEMENTS // n)
    for start in range(0, us.size, block):
        phase = np.multiply.outer(magnitudes[start:start + block], y)
        real = np.cos(phase).sum(axis=1) / n
        imag = -np.sin(phase).sum(axis=1) / n
        out[start:start + block] = real + 1j * imag
    negative = us < 0
    out[negative] = np.conj(out[negative])
    out[us == 0] = 1.0
    return out


def ecf(sample, u):
    """ECF at a single frequency."""
    return complex(ecf_batch(sample, [u])[0])


def ecf_mod(sample, u):
    """|ecf(sample, u)|, clipped to 1."""
    return min(abs(ecf(sample, u)), 1.0)


class EmpiricalTransform:
    """Observation transform estimated from a sample."""

    def __init__(self, sample):
        if not isinstance(sample, Sample):
            sample = Sample(sample)
        self.sample = sample
        self.n = sample.n
        low, centre, high = np.quantile(sample.values, [0.005, 0.5, 0.995])
        self.centre = float(centre)
        self.spread = float(high - low)

    def __call__(self, us):
        return ecf_batch(self.sample, us)

    def modulus(self, us):
        return np.minimum(np.abs(self(us)), 1.0)


class ExactTransform:
    """Analytic observation transform in the ECF sign convention.

    ``cf`` is a model characteristic function E[exp(i u Y)]; values are
    conjugated. ``n`` only matters to callers that need a sample size
    (bandwidths, evaluation points).
    """

    def __init__(self, cf, n, spread=0.0, centre=0.0):
        if n < 1:
            raise ConfigError(f"n must be >= 1, got {n}")
        self.cf = cf
        self.n = int(n)
        self.spread = float(spread)
        self.centre = float(centre)

    def __call__(self, us):
        us = np.asarray(us, dtype=float).ravel()
        return np.conj(np.asarray(self.cf(us), dtype=complex).reshape(us.shape))

    def modulus(self, us):
        return np.minimum(np.abs(self(us)), 1.0)


def as_transform(data):
    """Wrap a Sample (or raw values); anything exposing ``n`` and ``modulus`` passes through."""
    if hasattr(data, "modulus") and hasattr(data, "n"):
        return data
    return EmpiricalTransform(data)
