#!/usr/bin/env python3
"""Exception hierarchy shared by the estimation, testing and harness modules."""


class DeconvError(Exception):
    """Base class for every failure raised by this package."""


class ConfigError(DeconvError, ValueError):
    """Invalid model, setting, input file or violated precondition."""


class NumericalError(DeconvError, ArithmeticError):
    """Numerical parameters are infeasible (negative base, overflow, divergence)."""


class QuadratureError(NumericalError):
    """Node doubling did not reach the requested tolerance."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
