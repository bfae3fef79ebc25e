#!/usr/bin/env python3
"""
Selection of the noise self-similarity index on a finite grid.

For each grid index k the modulus of the observation transform at u_k is
compared against the midpoints between neighbouring target intervals
[A u^-beta' exp(-u^s_k), exp(-u^s_k)]. The selected value is the smallest
grid value whose conditions hold, or s_1 when none does.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .ecf import as_transform
from .errors import ConfigError, NumericalError

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Strictly increasing candidate values s_1 < ... < s_N in (0, 2]."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("grid must contain at least one value")
        if any(not (0.0 < v <= 2.0) for v in values):
            raise ConfigError(f"grid values must lie in (0, 2], got {values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError(f"grid values must be strictly increasing, got {values}")
        object.__setattr__(self, "values", values)

    @property
    def N(self):
        return len(self.values)

    @property
    def lower(self):
        return self.values[0]

    @property
    def upper(self):
        return self.values[-1]

    @property
    def min_spacing(self):
        if self.N < 2:
            return math.inf
        return min(b - a for a, b in zip(self.values, self.values[1:]))

    def __getitem__(self, k):
        """1-based access to s_k."""
        return self.values[self.check_index(k) - 1]

    def __contains__(self, s):
        return float(s) in self.values

    def check_index(self, k):
        if not (1 <= k <= self.N):
            raise ConfigError(f"grid index {k} out of range 1..{self.N}")
        return k

    def index_of(self, s):
        try:
            return self.values.index(float(s)) + 1
        except ValueError:
            raise ConfigError(f"{s} is not a grid value {self.values}") from None


@dataclass(frozen=True)
class ExplicitPoints:
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class FormulaPoints:
    delta: float


EvalPoints = Union[ExplicitPoints, FormulaPoints]


@dataclass(frozen=True)
class SelectorConfig:
    """Grid, evaluation points and envelope constants for the selector."""

    grid: Grid
    A: float = 1.0
    beta_prime: float = 1.0
    eval_points: EvalPoints = field(default_factory=lambda: FormulaPoints(delta=1.0))
    c: float = 2.0

    def __post_init__(self):
        if not self.A > 0:
            raise ConfigError(f"envelope constant A must be > 0, got {self.A}")
        if not self.beta_prime > 0:
            raise ConfigError(f"beta_prime must be > 0, got {self.beta_prime}")
        if not self.c > 0:
            raise ConfigError(f"grid-spacing constant c must be > 0, got {self.c}")
        if isinstance(self.eval_points, ExplicitPoints):
            points = self.eval_points.values
            if len(points) != self.grid.N:
                raise ConfigError(f"{len(points)} evaluation points given for a grid of {self.grid.N} values")
            if any(not u > 1.0 for u in points):
                raise ConfigError(f"explicit evaluation points must all be > 1, got {points}")
        elif not isinstance(self.eval_points, FormulaPoints):
            raise ConfigError(f"unsupported evaluation points: {self.eval_points!r}")

    @classmethod
    def simulation_default(cls):
        """Grid {0.5, 1, 1.5, 2} with the fixed points (2.5, 1.7, 1.5, 1.45)."""
        return cls(
            grid=Grid((0.5, 1.0, 1.5, 2.0)),
            A=1.0,
            beta_prime=0.35,
            eval_points=ExplicitPoints((2.5, 1.7, 1.5, 1.45)),
            c=2.0,
        )


@dataclass(frozen=True)
class IndexDiagnostic:
    k: int
    s_k: float
    u: float
    modulus: float
    lower: Optional[float]
    upper: Optional[float]
    member: bool


@dataclass(frozen=True)
class SelectionResult:
    s_hat: float
    selected: Tuple[int, ...]
    fallback_used: bool
    diagnostics: Tuple[IndexDiagnostic, ...]

    @property
    def index(self):
        return self.diagnostics[[d.s_k for d in self.diagnostics].index(self.s_hat)].k


@dataclass(frozen=True)
class SpacingReport:
    min_spacing: float
    d_n: float
    spacing_ok: bool
    count_ok: bool

    @property
    def passed(self):
        return self.spacing_ok and self.count_ok


# ---------------------------------------------------------------------------
# Reference transforms and envelopes
# ---------------------------------------------------------------------------

def _log_reference(grid, k, u):
    return -abs(u) ** grid[k]


def _log_envelope(config, k, u):
    return math.log(config.A) - config.beta_prime * math.log(u) + _log_reference(config.grid, k, u)


def reference_cf(grid, k, u):
    """Noise transform exp(-|u|^s_k) of grid index k."""
    return math.exp(_log_reference(grid, k, u))


def envelope(config, k, u):
    """Lower edge A u^-beta' exp(-u^s_k) of the target interval of index k."""
    if not u > 0:
        raise ConfigError(f"envelope needs u > 0, got {u}")
    config.grid.check_index(k)
    return math.exp(_log_envelope(config, k, u))


def lower_midpoint(config, k, u):
    """(1/2)(q Phi^[k] + Phi^[k+1])(u), the lower membership bound for k < N."""
    return 0.5 * math.exp(np.logaddexp(_log_envelope(config, k, u), _log_reference(config.grid, k + 1, u)))


def upper_midpoint(config, k, u):
    """(1/2)(q Phi^[k-1] + Phi^[k])(u), the upper membership bound for k > 1."""
    return 0.5 * math.exp(np.logaddexp(_log_envelope(config, k - 1, u), _log_reference(config.grid, k, u)))


# ---------------------------------------------------------------------------
# Evaluation points
# ---------------------------------------------------------------------------

def eval_points_formula(grid, n, delta):
    """u_k = (log n / 2 - (delta / s_k) log log n)^(1 / s_k), one per grid value."""
    log_n = math.log(n)
    if not log_n > 1.0:
        raise NumericalError(f"n={n} too small: evaluation points need log n > 1")
    log_log_n = math.log(log_n)
    points = []
    for s_k in grid.values:
        base = log_n / 2.0 - (delta / s_k) * log_log_n
        if base <= 0:
            raise NumericalError(f"n={n} too small for delta={delta} and grid value {s_k} (base {base:.4g} <= 0)")
        points.append(base ** (1.0 / s_k))
    low = [(s_k, u) for s_k, u in zip(grid.values, points) if u <= 1.0]
    if low:
        detail = ", ".join(f"s={s_k:g}: u={u:.4f}" for s_k, u in low)
        raise NumericalError(f"evaluation points <= 1 leave the envelope regime ({detail})")
    return tuple(points)


def resolve_points(config, n):
    """Evaluation points for sample size n: the explicit ones, or the formula points."""
    if isinstance(config.eval_points, ExplicitPoints):
        return config.eval_points.values
    return eval_points_formula(config.grid, n, config.eval_points.delta)


def delta_bound_check(config):
    """Warn when formula points use delta <= beta' + s_N^2 / (2 s_1); returns whether the bound holds.

    Explicit points always pass. Call once per configuration, not per selection.
    """
    if not isinstance(config.eval_points, FormulaPoints):
        return True
    delta = config.eval_points.delta
    bound = config.beta_prime + config.grid.upper ** 2 / (2.0 * config.grid.lower)
    if delta <= bound:
        LOGGER.warning("delta=%g is not above beta' + s_max^2 / (2 s_min) = %g", delta, bound)
        return False
    return True


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------

def select_index(data, config):
    """Select s from a Sample or an observation transform.

    Observations must already be divided by the noise scale when gamma != 1.
    """
    transform = as_transform(data)
    grid = config.grid
    points = resolve_points(config, transform.n)
    moduli = np.asarray(transform.modulus(np.asarray(points, dtype=float)), dtype=float)

    diagnostics = []
    for k in range(1, grid.N + 1):
        u = points[k - 1]
        modulus = float(moduli[k - 1])
        lower = lower_midpoint(config, k, u) if k < grid.N else None
        upper = upper_midpoint(config, k, u) if k > 1 else None
        member = (lower is None or lower <= modulus) and (upper is None or modulus < upper)
        diagnostics.append(IndexDiagnostic(k, grid[k], u, modulus, lower, upper, member))

    selected = tuple(d.k for d in diagnostics if d.member)
    if selected:
        s_hat, fallback = grid[selected[0]], False
    else:
        s_hat, fallback = grid[1], True
    LOGGER.debug("selected s=%g from %s (fallback=%s)", s_hat, selected, fallback)
    return SelectionResult(s_hat=s_hat, selected=selected, fallback_used=fallback, diagnostics=tuple(diagnostics))


def grid_spacing_check(grid, n, c, beta_prime=None):
    """Compare the grid against d_n = c / log n. Only logs, never raises."""
    if grid.N < 2:
        return SpacingReport(math.inf, 0.0, True, True)
    log_n = math.log(n) if n > 1 else 0.0
    d_n = c / log_n if log_n > 0 else math.inf
    spacing_ok = grid.min_spacing >= d_n
    count_ok = grid.N - 1 <= (grid.upper - grid.lower) / d_n
    report = SpacingReport(grid.min_spacing, d_n, spacing_ok, count_ok)
    if not report.passed:
        LOGGER.warning("grid spacing %.4g below d_n=%.4g at n=%d", grid.min_spacing, d_n, n)
    if beta_prime is not None and not c > 2.0 * beta_prime:
        LOGGER.warning("grid-spacing constant c=%g is not above 2 beta'=%g", c, 2.0 * beta_prime)
    return report


def envelope_ordering_check(config, points):
    """Messages for evaluation points where the target intervals are not ordered."""
    grid = config.grid
    regime = max(1.0, config.A ** (1.0 / config.beta_prime))
    problems = []
    for k, u in zip(range(1, grid.N + 1), points):
        if u <= regime:
            problems.append(f"k={k}: u={u:g} not above max(1, A^(1/beta'))={regime:g}")
            continue
        if not envelope(config, k, u) < reference_cf(grid, k, u):
            problems.append(f"k={k}: envelope not below reference at u={u:g}")
        refs = [reference_cf(grid, j, u) for j in range(1, grid.N + 1)]
        if any(b >= a for a, b in zip(refs, refs[1:])):
            problems.append(f"k={k}: reference transforms not decreasing in the grid at u={u:g}")
    for message in problems:
        LOGGER.warning("envelope ordering: %s", message)
    return problems
