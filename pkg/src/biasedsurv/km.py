"""Kaplan-Meier product-limit estimation of the CDF and its jump sizes.

The jump sizes double as censoring-correction weights for the kernel
estimators: censored knots carry zero mass and the mass they would have
held is pushed onto later event times by the product-limit construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError
from .model import SurvivalSample


@dataclass(frozen=True)
class StepCdf:
    """Right-continuous step CDF with one (possibly zero) jump per knot.

    ``F(t)`` is the sum of jumps at knots <= t.  When the largest
    observation is censored the jumps sum to less than one; the deficit is
    deliberately left unassigned (downstream estimators renormalize).
    """

    knots: np.ndarray
    jumps: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        jumps = np.asarray(self.jumps, dtype=float)
        if knots.shape != jumps.shape or knots.ndim != 1:
            raise DomainError("knots and jumps must be 1-d arrays of equal length")
        if np.any(np.diff(knots) < 0.0):
            raise DomainError("knots must be nondecreasing")
        if np.any(jumps < -1e-12):
            raise DomainError("jumps must be nonnegative")
        knots.setflags(write=False)
        jumps.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "jumps", jumps)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.jumps))

    def __call__(self, t):
        """Evaluate F(t); right-continuous, so a knot's jump counts at the knot."""
        t = np.asarray(t, dtype=float)
        cum = np.cumsum(self.jumps)
        idx = np.searchsorted(self.knots, t, side="right")
        out = np.where(idx > 0, cum[np.minimum(idx, cum.size) - 1], 0.0)
        return out if out.ndim else float(out)

    def survival(self, t):
        return 1.0 - self.__call__(t)


def km_order(sample: SurvivalSample) -> np.ndarray:
    """Ordering for product-limit computation: by time, events before censorings
    at tied times, original index breaking remaining ties."""
    censored = (~sample.events).astype(int)
    return np.lexsort((np.arange(sample.n), censored, sample.times))


def km_cdf(sample: SurvivalSample) -> StepCdf:
    """Product-limit estimate of the CDF of the observed times.

    The survival probability after the i-th ordered observation is the
    running product of ((n - i) / (n - i + 1)) ** I_[i] over the ordered
    event indicators; the jump at each ordered time is the corresponding
    drop in survival.  With no censoring this reduces exactly to the
    empirical CDF.

    Raises
    ------
    EstimationError
        If the sample contains no uncensored record (no jumps exist).
    """
    if sample.n_uncensored == 0:
        raise EstimationError("Kaplan-Meier needs at least one uncensored record")
    order = km_order(sample)
    times = sample.times[order]
    events = sample.events[order]
    n = sample.n
    i = np.arange(1, n + 1, dtype=float)
    factors = np.where(events, (n - i) / (n - i + 1.0), 1.0)
    survival = np.cumprod(factors)
    jumps = np.diff(survival, prepend=1.0) * -1.0
    jumps[~events] = 0.0  # exact zeros at censored knots
    return StepCdf(times, jumps)
