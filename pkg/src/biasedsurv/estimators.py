"""Density estimators for biased, right-censored survival samples.

Four kernel-type estimators share one pipeline: a weighted Gaussian kernel
mixture is evaluated on a grid and normalized so its grid integral is one.

* ``naive_kde``        - equal weights on all observed times; ignores both
                         the censoring and the selection bias (baseline).
* ``marron_padgett_kde`` - Kaplan-Meier jump weights; corrects censoring only.
* ``wke``              - Kaplan-Meier jumps divided by the selection
                         probability at each knot; corrects both biases.
* ``tbe``              - times transformed through the cumulative selection
                         function, Kaplan-Meier-weighted kernel in the
                         transformed space, mapped back to the time axis.

``jones`` is ``wke`` with the length-bias exponent fixed at one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bandwidth import BandwidthRule, select_bandwidth
from .errors import DomainError, EstimationError
from .km import km_cdf
from .model import (
    EvaluationGrid,
    SelectionFamily,
    SurvivalSample,
    cumulative_selection,
    selection_weight,
)

_SQRT_2PI = np.sqrt(2.0 * np.pi)

#: methods that produce a DensityEstimate (km is handled as a step CDF)
DENSITY_METHODS = ("naive", "marron_padgett", "wke", "jones", "tbe")


def gaussian_mixture(x, centers, weights, h: float) -> np.ndarray:
    """Evaluate sum_i weights_i * K_h(x - centers_i) with a Gaussian kernel."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    centers = np.asarray(centers, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if h <= 0.0 or not np.isfinite(h):
        raise DomainError("bandwidth must be positive and finite")
    out = np.empty(x.size)
    # chunk evaluation points so the pairwise matrix stays modest
    step = max(1, int(4e6) // max(centers.size, 1))
    for lo in range(0, x.size, step):
        u = (x[lo:lo + step, None] - centers[None, :]) / h
        out[lo:lo + step] = np.exp(-0.5 * u * u) @ weights
    return out / (h * _SQRT_2PI)


@dataclass(frozen=True)
class _KernelMixture:
    """Unnormalized kernel sum, optionally living in transformed time."""

    centers: np.ndarray
    weights: np.ndarray
    h: float
    transform_theta: Optional[float] = None  # None: kernel acts on raw time

    def raw_density(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = t if self.transform_theta is None else cumulative_selection(
            t, self.transform_theta)
        return gaussian_mixture(x, self.centers, self.weights, self.h)


@dataclass(frozen=True)
class DensityEstimate:
    """A density estimate on a grid with its induced CDF.

    ``f_hat`` integrates to one against the grid spacing weights for every
    estimator in this module; ``F_hat`` is the running spacing-weighted sum
    of ``f_hat`` capped at one, and the survival function is ``1 - F_hat``.
    ``kappa_hat`` records the estimator's own normalizing constant (the
    inverse total selection-corrected mass for the weighted kernel
    estimator, the grid normalizer for the transformation-based one).
    """

    grid: EvaluationGrid
    f_hat: np.ndarray
    F_hat: np.ndarray
    kappa_hat: float
    h: float
    method: str
    mixture: Optional[_KernelMixture] = None
    scale: float = 1.0

    def __post_init__(self):
        f_hat = np.asarray(self.f_hat, dtype=float)
        F_hat = np.asarray(self.F_hat, dtype=float)
        if f_hat.shape != self.grid.points.shape or F_hat.shape != f_hat.shape:
            raise DomainError("f_hat/F_hat must match the grid length")
        if np.any(f_hat < 0.0) or not np.all(np.isfinite(f_hat)):
            raise EstimationError("density values must be finite and nonnegative")
        f_hat.setflags(write=False)
        F_hat.setflags(write=False)
        object.__setattr__(self, "f_hat", f_hat)
        object.__setattr__(self, "F_hat", F_hat)

    @property
    def S_hat(self) -> np.ndarray:
        return 1.0 - self.F_hat

    def integral(self) -> float:
        return self.grid.integrate(self.f_hat)

    def density_at(self, t) -> np.ndarray:
        """Exact mixture evaluation at arbitrary times (grid-free)."""
        if self.mixture is None:
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.interp(t, self.grid.points, self.f_hat, left=0.0, right=0.0)
        return self.scale * self.mixture.raw_density(t)

    def cdf_at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.interp(t, self.grid.points, self.F_hat,
                         left=0.0, right=float(self.F_hat[-1]))

    def survival_at(self, t) -> np.ndarray:
        return 1.0 - self.cdf_at(t)


def _cumulative(grid: EvaluationGrid, f_hat: np.ndarray) -> np.ndarray:
    return np.minimum(np.cumsum(f_hat * grid.weights), 1.0)


def _finalize(grid, mixture, method, kappa_hat=None) -> DensityEstimate:
    raw = mixture.raw_density(grid.points)
    total = grid.integrate(raw)
    if not np.isfinite(total) or total <= 0.0:
        raise EstimationError(f"{method}: kernel mixture carries no mass on the grid")
    scale = 1.0 / total
    f_hat = raw * scale
    return DensityEstimate(
        grid=grid,
        f_hat=f_hat,
        F_hat=_cumulative(grid, f_hat),
        kappa_hat=scale if kappa_hat is None else kappa_hat,
        h=mixture.h,
        method=method,
        mixture=mixture,
        scale=scale,
    )


def naive_kde(sample: SurvivalSample, h: float, grid: EvaluationGrid) -> DensityEstimate:
    """Plain kernel density over all observed times.

    Censored values are treated as exact and no selection correction is
    applied; this is the baseline that is inconsistent for the true density
    whenever either bias is present.
    """
    weights = np.full(sample.n, 1.0 / sample.n)
    mixture = _KernelMixture(sample.times.copy(), weights, float(h))
    return _finalize(grid, mixture, "naive")


def marron_padgett_kde(sample: SurvivalSample, h: float,
                       grid: EvaluationGrid) -> DensityEstimate:
    """Kernel density weighted by Kaplan-Meier jumps (censoring corrected)."""
    step = km_cdf(sample)
    mixture = _KernelMixture(step.knots, step.jumps, float(h))
    return _finalize(grid, mixture, "marron_padgett")


def wke(sample: SurvivalSample, theta: float, family: SelectionFamily,
        h: float, grid: EvaluationGrid) -> DensityEstimate:
    """Weighted kernel estimator: Kaplan-Meier jumps over selection weights.

    Each ordered knot contributes mass ``s_i / w(t_(i), theta)``; the
    reported ``kappa_hat`` is the reciprocal of the total corrected mass,
    the estimator's analytic normalizing constant.
    """
    step = km_cdf(sample)
    w = np.asarray(selection_weight(step.knots, theta, family), dtype=float)
    weights = step.jumps / w
    total = float(np.sum(weights))
    if total <= 0.0 or not np.isfinite(total):
        raise EstimationError("wke: selection-corrected weights carry no mass")
    mixture = _KernelMixture(step.knots, weights, float(h))
    return _finalize(grid, mixture, "wke", kappa_hat=1.0 / total)


def jones(sample: SurvivalSample, h: float, grid: EvaluationGrid,
          family: Optional[SelectionFamily] = None) -> DensityEstimate:
    """Length-bias-corrected kernel estimate: the weighted kernel estimator
    with the selection exponent fixed at one."""
    if family is None:
        family = SelectionFamily()
    est = wke(sample, 1.0, family, h, grid)
    return replace(est, method="jones")


def tbe(sample: SurvivalSample, theta: float, family: SelectionFamily,
        h: float, grid: EvaluationGrid) -> DensityEstimate:
    """Transformation-based estimator.

    Times are mapped through the cumulative selection function, a
    Kaplan-Meier-weighted kernel estimate is built in the transformed
    space with bandwidth ``h`` (which must be chosen on that scale), and
    the density on the original axis is recovered by composing with the
    transform and renormalizing on the grid.  ``kappa_hat`` is that grid
    normalizer.
    """
    if not family.contains(theta):
        raise DomainError(f"theta={theta} outside admissible range {family.theta_range}")
    y = np.asarray(cumulative_selection(sample.times, theta), dtype=float)
    if sample.n >= 2 and np.unique(y).size < 2:
        raise EstimationError("tbe: transform collapsed all times to one point")
    step = km_cdf(SurvivalSample(y, sample.events))
    mixture = _KernelMixture(step.knots, step.jumps, float(h), transform_theta=theta)
    return _finalize(grid, mixture, "tbe")


def cdf_from_density(est: DensityEstimate) -> DensityEstimate:
    """Fill ``F_hat`` as the running spacing-weighted sum of ``f_hat``, capped at 1."""
    return replace(est, F_hat=_cumulative(est.grid, est.f_hat))


def resolve_bandwidth(sample: SurvivalSample, method: str,
                      rule: BandwidthRule, theta: float = None) -> float:
    """Bandwidth for ``method`` under the package conventions.

    The naive estimator smooths every observed time, so its bandwidth is
    chosen from all of them.  The Kaplan-Meier-weighted estimators place
    mass only at uncensored knots, so their bandwidth is chosen from the
    uncensored values - on the raw time axis for the weighted kernel
    estimator and on the transformed axis for the transformation-based one.
    """
    if rule.kind == "fixed":
        return float(rule.h)
    if method == "naive":
        values = sample.times
    else:
        values = sample.times[sample.events]
        if method == "tbe":
            values = np.asarray(cumulative_selection(values, theta), dtype=float)
    return select_bandwidth(values, rule=rule)


def fit_density(sample: SurvivalSample, method: str,
                grid: Optional[EvaluationGrid] = None,
                theta: Optional[float] = None,
                family: Optional[SelectionFamily] = None,
                bandwidth: BandwidthRule = None) -> DensityEstimate:
    """One-call front end: resolve grid and bandwidth, then run ``method``."""
    if method not in DENSITY_METHODS:
        raise DomainError(f"unknown density method {method!r}")
    if family is None:
        family = SelectionFamily()
    if grid is None:
        grid = EvaluationGrid.for_sample(sample)
    if bandwidth is None:
        bandwidth = BandwidthRule.dpi()
    if method == "jones":
        theta = 1.0
    if method in ("wke", "tbe") and theta is None:
        raise DomainError(f"{method} requires theta (estimate it or fix it)")

    h = resolve_bandwidth(sample, method, bandwidth, theta)
    if method == "naive":
        return naive_kde(sample, h, grid)
    if method == "marron_padgett":
        return marron_padgett_kde(sample, h, grid)
    if method == "wke":
        return wke(sample, theta, family, h, grid)
    if method == "jones":
        return jones(sample, h, grid, family)
    return tbe(sample, theta, family, h, grid)
