"""Sieve likelihoods for the selection exponent and the 1-D pseudo-MLE.

The selection exponent is scored by plugging the kernel density estimate
at a candidate value into a censored-data log-likelihood: uncensored
records contribute log density, censored records log survival.  A
penalized variant subtracts ``alpha * n / kappa_hat`` with
``alpha = c / sqrt(n)`` to keep the maximizer away from the edge of the
admissible range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .bandwidth import BandwidthRule
from .errors import DomainError, EstimationError
from .estimators import DensityEstimate, resolve_bandwidth, tbe, wke
from .model import EvaluationGrid, SelectionFamily, SurvivalSample

LOG_FLOOR = 1e-300
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

OBJECTIVE_KINDS = ("pseudo_wke", "pseudo_tbe", "penalized_wke", "penalized_tbe")


@dataclass(frozen=True)
class ThetaFit:
    """Result of maximizing a sieve objective over the selection exponent."""

    theta_hat: float
    value: float
    objective: str
    c: float
    alpha: float
    profile: Tuple[Tuple[float, float], ...]
    at_boundary: bool


def _fit_at_theta(sample, theta, method, family, bandwidth, grid,
                  fixed_h: Optional[float] = None) -> DensityEstimate:
    if method == "wke":
        h = fixed_h if fixed_h is not None else resolve_bandwidth(
            sample, "wke", bandwidth)
        return wke(sample, theta, family, h, grid)
    if method == "tbe":
        h = resolve_bandwidth(sample, "tbe", bandwidth, theta)
        return tbe(sample, theta, family, h, grid)
    raise DomainError(f"theta estimation supports 'wke' or 'tbe', not {method!r}")


def _censored_loglik(sample: SurvivalSample, est: DensityEstimate) -> float:
    dens = est.density_at(sample.times[sample.events])
    loglik = float(np.sum(np.log(np.maximum(dens, LOG_FLOOR))))
    if sample.n_uncensored < sample.n:
        surv = est.survival_at(sample.times[~sample.events])
        loglik += float(np.sum(np.log(np.maximum(surv, LOG_FLOOR))))
    return loglik


def _objective_at(sample, theta, method, family, bandwidth, grid,
                  alpha: float = 0.0, fixed_h=None) -> float:
    est = _fit_at_theta(sample, theta, method, family, bandwidth, grid, fixed_h)
    value = _censored_loglik(sample, est)
    if alpha != 0.0:
        value -= alpha * sample.n / est.kappa_hat
    return value


def pseudo_loglik(sample: SurvivalSample, theta: float, method: str = "wke",
                  family: Optional[SelectionFamily] = None,
                  bandwidth: Optional[BandwidthRule] = None,
                  grid: Optional[EvaluationGrid] = None) -> float:
    """Sieve log-likelihood of ``theta`` under the chosen estimator.

    Sum of log density at uncensored times plus log survival at censored
    times, both evaluated from the estimator built at ``theta``.  Values
    are floored at 1e-300 before the log so the objective stays finite.
    """
    family = family or SelectionFamily()
    bandwidth = bandwidth or BandwidthRule.dpi()
    grid = grid or EvaluationGrid.for_sample(sample)
    return _objective_at(sample, theta, method, family, bandwidth, grid)


def penalized_loglik(sample: SurvivalSample, theta: float, method: str = "wke",
                     c: float = 4.0,
                     family: Optional[SelectionFamily] = None,
                     bandwidth: Optional[BandwidthRule] = None,
                     grid: Optional[EvaluationGrid] = None) -> float:
    """Penalized sieve log-likelihood: pseudo minus ``alpha * n / kappa_hat``
    with ``alpha = c / sqrt(n)`` and ``kappa_hat`` the estimator's own
    normalizer at ``theta``."""
    if c <= 0.0:
        raise DomainError("penalty constant c must be positive")
    family = family or SelectionFamily()
    bandwidth = bandwidth or BandwidthRule.dpi()
    grid = grid or EvaluationGrid.for_sample(sample)
    alpha = c * sample.n ** (-0.5)
    return _objective_at(sample, theta, method, family, bandwidth, grid, alpha=alpha)


def estimate_theta(sample: SurvivalSample, method: str = "wke",
                   objective: str = "pseudo", c: Optional[float] = None,
                   theta_range: Optional[Tuple[float, float]] = None,
                   family: Optional[SelectionFamily] = None,
                   bandwidth: Optional[BandwidthRule] = None,
                   grid: Optional[EvaluationGrid] = None,
                   coarse_points: int = 61, tol: float = 1e-4) -> ThetaFit:
    """Maximize the chosen sieve objective over the selection exponent.

    A coarse scan over ``coarse_points`` equispaced candidates brackets the
    maximum, then golden-section refinement narrows it to ``tol``.  The
    returned profile contains every evaluated (theta, objective) pair in
    theta order, and ``theta_hat`` attains its maximum.  ``at_boundary``
    flags a maximizer within one tolerance of a range endpoint.
    """
    if method not in ("wke", "tbe"):
        raise DomainError(f"theta estimation supports 'wke' or 'tbe', not {method!r}")
    if objective not in ("pseudo", "penalized"):
        raise DomainError(f"objective must be 'pseudo' or 'penalized', not {objective!r}")
    family = family or SelectionFamily()
    bandwidth = bandwidth or BandwidthRule.dpi()
    grid = grid or EvaluationGrid.for_sample(sample)
    lo, hi = theta_range if theta_range is not None else family.theta_range
    if not (family.theta_range[0] <= lo < hi <= family.theta_range[1]):
        raise DomainError(f"theta range ({lo}, {hi}) not inside {family.theta_range}")

    if objective == "penalized":
        if c is None or c <= 0.0:
            raise DomainError("penalized objective needs a positive penalty constant c")
        alpha = c * sample.n ** (-0.5)
    else:
        c, alpha = 0.0, 0.0

    # the weighted kernel lives on the raw time axis, so its bandwidth does
    # not vary with theta and is resolved once up front
    fixed_h = resolve_bandwidth(sample, "wke", bandwidth) if method == "wke" else None

    evaluated = {}

    def score(theta: float) -> float:
        key = float(theta)
        if key not in evaluated:
            try:
                value = _objective_at(sample, key, method, family, bandwidth,
                                      grid, alpha=alpha, fixed_h=fixed_h)
            except EstimationError:
                value = -np.inf
            evaluated[key] = value
        return evaluated[key]

    thetas = np.linspace(lo, hi, coarse_points)
    values = np.array([score(t) for t in thetas])
    if not np.any(np.isfinite(values)):
        raise EstimationError("objective is non-finite over the entire theta range")
    best = int(np.argmax(values))

    a = thetas[max(best - 1, 0)]
    b = thetas[min(best + 1, coarse_points - 1)]
    _golden_refine(score, a, b, tol)

    finite = [(t, v) for t, v in evaluated.items() if np.isfinite(v)]
    theta_hat, value = max(finite, key=lambda tv: (tv[1], -tv[0]))
    profile = tuple(sorted(evaluated.items()))
    at_boundary = min(theta_hat - lo, hi - theta_hat) <= tol
    return ThetaFit(
        theta_hat=float(theta_hat),
        value=float(value),
        objective=f"{objective}_{method}",
        c=float(c),
        alpha=float(alpha),
        profile=profile,
        at_boundary=at_boundary,
    )


def _golden_refine(score, a: float, b: float, tol: float) -> None:
    """Golden-section refinement of a maximum inside [a, b] (results land in
    the caller's evaluation cache)."""
    if b - a <= tol:
        score(0.5 * (a + b))
        return
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = score(x1), score(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = score(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = score(x2)
