"""Jackknife cross-validation criteria for the penalty constant c.

Each criterion scores a candidate c from leave-one-out refits of the
penalized exponent estimate: CV1 measures the jackknife variability of
the exponent itself, CV2 the average held-out density, and CV3 the
jackknife variability of the normalizer kappa_hat scaled by its
binomial variance.  ``select_c`` scans a log-spaced candidate grid and
picks the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .bandwidth import BandwidthRule
from .errors import DomainError, EstimationError
from .estimators import DensityEstimate
from .model import EvaluationGrid, SelectionFamily, SurvivalSample
from .theta import ThetaFit, _fit_at_theta, estimate_theta

CRITERIA = ("cv1", "cv2", "cv3")

# fast-mode leave-one-out refits rescan only this radius around the
# full-sample exponent estimate
_WARM_RADIUS = 0.25
_WARM_POINTS = 11


@dataclass(frozen=True)
class CandidateDiagnostics:
    """Per-candidate bookkeeping retained by select_c."""

    c: float
    score: float
    theta_hat: float
    kappa_hat: float
    loo_theta_mean: float
    loo_kappa_mean: float
    error: Optional[str] = None


@dataclass(frozen=True)
class CvReport:
    """Outcome of a penalty-constant search.

    ``direction`` records whether the criterion was minimized or
    maximized; cv2 is maximized by default (held-out likelihood
    convention) and minimized only on request.
    """

    criterion: str
    method: str
    direction: str
    candidates: Tuple[Tuple[float, float], ...]
    diagnostics: Tuple[CandidateDiagnostics, ...]
    c: float


def jackknife_quadratic(loo_values: Sequence[float], full_value: float) -> float:
    """((n-1)/n) * sum((v_i - vbar)^2) + (n-1)^2 * (full - vbar)^2.

    The quadratic form shared by CV1 and CV3, applied to leave-one-out
    pseudo-value sequences.
    """
    values = np.asarray(loo_values, dtype=float)
    n = values.size
    if n < 2:
        raise DomainError("jackknife form needs at least two leave-one-out values")
    vbar = float(np.mean(values))
    spread = float(np.sum((values - vbar) ** 2))
    return (n - 1) / n * spread + (n - 1) ** 2 * (full_value - vbar) ** 2


@dataclass(frozen=True)
class _LooRecord:
    theta: float
    kappa: float
    held_out_density: float


def _penalized_fit(sample, c, method, family, bandwidth, grid,
                   theta_range=None, coarse_points=61) -> ThetaFit:
    return estimate_theta(sample, method=method, objective="penalized", c=c,
                          theta_range=theta_range, family=family,
                          bandwidth=bandwidth, grid=grid,
                          coarse_points=coarse_points)


def _loo_records(sample: SurvivalSample, c: float, method: str,
                 family: SelectionFamily, bandwidth: BandwidthRule,
                 grid: EvaluationGrid, full_fit: ThetaFit,
                 fast: bool) -> list:
    lo, hi = family.theta_range
    if fast:
        theta_range = (max(lo, full_fit.theta_hat - _WARM_RADIUS),
                       min(hi, full_fit.theta_hat + _WARM_RADIUS))
        coarse = _WARM_POINTS
    else:
        theta_range, coarse = None, 61
    records = []
    for i in range(sample.n):
        sub = sample.drop(i)
        try:
            fit = _penalized_fit(sub, c, method, family, bandwidth, grid,
                                 theta_range=theta_range, coarse_points=coarse)
            est: DensityEstimate = _fit_at_theta(sub, fit.theta_hat, method,
                                                 family, bandwidth, grid)
            held = float(est.density_at(np.array([sample.times[i]]))[0])
        except (EstimationError, DomainError) as exc:
            raise EstimationError(
                f"leave-one-out fit failed at index {i}: {exc}") from exc
        records.append(_LooRecord(fit.theta_hat, est.kappa_hat, held))
    return records


def _prepare(sample, family, bandwidth, grid):
    if sample.n < 2:
        raise DomainError("cross-validation needs at least two records")
    family = family or SelectionFamily()
    bandwidth = bandwidth or BandwidthRule.dpi()
    grid = grid or EvaluationGrid.for_sample(sample)
    return family, bandwidth, grid


def _full_state(sample, c, method, family, bandwidth, grid):
    fit = _penalized_fit(sample, c, method, family, bandwidth, grid)
    est = _fit_at_theta(sample, fit.theta_hat, method, family, bandwidth, grid)
    return fit, est


def cv1(sample: SurvivalSample, c: float, method: str = "wke",
        family: Optional[SelectionFamily] = None,
        bandwidth: Optional[BandwidthRule] = None,
        grid: Optional[EvaluationGrid] = None, fast: bool = False) -> float:
    """Jackknife variability of the penalized exponent estimate at c."""
    family, bandwidth, grid = _prepare(sample, family, bandwidth, grid)
    fit, _ = _full_state(sample, c, method, family, bandwidth, grid)
    records = _loo_records(sample, c, method, family, bandwidth, grid, fit, fast)
    return jackknife_quadratic([r.theta for r in records], fit.theta_hat)


def cv2(sample: SurvivalSample, c: float, method: str = "wke",
        family: Optional[SelectionFamily] = None,
        bandwidth: Optional[BandwidthRule] = None,
        grid: Optional[EvaluationGrid] = None, fast: bool = False) -> float:
    """Average leave-one-out density at the held-out points."""
    family, bandwidth, grid = _prepare(sample, family, bandwidth, grid)
    fit, _ = _full_state(sample, c, method, family, bandwidth, grid)
    records = _loo_records(sample, c, method, family, bandwidth, grid, fit, fast)
    return float(np.mean([r.held_out_density for r in records]))


def cv3(sample: SurvivalSample, c: float, method: str = "wke",
        family: Optional[SelectionFamily] = None,
        bandwidth: Optional[BandwidthRule] = None,
        grid: Optional[EvaluationGrid] = None, fast: bool = False) -> float:
    """Jackknife variability of kappa_hat scaled by 1/(kappa(1-kappa))."""
    family, bandwidth, grid = _prepare(sample, family, bandwidth, grid)
    fit, est = _full_state(sample, c, method, family, bandwidth, grid)
    kappa = est.kappa_hat
    if not 0.0 < kappa < 1.0:
        raise EstimationError(
            f"cv3 undefined: kappa_hat = {kappa:.6g} outside (0, 1)")
    records = _loo_records(sample, c, method, family, bandwidth, grid, fit, fast)
    quad = jackknife_quadratic([r.kappa for r in records], kappa)
    return quad / (kappa * (1.0 - kappa))


def select_c(sample: SurvivalSample, criterion: str, method: str = "wke",
             c_range: Tuple[float, float] = (1.0, 20.0),
             num_candidates: int = 20,
             family: Optional[SelectionFamily] = None,
             bandwidth: Optional[BandwidthRule] = None,
             grid: Optional[EvaluationGrid] = None,
             minimize_cv2: bool = False, fast: bool = False) -> CvReport:
    """Scan log-spaced penalty constants and pick the criterion optimizer.

    cv1 and cv3 are minimized; cv2 is maximized unless ``minimize_cv2``
    is set.  Ties break toward the smaller c.  Candidates whose
    evaluation fails are recorded with a NaN score; if every candidate
    fails an estimation error is raised.
    """
    if criterion not in CRITERIA:
        raise DomainError(f"criterion must be one of {CRITERIA}, not {criterion!r}")
    lo, hi = c_range
    if not (0.0 < lo <= hi) or not np.isfinite(hi):
        raise DomainError(f"c range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
    if num_candidates < 1:
        raise DomainError("need at least one candidate c")
    family, bandwidth, grid = _prepare(sample, family, bandwidth, grid)
    candidates = np.geomspace(lo, hi, num_candidates)
    maximize = criterion == "cv2" and not minimize_cv2

    scored = []
    diagnostics = []
    for c in candidates:
        c = float(c)
        try:
            fit, est = _full_state(sample, c, method, family, bandwidth, grid)
            if criterion == "cv3" and not 0.0 < est.kappa_hat < 1.0:
                raise EstimationError(
                    f"kappa_hat = {est.kappa_hat:.6g} outside (0, 1)")
            records = _loo_records(sample, c, method, family, bandwidth, grid,
                                   fit, fast)
            if criterion == "cv1":
                score = jackknife_quadratic([r.theta for r in records],
                                            fit.theta_hat)
            elif criterion == "cv2":
                score = float(np.mean([r.held_out_density for r in records]))
            else:
                quad = jackknife_quadratic([r.kappa for r in records],
                                           est.kappa_hat)
                score = quad / (est.kappa_hat * (1.0 - est.kappa_hat))
            diagnostics.append(CandidateDiagnostics(
                c=c, score=score, theta_hat=fit.theta_hat,
                kappa_hat=est.kappa_hat,
                loo_theta_mean=float(np.mean([r.theta for r in records])),
                loo_kappa_mean=float(np.mean([r.kappa for r in records]))))
            scored.append((c, score))
        except (EstimationError, DomainError) as exc:
            diagnostics.append(CandidateDiagnostics(
                c=c, score=float("nan"), theta_hat=float("nan"),
                kappa_hat=float("nan"), loo_theta_mean=float("nan"),
                loo_kappa_mean=float("nan"), error=str(exc)))
            scored.append((c, float("nan")))

    finite = [(c, s) for c, s in scored if np.isfinite(s)]
    if not finite:
        details = "; ".join(f"c={d.c:.4g}: {d.error}" for d in diagnostics)
        raise EstimationError(f"every candidate c failed ({details})")
    best_c, best_s = finite[0]
    for c, s in finite[1:]:
        if (s > best_s) if maximize else (s < best_s):
            best_c, best_s = c, s
    return CvReport(
        criterion=criterion,
        method=method,
        direction="maximize" if maximize else "minimize",
        candidates=tuple(scored),
        diagnostics=tuple(diagnostics),
        c=best_c,
    )
