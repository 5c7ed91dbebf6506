"""Monte Carlo harness: Weibull truth, biased censored sampling, metrics.

The convergence experiment redraws a biased right-censored sample R
times per population size, fits each requested method, and summarizes
d_i-weighted L1/L2 distances and MSE between the fitted curve and the
truth at the replication's own observed times.  The band experiment
collects the fitted CDFs on one fixed grid and reports pointwise
2.5/97.5 percentile envelopes.

Reproducibility contract: replication (i, j) draws from
``default_rng([seed, i, j])``, so reports are bit-identical however the
replications are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .bandwidth import BandwidthRule
from .errors import (ConfigurationError, DomainError, EstimationError,
                     ExperimentError)
from .estimators import fit_density
from .km import km_cdf
from .model import (EvaluationGrid, SelectionFamily, SurvivalSample,
                    selection_weight, spacing_weights)
from .theta import estimate_theta

METHODS = ("tbe", "wke", "jones", "naive", "km")
CENSORING_MECHANISMS = ("calibrated_independent", "literal_random_fraction")
METRIC_CURVES = ("density", "cdf")
METRIC_NAMES = ("L1", "L2", "MSE")


@dataclass(frozen=True)
class TruthModel:
    """Weibull truth in the hazard-style parametrization.

    pdf(t) = scale * shape * t^(shape-1) * exp(-scale * t^shape), so the
    default (2, 1) has cdf 1 - exp(-t^2).
    """

    shape: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0.0 and np.isfinite(self.shape)):
            raise DomainError(f"shape must be positive, got {self.shape}")
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise DomainError(f"scale must be positive, got {self.scale}")

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0.0
        tp = t[pos]
        out[pos] = self.scale * self.shape * tp ** (self.shape - 1.0) \
            * np.exp(-self.scale * tp ** self.shape)
        return out if out.ndim else float(out)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0.0
        out[pos] = 1.0 - np.exp(-self.scale * t[pos] ** self.shape)
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise DomainError("quantile defined for p in (0, 1)")
        out = (-np.log1p(-p) / self.scale) ** (1.0 / self.shape)
        return out if out.ndim else float(out)


def weibull_eval(t, shape: float, scale: float):
    """(pdf, cdf) of the Weibull law at strictly positive times."""
    truth = TruthModel(shape=shape, scale=scale)
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("weibull_eval requires t > 0")
    return truth.pdf(t), truth.cdf(t)


class Metrics(NamedTuple):
    l1: float
    l2: float
    mse: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by the convergence and band experiments."""

    truth: TruthModel = field(default_factory=TruthModel)
    theta_true: float = 1.0
    censor_fraction: float = 0.30
    censoring: str = "calibrated_independent"
    sizes: Tuple[int, ...] = (50, 100, 200, 400)
    replications: int = 200
    methods: Tuple[str, ...] = ("tbe", "wke", "jones", "naive")
    seed: int = 0
    grid_points: int = 512
    grid_upper: Optional[float] = None
    metric_curve: str = "density"
    objective: str = "pseudo"
    c: float = 4.0
    bandwidth: BandwidthRule = field(default_factory=BandwidthRule.dpi)
    family: SelectionFamily = field(default_factory=SelectionFamily)
    workers: int = 1
    max_failure_rate: float = 0.05

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not 0.0 <= self.censor_fraction < 1.0:
            raise ConfigurationError("censor fraction must lie in [0, 1)")
        if self.censoring not in CENSORING_MECHANISMS:
            raise ConfigurationError(
                f"censoring must be one of {CENSORING_MECHANISMS}")
        if not self.sizes or any(int(n) != n or n < 1 for n in self.sizes):
            raise ConfigurationError("population sizes must be positive integers")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigurationError(f"unknown methods {bad}; choose from {METHODS}")
        if self.metric_curve not in METRIC_CURVES:
            raise ConfigurationError(f"metric_curve must be one of {METRIC_CURVES}")
        if self.objective not in ("pseudo", "penalized"):
            raise ConfigurationError("objective must be 'pseudo' or 'penalized'")
        if self.c <= 0.0:
            raise ConfigurationError("penalty constant c must be positive")
        if self.seed < 0 or int(self.seed) != self.seed:
            raise ConfigurationError("seed must be a non-negative integer")
        if self.grid_points < 16:
            raise ConfigurationError("grid needs at least 16 points")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if not self.family.contains(self.theta_true):
            raise ConfigurationError(
                f"theta_true {self.theta_true} outside family range "
                f"{self.family.theta_range}")
        if "km" in self.methods and self.metric_curve == "density":
            raise ConfigurationError(
                "km produces a step CDF; use metric_curve='cdf' with it")


@dataclass(frozen=True)
class MetricRow:
    N: int
    method: str
    metric: str
    mean: float
    sd: float


@dataclass(frozen=True)
class FailureCount:
    N: int
    method: str
    failed: int
    used: int


@dataclass(frozen=True, eq=False)
class BandCurve:
    method: str
    lower: np.ndarray
    upper: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        if np.any(self.lower > self.upper + 1e-12):
            raise ExperimentError("band lower envelope exceeds upper envelope")


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    kind: str
    seed: int
    metric_curve: str
    rows: Tuple[MetricRow, ...]
    failures: Tuple[FailureCount, ...]
    grid: Optional[np.ndarray] = None
    bands: Tuple[BandCurve, ...] = ()

    def metric(self, N: int, method: str, metric: str) -> Tuple[float, float]:
        for row in self.rows:
            if row.N == N and row.method == method and row.metric == metric:
                return row.mean, row.sd
        raise KeyError(f"no row for N={N} method={method} metric={metric}")

    def band(self, method: str) -> BandCurve:
        for curve in self.bands:
            if curve.method == method:
                return curve
        raise KeyError(f"no band for method {method}")


def draw_biased_sample(N: int, truth: TruthModel, family: SelectionFamily,
                       theta_true: float, seed) -> np.ndarray:
    """Inverse-CDF draws thinned by the selection probability.

    Draws N uniforms for the times, then N for the acceptance coin
    flips; the returned array keeps the accepted times in draw order.
    """
    if N < 1:
        raise DomainError("population size must be >= 1")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    times = truth.quantile(_open_uniform(rng, N))
    accept = rng.random(N) < selection_weight(times, theta_true, family)
    return times[accept]


def _open_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    # rng.random can return exactly 0.0, which quantile rejects
    return np.where(u > 0.0, u, 0.5)


def apply_censoring(times: np.ndarray, fraction: float, mechanism: str,
                    seed) -> SurvivalSample:
    """Right-censor the accepted times.

    calibrated_independent draws exponential censoring times whose rate
    solves mean_i(1 - exp(-r t_i)) = fraction, so the expected censored
    share matches the target under independence.  literal_random_fraction
    marks a random floor(fraction*n) subset censored and replaces each
    marked time with a uniform draw on (0, t_i).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("need a non-empty 1-d array of times to censor")
    if not 0.0 <= fraction < 1.0:
        raise DomainError("censor fraction must lie in [0, 1)")
    if mechanism not in CENSORING_MECHANISMS:
        raise DomainError(f"mechanism must be one of {CENSORING_MECHANISMS}")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    n = times.size
    if fraction == 0.0:
        return SurvivalSample(times=times, events=np.ones(n, dtype=bool))

    if mechanism == "calibrated_independent":
        def expected_censored(rate):
            return float(np.mean(-np.expm1(-rate * times))) - fraction
        hi = 1.0
        while expected_censored(hi) < 0.0 and hi < 1e12:
            hi *= 4.0
        try:
            rate = brentq(expected_censored, 1e-12, hi, xtol=1e-12, rtol=1e-12)
        except ValueError as exc:
            raise ConfigurationError(
                f"censoring calibration failed for fraction {fraction}: {exc}"
            ) from exc
        censor_times = rng.exponential(1.0 / rate, size=n)
        events = times <= censor_times
        observed = np.minimum(times, censor_times)
        return SurvivalSample(times=observed, events=events)

    k = int(np.floor(fraction * n))
    events = np.ones(n, dtype=bool)
    observed = times.copy()
    if k > 0:
        marked = rng.choice(n, size=k, replace=False)
        u = rng.random(k)
        u = np.where(u > 0.0, u, 0.5)
        observed[marked] = times[marked] * u
        events[marked] = False
    return SurvivalSample(times=observed, events=events)


def fit_metrics(points: np.ndarray, estimate: np.ndarray,
                truth_values: np.ndarray) -> Metrics:
    """d_i-weighted L1/L2 distances and MSE between two curves.

    The weights follow the half-gap rule: d_i = (t_{i+1} - t_{i-1})/2 in
    the interior, d_1 = t_2 - t_1 and d_n = t_n - t_{n-1} at the ends.
    """
    points = np.asarray(points, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    truth_values = np.asarray(truth_values, dtype=float)
    if not (points.shape == estimate.shape == truth_values.shape):
        raise DomainError("points, estimate, and truth must share one shape")
    if points.ndim != 1 or points.size < 2:
        raise DomainError("metrics need at least two evaluation points")
    d = spacing_weights(points)
    diff = estimate - truth_values
    return Metrics(
        l1=float(np.sum(np.abs(diff) * d)),
        l2=float(np.sum(diff ** 2 * d)),
        mse=float(np.mean(diff ** 2)),
    )


def _draw_replication(config: ExperimentConfig, size_index: int,
                      rep_index: int) -> SurvivalSample:
    rng = np.random.default_rng([config.seed, size_index, rep_index])
    accepted = draw_biased_sample(config.sizes[size_index], config.truth,
                                  config.family, config.theta_true, rng)
    if accepted.size < 3:
        raise EstimationError(
            f"only {accepted.size} accepted draws; too few to estimate")
    sample = apply_censoring(accepted, config.censor_fraction,
                             config.censoring, rng)
    if sample.n_uncensored < 2:
        raise EstimationError("fewer than two uncensored records")
    return sample


def _fit_method_curve(sample: SurvivalSample, method: str,
                      config: ExperimentConfig, grid: EvaluationGrid,
                      points: np.ndarray, curve: str) -> np.ndarray:
    """Evaluate one method's fitted density or CDF at ``points``."""
    if method == "km":
        return km_cdf(sample)(points)
    theta = None
    if method in ("wke", "tbe"):
        c = config.c if config.objective == "penalized" else None
        fit = estimate_theta(sample, method=method, objective=config.objective,
                             c=c, family=config.family,
                             bandwidth=config.bandwidth, grid=grid)
        theta = fit.theta_hat
    est = fit_density(sample, method, grid=grid, theta=theta,
                      family=config.family, bandwidth=config.bandwidth)
    if curve == "density":
        return est.density_at(points)
    return est.cdf_at(points)


def _convergence_rep(config: ExperimentConfig, size_index: int,
                     rep_index: int):
    """One replication: per-method metric triples or error strings."""
    outcomes: Dict[str, object] = {}
    try:
        sample = _draw_replication(config, size_index, rep_index)
    except (EstimationError, DomainError) as exc:
        return size_index, rep_index, {m: str(exc) for m in config.methods}
    points = np.sort(sample.times)
    grid = EvaluationGrid.for_sample(sample, n=config.grid_points)
    if config.metric_curve == "density":
        truth_values = config.truth.pdf(points)
    else:
        truth_values = config.truth.cdf(points)
    for method in config.methods:
        try:
            fitted = _fit_method_curve(sample, method, config, grid, points,
                                       config.metric_curve)
            outcomes[method] = fit_metrics(points, fitted, truth_values)
        except (EstimationError, DomainError) as exc:
            outcomes[method] = str(exc)
    return size_index, rep_index, outcomes


def _band_rep(config: ExperimentConfig, size_index: int, rep_index: int,
              grid: EvaluationGrid):
    outcomes: Dict[str, object] = {}
    try:
        sample = _draw_replication(config, size_index, rep_index)
    except (EstimationError, DomainError) as exc:
        return size_index, rep_index, {m: str(exc) for m in config.methods}
    for method in config.methods:
        try:
            outcomes[method] = _fit_method_curve(sample, method, config, grid,
                                                 grid.points, "cdf")
        except (EstimationError, DomainError) as exc:
            outcomes[method] = str(exc)
    return size_index, rep_index, outcomes


def _run_tasks(config: ExperimentConfig, tasks, worker, workers: int):
    """Run (size_index, rep_index) tasks, yielding results keyed for
    deterministic aggregation."""
    if workers <= 1:
        return [worker(config, i, j, *extra) for i, j, *extra in tasks]
    results = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, config, i, j, *extra)
                   for i, j, *extra in tasks]
        for fut in futures:
            results.append(fut.result())
    return results


def _check_failures(config: ExperimentConfig, counts) -> None:
    for (N, method), (failed, used) in counts.items():
        total = failed + used
        if total == 0 or failed / total > config.max_failure_rate:
            raise ExperimentError(
                f"{failed}/{total} replications failed for N={N} "
                f"method={method} (limit {config.max_failure_rate:.0%})")


def run_convergence_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Replicate draw-fit-measure over every (N, replication) cell."""
    tasks = [(i, j) for i in range(len(config.sizes))
             for j in range(config.replications)]
    raw = _run_tasks(config, tasks, _convergence_rep, config.workers)
    by_key = {(i, j): out for i, j, out in raw}

    rows = []
    failures = []
    for i, N in enumerate(config.sizes):
        for method in config.methods:
            triples = []
            failed = 0
            for j in range(config.replications):
                out = by_key[(i, j)][method]
                if isinstance(out, Metrics):
                    triples.append(out)
                else:
                    failed += 1
            used = len(triples)
            failures.append(FailureCount(N=N, method=method,
                                         failed=failed, used=used))
            if used:
                arr = np.array(triples)
                means = arr.mean(axis=0)
                sds = arr.std(axis=0, ddof=1) if used > 1 else np.zeros(3)
                for k, name in enumerate(METRIC_NAMES):
                    rows.append(MetricRow(N=N, method=method, metric=name,
                                          mean=float(means[k]),
                                          sd=float(sds[k])))
    report = ExperimentReport(kind="convergence", seed=config.seed,
                              metric_curve=config.metric_curve,
                              rows=tuple(rows), failures=tuple(failures))
    _check_failures(config, {(f.N, f.method): (f.failed, f.used)
                             for f in report.failures})
    return report


def band_grid(config: ExperimentConfig) -> EvaluationGrid:
    """The fixed evaluation grid shared by all band replications."""
    upper = config.grid_upper
    if upper is None:
        upper = config.family.support_cap
    return EvaluationGrid.regular(upper, n=config.grid_points)


def run_band_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Collect per-replication CDFs on a common grid; report percentile
    envelopes per method."""
    if len(config.sizes) != 1:
        raise ConfigurationError(
            "band experiment expects exactly one population size")
    grid = band_grid(config)
    tasks = [(0, j, grid) for j in range(config.replications)]
    raw = _run_tasks(config, tasks, _band_rep, config.workers)
    by_key = {(i, j): out for i, j, out in raw}

    N = config.sizes[0]
    bands = []
    failures = []
    for method in config.methods:
        curves = []
        failed = 0
        for j in range(config.replications):
            out = by_key[(0, j)][method]
            if isinstance(out, np.ndarray):
                curves.append(out)
            else:
                failed += 1
        failures.append(FailureCount(N=N, method=method, failed=failed,
                                     used=len(curves)))
        if curves:
            stack = np.vstack(curves)
            bands.append(BandCurve(
                method=method,
                lower=np.percentile(stack, 2.5, axis=0),
                upper=np.percentile(stack, 97.5, axis=0),
                mean=stack.mean(axis=0)))
    report = ExperimentReport(kind="band", seed=config.seed,
                              metric_curve="cdf", rows=(),
                              failures=tuple(failures), grid=grid.points,
                              bands=tuple(bands))
    _check_failures(config, {(f.N, f.method): (f.failed, f.used)
                             for f in report.failures})
    return report
