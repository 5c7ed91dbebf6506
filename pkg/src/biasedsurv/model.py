"""Core domain types: survival samples, selection functions, evaluation grids.

Everything here is immutable after construction and all operations are pure,
so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SurvivalSample:
    """Right-censored survival observations: (time, event) pairs.

    ``events[i]`` is True when the i-th time is an observed event
    (uncensored) and False when the record is right-censored, in which
    case the true survival time exceeds ``times[i]``.
    """

    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        events = np.asarray(self.events, dtype=bool)
        if times.ndim != 1 or events.ndim != 1:
            raise DomainError("times and events must be one-dimensional")
        if times.shape != events.shape:
            raise DomainError(
                f"times and events length mismatch: {times.shape[0]} vs {events.shape[0]}"
            )
        if times.size < 1:
            raise DomainError("sample must contain at least one record")
        if not np.all(np.isfinite(times)) or np.any(times <= 0.0):
            raise DomainError("all survival times must be positive and finite")
        times.setflags(write=False)
        events.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)

    @property
    def n(self) -> int:
        return int(self.times.size)

    @property
    def n_uncensored(self) -> int:
        return int(np.count_nonzero(self.events))

    def order(self) -> np.ndarray:
        """Indices sorting the records by time, original index breaking ties."""
        return np.argsort(self.times, kind="stable")

    def sorted(self) -> "SurvivalSample":
        """Time-ordered view of the sample (stable for tied times)."""
        idx = self.order()
        return SurvivalSample(self.times[idx], self.events[idx])

    def drop(self, index: int) -> "SurvivalSample":
        """Copy of the sample with record ``index`` removed."""
        if not 0 <= index < self.n:
            raise DomainError(f"record index {index} out of range for n={self.n}")
        keep = np.arange(self.n) != index
        return SurvivalSample(self.times[keep], self.events[keep])

    @classmethod
    def from_records(cls, records: Iterable[Tuple[float, bool]]) -> "SurvivalSample":
        pairs = list(records)
        times = np.array([t for t, _ in pairs], dtype=float)
        events = np.array([bool(e) for _, e in pairs], dtype=bool)
        return cls(times, events)


@dataclass(frozen=True)
class SelectionFamily:
    """Parametric selection function w(t, theta) with power-law shape.

    The observation probability is ``w(t, theta) = clamp((t / support_cap) **
    theta, epsilon, 1)``: it increases from the floor ``epsilon`` up to 1,
    which is reached at ``t = support_cap`` and held beyond it.  ``theta = 0``
    gives constant selection, i.e. standard (unbiased) survival sampling.
    """

    kind: str = "power"
    theta_range: Tuple[float, float] = (0.0, 2.0)
    epsilon: float = 1e-6
    support_cap: float = 3.0

    def __post_init__(self):
        if self.kind != "power":
            raise DomainError(f"unknown selection family kind: {self.kind!r}")
        lo, hi = self.theta_range
        if not (0.0 <= lo < hi):
            raise DomainError(f"invalid theta range: {self.theta_range}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        if self.support_cap <= 0.0:
            raise DomainError("support_cap must be positive")

    def contains(self, theta: float) -> bool:
        lo, hi = self.theta_range
        return lo <= theta <= hi

    def weight(self, t, theta: float):
        return selection_weight(t, theta, self)

    def cumulative(self, t, theta: float):
        return cumulative_selection(t, theta)

    def cumulative_inverse(self, y, theta: float):
        return inverse_cumulative_selection(y, theta)


def selection_weight(t, theta: float, family: SelectionFamily):
    """Selection probability w(t, theta) under the power family.

    Parameters
    ----------
    t : float or ndarray
        Survival time(s), strictly positive.
    theta : float
        Selection exponent; must lie inside ``family.theta_range``.
    family : SelectionFamily
        Supplies the support cap, floor and admissible theta range.

    Returns
    -------
    float or ndarray in [family.epsilon, 1].
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or not np.all(np.isfinite(t)):
        raise DomainError("selection_weight requires positive finite t")
    if not family.contains(theta):
        raise DomainError(
            f"theta={theta} outside admissible range {family.theta_range}"
        )
    w = np.clip((t / family.support_cap) ** theta, family.epsilon, 1.0)
    return w if w.ndim else float(w)


def cumulative_selection(t, theta: float):
    """Cumulative selection transform W(t, theta) = t**(theta+1) / (theta+1).

    Uses the unclamped analytic power form, which keeps W strictly
    increasing in t with a closed-form inverse.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or not np.all(np.isfinite(t)):
        raise DomainError("cumulative_selection requires positive finite t")
    if theta < 0.0:
        raise DomainError("cumulative_selection requires theta >= 0")
    y = t ** (theta + 1.0) / (theta + 1.0)
    return y if y.ndim else float(y)


def inverse_cumulative_selection(y, theta: float):
    """Inverse of :func:`cumulative_selection`: t = ((theta+1) * y)**(1/(theta+1))."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        raise DomainError("inverse_cumulative_selection requires positive finite y")
    if theta < 0.0:
        raise DomainError("inverse_cumulative_selection requires theta >= 0")
    t = ((theta + 1.0) * y) ** (1.0 / (theta + 1.0))
    return t if t.ndim else float(t)


@dataclass(frozen=True)
class EvaluationGrid:
    """Strictly increasing evaluation points with trapezoid-style weights.

    The weight of an interior point is half the distance between its
    neighbours, ``d_i = (t_{i+1} - t_{i-1}) / 2``; the first and last
    points take the full adjacent gap, ``d_1 = t_2 - t_1`` and
    ``d_n = t_n - t_{n-1}``.  Weighted sums against these d_i approximate
    integrals over the spanned range.
    """

    points: np.ndarray
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise DomainError("grid needs at least two points")
        if np.any(points <= 0.0) or not np.all(np.isfinite(points)):
            raise DomainError("grid points must be positive and finite")
        if np.any(np.diff(points) <= 0.0):
            raise DomainError("grid points must be strictly increasing")
        weights = spacing_weights(points)
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return int(self.points.size)

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum approximating the integral of ``values`` over the grid."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.points.shape:
            raise DomainError("values length does not match grid")
        return float(np.dot(values, self.weights))

    @classmethod
    def regular(cls, upper: float, n: int = 512) -> "EvaluationGrid":
        """Equispaced grid of ``n`` points from one grid step up to ``upper``."""
        if upper <= 0.0:
            raise DomainError("grid upper bound must be positive")
        if n < 2:
            raise DomainError("grid needs at least two points")
        step = upper / n
        return cls(step * np.arange(1, n + 1))

    @classmethod
    def for_sample(cls, sample: SurvivalSample, n: int = 512,
                   pad: float = 1.1) -> "EvaluationGrid":
        """Default estimation grid: equispaced up to pad * max(observed time)."""
        return cls.regular(pad * float(np.max(sample.times)), n)


def spacing_weights(points: Sequence[float]) -> np.ndarray:
    """Spacing weights d_i for an increasing point sequence (see EvaluationGrid)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or points.size < 2:
        raise DomainError("need at least two points for spacing weights")
    d = np.empty_like(points)
    d[0] = points[1] - points[0]
    d[-1] = points[-1] - points[-2]
    if points.size > 2:
        d[1:-1] = 0.5 * (points[2:] - points[:-2])
    return d
