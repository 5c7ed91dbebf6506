"""File formats: dataset loading, config parsing, and report emission.

All numeric output is serialized with 17 significant decimal digits so
that re-reading a file reproduces the original float64 values bit for
bit.  CSV schemas are fixed: grids are ``t,f_hat,F_hat,S_hat``, theta
profiles are ``theta,objective``, experiment summaries are
``N,method,metric,mean,sd``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .bandwidth import BandwidthRule
from .errors import ConfigurationError, DataFormatError, DomainError
from .estimators import DensityEstimate
from .model import SelectionFamily, SurvivalSample
from .simulation import (CENSORING_MECHANISMS, ExperimentConfig,
                         ExperimentReport, TruthModel, apply_censoring,
                         draw_biased_sample)
from .theta import ThetaFit

FLOAT_FORMAT = ".17g"


def fmt(value) -> str:
    """Decimal form of a float that round-trips float64 exactly."""
    return format(float(value), FLOAT_FORMAT)


def dumps_json(obj, _level: int = 0) -> str:
    """JSON text with floats rendered via :func:`fmt` (17 significant digits).

    The standard encoder re-derives float text from repr; emitting our own
    keeps the serialization contract in one place.  Non-finite floats map
    to null.
    """
    pad = "  " * _level
    inner = "  " * (_level + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if np.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(inner + dumps_json(v, _level + 1) for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {dumps_json(v, _level + 1)}"
            for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# datasets

@dataclass(frozen=True)
class Dataset:
    """Per-group survival samples in file order."""

    groups: Tuple[Tuple[str, SurvivalSample], ...]

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.groups)

    def get(self, label: str) -> SurvivalSample:
        for name, sample in self.groups:
            if name == label:
                return sample
        raise KeyError(f"no group {label!r}; available: {list(self.labels)}")


def load_dataset(path) -> Dataset:
    """Read a ``time,status[,group]`` CSV into per-group samples.

    Every malformed row is reported with its line number in one error;
    each group must contain at least one event (status = 1).
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"cannot read dataset {path}: {exc}") from exc
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataFormatError(f"dataset {path} is empty")
    header = [cell.strip().lower() for cell in rows[0]]
    try:
        time_col = header.index("time")
        status_col = header.index("status")
    except ValueError:
        raise DataFormatError(
            f"dataset {path} must have 'time' and 'status' columns, "
            f"found {header}") from None
    group_col = header.index("group") if "group" in header else None

    problems = []
    records: Dict[str, list] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            problems.append(f"row {lineno}: expected {len(header)} fields, "
                            f"got {len(row)}")
            continue
        raw_time = row[time_col].strip()
        raw_status = row[status_col].strip()
        try:
            time = float(raw_time)
        except ValueError:
            problems.append(f"row {lineno}: time {raw_time!r} is not a number")
            continue
        if not np.isfinite(time) or time <= 0.0:
            problems.append(f"row {lineno}: time must be positive, got {raw_time}")
            continue
        if raw_status not in ("0", "1"):
            problems.append(f"row {lineno}: status must be 0 or 1, "
                            f"got {raw_status!r}")
            continue
        label = row[group_col].strip() if group_col is not None else "all"
        if not label:
            problems.append(f"row {lineno}: empty group label")
            continue
        records.setdefault(label, []).append((time, raw_status == "1"))
    if problems:
        raise DataFormatError(
            f"dataset {path} rejected: " + "; ".join(problems))
    if not records:
        raise DataFormatError(f"dataset {path} has a header but no data rows")
    for label, recs in records.items():
        if not any(event for _, event in recs):
            problems.append(f"group {label!r} has no uncensored record")
    if problems:
        raise DataFormatError(
            f"dataset {path} rejected: " + "; ".join(problems))
    groups = tuple((label, SurvivalSample.from_records(recs))
                   for label, recs in records.items())
    return Dataset(groups)


def write_dataset(path, dataset: Dataset) -> None:
    lines = ["time,status,group"]
    for label, sample in dataset.groups:
        for t, e in zip(sample.times, sample.events):
            lines.append(f"{fmt(t)},{1 if e else 0},{label}")
    _write_text(path, "\n".join(lines) + "\n")


def generate_synthetic_dataset(path=None, seed: int = 7,
                               labels=("ALL", "AML-low", "AML-high"),
                               sizes=(38, 54, 45),
                               thetas=(0.45, 0.89, 0.89),
                               censor_fraction: float = 0.30,
                               truth: Optional[TruthModel] = None,
                               family: Optional[SelectionFamily] = None,
                               mechanism: str = "calibrated_independent") -> Dataset:
    """Deterministic multi-group fixture with the classic 38/54/45 sizes.

    Each group draws biased Weibull survival times with its own selection
    exponent until the target group size is reached, then right-censors
    them.  When ``path`` is given the dataset is also written as CSV.
    """
    if not (len(labels) == len(sizes) == len(thetas)):
        raise ConfigurationError("labels, sizes, and thetas must align")
    if mechanism not in CENSORING_MECHANISMS:
        raise ConfigurationError(
            f"mechanism must be one of {CENSORING_MECHANISMS}")
    truth = truth or TruthModel()
    family = family or SelectionFamily()
    groups = []
    for gi, (label, size, theta) in enumerate(zip(labels, sizes, thetas)):
        if size < 2:
            raise ConfigurationError(f"group {label!r} size must be >= 2")
        rng = np.random.default_rng([seed, gi])
        accepted = np.empty(0)
        while accepted.size < size:
            batch = draw_biased_sample(max(4 * size, 64), truth, family,
                                       theta, rng)
            accepted = np.concatenate([accepted, batch])
        sample = apply_censoring(accepted[:size], censor_fraction,
                                 mechanism, rng)
        groups.append((label, sample))
    dataset = Dataset(tuple(groups))
    if path is not None:
        write_dataset(path, dataset)
    return dataset


# ---------------------------------------------------------------------------
# experiment configuration files

_CONFIG_KINDS = ("convergence", "band")


def load_experiment_config(path) -> Tuple[str, ExperimentConfig]:
    """Read a JSON experiment configuration.

    Top level: ``kind`` ("convergence" or "band") plus ExperimentConfig
    fields; ``truth`` and ``family`` are nested objects, ``bandwidth`` is
    the usual rule string.  Errors name the offending field.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a JSON object")

    doc = dict(doc)
    kind = doc.pop("kind", "convergence")
    if kind not in _CONFIG_KINDS:
        raise ConfigurationError(
            f"kind: must be one of {_CONFIG_KINDS}, got {kind!r}")

    kwargs = {}
    if "truth" in doc:
        sub = doc.pop("truth")
        if not isinstance(sub, dict):
            raise ConfigurationError("truth: must be an object")
        try:
            kwargs["truth"] = TruthModel(**sub)
        except (TypeError, DomainError) as exc:
            raise ConfigurationError(f"truth: {exc}") from exc
    if "family" in doc:
        sub = doc.pop("family")
        if not isinstance(sub, dict):
            raise ConfigurationError("family: must be an object")
        if "theta_range" in sub:
            sub = dict(sub)
            sub["theta_range"] = tuple(sub["theta_range"])
        try:
            kwargs["family"] = SelectionFamily(**sub)
        except (TypeError, DomainError) as exc:
            raise ConfigurationError(f"family: {exc}") from exc
    if "bandwidth" in doc:
        try:
            kwargs["bandwidth"] = BandwidthRule.parse(doc.pop("bandwidth"))
        except (TypeError, DomainError) as exc:
            raise ConfigurationError(f"bandwidth: {exc}") from exc

    casts = {
        "theta_true": float, "censor_fraction": float, "censoring": str,
        "sizes": lambda v: tuple(int(x) for x in v),
        "replications": int,
        "methods": lambda v: tuple(str(x) for x in v),
        "seed": int, "grid_points": int,
        "grid_upper": lambda v: None if v is None else float(v),
        "metric_curve": str, "objective": str, "c": float,
        "workers": int, "max_failure_rate": float,
    }
    for key, value in doc.items():
        if key not in casts:
            raise ConfigurationError(f"unknown config field {key!r}")
        try:
            kwargs[key] = casts[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{key}: {exc}") from exc
    return kind, ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# writers

def grid_payload(est: DensityEstimate) -> dict:
    return {
        "t": est.grid.points,
        "f_hat": est.f_hat,
        "F_hat": est.F_hat,
        "S_hat": est.S_hat,
    }


def write_grid_csv(path, est: DensityEstimate) -> None:
    lines = ["t,f_hat,F_hat,S_hat"]
    for t, f, F, S in zip(est.grid.points, est.f_hat, est.F_hat, est.S_hat):
        lines.append(f"{fmt(t)},{fmt(f)},{fmt(F)},{fmt(S)}")
    _write_text(path, "\n".join(lines) + "\n")


def read_grid_csv(path) -> Dict[str, np.ndarray]:
    """Read back a grid CSV into float64 columns (bit-exact round trip)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if header != ["t", "f_hat", "F_hat", "S_hat"]:
        raise DataFormatError(f"unexpected grid header {header}")
    data = np.array([[float(cell) for cell in row] for row in rows[1:]])
    return {name: data[:, k] for k, name in enumerate(header)}


def write_profile_csv(path, fit: ThetaFit) -> None:
    lines = ["theta,objective"]
    for theta, value in fit.profile:
        lines.append(f"{fmt(theta)},{fmt(value)}")
    _write_text(path, "\n".join(lines) + "\n")


def profile_payload(fit: ThetaFit) -> dict:
    return {
        "theta_hat": fit.theta_hat,
        "value": fit.value,
        "objective": fit.objective,
        "c": fit.c,
        "alpha": fit.alpha,
        "at_boundary": fit.at_boundary,
        "profile": [{"theta": t, "objective": v} for t, v in fit.profile],
    }


def write_report_csv(path, report: ExperimentReport) -> None:
    lines = ["N,method,metric,mean,sd"]
    for row in report.rows:
        lines.append(f"{row.N},{row.method},{row.metric},"
                     f"{fmt(row.mean)},{fmt(row.sd)}")
    _write_text(path, "\n".join(lines) + "\n")


def report_payload(report: ExperimentReport) -> dict:
    doc = {
        "kind": report.kind,
        "seed": report.seed,
        "metric_curve": report.metric_curve,
        "rows": [{"N": r.N, "method": r.method, "metric": r.metric,
                  "mean": r.mean, "sd": r.sd} for r in report.rows],
        "failures": [{"N": f.N, "method": f.method, "failed": f.failed,
                      "used": f.used} for f in report.failures],
    }
    if report.grid is not None:
        doc["bands"] = {
            "t": report.grid,
            "curves": {
                band.method: {"lower": band.lower, "upper": band.upper,
                              "mean": band.mean}
                for band in report.bands
            },
        }
    return doc


def write_json_document(path, payload: dict, meta: Optional[dict] = None) -> None:
    doc = {"meta": meta or {}}
    doc.update(payload)
    _write_text(path, dumps_json(doc) + "\n")
