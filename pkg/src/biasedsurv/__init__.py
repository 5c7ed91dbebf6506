"""Density and CDF estimation from biased, right-censored survival data.

A survival time t enters the sample only with probability w(t, theta)
(a power-law selection function), and sampled records may additionally
be right-censored.  This package estimates theta, the true density f,
and the CDF F from one such sample via kernel estimators corrected with
Kaplan-Meier jump weights, plus a Monte Carlo harness for convergence
and confidence-band experiments.
"""

__version__ = "0.1.0"

from .bandwidth import BandwidthRule, select_bandwidth
from .errors import (BiasedSurvError, ConfigurationError, DataFormatError,
                     DomainError, EstimationError, ExperimentError)
from .estimators import (DensityEstimate, fit_density, jones,
                         marron_padgett_kde, naive_kde, tbe, wke)
from .km import StepCdf, km_cdf
from .model import (EvaluationGrid, SelectionFamily, SurvivalSample,
                    cumulative_selection, inverse_cumulative_selection,
                    selection_weight, spacing_weights)
from .simulation import (ExperimentConfig, ExperimentReport, TruthModel,
                         apply_censoring, draw_biased_sample, fit_metrics,
                         run_band_experiment, run_convergence_experiment,
                         weibull_eval)
from .theta import ThetaFit, estimate_theta, penalized_loglik, pseudo_loglik
from .tuning import CvReport, cv1, cv2, cv3, jackknife_quadratic, select_c

__all__ = [
    "__version__",
    "BandwidthRule", "select_bandwidth",
    "BiasedSurvError", "ConfigurationError", "DataFormatError", "DomainError",
    "EstimationError", "ExperimentError",
    "DensityEstimate", "fit_density", "jones", "marron_padgett_kde",
    "naive_kde", "tbe", "wke",
    "StepCdf", "km_cdf",
    "EvaluationGrid", "SelectionFamily", "SurvivalSample",
    "cumulative_selection", "inverse_cumulative_selection",
    "selection_weight", "spacing_weights",
    "ExperimentConfig", "ExperimentReport", "TruthModel", "apply_censoring",
    "draw_biased_sample", "fit_metrics", "run_band_experiment",
    "run_convergence_experiment", "weibull_eval",
    "ThetaFit", "estimate_theta", "penalized_loglik", "pseudo_loglik",
    "CvReport", "cv1", "cv2", "cv3", "jackknife_quadratic", "select_c",
]
