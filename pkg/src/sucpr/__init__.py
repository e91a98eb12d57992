"""Estimation and testing for systems of cointegrating polynomial regressions.

The package provides:

* a data model for seemingly unrelated cointegrating polynomial
  regressions (:mod:`sucpr.model`),
* a banded inverse autocovariance engine built on the modified Cholesky
  block decomposition (:mod:`sucpr.biam`),
* long-run covariance estimation via Bartlett kernel or the banded
  inverse path (:mod:`sucpr.lrcov`),
* OLS, FM-SOLS, FM-SUR and FM-GLS estimators with second-order bias
  corrections (:mod:`sucpr.estimators`),
* Wald tests and multivariate subsampling KPSS-type cointegration tests
  (:mod:`sucpr.inference`),
* Monte Carlo data generators and an experiment runner
  (:mod:`sucpr.montecarlo`),
* a command line front-end (:mod:`sucpr.cli`).
"""

from sucpr.model import CprSpec, PanelData, RegressorSystem, ScalingMatrix
from sucpr.biam import BiamDecomposition, VarLadder, fit_var_ladder, select_banding
from sucpr.lrcov import FmWeights, LongRunCov, andrews_bandwidth, bartlett_lrcov, biam_lrcov, fm_weights
from sucpr.estimators import EstimationResult, fm_gls, fm_sols, fm_sur, ols, turning_point
from sucpr.inference import (
    KpssResult,
    WaldResult,
    cointegration_test,
    critical_value,
    limit_cdf,
    wald,
)
from sucpr.montecarlo import DgpConfig, ExperimentReport, run_experiment

__all__ = [
    "CprSpec",
    "PanelData",
    "RegressorSystem",
    "ScalingMatrix",
    "VarLadder",
    "BiamDecomposition",
    "fit_var_ladder",
    "select_banding",
    "LongRunCov",
    "FmWeights",
    "bartlett_lrcov",
    "andrews_bandwidth",
    "biam_lrcov",
    "fm_weights",
    "EstimationResult",
    "ols",
    "fm_sols",
    "fm_sur",
    "fm_gls",
    "turning_point",
    "WaldResult",
    "KpssResult",
    "wald",
    "cointegration_test",
    "limit_cdf",
    "critical_value",
    "DgpConfig",
    "ExperimentReport",
    "run_experiment",
]

__version__ = "0.1.0"
