"""Robust integrative sparse boosting for additive models across datasets."""

from .basis import BasisConfig, BasisExpansion, build_expansion
from .baselines import METHODS, fit_meta, fit_method, fit_pool, make_method
from .core import FitConfig, FitResult, fit, predict
from .data import Dataset
from .io import __version__, load_csv, screen_covariates, standardize
from .loss import LossSpec, km_weights
from .metrics import EvalReport
from .simulate import ScenarioSpec, simulate, truth
from .tuning import TuneSpec, cv_split, tune_lambda

__all__ = [
    "BasisConfig", "BasisExpansion", "build_expansion",
    "METHODS", "fit_meta", "fit_method", "fit_pool", "make_method",
    "FitConfig", "FitResult", "fit", "predict",
    "Dataset", "load_csv", "screen_covariates", "standardize",
    "LossSpec", "km_weights", "EvalReport",
    "ScenarioSpec", "simulate", "truth",
    "TuneSpec", "cv_split", "tune_lambda",
    "__version__",
]
