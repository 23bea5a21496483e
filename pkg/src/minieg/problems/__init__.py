"""Benchmark problem families exposing the monotone-mapping contract."""

from .affine import AffineMonotoneProblem, random_spd_affine, skew_rotation_problem
from .lasso import (
    CSInstanceMeta,
    CSProblem,
    build_cs_instance,
    load_instance,
    save_instance,
)
from .libsvm import LibsvmParseError, load_libsvm
from .logreg import LogRegProblem, synthetic_logreg
from .spectral import SpectralEstimate, estimate_lambda_max

__all__ = [
    "AffineMonotoneProblem",
    "random_spd_affine",
    "skew_rotation_problem",
    "CSInstanceMeta",
    "CSProblem",
    "build_cs_instance",
    "load_instance",
    "save_instance",
    "LibsvmParseError",
    "load_libsvm",
    "LogRegProblem",
    "synthetic_logreg",
    "SpectralEstimate",
    "estimate_lambda_max",
]
