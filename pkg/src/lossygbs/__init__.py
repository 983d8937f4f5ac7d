"""Approximate output probabilities of lossy Gaussian boson samplers.

The estimator writes each pattern probability as a Gaussian average over a
shared per-mode field, corrects it with analytically integrated fluctuation
moments (orders 0, 2 and 4 in the transmitted amplitude), and averages the
resulting integrand by Monte Carlo.  An independent exact oracle based on
perfect-matching sums covers patterns with up to six photons and anchors
every accuracy test.
"""

__version__ = "0.1.0"

from .estimator import Estimate, cosine_similarity, estimate, estimate_distribution
from .model import ModelParams, derive_params, params_from_experiment
from .oracle import (
    MAX_EXACT_PHOTONS,
    enumerate_patterns,
    exact_probability,
    normalization_check,
)
from .precompute import PrecomputeTables, build_tables
from .traces import (
    LinearForms,
    OutputPattern,
    base_trace,
    insertion_trace,
    integrand,
    linear_forms,
)
from .unitary import (
    UnitaryMatrix,
    check_unitary,
    haar_random,
    load_unitary,
    save_unitary,
)

__all__ = [
    "__version__",
    "Estimate",
    "LinearForms",
    "MAX_EXACT_PHOTONS",
    "ModelParams",
    "OutputPattern",
    "PrecomputeTables",
    "UnitaryMatrix",
    "base_trace",
    "build_tables",
    "check_unitary",
    "cosine_similarity",
    "derive_params",
    "enumerate_patterns",
    "estimate",
    "estimate_distribution",
    "exact_probability",
    "haar_random",
    "insertion_trace",
    "integrand",
    "linear_forms",
    "load_unitary",
    "normalization_check",
    "params_from_experiment",
    "save_unitary",
]
