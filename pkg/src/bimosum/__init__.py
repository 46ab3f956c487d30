"""Joint change point detection in expectation and variance via bivariate moving sums."""

__version__ = "0.1.0"

from .centering import centering_field, empirical_vs_centering, tilde_params
from .detect import detect_multi, detect_single, merge_candidates
from .effects import effect_from_detection, theoretical_center
from .errors import (
    CacheIntegrityError,
    ConfigurationError,
    DataFormatError,
    DegenerateEstimateError,
    DegenerateWindowError,
    DomainError,
    MosumError,
    WindowRangeError,
)
from .htest import RejectionRule, Variant, mosum_test
from .limit import QuantileCache, QuantileRequest, cache_get_or_compute, quantile
from .moments import compute_moments, rho_hat, window_indices
from .mosum import d_euclid, d_mahalanobis, d_max, distance, gamma_matrices, mosum_field
from .series import ChangeConfig, Exponential, Gamma, Normal, Series, generate, read_csv, segment_population

__all__ = [
    "CacheIntegrityError",
    "ChangeConfig",
    "ConfigurationError",
    "DataFormatError",
    "DegenerateEstimateError",
    "DegenerateWindowError",
    "DomainError",
    "Exponential",
    "Gamma",
    "MosumError",
    "Normal",
    "QuantileCache",
    "QuantileRequest",
    "RejectionRule",
    "Series",
    "Variant",
    "WindowRangeError",
    "cache_get_or_compute",
    "centering_field",
    "compute_moments",
    "d_euclid",
    "d_mahalanobis",
    "d_max",
    "detect_multi",
    "detect_single",
    "distance",
    "effect_from_detection",
    "empirical_vs_centering",
    "gamma_matrices",
    "generate",
    "merge_candidates",
    "mosum_field",
    "mosum_test",
    "quantile",
    "read_csv",
    "rho_hat",
    "segment_population",
    "theoretical_center",
    "tilde_params",
    "window_indices",
]
