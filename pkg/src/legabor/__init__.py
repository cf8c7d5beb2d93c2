"""Deterministic compressive sensing with the Gabor system of Legendre symbols."""

__version__ = "0.1.0"

from .zpz import FieldContext, build_context, gauss_sum, is_prime, legendre_symbol  # noqa: E402
from .gabor import NormConvention, TimeFreqIndex, coherence, gabor_vector, gram_submatrix  # noqa: E402
from .flat_rip import OmegaSet, flat_rip_delta, rip_delta_sampled, rip_order_from_flat  # noqa: E402
from .theorem_sums import (  # noqa: E402
    ConsecutiveBlock,
    ThetaParams,
    scaling_fit,
    sine_sum_exact,
    sum_split_decompose,
)
from .recovery import SparseSignal, omp, recovery_experiment  # noqa: E402

__all__ = [
    "__version__",
    "FieldContext", "build_context", "gauss_sum", "is_prime", "legendre_symbol",
    "NormConvention", "TimeFreqIndex", "coherence", "gabor_vector", "gram_submatrix",
    "OmegaSet", "flat_rip_delta", "rip_delta_sampled", "rip_order_from_flat",
    "ConsecutiveBlock", "ThetaParams", "scaling_fit", "sine_sum_exact", "sum_split_decompose",
    "SparseSignal", "omp", "recovery_experiment",
]
