"""Cramer-Rao bounds for DOA estimation with mixed one-bit / high-precision ADC arrays."""

__version__ = "0.1.0"

from .array_model import (  # noqa: E402
    ArrayConfig,
    DiscreteRandomThreshold,
    ExplicitThreshold,
    OptimalThreshold,
    SourceScene,
    mix,
    observe,
    quantize,
    steering_derivative,
    steering_vector,
    synthesize_scene,
)
from .arrangement import (  # noqa: E402
    Arrangement,
    brute_force_two_level,
    dispersion_score,
    greedy_multi_precision,
    optimal_two_level,
)
from .fisher_crb import (  # noqa: E402
    CrbResult,
    FimResult,
    UnidentifiableError,
    b_function,
    crb_asymptotic,
    crb_from_fim,
    crb_general,
    crb_optimal_hadamard,
    crb_single_target,
    fim_general,
    fim_optimal,
)
