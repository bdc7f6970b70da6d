"""Tensor-factorized linear operators and compressed gated recurrent networks."""

from .backend import get_backend
from .factorized import (
    CPFactors,
    DenseMatrix,
    FactorizedLinear,
    TensorizedShape,
    TTCores,
    TuckerFactors,
    init_factorized,
    init_sigma,
)

__version__ = "0.1.0"

__all__ = [
    "CPFactors",
    "DenseMatrix",
    "FactorizedLinear",
    "TTCores",
    "TensorizedShape",
    "TuckerFactors",
    "get_backend",
    "init_factorized",
    "init_sigma",
    "__version__",
]
