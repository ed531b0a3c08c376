"""t-SNE with kernelized affinities.

``plain`` is classic t-SNE, ``kernel`` measures data-space distances in a
kernel feature space, and ``e2e`` does so in both the data and the
embedding space.
"""

__version__ = "0.1.0"

from .dataio import LabeledDataset, generate_blobs, load_csv, load_idx
from .embedding import OptimizerConfig, ReductionResult, Variant, run_reduction
from .errors import (
    DegenerateInputError,
    DimensionError,
    DivergenceError,
    FormatError,
    InputError,
    KernelTSNEError,
    ParameterError,
    UnsupportedKernelError,
)
from .kernels import KernelKind, KernelSpec
from .metrics import TrustworthinessReport, trustworthiness, trustworthiness_curve

__all__ = [
    "LabeledDataset",
    "generate_blobs",
    "load_csv",
    "load_idx",
    "OptimizerConfig",
    "ReductionResult",
    "Variant",
    "run_reduction",
    "KernelKind",
    "KernelSpec",
    "TrustworthinessReport",
    "trustworthiness",
    "trustworthiness_curve",
    "KernelTSNEError",
    "ParameterError",
    "DimensionError",
    "InputError",
    "DegenerateInputError",
    "FormatError",
    "UnsupportedKernelError",
    "DivergenceError",
]
