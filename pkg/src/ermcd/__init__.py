"""Stochastic coordinate descent solvers for sparse regularized ERM.

The library is organized around a dual-view sparse matrix, a catalogue of
smooth losses and simple regularizers, pluggable block-sampling rules with
their certified step-size parameters, and the solver families built on top
of them (dual coordinate ascent, dual-free primal updates, feature-space
descent, and generic proximal block descent), plus diagnostics that compute
theoretical rates and verify them empirically.
"""

from ermcd.sparse_data import (
    Dataset,
    SparseMatrix,
    SyntheticSpec,
    col_stats,
    generate_synthetic,
    normalize_by_avg_col_norm,
    parse_libsvm,
    row_stats,
    serialize_libsvm,
)
from ermcd.losses import (
    Loss,
    Problem,
    Regularizer,
    dual_value,
    duality_gap,
    primal_value,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "SparseMatrix",
    "SyntheticSpec",
    "Loss",
    "Problem",
    "Regularizer",
    "col_stats",
    "row_stats",
    "parse_libsvm",
    "serialize_libsvm",
    "normalize_by_avg_col_norm",
    "generate_synthetic",
    "primal_value",
    "dual_value",
    "duality_gap",
    "__version__",
]
