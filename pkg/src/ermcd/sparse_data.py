"""Dual-view sparse data matrices, LIBSVM I/O, and synthetic generators.

The data matrix stores examples as columns (d features x n examples) and
keeps both a column-major and a row-major copy of the nonzeros, so that
example-indexed solvers and feature-indexed solvers both get O(1) access
to their slices.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO, Union

import numpy as np
from scipy import sparse

from ermcd.rng import stream


class LibsvmFormatError(ValueError):
    """Raised on malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class SparseMatrix:
    """Sparse d x n matrix with simultaneous column and row access.

    Both views encode the identical nonzero set; indices are strictly
    increasing within each column/row and no explicit zeros are stored.
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, csc: sparse.csc_matrix):
        csc = sparse.csc_matrix(csc)
        csc.sum_duplicates()
        csc.eliminate_zeros()
        csc.sort_indices()
        self._csc = csc
        self._csr = csc.tocsr()
        self._csr.sort_indices()
        self.d, self.n = csc.shape
        if self._csc.nnz != self._csr.nnz:
            raise AssertionError("column and row views disagree on nnz")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_coo(cls, d: int, n: int, rows, cols, vals) -> "SparseMatrix":
        m = sparse.coo_matrix(
            (np.asarray(vals, dtype=float), (np.asarray(rows), np.asarray(cols))),
            shape=(d, n),
        )
        return cls(m.tocsc())

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrix":
        return cls(sparse.csc_matrix(np.asarray(arr, dtype=float)))

    # -- access -------------------------------------------------------

    @property
    def nnz(self) -> int:
        return self._csc.nnz

    def col(self, j: int):
        """(row indices, values) of column j; views into shared storage."""
        a, b = self._csc.indptr[j], self._csc.indptr[j + 1]
        return self._csc.indices[a:b], self._csc.data[a:b]

    def row(self, i: int):
        """(column indices, values) of row i."""
        a, b = self._csr.indptr[i], self._csr.indptr[i + 1]
        return self._csr.indices[a:b], self._csr.data[a:b]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """X @ x for x of length n."""
        return self._csc @ x

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        """X.T @ w for w of length d."""
        return self._csc.T @ w

    def to_dense(self) -> np.ndarray:
        return self._csc.toarray()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._csc.T.tocsc())

    def scale(self, factor: float) -> "SparseMatrix":
        return SparseMatrix(self._csc * float(factor))

    def scale_columns(self, factors: np.ndarray) -> "SparseMatrix":
        diag = sparse.diags(np.asarray(factors, dtype=float))
        return SparseMatrix((self._csc @ diag).tocsc())

    def col_norms_sq(self) -> np.ndarray:
        return np.asarray(self._csc.multiply(self._csc).sum(axis=0)).ravel()

    def row_norms_sq(self) -> np.ndarray:
        return np.asarray(self._csr.multiply(self._csr).sum(axis=1)).ravel()

    def col_nnz(self) -> np.ndarray:
        return np.diff(self._csc.indptr)

    def row_nnz(self) -> np.ndarray:
        return np.diff(self._csr.indptr)

    def iter_nonzeros(self) -> Iterable[tuple[int, int, float]]:
        coo = self._csc.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    def __repr__(self):
        return f"SparseMatrix(d={self.d}, n={self.n}, nnz={self.nnz})"


@dataclass
class Dataset:
    """Data matrix plus its label vector (length n, real or +-1)."""

    X: SparseMatrix
    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if len(self.y) != self.X.n:
            raise ValueError(f"label count {len(self.y)} != column count {self.X.n}")
        if np.any(self.X.col_nnz() == 0):
            raise ValueError("dataset has empty columns (examples without features)")

    @property
    def empty_rows(self) -> np.ndarray:
        """Indices of all-zero feature rows; some analyses require none."""
        return np.flatnonzero(self.X.row_nnz() == 0)


@dataclass
class SyntheticSpec:
    """Recipe for a synthetic dataset with a controlled column-norm law.

    norm_law is one of "uniform", "chisq" (with `law_param` degrees of
    freedom), "extreme" (one column norm set to `law_param`, rest 1), or
    "constant" (all norms squared equal to `law_param`).
    """

    n: int
    d: int
    sparsity: float
    norm_law: str = "constant"
    law_param: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.sparsity <= 1.0):
            raise ValueError(f"sparsity must lie in (0, 1], got {self.sparsity}")
        if self.norm_law not in ("uniform", "chisq", "extreme", "constant"):
            raise ValueError(f"unknown norm law {self.norm_law!r}")


# ---------------------------------------------------------------------------
# LIBSVM text format
# ---------------------------------------------------------------------------


def parse_libsvm(source: Union[str, TextIO], d: Optional[int] = None) -> Dataset:
    """Parse LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).

    The feature count is the maximum index seen unless `d` overrides it.
    Malformed tokens and non-increasing indices raise LibsvmFormatError
    with the offending line number.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    labels: list[float] = []
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    max_index = 0
    n = 0
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            label = float(parts[0])
        except ValueError:
            raise LibsvmFormatError(lineno, f"bad label {parts[0]!r}") from None
        j = n
        prev = 0
        for tok in parts[1:]:
            idx_s, _, val_s = tok.partition(":")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmFormatError(lineno, f"bad feature token {tok!r}") from None
            if idx < 1:
                raise LibsvmFormatError(lineno, f"index {idx} is not 1-based")
            if idx <= prev:
                raise LibsvmFormatError(
                    lineno, f"indices not strictly increasing at {idx}"
                )
            prev = idx
            if val != 0.0:
                rows.append(idx - 1)
                cols.append(j)
                vals.append(val)
            max_index = max(max_index, idx)
        labels.append(label)
        n += 1
    if n == 0:
        raise LibsvmFormatError(0, "empty input")
    if d is None:
        d = max_index
    elif max_index > d:
        raise LibsvmFormatError(0, f"index {max_index} exceeds supplied d={d}")
    X = SparseMatrix.from_coo(d, n, rows, cols, vals)
    return Dataset(X, np.array(labels))


def serialize_libsvm(dataset: Dataset) -> str:
    """Write a Dataset back to LIBSVM text (1-based, sorted indices)."""
    out = []
    X, y = dataset.X, dataset.y
    for j in range(X.n):
        idx, val = X.col(j)
        feats = " ".join(f"{i + 1}:{v:.17g}" for i, v in zip(idx, val))
        label = f"{y[j]:.17g}"
        out.append(f"{label} {feats}" if feats else label)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Statistics and normalization
# ---------------------------------------------------------------------------


def col_stats(X: SparseMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-column (squared norms, nonzero counts)."""
    return X.col_norms_sq(), X.col_nnz()


def row_stats(X: SparseMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (squared norms, nonzero counts)."""
    return X.row_norms_sq(), X.row_nnz()


def normalize_by_avg_col_norm(dataset: Dataset) -> Dataset:
    """Divide every entry by the average column norm (mean becomes 1)."""
    norms = np.sqrt(dataset.X.col_norms_sq())
    if np.any(norms == 0):
        raise ValueError("cannot normalize: dataset has an all-zero column")
    avg = norms.mean()
    if avg <= 0:
        raise ValueError("zero average column norm")
    return Dataset(dataset.X.scale(1.0 / avg), dataset.y.copy())


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def _column_norm_targets(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    n, p = spec.n, spec.law_param
    if spec.norm_law == "constant":
        return np.full(n, p)
    if spec.norm_law == "uniform":
        return 2.0 * rng.random(n)
    if spec.norm_law == "chisq":
        return rng.chisquare(p, size=n)
    # extreme: all ones except one dominating column
    t = np.ones(n)
    t[0] = p
    return t


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate a dataset whose squared column norms follow spec.norm_law.

    Each feature row gets an independent sparsity coefficient with mean
    spec.sparsity governing nonzero placement; values are standard normal
    before column rescaling. Labels are +-1 from a planted linear model
    drawn from the same seed tree, so the whole dataset is a pure function
    of the spec.
    """
    n, d, w = spec.n, spec.d, spec.sparsity
    r_place = stream(spec.seed, "synthetic", "placement")
    r_vals = stream(spec.seed, "synthetic", "values")
    r_norm = stream(spec.seed, "synthetic", "norms")
    r_fill = stream(spec.seed, "synthetic", "fill")
    r_plant = stream(spec.seed, "synthetic", "labels")

    lo, hi = (2 * w - 1, 1.0) if w > 0.5 else (0.0, 2 * w)
    row_coeff = r_place.uniform(lo, hi, size=d)
    mask = r_place.random((d, n)) < row_coeff[:, None]
    # honor the Dataset invariants: no empty column, and keep rows usable
    for j in np.flatnonzero(~mask.any(axis=0)):
        mask[r_fill.integers(d), j] = True
    for i in np.flatnonzero(~mask.any(axis=1)):
        mask[i, r_fill.integers(n)] = True

    dense = np.where(mask, r_vals.standard_normal((d, n)), 0.0)
    current = np.sum(dense * dense, axis=0)
    target = _column_norm_targets(spec, r_norm)
    dense *= np.sqrt(target / current)[None, :]

    X = SparseMatrix.from_dense(dense)
    w_plant = r_plant.standard_normal(d)
    margins = X.rmatvec(w_plant)
    y = np.where(margins >= 0, 1.0, -1.0)
    return Dataset(X, y)
