"""Shared fixtures and independent oracles used across the test suite."""

import numpy as np
import pytest

from ermcd.rng import stream
from ermcd.sparse_data import Dataset, SparseMatrix


def ridge_solution(X: SparseMatrix, y: np.ndarray, lam: float):
    """Closed-form ridge optimum: w* = (XX^T/n + lam I)^{-1} X y / n,
    alpha* = y - X^T w* (the negated quadratic-loss derivative)."""
    n = X.n
    A = X.to_dense()
    w = np.linalg.solve(A @ A.T / n + lam * np.eye(X.d), A @ y / n)
    alpha = y - X.rmatvec(w)
    return w, alpha


def random_sparse(d, n, density, seed, ensure_cover=True):
    """Random sparse matrix with standard normal values; optionally patch
    empty rows/columns so both views stay exercised."""
    rng = stream(seed, "test-matrix")
    mask = rng.random((d, n)) < density
    if ensure_cover:
        for j in np.flatnonzero(~mask.any(axis=0)):
            mask[rng.integers(d), j] = True
        for i in np.flatnonzero(~mask.any(axis=1)):
            mask[i, rng.integers(n)] = True
    dense = np.where(mask, rng.standard_normal((d, n)), 0.0)
    return SparseMatrix.from_dense(dense)


def random_dataset(d, n, density, seed, labels="pm1"):
    X = random_sparse(d, n, density, seed)
    rng = stream(seed, "test-labels")
    if labels == "pm1":
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    else:
        y = rng.standard_normal(n)
    return Dataset(X, y)


def grid_argmax_1d(f, lo=-20.0, hi=20.0, tol=1e-8):
    """Maximize a 1-D concave-ish function by iterative grid refinement."""
    for _ in range(8):
        xs = np.linspace(lo, hi, 2001)
        vals = np.array([f(x) for x in xs])
        k = int(np.argmax(vals))
        span = (hi - lo) / 2000
        lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, 2000)]
        if span < tol:
            break
    return 0.5 * (lo + hi)


def grid_argmin_1d(f, lo=-20.0, hi=20.0, tol=1e-8):
    return grid_argmax_1d(lambda x: -f(x), lo, hi, tol)


@pytest.fixture
def rng():
    return stream(12345, "fixture")
