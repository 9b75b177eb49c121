"""Certified step-size parameters for each sampling, plus an MC verifier.

The central inequality bounds E||sum_{j in S} h_j X_:j||^2 by the
separable sum p_j v_j h_j^2; every solver's step size is derived from the
v (dual/example side) or u (primal/feature side) vector of its sampling.
The Monte-Carlo check estimates the left side for random h and reports
the worst standardized exceedance, so a too-small v is detectable while
sampling noise is not mistaken for a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from ermcd.sampling import BUCKET, CHUNKED, SERIAL, TAU_NICE, Partition, Sampling, draw_block
from ermcd.sparse_data import SparseMatrix


def v_serial(X: SparseMatrix) -> np.ndarray:
    """v_j = ||X_:j||^2, the serial (one index at a time) parameters."""
    return X.col_norms_sq()


def u_serial(X: SparseMatrix) -> np.ndarray:
    """u_i = ||X_i:||^2, the feature-side serial parameters."""
    return X.row_norms_sq()


def v_tau_nice(X: SparseMatrix, tau: int) -> np.ndarray:
    """v_j = sum_i (1 + (||X_i:||_0 - 1)(tau - 1)/(n - 1)) X_ij^2."""
    n = X.n
    if not (1 <= tau <= n):
        raise ValueError(f"need 1 <= tau <= n, got tau={tau}")
    if tau == 1 or n == 1:
        return v_serial(X)
    row_nnz = X.row_nnz()
    out = np.empty(n)
    scale = (tau - 1) / (n - 1)
    for j in range(n):
        idx, val = X.col(j)
        out[j] = np.sum((1.0 + (row_nnz[idx] - 1) * scale) * val * val)
    return out


def v_bucket(X: SparseMatrix, buckets: Partition, p: np.ndarray) -> np.ndarray:
    """Certified v for a bucket sampling with marginals p.

    v_j = sum_i (1 + (1 - 1/w'_i) delta_i) X_ij^2, where delta_i is the
    total marginal mass on row i's support and w'_i counts the buckets
    that support intersects. Rows touching a single bucket contribute
    their serial value.
    """
    p = np.asarray(p, dtype=float)
    group_of = buckets.group_of()
    d = X.d
    delta = np.zeros(d)
    omega = np.zeros(d)
    for i in range(d):
        idx, _ = X.row(i)
        if len(idx) == 0:
            continue
        delta[i] = p[idx].sum()
        omega[i] = len(np.unique(group_of[idx]))
    factor = np.ones(d)
    live = omega > 0
    factor[live] = 1.0 + (1.0 - 1.0 / omega[live]) * delta[live]
    out = np.empty(X.n)
    for j in range(X.n):
        idx, val = X.col(j)
        out[j] = np.sum(factor[idx] * val * val)
    return out


def v_chunked(X: SparseMatrix, groups: Partition, tau: int) -> np.ndarray:
    """Conservative v for the union-of-groups sampling.

    The block size never exceeds the sum of the tau largest group sizes
    B, and any sampling with |S| <= B admits v_j = B ||X_:j||^2.
    """
    sizes = sorted((len(g) for g in groups.groups), reverse=True)
    B = sum(sizes[:tau])
    return B * v_serial(X)


def attach_eso(X: SparseMatrix, sampling: Sampling) -> Sampling:
    """Fill in the sampling's cached v from its rule."""
    if sampling.rule == SERIAL:
        sampling.v = v_serial(X)
    elif sampling.rule == TAU_NICE:
        sampling.v = v_tau_nice(X, sampling.tau)
    elif sampling.rule == BUCKET:
        sampling.v = v_bucket(X, sampling.buckets, sampling.p)
    elif sampling.rule == CHUNKED:
        sampling.v = v_chunked(X, sampling.groups, sampling.tau)
    else:
        raise ValueError(f"no certified v for rule {sampling.rule!r}")
    return sampling


@dataclass(frozen=True)
class LTauResult:
    value: float
    exact: bool  # False when the trace upper bound was used


_EXACT_SUBSET_LIMIT = 10**4


def L_tau(M, tau: int) -> LTauResult:
    """max over |S|=tau of lambda_max(M_S), exact for small subset counts.

    Beyond the enumeration limit, returns the valid upper bound given by
    the sum of the tau largest diagonal entries.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        return LTauResult(float(M), True)
    if M.ndim == 1:
        diag = M
        n = len(diag)
        if not (1 <= tau <= n):
            raise ValueError("need 1 <= tau <= n")
        return LTauResult(float(np.max(diag)), True)  # diagonal: lambda_max = max entry
    n = M.shape[0]
    if not (1 <= tau <= n):
        raise ValueError("need 1 <= tau <= n")
    if tau == n:
        return LTauResult(float(np.linalg.eigvalsh(M)[-1]), True)
    if tau == 1:
        return LTauResult(float(np.max(np.diag(M))), True)
    if math.comb(n, tau) <= _EXACT_SUBSET_LIMIT:
        best = 0.0
        for S in combinations(range(n), tau):
            sub = M[np.ix_(S, S)]
            best = max(best, float(np.linalg.eigvalsh(sub)[-1]))
        return LTauResult(best, True)
    bound = float(np.sort(np.diag(M))[-tau:].sum())
    return LTauResult(bound, False)


def speedup_sigma(X: SparseMatrix) -> float:
    """max_j ||X_:j||^2 over the mean: the serial importance speedup."""
    norms = X.col_norms_sq()
    if len(norms) == 0:
        raise ValueError("empty matrix")
    return float(norms.max() / norms.mean())


def beta_factors(
    X: SparseMatrix,
    buckets: Partition,
    p_star: np.ndarray,
    nlg: float,
    v_unif: np.ndarray,
) -> np.ndarray:
    """Per-bucket slack of the practical reweighting against its own v.

    beta_l = max over the bucket of (nlg + s_j)/(nlg + v_unif_j), where
    s_j is the certified v at the reweighted marginals p*.
    """
    s = v_bucket(X, buckets, p_star)
    v_unif = np.asarray(v_unif, dtype=float)
    out = np.empty(buckets.k)
    for l, g in enumerate(buckets.groups):
        idx = list(g)
        out[l] = float(np.max((nlg + s[idx]) / (nlg + v_unif[idx])))
    return out


def theta_tau_nice(X: SparseMatrix, tau: int, nlg: float) -> float:
    """1/theta = n/tau + max_j v_j / (tau * lambda * gamma)."""
    v = v_tau_nice(X, tau)
    n = X.n
    lam_gamma = nlg / n
    inv = n / tau + float(v.max()) / (tau * lam_gamma)
    return 1.0 / inv


def theta_tau_importance(
    X: SparseMatrix, buckets: Partition, nlg: float
) -> tuple[float, np.ndarray]:
    """Rate of the practical bucket reweighting, with its probabilities.

    1/theta = max_l (n/tau + (tau/n) sum_{j in B_l} v_unif_j / (tau
    lambda gamma)) * beta_l.
    """
    from ermcd.sampling import bucket_probs_practical

    n = X.n
    tau = buckets.k
    p_unif = np.empty(n)
    for g in buckets.groups:
        p_unif[list(g)] = 1.0 / len(g)
    v_unif = v_bucket(X, buckets, p_unif)
    p_star = bucket_probs_practical(v_unif, nlg, buckets)
    beta = beta_factors(X, buckets, p_star, nlg, v_unif)
    lam_gamma = nlg / n
    worst = 0.0
    for l, g in enumerate(buckets.groups):
        idx = list(g)
        term = (n / tau + (tau / n) * float(v_unif[idx].sum()) / (tau * lam_gamma)) * beta[l]
        worst = max(worst, term)
    return 1.0 / worst, p_star


@dataclass
class EsoReport:
    max_violation_z: float
    worst_h: int
    trials: int
    h_draws: int

    @property
    def passed(self) -> bool:
        return self.max_violation_z <= 3.0


def eso_mc_check(
    X: SparseMatrix,
    sampling: Sampling,
    v: np.ndarray,
    trials: int = 10_000,
    h_draws: int = 50,
    rng: Optional[np.random.Generator] = None,
) -> EsoReport:
    """Monte-Carlo audit of E||sum_{j in S} h_j X_:j||^2 <= sum p_j v_j h_j^2.

    For each of h_draws random h, the left side is estimated over `trials`
    shared block draws and compared to the right side in units of the
    estimator's standard error; max z <= 3 passes. Dense arithmetic, meant
    for desk-scale matrices.
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials for a meaningful check")
    dense = X.to_dense()
    n = X.n
    v = np.asarray(v, dtype=float)
    p = np.asarray(sampling.p, dtype=float)
    H = rng.standard_normal((h_draws, n))
    blocks = [draw_block(sampling, rng) for _ in range(trials)]
    lhs = np.empty((trials, h_draws))
    for t, S in enumerate(blocks):
        # sum_j h_j X_:j over the block, all h at once: (d,|S|) @ (|S|,h)
        A = dense[:, S]
        E = A @ H[:, S].T
        lhs[t] = np.sum(E * E, axis=0)
    rhs = (p * v) @ (H * H).T
    mean = lhs.mean(axis=0)
    stderr = lhs.std(axis=0, ddof=1) / math.sqrt(trials)
    z = np.where(
        stderr > 0,
        (mean - rhs) / np.where(stderr > 0, stderr, 1.0),
        np.where(mean > rhs * (1 + 1e-12) + 1e-12, np.inf, -np.inf),
    )
    worst = int(np.argmax(z))
    return EsoReport(
        max_violation_z=float(z[worst]), worst_h=worst, trials=trials, h_draws=h_draws
    )
