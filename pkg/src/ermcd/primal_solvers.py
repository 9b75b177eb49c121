"""Primal methods: dual-free SDCA with arbitrary sampling, and feature-wise
randomized coordinate descent over the primal objective.

The dual-free method keeps auxiliary per-example variables alpha alongside
w = X alpha / (lambda n); each step moves the sampled alpha_j a fraction
theta/p_j toward -phi'(<X_:j, w>) and w follows. Parallelism is never
executed, only modeled: the per-iteration cost of a block is the largest
nonzero workload any single parallel unit would carry.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ermcd.losses import L2, Problem, dual_value, loss_deriv, primal_value
from ermcd.sampling import (
    BUCKET,
    CHUNKED,
    SERIAL,
    TAU_NICE,
    Partition,
    Sampling,
    draw_block,
)
from ermcd.sparse_data import SparseMatrix
from ermcd.trace import Trace


def dfsdca_stepsize(p: np.ndarray, v: np.ndarray, nlg: float) -> float:
    """theta = min_j p_j nlg / (v_j + nlg); the certified step size."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("every coordinate needs positive sampling probability")
    v = np.asarray(v, dtype=float)
    return float(np.min(p * nlg / (v + nlg)))


def _parallel_unit_cost(sampling: Sampling, S: np.ndarray, col_nnz: np.ndarray) -> int:
    """Largest nnz workload of one parallel unit for this block."""
    if sampling.rule == CHUNKED:
        group_of = sampling.groups.group_of()
        sums: dict[int, int] = {}
        for j in S:
            g = int(group_of[j])
            sums[g] = sums.get(g, 0) + int(col_nnz[j])
        return max(sums.values())
    return int(col_nnz[S].max())


def simulated_parallel_cost(
    sets: Sequence[Sequence[int]],
    nnz_per_example: np.ndarray,
    groups: Optional[Partition] = None,
) -> np.ndarray:
    """Cumulative modeled wall time for a sequence of sampled blocks.

    Standard mode (groups=None): each sampled index is its own unit, so an
    iteration costs the block's max per-example nnz. Chunked mode: units
    are the selected groups and an iteration costs the heaviest group's
    total nnz.
    """
    nnz = np.asarray(nnz_per_example, dtype=int)
    costs = np.empty(len(sets), dtype=float)
    if groups is None:
        for t, S in enumerate(sets):
            costs[t] = nnz[list(S)].max()
    else:
        group_of = groups.group_of()
        for t, S in enumerate(sets):
            sums: dict[int, int] = {}
            for j in S:
                g = int(group_of[j])
                sums[g] = sums.get(g, 0) + int(nnz[j])
            costs[t] = max(sums.values())
    return np.cumsum(costs)


@dataclass
class DfsdcaOracle:
    """Known optimum, enabling the Lyapunov potential in traces."""

    w_star: np.ndarray
    alpha_star: np.ndarray


def dfsdca_run(
    problem: Problem,
    sampling: Sampling,
    epochs: int,
    rng: np.random.Generator,
    target_gap: Optional[float] = None,
    alpha0: Optional[np.ndarray] = None,
    oracle: Optional[DfsdcaOracle] = None,
    record_potential_every_iter: bool = False,
) -> Trace:
    """Dual-free SDCA under any sampling with known marginals.

    The step size comes from dfsdca_stepsize on the sampling's certified
    v; each alpha_j update is the convex combination with coefficient
    theta/p_j in (0, 1]. When an oracle (w*, alpha*) is supplied, the
    trace records the potential lambda/2 ||w - w*||^2 + gamma/(2n)
    ||alpha - alpha*||^2 (per iteration if requested, in trace.meta
    ["potential_per_iter"]); otherwise checkpoints carry the duality gap.
    """
    if problem.reg.kind != L2:
        raise ValueError("dual-free SDCA requires the l2 regularizer")
    if sampling.rule not in (SERIAL, TAU_NICE, BUCKET, CHUNKED):
        raise ValueError(f"unsupported sampling rule {sampling.rule!r}")
    if sampling.v is None:
        from ermcd.eso import attach_eso

        attach_eso(problem.dataset.X, sampling)
    X, y = problem.dataset.X, problem.dataset.y
    n, lam, gamma = problem.n, problem.lam, problem.loss.gamma
    nlg = problem.nlg
    p = np.asarray(sampling.p, dtype=float)
    theta = dfsdca_stepsize(p, sampling.v, nlg)
    alpha = np.zeros(n) if alpha0 is None else np.asarray(alpha0, dtype=float).copy()
    w = X.matvec(alpha) / (lam * n)
    col_nnz = X.col_nnz()

    def potential() -> float:
        dw = w - oracle.w_star
        da = alpha - oracle.alpha_star
        return float(lam / 2 * (dw @ dw) + gamma / (2 * n) * (da @ da))

    trace = Trace(meta={"method": "dfsdca", "rule": sampling.rule, "theta": theta})
    pots: list[float] = []
    t0 = time.perf_counter()
    nnz_visited = 0
    parallel_cost = 0.0
    iters_per_epoch = math.ceil(n / sampling.expected_block_size)

    def checkpoint(epoch: int):
        P = primal_value(problem, w)
        D = dual_value(problem, alpha)
        if not np.isfinite(P):
            raise FloatingPointError("non-finite primal value; run aborted")
        trace.append(
            epoch=epoch,
            effective_passes=nnz_visited / X.nnz,
            simulated_parallel_cost=parallel_cost,
            primal=P,
            dual=D,
            gap=P - D,
            potential=potential() if oracle is not None else None,
            wall=time.perf_counter() - t0,
        )
        return P - D

    gap = checkpoint(0)
    if oracle is not None and record_potential_every_iter:
        pots.append(potential())
    if target_gap is not None and gap <= target_gap:
        trace.meta["potential_per_iter"] = pots
        return trace
    for epoch in range(1, epochs + 1):
        for _ in range(iters_per_epoch):
            S = draw_block(sampling, rng)
            deltas = []
            for j in S:
                idx, val = X.col(j)
                inner = float(val @ w[idx])
                deltas.append(float(loss_deriv(problem.loss, inner, y[j])) + alpha[j])
                nnz_visited += len(idx)
            for j, dlt in zip(S, deltas):
                alpha[j] -= theta / p[j] * dlt
                idx, val = X.col(j)
                w[idx] -= (theta / (n * lam * p[j]) * dlt) * val
            parallel_cost += _parallel_unit_cost(sampling, S, col_nnz)
            if oracle is not None and record_potential_every_iter:
                pots.append(potential())
        exact = X.matvec(alpha) / (lam * n)
        if np.linalg.norm(w - exact) > 1e-8 * (1 + np.linalg.norm(exact)):
            raise FloatingPointError("w drifted from X alpha / (lambda n)")
        w = exact
        gap = checkpoint(epoch)
        if target_gap is not None and gap <= target_gap:
            break
    trace.meta["potential_per_iter"] = pots
    return trace


def nsync_run(
    problem: Problem,
    sampling: Sampling,
    epochs: int,
    rng: np.random.Generator,
    u: Optional[np.ndarray] = None,
    target_gap: Optional[float] = None,
    w0: Optional[np.ndarray] = None,
    p_star: Optional[float] = None,
) -> Trace:
    """Randomized coordinate descent over feature coordinates.

    The sampling runs over range(d). Serial rules use u_i = ||X_i:||^2;
    the full-batch rule (serial sampling is still passed, see
    full_batch_u) needs u_i = lambda_max(X X^T). The margin cache
    z = X^T w is updated through the touched rows, so one iteration costs
    the selected rows' nnz. When p_star = P(w*) is supplied, checkpoints
    record the primal gap in the gap column.
    """
    X, y = problem.dataset.X, problem.dataset.y
    d, n, lam, gamma = problem.d, problem.n, problem.lam, problem.loss.gamma
    if sampling.n != d:
        raise ValueError("primal sampling must run over the d feature coordinates")
    if u is None:
        from ermcd.eso import u_serial

        if sampling.rule != SERIAL:
            raise ValueError("supply u explicitly for non-serial primal samplings")
        u = u_serial(X)
    u = np.asarray(u, dtype=float)
    p = np.asarray(sampling.p, dtype=float)
    if np.any(p <= 0):
        import warnings

        warnings.warn("zero-probability feature coordinates", RuntimeWarning)

    w = np.zeros(d) if w0 is None else np.asarray(w0, dtype=float).copy()
    z = X.rmatvec(w)
    nlg = n * lam * gamma
    trace = Trace(meta={"method": "nsync", "rule": sampling.rule})
    t0 = time.perf_counter()
    nnz_visited = 0
    iters_per_epoch = math.ceil(d / sampling.expected_block_size)

    def checkpoint(epoch: int):
        P = primal_value(problem, w)
        if not np.isfinite(P):
            raise FloatingPointError("non-finite primal value; run aborted")
        gap = P - p_star if p_star is not None else None
        trace.append(
            epoch=epoch,
            effective_passes=nnz_visited / X.nnz,
            simulated_parallel_cost=nnz_visited,
            primal=P,
            gap=gap,
            wall=time.perf_counter() - t0,
        )
        return gap

    gap = checkpoint(0)
    if target_gap is not None and gap is not None and gap <= target_gap:
        return trace
    for epoch in range(1, epochs + 1):
        for _ in range(iters_per_epoch):
            S = draw_block(sampling, rng)
            deltas = []
            for i in S:
                idx, val = X.row(i)
                partial = float(val @ loss_deriv(problem.loss, z[idx], y[idx])) / n
                partial += lam * w[i]
                deltas.append(-(gamma * n) / (u[i] + nlg) * partial)
                nnz_visited += len(idx)
            for i, dlt in zip(S, deltas):
                w[i] += dlt
                idx, val = X.row(i)
                z[idx] += dlt * val
        exact = X.rmatvec(w)
        if np.linalg.norm(z - exact) > 1e-8 * (1 + np.linalg.norm(exact)):
            raise FloatingPointError("margin cache drifted from X^T w")
        z = exact
        gap = checkpoint(epoch)
        if target_gap is not None and gap is not None and gap <= target_gap:
            break
    return trace


def full_batch_u(X: SparseMatrix, tol: float = 1e-6, seed: int = 0) -> np.ndarray:
    """u_i = lambda_max(X X^T) for the always-all-features rule.

    Power iteration on X X^T through sparse matvecs; valid (if slightly
    conservative) for the all-ones probability matrix.
    """
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(X.d)
    vec /= np.linalg.norm(vec)
    lam_prev = 0.0
    for _ in range(10_000):
        nxt = X.matvec(X.rmatvec(vec))
        norm = np.linalg.norm(nxt)
        if norm == 0:
            return np.zeros(X.d)
        vec = nxt / norm
        if abs(norm - lam_prev) <= tol * max(1.0, norm):
            break
        lam_prev = norm
    return np.full(X.d, norm)
