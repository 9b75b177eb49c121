"""Dual coordinate ascent family over l2-regularized linear ERM.

All methods maintain alpha (one dual variable per example) and the scaled
average abar = X alpha / (lambda n); with the l2 regularizer the primal
iterate is w = abar, stored once. abar is updated sparsely per step and
refreshed exactly at every epoch boundary to bound floating-point drift.

Cost accounting: `nnz_visited` counts data nonzeros touched by updates and
residue recomputations (the effective-passes axis), `tree_ops` counts
probability-tree node touches.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ermcd.eso import v_serial
from ermcd.losses import L2, Problem, dual_delta, dual_value, loss_deriv, primal_value
from ermcd.sampling import (
    BUCKET,
    SERIAL,
    TAU_NICE,
    OptimalityReached,
    ProbabilityTree,
    Sampling,
    adasdca_probs,
    draw_block,
    importance_probs,
)
from ermcd.trace import Trace


@dataclass
class DualState:
    """Iterate state shared by the dual solvers."""

    alpha: np.ndarray
    abar: np.ndarray  # = X alpha / (lambda n); equals w for l2
    epoch: int = 0
    nnz_visited: int = 0
    tree_ops: int = 0

    @property
    def w(self) -> np.ndarray:
        return self.abar


def _require_dual(problem: Problem) -> None:
    if problem.reg.kind != L2:
        raise ValueError("dual solvers require the l2 regularizer")


def _init_state(problem: Problem, alpha0: Optional[np.ndarray]) -> DualState:
    n = problem.n
    alpha = np.zeros(n) if alpha0 is None else np.asarray(alpha0, dtype=float).copy()
    abar = problem.dataset.X.matvec(alpha) / (problem.lam * n)
    return DualState(alpha=alpha, abar=abar)


def _refresh_abar(problem: Problem, state: DualState, rel_tol: float = 1e-8) -> None:
    exact = problem.dataset.X.matvec(state.alpha) / (problem.lam * problem.n)
    drift = np.linalg.norm(state.abar - exact)
    scale = 1.0 + np.linalg.norm(exact)
    if drift > rel_tol * scale:
        raise FloatingPointError(
            f"abar drifted by {drift:.3e} (tolerance {rel_tol * scale:.3e})"
        )
    state.abar = exact


def residues(problem: Problem, state: DualState) -> np.ndarray:
    """kappa_j = alpha_j + phi'(<X_:j, w>); zero exactly at optimality.

    One full pass over the data (cost recorded on the state).
    """
    X = problem.dataset.X
    z = X.rmatvec(state.w)
    state.nnz_visited += X.nnz
    return state.alpha + loss_deriv(problem.loss, z, problem.dataset.y)


def _logistic_eta(problem: Problem, q: np.ndarray, v: np.ndarray) -> float:
    nlg = problem.nlg
    return float(np.min(q * nlg / (v + nlg)))


def _checkpoint(problem: Problem, state: DualState, trace: Trace, nnz_total: int,
                t0: float, extra: Optional[dict] = None) -> float:
    P = primal_value(problem, state.w)
    D = dual_value(problem, state.alpha)
    gap = P - D
    if not np.isfinite(P):
        raise FloatingPointError("non-finite primal value; run aborted")
    trace.append(
        epoch=state.epoch,
        effective_passes=state.nnz_visited / nnz_total,
        simulated_parallel_cost=state.nnz_visited,
        primal=P,
        dual=D,
        gap=gap,
        wall=time.perf_counter() - t0,
        **(extra or {}),
    )
    return gap


def _apply_delta(problem: Problem, state: DualState, j: int, delta: float) -> None:
    if delta == 0.0:
        return
    idx, val = problem.dataset.X.col(j)
    state.alpha[j] += delta
    state.abar[idx] += (delta / (problem.lam * problem.n)) * val


def sdca_run(
    problem: Problem,
    p: np.ndarray,
    epochs: int,
    rng: np.random.Generator,
    target_gap: Optional[float] = None,
    alpha0: Optional[np.ndarray] = None,
) -> Trace:
    """Dual coordinate ascent with a fixed serial distribution p.

    Uniform p is the standard baseline; p from `importance_probs` is the
    importance-sampling variant. One epoch is n iterations, with an exact
    abar refresh and one primal/dual checkpoint per epoch.
    """
    _require_dual(problem)
    sampling = Sampling(rule=SERIAL, n=problem.n, p=p)
    return quartz_run(
        problem, sampling, epochs, rng, target_gap=target_gap, alpha0=alpha0
    )


def quartz_run(
    problem: Problem,
    sampling: Sampling,
    epochs: int,
    rng: np.random.Generator,
    target_gap: Optional[float] = None,
    alpha0: Optional[np.ndarray] = None,
) -> Trace:
    """Blockwise dual coordinate ascent with a fixed sampling.

    Supports serial, tau-nice, and bucket rules; the sampling must carry
    its certified v (see eso.attach_eso). Each step maximizes the
    per-coordinate surrogate exactly (closed form) for quadratic and
    smoothed hinge losses; logistic uses the fixed eta step.
    """
    _require_dual(problem)
    if sampling.rule not in (SERIAL, TAU_NICE, BUCKET):
        raise ValueError(f"unsupported sampling rule {sampling.rule!r} for dual ascent")
    if sampling.v is None:
        from ermcd.eso import attach_eso

        attach_eso(problem.dataset.X, sampling)
    v = sampling.v
    q = np.asarray(sampling.p, dtype=float)
    if np.any(q <= 0):
        import warnings

        warnings.warn(
            "sampling gives zero probability to some coordinates; "
            "convergence guarantees need q_j > 0",
            RuntimeWarning,
        )
    eta = (
        _logistic_eta(problem, q, v) if problem.loss.kind == "logistic" else None
    )
    X, y = problem.dataset.X, problem.dataset.y
    n, lam = problem.n, problem.lam
    state = _init_state(problem, alpha0)
    trace = Trace(meta={"method": "quartz", "rule": sampling.rule})
    t0 = time.perf_counter()
    iters_per_epoch = math.ceil(n / sampling.expected_block_size)
    gap = _checkpoint(problem, state, trace, X.nnz, t0)
    if target_gap is not None and gap <= target_gap:
        return trace
    for _ in range(epochs):
        for _ in range(iters_per_epoch):
            S = draw_block(sampling, rng)
            # all inner products against the pre-update w
            inners = []
            for j in S:
                idx, val = X.col(j)
                inners.append(float(val @ state.w[idx]))
                state.nnz_visited += len(idx)
            for j, inner in zip(S, inners):
                coeff = v[j] / (lam * n)
                delta = dual_delta(
                    problem.loss, state.alpha[j], inner, coeff, y[j], eta=eta
                )
                _apply_delta(problem, state, int(j), delta)
        state.epoch += 1
        _refresh_abar(problem, state)
        gap = _checkpoint(problem, state, trace, X.nnz, t0)
        if target_gap is not None and gap <= target_gap:
            break
    return trace


def adasdca_run(
    problem: Problem,
    epochs: int,
    rng: np.random.Generator,
    target_gap: Optional[float] = None,
    alpha0: Optional[np.ndarray] = None,
) -> Trace:
    """Adaptive dual ascent: fresh residue-driven probabilities every step.

    Every iteration recomputes the full residue vector (one pass over the
    data) and samples from p_j ~ |kappa_j| sqrt(v_j + n lambda gamma), so
    an epoch costs O(n * nnz); that cost is the price of the strongest
    per-iteration progress and is recorded honestly in nnz_visited.
    """
    _require_dual(problem)
    X, y = problem.dataset.X, problem.dataset.y
    n, lam = problem.n, problem.lam
    v = v_serial(X)
    nlg = problem.nlg
    eta = (
        _logistic_eta(problem, importance_probs(v, nlg), v)
        if problem.loss.kind == "logistic"
        else None
    )
    state = _init_state(problem, alpha0)
    trace = Trace(meta={"method": "adasdca"})
    t0 = time.perf_counter()
    gap = _checkpoint(problem, state, trace, X.nnz, t0)
    if target_gap is not None and gap <= target_gap:
        return trace
    for _ in range(epochs):
        for _ in range(n):
            kappa = residues(problem, state)
            try:
                p = adasdca_probs(kappa, v, nlg)
            except OptimalityReached:
                trace.meta["status"] = "optimal"
                _checkpoint(problem, state, trace, X.nnz, t0)
                return trace
            c = np.cumsum(p)
            j = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
            j = min(j, n - 1)
            idx, val = X.col(j)
            inner = float(val @ state.w[idx])
            delta = dual_delta(
                problem.loss, state.alpha[j], inner, v[j] / (lam * n), y[j], eta=eta
            )
            _apply_delta(problem, state, j, delta)
            state.nnz_visited += len(idx)
        state.epoch += 1
        _refresh_abar(problem, state)
        gap = _checkpoint(problem, state, trace, X.nnz, t0)
        if target_gap is not None and gap <= target_gap:
            break
    return trace


def adasdca_plus_run(
    problem: Problem,
    m: float,
    option: str,
    epochs: int,
    rng: np.random.Generator,
    target_gap: Optional[float] = None,
    alpha0: Optional[np.ndarray] = None,
    allow_unit_decay: bool = False,
) -> Trace:
    """Heuristic adaptive dual ascent with per-epoch probability resets.

    At each epoch start the sampling distribution is rebuilt: option "I"
    uses fresh residues (one data pass), option "II" the residue-free
    importance weights. Between resets, the sampled coordinate's tree
    weight is divided by m after each step (weights stay unnormalized).
    An epoch costs O(nnz + n log n). allow_unit_decay=True permits m=1,
    which disables the decay and reduces option II to plain importance
    sampling (a reduction hook used by tests).
    """
    _require_dual(problem)
    if option not in ("I", "II"):
        raise ValueError(f"option must be 'I' or 'II', got {option!r}")
    if m <= 1 and not (allow_unit_decay and m == 1):
        raise ValueError("decay parameter m must exceed 1")
    X, y = problem.dataset.X, problem.dataset.y
    n, lam = problem.n, problem.lam
    v = v_serial(X)
    nlg = problem.nlg
    eta = (
        _logistic_eta(problem, importance_probs(v, nlg), v)
        if problem.loss.kind == "logistic"
        else None
    )
    state = _init_state(problem, alpha0)
    trace = Trace(meta={"method": "adasdca_plus", "option": option, "m": m})
    t0 = time.perf_counter()
    gap = _checkpoint(problem, state, trace, X.nnz, t0)
    if target_gap is not None and gap <= target_gap:
        return trace
    for _ in range(epochs):
        if option == "I":
            kappa = residues(problem, state)
            try:
                weights = adasdca_probs(kappa, v, nlg)
            except OptimalityReached:
                trace.meta["status"] = "optimal"
                _checkpoint(problem, state, trace, X.nnz, t0)
                return trace
        else:
            weights = importance_probs(v, nlg)
        tree = ProbabilityTree(weights)
        for _ in range(n):
            j = tree.sample(rng)
            idx, val = X.col(j)
            inner = float(val @ state.w[idx])
            delta = dual_delta(
                problem.loss, state.alpha[j], inner, v[j] / (lam * n), y[j], eta=eta
            )
            _apply_delta(problem, state, j, delta)
            state.nnz_visited += len(idx)
            if m > 1:
                tree.update(j, tree.weight(j) / m)
        state.tree_ops += tree.ops
        state.epoch += 1
        _refresh_abar(problem, state)
        gap = _checkpoint(problem, state, trace, X.nnz, t0)
        if target_gap is not None and gap <= target_gap:
            break
    return trace
