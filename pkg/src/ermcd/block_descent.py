"""Generic proximal block descent with arbitrary block-selection rules.

Works on composite objectives F = f + g with f certified smooth against a
matrix model M and g separable with 1-D prox support. Selection rules
cover full batch, uniform/importance/greedy serial, uniform tau-subsets,
and greedy minibatches. The per-step progress diagnostics (forcing value
lambda(x), forcing ratio mu(x), block proportion theta(S, x)) are what
the convergence guarantees are written in, so runs log them alongside the
optimality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from ermcd.eso import L_tau
from ermcd.losses import Regularizer, reg_prox_1d
from ermcd.rng import stream


class OptimalPoint(Exception):
    """The queried point already attains the reference optimum."""


# ---------------------------------------------------------------------------
# Smoothness models
# ---------------------------------------------------------------------------


class SmoothnessModel:
    """Positive definite matrix model: scalar L*I, diagonal, or full."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        self._M = M
        if M.ndim == 2:
            self.kind = "full"
        elif M.ndim == 1:
            self.kind = "diag"
        else:
            self.kind = "scalar"

    def diag(self, n: int) -> np.ndarray:
        if self.kind == "full":
            return np.diag(self._M)
        if self.kind == "diag":
            return self._M
        return np.full(n, float(self._M))

    def lmax(self, n: int) -> float:
        if self.kind == "full":
            return float(np.linalg.eigvalsh(self._M)[-1])
        return float(np.max(self.diag(n)))

    def full(self, n: int) -> np.ndarray:
        if self.kind == "full":
            return self._M
        return np.diag(self.diag(n))

    def solve_block(self, S: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """M_S^{-1} rhs for the block submatrix."""
        if self.kind == "full":
            sub = self._M[np.ix_(S, S)]
            return np.linalg.solve(sub, rhs)
        if self.kind == "diag":
            return rhs / self._M[S]
        return rhs / float(self._M)

    def L_for_block_size(self, n: int, tau: int) -> float:
        """Smallest certified scalar L for blocks of size <= tau."""
        if self.kind != "full":
            return float(np.max(self.diag(n)))
        return L_tau(self._M, tau).value


@dataclass
class ObjectiveOracle:
    """Composite objective F = f + g with its smoothness certificate.

    g is either None (smooth problem) or a Regularizer applied
    coordinatewise with its weight already folded in. f_star / x_star,
    when known, unlock the optimality-gap diagnostics. `box` optionally
    records the region on which M was certified (some nonconvex examples
    are only box-smooth).
    """

    n: int
    f_value: Callable[[np.ndarray], float]
    f_gradient: Callable[[np.ndarray], np.ndarray]
    M: SmoothnessModel
    g: Optional[Regularizer] = None
    f_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    name: str = ""
    box: Optional[float] = None

    def F_value(self, x: np.ndarray) -> float:
        v = self.f_value(x)
        if self.g is not None:
            v += sum(self.g.value_1d(float(xi)) for xi in x)
        return v

    def block_gradient(self, x: np.ndarray, S: np.ndarray) -> np.ndarray:
        return self.f_gradient(x)[S]

    def gap(self, x: np.ndarray) -> float:
        if self.f_star is None:
            raise ValueError("objective has no recorded optimum")
        return self.F_value(x) - self.f_star


# ---------------------------------------------------------------------------
# Forcing and proportion functions
# ---------------------------------------------------------------------------


def forcing_lambda_components(
    oracle: ObjectiveOracle, x: np.ndarray, L: float
) -> np.ndarray:
    """Per-coordinate forcing values lambda_i(x) at scalar smoothness L.

    lambda_i = -L * min_v (grad_i v + L/2 v^2 + g_i(x_i+v) - g_i(x_i));
    for g = 0 this is grad_i^2 / 2 independently of L.
    """
    grad = oracle.f_gradient(x)
    if oracle.g is None:
        return grad * grad / 2.0
    out = np.empty(oracle.n)
    for i in range(oracle.n):
        u = reg_prox_1d(oracle.g, float(x[i]), float(grad[i]), L)
        val = (
            grad[i] * u
            + L / 2.0 * u * u
            + oracle.g.value_1d(float(x[i]) + u)
            - oracle.g.value_1d(float(x[i]))
        )
        out[i] = -L * val
    return out


def forcing_lambda(oracle: ObjectiveOracle, x: np.ndarray, L: float) -> float:
    """Total forcing value lambda(x) = sum_i lambda_i(x); always >= 0."""
    return float(forcing_lambda_components(oracle, x, L).sum())


def forcing_mu(oracle: ObjectiveOracle, x: np.ndarray, L: float) -> float:
    """mu(x) = lambda(x) / (F(x) - F*); needs the recorded optimum."""
    xi = oracle.gap(x)
    if xi <= 0:
        raise OptimalPoint
    return forcing_lambda(oracle, x, L) / xi


def proportion_theta(
    oracle: ObjectiveOracle,
    x: np.ndarray,
    S: np.ndarray,
    L: Optional[float] = None,
) -> float:
    """Fraction of the full step's progress the block S captures.

    Smooth case: grad_S^T M_S^{-1} grad_S / ||grad||^2. Proximal case
    (scalar L model): sum_{i in S} lambda_i / (L sum_j lambda_j). Zero by
    convention when lambda(x) = 0.
    """
    S = np.asarray(S, dtype=int)
    if oracle.g is None:
        grad = oracle.f_gradient(x)
        denom = float(grad @ grad)
        if denom == 0.0:
            return 0.0
        gS = grad[S]
        return float(gS @ oracle.M.solve_block(S, gS)) / denom
    if L is None:
        raise ValueError("proximal proportion needs the scalar L in use")
    lam_i = forcing_lambda_components(oracle, x, L)
    total = float(lam_i.sum())
    if total == 0.0:
        return 0.0
    return float(lam_i[S].sum()) / (L * total)


# ---------------------------------------------------------------------------
# Block rules
# ---------------------------------------------------------------------------

FULL_BATCH = "full_batch"
SERIAL_UNIFORM = "serial_uniform"
SERIAL_IMPORTANCE = "serial_importance"
SERIAL_GREEDY = "serial_greedy"
TAU_NICE = "tau_nice"
GREEDY_MINIBATCH = "greedy_minibatch"

_RULES = (
    FULL_BATCH,
    SERIAL_UNIFORM,
    SERIAL_IMPORTANCE,
    SERIAL_GREEDY,
    TAU_NICE,
    GREEDY_MINIBATCH,
)

_GREEDY_EXACT_LIMIT = 10**5


@dataclass
class BlockRule:
    """Block-selection rule plus the scalar L nonsmooth steps use."""

    rule: str
    tau: int = 1
    L_override: Optional[float] = None

    def __post_init__(self):
        if self.rule not in _RULES:
            raise ValueError(f"unknown block rule {self.rule!r}")

    def block_size(self, n: int) -> int:
        if self.rule == FULL_BATCH:
            return n
        if self.rule in (TAU_NICE, GREEDY_MINIBATCH):
            return self.tau
        return 1

    def scalar_L(self, oracle: ObjectiveOracle) -> float:
        if self.L_override is not None:
            return self.L_override
        return oracle.M.L_for_block_size(oracle.n, self.block_size(oracle.n))


def _select_block(
    rule: BlockRule,
    oracle: ObjectiveOracle,
    x: np.ndarray,
    L: float,
    rng: Optional[np.random.Generator],
    heuristic_flag: list,
) -> np.ndarray:
    n = oracle.n
    name = rule.rule
    if name == FULL_BATCH:
        return np.arange(n)
    if name == SERIAL_UNIFORM:
        return np.array([int(rng.integers(n))])
    if name == SERIAL_IMPORTANCE:
        mii = oracle.M.diag(n)
        p = mii / mii.sum()
        return np.array([int(rng.choice(n, p=p))])
    if name == SERIAL_GREEDY:
        if oracle.g is None:
            scores = oracle.f_gradient(x) ** 2 / oracle.M.diag(n)
        else:
            scores = forcing_lambda_components(oracle, x, L)
        return np.array([int(np.argmax(scores))])
    if name == TAU_NICE:
        return np.sort(rng.choice(n, size=rule.tau, replace=False))
    # greedy minibatch
    if oracle.g is not None:
        lam_i = forcing_lambda_components(oracle, x, L)
        order = np.argsort(-lam_i, kind="stable")
        return np.sort(order[: rule.tau])
    if oracle.M.kind != "full":
        # diagonal model: top-tau scores is the exact maximizer
        scores = oracle.f_gradient(x) ** 2 / oracle.M.diag(n)
        order = np.argsort(-scores, kind="stable")
        return np.sort(order[: rule.tau])
    if math.comb(n, rule.tau) <= _GREEDY_EXACT_LIMIT:
        grad = oracle.f_gradient(x)
        best, best_val = None, -np.inf
        for S in combinations(range(n), rule.tau):
            idx = np.array(S)
            gS = grad[idx]
            val = float(gS @ oracle.M.solve_block(idx, gS))
            if val > best_val + 1e-15:
                best, best_val = idx, val
        return best
    heuristic_flag.append(True)
    scores = oracle.f_gradient(x) ** 2 / oracle.M.diag(n)
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[: rule.tau])


# ---------------------------------------------------------------------------
# The descent loop
# ---------------------------------------------------------------------------


@dataclass
class BlockTrace:
    """Per-iteration log of a block descent run."""

    xi: list = field(default_factory=list)  # gap before each step (if F* known)
    lam: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    status: str = "budget"
    heuristic: bool = False
    x_final: Optional[np.ndarray] = None
    F_final: float = np.nan

    def arrays(self):
        return (
            np.array(self.xi, dtype=float),
            np.array(self.lam, dtype=float),
            np.array(self.theta, dtype=float),
            np.array(self.mu, dtype=float),
        )


def block_descent_run(
    oracle: ObjectiveOracle,
    rule: BlockRule,
    budget: int,
    rng: Optional[np.random.Generator] = None,
    log_every: int = 1,
) -> BlockTrace:
    """Run proximal block descent for `budget` iterations.

    Smooth steps solve the block system M_S u = -grad_S exactly; proximal
    steps apply the 1-D prox coordinatewise with the rule's scalar L. The
    trace records, per logged iteration, the pre-step gap (when F* is
    known), lambda(x), theta(S, x), and mu(x); a vanished lambda(x) stops
    the run with status "stationary".
    """
    x = np.zeros(oracle.n)
    L = rule.scalar_L(oracle)
    heuristic_flag: list = []
    trace = BlockTrace()
    for k in range(budget):
        lam = forcing_lambda(oracle, x, L)
        if lam == 0.0:
            trace.status = "stationary"
            break
        S = _select_block(rule, oracle, x, L, rng, heuristic_flag)
        log_now = (k % log_every) == 0
        if log_now:
            theta = proportion_theta(oracle, x, S, L)
            trace.lam.append(lam)
            trace.theta.append(theta)
            if oracle.f_star is not None:
                xi = oracle.gap(x)
                trace.xi.append(xi)
                # at or below the reference optimum the ratio is undefined
                trace.mu.append(lam / xi if xi > 0 else np.nan)
            else:
                trace.xi.append(np.nan)
                trace.mu.append(np.nan)
        if oracle.g is None:
            gS = oracle.f_gradient(x)[S]
            x = x.copy()
            x[S] += -oracle.M.solve_block(S, gS)
        else:
            grad = oracle.f_gradient(x)
            x = x.copy()
            for i in S:
                x[i] += reg_prox_1d(oracle.g, float(x[i]), float(grad[i]), L)
    trace.heuristic = bool(heuristic_flag)
    trace.x_final = x
    trace.F_final = oracle.F_value(x)
    return trace


def run_with_lambda_min(
    oracle: ObjectiveOracle,
    rule: BlockRule,
    budget: int,
    rng: Optional[np.random.Generator],
) -> tuple[np.ndarray, float]:
    """Lean descent loop tracking only min_k lambda(x^k); returns (x, min)."""
    x = np.zeros(oracle.n)
    L = rule.scalar_L(oracle)
    lam_min = np.inf
    heuristic_flag: list = []
    for _ in range(budget):
        lam_i = forcing_lambda_components(oracle, x, L)
        lam = float(lam_i.sum())
        lam_min = min(lam_min, lam)
        if lam == 0.0:
            break
        S = _select_block(rule, oracle, x, L, rng, heuristic_flag)
        if oracle.g is None:
            gS = oracle.f_gradient(x)[S]
            x[S] += -oracle.M.solve_block(S, gS)
        else:
            grad = oracle.f_gradient(x)
            for i in S:
                x[i] += reg_prox_1d(oracle.g, float(x[i]), float(grad[i]), L)
    return x, lam_min


# ---------------------------------------------------------------------------
# Rule constants and predicted iteration counts
# ---------------------------------------------------------------------------


def expected_block_inverse(M: np.ndarray, tau: int) -> np.ndarray:
    """E over tau-subsets S of the zero-padded M_S^{-1} (exact enumeration)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    count = math.comb(n, tau)
    if count > 10**5:
        raise ValueError(f"too many subsets to enumerate: C({n},{tau})={count}")
    acc = np.zeros_like(M)
    for S in combinations(range(n), tau):
        idx = np.array(S)
        acc[np.ix_(idx, idx)] += np.linalg.inv(M[np.ix_(idx, idx)])
    return acc / count


def rule_constant(rule: BlockRule, oracle: ObjectiveOracle) -> float:
    """Iterate-independent lower bound c on theta (or its conditional mean)."""
    n = oracle.n
    mii = oracle.M.diag(n)
    smooth = oracle.g is None
    name = rule.rule
    if name == FULL_BATCH:
        return 1.0 / oracle.M.lmax(n)
    if name == SERIAL_UNIFORM:
        return 1.0 / (n * float(mii.max()))
    if name == SERIAL_IMPORTANCE:
        if not smooth:
            raise ValueError("importance serial bound is stated for smooth problems")
        return 1.0 / float(mii.sum())
    if name == SERIAL_GREEDY:
        if smooth:
            return 1.0 / float(mii.sum())
        return 1.0 / (n * float(mii.max()))
    # minibatch rules
    if smooth:
        lam_min = float(
            np.linalg.eigvalsh(expected_block_inverse(oracle.M.full(n), rule.tau))[0]
        )
        return lam_min
    L = rule.scalar_L(oracle)
    return rule.tau / (n * L)


STRONGLY_PL = "strongly_pl"
WEAKLY_PL = "weakly_pl"
NONCONVEX = "nonconvex"


def predicted_iterations(
    kind: str,
    c: float,
    xi0: float,
    eps: float,
    mu: Optional[float] = None,
    rho0: Optional[float] = None,
) -> int:
    """Iteration counts guaranteeing E[gap] <= eps for each function class.

    strongly_pl: ceil(log(xi0/eps) / (c mu)); weakly_pl:
    ceil(1 / (rho0 c eps)); nonconvex: ceil(xi0 log(xi0/eps) / (c eps)),
    after which either the gap or some logged lambda is below eps.
    """
    if kind == STRONGLY_PL:
        if mu is None:
            raise ValueError("strongly PL bound needs mu")
        return math.ceil(math.log(xi0 / eps) / (c * mu))
    if kind == WEAKLY_PL:
        if rho0 is None:
            raise ValueError("weakly PL bound needs rho(x0)")
        return math.ceil(1.0 / (rho0 * c * eps))
    if kind == NONCONVEX:
        return math.ceil(xi0 / (c * eps) * math.log(xi0 / eps))
    raise ValueError(f"unknown function class {kind!r}")


# ---------------------------------------------------------------------------
# Test objectives
# ---------------------------------------------------------------------------

PLATEAU_C = 2.145539290889752  # root of sqrt(c^4 - 1) = pi + arccos(1/c^2)


def _quadratic_objective(seed: int, n: int = 20, m: int = 40,
                         ridge: float = 0.1) -> ObjectiveOracle:
    rng = stream(seed, "objective", "quadratic")
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    Q = A.T @ A / m + ridge * np.eye(n)
    lin = A.T @ b / m

    def f(x):
        r = A @ x - b
        return float(r @ r) / (2 * m) + ridge / 2 * float(x @ x)

    def grad(x):
        return Q @ x - lin

    x_star = np.linalg.solve(Q, lin)
    return ObjectiveOracle(
        n=n,
        f_value=f,
        f_gradient=grad,
        M=SmoothnessModel(Q),
        f_star=f(x_star),
        x_star=x_star,
        name="quadratic",
    )


def _cosine_ls_objective(
    seed: int, n: int = 20, m: int = 100, l1: float = 0.0
) -> ObjectiveOracle:
    """Least squares with singular values linspace(1/m, 1) plus a cosine
    ripple, optionally with an l1 term."""
    rng = stream(seed, "objective", "cosine_ls")
    G = rng.standard_normal((m, n))
    U, _, Vt = np.linalg.svd(G, full_matrices=False)
    svals = np.linspace(1.0 / m, 1.0, n)
    A = U @ np.diag(svals) @ Vt
    y_plant = rng.standard_normal(n)
    b = A @ y_plant
    c = rng.standard_normal(n)
    AtA = A.T @ A
    Atb = A.T @ b
    M = AtA / m + (float(c @ c) / m) * np.eye(n)

    def f(x):
        r = A @ x - b
        return float(r @ r) / (2 * m) + math.cos(float(c @ x)) / m

    def grad(x):
        return (AtA @ x - Atb) / m - math.sin(float(c @ x)) / m * c

    g = Regularizer(kind="l1", weight=l1) if l1 > 0 else None
    return ObjectiveOracle(
        n=n, f_value=f, f_gradient=grad, M=SmoothnessModel(M), g=g, name="cosine_ls"
    )


def _freeze_reference_optimum(oracle: ObjectiveOracle, seed: int,
                              starts: int = 64, iters: int = 2000) -> ObjectiveOracle:
    """Best of many full-batch runs from random starts, frozen as F*."""
    rng = stream(seed, "objective", "reference")
    rule = BlockRule(rule=FULL_BATCH)
    L = rule.scalar_L(oracle)
    all_coords = np.arange(oracle.n)
    best_F, best_x = np.inf, None
    for _ in range(starts):
        x = rng.standard_normal(oracle.n) * 2.0
        for _ in range(iters):
            grad = oracle.f_gradient(x)
            if oracle.g is None:
                x = x - oracle.M.solve_block(all_coords, grad)
            elif oracle.g.kind == "l1":
                t = x - grad / L
                thr = oracle.g.weight / L
                x = np.sign(t) * np.maximum(np.abs(t) - thr, 0.0)
            else:
                x = x + np.array(
                    [
                        reg_prox_1d(oracle.g, float(x[i]), float(grad[i]), L)
                        for i in range(oracle.n)
                    ]
                )
        F = oracle.F_value(x)
        if F < best_F:
            best_F, best_x = F, x
    oracle.f_star = best_F
    oracle.x_star = best_x
    return oracle


def _wpl_product_objective() -> ObjectiveOracle:
    """f(x1, x2) = x1^2 x2^2, weakly PL with mu = 1 on any box."""

    def f(x):
        return float(x[0] ** 2 * x[1] ** 2)

    def grad(x):
        return np.array([2 * x[0] * x[1] ** 2, 2 * x[0] ** 2 * x[1]])

    # Gershgorin bound for the Hessian on [-5, 5]^2
    return ObjectiveOracle(
        n=2,
        f_value=f,
        f_gradient=grad,
        M=SmoothnessModel(150.0 * np.eye(2)),
        f_star=0.0,
        x_star=np.zeros(2),
        name="wpl_product",
        box=5.0,
    )


def huber(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) < 1.0, z * z, 2.0 * np.abs(z) - 1.0)


def huber_deriv(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) < 1.0, 2.0 * z, 2.0 * np.sign(z))


def _wpl_huber_objective() -> ObjectiveOracle:
    """f(x1, x2) = H(x1) H(x2) with the quadratic-core Huber H."""

    def f(x):
        return float(huber(x[0]) * huber(x[1]))

    def grad(x):
        return np.array(
            [
                float(huber_deriv(x[0]) * huber(x[1])),
                float(huber(x[0]) * huber_deriv(x[1])),
            ]
        )

    # |f''| <= 2 H(B) + cross 4 on [-B, B]^2, B = 5
    return ObjectiveOracle(
        n=2,
        f_value=f,
        f_gradient=grad,
        M=SmoothnessModel(22.0 * np.eye(2)),
        f_star=0.0,
        x_star=np.zeros(2),
        name="wpl_huber",
        box=5.0,
    )


def _plateau_objective() -> ObjectiveOracle:
    """1-D f(x) = (x - pi/c)^2/2 + cos(cx) + 1 with a flat inflection.

    The constant offset makes the optimum value 0, attained at x = pi/c;
    c is tuned so f' = f'' = 0 simultaneously at a second point, giving
    gradient descent a plateau to traverse.
    """
    c = PLATEAU_C
    x_opt = math.pi / c

    def f(x):
        t = float(x[0])
        return 0.5 * (t - x_opt) ** 2 + math.cos(c * t) + 1.0

    def grad(x):
        t = float(x[0])
        return np.array([(t - x_opt) - c * math.sin(c * t)])

    return ObjectiveOracle(
        n=1,
        f_value=f,
        f_gradient=grad,
        M=SmoothnessModel(np.array([[1.0 + c * c]])),
        f_star=0.0,
        x_star=np.array([x_opt]),
        name="plateau",
    )


def make_test_objective(kind: str, seed: int = 0, **kwargs) -> ObjectiveOracle:
    """Factory for the bundled benchmark objectives.

    Kinds: "quadratic" (strongly convex, closed-form optimum),
    "cosine_ls" (nonconvex least squares + cosine, optional l1 via
    l1=...; pass reference=True to freeze a multi-start reference
    optimum), "wpl_product" (x1^2 x2^2), "wpl_huber" (H(x1) H(x2)),
    "plateau" (1-D flat-inflection instance).
    """
    if kind == "quadratic":
        return _quadratic_objective(seed, **kwargs)
    if kind == "cosine_ls":
        reference = kwargs.pop("reference", False)
        oracle = _cosine_ls_objective(seed, **kwargs)
        if reference:
            oracle = _freeze_reference_optimum(oracle, seed)
        return oracle
    if kind == "wpl_product":
        return _wpl_product_objective()
    if kind == "wpl_huber":
        return _wpl_huber_objective()
    if kind == "plateau":
        return _plateau_objective()
    raise ValueError(f"unknown objective kind {kind!r}")
