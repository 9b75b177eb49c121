"""Smooth losses with conjugates, simple regularizers with proximal maps.

Losses are (1/gamma)-smooth scalar functions of the margin s = <x_j, w>
with label y: quadratic (gamma=1), logistic (gamma=4, labels +-1), and
smoothed hinge (gamma = its smoothing parameter, labels +-1). Conjugate
evaluations use the phi*(-u) orientation that the dual objective needs;
out-of-domain arguments return +inf rather than raising, so the dual
objective stays total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

QUADRATIC = "quadratic"
LOGISTIC = "logistic"
SMOOTHED_HINGE = "smoothed_hinge"


@dataclass(frozen=True)
class Loss:
    kind: str
    gamma_sh: float = 1.0  # smoothed hinge parameter only

    def __post_init__(self):
        if self.kind not in (QUADRATIC, LOGISTIC, SMOOTHED_HINGE):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == SMOOTHED_HINGE and self.gamma_sh <= 0:
            raise ValueError("smoothed hinge needs gamma_sh > 0")

    @property
    def gamma(self) -> float:
        """Reciprocal smoothness constant: the loss is (1/gamma)-smooth."""
        if self.kind == QUADRATIC:
            return 1.0
        if self.kind == LOGISTIC:
            return 4.0
        return self.gamma_sh

    @property
    def binary_labels(self) -> bool:
        return self.kind in (LOGISTIC, SMOOTHED_HINGE)


def _check_labels(loss: Loss, y) -> None:
    if loss.binary_labels and not np.all(np.isin(np.asarray(y), (-1.0, 1.0))):
        raise ValueError(f"{loss.kind} loss requires labels in {{-1, +1}}")


def loss_value(loss: Loss, s, y):
    """phi(s) for margin s and label y; vectorized over arrays."""
    _check_labels(loss, y)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if loss.kind == QUADRATIC:
        return 0.5 * (s - y) ** 2
    if loss.kind == LOGISTIC:
        # log(1 + exp(-ys)) computed stably
        m = -y * s
        return np.logaddexp(0.0, m)
    g = loss.gamma_sh
    sy = s * y
    return np.where(
        sy > 1.0,
        0.0,
        np.where(sy < 1.0 - g, 1.0 - sy - g / 2.0, (1.0 - sy) ** 2 / (2.0 * g)),
    )


def loss_deriv(loss: Loss, s, y):
    """phi'(s), the derivative in the margin."""
    _check_labels(loss, y)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if loss.kind == QUADRATIC:
        return s - y
    if loss.kind == LOGISTIC:
        # -y / (1 + exp(ys)) computed stably
        return -y * expit(-y * s)
    g = loss.gamma_sh
    sy = s * y
    return np.where(sy > 1.0, 0.0, np.where(sy < 1.0 - g, -y, -y * (1.0 - sy) / g))


def loss_conj(loss: Loss, u, y):
    """phi*(-u); +inf outside the conjugate domain."""
    _check_labels(loss, y)
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if loss.kind == QUADRATIC:
        return -u * y + u**2 / 2.0
    uy = u * y
    if loss.kind == LOGISTIC:
        inside = (uy >= 0.0) & (uy <= 1.0)
        uy_c = np.clip(uy, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.where(uy_c > 0, uy_c * np.log(uy_c), 0.0) + np.where(
                uy_c < 1, (1.0 - uy_c) * np.log(1.0 - uy_c), 0.0
            )
        return np.where(inside, ent, np.inf)
    g = loss.gamma_sh
    inside = (uy >= 0.0) & (uy <= 1.0)
    return np.where(inside, -uy + g * u**2 / 2.0, np.inf)


def dual_delta(
    loss: Loss,
    alpha: float,
    inner: float,
    coeff: float,
    y: float,
    eta: Optional[float] = None,
) -> float:
    """Coordinate ascent step for the dual variable of one example.

    Maximizes -phi*(-(alpha+D)) - inner*D - coeff*D^2/2 over D, where
    coeff = v_j/(lambda n) > 0. Quadratic and smoothed hinge have closed
    forms (the hinge one clipped to the conjugate domain); logistic has
    none and uses the fixed-step surrogate D = -eta*(phi'(inner)+alpha)
    with the caller-supplied eta.
    """
    if coeff <= 0:
        raise ValueError(f"coeff must be positive, got {coeff}")
    if loss.kind == QUADRATIC:
        return (y - alpha - inner) / (1.0 + coeff)
    if loss.kind == SMOOTHED_HINGE:
        g = loss.gamma_sh
        unc = (y - g * alpha - inner) / (g + coeff)
        b = min(1.0, max(0.0, (alpha + unc) * y))
        return b * y - alpha
    if eta is None:
        raise ValueError("logistic dual step needs the surrogate step size eta")
    return -eta * (float(loss_deriv(loss, inner, y)) + alpha)


# ---------------------------------------------------------------------------
# Regularizers
# ---------------------------------------------------------------------------

L2 = "l2"
L1 = "l1"
BOX = "box"


@dataclass(frozen=True)
class Regularizer:
    """Separable regularizer: l2 (1-strongly convex, self-conjugate),
    l1 with a weight, or a box constraint with bound b."""

    kind: str = L2
    weight: float = 1.0  # l1 weight, or box bound

    def __post_init__(self):
        if self.kind not in (L2, L1, BOX):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.weight <= 0:
            raise ValueError("regularizer parameter must be positive")

    @property
    def strongly_convex(self) -> bool:
        return self.kind == L2

    def value(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=float)
        if self.kind == L2:
            return 0.5 * self.weight * float(w @ w)
        if self.kind == L1:
            return self.weight * float(np.abs(w).sum())
        return 0.0 if np.max(np.abs(w), initial=0.0) <= self.weight else np.inf

    def value_1d(self, x: float) -> float:
        if self.kind == L2:
            return 0.5 * self.weight * x * x
        if self.kind == L1:
            return self.weight * abs(x)
        return 0.0 if abs(x) <= self.weight else np.inf


def reg_prox_1d(reg: Optional[Regularizer], x: float, grad: float, L: float) -> float:
    """u minimizing grad*u + (L/2)u^2 + g(x+u) - g(x), for one coordinate.

    reg=None means g=0 (plain gradient step -grad/L). l2 here means
    g(x) = weight*x^2/2 with the weight already folded in by the caller.
    """
    if L <= 0:
        raise ValueError("step constant L must be positive")
    if reg is None:
        return -grad / L
    if reg.kind == L2:
        return -(grad + reg.weight * x) / (L + reg.weight)
    if reg.kind == L1:
        t = x - grad / L
        thr = reg.weight / L
        target = np.sign(t) * max(abs(t) - thr, 0.0)
        return float(target - x)
    b = reg.weight
    target = min(b, max(-b, x - grad / L))
    return float(target - x)


# ---------------------------------------------------------------------------
# Problems: P(w), D(alpha), duality gap
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    """Dataset + loss + regularizer + lambda.

    Dual coordinate methods require the l2 regularizer (w and the scaled
    dual average coincide); the generic block descent accepts any listed
    regularizer.
    """

    dataset: "Dataset"
    loss: Loss
    reg: Regularizer
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        _check_labels(self.loss, self.dataset.y)

    @property
    def n(self) -> int:
        return self.dataset.X.n

    @property
    def d(self) -> int:
        return self.dataset.X.d

    @property
    def nlg(self) -> float:
        """n * lambda * gamma, the recurring rate constant."""
        return self.n * self.lam * self.loss.gamma


def primal_value(problem: Problem, w: np.ndarray) -> float:
    X, y = problem.dataset.X, problem.dataset.y
    margins = X.rmatvec(w)
    avg_loss = float(np.mean(loss_value(problem.loss, margins, y)))
    return avg_loss + problem.lam * problem.reg.value(w)


def dual_value(problem: Problem, alpha: np.ndarray) -> float:
    """D(alpha) = -||X alpha||^2/(2 lambda n^2) - (1/n) sum phi*(-alpha_j).

    Requires the l2 regularizer. Conjugate domain violations contribute
    -inf (the gap component becomes +inf) instead of raising.
    """
    if problem.reg.kind != L2:
        raise ValueError("dual objective is defined for the l2 regularizer only")
    X, y = problem.dataset.X, problem.dataset.y
    n = problem.n
    xa = X.matvec(alpha)
    quad = float(xa @ xa) / (2.0 * problem.lam * n * n)
    conj = loss_conj(problem.loss, alpha, y)
    return -quad - float(np.sum(conj)) / n


def duality_gap(problem: Problem, w: np.ndarray, alpha: np.ndarray) -> float:
    return primal_value(problem, w) - dual_value(problem, alpha)
