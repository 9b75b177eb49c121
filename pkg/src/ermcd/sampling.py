"""Block-selection rules and the probability tree behind nonuniform draws.

The tree is a flat-array segment tree over n leaf weights: build costs
O(n), one draw or one weight update costs O(log n), and a draw returns
index i with probability weight_i / total exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ermcd.sparse_data import SparseMatrix


class OptimalityReached(Exception):
    """All dual residues vanished: the current iterate is optimal."""


class ProbabilityTree:
    """Sampling tree over nonnegative leaf weights.

    Single-writer: one solver run owns and mutates its tree. `ops` counts
    node touches so per-epoch cost accounting can include tree work.
    """

    def __init__(self, weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise ValueError("weights must be a nonempty 1-D sequence")
        if np.any(w < 0):
            raise ValueError("negative weight")
        if w.sum() <= 0:
            raise ValueError("all weights are zero")
        self.n = len(w)
        self._size = 1
        while self._size < self.n:
            self._size *= 2
        self._node = np.zeros(2 * self._size)
        self._node[self._size : self._size + self.n] = w
        for i in range(self._size - 1, 0, -1):
            self._node[i] = self._node[2 * i] + self._node[2 * i + 1]
        self.ops = self.n  # build cost proxy

    @property
    def total(self) -> float:
        return self._node[1]

    def weight(self, i: int) -> float:
        return self._node[self._size + i]

    def weights(self) -> np.ndarray:
        return self._node[self._size : self._size + self.n].copy()

    def sample(self, rng: np.random.Generator) -> int:
        """Draw an index proportionally to the leaf weights."""
        u = rng.random() * self.total
        i = 1
        while i < self._size:
            self.ops += 1
            left = self._node[2 * i]
            if u < left:
                i = 2 * i
            else:
                u -= left
                i = 2 * i + 1
        return i - self._size

    def update(self, i: int, new_weight: float) -> None:
        """Set leaf i to new_weight, repairing O(log n) ancestors."""
        if new_weight < 0:
            raise ValueError("negative weight")
        i += self._size
        self._node[i] = new_weight
        i //= 2
        while i >= 1:
            self.ops += 1
            self._node[i] = self._node[2 * i] + self._node[2 * i + 1]
            i //= 2
        if self.total <= 0:
            raise ValueError("all weights are zero after update")


def tree_build(weights) -> ProbabilityTree:
    return ProbabilityTree(weights)


def tree_sample(tree: ProbabilityTree, rng: np.random.Generator) -> int:
    return tree.sample(rng)


def tree_update(tree: ProbabilityTree, i: int, new_weight: float) -> None:
    tree.update(i, new_weight)


# ---------------------------------------------------------------------------
# Probability formulas
# ---------------------------------------------------------------------------


def importance_probs(v: np.ndarray, nlg: float) -> np.ndarray:
    """Fixed serial probabilities p_j proportional to v_j + n*lambda*gamma."""
    if nlg <= 0:
        raise ValueError("n*lambda*gamma must be positive")
    s = np.asarray(v, dtype=float) + nlg
    return s / s.sum()


def adasdca_probs(kappa: np.ndarray, v: np.ndarray, nlg: float) -> np.ndarray:
    """Adaptive probabilities p_j proportional to |kappa_j|*sqrt(v_j + nlg).

    Coherent by construction: p_j > 0 exactly where kappa_j != 0. An
    all-zero residue vector means the iterate is optimal and raises
    OptimalityReached.
    """
    kappa = np.asarray(kappa, dtype=float)
    w = np.abs(kappa) * np.sqrt(np.asarray(v, dtype=float) + nlg)
    total = w.sum()
    if total == 0:
        raise OptimalityReached
    return w / total


def theta_kappa_p(
    kappa: np.ndarray, p: np.ndarray, v: np.ndarray, nlg: float
) -> float:
    """Per-step progress coefficient of an adaptive dual update.

    theta = nlg * sum_{k!=0} kappa^2 / sum_{k!=0} kappa^2 (v+nlg)/p. The
    probability vector must be coherent with kappa (p_j > 0 wherever
    kappa_j != 0).
    """
    kappa = np.asarray(kappa, dtype=float)
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    live = kappa != 0
    if not live.any():
        raise OptimalityReached
    if np.any(p[live] <= 0):
        raise ValueError("p is not coherent with kappa (zero mass on a live residue)")
    k2 = kappa[live] ** 2
    num = nlg * k2.sum()
    den = float(np.sum(k2 * (v[live] + nlg) / p[live]))
    return num / den


# ---------------------------------------------------------------------------
# Partitions: chunks and buckets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of range(n) by nonempty groups."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.groups:
            if len(g) == 0:
                raise ValueError("empty group")
            for i in g:
                if i in seen:
                    raise ValueError(f"index {i} appears in two groups")
                seen.add(i)
        if seen != set(range(len(seen))):
            raise ValueError("groups do not cover a contiguous index range")

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def k(self) -> int:
        return len(self.groups)

    def group_of(self) -> np.ndarray:
        out = np.empty(self.n, dtype=int)
        for gi, g in enumerate(self.groups):
            out[list(g)] = gi
        return out


def naive_chunks(nnz_per_example: Sequence[int]) -> Partition:
    """Greedy contiguous grouping with per-group nnz budget max(nnz).

    A group absorbs the next example while its nnz sum stays within the
    budget; otherwise a new group starts. Every group satisfies
    sum(nnz) <= max(nnz) except singletons holding a maximal example.
    """
    u = np.asarray(nnz_per_example, dtype=int)
    if len(u) == 0 or np.any(u < 1):
        raise ValueError("need at least one example, all with nnz >= 1")
    m = int(u.max())
    groups: list[list[int]] = [[0]]
    s = int(u[0])
    for t in range(1, len(u)):
        if s + int(u[t]) <= m:
            groups[-1].append(t)
            s += int(u[t])
        else:
            groups.append([t])
            s = int(u[t])
    return Partition(tuple(tuple(g) for g in groups))


def random_buckets(n: int, tau: int, rng: np.random.Generator) -> Partition:
    """Uniform random partition into tau buckets, sizes differing by <= 1."""
    if not (1 <= tau <= n):
        raise ValueError(f"need 1 <= tau <= n, got tau={tau}, n={n}")
    perm = rng.permutation(n)
    return Partition(tuple(tuple(int(i) for i in part) for part in np.array_split(perm, tau)))


def bucket_probs_practical(
    v_unif: np.ndarray, nlg: float, buckets: Partition
) -> np.ndarray:
    """Within-bucket importance reweighting p_j ~ (nlg + v_unif_j)."""
    v_unif = np.asarray(v_unif, dtype=float)
    p = np.empty(buckets.n)
    for g in buckets.groups:
        idx = list(g)
        s = nlg + v_unif[idx]
        p[idx] = s / s.sum()
    return p


def bucket_probs_alternating(
    X: SparseMatrix,
    buckets: Partition,
    nlg: float,
    tol: float = 1e-10,
    max_iter: int = 100,
):
    """Alternating optimization of (p, v) for a bucket sampling.

    Alternates the certified v for the current p with the within-bucket
    reweighting p_j ~ (nlg + v_j) until the max elementwise change in p
    drops below tol. Returns (p, v, deltas) where deltas records the
    per-sweep max changes; a warning is attached via the deltas when the
    iteration budget runs out.
    """
    from ermcd.eso import v_bucket  # local import to avoid a cycle

    p = bucket_probs_practical(np.zeros(buckets.n), nlg, buckets)  # uniform start
    deltas: list[float] = []
    for _ in range(max_iter):
        v = v_bucket(X, buckets, p)
        p_new = bucket_probs_practical(v, nlg, buckets)
        delta = float(np.max(np.abs(p_new - p)))
        deltas.append(delta)
        p = p_new
        if delta <= tol:
            break
    else:
        import warnings

        warnings.warn(
            f"alternating optimization hit max_iter={max_iter} "
            f"(last delta {deltas[-1]:.2e})",
            RuntimeWarning,
        )
    v = v_bucket(X, buckets, p)
    return p, v, deltas


# ---------------------------------------------------------------------------
# Sampling descriptors and block draws
# ---------------------------------------------------------------------------

SERIAL = "serial"
TAU_NICE = "tau_nice"
BUCKET = "bucket"
CHUNKED = "chunked"
GREEDY_SERIAL = "greedy_serial"
GREEDY_MINIBATCH = "greedy_minibatch"

_GREEDY_EXACT_LIMIT = 10**5


@dataclass
class Sampling:
    """Descriptor of a block-selection rule over range(n).

    Immutable in spirit: solvers treat it as shared read-only state and
    own any per-run trees themselves. `v`, `u`, and `L_tau` cache the
    step-size parameters computed by the eso module.
    """

    rule: str
    n: int
    p: Optional[np.ndarray] = None  # serial probabilities, or bucket marginals
    tau: Optional[int] = None
    buckets: Optional[Partition] = None
    groups: Optional[Partition] = None  # chunked
    v: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    L_tau: Optional[float] = None
    heuristic: bool = False  # greedy minibatch fell back to top-tau scores
    _trees: Optional[list[ProbabilityTree]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.rule == SERIAL:
            p = np.asarray(self.p, dtype=float)
            if p.shape != (self.n,) or np.any(p < 0):
                raise ValueError("serial sampling needs a nonnegative p of length n")
            if not math.isclose(p.sum(), 1.0, rel_tol=1e-9):
                raise ValueError("serial probabilities must sum to 1")
            self.p = p
        elif self.rule == TAU_NICE:
            if not (1 <= int(self.tau) <= self.n):
                raise ValueError("tau-nice needs 1 <= tau <= n")
            self.p = np.full(self.n, self.tau / self.n)
        elif self.rule == BUCKET:
            if self.buckets is None or self.buckets.n != self.n:
                raise ValueError("bucket sampling needs a partition of range(n)")
            p = np.asarray(self.p, dtype=float)
            for g in self.buckets.groups:
                if not math.isclose(p[list(g)].sum(), 1.0, rel_tol=1e-9):
                    raise ValueError("bucket probabilities must sum to 1 per bucket")
            self.p = p
            self.tau = self.buckets.k
        elif self.rule == CHUNKED:
            if self.groups is None or self.groups.n != self.n:
                raise ValueError("chunked sampling needs a partition of range(n)")
            if not (1 <= int(self.tau) <= self.groups.k):
                raise ValueError("chunked sampling needs 1 <= tau <= #groups")
            marg = np.empty(self.n)
            for g in self.groups.groups:
                marg[list(g)] = self.tau / self.groups.k
            self.p = marg
        elif self.rule in (GREEDY_SERIAL, GREEDY_MINIBATCH):
            if self.rule == GREEDY_MINIBATCH and not (1 <= int(self.tau) <= self.n):
                raise ValueError("greedy minibatch needs 1 <= tau <= n")
        else:
            raise ValueError(f"unknown sampling rule {self.rule!r}")

    @property
    def expected_block_size(self) -> float:
        if self.rule == SERIAL:
            return 1.0
        if self.rule == GREEDY_SERIAL:
            return 1.0
        if self.rule in (TAU_NICE, GREEDY_MINIBATCH):
            return float(self.tau)
        if self.rule == BUCKET:
            return float(self.buckets.k)
        sizes = [len(g) for g in self.groups.groups]
        return float(self.tau) * sum(sizes) / len(sizes)

    def serial_tree(self) -> ProbabilityTree:
        if self._trees is None:
            self._trees = [ProbabilityTree(self.p)]
        return self._trees[0]

    def bucket_trees(self) -> list[ProbabilityTree]:
        if self._trees is None:
            self._trees = [
                ProbabilityTree(self.p[list(g)]) for g in self.buckets.groups
            ]
        return self._trees


def serial_sampling(p: np.ndarray) -> Sampling:
    return Sampling(rule=SERIAL, n=len(p), p=np.asarray(p, dtype=float))


def uniform_serial_sampling(n: int) -> Sampling:
    return serial_sampling(np.full(n, 1.0 / n))


def tau_nice_sampling(n: int, tau: int) -> Sampling:
    return Sampling(rule=TAU_NICE, n=n, tau=tau)


def bucket_sampling(buckets: Partition, p: np.ndarray) -> Sampling:
    return Sampling(rule=BUCKET, n=buckets.n, p=p, buckets=buckets)


def chunked_sampling(groups: Partition, tau: int) -> Sampling:
    return Sampling(rule=CHUNKED, n=groups.n, tau=tau, groups=groups)


def _top_tau(scores: np.ndarray, tau: int) -> np.ndarray:
    # stable sort so ties resolve to the lowest index
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    return np.sort(order[:tau])


def draw_block(
    sampling: Sampling,
    rng: Optional[np.random.Generator] = None,
    scores: Optional[np.ndarray] = None,
    grad: Optional[np.ndarray] = None,
    M=None,
) -> np.ndarray:
    """Draw one block of indices according to the sampling rule.

    Randomized rules need `rng`. greedy_serial needs per-coordinate
    `scores` ((grad_i)^2 / M_ii for smooth problems, lambda_i for
    proximal ones) and picks the argmax, lowest index on ties.
    greedy_minibatch picks the top-tau scores unless `grad` and `M` are
    supplied and the subset count is small enough to enumerate the exact
    block quadratic-form maximizer.
    """
    rule = sampling.rule
    if rule == SERIAL:
        return np.array([sampling.serial_tree().sample(rng)])
    if rule == TAU_NICE:
        return np.sort(rng.choice(sampling.n, size=sampling.tau, replace=False))
    if rule == BUCKET:
        trees = sampling.bucket_trees()
        out = [
            sampling.buckets.groups[b][t.sample(rng)] for b, t in enumerate(trees)
        ]
        return np.sort(np.array(out))
    if rule == CHUNKED:
        picked = rng.choice(sampling.groups.k, size=sampling.tau, replace=False)
        out: list[int] = []
        for g in picked:
            out.extend(sampling.groups.groups[g])
        return np.sort(np.array(out))
    if scores is None and grad is None:
        raise ValueError(f"{rule} needs scores or (grad, M)")
    if rule == GREEDY_SERIAL:
        if scores is None:
            scores = np.asarray(grad, dtype=float) ** 2 / _diag_of(M, sampling.n)
        return np.array([int(np.argmax(scores))])
    # greedy minibatch
    tau = sampling.tau
    if grad is not None and M is not None and not _is_diagonal(M):
        n = sampling.n
        if math.comb(n, tau) <= _GREEDY_EXACT_LIMIT:
            sampling.heuristic = False
            return _greedy_exact(np.asarray(grad, dtype=float), M, tau)
        sampling.heuristic = True
        scores = np.asarray(grad, dtype=float) ** 2 / _diag_of(M, n)
        return _top_tau(scores, tau)
    if scores is None:
        scores = np.asarray(grad, dtype=float) ** 2 / _diag_of(M, sampling.n)
    return _top_tau(scores, tau)


def _diag_of(M, n: int) -> np.ndarray:
    if M is None:
        return np.ones(n)
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        return np.full(n, float(M))
    if M.ndim == 1:
        return M
    return np.diag(M)


def _is_diagonal(M) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim < 2:
        return True
    return bool(np.all(M == np.diag(np.diag(M))))


def _greedy_exact(grad: np.ndarray, M, tau: int) -> np.ndarray:
    from itertools import combinations

    M = np.asarray(M, dtype=float)
    best, best_val = None, -np.inf
    for S in combinations(range(len(grad)), tau):
        idx = list(S)
        g = grad[idx]
        val = float(g @ np.linalg.solve(M[np.ix_(idx, idx)], g))
        if val > best_val + 1e-15:
            best, best_val = idx, val
    return np.array(best)
