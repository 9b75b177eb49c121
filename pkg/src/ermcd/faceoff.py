"""Primal-vs-dual coordinate descent cost comparison.

The decision quantities are C_P = sum_i nnz(row_i) ||row_i||^2 and
C_D = sum_j nnz(col_j) ||col_j||^2: with importance sampling the total
work to a fixed accuracy is nnz(X) + C/(n lambda gamma) on each side, so
their ratio decides which space to iterate in. Binary matrices admit
exact extremal formulas (L for the minimum, U for the maximum at fixed
nonzero count), with constructions attaining them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ermcd.sparse_data import SparseMatrix


def c_p(X: SparseMatrix) -> float:
    """sum_i ||X_i:||_0 ||X_i:||^2 over feature rows."""
    return float((X.row_nnz() * X.row_norms_sq()).sum())


def c_d(X: SparseMatrix) -> float:
    """sum_j ||X_:j||_0 ||X_:j||^2 over example columns."""
    return float((X.col_nnz() * X.col_norms_sq()).sum())


@dataclass
class FaceoffReport:
    sampling: str
    c_p: float
    c_d: float
    k_p: float  # iterations modulo the log factor
    k_d: float
    w_p: float  # expected cost of one iteration
    w_d: float
    t_p: float
    t_d: float

    @property
    def ratio(self) -> float:
        return self.t_p / self.t_d

    @property
    def recommended(self) -> str:
        return "primal" if self.t_p <= self.t_d else "dual"

    def to_dict(self) -> dict:
        return {
            "sampling": self.sampling,
            "c_p": self.c_p,
            "c_d": self.c_d,
            "k_p": self.k_p,
            "k_d": self.k_d,
            "w_p": self.w_p,
            "w_d": self.w_d,
            "t_p": self.t_p,
            "t_d": self.t_d,
            "ratio": self.ratio,
            "recommended": self.recommended,
        }


def total_complexities(
    X: SparseMatrix, lam: float, gamma: float, sampling: str = "importance"
) -> FaceoffReport:
    """Iteration counts, per-iteration costs, and totals for both sides.

    K is the max over coordinates of (s_i + n lambda gamma)/(p_i n lambda
    gamma) with s the serial step parameters, W the expected touched
    nonzeros per iteration, T = K W. Requires no zero rows or columns.
    """
    if sampling not in ("uniform", "importance"):
        raise ValueError(f"sampling must be uniform or importance, got {sampling!r}")
    row_nnz, col_nnz = X.row_nnz(), X.col_nnz()
    if np.any(row_nnz == 0) or np.any(col_nnz == 0):
        raise ValueError("matrix has zero rows or columns; the bounds assume none")
    n = X.n
    nlg = n * lam * gamma
    u = X.row_norms_sq()
    v = X.col_norms_sq()
    if sampling == "uniform":
        p = np.full(X.d, 1.0 / X.d)
        q = np.full(n, 1.0 / n)
    else:
        p = (u + nlg) / (u + nlg).sum()
        q = (v + nlg) / (v + nlg).sum()
    k_p = float(np.max((u + nlg) / (p * nlg)))
    k_d = float(np.max((v + nlg) / (q * nlg)))
    w_p = float(p @ row_nnz)
    w_d = float(q @ col_nnz)
    return FaceoffReport(
        sampling=sampling,
        c_p=c_p(X),
        c_d=c_d(X),
        k_p=k_p,
        k_d=k_d,
        w_p=w_p,
        w_d=w_d,
        t_p=k_p * w_p,
        t_d=k_d * w_d,
    )


def total_complexity_ratio_from_stats(
    nnz: float, cp: float, cd: float, n: int, lam: float, gamma: float
) -> float:
    """T_P/T_D under importance sampling from summary statistics alone.

    T_side = nnz + C_side / (n lambda gamma); useful when only the
    aggregate counts of a dataset are known.
    """
    nlg = n * lam * gamma
    return (nnz + cp / nlg) / (nnz + cd / nlg)


def optimal_serial_probs(
    X: SparseMatrix, lam: float, gamma: float, side: str
) -> np.ndarray:
    """The serial sampling minimizing total complexity on the given side.

    Probabilities proportional to s_i + n lambda gamma, which equalizes
    s_i/p_i across coordinates (the stationarity the optimum requires).
    """
    n = X.n
    nlg = n * lam * gamma
    if side == "primal":
        s = X.row_norms_sq() + nlg
    elif side == "dual":
        s = X.col_norms_sq() + nlg
    else:
        raise ValueError(f"side must be primal or dual, got {side!r}")
    return s / s.sum()


# ---------------------------------------------------------------------------
# Binary extremal theory
# ---------------------------------------------------------------------------


def _bar(a: int, b: int) -> int:
    """a rounded down to the closest multiple of b."""
    return b * (a // b)


def L_bound(alpha: int, b: int) -> int:
    """Minimum of sum of squared counts over b groups totalling alpha."""
    ab = _bar(alpha, b)
    num = ab * ab + (alpha - ab) * (2 * ab + b)
    assert num % b == 0
    return num // b


def U_bound(alpha: int, p: int, q: int) -> int:
    """Maximum of the same sum: U(alpha, p, q) with the printed argument
    order, so U(alpha, n, d) maximizes C_D and U(alpha, d, n) maximizes
    C_P on d x n binary matrices with alpha nonzeros."""
    ab = _bar(alpha - p, q - 1)
    return (q + 1) * ab + p - 1 + (alpha - p + 1 - ab) ** 2


@dataclass(frozen=True)
class BinaryBounds:
    min_c_d: int  # L(alpha, n)
    min_c_p: int  # L(alpha, d)
    max_c_d: int  # U(alpha, n, d)
    max_c_p: int  # U(alpha, d, n)
    r_p: float  # U(alpha, d, n) / L(alpha, n): upper bound on C_P/C_D
    r_d: float  # U(alpha, n, d) / L(alpha, d): upper bound on C_D/C_P


def binary_bounds(alpha: int, d: int, n: int) -> BinaryBounds:
    """Exact extremes of C_D and C_P over signed-binary d x n matrices
    with no zero rows/columns and exactly alpha nonzeros."""
    if d < 2 or n < 2:
        raise ValueError("bounds are defined for d >= 2 and n >= 2")
    if not (max(d, n) <= alpha <= d * n):
        raise ValueError(f"alpha={alpha} infeasible for {d}x{n}")
    min_cd = L_bound(alpha, n)
    min_cp = L_bound(alpha, d)
    max_cd = U_bound(alpha, n, d)
    max_cp = U_bound(alpha, d, n)
    return BinaryBounds(
        min_c_d=min_cd,
        min_c_p=min_cp,
        max_c_d=max_cd,
        max_c_p=max_cp,
        r_p=max_cp / min_cd,
        r_d=max_cd / min_cp,
    )


def check_regime_theorems(d: int, n: int, alpha: int) -> dict:
    """Which density regimes apply at (d, n, alpha), and what they imply.

    - primal_never_worse: d >= n and alpha >= n^2 + 3n forces
      C_P <= C_D (the ratio bound R drops below 1); dual_never_worse is
      the symmetric statement.
    - primal_can_win / dual_can_win: the quadratic-range condition under
      which a matrix with the respective strict inequality exists.
    """
    out: dict = {"d": d, "n": n, "alpha": alpha}
    bounds = binary_bounds(alpha, d, n)
    out["r_p"] = bounds.r_p
    out["r_d"] = bounds.r_d
    out["primal_never_worse"] = d >= n and alpha >= n * n + 3 * n
    out["dual_never_worse"] = n >= d and alpha >= d * d + 3 * d
    if out["primal_never_worse"]:
        out["r_p_le_1"] = bounds.r_p <= 1.0
    if out["dual_never_worse"]:
        out["r_d_le_1"] = bounds.r_d <= 1.0
    out["primal_can_win"] = d <= n <= d * d / 4 - 1.5 * d - 1
    out["dual_can_win"] = n <= d <= n * n / 4 - 1.5 * n - 1
    out["primal_always"] = d >= n * n + 3 * n
    out["dual_always"] = n >= d * d + 3 * d
    return out


def worst_case_general(d: int, n: int, a: float, b: float, c: float) -> SparseMatrix:
    """Arrowhead matrix: first column a below the corner, first row b
    beyond it, corner c. Drives C_P/C_D to its extremes as two of the
    three magnitudes vanish."""
    if a == 0 or b == 0 or c == 0:
        raise ValueError("all three magnitudes must be nonzero")
    rows = [0] + list(range(1, d)) + [0] * (n - 1)
    cols = [0] + [0] * (d - 1) + list(range(1, n))
    vals = [c] + [a] * (d - 1) + [b] * (n - 1)
    return SparseMatrix.from_coo(d, n, rows, cols, vals)


def worst_case_binary(d: int, n: int, alpha: int) -> SparseMatrix:
    """Binary matrix attaining max C_P and min C_D simultaneously.

    Rows take the extremal count profile (full rows, one partial row,
    singleton rows); entries are then placed greedily into the least
    filled columns, which balances column counts without touching the
    row profile.
    """
    if d < 2 or n < 2:
        raise ValueError("construction needs d >= 2 and n >= 2")
    if not (max(d, n) <= alpha <= d * n):
        raise ValueError(f"alpha={alpha} infeasible for {d}x{n}")
    # row profile maximizing sum of squared row counts:
    # a_full rows of n, one row of b (1 <= b <= n-1 unless forced), rest 1
    rem = alpha - d
    a_full = rem // (n - 1)
    b = rem - a_full * (n - 1) + 1
    if a_full > d - 1:
        a_full, b = d - 1, n  # fully dense corner case
    counts = [n] * a_full + [b] + [1] * (d - a_full - 1)
    col_fill = np.zeros(n, dtype=int)
    rows_out: list[int] = []
    cols_out: list[int] = []
    for i, r in enumerate(counts):
        # least-filled columns first; stable order keeps determinism
        order = np.argsort(col_fill, kind="stable")[:r]
        for j in order:
            rows_out.append(i)
            cols_out.append(int(j))
            col_fill[j] += 1
    if np.any(col_fill == 0):
        raise AssertionError("construction left an empty column")
    return SparseMatrix.from_coo(d, n, rows_out, cols_out, np.ones(len(rows_out)))
