"""Should coordinate descent run over features or over examples?

With importance sampling the total work to a fixed accuracy is
nnz + C/(n lambda gamma) on each side, where C weights every row
(respectively column) by its nonzero count times its squared norm. The
answer is a property of the data, not just of its shape.
"""

import numpy as np

from ermcd.faceoff import (
    binary_bounds,
    c_d,
    c_p,
    check_regime_theorems,
    total_complexities,
    worst_case_binary,
    worst_case_general,
)
from ermcd.sparse_data import SyntheticSpec, generate_synthetic

print("== A dense tall dataset: shape decides ==")
ds = generate_synthetic(
    SyntheticSpec(n=15, d=200, sparsity=1.0, norm_law="uniform", seed=1)
)
rep = total_complexities(ds.X, lam=1 / 15, gamma=4.0)
print(f"d=200, n=15 dense: T_P/T_D = {rep.ratio:.3f} -> {rep.recommended}")

print("\n== Arrowhead matrices stretch the ratio to its extremes ==")
d, n = 10, 5000
X = worst_case_general(d, n, 1.0, 1e-6, 1e-6)
print(f"heavy first column: C_P/C_D = {c_p(X) / c_d(X):.6f} (floor 1/d = {1/d})")
X = worst_case_general(d, n, 1e-6, 1.0, 1e-6)
print(f"heavy first row:    C_P/C_D = {c_p(X) / c_d(X):.1f} (ceiling n = {n})")

print("\n== Binary data: exact extremes at fixed density ==")
dd, nn, alpha = 6, 8, 17
b = binary_bounds(alpha, dd, nn)
print(f"{dd}x{nn} binary, {alpha} nonzeros: "
      f"C_D in [{b.min_c_d}, {b.max_c_d}], C_P in [{b.min_c_p}, {b.max_c_p}]")
X = worst_case_binary(dd, nn, alpha)
print(f"worst case for the dual side attains C_P={c_p(X):.0f}, C_D={c_d(X):.0f}")

print("\n== Density regimes with one-sided answers ==")
out = check_regime_theorems(d=20, n=4, alpha=28)
print(f"d=20, n=4, alpha=28: primal never worse? {out['primal_never_worse']} "
      f"(ratio bound {out['r_p']:.3f})")
