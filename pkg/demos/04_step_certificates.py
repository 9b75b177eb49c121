"""Step-size certificates and their Monte-Carlo audit.

Every sampling ships a vector v certifying the expected blowup of block
updates. The checker estimates the left side of the inequality for
random directions and reports the worst standardized exceedance: honest
certificates score z << 3, a sabotaged one is flagged immediately.
"""

import numpy as np

from ermcd.eso import eso_mc_check, v_bucket, v_serial, v_tau_nice
from ermcd.rng import stream
from ermcd.sampling import (
    bucket_probs_practical,
    bucket_sampling,
    random_buckets,
    tau_nice_sampling,
    uniform_serial_sampling,
)
from ermcd.sparse_data import SyntheticSpec, generate_synthetic

ds = generate_synthetic(
    SyntheticSpec(n=20, d=10, sparsity=0.6, norm_law="uniform", seed=3)
)
X = ds.X

print("serial certificate (tight coordinate by coordinate):")
s = uniform_serial_sampling(20)
r = eso_mc_check(X, s, v_serial(X), trials=5000, h_draws=30, rng=stream(0, "mc"))
print(f"  max z = {r.max_violation_z:6.2f}  ->  {'ok' if r.passed else 'VIOLATED'}")

print("tau-nice certificate (tau = 5):")
s = tau_nice_sampling(20, 5)
r = eso_mc_check(X, s, v_tau_nice(X, 5), trials=5000, h_draws=30,
                 rng=stream(1, "mc"))
print(f"  max z = {r.max_violation_z:6.2f}  ->  {'ok' if r.passed else 'VIOLATED'}")

print("bucket certificate with reweighted probabilities:")
buckets = random_buckets(20, 4, stream(2, "b"))
p0 = np.empty(20)
for g in buckets.groups:
    p0[list(g)] = 1.0 / len(g)
p = bucket_probs_practical(v_bucket(X, buckets, p0), 1.0, buckets)
s = bucket_sampling(buckets, p)
r = eso_mc_check(X, s, v_bucket(X, buckets, p), trials=5000, h_draws=30,
                 rng=stream(3, "mc"))
print(f"  max z = {r.max_violation_z:6.2f}  ->  {'ok' if r.passed else 'VIOLATED'}")

print("negative control: serial certificate cut in half on dense data:")
dense = generate_synthetic(
    SyntheticSpec(n=20, d=10, sparsity=1.0, norm_law="uniform", seed=4)
)
s = uniform_serial_sampling(20)
r = eso_mc_check(dense.X, s, v_serial(dense.X) / 2, trials=5000, h_draws=30,
                 rng=stream(5, "mc"))
print(f"  max z = {r.max_violation_z:6.2f}  ->  {'ok' if r.passed else 'VIOLATED'}")
