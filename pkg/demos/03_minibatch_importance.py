"""Importance sampling for minibatches: uniform tau-subsets vs the
bucket reweighting, on data with one heavy example.

The predicted speedup is the ratio of the two certified rates; the
measured speedup is the ratio of effective passes at the target gap.
"""

import numpy as np

from ermcd.eso import attach_eso, theta_tau_importance, theta_tau_nice, v_bucket
from ermcd.losses import Loss, Problem, Regularizer
from ermcd.primal_solvers import dfsdca_run
from ermcd.rng import stream
from ermcd.sampling import bucket_sampling, random_buckets, tau_nice_sampling
from ermcd.sparse_data import SyntheticSpec, generate_synthetic

n, d, tau = 1000, 200, 8
TARGET = 1e-8

ds = generate_synthetic(
    SyntheticSpec(n=n, d=d, sparsity=0.8, norm_law="extreme",
                  law_param=100.0, seed=21)
)
prob = Problem(ds, Loss("quadratic"), Regularizer("l2"), 0.1)
nlg = prob.nlg

theta_nice = theta_tau_nice(ds.X, tau, nlg)
buckets = random_buckets(n, tau, stream(0, "demo-buckets"))
theta_imp, p_star = theta_tau_importance(ds.X, buckets, nlg)
print(f"certified rates: tau-nice {theta_nice:.2e}, reweighted {theta_imp:.2e}")
print(f"predicted speedup: {theta_imp / theta_nice:.2f}x\n")

ratios = []
for seed in range(3):
    s_imp = bucket_sampling(buckets, p_star)
    s_imp.v = v_bucket(ds.X, buckets, p_star)
    s_nice = attach_eso(ds.X, tau_nice_sampling(n, tau))
    t_imp = dfsdca_run(prob, s_imp, 300, stream(seed, "imp"), target_gap=TARGET)
    t_nice = dfsdca_run(prob, s_nice, 300, stream(seed, "nice"), target_gap=TARGET)
    xi = t_imp.crossing(TARGET)
    xn = t_nice.crossing(TARGET)
    ratios.append(xn / xi)
    print(f"seed {seed}: passes to {TARGET:g}: "
          f"reweighted {xi:.1f}, tau-nice {xn:.1f} ({xn / xi:.2f}x)")

print(f"\nmeasured speedup {np.mean(ratios):.2f}x "
      f"vs predicted {theta_imp / theta_nice:.2f}x")
