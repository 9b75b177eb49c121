import numpy as np
import pytest

from conftest import random_sparse
from ermcd.eso import (
    L_tau,
    attach_eso,
    beta_factors,
    eso_mc_check,
    speedup_sigma,
    theta_tau_importance,
    theta_tau_nice,
    u_serial,
    v_bucket,
    v_chunked,
    v_serial,
    v_tau_nice,
)
from ermcd.rng import stream
from ermcd.sampling import (
    Partition,
    bucket_probs_practical,
    bucket_sampling,
    chunked_sampling,
    naive_chunks,
    random_buckets,
    serial_sampling,
    tau_nice_sampling,
    uniform_serial_sampling,
)
from ermcd.sparse_data import SparseMatrix, col_stats, row_stats


class TestSerialParams:
    def test_identity_like(self):
        X = SparseMatrix.from_dense(np.eye(4))
        assert np.allclose(v_serial(X), 1.0)

    def test_single_column(self):
        X = SparseMatrix.from_dense([[2.0], [3.0]])
        assert np.allclose(v_serial(X), [13.0])

    def test_matches_col_stats(self):
        X = random_sparse(6, 9, 0.5, seed=0)
        assert np.allclose(v_serial(X), col_stats(X)[0])
        assert np.allclose(u_serial(X), row_stats(X)[0])


class TestTauNice:
    def test_tau_one_is_serial(self):
        X = random_sparse(5, 8, 0.6, seed=1)
        assert np.allclose(v_tau_nice(X, 1), v_serial(X))

    def test_dense_full_tau(self):
        X = random_sparse(4, 6, 1.0, seed=2)
        assert np.allclose(v_tau_nice(X, 6), 6 * v_serial(X))

    def test_hand_example_2x2(self):
        X = SparseMatrix.from_dense([[1.0, 1.0], [0.0, 1.0]])
        assert np.allclose(v_tau_nice(X, 2), [2.0, 3.0])

    def test_monotone_in_tau(self):
        X = random_sparse(7, 10, 0.4, seed=3)
        prev = v_tau_nice(X, 1)
        for tau in range(2, 11):
            cur = v_tau_nice(X, tau)
            assert np.all(cur >= prev - 1e-12)
            prev = cur


class TestBucketParams:
    def test_one_bucket_is_serial(self):
        X = random_sparse(5, 6, 0.7, seed=4)
        part = Partition((tuple(range(6)),))
        p = np.full(6, 1 / 6)
        assert np.allclose(v_bucket(X, part, p), v_serial(X))

    def test_rows_in_single_bucket_reduce_to_serial(self):
        # block-diagonal support: every row touches exactly one bucket
        dense = np.zeros((4, 6))
        dense[:2, :3] = 1.0
        dense[2:, 3:] = 2.0
        X = SparseMatrix.from_dense(dense)
        part = Partition(((0, 1, 2), (3, 4, 5)))
        p = np.full(6, 1 / 3)
        assert np.allclose(v_bucket(X, part, p), v_serial(X))

    def test_uniform_p_equal_buckets_closed_form(self):
        X = random_sparse(6, 8, 0.5, seed=5)
        part = random_buckets(8, 2, stream(0, "b"))
        p = np.full(8, 2 / 8)
        got = v_bucket(X, part, p)
        # independent evaluation of the uniform-bucket formula
        group_of = part.group_of()
        want = np.zeros(8)
        for j in range(8):
            idx, val = X.col(j)
            for i, xv in zip(idx, val):
                ridx, _ = X.row(i)
                omega = len(np.unique(group_of[ridx]))
                Ji = len(ridx)
                want[j] += (1 + (1 - 1 / omega) * 2 * Ji / 8) * xv * xv
        assert np.allclose(got, want)


class TestLTau:
    def test_tau_one(self):
        M = np.diag([1.0, 5.0, 2.0]) + 0.1
        assert np.isclose(L_tau(M, 1).value, np.max(np.diag(M)))

    def test_tau_n_is_lambda_max(self):
        rng = stream(1, "m")
        A = rng.standard_normal((4, 4))
        M = A @ A.T + np.eye(4)
        r = L_tau(M, 4)
        assert r.exact
        assert np.isclose(r.value, np.linalg.eigvalsh(M)[-1])

    def test_identity_exact_not_bound(self):
        r = L_tau(np.eye(6), 3)
        assert r.exact and np.isclose(r.value, 1.0)  # trace bound would say 3

    def test_bound_mode_flagged(self):
        rng = stream(2, "m")
        A = rng.standard_normal((30, 30))
        M = A @ A.T + np.eye(30)
        r = L_tau(M, 15)  # C(30,15) is astronomically large
        assert not r.exact
        assert r.value >= np.linalg.eigvalsh(M)[-1] - 1e-9

    def test_sandwich(self):
        rng = stream(3, "m")
        A = rng.standard_normal((7, 7))
        M = A @ A.T + 0.5 * np.eye(7)
        l1 = L_tau(M, 1).value
        l3 = L_tau(M, 3).value
        ln = L_tau(M, 7).value
        assert l1 <= l3 <= ln


class TestSigmaAndBeta:
    def test_equal_norms(self):
        X = SparseMatrix.from_dense(np.eye(5))
        assert np.isclose(speedup_sigma(X), 1.0)

    def test_two_columns(self):
        X = SparseMatrix.from_dense([[1.0, np.sqrt(3.0)]])
        assert np.isclose(speedup_sigma(X), 1.5)

    def test_beta_uniform_within_buckets(self):
        # equal v within each bucket -> p* uniform -> s = v_unif -> beta = 1
        X = SparseMatrix.from_dense(np.ones((3, 4)))
        part = Partition(((0, 1), (2, 3)))
        p_unif = np.full(4, 0.5)
        v_unif = v_bucket(X, part, p_unif)
        p_star = bucket_probs_practical(v_unif, 1.0, part)
        beta = beta_factors(X, part, p_star, 1.0, v_unif)
        assert np.allclose(beta, 1.0)

    def test_beta_singleton_buckets(self):
        X = random_sparse(4, 3, 0.9, seed=6)
        part = Partition(((0,), (1,), (2,)))
        p_unif = np.ones(3)
        v_unif = v_bucket(X, part, p_unif)
        p_star = bucket_probs_practical(v_unif, 1.0, part)
        beta = beta_factors(X, part, p_star, 1.0, v_unif)
        assert np.allclose(beta, 1.0)

    def test_beta_sanity_band_random(self):
        X = random_sparse(20, 60, 0.4, seed=7)
        part = random_buckets(60, 4, stream(4, "b"))
        p_unif = np.empty(60)
        for g in part.groups:
            p_unif[list(g)] = 1.0 / len(g)
        v_unif = v_bucket(X, part, p_unif)
        p_star = bucket_probs_practical(v_unif, 1.0, part)
        beta = beta_factors(X, part, p_star, 1.0, v_unif)
        assert np.all(beta >= 1.0 - 1e-12)  # reweighting can only add overlap mass
        assert np.all(beta < 3.0)


class TestMcCheck:
    def test_serial_tight(self):
        X = random_sparse(10, 20, 0.5, seed=8)
        s = uniform_serial_sampling(20)
        r = eso_mc_check(X, s, v_serial(X), trials=2000, h_draws=20, rng=stream(5, "mc"))
        assert r.max_violation_z <= 3.0

    def test_bucket_valid(self):
        X = random_sparse(10, 20, 0.6, seed=9)
        part = random_buckets(20, 4, stream(6, "b"))
        rjit = stream(7, "p")
        p = np.empty(20)
        for g in part.groups:
            raw = rjit.random(len(g)) + 0.2
            p[list(g)] = raw / raw.sum()
        s = bucket_sampling(part, p)
        v = v_bucket(X, part, p)
        r = eso_mc_check(X, s, v, trials=2000, h_draws=20, rng=stream(8, "mc"))
        assert r.max_violation_z <= 3.0

    def test_tau_nice_valid(self):
        X = random_sparse(10, 20, 0.3, seed=10)
        s = tau_nice_sampling(20, 5)
        r = eso_mc_check(X, s, v_tau_nice(X, 5), trials=2000, h_draws=20, rng=stream(9, "mc"))
        assert r.max_violation_z <= 3.0

    def test_chunked_conservative_valid(self):
        X = random_sparse(8, 15, 0.5, seed=11)
        groups = naive_chunks(X.col_nnz())
        s = chunked_sampling(groups, 2)
        r = eso_mc_check(X, s, v_chunked(X, groups, 2), trials=2000, h_draws=20,
                         rng=stream(10, "mc"))
        assert r.max_violation_z <= 3.0

    def test_halved_v_detected_on_dense_serial(self):
        X = random_sparse(10, 20, 1.0, seed=12)
        s = uniform_serial_sampling(20)
        r = eso_mc_check(X, s, v_serial(X) / 2, trials=2000, h_draws=20,
                         rng=stream(11, "mc"))
        assert r.max_violation_z > 3.0

    def test_trials_floor(self):
        X = random_sparse(4, 5, 0.9, seed=13)
        s = uniform_serial_sampling(5)
        with pytest.raises(ValueError):
            eso_mc_check(X, s, v_serial(X), trials=10, h_draws=2, rng=stream(0, "mc"))


class TestThetaFormulas:
    def test_theta_tau_nice_closed_form(self):
        X = random_sparse(6, 12, 0.5, seed=14)
        nlg = 1.2
        got = theta_tau_nice(X, 3, nlg)
        v = v_tau_nice(X, 3)
        lam_gamma = nlg / 12
        assert np.isclose(1.0 / got, 12 / 3 + v.max() / (3 * lam_gamma))

    def test_theta_tau_importance_beats_tau_nice_with_spread(self):
        from ermcd.sparse_data import SyntheticSpec, generate_synthetic

        ds = generate_synthetic(
            SyntheticSpec(n=200, d=40, sparsity=0.8, norm_law="extreme",
                          law_param=100.0, seed=15)
        )
        part = random_buckets(200, 8, stream(12, "b"))
        nlg = 200 * 0.1 / 200  # lambda gamma = 0.1/200... keep simple: nlg = 20
        nlg = 20.0
        th_imp, p_star = theta_tau_importance(ds.X, part, nlg)
        th_nice = theta_tau_nice(ds.X, 8, nlg)
        assert th_imp > th_nice

    def test_attach_eso_dispatch(self):
        X = random_sparse(5, 9, 0.6, seed=16)
        s = attach_eso(X, tau_nice_sampling(9, 2))
        assert np.allclose(s.v, v_tau_nice(X, 2))
        s2 = attach_eso(X, serial_sampling(np.full(9, 1 / 9)))
        assert np.allclose(s2.v, v_serial(X))
