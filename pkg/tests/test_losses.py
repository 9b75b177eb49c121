import numpy as np
import pytest

from conftest import grid_argmax_1d, grid_argmin_1d, random_dataset, ridge_solution
from ermcd.losses import (
    Loss,
    Problem,
    Regularizer,
    dual_delta,
    dual_value,
    duality_gap,
    loss_conj,
    loss_deriv,
    loss_value,
    primal_value,
    reg_prox_1d,
)
QUAD = Loss("quadratic")
LOGI = Loss("logistic")
HINGE = Loss("smoothed_hinge", gamma_sh=1.0)
ALL = (QUAD, LOGI, HINGE)


class TestValuesAndDerivs:
    def test_quadratic_point(self):
        assert loss_value(QUAD, 3.0, 1.0) == 2.0
        assert loss_deriv(QUAD, 3.0, 1.0) == 2.0

    def test_logistic_at_zero(self):
        for y in (-1.0, 1.0):
            assert np.isclose(loss_value(LOGI, 0.0, y), np.log(2))
            assert np.isclose(loss_deriv(LOGI, 0.0, y), -y / 2)

    def test_hinge_flat_region(self):
        assert loss_value(HINGE, 1.5, 1.0) == 0.0
        assert loss_deriv(HINGE, 1.5, 1.0) == 0.0

    def test_label_domain_enforced(self):
        with pytest.raises(ValueError):
            loss_value(LOGI, 0.3, 0.5)
        with pytest.raises(ValueError):
            loss_deriv(HINGE, 0.3, 2.0)

    def test_gamma_constants(self):
        assert QUAD.gamma == 1.0
        assert LOGI.gamma == 4.0
        assert Loss("smoothed_hinge", gamma_sh=0.5).gamma == 0.5

    def test_deriv_matches_finite_differences(self, rng):
        h = 1e-6
        for loss in ALL:
            for _ in range(100):
                s = rng.uniform(-4, 4)
                y = -1.0 if rng.random() < 0.5 else 1.0
                want = (loss_value(loss, s + h, y) - loss_value(loss, s - h, y)) / (2 * h)
                got = loss_deriv(loss, s, y)
                assert abs(got - want) <= 1e-6 * max(1.0, abs(want))

    def test_smoothness_lipschitz_derivative(self, rng):
        for loss in ALL:
            lip = 1.0 / loss.gamma
            for _ in range(200):
                s, t = rng.uniform(-5, 5, size=2)
                y = -1.0 if rng.random() < 0.5 else 1.0
                lhs = abs(loss_deriv(loss, s, y) - loss_deriv(loss, t, y))
                assert lhs <= lip * abs(s - t) + 1e-12


class TestConjugates:
    def test_quadratic_conj_point(self):
        assert loss_conj(QUAD, 1.0, 1.0) == -0.5

    def test_logistic_entropy_point(self):
        assert np.isclose(loss_conj(LOGI, 0.5, 1.0), -np.log(2))

    def test_logistic_out_of_domain(self):
        assert loss_conj(LOGI, 1.5, 1.0) == np.inf
        assert loss_conj(HINGE, -0.1, 1.0) == np.inf

    def test_fenchel_young_at_derivative(self, rng):
        # phi(s) + phi*(phi'(s)) == s phi'(s); conj evaluated at u = -phi'
        for loss in ALL:
            for _ in range(50):
                y = -1.0 if rng.random() < 0.5 else 1.0
                if loss.kind == "smoothed_hinge":
                    # interior of the conjugate domain
                    s = y * rng.uniform(1 - loss.gamma_sh + 1e-3, 1 - 1e-3)
                else:
                    s = rng.uniform(-4, 4)
                t = loss_deriv(loss, s, y)
                total = loss_value(loss, s, y) + loss_conj(loss, -t, y)
                assert abs(total - s * t) < 1e-9


class TestDualDelta:
    def test_quadratic_example(self):
        assert dual_delta(QUAD, 0.0, 0.0, 1.0, 1.0) == 0.5

    def test_matches_grid_oracle(self, rng):
        for loss in (QUAD, HINGE):
            for _ in range(25):
                y = -1.0 if rng.random() < 0.5 else 1.0
                alpha = rng.uniform(-1, 1) * (1.0 if loss is QUAD else 0.4) + (
                    0.5 * y if loss is HINGE else 0.0
                )
                inner = rng.uniform(-2, 2)
                coeff = rng.uniform(0.1, 3.0)

                def objective(delta):
                    c = loss_conj(loss, alpha + delta, y)
                    if not np.isfinite(c):
                        return -np.inf
                    return -c - inner * delta - coeff * delta**2 / 2

                want = grid_argmax_1d(objective, lo=-5, hi=5)
                got = dual_delta(loss, alpha, inner, coeff, y)
                assert abs(got - want) < 1e-6

    def test_hinge_flat_restores_alpha(self):
        # margin deep in the flat region: the optimal alpha there is 0
        got = dual_delta(HINGE, 0.4, 5.0, 0.5, 1.0)
        assert np.isclose(0.4 + got, 0.0)

    def test_stationary_alpha_large_coeff(self):
        for loss, eta in ((QUAD, None), (HINGE, None), (LOGI, 0.01)):
            inner = 0.3
            alpha = -float(loss_deriv(loss, inner, 1.0))
            got = dual_delta(loss, alpha, inner, 1e9, 1.0, eta=eta)
            assert abs(got) < 1e-8

    def test_logistic_needs_eta_and_descends_residue(self):
        with pytest.raises(ValueError):
            dual_delta(LOGI, 0.1, 0.0, 1.0, 1.0)
        kappa = 0.1 + float(loss_deriv(LOGI, 0.0, 1.0))
        got = dual_delta(LOGI, 0.1, 0.0, 1.0, 1.0, eta=0.25)
        assert np.isclose(got, -0.25 * kappa)

    def test_bad_coeff(self):
        with pytest.raises(ValueError):
            dual_delta(QUAD, 0.0, 0.0, 0.0, 1.0)


class TestProx:
    def test_plain_gradient_step(self):
        assert reg_prox_1d(None, 0.0, 2.0, 4.0) == -0.5

    def test_l1_dead_zone(self):
        assert reg_prox_1d(Regularizer("l1", weight=1.0), 0.0, 0.5, 1.0) == 0.0

    def test_box_clamp(self):
        got = reg_prox_1d(Regularizer("box", weight=1.0), 0.9, -1.0, 1.0)
        assert np.isclose(got, 0.1)

    def test_against_grid_oracle(self, rng):
        regs = [
            None,
            Regularizer("l1", weight=0.7),
            Regularizer("l2", weight=1.3),
            Regularizer("box", weight=0.8),
        ]
        for reg in regs:
            for _ in range(25):
                x = rng.uniform(-0.7, 0.7)
                grad = rng.uniform(-2, 2)
                L = rng.uniform(0.5, 4.0)

                def objective(u):
                    g_new = reg.value_1d(x + u) if reg is not None else 0.0
                    g_old = reg.value_1d(x) if reg is not None else 0.0
                    if not np.isfinite(g_new):
                        return np.inf
                    return grad * u + L / 2 * u * u + g_new - g_old

                want = grid_argmin_1d(objective, lo=-5, hi=5)
                got = reg_prox_1d(reg, x, grad, L)
                assert abs(got - want) < 1e-6


class TestObjectives:
    def _problem(self, loss, seed=0, lam=0.05):
        labels = "real" if loss.kind == "quadratic" else "pm1"
        ds = random_dataset(5, 8, 0.7, seed=seed, labels=labels)
        return Problem(ds, loss, Regularizer("l2"), lam)

    def test_primal_at_zero(self):
        prob = self._problem(QUAD)
        want = 0.5 * np.mean(prob.dataset.y**2)
        assert np.isclose(primal_value(prob, np.zeros(5)), want)

    def test_dual_at_zero(self):
        for loss in ALL:
            prob = self._problem(loss)
            want = -np.mean(loss_conj(loss, np.zeros(8), prob.dataset.y))
            assert np.isclose(dual_value(prob, np.zeros(8)), want)

    def test_gap_vanishes_at_ridge_optimum(self):
        prob = self._problem(QUAD, seed=4)
        w, alpha = ridge_solution(prob.dataset.X, prob.dataset.y, prob.lam)
        assert duality_gap(prob, w, alpha) <= 1e-8

    def test_weak_duality_random_feasible(self, rng):
        for loss in ALL:
            prob = self._problem(loss, seed=5)
            y = prob.dataset.y
            for _ in range(40):
                w = rng.standard_normal(5)
                if loss.kind == "quadratic":
                    alpha = rng.standard_normal(8)
                else:
                    alpha = rng.uniform(0, 1, size=8) * y  # alpha_j y_j in [0,1]
                assert duality_gap(prob, w, alpha) >= -1e-9

    def test_dual_requires_l2(self):
        ds = random_dataset(4, 6, 0.8, seed=6)
        prob = Problem(ds, QUAD, Regularizer("l1"), 0.1)
        with pytest.raises(ValueError):
            dual_value(prob, np.zeros(6))

    def test_domain_violation_gives_infinite_gap(self):
        prob = self._problem(LOGI, seed=7)
        alpha = 2.0 * prob.dataset.y  # alpha_j y_j = 2, outside [0, 1]
        assert dual_value(prob, alpha) == -np.inf
        assert duality_gap(prob, np.zeros(5), alpha) == np.inf
