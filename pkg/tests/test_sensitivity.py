import warnings

import numpy as np
import pytest

from pcic import (
    Dataset,
    DegenerateWeightsError,
    DimensionError,
    DomainError,
    EvalMatrix,
    build_eval_matrix,
    covariance_correction,
    curvature_i2,
    finite_difference_check,
    influence_measure,
    local_sensitivity,
    weighted_expectation,
)
from pcic.losses import location_score_evaluator, quadratic_evaluator
from pcic.models import LocationModel, generate_data, location_exact_draws, location_posterior
from pcic.models.location import oracle_posterior_covariances


@pytest.fixture(scope="module")
def conjugate():
    n = 20
    model = LocationModel(np.array([1.0]), beta=1.0, tau=10.0)
    data = generate_data("location", {"theta_star": [1.0]}, n, 314)
    draws = location_exact_draws(location_posterior(data.rows, 1.0, 10.0), 100_000, 315)
    em = build_eval_matrix(data, draws, quadratic_evaluator(np.eye(1)), location_score_evaluator(1.0))
    return model, data, em


class TestWeightedExpectation:
    def test_unit_weight_is_plain_mean(self):
        rng = np.random.default_rng(0)
        em = EvalMatrix(rng.normal(size=(2, 30)), rng.normal(size=(2, 30)))
        vals = rng.normal(size=30)
        r = weighted_expectation(em, 1, 1.0, vals)
        assert r.value == vals.mean() and not r.degenerate

    def test_constant_values(self):
        rng = np.random.default_rng(1)
        em = EvalMatrix(rng.normal(size=(1, 30)), rng.normal(size=(1, 30)))
        for w in (0.0, 0.3, 0.9):
            assert weighted_expectation(em, 0, w, np.full(30, 4.2)).value == pytest.approx(4.2)

    def test_zero_weight_matches_leave_one_out_posterior(self):
        # n=2 conjugate model: dropping X_1 leaves N(a x_2, S1), a = beta tau/(beta tau + 1)
        beta, tau, M = 1.0, 10.0, 200_000
        data = Dataset([[0.4], [1.6]])
        draws = location_exact_draws(location_posterior(data.rows, beta, tau), M, 5)
        em = build_eval_matrix(data, draws, quadratic_evaluator(np.eye(1)), location_score_evaluator(beta))
        r = weighted_expectation(em, 0, 0.0, em.nu[0])
        a, S1 = beta * tau / (beta * tau + 1), 1.0 / (beta + 1 / tau)
        exact = (0.4 - a * 1.6) ** 2 + S1
        # standard error of a self-normalized estimate via its effective sample size
        se = np.sqrt(np.var(em.nu[0]) / r.ess) * 2
        assert abs(r.value - exact) < 3 * se

    def test_degenerate_flag(self):
        em = EvalMatrix(np.zeros((1, 20)), np.linspace(0, 1000, 20)[None, :])
        assert weighted_expectation(em, 0, 0.0, np.arange(20.0)).degenerate

    def test_argument_checks(self):
        em = EvalMatrix(np.zeros((1, 3)), np.zeros((1, 3)))
        with pytest.raises(DomainError):
            weighted_expectation(em, 0, 1.5, np.zeros(3))
        with pytest.raises(DimensionError):
            weighted_expectation(em, 0, 0.5, np.zeros(4))
        with pytest.raises(DimensionError):
            weighted_expectation(em, 1, 0.5, np.zeros(3))

    def test_continuous_at_one(self):
        rng = np.random.default_rng(2)
        em = EvalMatrix(rng.normal(size=(1, 500)), rng.normal(size=(1, 500)))
        a = weighted_expectation(em, 0, 1.0, em.nu[0]).value
        b = weighted_expectation(em, 0, 1.0 - 1e-9, em.nu[0]).value
        assert abs(a - b) < 1e-8


class TestLocalSensitivity:
    def test_first_order_hand(self):
        assert local_sensitivity(EvalMatrix(np.array([[1.0, 3.0]]), np.array([[2.0, 4.0]])), 0, 1) == 1.0

    def test_second_order_constant_score(self):
        assert local_sensitivity(EvalMatrix(np.array([[1.0, 3.0, 2.0]]), np.ones((1, 3))), 0, 2) == 0.0

    def test_bad_order(self):
        with pytest.raises(DomainError):
            local_sensitivity(EvalMatrix(np.zeros((1, 3)), np.zeros((1, 3))), 0, 3)

    def test_matches_closed_form_covariance(self, conjugate):
        model, data, em = conjugate
        exact = oracle_posterior_covariances(data.rows, model)
        # per-observation Monte Carlo error via batches of the draws
        batches = np.array([covariance_correction(em.columns(slice(b * 1000, (b + 1) * 1000)))[1] for b in range(100)])
        se = batches.std(axis=0, ddof=1) / 10
        for i in range(data.n):
            assert abs(local_sensitivity(em, i, 1) - exact[i]) < 3.5 * se[i]


class TestFiniteDifference:
    def test_first_derivative_matches_covariance(self, conjugate):
        _, data, em = conjugate
        for i in range(data.n):
            chk = finite_difference_check(em, i, 1, 1e-3)
            assert chk.rel_error < 0.01 and chk.warning is None

    def test_second_derivative_matches_third_moment(self, conjugate):
        _, data, em = conjugate
        assert max(finite_difference_check(em, i, 2, 1e-3).rel_error for i in range(data.n)) < 0.05

    def test_zero_score(self):
        em = EvalMatrix(np.random.default_rng(3).normal(size=(1, 50)), np.zeros((1, 50)))
        chk = finite_difference_check(em, 0, 1)
        assert chk.analytic == 0.0 and chk.numeric == pytest.approx(0.0, abs=1e-9)

    def test_rel_error_floor(self):
        em = EvalMatrix(np.ones((1, 50)), np.zeros((1, 50)))
        chk = finite_difference_check(em, 0, 2)
        assert chk.rel_error == abs(chk.analytic - chk.numeric) / 1e-12

    def test_step_domain(self):
        em = EvalMatrix(np.zeros((1, 3)), np.zeros((1, 3)))
        with pytest.raises(DomainError):
            finite_difference_check(em, 0, 1, 0.7)

    def test_degenerate_raises(self):
        em = EvalMatrix(np.arange(20.0)[None, :], np.linspace(0, 1e6, 20)[None, :])
        with pytest.raises(DegenerateWeightsError):
            finite_difference_check(em, 0, 1, 0.1)

    def test_low_ess_warns(self):
        rng = np.random.default_rng(4)
        em = EvalMatrix(rng.normal(size=(1, 50)), rng.normal(size=(1, 50)))
        assert "effective sample size" in finite_difference_check(em, 0, 1).warning


class TestInfluence:
    def test_constant_score(self):
        np.testing.assert_array_equal(influence_measure(EvalMatrix(np.ones((3, 4)) * [1, 2, 3, 4], np.ones((3, 4)))), 0)

    def test_single_observation(self):
        em = EvalMatrix(np.array([[1.0, 3.0]]), np.array([[2.0, 4.0]]))
        np.testing.assert_array_equal(influence_measure(em), [covariance_correction(em)[0]])

    def test_normalized_sums_to_one(self):
        rng = np.random.default_rng(5)
        em = EvalMatrix(rng.normal(size=(4, 30)), rng.normal(size=(4, 30)))
        assert influence_measure(em, normalize=True).sum() == pytest.approx(1.0)

    def test_zero_sum_warns(self):
        em = EvalMatrix(np.zeros((2, 3)), np.zeros((2, 3)))
        with pytest.warns(RuntimeWarning):
            out = influence_measure(em, normalize=True)
        np.testing.assert_array_equal(out, [0.0, 0.0])


class TestCurvature:
    def test_constant(self):
        np.testing.assert_array_equal(curvature_i2([[1.0, 1.0], [2.0, 2.0]]), [0.0, 0.0])

    def test_hand(self):
        assert curvature_i2([[0.0, 2.0]])[0] == 1.0

    def test_equals_negative_influence(self):
        L = np.random.default_rng(6).normal(size=(5, 40))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            np.testing.assert_allclose(influence_measure(EvalMatrix(-L, L)), -curvature_i2(L), rtol=1e-12)

    def test_shape(self):
        with pytest.raises(DimensionError):
            curvature_i2([[1.0]])
