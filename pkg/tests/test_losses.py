import numpy as np
import pytest

from pcic import DimensionError, DomainError
from pcic.losses import (
    classification_evaluator,
    classification_losses,
    location_score,
    location_score_evaluator,
    log_sigmoid,
    logistic_score_evaluator,
    quadratic_evaluator,
    quadratic_loss,
    regression_evaluator,
    regression_losses,
    sigmoid,
    gaussian_loglik_evaluator,
)


class TestQuadratic:
    def test_examples(self):
        assert quadratic_loss([1.0, 2.0], [1.0, 2.0], np.eye(2)) == 0.0
        assert quadratic_loss(3.0, 1.0, 1.0) == 4.0
        x, t = np.array([1.0, -2.0]), np.array([0.5, 0.5])
        assert quadratic_loss(x, t, 2 * np.eye(2)) == 2 * quadratic_loss(x, t, np.eye(2))

    def test_symmetry(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert quadratic_loss([1, 2], [3, -1], A) == quadratic_loss([3, -1], [1, 2], A)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            quadratic_loss([1.0, 2.0], [1.0], np.eye(2))


class TestLocationScore:
    def test_examples(self):
        assert location_score([1.0], [1.0], 3.0) == 0.0
        assert location_score(1.0, 0.0, 2.0) == -1.0
        x, t = np.array([0.3, 1.2]), np.array([-1.0, 0.4])
        assert location_score(x, t, 1.5) == pytest.approx(-0.75 * quadratic_loss(x, t, np.eye(2)))

    def test_prior_share(self):
        ev = location_score_evaluator(1.0, tau=2.0, n=4)
        theta = np.array([1.0, 2.0])
        assert ev(np.zeros(2), theta) == pytest.approx(-2.5 - 5.0 / 16.0)
        with pytest.raises(DomainError):
            location_score_evaluator(1.0, tau=2.0)


class TestClassification:
    def test_examples(self):
        assert classification_losses("brier", 1, 1.0) == 0.0
        assert classification_losses("misclass", 1, 0.7) == -1.0
        assert classification_losses("misclass", 1, 0.3) == 0.0
        assert classification_losses("misclass", 1, 0.5) == 0.0
        assert classification_losses("misclass", 0, 0.5) == 0.0
        assert classification_losses("misclass", 0, 0.2) == -1.0
        assert classification_losses("spherical", 1, 1.0) == -1.0
        assert classification_losses("spherical", 1, 0.5) == pytest.approx(-1 / np.sqrt(2))

    def test_ranges(self):
        p = np.linspace(0, 1, 101)
        for x in (0, 1):
            assert np.all((classification_losses("brier", x, p) >= 0) & (classification_losses("brier", x, p) <= 1))
            assert set(np.unique(classification_losses("misclass", x, p))) <= {-1.0, 0.0}
            sph = classification_losses("spherical", x, p)
            assert np.all((sph >= -1 - 1e-15) & (sph <= 0))

    def test_domain(self):
        with pytest.raises(DomainError):
            classification_losses("brier", 1, 1.2)
        with pytest.raises(DomainError):
            classification_losses("hinge", 1, 0.5)

    def test_evaluator_batch_matches_pointwise(self):
        rng = np.random.default_rng(0)
        rows = np.column_stack([np.ones(6), rng.normal(size=(6, 2)), rng.integers(0, 2, 6)])
        thetas = rng.normal(size=(9, 3))
        for kind in ("brier", "misclass", "spherical"):
            ev = classification_evaluator(kind)
            slow = np.array([[ev(r, t) for t in thetas] for r in rows])
            np.testing.assert_allclose(ev.batch(rows, thetas), slow, rtol=1e-12, atol=1e-15)


class TestRegression:
    def test_examples(self):
        for kind in ("l2", "scaled_l1"):
            assert regression_losses(kind, 3.0, 1.0, 1.0, 2.0, 1.0) == 0.0
        assert regression_losses("l2", 2.0, 1.0, 0.0, 1.0, 2.0) == 1.0
        assert regression_losses("scaled_l1", 2.0, 1.0, 0.0, 1.0, 2.0) == 0.5
        assert regression_losses("l2", 2.0, 1.0, 0.0, 1.0, 2.0) == regression_losses("l2", 2.0, 1.0, 0.0, 1.0, 7.0)

    def test_sigma_domain(self):
        with pytest.raises(DomainError):
            regression_losses("scaled_l1", 1.0, 1.0, 0.0, 0.0, 0.0)

    def test_evaluators(self):
        rng = np.random.default_rng(1)
        rows = rng.normal(size=(5, 2))
        thetas = np.column_stack([rng.normal(size=(7, 2)), rng.uniform(0.5, 2, 7)])
        for ev in (regression_evaluator("l2"), regression_evaluator("scaled_l1"), gaussian_loglik_evaluator()):
            slow = np.array([[ev(r, t) for t in thetas] for r in rows])
            np.testing.assert_allclose(ev.batch(rows, thetas), slow, rtol=1e-12)


class TestEvaluators:
    def test_quadratic_batch_matches_pointwise(self):
        rng = np.random.default_rng(2)
        A = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]])
        rows, thetas = rng.normal(size=(4, 3)) + 50, rng.normal(size=(6, 3)) + 50
        ev = quadratic_evaluator(A)
        slow = np.array([[ev(r, t) for t in thetas] for r in rows])
        np.testing.assert_allclose(ev.batch(rows, thetas), slow, rtol=1e-9)

    def test_logistic_score(self):
        rng = np.random.default_rng(3)
        rows = np.column_stack([np.ones(5), rng.normal(size=(5, 2)), rng.integers(0, 2, 5)])
        thetas = rng.normal(size=(8, 3))
        for ev in (logistic_score_evaluator(0.5), logistic_score_evaluator(1.0, n_prior=5)):
            slow = np.array([[ev(r, t) for t in thetas] for r in rows])
            np.testing.assert_allclose(ev.batch(rows, thetas), slow, rtol=1e-12)

    def test_stable_sigmoid(self):
        assert sigmoid(0.0) == 0.5
        assert np.isfinite(log_sigmoid(-1000.0)) and log_sigmoid(-1000.0) == pytest.approx(-1000.0)
        assert sigmoid(800.0) == 1.0 and sigmoid(-800.0) == 0.0
