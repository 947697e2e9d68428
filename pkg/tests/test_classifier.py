"""Discriminant posterior and two-state Markov filter behavior."""

import numpy as np
import pytest

from teledrive.decoder import (
    HMMModel,
    fit_lda,
    fit_transition,
    hmm_filter_step,
    lda_posterior,
)


def gaussian_posterior_oracle(x, mean_off, mean_on, cov, priors):
    """Direct Bayes rule with explicitly evaluated Gaussian densities."""
    def density(v, mu):
        d = v - mu
        inv = np.linalg.inv(cov)
        det = np.linalg.det(cov)
        k = len(v)
        return np.exp(-0.5 * d @ inv @ d) / np.sqrt((2 * np.pi) ** k * det)

    p_on = priors[1] * density(x, mean_on)
    p_off = priors[0] * density(x, mean_off)
    return p_on / (p_on + p_off)


def make_two_class_data(rng, mean_off, mean_on, cov, n=400):
    off = rng.multivariate_normal(mean_off, cov, n)
    on = rng.multivariate_normal(mean_on, cov, n)
    X = np.vstack([off, on])
    labels = np.array([False] * n + [True] * n)
    return X, labels


class TestLDA:
    def test_midpoint_gives_half(self):
        rng = np.random.default_rng(0)
        mean_off, mean_on = np.array([-1.0, 0.0]), np.array([1.0, 0.0])
        X, labels = make_two_class_data(rng, mean_off, mean_on, np.eye(2))
        model = fit_lda(X, labels)
        midpoint = (model.mean_on + model.mean_off) / 2
        # equal class sizes -> equal priors -> exact symmetry
        assert lda_posterior(midpoint, model) == pytest.approx(0.5, abs=1e-12)

    def test_far_class_mean_saturates(self):
        rng = np.random.default_rng(1)
        mean_off, mean_on = np.array([0.0, 0.0]), np.array([40.0, 0.0])
        X, labels = make_two_class_data(rng, mean_off, mean_on, np.eye(2))
        model = fit_lda(X, labels)
        assert lda_posterior(model.mean_on, model) >= 0.99
        assert lda_posterior(model.mean_off, model) <= 0.01

    def test_matches_hand_computed_gaussian_posterior(self):
        # fixed 2-D fixture: evaluate Bayes rule with explicit densities
        rng = np.random.default_rng(2)
        cov = np.array([[1.0, 0.3], [0.3, 0.7]])
        X, labels = make_two_class_data(
            rng, np.array([-0.8, 0.2]), np.array([0.9, -0.4]), cov, n=300)
        model = fit_lda(X, labels)
        for x in (np.array([0.0, 0.0]), np.array([1.2, -0.3]),
                  np.array([-2.0, 1.0])):
            expected = gaussian_posterior_oracle(
                x, model.mean_off, model.mean_on, model.covariance, model.priors)
            assert lda_posterior(x, model) == pytest.approx(expected, abs=1e-9)

    def test_singular_covariance_regularized_and_recorded(self):
        # duplicate feature column makes the pooled covariance singular
        rng = np.random.default_rng(3)
        base = rng.standard_normal(100)
        X = np.column_stack([base, base, rng.standard_normal(100)])
        labels = np.arange(100) % 2 == 0
        X[labels] += 1.0
        model = fit_lda(X, labels)
        assert model.ridge_eps > 0.0
        p = lda_posterior(X[0], model)
        assert 0.0 <= p <= 1.0

    def test_needs_both_classes(self):
        X = np.random.default_rng(4).standard_normal((10, 2))
        with pytest.raises(ValueError):
            fit_lda(X, np.ones(10, dtype=bool))


class TestHMM:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            HMMModel(np.array([[0.9, 0.2], [0.1, 0.9]]))

    def test_absorbing_off_state(self):
        model = HMMModel(np.eye(2))
        belief = np.array([1.0, 0.0])
        for prob in (0.99, 0.7, 0.9, 0.999):
            belief, on = hmm_filter_step(belief, prob, model)
            assert not on
            assert belief[0] == pytest.approx(1.0)

    def test_uniform_transition_returns_lda_prob(self):
        model = HMMModel(np.full((2, 2), 0.5))
        for p in (0.1, 0.5, 0.73, 0.98):
            belief, on = hmm_filter_step(np.array([0.4, 0.6]), p, model)
            assert belief[1] == pytest.approx(p, abs=1e-12)
            assert on == (p > 0.5)

    def test_belief_stays_probability_vector(self):
        model = HMMModel(np.array([[0.95, 0.05], [0.1, 0.9]]))
        rng = np.random.default_rng(5)
        belief = np.array([0.5, 0.5])
        for _ in range(5000):
            belief, _ = hmm_filter_step(belief, float(rng.uniform(0.01, 0.99)), model)
            assert np.all(belief >= 0.0)
            assert belief.sum() == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_belief_reset_to_stationary(self, caplog):
        model = HMMModel(np.array([[0.9, 0.1], [0.2, 0.8]]))
        with caplog.at_level("WARNING"):
            belief, _ = hmm_filter_step(np.array([0.0, 0.0]), 0.5, model)
        expected = model.stationary()
        assert np.allclose(belief, expected)
        assert belief.sum() == pytest.approx(1.0)

    def test_smoothing_reduces_flips_on_noisy_fixture(self):
        # seeded noisy probability stream around a slow square wave
        rng = np.random.default_rng(42)
        n = 600
        truth = (np.arange(n) // 75) % 2 == 1
        probs = np.clip(np.where(truth, 0.75, 0.25)
                        + rng.normal(0.0, 0.35, n), 0.001, 0.999)

        raw_states = probs > 0.5
        raw_flips = int(np.sum(raw_states[1:] != raw_states[:-1]))

        model = HMMModel(np.array([[0.97, 0.03], [0.03, 0.97]]))
        belief = np.array([1.0, 0.0])
        hmm_states = []
        for p in probs:
            belief, on = hmm_filter_step(belief, float(p), model)
            hmm_states.append(on)
        hmm_states = np.array(hmm_states)
        hmm_flips = int(np.sum(hmm_states[1:] != hmm_states[:-1]))

        assert hmm_flips < raw_flips

    def test_fit_transition_from_labels(self):
        labels = [0] * 50 + [1] * 10 + [0] * 40
        model = fit_transition(labels, smoothing=0.5)
        # staying is much likelier than switching in this sequence
        assert model.transition[0, 0] > 0.9
        assert model.transition[1, 1] > 0.8
        with pytest.raises(ValueError):
            fit_transition([1])

    def test_stationary_distribution(self):
        model = HMMModel(np.array([[0.9, 0.1], [0.3, 0.7]]))
        pi = model.stationary()
        assert np.allclose(pi @ model.transition, pi, atol=1e-12)
        assert pi.sum() == pytest.approx(1.0)
