import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from niwrs.belief import (
    estimate_prior,
    new_belief,
    partition,
    posterior_sigma_mean,
    update_full,
)
from niwrs.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidHyperparameter,
    NotPositiveDefinite,
    TooFewPilotSamples,
)

from conftest import random_belief, random_pd


class TestNewBelief:
    def test_identity_case(self):
        s = new_belief([0, 0], np.eye(2), q=1, b=5)
        assert s.K == 2 and s.q == 1.0 and s.b == 5.0

    def test_indefinite_scale_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            new_belief([0, 0], [[1, 2], [2, 1]], q=1, b=5)

    def test_dof_boundary_rejected(self):
        with pytest.raises(InvalidHyperparameter):
            new_belief([0, 0, 0], np.eye(3), q=1, b=4)

    def test_nonpositive_q_rejected(self):
        with pytest.raises(InvalidHyperparameter):
            new_belief([0, 0], np.eye(2), q=0, b=5)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            new_belief([0, 0, 0], np.eye(2), q=1, b=6)

    def test_asymmetric_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            new_belief([0, 0], [[1.0, 0.1], [0.0, 1.0]], q=1, b=5)

    def test_value_semantics(self):
        theta = np.zeros(2)
        B = np.eye(2)
        s = new_belief(theta, B, q=1, b=5)
        theta[0] = 99.0
        B[0, 0] = 99.0
        assert s.theta[0] == 0.0 and s.B[0, 0] == 1.0
        with pytest.raises(ValueError):
            s.B[0, 0] = 3.0


class TestEstimatePrior:
    def test_hand_covariance(self):
        pilot = np.array([[0, 0], [2, 0], [0, 2], [2, 2]], dtype=float)
        s = estimate_prior(pilot, b0=6, q0=1, ridge=0)
        np.testing.assert_allclose(s.theta, [1, 1])
        # unbiased S = (4/3) I, B = (6 - 3) S
        np.testing.assert_allclose(s.B, 4 * np.eye(2), atol=1e-14)

    def test_degenerate_pilot_rescued_by_ridge(self):
        s = estimate_prior(np.array([[1.0, 2.0], [1.0, 2.0]]), b0=6, q0=1, ridge=1e-6)
        np.testing.assert_allclose(s.theta, [1, 2])
        np.testing.assert_allclose(s.B, 3 * 1e-6 * 1e-8 * np.eye(2), rtol=1e-12)

    def test_single_row(self):
        with pytest.raises(TooFewPilotSamples):
            estimate_prior(np.array([[1.0, 2.0]]))

    def test_defaults(self):
        pilot = np.random.default_rng(0).normal(size=(25, 9))
        s = estimate_prior(pilot)
        assert s.b == 13.0 and s.q == 25.0

    def test_singular_without_ridge(self):
        with pytest.raises(NotPositiveDefinite):
            estimate_prior(np.ones((3, 2)), b0=6, q0=1, ridge=0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 12), st.integers(2, 8), st.integers(0, 2**32 - 1), st.booleans())
    def test_ridge_always_positive_definite(self, n0, K, seed, constant_col):
        rng = np.random.default_rng(seed)
        pilot = rng.normal(size=(n0, K)) * rng.uniform(1e-3, 1e3)
        if constant_col:
            pilot[:, 0] = 4.2
        s = estimate_prior(pilot, ridge=1e-6)
        assert np.all(np.linalg.eigvalsh(s.B) > 0)


class TestUpdateFull:
    def test_residual_zero(self, unit_state):
        s = update_full(unit_state, [0, 0])
        assert (s.q, s.b) == (2.0, 6.0)
        np.testing.assert_array_equal(s.theta, [0, 0])
        np.testing.assert_array_equal(s.B, np.eye(2))

    def test_hand_case(self, unit_state):
        s = update_full(unit_state, [1, 1])
        np.testing.assert_allclose(s.theta, [0.5, 0.5])
        np.testing.assert_allclose(s.B, [[1.5, 0.5], [0.5, 1.5]])

    def test_wrong_length(self, unit_state):
        with pytest.raises(DimensionMismatch):
            update_full(unit_state, [1, 2, 3])

    def test_rank_one_psd_increment(self, rng):
        for _ in range(50):
            s = random_belief(rng, K=4)
            Y = rng.normal(0, 3, 4)
            D = update_full(s, Y).B - s.B
            ev = np.linalg.eigvalsh(D)
            assert ev.min() > -1e-10 * abs(ev).max()
            assert np.sum(ev > 1e-10 * max(abs(ev).max(), 1e-300)) <= 1

    def test_determinant_lemma(self, rng):
        for _ in range(50):
            s = random_belief(rng, K=3)
            Y = rng.normal(0, 2, 3)
            r = s.theta - Y
            expected = np.linalg.det(s.B) * (1 + s.q / (s.q + 1) * r @ np.linalg.solve(s.B, r))
            assert np.linalg.det(update_full(s, Y).B) == pytest.approx(expected, rel=1e-10)

    def test_closure(self, rng):
        s = random_belief(rng, K=5)
        for _ in range(200):
            s2 = update_full(s, rng.normal(0, 5, 5))
            assert s2.q == s.q + 1 and s2.b == s.b + 1
            s = s2


class TestPosteriorSigmaMean:
    def test_values(self):
        np.testing.assert_allclose(posterior_sigma_mean(new_belief([0, 0], np.eye(2), 1, 5)), np.eye(2) / 2)
        np.testing.assert_allclose(posterior_sigma_mean(new_belief([0, 0], 3 * np.eye(2), 1, 6)), np.eye(2))

    def test_pd(self, rng):
        for _ in range(20):
            m = posterior_sigma_mean(random_belief(rng, K=4))
            np.testing.assert_allclose(m, m.T)
            assert np.linalg.eigvalsh(m).min() > 0


class TestPartition:
    def test_identity(self):
        Bkk, Bmk, Bs = partition(np.eye(3), 1)
        assert Bkk == 1.0
        np.testing.assert_array_equal(Bmk, [0, 0])
        np.testing.assert_array_equal(Bs, np.eye(2))

    def test_two_by_two(self):
        Bkk, Bmk, Bs = partition(np.array([[2.0, 1.0], [1.0, 2.0]]), 0)
        assert Bkk == 2.0
        np.testing.assert_array_equal(Bmk, [1.0])
        np.testing.assert_allclose(Bs, [[1.5]])

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            partition(np.eye(3), 3)

    def test_reconstruction_and_pd(self, rng):
        for _ in range(100):
            K = int(rng.integers(2, 8))
            B = random_pd(rng, K)
            k = int(rng.integers(K))
            Bkk, Bmk, Bs = partition(B, k)
            rest = np.arange(K) != k
            np.testing.assert_allclose(Bs + np.outer(Bmk, Bmk) / Bkk, B[np.ix_(rest, rest)], rtol=1e-12, atol=1e-12 * abs(B).max())
            np.linalg.cholesky(Bs)
