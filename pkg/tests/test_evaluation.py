"""Tests for exact and Monte Carlo policy evaluation."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from privsig.errors import DimensionMismatch, ValidationFailure
from privsig.models.game import ChannelSpec, GameSpec, JointGaussian, LinearPolicyPair
from privsig.services.evaluation import (
    babbling_policy,
    empirical_report,
    evaluate_linear,
    full_revelation_policy,
    mmse_decoders,
    sample,
)
from privsig.utils.rng import make_rng


@pytest.fixture
def scalar_spec(unit_source):
    """Noiseless scalar game with delta = 1."""
    return GameSpec(source=unit_source, delta=1.0)


class TestExactEvaluation:
    """Tests for evaluate_linear and the reference policies."""

    def test_babbling(self, random_specs):
        """Test that babbling leaves the prior variances as MSEs."""
        for spec in random_specs[:20]:
            report = evaluate_linear(spec, babbling_policy(spec))
            assert report.mse_x == pytest.approx(np.trace(spec.source.sigma_x))
            assert report.mse_y == pytest.approx(np.trace(spec.source.sigma_y))

    def test_full_revelation(self, random_specs):
        """Test that full revelation gives zero MSE on both blocks."""
        for spec in random_specs[:20]:
            report = evaluate_linear(spec, full_revelation_policy(spec))
            assert report.mse_x == pytest.approx(0.0, abs=1e-10)
            assert report.mse_y == pytest.approx(0.0, abs=1e-10)

    def test_payoffs_follow_mses(self, scalar_spec):
        """Test j_e = mse_y - delta * mse_x and j_d = mse_x + mse_y."""
        f = np.array([[0.3, 1.0]])
        d_x, d_y = mmse_decoders(scalar_spec, f)
        report = evaluate_linear(scalar_spec, LinearPolicyPair(f=f, d_x=d_x, d_y=d_y))
        assert report.j_e == pytest.approx(report.mse_y - scalar_spec.delta * report.mse_x)
        assert report.j_d == pytest.approx(report.mse_x + report.mse_y)

    def test_scalar_closed_form(self, scalar_spec):
        """Test the MSE of the Y-only message against 1 - rho^2."""
        f = np.array([[0.0, 1.0]])
        d_x, d_y = mmse_decoders(scalar_spec, f)
        assert_allclose(d_x, [[0.75]])
        assert_allclose(d_y, [[1.0]])
        report = evaluate_linear(scalar_spec, LinearPolicyPair(f=f, d_x=d_x, d_y=d_y))
        assert report.mse_x == pytest.approx(1.0 - 0.75 ** 2)
        assert report.mse_y == pytest.approx(0.0, abs=1e-12)

    def test_decoders_are_evaluated_as_given(self, scalar_spec):
        """Test that suboptimal decoders cost more than the MMSE ones."""
        f = np.array([[0.5, 1.0]])
        d_x, d_y = mmse_decoders(scalar_spec, f)
        best = evaluate_linear(scalar_spec, LinearPolicyPair(f=f, d_x=d_x, d_y=d_y))
        worse = evaluate_linear(scalar_spec, LinearPolicyPair(f=f, d_x=d_x * 1.2, d_y=d_y * 0.8))
        assert worse.j_d > best.j_d

    def test_dimension_mismatch(self, scalar_spec):
        """Test that an encoder of the wrong width is rejected."""
        policy = LinearPolicyPair(f=np.ones((1, 3)), d_x=np.ones((1, 1)), d_y=np.ones((1, 1)))
        with pytest.raises(DimensionMismatch):
            evaluate_linear(scalar_spec, policy)

    def test_channel_mismatch(self, unit_source):
        """Test that a noiseless policy is rejected on an AWGN game."""
        spec = GameSpec(source=unit_source, delta=1.0, channel=ChannelSpec.awgn(1.0, 1.0))
        policy = LinearPolicyPair(f=[[0.0, 1.0]], d_x=[[0.0]], d_y=[[0.0]])
        with pytest.raises(ValidationFailure):
            evaluate_linear(spec, policy)

    def test_awgn_power_violation(self, unit_source):
        """Test that an AWGN encoder above the power constraint is rejected."""
        channel = ChannelSpec.awgn(1.0, 1.0)
        spec = GameSpec(source=unit_source, delta=1.0, channel=channel)
        policy = LinearPolicyPair(f=[[0.0, 2.0]], d_x=[[0.0]], d_y=[[0.0]], channel=channel)
        with pytest.raises(ValidationFailure):
            evaluate_linear(spec, policy)

    def test_awgn_noise_in_mse(self, unit_source):
        """Test MSE_Y = sigma_W^2 / (P + sigma_W^2) for a full-power Y message."""
        channel = ChannelSpec.awgn(0.5, 1.0)
        spec = GameSpec(source=unit_source, delta=1.0, channel=channel)
        f = np.array([[0.0, 1.0]])
        d_x, d_y = mmse_decoders(spec, f)
        report = evaluate_linear(spec, LinearPolicyPair(f=f, d_x=d_x, d_y=d_y, channel=channel))
        assert report.mse_y == pytest.approx(0.5 / 1.5)


class TestMMSEDecoders:
    """Tests for conditional-mean decoders."""

    def test_zero_encoder_warns(self, scalar_spec, caplog):
        """Test the pseudo-inverse fallback and its WARNING on a zero encoder."""
        with caplog.at_level(logging.WARNING):
            d_x, d_y = mmse_decoders(scalar_spec, np.zeros((1, 2)))
        assert_allclose(d_x, 0.0)
        assert_allclose(d_y, 0.0)
        assert any(getattr(r, "event", None) == "pseudo_inverse_fallback" for r in caplog.records)

    def test_empty_message(self, scalar_spec):
        """Test that a zero-row encoder gives empty decoders."""
        d_x, d_y = mmse_decoders(scalar_spec, np.zeros((0, 2)))
        assert d_x.shape == (1, 0)
        assert d_y.shape == (1, 0)

    def test_orthogonality_principle(self, random_source):
        """Test that the estimation error is uncorrelated with the message."""
        source = random_source(7, 3, 2)
        spec = GameSpec(source=source, delta=1.0)
        f = make_rng(1).standard_normal((2, 5))
        d_x, d_y = mmse_decoders(spec, f)
        d = np.vstack([d_x, d_y])
        sigma = source.sigma
        cross = sigma @ f.T - d @ f @ sigma @ f.T
        assert_allclose(cross, 0.0, atol=1e-10)


class TestMonteCarlo:
    """Tests for sampling and empirical reports."""

    def test_sample_reproducible(self, scalar_spec):
        """Test that identical seed and stream give identical batches."""
        a = sample(scalar_spec, 42, 100, stream=(3,))
        b = sample(scalar_spec, 42, 100, stream=(3,))
        assert_allclose(a.s, b.s)

    def test_streams_differ(self, scalar_spec):
        """Test that distinct streams under one seed give different draws."""
        a = sample(scalar_spec, 42, 100, stream=(1,))
        b = sample(scalar_spec, 42, 100, stream=(2,))
        assert not np.allclose(a.s, b.s)

    def test_sample_covariance(self, random_source):
        """Test that the sample covariance matches Sigma."""
        spec = GameSpec(source=random_source(3), delta=1.0)
        batch = sample(spec, 9, 200_000)
        assert_allclose(np.cov(batch.s.T), spec.source.sigma, atol=0.02)

    def test_awgn_batch_has_noise(self, unit_source):
        """Test that AWGN batches carry channel noise of the right variance."""
        spec = GameSpec(source=unit_source, delta=1.0, channel=ChannelSpec.awgn(0.25, 1.0))
        batch = sample(spec, 1, 100_000)
        assert batch.w is not None
        assert np.var(batch.w) == pytest.approx(0.25, rel=0.02)

    def test_rejects_nonpositive_n(self, scalar_spec):
        """Test that n must be positive."""
        with pytest.raises(ValidationFailure):
            sample(scalar_spec, 1, 0)

    def test_empirical_matches_exact(self, random_source):
        """Test Monte Carlo MSEs against the exact ones within 4 standard errors."""
        spec = GameSpec(source=random_source(5, 2, 3), delta=0.7)
        f = make_rng(8).standard_normal((2, 5))
        d_x, d_y = mmse_decoders(spec, f)
        policy = LinearPolicyPair(f=f, d_x=d_x, d_y=d_y)
        exact = evaluate_linear(spec, policy)
        emp = empirical_report(sample(spec, 11, 100_000), spec, policy)
        assert abs(emp.mse_x - exact.mse_x) <= 4 * emp.mse_x_stderr
        assert abs(emp.mse_y - exact.mse_y) <= 4 * emp.mse_y_stderr

    def test_empirical_batch_mismatch(self, scalar_spec, random_source):
        """Test that a batch from another source is rejected."""
        other = GameSpec(source=random_source(1, 2, 2), delta=1.0)
        batch = sample(other, 1, 10)
        with pytest.raises(DimensionMismatch):
            empirical_report(batch, scalar_spec, babbling_policy(scalar_spec))

    def test_perturbed_policy(self, scalar_spec):
        """Test that encoder-side noise is sampled with its covariance."""
        f = np.array([[0.0, 1.0]])
        pert = np.array([[0.5]])
        d_x, d_y = mmse_decoders(scalar_spec, f, perturbation=pert)
        policy = LinearPolicyPair(f=f, d_x=d_x, d_y=d_y, perturbation=pert)
        exact = evaluate_linear(scalar_spec, policy)
        assert exact.mse_y == pytest.approx(0.5 / 1.5)
        emp = empirical_report(sample(scalar_spec, 4, 200_000), scalar_spec, policy)
        assert abs(emp.mse_y - exact.mse_y) <= 4 * emp.mse_y_stderr


class TestJointGaussian:
    """Tests for source validation."""

    def test_not_positive_definite(self):
        """Test that |rho| = sigma_x sigma_y is rejected."""
        with pytest.raises(ValueError):
            JointGaussian.scalar(1.0, 1.0, 1.0)

    def test_shape_mismatch(self):
        """Test that sigma must be (n_x + n_y) square."""
        with pytest.raises(ValueError):
            JointGaussian(n_x=1, n_y=2, sigma=np.eye(2))

    def test_blocks(self, random_source):
        """Test the covariance block accessors."""
        source = random_source(2, 1, 3)
        assert source.sigma_x.shape == (1, 1)
        assert source.sigma_y.shape == (3, 3)
        assert_allclose(source.sigma_xy, source.sigma_yx.T)
