"""Tests for the MMSE, constrained and mutual-information bottlenecks."""

import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from privsig.errors import AlphaOutOfRange, ValidationFailure
from privsig.models.game import GameSpec, JointGaussian, LinearPolicyPair
from privsig.services.bottleneck import (
    IBSpec,
    chechik_policy,
    compare_ib,
    gaussian_mutual_information,
    ib_threshold,
    realized_error_covariance,
    solve_chechik,
    solve_constrained_ib,
    solve_mmse_ib,
)
from privsig.services.equilibrium import solve_stackelberg


@pytest.fixture
def diagonal_source():
    """Sigma_X = I, Sigma_XY = diag(0.6, 0.5), Sigma_Y = I."""
    sigma = np.eye(4)
    sigma[0, 2] = sigma[2, 0] = 0.6
    sigma[1, 3] = sigma[3, 1] = 0.5
    return JointGaussian(n_x=2, n_y=2, sigma=sigma)


class TestMMSEBottleneck:
    """Tests for the MMSE bottleneck and its regimes."""

    def test_scalar_fully_informative(self):
        """Test that delta below rho^2 / sigma_x^4 reveals X."""
        source = JointGaussian.scalar(1.0, 1.0, 0.5)
        solution = solve_mmse_ib(IBSpec(source=source, delta=0.1))
        assert solution.regime == "fully_informative"
        assert solution.k == 1
        assert solution.report.mse_x == pytest.approx(0.0, abs=1e-12)
        assert solution.report.mse_y == pytest.approx(1.0 - 0.25)

    def test_scalar_noninformative(self):
        """Test that delta above the threshold sends nothing."""
        source = JointGaussian.scalar(1.0, 1.0, 0.5)
        solution = solve_mmse_ib(IBSpec(source=source, delta=0.5))
        assert solution.regime == "noninformative"
        assert solution.k == 0
        assert solution.policy.d_x.shape == (1, 0)
        assert solution.report.mse_x == pytest.approx(1.0)
        assert solution.report.mse_y == pytest.approx(1.0)

    def test_scalar_boundary(self):
        """Test that delta exactly at the threshold conveys the zero-eigenvalue direction."""
        delta = ib_threshold(2.0, 0.6)
        assert delta == pytest.approx(0.09)
        solution = solve_mmse_ib(IBSpec(source=JointGaussian.scalar(2.0, 1.0, 0.6), delta=delta))
        assert solution.k == 1
        assert solution.regime == "partial"

    @pytest.mark.parametrize("delta,regime,k", [
        (0.1, "fully_informative", 2),
        (0.3, "partial", 1),
        (0.5, "noninformative", 0),
    ])
    def test_vector_regimes(self, diagonal_source, delta, regime, k):
        """Test the three regimes on a diagonal two-dimensional source."""
        solution = solve_mmse_ib(IBSpec(source=diagonal_source, delta=delta))
        assert solution.regime == regime
        assert solution.k == k

    def test_partial_conveys_strongest_direction(self, diagonal_source):
        """Test that the partial regime sends the first X coordinate only."""
        solution = solve_mmse_ib(IBSpec(source=diagonal_source, delta=0.3))
        assert_allclose(np.abs(solution.policy.f), [[1.0, 0.0, 0.0, 0.0]], atol=1e-10)
        assert solution.report.mse_x == pytest.approx(1.0)
        assert solution.report.mse_y == pytest.approx(2.0 - 0.36)

    def test_markov_decoder(self, random_source):
        """Test that the Y decoder factors through the X estimate."""
        source = random_source(21, 3, 2)
        solution = solve_mmse_ib(IBSpec(source=source, delta=0.05))
        policy = solution.policy
        assert_allclose(policy.f[:, source.n_x:], 0.0)
        expected = source.sigma_yx @ np.linalg.solve(source.sigma_x, policy.d_x)
        assert_allclose(policy.d_y, expected, atol=1e-10)

    def test_no_better_than_stackelberg(self, random_specs):
        """Test that seeing X only never lowers the sender cost below the Stackelberg one."""
        for spec in random_specs[:30]:
            ib = solve_mmse_ib(IBSpec(source=spec.source, delta=spec.delta))
            stackelberg = solve_stackelberg(spec)
            assert ib.report.j_e >= stackelberg.report.j_e - 1e-9

    def test_needs_exactly_one_parameter(self, unit_source):
        """Test that delta and beta are mutually exclusive."""
        with pytest.raises(ValueError):
            IBSpec(source=unit_source, delta=1.0, beta=2.0)
        with pytest.raises(ValueError):
            IBSpec(source=unit_source)

    def test_beta_spec_rejected(self, unit_source):
        """Test that the MMSE solver needs delta."""
        with pytest.raises(ValidationFailure):
            solve_mmse_ib(IBSpec(source=unit_source, beta=2.0))


class TestConstrainedBottleneck:
    """Tests for the trace-constrained bottleneck."""

    def test_minimal_eigenspace(self, diagonal_source):
        """Test objective alpha * lambda_min while alpha fits the minimal eigenspace."""
        solution = solve_constrained_ib(diagonal_source, 0.5)
        assert solution.on_minimal_eigenspace
        assert solution.lambda_min == pytest.approx(0.25)
        assert solution.objective == pytest.approx(0.5 * 0.25)
        assert_allclose(solution.phi, np.diag([0.0, 0.5]), atol=1e-12)

    def test_water_filling_corner(self, diagonal_source, caplog):
        """Test water-filling and its WARNING beyond the minimal eigenspace."""
        with caplog.at_level(logging.WARNING):
            solution = solve_constrained_ib(diagonal_source, 1.5)
        assert not solution.on_minimal_eigenspace
        assert_allclose(solution.phi, np.diag([0.5, 1.0]), atol=1e-9)
        assert solution.objective == pytest.approx(0.36 * 0.5 + 0.25)
        assert any(getattr(r, "event", None) == "constrained_ib_corner" for r in caplog.records)

    def test_encoder_realizes_phi(self, diagonal_source):
        """Test that the encoder description produces the optimal error covariance."""
        for alpha in (0.0, 0.5, 1.5, 2.0):
            solution = solve_constrained_ib(diagonal_source, alpha)
            realized = realized_error_covariance(diagonal_source, solution.encoder_description)
            assert_allclose(realized, solution.phi, atol=1e-9)

    def test_random_sources(self, random_source):
        """Test feasibility and optimality against scaled-prior candidates on random sources."""
        rng = np.random.default_rng(77)
        for seed in range(20):
            source = random_source(seed, 3, 2)
            trace_x = float(np.trace(source.sigma_x))
            alpha = float(rng.uniform(0.0, trace_x))
            solution = solve_constrained_ib(source, alpha)
            phi = solution.phi
            assert np.trace(phi) >= alpha - 1e-8
            assert np.linalg.eigvalsh(phi)[0] >= -1e-9
            assert np.linalg.eigvalsh(source.sigma_x - phi)[0] >= -1e-9
            baseline = alpha / trace_x * float(np.trace(solution.upsilon @ source.sigma_x))
            assert solution.objective <= baseline + 1e-9
            assert solution.objective >= alpha * solution.lambda_min - 1e-9

    def test_zero_alpha(self, unit_source):
        """Test that a zero budget gives the zero error covariance and a zero objective."""
        solution = solve_constrained_ib(unit_source, 0.0)
        assert solution.objective == pytest.approx(0.0, abs=1e-12)
        assert_allclose(solution.phi, 0.0, atol=1e-12)

    def test_alpha_out_of_range(self, diagonal_source):
        """Test that alpha must lie in [0, tr(Sigma_X)]."""
        with pytest.raises(AlphaOutOfRange):
            solve_constrained_ib(diagonal_source, -0.1)
        with pytest.raises(AlphaOutOfRange):
            solve_constrained_ib(diagonal_source, 2.5)


class TestMutualInformationBottleneck:
    """Tests for the Gaussian mutual-information bottleneck."""

    def test_critical_betas(self, diagonal_source):
        """Test beta_c = 1 / (1 - lambda) on the diagonal source."""
        solution = solve_chechik(diagonal_source, 1.0)
        assert_allclose(solution.eigenvalues, [0.64, 0.75], atol=1e-12)
        assert_allclose(solution.betas_critical, [1.0 / 0.36, 4.0], rtol=1e-10)

    @pytest.mark.parametrize("beta,active", [(2.0, 0), (3.0, 1), (5.0, 2)])
    def test_active_directions(self, diagonal_source, beta, active):
        """Test the number of active encoder rows as beta crosses the critical values."""
        assert solve_chechik(diagonal_source, beta).active_count == active

    def test_activation_at_critical_beta(self, diagonal_source):
        """Test that a direction is active with a zero row at its critical beta."""
        beta_c = solve_chechik(diagonal_source, 1.0).betas_critical[0]
        solution = solve_chechik(diagonal_source, beta_c)
        assert solution.active_count == 1
        assert_allclose(solution.a_matrix[0], 0.0, atol=1e-6)

    def test_information_monotone_and_bounded(self, diagonal_source):
        """Test that I(X;Z) grows with beta and I(Y;Z) never exceeds it."""
        spec = GameSpec(source=diagonal_source, delta=1.0)
        previous = -1.0
        for beta in (1.0, 3.0, 5.0, 10.0, 50.0):
            policy = chechik_policy(spec, solve_chechik(diagonal_source, beta))
            i_x, i_y = gaussian_mutual_information(diagonal_source, policy)
            assert i_x >= previous - 1e-12
            assert i_y <= i_x + 1e-12
            previous = i_x

    def test_negative_beta(self, diagonal_source):
        """Test that beta must be nonnegative."""
        with pytest.raises(ValidationFailure):
            solve_chechik(diagonal_source, -1.0)

    def test_infinite_information(self, unit_source):
        """Test I(X;Z) = inf for a noiseless X message and the closed form for Y."""
        policy = LinearPolicyPair(f=[[1.0, 0.0]], d_x=[[1.0]], d_y=[[0.75]])
        i_x, i_y = gaussian_mutual_information(unit_source, policy)
        assert math.isinf(i_x)
        assert i_y == pytest.approx(-0.5 * math.log(1.0 - 0.75 ** 2))

    def test_empty_message(self, unit_source):
        """Test zero information for an empty message."""
        policy = LinearPolicyPair(f=np.zeros((0, 2)), d_x=np.zeros((1, 0)), d_y=np.zeros((1, 0)))
        assert gaussian_mutual_information(unit_source, policy) == (0.0, 0.0)

    def test_compare(self, diagonal_source):
        """Test the side-by-side comparison of both bottlenecks."""
        comparison = compare_ib(diagonal_source, 0.3, 5.0)
        assert comparison.mmse.regime == "partial"
        assert comparison.chechik.active_count == 2
        assert math.isinf(comparison.mmse_information[0])
        assert comparison.chechik_information[0] < math.inf
        assert comparison.chechik_report.mse_x > 0.0
