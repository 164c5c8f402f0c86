"""Tests for the AWGN and discrete channel equilibria."""

import logging
import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from privsig.errors import NonConvergence, ValidationFailure
from privsig.services.channel_eq import (
    integrated_distortion,
    lloyd_conditions,
    lloyd_max_gaussian,
    solve_awgn,
    solve_discrete,
)
from privsig.services.equilibrium import scalar_ratio, solve_scalar


class TestAWGN:
    """Tests for the power-limited AWGN equilibrium."""

    def test_power_constraint_met(self):
        """Test that the encoder spends exactly the available power."""
        for p in (0.1, 1.0, 5.0):
            solution = solve_awgn(1.0, 2.0, 0.4, 1.0, p, 0.5)
            assert solution.power_used == pytest.approx(p, rel=1e-12)

    def test_keeps_noiseless_ratio(self):
        """Test B/A equal to the noiseless closed form."""
        solution = solve_awgn(1.0, 1.0, 0.3, 1.0, 1.0, 1.0)
        assert solution.b_over_a == pytest.approx(scalar_ratio(1.0, 1.0, 0.3, 1.0))
        assert solution.b / solution.a == pytest.approx(solution.b_over_a)

    def test_u_mse(self):
        """Test MSE of U = sigma_W^2 / (P + sigma_W^2)."""
        solution = solve_awgn(1.0, 1.0, 0.75, 1.0, 2.0, 0.5)
        assert solution.u_mse == pytest.approx(0.5 / 2.5)

    def test_vanishing_noise_limit(self):
        """Test that a tiny noise variance reproduces the noiseless payoffs."""
        noisy = solve_awgn(1.0, 1.0, 0.75, 2.0, 1.0, 1e-12)
        noiseless = solve_scalar(1.0, 1.0, 0.75, 2.0)
        assert noisy.report.mse_x == pytest.approx(noiseless.report.mse_x, abs=1e-9)
        assert noisy.report.mse_y == pytest.approx(noiseless.report.mse_y, abs=1e-9)

    def test_mse_grows_with_noise(self):
        """Test that the receiver cost rises with the noise variance."""
        costs = [solve_awgn(1.0, 1.0, 0.75, 1.0, 1.0, w).report.j_d for w in (0.01, 0.1, 1.0, 10.0)]
        assert all(b > a for a, b in zip(costs, costs[1:]))

    def test_mse_falls_with_power(self):
        """Test that MSE_Y falls as the power grows."""
        mses = [solve_awgn(1.0, 1.0, 0.75, 1.0, p, 1.0).report.mse_y for p in (0.1, 1.0, 10.0)]
        assert all(b < a for a, b in zip(mses, mses[1:]))

    def test_decoders_are_mmse(self):
        """Test the decoder gains against Cov(s, z) / Var(z)."""
        solution = solve_awgn(1.5, 0.5, 0.3, 0.7, 1.0, 0.2)
        f = np.array([solution.a, solution.b])
        sigma = solution.spec.source.sigma
        var_z = f @ sigma @ f + 0.2
        assert_allclose([solution.d_x, solution.d_y], sigma @ f / var_z, rtol=1e-12)

    def test_zero_correlation(self, caplog):
        """Test that rho = 0 sends Y alone at full power."""
        with caplog.at_level(logging.WARNING):
            solution = solve_awgn(1.0, 4.0, 0.0, 1.0, 1.0, 1.0)
        assert solution.a == 0.0
        assert solution.b_over_a is None
        assert solution.power_used == pytest.approx(1.0)
        assert any(getattr(r, "event", None) == "zero_cross_covariance" for r in caplog.records)


class TestComparativeStatics:
    """Tests for how the equilibrium MSEs move with delta and the noise level."""

    DELTAS = np.logspace(-2, 2, 25)
    NOISE_VARS = [0.01, 0.1, 0.3, 1.0, 3.0, 10.0]

    @staticmethod
    def _mses(delta, sigma_w2):
        if sigma_w2 is None:
            report = solve_scalar(1.0, 1.0, 0.75, delta).report
        else:
            report = solve_awgn(1.0, 1.0, 0.75, delta, 1.0, sigma_w2).report
        return report.mse_x, report.mse_y

    @pytest.mark.parametrize("sigma_w2", [None, 0.1, 1.0])
    def test_nondecreasing_in_delta(self, sigma_w2):
        """Test that both MSEs never fall as the privacy weight grows."""
        mse_x, mse_y = np.array([self._mses(delta, sigma_w2) for delta in self.DELTAS]).T
        assert np.all(np.diff(mse_x) >= -1e-12)
        assert np.all(np.diff(mse_y) >= -1e-12)

    @pytest.mark.parametrize("delta", [0.1, 1.0, 10.0])
    def test_nondecreasing_in_noise(self, delta):
        """Test that both MSEs never fall as the channel noise grows."""
        mse_x, mse_y = np.array([self._mses(delta, w) for w in self.NOISE_VARS]).T
        assert np.all(np.diff(mse_x) >= -1e-12)
        assert np.all(np.diff(mse_y) >= -1e-12)
        noiseless_x, noiseless_y = self._mses(delta, None)
        assert mse_x[0] >= noiseless_x - 1e-12
        assert mse_y[0] >= noiseless_y - 1e-12


class TestLloydMax:
    """Tests for the Lloyd-Max quantizer of the standard normal."""

    def test_single_cell(self):
        """Test that one cell reconstructs the mean with unit distortion."""
        quantizer = lloyd_max_gaussian(1)
        assert_allclose(quantizer.reconstructions, [0.0])
        assert quantizer.mse == 1.0

    def test_two_cells(self):
        """Test the closed form +-sqrt(2/pi) with distortion 1 - 2/pi."""
        quantizer = lloyd_max_gaussian(2)
        assert_allclose(quantizer.reconstructions, [-math.sqrt(2 / math.pi), math.sqrt(2 / math.pi)], atol=1e-12)
        assert_allclose(quantizer.boundaries, [0.0], atol=1e-12)
        assert quantizer.mse == pytest.approx(1.0 - 2.0 / math.pi, abs=1e-12)

    @pytest.mark.parametrize("m,expected", [(4, 0.11748), (8, 0.03454)])
    def test_known_distortions(self, m, expected):
        """Test distortions against the classical tabulated values."""
        assert lloyd_max_gaussian(m).mse == pytest.approx(expected, abs=1e-4)

    @pytest.mark.parametrize("m", [3, 8, 32])
    def test_lloyd_conditions(self, m):
        """Test the centroid and midpoint conditions at convergence."""
        quantizer = lloyd_max_gaussian(m)
        centroid, midpoint = lloyd_conditions(quantizer)
        assert centroid < 1e-10
        assert midpoint < 1e-12

    def test_symmetry(self):
        """Test that the levels are symmetric about zero."""
        r = lloyd_max_gaussian(7).reconstructions
        assert_allclose(r, -r[::-1], atol=1e-10)

    def test_distortion_decreasing(self):
        """Test that more cells never increase the distortion."""
        mses = [lloyd_max_gaussian(m).mse for m in (1, 2, 3, 4, 8, 16, 64)]
        assert all(b < a for a, b in zip(mses, mses[1:]))

    def test_many_levels(self):
        """Test convergence and the high-resolution regime at M = 256."""
        quantizer = lloyd_max_gaussian(256)
        assert np.all(np.diff(quantizer.reconstructions) > 0)
        assert quantizer.mse < 1e-4
        assert quantizer.mse == pytest.approx(math.sqrt(3) * math.pi / 2 / 256 ** 2, rel=0.1)

    @pytest.mark.parametrize("m", [2, 256])
    def test_infinite_edges_without_warnings(self, m):
        """Test that the unbounded outer cells raise no floating-point warnings."""
        with warnings.catch_warnings():
            warnings.simplefilter("error", RuntimeWarning)
            quantizer = lloyd_max_gaussian(m)
        assert math.isfinite(quantizer.mse)

    @pytest.mark.parametrize("m", [2, 5, 16])
    def test_integrated_distortion(self, m):
        """Test the closed-form distortion against adaptive quadrature."""
        quantizer = lloyd_max_gaussian(m)
        assert integrated_distortion(quantizer) == pytest.approx(quantizer.mse, abs=1e-9)

    def test_iteration_cap(self):
        """Test NonConvergence when the iteration cap is too small."""
        with pytest.raises(NonConvergence):
            lloyd_max_gaussian(8, max_iter=1)

    def test_invalid_arguments(self):
        """Test that m and tol are validated."""
        with pytest.raises(ValidationFailure):
            lloyd_max_gaussian(0)
        with pytest.raises(ValidationFailure):
            lloyd_max_gaussian(4, tol=0.0)


class TestDiscreteChannel:
    """Tests for the quantized-U equilibrium."""

    def test_distortion_adds_to_noiseless(self):
        """Test MSE = noiseless MSE + gain^2 * quantizer distortion for each block."""
        solution = solve_discrete(1.0, 1.0, 0.75, 1.0, 4)
        noiseless = solve_scalar(1.0, 1.0, 0.75, 1.0)
        c_x, c_y = solution.gains
        d = solution.quantizer.mse
        assert solution.report.mse_x == pytest.approx(noiseless.report.mse_x + c_x ** 2 * d, rel=1e-10)
        assert solution.report.mse_y == pytest.approx(noiseless.report.mse_y + c_y ** 2 * d, rel=1e-10)

    def test_ratio_and_payoff_dominance(self):
        """Test the noiseless ratio and payoff dominance with all symbols in use."""
        solution = solve_discrete(1.0, 1.0, 0.3, 1.0, 8)
        assert solution.b_over_a == pytest.approx(-6.51, abs=0.01)
        assert solution.payoff_dominant
        assert solution.bins == 8

    def test_fewer_bins(self):
        """Test that an equilibrium with fewer bins is not payoff dominant and costs more."""
        full = solve_discrete(1.0, 1.0, 0.75, 1.0, 8)
        partial = solve_discrete(1.0, 1.0, 0.75, 1.0, 8, bins=3)
        assert not partial.payoff_dominant
        assert partial.report.j_d > full.report.j_d

    def test_approaches_noiseless(self):
        """Test that the receiver cost falls toward the noiseless one as M grows."""
        noiseless = solve_scalar(1.0, 1.0, 0.75, 1.0).report.j_d
        costs = [solve_discrete(1.0, 1.0, 0.75, 1.0, m).report.j_d for m in (2, 4, 16, 64)]
        assert all(b < a for a, b in zip(costs, costs[1:]))
        assert costs[-1] == pytest.approx(noiseless, abs=2e-3)

    def test_invalid_arguments(self):
        """Test that m and bins are validated."""
        with pytest.raises(ValidationFailure):
            solve_discrete(1.0, 1.0, 0.5, 1.0, 1)
        with pytest.raises(ValidationFailure):
            solve_discrete(1.0, 1.0, 0.5, 1.0, 4, bins=5)
