"""Noiseless game solvers: whitening, linear Nash and Stackelberg policies."""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from privsig.errors import InvalidAlphas, ValidationFailure
from privsig.models.game import EquilibriumReport, GameSpec, JointGaussian, LinearPolicyPair
from privsig.services.evaluation import evaluate_linear, game_matrix, warn_if_decoupled
from privsig.utils.arrays import Matrix
from privsig.utils.spectral import SpectralDecomposition, as_sym, eig_sym, inv_sqrt_pd, sqrt_pd

logger = logging.getLogger(__name__)


class WhiteningTransform(BaseModel):
    """
    T = Q^T Sigma^{-1/2} s with Q the eigenvectors of W, positives first.

    The first n_y coordinates of T (U) are the ones the sender conveys,
    the remaining n_x (V) are the ones it hides.
    """

    model_config = ConfigDict(frozen=True)

    w: Matrix
    spectrum: SpectralDecomposition
    t_map: Matrix = Field(..., description="Q^T Sigma^{-1/2}")
    k: Matrix = Field(..., description="Q^T Sigma Q")
    sigma_root: Matrix = Field(..., description="Sigma^{1/2}")
    n_x: int
    n_y: int

    @property
    def u_rows(self) -> np.ndarray:
        return self.t_map[:self.n_y]

    @property
    def v_rows(self) -> np.ndarray:
        return self.t_map[self.n_y:]

    @property
    def u_decoders(self) -> np.ndarray:
        """Sigma^{1/2} q_i for the conveyed directions, as columns."""
        return self.sigma_root @ self.spectrum.q[:, :self.n_y]

    def cov_t(self, sigma: np.ndarray) -> np.ndarray:
        return self.t_map @ sigma @ self.t_map.T


class NashSolution(BaseModel):
    """A linear Nash equilibrium of the noiseless game."""

    model_config = ConfigDict(frozen=True)

    transform: WhiteningTransform
    alphas: List[float]
    policy: LinearPolicyPair
    report: EquilibriumReport
    payoff_dominant: bool


class ScalarNashSolution(NashSolution):
    """Scalar equilibrium with encoder z = a x + b y."""

    spec: GameSpec
    a: float
    b: float
    b_over_a: Optional[float] = Field(None, description="None when the encoder ignores X (rho = 0)")
    lambda1: float
    lambda2: float
    vector_b_over_a: Optional[float] = None
    direction_residual: float = Field(..., ge=0, description="Unit-direction gap to the vector path")


def _require_noiseless(spec: GameSpec, solver: str):
    if spec.channel.variant != "noiseless":
        raise ValidationFailure(f"{solver} solves the noiseless game only")


def whiten(spec: GameSpec) -> WhiteningTransform:
    """
    Whitening transform of the game.

    Raises:
        NotPositiveDefinite: If Sigma is not positive definite
    """
    _require_noiseless(spec, "whiten")
    source = spec.source
    w = game_matrix(spec)
    spectrum = eig_sym(w, sort="positives_first")
    if spectrum.inertia != (source.n_y, source.n_x, 0):
        raise ValidationFailure(
            f"inertia of W is {spectrum.inertia}, expected ({source.n_y}, {source.n_x}, 0); "
            "covariance is too ill-conditioned"
        )

    q = spectrum.q
    t_map = q.T @ inv_sqrt_pd(source.sigma)
    logger.debug("Whitened %dx%d game, eigenvalues %s", source.n_x, source.n_y, spectrum.lam)
    return WhiteningTransform(
        w=w,
        spectrum=spectrum,
        t_map=t_map,
        k=as_sym(q.T @ source.sigma @ q),
        sigma_root=sqrt_pd(source.sigma),
        n_x=source.n_x,
        n_y=source.n_y,
    )


def _check_alphas(alphas: Optional[Sequence[float]], n_y: int) -> np.ndarray:
    if alphas is None:
        return np.ones(n_y)
    arr = np.asarray(list(alphas), dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n_y:
        raise InvalidAlphas(f"expected {n_y} encoder scalings, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidAlphas("encoder scalings must be finite")
    return arr


def solve_nash(spec: GameSpec, alphas: Optional[Sequence[float]] = None) -> NashSolution:
    """
    Linear Nash equilibrium with encoder rows alpha_i q_i^T Sigma^{-1/2}.

    Only the n_y conveyed directions are ever sent. A zero alpha_i silences
    direction i and zeroes its decoder column; the equilibrium is payoff
    dominant iff every alpha_i is nonzero.

    Args:
        spec: Noiseless game
        alphas: n_y encoder scalings (default all ones)

    Raises:
        InvalidAlphas: If the number of scalings is not n_y
    """
    _require_noiseless(spec, "solve_nash")
    warn_if_decoupled(spec.source, "solve_nash")
    transform = whiten(spec)
    alpha = _check_alphas(alphas, spec.source.n_y)

    beta = np.zeros_like(alpha)
    nonzero = alpha != 0.0
    beta[nonzero] = 1.0 / alpha[nonzero]

    f = alpha[:, None] * transform.u_rows
    d = transform.u_decoders * beta
    n_x = spec.source.n_x
    policy = LinearPolicyPair(f=f, d_x=d[:n_x], d_y=d[n_x:], channel=spec.channel)
    report = evaluate_linear(spec, policy, transform.spectrum)

    payoff_dominant = bool(nonzero.all())
    logger.debug("Nash J^e=%.12g (payoff dominant: %s)", report.j_e, payoff_dominant)
    return NashSolution(
        transform=transform,
        alphas=alpha.tolist(),
        policy=policy,
        report=report,
        payoff_dominant=payoff_dominant,
    )


def solve_stackelberg(spec: GameSpec) -> NashSolution:
    """Stackelberg equilibrium: the payoff-dominant Nash policy with unit scalings."""
    return solve_nash(spec)


def payoff_identity(solution: NashSolution) -> float:
    """Sum of the negative eigenvalues of W, the sender cost at a payoff-dominant equilibrium."""
    spectrum = solution.transform.spectrum
    return float(np.sum(spectrum.lam[spectrum.negative_mask]))


def scalar_eigenvalues(sigma_x2: float, sigma_y2: float, rho: float, delta: float):
    """(lambda1 > 0, lambda2 < 0) of W for a scalar source."""
    trace = sigma_y2 - delta * sigma_x2
    disc = trace * trace + 4.0 * delta * (sigma_x2 * sigma_y2 - rho * rho)
    root = math.sqrt(max(disc, 0.0))
    return (trace + root) / 2.0, (trace - root) / 2.0


def scalar_ratio(sigma_x2: float, sigma_y2: float, rho: float, delta: float) -> float:
    """Encoder ratio B/A of the scalar equilibrium (minus root)."""
    if rho == 0.0:
        raise ValidationFailure("the encoder ratio is undefined for rho = 0")
    s = delta * sigma_x2 + sigma_y2
    disc = s * s - 4.0 * delta * rho * rho
    # disc = (delta sx2 - sy2)^2 + 4 delta (sx2 sy2 - rho^2) >= 0 for a valid covariance
    assert disc >= -1e-12 * s * s, f"negative discriminant {disc}"
    return -(s + math.sqrt(max(disc, 0.0))) / (2.0 * delta * rho)


def scalar_decoders(a: float, b: float, sigma_x2: float, sigma_y2: float, rho: float,
                    noise_var: float = 0.0):
    """Decoder gains (c_X, c_Y) for z = a x + b y received with additive noise."""
    cov_xz = a * sigma_x2 + b * rho
    cov_yz = a * rho + b * sigma_y2
    var_z = a * a * sigma_x2 + b * b * sigma_y2 + 2.0 * a * b * rho + noise_var
    return cov_xz / var_z, cov_yz / var_z


def _unit_direction(v: np.ndarray) -> np.ndarray:
    u = v / np.linalg.norm(v)
    return u if u[int(np.argmax(np.abs(u)))] > 0 else -u


def solve_scalar(sigma_x2: float, sigma_y2: float, rho: float, delta: float) -> ScalarNashSolution:
    """
    Closed-form scalar equilibrium, cross-checked against the vector path.

    The encoder is normalized to A = 1 with B the closed-form ratio. With
    rho = 0 the game decouples: the encoder sends Y alone (A = 0) and a
    warning is logged.
    """
    source = JointGaussian.scalar(sigma_x2, sigma_y2, rho)
    spec = GameSpec(source=source, delta=delta)
    vector = solve_nash(spec)

    if warn_if_decoupled(source, "solve_scalar"):
        a, b = 0.0, 1.0
        b_over_a = None
    else:
        b_over_a = scalar_ratio(sigma_x2, sigma_y2, rho, delta)
        a, b = 1.0, b_over_a

    c_x, c_y = scalar_decoders(a, b, sigma_x2, sigma_y2, rho)
    policy = LinearPolicyPair(f=[[a, b]], d_x=[[c_x]], d_y=[[c_y]])
    lambda1, lambda2 = scalar_eigenvalues(sigma_x2, sigma_y2, rho, delta)
    report = evaluate_linear(spec, policy, vector.transform.spectrum)

    f_vec = vector.policy.f[0]
    residual = float(np.max(np.abs(_unit_direction(np.array([a, b])) - _unit_direction(f_vec))))
    if residual > 1e-9:
        logger.warning(
            "Scalar and vector encoder directions differ by %.3e", residual,
            extra={"event": "scalar_vector_mismatch", "residual": residual},
        )
    vector_ratio = float(f_vec[1] / f_vec[0]) if f_vec[0] != 0.0 else None

    u_row = vector.transform.u_rows[0]
    alpha = float(np.dot([a, b], u_row) / np.dot(u_row, u_row))
    return ScalarNashSolution(
        transform=vector.transform,
        alphas=[alpha],
        policy=policy,
        report=report,
        payoff_dominant=True,
        spec=spec,
        a=a,
        b=b,
        b_over_a=b_over_a,
        lambda1=lambda1,
        lambda2=lambda2,
        vector_b_over_a=vector_ratio,
        direction_residual=residual,
    )
