"""MMSE Gaussian information bottleneck and the mutual-information comparison."""

import logging
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from privsig.config import DEFAULTS
from privsig.errors import AlphaOutOfRange, DegenerateCovariance, ValidationFailure
from privsig.models.game import EquilibriumReport, GameSpec, JointGaussian, LinearPolicyPair
from privsig.services.evaluation import evaluate_linear, mmse_decoders, warn_if_decoupled
from privsig.utils.arrays import Matrix, Vector
from privsig.utils.spectral import (
    SpectralDecomposition,
    as_sym,
    eig_sym,
    inv_sqrt_pd,
    logdet_pd,
    sqrt_pd,
)

logger = logging.getLogger(__name__)

Regime = Literal["fully_informative", "partial", "noninformative"]

_FROZEN = ConfigDict(frozen=True)


class IBSpec(BaseModel):
    """Bottleneck instance: delta for the MMSE variant or beta for the MI variant."""

    model_config = _FROZEN

    source: JointGaussian
    delta: Optional[float] = Field(None, gt=0, description="Privacy ratio of the MMSE bottleneck")
    beta: Optional[float] = Field(None, ge=0, description="Tradeoff parameter of the MI bottleneck")

    @model_validator(mode='after')
    def check_exactly_one(self):
        if (self.delta is None) == (self.beta is None):
            raise ValueError("set exactly one of delta and beta")
        return self


class IBSolution(BaseModel):
    """Linear encoder on X conveying the k nonnegative directions of w_ib."""

    model_config = _FROZEN

    regime: Regime
    k: int = Field(..., ge=0)
    delta: float
    policy: LinearPolicyPair
    report: EquilibriumReport
    w_ib: Matrix
    spectrum: SpectralDecomposition


class EncoderDescription(BaseModel):
    """Encoder z = L x + n with n ~ N(0, noise_cov) independent of (X, Y)."""

    model_config = _FROZEN

    linear_map: Matrix
    noise_cov: Matrix


class ConstrainedIBSolution(BaseModel):
    """Minimizer of tr(Upsilon Phi) subject to tr(Phi) >= alpha."""

    model_config = _FROZEN

    phi: Matrix = Field(..., description="Error covariance of X given Z")
    objective: float = Field(..., description="tr(Upsilon Phi)")
    alpha: float
    lambda_min: float
    upsilon: Matrix
    encoder_description: EncoderDescription
    on_minimal_eigenspace: bool
    dual_weight: float = Field(..., description="Multiplier of the trace constraint")


class ChechikSolution(BaseModel):
    """Optimal Gaussian encoder A(beta) x + xi of the mutual-information bottleneck."""

    model_config = _FROZEN

    beta: float
    a_matrix: Matrix
    active_count: int = Field(..., ge=0)
    betas_critical: List[float]
    eigenvalues: Vector = Field(..., description="Ascending eigenvalues of Sigma_{X|Y} Sigma_X^{-1}")
    eigenvectors: Matrix = Field(..., description="Left eigenvectors p_i as columns, p_i^T Sigma_X p_i = 1")
    noise_cov: Matrix


class IBComparison(BaseModel):
    """MMSE and MI bottleneck policies side by side on one source."""

    model_config = _FROZEN

    mmse: IBSolution
    chechik: ChechikSolution
    chechik_report: EquilibriumReport
    mmse_information: Tuple[float, float]
    chechik_information: Tuple[float, float]


def ib_threshold(sigma_x2: float, rho: float) -> float:
    """Scalar delta below which the MMSE bottleneck reveals X completely."""
    return rho * rho / (sigma_x2 * sigma_x2)


def _ib_matrix(source: JointGaussian, delta: float) -> Tuple[np.ndarray, np.ndarray, float]:
    r = inv_sqrt_pd(source.sigma_x)
    gain = as_sym(r @ source.sigma_xy @ source.sigma_yx @ r)
    scale = max(
        float(np.max(np.abs(eig_sym(gain).lam))),
        delta * float(eig_sym(source.sigma_x).lam[0]),
    )
    return as_sym(gain - delta * source.sigma_x), r, DEFAULTS.zero_tol_rel * scale


def solve_mmse_ib(spec: IBSpec) -> IBSolution:
    """
    MMSE information bottleneck: the sender observes X only.

    Conveys q_i^T Sigma_X^{-1/2} x for every eigenvalue of w_ib at or above
    -zero_tol. The report is evaluated against the full (X, Y) source.
    """
    if spec.delta is None:
        raise ValidationFailure("the MMSE bottleneck needs delta")
    source = spec.source
    warn_if_decoupled(source, "solve_mmse_ib")
    delta = spec.delta

    w_ib, r, zero_tol = _ib_matrix(source, delta)
    spectrum = eig_sym(w_ib, sort="descending", zero_tol=zero_tol)
    keep = spectrum.nonnegative_mask
    k = int(keep.sum())
    q = spectrum.q[:, keep]

    n_x, n_y = source.n_x, source.n_y
    f = np.zeros((k, n_x + n_y))
    f[:, :n_x] = q.T @ r
    d_x = sqrt_pd(source.sigma_x) @ q
    d_y = source.sigma_yx @ r @ q
    policy = LinearPolicyPair(f=f, d_x=d_x, d_y=d_y)

    if k == 0:
        regime = "noninformative"
    elif k == n_x and spectrum.n_pos == n_x:
        regime = "fully_informative"
    else:
        regime = "partial"

    report = evaluate_linear(GameSpec(source=source, delta=delta), policy, spectrum)
    logger.debug("MMSE bottleneck: k=%d of %d (%s)", k, n_x, regime)
    return IBSolution(
        regime=regime,
        k=k,
        delta=delta,
        policy=policy,
        report=report,
        w_ib=w_ib,
        spectrum=spectrum,
    )


def upsilon_matrix(source: JointGaussian) -> np.ndarray:
    """Sigma_X^{-1} Sigma_XY Sigma_YX Sigma_X^{-1}."""
    inv_x = np.linalg.inv(source.sigma_x)
    return as_sym(inv_x @ source.sigma_xy @ source.sigma_yx @ inv_x)


def _describe_encoder(phi: np.ndarray, root_x: np.ndarray) -> EncoderDescription:
    """Linear map plus Gaussian noise whose posterior error covariance is phi."""
    inv_root = np.linalg.inv(root_x)
    dec = eig_sym(as_sym(inv_root @ phi @ inv_root))
    p = np.clip(dec.lam, 0.0, 1.0)
    # error fraction p_i along whitened direction v_i needs noise variance p/(1-p)
    sent = p < 1.0 - 1e-12
    rows = dec.q[:, sent].T @ inv_root
    noise = np.where(p[sent] > 1e-12, p[sent] / (1.0 - p[sent]), 0.0)
    k = int(sent.sum())
    return EncoderDescription(
        linear_map=rows.reshape(k, phi.shape[0]),
        noise_cov=np.diag(noise).reshape(k, k),
    )


def realized_error_covariance(source: JointGaussian, encoder: EncoderDescription) -> np.ndarray:
    """Cov(X - E[X|Z]) produced by an encoder description."""
    if encoder.linear_map.shape[0] == 0:
        return np.array(source.sigma_x)
    cross = source.sigma_x @ encoder.linear_map.T
    sigma_z = encoder.linear_map @ cross + encoder.noise_cov
    return as_sym(source.sigma_x - cross @ np.linalg.solve(sigma_z, cross.T))


def _projected_trace(root_x: np.ndarray, gain: np.ndarray, sigma_x: np.ndarray, mu: float, tol: float):
    """Error covariance pieces for weight mu: (strictly negative part, null part) of B(mu)."""
    b = as_sym(gain - mu * sigma_x)
    dec = eig_sym(b, zero_tol=tol)
    neg = dec.columns(dec.negative_mask)
    null = dec.columns(~(dec.negative_mask | dec.positive_mask))
    return root_x @ neg @ neg.T @ root_x, root_x @ null @ null.T @ root_x


def _breakpoints(lam: np.ndarray, tol: float) -> List[float]:
    """Distinct eigenvalues in ascending order, ties within tol merged."""
    points: List[float] = []
    for value in np.sort(lam):
        if not points or value - points[-1] > tol:
            points.append(float(value))
    return points


def _water_fill(source: JointGaussian, upsilon_dec: SpectralDecomposition, alpha: float):
    root_x = sqrt_pd(source.sigma_x)
    gain = as_sym(root_x @ upsilon_dec.reconstruct() @ root_x)
    top = max(float(np.max(np.abs(upsilon_dec.lam))), 1e-300)
    tol = 1e-9 * top * float(eig_sym(source.sigma_x).lam[0])
    breakpoints = _breakpoints(upsilon_dec.lam, DEFAULTS.zero_tol_rel * top)

    for j, mu in enumerate(breakpoints):
        phi_neg, phi_null = _projected_trace(root_x, gain, source.sigma_x, mu, tol)
        t_lo = float(np.trace(phi_neg))
        t_hi = t_lo + float(np.trace(phi_null))
        if alpha < t_lo and j > 0:
            # trace of the error covariance grows continuously between breakpoints
            lo, hi = breakpoints[j - 1], mu
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                phi_mid, _ = _projected_trace(root_x, gain, source.sigma_x, mid, tol)
                if float(np.trace(phi_mid)) < alpha:
                    lo = mid
                else:
                    hi = mid
            mu_star = 0.5 * (lo + hi)
            phi, _ = _projected_trace(root_x, gain, source.sigma_x, mu_star, tol)
            return phi * (alpha / float(np.trace(phi))), mu_star
        if alpha <= t_hi:
            theta = (alpha - t_lo) / (t_hi - t_lo)
            return phi_neg + theta * phi_null, mu

    # alpha = tr(Sigma_X): nothing is revealed
    return np.array(source.sigma_x), breakpoints[-1]


def solve_constrained_ib(source: JointGaussian, alpha: float) -> ConstrainedIBSolution:
    """
    Minimize tr(Upsilon Phi) over error covariances Phi with tr(Phi) >= alpha.

    While alpha fits in the minimal eigenspace E of Upsilon (alpha at most
    tr (E^T Sigma_X^{-1} E)^{-1}) the optimum is alpha * lambda_min with Phi
    supported on E. Beyond that the trace constraint is met by water-filling
    over the dual weight and on_minimal_eigenspace is False.

    Raises:
        AlphaOutOfRange: If alpha is outside [0, tr(Sigma_X)]
    """
    trace_x = float(np.trace(source.sigma_x))
    if not (0.0 <= alpha <= trace_x * (1.0 + 1e-12)):
        raise AlphaOutOfRange(f"alpha must lie in [0, {trace_x:.6g}], got {alpha}")
    alpha = min(alpha, trace_x)

    upsilon = upsilon_matrix(source)
    dec = eig_sym(upsilon)
    lambda_min = float(dec.lam[-1])
    tie = dec.lam <= lambda_min + DEFAULTS.zero_tol_rel * max(float(np.max(np.abs(dec.lam))), 1e-300)
    e = dec.columns(tie)
    support = np.linalg.inv(e.T @ np.linalg.solve(source.sigma_x, e))
    capacity = float(np.trace(support))

    if alpha <= capacity * (1.0 + 1e-12):
        phi = as_sym(e @ support @ e.T * (alpha / capacity)) if capacity > 0 else np.zeros_like(upsilon)
        on_min, dual = True, lambda_min
    else:
        logger.warning(
            "Constrained bottleneck: alpha=%.6g exceeds the minimal-eigenspace capacity %.6g, water-filling",
            alpha, capacity,
            extra={"event": "constrained_ib_corner", "alpha": alpha, "capacity": capacity},
        )
        phi, dual = _water_fill(source, dec, alpha)
        phi = as_sym(phi)
        on_min = False

    objective = float(np.trace(upsilon @ phi))
    return ConstrainedIBSolution(
        phi=phi,
        objective=objective,
        alpha=alpha,
        lambda_min=lambda_min,
        upsilon=upsilon,
        encoder_description=_describe_encoder(phi, sqrt_pd(source.sigma_x)),
        on_minimal_eigenspace=on_min,
        dual_weight=dual,
    )


def solve_chechik(source: JointGaussian, beta: float) -> ChechikSolution:
    """
    Gaussian bottleneck encoder A(beta) x + xi with xi ~ N(0, I).

    Rows are alpha_i p_i^T for the directions with beta >= 1 / (1 - lambda_i),
    lambda_i the ascending eigenvalues of Sigma_{X|Y} Sigma_X^{-1}. At the
    critical beta itself alpha_i is zero.
    """
    if beta < 0:
        raise ValidationFailure(f"beta must be nonnegative, got {beta}")
    sigma_x_given_y = source.sigma_x - source.sigma_xy @ np.linalg.solve(source.sigma_y, source.sigma_yx)
    r = inv_sqrt_pd(source.sigma_x)
    dec = eig_sym(as_sym(r @ sigma_x_given_y @ r))
    order = np.argsort(dec.lam, kind="stable")
    lam = np.clip(dec.lam[order], 0.0, 1.0)
    p = r @ dec.q[:, order]

    n_x = source.n_x
    a = np.zeros((n_x, n_x))
    betas_critical = []
    active = 0
    for i in range(n_x):
        gap = 1.0 - lam[i]
        beta_c = math.inf if gap <= 1e-12 else 1.0 / gap
        betas_critical.append(beta_c)
        if beta >= beta_c:
            active += 1
            scale = p[:, i] @ source.sigma_x @ p[:, i]
            a[i] = math.sqrt(max(beta * gap - 1.0, 0.0) / (lam[i] * scale)) * p[:, i]

    logger.debug("Chechik bottleneck at beta=%.6g: %d active directions", beta, active)
    return ChechikSolution(
        beta=beta,
        a_matrix=a,
        active_count=active,
        betas_critical=betas_critical,
        eigenvalues=lam,
        eigenvectors=p,
        noise_cov=np.eye(n_x),
    )


def chechik_policy(spec: GameSpec, solution: ChechikSolution) -> LinearPolicyPair:
    """Active rows of A(beta) on X, unit perturbation, MMSE decoders for both blocks."""
    source = spec.source
    rows = solution.a_matrix[:solution.active_count]
    f = np.zeros((rows.shape[0], source.dim))
    f[:, :source.n_x] = rows
    if rows.shape[0] == 0:
        return LinearPolicyPair(f=f, d_x=np.zeros((source.n_x, 0)), d_y=np.zeros((source.n_y, 0)))
    perturbation = np.eye(rows.shape[0])
    d_x, d_y = mmse_decoders(spec, f, perturbation=perturbation)
    return LinearPolicyPair(f=f, d_x=d_x, d_y=d_y, perturbation=perturbation)


def _conditional_information(
    sigma_z: np.ndarray,
    cross: np.ndarray,
    cond_cov: np.ndarray,
) -> float:
    # I(A; Z) = 1/2 [logdet Sigma_Z - logdet Sigma_{Z|A}] on the support of Z
    dec = eig_sym(sigma_z)
    top = float(np.max(np.abs(dec.lam))) if dec.dim else 0.0
    if top == 0.0:
        return 0.0
    support = dec.columns(dec.lam > DEFAULTS.pinv_rel_cutoff * top)
    z_cov = as_sym(support.T @ sigma_z @ support)
    c = support.T @ cross
    conditional = as_sym(z_cov - c @ np.linalg.solve(cond_cov, c.T))

    cond_lam = eig_sym(conditional).lam
    floor = 1e-10 * top
    if cond_lam[-1] < -floor:
        raise DegenerateCovariance(
            f"conditional message covariance has eigenvalue {cond_lam[-1]:.6g}"
        )
    if cond_lam[-1] <= floor:
        return math.inf
    return max(0.5 * (logdet_pd(z_cov) - logdet_pd(conditional)), 0.0)


def gaussian_mutual_information(source: JointGaussian, policy: LinearPolicyPair) -> Tuple[float, float]:
    """
    (I(X;Z), I(Y;Z)) in nats for a linear Gaussian encoder.

    A component of Z that is deterministic given the conditioning block
    gives infinite information.

    Raises:
        DegenerateCovariance: On an inconsistent (negative) conditional covariance
    """
    policy.check_source(source.n_x, source.n_y)
    if policy.channel.variant == "discrete":
        raise ValidationFailure("mutual information is computed for Gaussian messages only")
    k = policy.message_dim
    if k == 0:
        return 0.0, 0.0

    f = policy.f
    sigma_z = f @ source.sigma @ f.T
    if policy.perturbation is not None:
        sigma_z = sigma_z + policy.perturbation
    if policy.channel.variant == "awgn":
        sigma_z = sigma_z + policy.channel.noise_var * np.eye(k)
    sigma_z = as_sym(sigma_z)
    cross = f @ source.sigma

    n_x = source.n_x
    i_x = _conditional_information(sigma_z, cross[:, :n_x], source.sigma_x)
    i_y = _conditional_information(sigma_z, cross[:, n_x:], source.sigma_y)
    return i_x, i_y


def compare_ib(source: JointGaussian, delta: float, beta: float) -> IBComparison:
    """Solve both bottlenecks and report information and MSE for each."""
    mmse = solve_mmse_ib(IBSpec(source=source, delta=delta))
    chechik = solve_chechik(source, beta)
    spec = GameSpec(source=source, delta=delta)
    policy = chechik_policy(spec, chechik)
    return IBComparison(
        mmse=mmse,
        chechik=chechik,
        chechik_report=evaluate_linear(spec, policy),
        mmse_information=gaussian_mutual_information(source, mmse.policy),
        chechik_information=gaussian_mutual_information(source, policy),
    )
