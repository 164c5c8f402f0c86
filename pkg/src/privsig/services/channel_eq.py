"""Scalar equilibria over an AWGN channel and over a noiseless discrete channel."""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import quad
from scipy.linalg import solve_banded
from scipy.stats import norm

from privsig.config import DEFAULTS
from privsig.errors import NonConvergence, ValidationFailure
from privsig.models.game import (
    ChannelSpec,
    EquilibriumReport,
    GameSpec,
    JointGaussian,
    LinearPolicyPair,
    Quantizer,
)
from privsig.services.equilibrium import scalar_decoders, scalar_ratio, solve_scalar
from privsig.services.evaluation import evaluate_linear, warn_if_decoupled
from privsig.utils.arrays import Vector

logger = logging.getLogger(__name__)

# Quadrature support for the standard normal
TAIL = 10.0


class NoisyEquilibrium(BaseModel):
    """Power-limited linear equilibrium z = a x + b y over AWGN."""

    model_config = ConfigDict(frozen=True)

    spec: GameSpec
    a: float
    b: float
    b_over_a: Optional[float] = None
    power_used: float
    d_x: float
    d_y: float
    u_mse: float = Field(..., description="MSE of the conveyed whitened coordinate U")
    policy: LinearPolicyPair
    report: EquilibriumReport


class DiscreteEquilibrium(BaseModel):
    """Quantized-U equilibrium over a noiseless M-ary channel."""

    model_config = ConfigDict(frozen=True)

    spec: GameSpec
    quantizer: Quantizer
    policy: LinearPolicyPair
    report: EquilibriumReport
    b_over_a: Optional[float] = None
    direction: Vector = Field(..., description="Row mapping (x, y) to the unit-variance U")
    gains: Tuple[float, float] = Field(..., description="Regression coefficients of X and Y on U")
    bins: int
    payoff_dominant: bool


def solve_awgn(
    sigma_x2: float,
    sigma_y2: float,
    rho: float,
    delta: float,
    p: float,
    sigma_w2: float,
) -> NoisyEquilibrium:
    """
    Informative linear equilibrium under average power p and noise sigma_w2.

    The encoder keeps the noiseless ratio B/A and is scaled so that its
    power equals p exactly.
    """
    channel = ChannelSpec.awgn(noise_var=sigma_w2, power=p)
    source = JointGaussian.scalar(sigma_x2, sigma_y2, rho)
    spec = GameSpec(source=source, delta=delta, channel=channel)

    if warn_if_decoupled(source, "solve_awgn"):
        a, b, ratio = 0.0, math.sqrt(p / sigma_y2), None
    else:
        ratio = scalar_ratio(sigma_x2, sigma_y2, rho, delta)
        unit_power = sigma_x2 + ratio * ratio * sigma_y2 + 2.0 * ratio * rho
        a = math.sqrt(p / unit_power)
        b = a * ratio

    power_used = a * a * sigma_x2 + b * b * sigma_y2 + 2.0 * a * b * rho
    c_x, c_y = scalar_decoders(a, b, sigma_x2, sigma_y2, rho, noise_var=sigma_w2)
    policy = LinearPolicyPair(f=[[a, b]], d_x=[[c_x]], d_y=[[c_y]], channel=channel)
    report = evaluate_linear(spec, policy)

    # U is the unit-variance coordinate along the encoder
    u_row = np.array([a, b]) / math.sqrt(power_used)
    cov_ur = float(u_row @ source.sigma @ np.array([a, b]))
    u_mse = 1.0 - cov_ur * cov_ur / (power_used + sigma_w2)

    logger.debug("AWGN equilibrium: a=%.12g b=%.12g power=%.12g", a, b, power_used)
    return NoisyEquilibrium(
        spec=spec,
        a=a,
        b=b,
        b_over_a=ratio,
        power_used=power_used,
        d_x=c_x,
        d_y=c_y,
        u_mse=u_mse,
        policy=policy,
        report=report,
    )


def _edges(boundaries: np.ndarray) -> np.ndarray:
    return np.concatenate([[-np.inf], boundaries, [np.inf]])


def _cell_mass(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # upper-tail form on the right half avoids cancellation in far cells
    right = lo >= 0.0
    return np.where(right, norm.sf(lo) - norm.sf(hi), norm.cdf(hi) - norm.cdf(lo))


def _centroids(r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Centroid map of the midpoint cells of r, with its partials in the cell edges."""
    edges = _edges((r[:-1] + r[1:]) / 2.0)
    lo, hi = edges[:-1], edges[1:]
    mass = _cell_mass(lo, hi)
    pdf_lo, pdf_hi = norm.pdf(lo), norm.pdf(hi)
    c = (pdf_lo - pdf_hi) / mass

    d_lo = np.zeros_like(c)
    d_hi = np.zeros_like(c)
    finite_lo = np.isfinite(lo)
    finite_hi = np.isfinite(hi)
    d_lo[finite_lo] = pdf_lo[finite_lo] * (c[finite_lo] - lo[finite_lo]) / mass[finite_lo]
    d_hi[finite_hi] = pdf_hi[finite_hi] * (hi[finite_hi] - c[finite_hi]) / mass[finite_hi]
    return c, d_lo, d_hi, mass


def _newton_step(r: np.ndarray, c: np.ndarray, d_lo: np.ndarray, d_hi: np.ndarray) -> np.ndarray:
    # G(r) = r - C(r); C_j depends on r_{j-1}, r_j, r_{j+1} through the midpoints
    m = r.shape[0]
    ab = np.zeros((3, m))
    ab[1] = 1.0 - 0.5 * (d_lo + d_hi)
    # banded layout: ab[0, j] holds J[j-1, j], ab[2, j] holds J[j+1, j]
    ab[0, 1:] = -0.5 * d_hi[:-1]
    ab[2, :-1] = -0.5 * d_lo[1:]
    return r + solve_banded((1, 1), ab, -(r - c))


def _distortion(r: np.ndarray, boundaries: np.ndarray) -> float:
    edges = _edges(boundaries)
    lo, hi = edges[:-1], edges[1:]
    mass = _cell_mass(lo, hi)
    first = norm.pdf(lo) - norm.pdf(hi)
    # E[(U - r)^2] over each cell: second moment - 2 r first moment + r^2 mass
    # pdf(+-inf) = 0, so the infinite edges contribute nothing
    lo_term = np.where(np.isfinite(lo), lo, 0.0) * norm.pdf(lo)
    hi_term = np.where(np.isfinite(hi), hi, 0.0) * norm.pdf(hi)
    second = mass + lo_term - hi_term
    return float(np.sum(second - 2.0 * r * first + r * r * mass))


def lloyd_max_gaussian(
    m: int,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Quantizer:
    """
    Lloyd-Max quantizer of the standard normal with m cells.

    Starts from the normal quantiles at (j + 0.5)/m and iterates the
    centroid/midpoint map, taking a Newton step on the fixed-point equation
    whenever it stays ordered and reduces the residual.

    Raises:
        NonConvergence: If the levels still move by more than tol after max_iter iterations
    """
    if m < 1:
        raise ValidationFailure(f"quantizer needs at least one cell, got {m}")
    tol = DEFAULTS.lloyd_tol if tol is None else tol
    max_iter = DEFAULTS.lloyd_max_iter if max_iter is None else max_iter
    if tol <= 0:
        raise ValidationFailure(f"tol must be positive, got {tol}")

    if m == 1:
        return Quantizer(levels=1, boundaries=[], reconstructions=[0.0], mse=1.0)

    r = norm.ppf((np.arange(m) + 0.5) / m)
    movement = math.inf
    for iteration in range(1, max_iter + 1):
        c, d_lo, d_hi, _ = _centroids(r)
        residual = float(np.max(np.abs(r - c)))

        candidate = c
        try:
            newton = _newton_step(r, c, d_lo, d_hi)
        except (ValueError, np.linalg.LinAlgError):
            newton = None
        if newton is not None and np.all(np.isfinite(newton)) and np.all(np.diff(newton) > 0):
            c_new = _centroids(newton)[0]
            if float(np.max(np.abs(newton - c_new))) < residual:
                candidate = newton

        movement = float(np.max(np.abs(candidate - r)))
        r = candidate
        if movement < tol:
            boundaries = (r[:-1] + r[1:]) / 2.0
            logger.debug("Lloyd-Max M=%d converged in %d iterations", m, iteration)
            return Quantizer(
                levels=m,
                boundaries=boundaries,
                reconstructions=r,
                mse=max(_distortion(r, boundaries), 0.0),
                iterations=iteration,
            )

    raise NonConvergence(
        f"Lloyd-Max with M={m} did not converge in {max_iter} iterations",
        iterations=max_iter,
        residual=movement,
    )


def lloyd_conditions(quantizer: Quantizer) -> Tuple[float, float]:
    """Largest (centroid, midpoint) violation of the Lloyd conditions."""
    r = quantizer.reconstructions
    if quantizer.levels == 1:
        return abs(float(r[0])), 0.0
    edges = _edges(quantizer.boundaries)
    lo, hi = edges[:-1], edges[1:]
    centroids = (norm.pdf(lo) - norm.pdf(hi)) / _cell_mass(lo, hi)
    midpoint = float(np.max(np.abs(quantizer.boundaries - (r[:-1] + r[1:]) / 2.0)))
    return float(np.max(np.abs(r - centroids))), midpoint


def integrated_distortion(quantizer: Quantizer) -> float:
    """E[(U - Q(U))^2] by adaptive quadrature on each cell, truncated at +-10."""
    edges = np.clip(_edges(quantizer.boundaries), -TAIL, TAIL)
    total = 0.0
    for j, level in enumerate(quantizer.reconstructions):
        lo, hi = float(edges[j]), float(edges[j + 1])
        if hi <= lo:
            continue
        value, _ = quad(
            lambda u, r=level: (u - r) ** 2 * norm.pdf(u),
            lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200,
        )
        total += value
    return total


def solve_discrete(
    sigma_x2: float,
    sigma_y2: float,
    rho: float,
    delta: float,
    m: int,
    bins: Optional[int] = None,
) -> DiscreteEquilibrium:
    """
    Quantize U and decode the reconstruction through Sigma^{1/2} q_1.

    With bins < m only bins of the m symbols are used; that is still an
    equilibrium, but only bins = m is payoff dominant.
    """
    if m < 2:
        raise ValidationFailure(f"a discrete channel needs at least 2 symbols, got {m}")
    bins = m if bins is None else bins
    if not 1 <= bins <= m:
        raise ValidationFailure(f"bins must lie in [1, {m}], got {bins}")

    noiseless = solve_scalar(sigma_x2, sigma_y2, rho, delta)
    transform = noiseless.transform
    direction = transform.u_rows[0]
    c_x, c_y = (float(v) for v in transform.u_decoders[:, 0])

    quantizer = lloyd_max_gaussian(bins)
    channel = ChannelSpec.discrete(m)
    spec = GameSpec(source=noiseless.spec.source, delta=delta, channel=channel)
    policy = LinearPolicyPair(
        f=direction[None, :],
        d_x=[[c_x]],
        d_y=[[c_y]],
        channel=channel,
        quantizer=quantizer,
    )
    report = evaluate_linear(spec, policy)
    b_over_a = float(direction[1] / direction[0]) if direction[0] != 0.0 else None

    logger.debug("Discrete equilibrium: M=%d bins=%d mse_U=%.12g", m, bins, quantizer.mse)
    return DiscreteEquilibrium(
        spec=spec,
        quantizer=quantizer,
        policy=policy,
        report=report,
        b_over_a=b_over_a,
        direction=direction,
        gains=(c_x, c_y),
        bins=bins,
        payoff_dominant=bins == m,
    )
