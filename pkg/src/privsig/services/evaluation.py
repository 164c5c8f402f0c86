"""Exact and Monte Carlo evaluation of linear policies."""

import logging
from typing import Optional, Tuple

import numpy as np

from privsig.errors import DimensionMismatch, ValidationFailure
from privsig.models.game import (
    EmpiricalReport,
    EquilibriumReport,
    GameSpec,
    JointGaussian,
    LinearPolicyPair,
    Quantizer,
    SampleBatch,
)
from privsig.utils.rng import make_rng
from privsig.utils.spectral import SpectralDecomposition, as_sym, cholesky_pd, eig_sym, pinv_sym, sqrt_pd

logger = logging.getLogger(__name__)

# Stream ids under a batch seed; nonzero so keys of different length never alias
SOURCE_STREAM = 1
CHANNEL_STREAM = 2
PERTURBATION_STREAM = 3


def warn_if_decoupled(source: JointGaussian, solver: str) -> bool:
    """Log a structured warning when Sigma_XY vanishes. Returns True if it does."""
    if source.has_cross_covariance:
        return False
    logger.warning(
        "%s: zero cross-covariance, X and Y decouple", solver,
        extra={"event": "zero_cross_covariance", "solver": solver},
    )
    return True


def game_matrix(spec: GameSpec) -> np.ndarray:
    """W = Sigma^{1/2} diag(-delta I, I) Sigma^{1/2}."""
    root = sqrt_pd(spec.source.sigma)
    return as_sym((root * spec.payoff_weights) @ root)


def _encoder_moments(
    spec: GameSpec,
    f: np.ndarray,
    perturbation: Optional[np.ndarray] = None,
    quantizer: Optional[Quantizer] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    sigma = spec.source.sigma
    sigma_sz = sigma @ f.T
    sigma_z = f @ sigma_sz

    channel = spec.channel
    if channel.variant == "awgn":
        sigma_z = sigma_z + channel.noise_var * np.eye(f.shape[0])
    elif channel.variant == "discrete":
        if quantizer is None:
            raise ValidationFailure("discrete channel evaluation needs a quantizer")
        scale = float(np.sqrt(sigma_z[0, 0]))
        if scale == 0.0:
            raise ValidationFailure("discrete channel encoder must have a nonzero message")
        # s and the unit-variance u are jointly Gaussian, so E[s Q(u)] = E[s u] E[u Q(u)]
        sigma_sz = sigma_sz / scale * quantizer.cross_moment
        sigma_z = np.array([[quantizer.second_moment]])

    if perturbation is not None:
        sigma_z = sigma_z + perturbation
    return as_sym(sigma_z) if sigma_z.size else sigma_z, sigma_sz


def message_moments(spec: GameSpec, policy: LinearPolicyPair) -> Tuple[np.ndarray, np.ndarray]:
    """
    Second moments of the received message.

    Returns:
        (Sigma_Z, Sigma_SZ): covariance of what the receiver observes and
        its cross-covariance with s = (X, Y)
    """
    policy.check_source(spec.source.n_x, spec.source.n_y)
    return _encoder_moments(spec, policy.f, policy.perturbation, policy.quantizer)


def _check_channel(spec: GameSpec, policy: LinearPolicyPair):
    if policy.channel != spec.channel:
        raise ValidationFailure(
            f"policy channel {policy.channel.variant} does not match game channel {spec.channel.variant}"
        )
    if spec.channel.variant == "awgn":
        power = float((policy.f @ spec.source.sigma @ policy.f.T)[0, 0])
        if power > spec.channel.power * (1.0 + 1e-9):
            raise ValidationFailure(
                f"encoder power {power:.6g} exceeds the constraint {spec.channel.power:.6g}"
            )


def _block_mse(var_trace: float, d: np.ndarray, sigma_sz_block: np.ndarray, sigma_z: np.ndarray) -> float:
    if d.shape[1] == 0:
        return var_trace
    return var_trace - 2.0 * float(np.trace(d @ sigma_sz_block.T)) + float(np.trace(d @ sigma_z @ d.T))


def evaluate_linear(
    spec: GameSpec,
    policy: LinearPolicyPair,
    spectrum: Optional[SpectralDecomposition] = None,
) -> EquilibriumReport:
    """
    Exact MSEs of the given encoder and decoders (no sampling).

    The decoders are evaluated as given; nothing assumes they are optimal.

    Raises:
        DimensionMismatch: If the policy does not fit the source
        ValidationFailure: If the policy channel differs from the game's or
            an AWGN encoder exceeds the power constraint
    """
    _check_channel(spec, policy)
    sigma_z, sigma_sz = message_moments(spec, policy)
    source = spec.source
    n_x = source.n_x

    mse_x = _block_mse(float(np.trace(source.sigma_x)), policy.d_x, sigma_sz[:n_x], sigma_z)
    mse_y = _block_mse(float(np.trace(source.sigma_y)), policy.d_y, sigma_sz[n_x:], sigma_z)
    return EquilibriumReport.build(mse_x, mse_y, spec.delta, policy, spectrum)


def mmse_decoders(
    spec: GameSpec,
    f,
    perturbation=None,
    quantizer: Optional[Quantizer] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conditional-mean decoders D = Sigma_SZ Sigma_Z^+ for a fixed encoder.

    A near-singular Sigma_Z (redundant encoder rows, a zero encoder) is
    inverted on its range with a WARNING.

    Returns:
        (d_x, d_y) decoder matrices
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    n_x, n_y = spec.source.n_x, spec.source.n_y
    if f.shape[1] != n_x + n_y:
        raise DimensionMismatch(f"encoder has {f.shape[1]} columns, source has dimension {n_x + n_y}")
    if f.shape[0] == 0:
        return np.zeros((n_x, 0)), np.zeros((n_y, 0))

    pert = None if perturbation is None else np.asarray(perturbation, dtype=float)
    sigma_z, sigma_sz = _encoder_moments(spec, f, pert, quantizer)
    inv, truncated = pinv_sym(sigma_z)
    if truncated:
        logger.warning(
            "Message covariance is singular, using the spectral pseudo-inverse",
            extra={"event": "pseudo_inverse_fallback", "message_dim": f.shape[0]},
        )
    d = sigma_sz @ inv
    return d[:n_x], d[n_x:]


def babbling_policy(spec: GameSpec) -> LinearPolicyPair:
    """Noninformative policy: zero message, prior-mean (zero) estimates."""
    if spec.channel.variant == "discrete":
        raise ValidationFailure("a discrete channel always carries a nonzero message")
    n_x, n_y = spec.source.n_x, spec.source.n_y
    return LinearPolicyPair(
        f=np.zeros((1, n_x + n_y)),
        d_x=np.zeros((n_x, 1)),
        d_y=np.zeros((n_y, 1)),
        channel=spec.channel,
    )


def full_revelation_policy(spec: GameSpec) -> LinearPolicyPair:
    """Send s itself; identity decoders recover both blocks exactly."""
    if spec.channel.variant != "noiseless":
        raise ValidationFailure("full revelation is only defined on the noiseless channel")
    n_x, n_y = spec.source.n_x, spec.source.n_y
    eye = np.eye(n_x + n_y)
    return LinearPolicyPair(f=eye, d_x=eye[:n_x], d_y=eye[n_x:], channel=spec.channel)


def sample(spec: GameSpec, seed: int, n: int, stream: Tuple[int, ...] = ()) -> SampleBatch:
    """
    Draw n samples of (X, Y) and, on AWGN, of the channel noise.

    Source draws use the Cholesky factor of Sigma times standard normals.
    Identical (spec, seed, stream, n) reproduce identical batches; distinct
    streams under one seed are independent.
    """
    if n < 1:
        raise ValidationFailure(f"sample count must be positive, got {n}")
    factor = cholesky_pd(spec.source.sigma)
    z = make_rng(seed, *stream, SOURCE_STREAM).standard_normal((n, spec.source.dim))
    w = None
    if spec.channel.variant == "awgn":
        w = np.sqrt(spec.channel.noise_var) * make_rng(seed, *stream, CHANNEL_STREAM).standard_normal(n)
    logger.debug("Sampled %d draws (seed=%d, channel=%s)", n, seed, spec.channel.variant)
    return SampleBatch(seed=seed, n=n, n_x=spec.source.n_x, s=z @ factor.T, w=w)


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    dec = eig_sym(cov)
    return dec.q * np.sqrt(np.clip(dec.lam, 0.0, None))


def received_messages(batch: SampleBatch, spec: GameSpec, policy: LinearPolicyPair) -> np.ndarray:
    """What the receiver observes for each draw of the batch (n x message dim)."""
    z = batch.s @ policy.f.T
    if policy.perturbation is not None:
        xi = make_rng(batch.seed, PERTURBATION_STREAM).standard_normal(z.shape)
        z = z + xi @ _psd_factor(policy.perturbation).T

    variant = spec.channel.variant
    if variant == "awgn":
        if batch.w is None:
            raise ValidationFailure("awgn evaluation needs channel-noise draws in the batch")
        z = z + batch.w[:, None]
    elif variant == "discrete":
        scale = float(np.sqrt((policy.f @ spec.source.sigma @ policy.f.T)[0, 0]))
        symbols = policy.quantizer.encode(z[:, 0] / scale)
        z = policy.quantizer.decode(symbols)[:, None]
    return z


def _mean_and_stderr(values: np.ndarray) -> Tuple[float, float]:
    n = values.shape[0]
    stderr = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(values)), stderr


def empirical_report(batch: SampleBatch, spec: GameSpec, policy: LinearPolicyPair) -> EmpiricalReport:
    """
    Monte Carlo MSEs of a policy on a batch, with standard errors.

    Raises:
        DimensionMismatch: If the batch or policy does not fit the source
    """
    source = spec.source
    if batch.s.shape[1] != source.dim or batch.n_x != source.n_x:
        raise DimensionMismatch(
            f"batch has {batch.s.shape[1]} columns, source has dimension {source.dim}"
        )
    policy.check_source(source.n_x, source.n_y)
    _check_channel(spec, policy)

    r = received_messages(batch, spec, policy)
    err_x = np.sum((batch.x - r @ policy.d_x.T) ** 2, axis=1)
    err_y = np.sum((batch.y - r @ policy.d_y.T) ** 2, axis=1)

    mse_x, se_x = _mean_and_stderr(err_x)
    mse_y, se_y = _mean_and_stderr(err_y)
    _, se_je = _mean_and_stderr(err_y - spec.delta * err_x)
    return EmpiricalReport.build(
        mse_x, mse_y, spec.delta, policy,
        n=batch.n,
        mse_x_stderr=se_x,
        mse_y_stderr=se_y,
        j_e_stderr=se_je,
    )
