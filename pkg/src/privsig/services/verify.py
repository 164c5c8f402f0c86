"""Numerical certificates for equilibrium claims."""

import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from privsig.config import DEFAULTS
from privsig.errors import IndefiniteEncoderCost, ValidationFailure
from privsig.models.game import EmpiricalReport, EquilibriumReport, GameSpec, LinearPolicyPair
from privsig.models.requests import TABLE_PRESET
from privsig.services.channel_eq import NoisyEquilibrium, solve_awgn
from privsig.services.equilibrium import NashSolution, solve_scalar, solve_stackelberg
from privsig.services.evaluation import empirical_report, evaluate_linear, mmse_decoders, sample
from privsig.utils.rng import make_rng

logger = logging.getLogger(__name__)

Verdict = Literal["certified", "violated"]

# Exponents of the nonlinear deviation family sign(u)|u|^p
NONLINEAR_POWERS = (1.0 / 3.0, 1.0, 3.0)

# Relative encoder perturbation of the negative control
CORRUPT_REL = 0.05

# Stream roles of a nonlinear candidate
_FIT, _SCORE = 1, 2


class DeviationReport(BaseModel):
    """Outcome of a unilateral-deviation check on the sender."""

    model_config = ConfigDict(frozen=True)

    baseline_je: float
    tested: int = Field(..., ge=0)
    best_deviation_je: float
    margin: float = Field(..., description="Smallest (deviation J^e + MC band) - baseline J^e")
    verdict: Verdict
    tolerance: float
    details: List[str] = Field(default_factory=list)


class ConsistencyReport(BaseModel):
    """Analytic vs Monte Carlo payoffs of one policy."""

    model_config = ConfigDict(frozen=True)

    passed: bool
    analytic: EquilibriumReport
    empirical: EmpiricalReport
    z_x: float
    z_y: float
    k_sigma: float


class TableCertificate(BaseModel):
    """Fixed-point certificate of one (rho, delta) row."""

    model_config = ConfigDict(frozen=True)

    rho: float
    delta: float
    b_over_a: Optional[float]
    report: DeviationReport


def _scalar_parts(
    solution: Union[NashSolution, NoisyEquilibrium],
    spec: Optional[GameSpec],
) -> Tuple[GameSpec, LinearPolicyPair]:
    spec = spec if spec is not None else getattr(solution, "spec", None)
    if spec is None or not spec.source.is_scalar:
        raise ValidationFailure("check_nash_scalar needs a scalar solution")
    return spec, solution.policy


def check_nash_scalar(
    solution: Union[NashSolution, NoisyEquilibrium],
    tol: Optional[float] = None,
    spec: Optional[GameSpec] = None,
) -> DeviationReport:
    """
    Best-response fixed-point test of a scalar equilibrium.

    Decoder side: the MMSE decoders of the encoder equal the solution's.
    Encoder side: with the decoders fixed, the pointwise minimizer
    (c_Y y - delta c_X x) / (c_Y^2 - delta c_X^2), scaled down to power P on
    AWGN when it exceeds it, equals a x + b y.
    """
    tol = DEFAULTS.verify_tol if tol is None else tol
    spec, policy = _scalar_parts(solution, spec)
    delta = spec.delta
    a, b = (float(v) for v in policy.f[0])
    c_x, c_y = float(policy.d_x[0, 0]), float(policy.d_y[0, 0])
    baseline = evaluate_linear(spec, policy).j_e
    details: List[str] = []

    mmse_x, mmse_y = mmse_decoders(spec, policy.f)
    decoder_gap = max(abs(float(mmse_x[0, 0]) - c_x), abs(float(mmse_y[0, 0]) - c_y))
    if decoder_gap > tol * (1.0 + abs(c_x) + abs(c_y)):
        details.append(f"decoders differ from the MMSE decoders by {decoder_gap:.3e}")

    best = baseline
    try:
        curvature = c_y * c_y - delta * c_x * c_x
        if curvature <= tol:
            raise IndefiniteEncoderCost(
                f"sender cost is not strictly convex in z (c_Y^2 - delta c_X^2 = {curvature:.3e})",
                curvature=curvature,
            )
        response = np.array([-delta * c_x, c_y]) / curvature
        if spec.channel.variant == "awgn":
            power = float(response @ spec.source.sigma @ response)
            if power > spec.channel.power:
                response = response * math.sqrt(spec.channel.power / power)

        encoder_gap = float(np.max(np.abs(response - np.array([a, b]))))
        if encoder_gap > tol * (abs(a) + abs(b)):
            details.append(f"encoder is not a best response (gap {encoder_gap:.3e})")
            deviated = LinearPolicyPair(
                f=response[None, :], d_x=policy.d_x, d_y=policy.d_y, channel=policy.channel,
            )
            best = min(best, evaluate_linear(spec, deviated).j_e)
    except IndefiniteEncoderCost as e:
        details.append(str(e))

    verdict = "violated" if details else "certified"
    logger.info("Nash fixed-point check: %s%s", verdict, f" ({'; '.join(details)})" if details else "")
    return DeviationReport(
        baseline_je=baseline,
        tested=1,
        best_deviation_je=best,
        margin=best - baseline,
        verdict=verdict,
        tolerance=tol,
        details=details,
    )


def _canonical(spec: GameSpec) -> EquilibriumReport:
    if spec.channel.variant == "awgn":
        s = spec.source.sigma
        return solve_awgn(s[0, 0], s[1, 1], s[0, 1], spec.delta,
                          spec.channel.power, spec.channel.noise_var).report
    return solve_stackelberg(spec).report


def _linear_je(spec: GameSpec, f: np.ndarray) -> float:
    d_x, d_y = mmse_decoders(spec, f)
    policy = LinearPolicyPair(f=f, d_x=d_x, d_y=d_y, channel=spec.channel)
    return evaluate_linear(spec, policy).j_e


def _power_scaled(spec: GameSpec, f: np.ndarray, target: float) -> np.ndarray:
    power = float((f @ spec.source.sigma @ f.T)[0, 0])
    return f * math.sqrt(min(target, spec.channel.power) / power)


def _nonlinear_je(spec: GameSpec, seed: int, index: int, p: float, n: int, bins: int) -> Tuple[float, float]:
    """
    Held-out J^e (and its standard error) of sign(u)|u|^p with binned
    conditional-mean decoders. On AWGN the message is scaled so that
    E[z^2] = P and the decoders see z plus the channel noise.
    """
    rng = make_rng(seed, index)
    pre = rng.standard_normal(spec.source.dim)
    scale = math.sqrt(float(pre @ spec.source.sigma @ pre))
    awgn = spec.channel.variant == "awgn"
    if awgn:
        # E|u|^{2p} for standard normal u
        second_moment = 2.0 ** p * math.gamma(p + 0.5) / math.sqrt(math.pi)
        gain = math.sqrt(spec.channel.power / second_moment)

    def message(batch):
        u = batch.s @ pre / scale
        z = np.sign(u) * np.abs(u) ** p
        if awgn:
            z = gain * z + batch.w
        return z

    fit = sample(spec, seed, n, stream=(index, _FIT))
    z_fit = message(fit)
    edges = np.quantile(z_fit, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    cells = np.searchsorted(edges, z_fit, side="right")
    counts = np.maximum(np.bincount(cells, minlength=bins), 1)
    mean_x = np.stack([np.bincount(cells, weights=fit.x[:, j], minlength=bins) for j in range(fit.x.shape[1])], axis=1) / counts[:, None]
    mean_y = np.stack([np.bincount(cells, weights=fit.y[:, j], minlength=bins) for j in range(fit.y.shape[1])], axis=1) / counts[:, None]

    score = sample(spec, seed, n, stream=(index, _SCORE))
    held = np.searchsorted(edges, message(score), side="right")
    err_x = np.sum((score.x - mean_x[held]) ** 2, axis=1)
    err_y = np.sum((score.y - mean_y[held]) ** 2, axis=1)
    j = err_y - spec.delta * err_x
    return float(np.mean(j)), float(np.std(j, ddof=1) / math.sqrt(n))


def check_stackelberg(
    spec: GameSpec,
    solution,
    n_encoders: int = 200,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    n_nonlinear: int = 30,
    mc_samples: Optional[int] = None,
) -> DeviationReport:
    """
    Deviation sampling against a committed sender policy.

    Candidates: the canonical payoff-dominant encoder, local perturbations
    of it, and random linear maps of random rank (power feasible on AWGN),
    all with exact MMSE decoders; for scalar sources also the family
    sign(u)|u|^p on random linear pre-maps (scaled to power P on AWGN),
    decoded by binned conditional means fitted on one batch and scored on
    another. Each candidate draws from its own stream (seed, index).
    """
    tol = DEFAULTS.verify_tol if tol is None else tol
    seed = DEFAULTS.default_seed if seed is None else seed
    mc_samples = DEFAULTS.mc_fit_samples if mc_samples is None else mc_samples
    if spec.channel.variant == "discrete":
        raise ValidationFailure("deviation sampling covers the noiseless and AWGN channels")

    baseline = float(solution.report.j_e)
    band_tol = tol * max(1.0, abs(baseline))
    dim = spec.source.dim
    awgn = spec.channel.variant == "awgn"
    canonical_f = np.asarray(solution.policy.f if awgn else solve_stackelberg(spec).policy.f)

    # (label, J^e, Monte Carlo band)
    results: List[Tuple[str, float, float]] = [("canonical", _canonical(spec).j_e, 0.0)]
    n_local = n_encoders // 4
    for index in range(1, n_encoders + 1):
        rng = make_rng(seed, index)
        if index <= n_local:
            eps = 10.0 ** rng.uniform(-4, -1)
            f = canonical_f + eps * rng.standard_normal(canonical_f.shape)
            label = f"local[{index}]"
            target = float((f @ spec.source.sigma @ f.T)[0, 0]) if awgn else 0.0
        else:
            rank = 1 if awgn else int(rng.integers(1, dim + 1))
            f = rng.standard_normal((rank, dim))
            label = f"linear[{index}] rank {rank}"
            target = spec.channel.power * rng.uniform(0.05, 1.0) if awgn else 0.0
        if awgn:
            f = _power_scaled(spec, f, target)
        results.append((label, _linear_je(spec, f), 0.0))

    if spec.source.is_scalar:
        for j in range(n_nonlinear):
            index = n_encoders + 1 + j
            p = NONLINEAR_POWERS[j % len(NONLINEAR_POWERS)]
            je, stderr = _nonlinear_je(spec, seed, index, p, mc_samples, DEFAULTS.mc_bins)
            results.append((f"nonlinear[{index}] p={p:.3g}", je, DEFAULTS.k_sigma * stderr))

    label, best_je, band = min(results, key=lambda r: r[1] + r[2])
    margin = best_je + band - baseline
    verdict = "certified" if margin >= -band_tol else "violated"
    details = [] if verdict == "certified" else [f"{label} improves J^e to {best_je:.12g}"]
    logger.info("Stackelberg deviation check over %d candidates: %s", len(results), verdict)
    return DeviationReport(
        baseline_je=baseline,
        tested=len(results),
        best_deviation_je=best_je,
        margin=margin,
        verdict=verdict,
        tolerance=band_tol,
        details=details,
    )


def check_consistency(
    spec: GameSpec,
    policy: LinearPolicyPair,
    n: int,
    seed: Optional[int] = None,
    k_sigma: Optional[float] = None,
) -> ConsistencyReport:
    """Analytic and empirical MSEs agree within k_sigma standard errors."""
    seed = DEFAULTS.default_seed if seed is None else seed
    k_sigma = DEFAULTS.k_sigma if k_sigma is None else k_sigma
    analytic = evaluate_linear(spec, policy)
    empirical = empirical_report(sample(spec, seed, n), spec, policy)

    def z_score(emp: float, exact: float, stderr: float) -> float:
        if stderr > 0:
            return (emp - exact) / stderr
        return 0.0 if math.isclose(emp, exact, rel_tol=1e-9, abs_tol=1e-12) else math.inf

    z_x = z_score(empirical.mse_x, analytic.mse_x, empirical.mse_x_stderr)
    z_y = z_score(empirical.mse_y, analytic.mse_y, empirical.mse_y_stderr)
    passed = abs(z_x) <= k_sigma and abs(z_y) <= k_sigma
    logger.info("Consistency check n=%d: z_x=%.3f z_y=%.3f (%s)", n, z_x, z_y, "pass" if passed else "fail")
    return ConsistencyReport(
        passed=passed,
        analytic=analytic,
        empirical=empirical,
        z_x=z_x,
        z_y=z_y,
        k_sigma=k_sigma,
    )


def perturb_encoder(spec: GameSpec, solution, rel: float = CORRUPT_REL):
    """
    Copy of a solution with the encoder weights on Y scaled by (1 + rel).

    Decoders are re-fitted by MMSE and the report recomputed, so only the
    sender side is off equilibrium. On AWGN the encoder is rescaled back to
    power P.
    """
    policy = solution.policy
    f = np.array(policy.f)
    f[:, spec.source.n_x:] *= 1.0 + rel
    if spec.channel.variant == "awgn":
        f *= math.sqrt(spec.channel.power / float((f @ spec.source.sigma @ f.T)[0, 0]))
    d_x, d_y = mmse_decoders(spec, f, policy.perturbation, policy.quantizer)
    perturbed = LinearPolicyPair(
        f=f,
        d_x=d_x,
        d_y=d_y,
        channel=policy.channel,
        perturbation=policy.perturbation,
        quantizer=policy.quantizer,
    )
    return solution.model_copy(update={"policy": perturbed, "report": evaluate_linear(spec, perturbed)})


def certify_table(
    grid: Sequence[Tuple[float, float]] = TABLE_PRESET,
    sigma_x2: float = 1.0,
    sigma_y2: float = 1.0,
    tol: Optional[float] = None,
    perturb: float = 0.0,
) -> List[TableCertificate]:
    """Run check_nash_scalar on every (rho, delta) of the grid, optionally on perturbed encoders."""
    rows = []
    for rho, delta in grid:
        solution = solve_scalar(sigma_x2, sigma_y2, rho, delta)
        if perturb:
            solution = perturb_encoder(solution.spec, solution, perturb)
        rows.append(TableCertificate(
            rho=rho,
            delta=delta,
            b_over_a=solution.b_over_a,
            report=check_nash_scalar(solution, tol),
        ))
    return rows
