"""Domain models: sources, channels, policies and payoff reports."""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm

from privsig.config import DEFAULTS
from privsig.errors import DimensionMismatch, NotPositiveDefinite
from privsig.utils.arrays import Matrix, Vector
from privsig.utils.spectral import SpectralDecomposition, as_sym, eig_sym

_FROZEN = ConfigDict(frozen=True)


class JointGaussian(BaseModel):
    """Zero-mean jointly Gaussian (X, Y) with block covariance, X block first."""

    model_config = _FROZEN

    n_x: int = Field(..., ge=1, description="Dimension of the private parameter X")
    n_y: int = Field(..., ge=1, description="Dimension of the conveyed parameter Y")
    sigma: Matrix = Field(..., description="Covariance [[S_X, S_XY], [S_YX, S_Y]]")

    @model_validator(mode='after')
    def check_covariance(self):
        """Symmetrize sigma and require positive definiteness."""
        n = self.n_x + self.n_y
        if self.sigma.shape != (n, n):
            raise DimensionMismatch(
                f"sigma has shape {self.sigma.shape}, expected ({n}, {n})"
            )
        sym = as_sym(self.sigma)
        sym.setflags(write=False)
        object.__setattr__(self, "sigma", sym)

        lam = eig_sym(sym).lam
        if lam[-1] <= DEFAULTS.pd_rel_tol * abs(lam[0]):
            raise NotPositiveDefinite(
                f"source covariance is not positive definite (eigenvalue {lam[-1]:.6g})",
                eigenvalue=float(lam[-1]),
            )
        return self

    @classmethod
    def scalar(cls, sigma_x2: float, sigma_y2: float, rho: float) -> "JointGaussian":
        """Scalar pair with variances sigma_x2, sigma_y2 and covariance rho."""
        return cls(n_x=1, n_y=1, sigma=[[sigma_x2, rho], [rho, sigma_y2]])

    @property
    def dim(self) -> int:
        return self.n_x + self.n_y

    @property
    def is_scalar(self) -> bool:
        return self.n_x == 1 and self.n_y == 1

    @property
    def sigma_x(self) -> np.ndarray:
        return self.sigma[:self.n_x, :self.n_x]

    @property
    def sigma_y(self) -> np.ndarray:
        return self.sigma[self.n_x:, self.n_x:]

    @property
    def sigma_xy(self) -> np.ndarray:
        return self.sigma[:self.n_x, self.n_x:]

    @property
    def sigma_yx(self) -> np.ndarray:
        return self.sigma[self.n_x:, :self.n_x]

    @property
    def has_cross_covariance(self) -> bool:
        return bool(np.any(self.sigma_xy != 0.0))


class ChannelSpec(BaseModel):
    """Channel between sender and receiver."""

    model_config = _FROZEN

    variant: Literal["noiseless", "awgn", "discrete"] = Field("noiseless")
    noise_var: Optional[float] = Field(None, gt=0, description="AWGN noise variance sigma_W^2")
    power: Optional[float] = Field(None, gt=0, description="Average power constraint P")
    levels: Optional[int] = Field(None, ge=2, description="Number of discrete symbols M")

    @model_validator(mode='after')
    def check_variant_fields(self):
        """Each variant carries exactly its own parameters."""
        if self.variant == "awgn":
            if self.noise_var is None or self.power is None:
                raise ValueError("awgn channel needs noise_var and power")
        elif self.noise_var is not None or self.power is not None:
            raise ValueError(f"{self.variant} channel takes no noise_var/power")
        if self.variant == "discrete":
            if self.levels is None:
                raise ValueError("discrete channel needs levels")
        elif self.levels is not None:
            raise ValueError(f"{self.variant} channel takes no levels")
        return self

    @classmethod
    def noiseless(cls) -> "ChannelSpec":
        return cls()

    @classmethod
    def awgn(cls, noise_var: float, power: float) -> "ChannelSpec":
        return cls(variant="awgn", noise_var=noise_var, power=power)

    @classmethod
    def discrete(cls, levels: int) -> "ChannelSpec":
        return cls(variant="discrete", levels=levels)


class GameSpec(BaseModel):
    """A privacy-signaling game instance."""

    model_config = _FROZEN

    source: JointGaussian
    delta: float = Field(..., gt=0, description="Privacy ratio")
    channel: ChannelSpec = Field(default_factory=ChannelSpec)

    @model_validator(mode='after')
    def check_channel_support(self):
        """Channels other than noiseless are only solved for scalar sources."""
        if self.channel.variant != "noiseless" and not self.source.is_scalar:
            raise ValueError(f"{self.channel.variant} channel requires scalar X and Y")
        return self

    @property
    def payoff_weights(self) -> np.ndarray:
        """Diagonal of diag(-delta I, I)."""
        return np.concatenate([
            np.full(self.source.n_x, -self.delta),
            np.ones(self.source.n_y),
        ])


class Quantizer(BaseModel):
    """Scalar quantizer for a unit-variance Gaussian message."""

    model_config = _FROZEN

    levels: int = Field(..., ge=1)
    boundaries: Vector = Field(..., description="M-1 increasing cell boundaries")
    reconstructions: Vector = Field(..., description="M increasing reconstruction points")
    mse: float = Field(..., ge=0, description="Distortion of quantizing a standard normal")
    iterations: int = Field(0, ge=0)

    @model_validator(mode='after')
    def check_shapes(self):
        if self.boundaries.shape != (self.levels - 1,):
            raise ValueError("quantizer needs levels-1 boundaries")
        if self.reconstructions.shape != (self.levels,):
            raise ValueError("quantizer needs levels reconstruction points")
        return self

    @property
    def cell_edges(self) -> np.ndarray:
        return np.concatenate([[-np.inf], self.boundaries, [np.inf]])

    @property
    def cell_probabilities(self) -> np.ndarray:
        return np.diff(norm.cdf(self.cell_edges))

    @property
    def second_moment(self) -> float:
        """E[Q(U)^2] for U standard normal."""
        return float(np.sum(self.reconstructions ** 2 * self.cell_probabilities))

    @property
    def cross_moment(self) -> float:
        """E[U Q(U)]; equals second_moment at a centroid fixed point."""
        edges = self.cell_edges
        return float(np.sum(self.reconstructions * (norm.pdf(edges[:-1]) - norm.pdf(edges[1:]))))

    def encode(self, u: np.ndarray) -> np.ndarray:
        """Symbol index of each sample; ascending cells map to 0..M-1."""
        return np.searchsorted(self.boundaries, u, side="right")

    def decode(self, symbols: np.ndarray) -> np.ndarray:
        return self.reconstructions[symbols]


class LinearPolicyPair(BaseModel):
    """
    Linear encoder z = F s (+ perturbation) with linear decoders.

    On a discrete channel the message is the quantizer symbol of F s scaled
    to unit variance, and the decoders act on its reconstruction value.
    """

    model_config = _FROZEN

    f: Matrix = Field(..., description="Encoder, rows = message dim, cols = n_x + n_y")
    d_x: Matrix = Field(..., description="Decoder for X, cols = message dim")
    d_y: Matrix = Field(..., description="Decoder for Y, cols = message dim")
    channel: ChannelSpec = Field(default_factory=ChannelSpec)
    perturbation: Optional[Matrix] = Field(None, description="Covariance of Gaussian noise added at the encoder")
    quantizer: Optional[Quantizer] = None

    @model_validator(mode='after')
    def check_dimensions(self):
        k = self.f.shape[0]
        if self.d_x.shape[1] != k or self.d_y.shape[1] != k:
            raise DimensionMismatch(
                f"decoders have {self.d_x.shape[1]}/{self.d_y.shape[1]} columns for a {k}-dim message"
            )
        if self.perturbation is not None and self.perturbation.shape != (k, k):
            raise DimensionMismatch("perturbation covariance must match the message dimension")
        if self.channel.variant == "discrete":
            if self.quantizer is None or self.quantizer.levels > self.channel.levels:
                raise ValueError("discrete channel policy needs a quantizer with at most levels cells")
            if k != 1:
                raise DimensionMismatch("discrete channel carries a scalar message")
        if self.channel.variant == "awgn" and k != 1:
            raise DimensionMismatch("awgn channel carries a scalar message")
        return self

    @property
    def message_dim(self) -> int:
        return int(self.f.shape[0])

    def check_source(self, n_x: int, n_y: int):
        """Raise DimensionMismatch unless the policy fits a (n_x, n_y) source."""
        if self.f.shape[1] != n_x + n_y:
            raise DimensionMismatch(
                f"encoder has {self.f.shape[1]} columns, source has dimension {n_x + n_y}"
            )
        if self.d_x.shape[0] != n_x or self.d_y.shape[0] != n_y:
            raise DimensionMismatch(
                f"decoders produce ({self.d_x.shape[0]}, {self.d_y.shape[0]}) outputs, "
                f"source is ({n_x}, {n_y})"
            )


class EquilibriumReport(BaseModel):
    """Both players' payoffs under a policy pair."""

    model_config = _FROZEN

    mse_x: float = Field(..., ge=0)
    mse_y: float = Field(..., ge=0)
    j_e: float = Field(..., description="Sender cost mse_y - delta * mse_x")
    j_d: float = Field(..., description="Receiver cost mse_x + mse_y")
    policy: LinearPolicyPair
    spectrum: Optional[SpectralDecomposition] = None

    @classmethod
    def build(
        cls,
        mse_x: float,
        mse_y: float,
        delta: float,
        policy: LinearPolicyPair,
        spectrum: Optional[SpectralDecomposition] = None,
        **extra,
    ):
        """Clip round-off below zero and derive j_e, j_d from the MSEs."""
        mse_x = max(float(mse_x), 0.0)
        mse_y = max(float(mse_y), 0.0)
        return cls(
            mse_x=mse_x,
            mse_y=mse_y,
            j_e=mse_y - delta * mse_x,
            j_d=mse_x + mse_y,
            policy=policy,
            spectrum=spectrum,
            **extra,
        )


class EmpiricalReport(EquilibriumReport):
    """Monte Carlo payoff estimates with standard errors."""

    n: int = Field(..., ge=1)
    mse_x_stderr: float = Field(..., ge=0)
    mse_y_stderr: float = Field(..., ge=0)
    j_e_stderr: float = Field(..., ge=0)


class SampleBatch(BaseModel):
    """Seeded draws of the source and, on AWGN, of the channel noise."""

    model_config = _FROZEN

    seed: int = Field(..., ge=0)
    n: int = Field(..., ge=1)
    n_x: int = Field(..., ge=1)
    s: Matrix = Field(..., description="n x (n_x + n_y) draws of (X, Y)")
    w: Optional[Vector] = Field(None, description="n channel-noise draws on AWGN")

    @property
    def x(self) -> np.ndarray:
        return self.s[:, :self.n_x]

    @property
    def y(self) -> np.ndarray:
        return self.s[:, self.n_x:]
