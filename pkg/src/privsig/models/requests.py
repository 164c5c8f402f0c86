"""Request models for CLI commands."""

from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from privsig.config import DEFAULTS
from privsig.models.game import JointGaussian

SolveMode = Literal["nash", "stackelberg", "scalar", "ib", "awgn", "discrete"]
SweepMode = Literal["nash", "stackelberg", "ib", "awgn", "discrete"]
SweepAxis = Literal["delta", "rho", "sigma_w2", "levels"]

# Modes solved for scalar X and Y only
SCALAR_MODES = ("scalar", "awgn", "discrete")

# (rho, delta) rows of the encoder ratio table, sigma_x2 = sigma_y2 = 1
TABLE_PRESET = (
    (0.3, 0.1), (0.3, 1.0), (0.3, 10.0),
    (0.7, 0.1), (0.7, 1.0), (0.7, 10.0),
)


class SolveRequest(BaseModel):
    """Request model for a single solve."""

    mode: SolveMode = Field(..., description="Solver to run")
    sigma_x2: float = Field(1.0, gt=0, description="Variance of X (scalar source)")
    sigma_y2: float = Field(1.0, gt=0, description="Variance of Y (scalar source)")
    rho: Optional[float] = Field(None, description="Covariance of X and Y (scalar source)")
    sigma: Optional[List[List[float]]] = Field(None, description="Full covariance, X block first")
    n_x: Optional[int] = Field(None, ge=1, description="Dimension of X when sigma is given")
    delta: Optional[float] = Field(None, gt=0, description="Privacy ratio")
    alphas: Optional[List[float]] = Field(None, description="Nash encoder scalings, one per Y direction")
    p: Optional[float] = Field(None, gt=0, description="AWGN power constraint (defaults to 1)")
    sigma_w2: Optional[float] = Field(None, gt=0, description="AWGN noise variance")
    levels: Optional[int] = Field(None, ge=2, description="Discrete channel alphabet size")
    bins: Optional[int] = Field(None, ge=1, description="Quantizer cells actually used (defaults to levels)")
    beta: Optional[float] = Field(None, ge=0, description="Tradeoff of the mutual-information bottleneck")
    alpha: Optional[float] = Field(None, ge=0, description="Trace budget of the constrained bottleneck")
    seed: int = Field(DEFAULTS.default_seed, ge=0, description="Seed of every random draw")
    verify: bool = Field(False, description="Attach numerical certificates")
    mc: Optional[int] = Field(None, ge=2, description="Monte Carlo sample count for consistency checks")
    n_encoders: int = Field(200, ge=0, description="Linear deviation candidates")
    n_nonlinear: int = Field(30, ge=0, description="Nonlinear deviation candidates (scalar sources)")

    @model_validator(mode='after')
    def check_source(self):
        """A source is either scalar (rho) or a covariance matrix with n_x."""
        if self.sigma is None:
            if self.rho is None:
                raise ValueError("rho is required for a scalar source")
            if self.n_x is not None:
                raise ValueError("n_x only applies to a covariance matrix")
        else:
            if self.n_x is None:
                raise ValueError("a covariance matrix needs n_x")
            if self.mode in SCALAR_MODES:
                raise ValueError(f"mode {self.mode} solves scalar sources only")
        return self

    @model_validator(mode='after')
    def check_mode_parameters(self):
        """Require the parameters each mode needs and fill defaults."""
        if self.mode == "ib":
            if self.delta is None and self.beta is None and self.alpha is None:
                raise ValueError("ib needs delta, beta or alpha")
        elif self.delta is None:
            raise ValueError(f"mode {self.mode} needs delta")

        if self.alphas is not None and self.mode != "nash":
            raise ValueError("alphas only apply to mode nash")
        if self.mode == "awgn":
            if self.sigma_w2 is None:
                raise ValueError("awgn needs sigma_w2")
            if self.p is None:
                self.p = 1.0
        if self.mode == "discrete":
            if self.levels is None:
                raise ValueError("discrete needs levels")
            if self.bins is not None and self.bins > self.levels:
                raise ValueError(f"bins ({self.bins}) exceeds levels ({self.levels})")
        return self

    @property
    def is_scalar(self) -> bool:
        return self.sigma is None

    def source(self) -> JointGaussian:
        """The Gaussian source this request describes."""
        if self.sigma is None:
            return JointGaussian.scalar(self.sigma_x2, self.sigma_y2, self.rho)
        sigma = np.asarray(self.sigma, dtype=float)
        return JointGaussian(n_x=self.n_x, n_y=sigma.shape[0] - self.n_x, sigma=sigma)

    def parameters(self) -> Dict[str, Any]:
        """Parameters that were set, for logs and response headers."""
        return self.model_dump(exclude_none=True, exclude={"sigma"})


class IBRequest(SolveRequest):
    """Request model for the ib command."""

    mode: Literal["ib"] = "ib"


class SweepSpec(BaseModel):
    """One solver run per grid value of a single axis."""

    axis: SweepAxis = Field(..., description="Parameter that varies")
    grid: List[float] = Field(..., min_length=1, description="Strictly increasing axis values")
    mode: SweepMode = Field(..., description="Solver run at every grid point")
    fixed: Dict[str, Any] = Field(default_factory=dict, description="Remaining solve parameters")

    @model_validator(mode='after')
    def check_grid(self):
        """Grid strictly increasing, axis compatible with the mode, every point valid."""
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if self.axis in self.fixed:
            raise ValueError(f"{self.axis} is the sweep axis and cannot also be fixed")
        if self.axis == "sigma_w2" and self.mode != "awgn":
            raise ValueError("a sigma_w2 sweep needs mode awgn")
        if self.axis == "levels":
            if self.mode != "discrete":
                raise ValueError("a levels sweep needs mode discrete")
            if any(v != int(v) for v in self.grid):
                raise ValueError("levels must be integers")
        if self.axis == "rho" and self.fixed.get("sigma") is not None:
            raise ValueError("a rho sweep needs a scalar source")
        self.points()
        return self

    @classmethod
    def spaced(cls, axis: str, start: float, stop: float, num: int, spacing: str = "linear", **kwargs):
        """Sweep over num points between start and stop, linearly or logarithmically spaced."""
        if num < 1:
            raise ValueError("a sweep needs at least one point")
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ValueError("log spacing needs positive endpoints")
            grid = np.geomspace(start, stop, num)
        else:
            grid = np.linspace(start, stop, num)
        return cls(axis=axis, grid=grid.tolist(), **kwargs)

    def points(self) -> List[SolveRequest]:
        """One validated solve request per grid value, in grid order."""
        cast = int if self.axis == "levels" else float
        return [
            SolveRequest(mode=self.mode, **{**self.fixed, self.axis: cast(value)})
            for value in self.grid
        ]


def table_preset(mode: SweepMode = "nash", **fixed) -> List[SolveRequest]:
    """The six (rho, delta) rows of the encoder ratio table at unit variances."""
    return [
        SolveRequest(mode=mode, sigma_x2=1.0, sigma_y2=1.0, rho=rho, delta=delta, **fixed)
        for rho, delta in TABLE_PRESET
    ]


class QuantizeRequest(BaseModel):
    """Request model for the quantize command."""

    levels: int = Field(..., ge=1, description="Number of quantizer cells")
    tol: Optional[float] = Field(None, gt=0, description="Level movement at convergence")
    max_iter: Optional[int] = Field(None, ge=1, description="Iteration cap")
    oracle: bool = Field(True, description="Also integrate the distortion numerically")


class VerifyRequest(BaseModel):
    """Request model for the verify command."""

    target: Optional[SolveRequest] = Field(None, description="Instance to certify (default: the table grid)")
    corrupt: Optional[Literal["encoder"]] = Field(None, description="Perturb the encoder before checking")
    tol: Optional[float] = Field(None, gt=0, description="Certificate tolerance")

    @model_validator(mode='after')
    def check_target(self):
        if self.target is not None and self.target.mode == "ib" and self.target.mc is None:
            raise ValueError("ib verification is a Monte Carlo check and needs mc")
        return self


class SimulateRequest(BaseModel):
    """Request model for the simulate command."""

    target: SolveRequest = Field(..., description="Instance whose policy is simulated")
    n: int = Field(DEFAULTS.mc_fit_samples, ge=2, description="Number of draws")

    @model_validator(mode='after')
    def check_target(self):
        if self.target.mode == "ib" and self.target.delta is None:
            raise ValueError("simulating a bottleneck policy needs delta")
        return self
