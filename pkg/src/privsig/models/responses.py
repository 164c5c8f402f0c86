"""Response models for CLI commands."""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from privsig import SCHEMA
from privsig.models.game import EquilibriumReport, Quantizer
from privsig.models.requests import SolveRequest


class BaseResponse(BaseModel):
    """Base response model with common fields."""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(SCHEMA, serialization_alias="schema", description="Output schema version")
    command: str = Field(..., description="Subcommand that produced the document")
    success: bool = Field(True, description="Whether every requested check passed")
    message: Optional[str] = Field(None, description="Summary or error description")


class CheckOutcome(BaseModel):
    """One numerical certificate and its verdict."""

    check: Literal["nash_fixed_point", "stackelberg_deviation", "consistency"]
    passed: bool
    report: Any = Field(..., description="DeviationReport or ConsistencyReport")


class SweepRow(BaseModel):
    """One CSV row; fields not used by the mode stay empty."""

    mode: str
    delta: Optional[float] = None
    rho: Optional[float] = None
    sigma_x2: Optional[float] = None
    sigma_y2: Optional[float] = None
    p: Optional[float] = None
    sigma_w2: Optional[float] = None
    levels: Optional[int] = None
    mse_x: Optional[float] = None
    mse_y: Optional[float] = None
    j_e: Optional[float] = None
    j_d: Optional[float] = None
    b_over_a: Optional[float] = None

    @classmethod
    def from_report(cls, request: SolveRequest, report: Optional[EquilibriumReport], b_over_a: Optional[float]):
        """Flatten a solve into the columns its mode uses."""
        scalar = request.is_scalar
        awgn = request.mode == "awgn"
        return cls(
            mode=request.mode,
            delta=request.delta,
            rho=request.rho if scalar else None,
            sigma_x2=request.sigma_x2 if scalar else None,
            sigma_y2=request.sigma_y2 if scalar else None,
            p=request.p if awgn else None,
            sigma_w2=request.sigma_w2 if awgn else None,
            levels=request.levels if request.mode == "discrete" else None,
            mse_x=report.mse_x if report else None,
            mse_y=report.mse_y if report else None,
            j_e=report.j_e if report else None,
            j_d=report.j_d if report else None,
            b_over_a=b_over_a,
        )


CSV_COLUMNS = tuple(SweepRow.model_fields)


class SolveResponse(BaseResponse):
    """Response model for solve and ib."""

    mode: str = Field(..., description="Solver that ran")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Request parameters that were set")
    b_over_a: Optional[float] = Field(None, description="Encoder ratio B/A of a scalar encoder")
    report: Optional[EquilibriumReport] = Field(None, description="Exact payoffs of the solved policy")
    result: Any = Field(None, description="Solver-specific solution")
    checks: List[CheckOutcome] = Field(default_factory=list, description="Certificates, when requested")


class SweepResponse(BaseResponse):
    """Response model for sweep in JSON format."""

    mode: str
    axis: Optional[str] = Field(None, description="Swept parameter; None for presets")
    rows: List[SweepRow] = Field(default_factory=list)


class QuantizeResponse(BaseResponse):
    """Response model for quantize."""

    quantizer: Quantizer
    centroid_residual: float = Field(..., description="Largest gap between a level and its cell centroid")
    midpoint_residual: float = Field(..., description="Largest gap between a boundary and the level midpoint")
    integrated_mse: Optional[float] = Field(None, description="Distortion by numerical integration")


class VerifyResponse(BaseResponse):
    """Response model for verify."""

    checks: List[CheckOutcome] = Field(default_factory=list)


class SimulateResponse(BaseResponse):
    """Response model for simulate."""

    mode: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    consistency: Any = Field(..., description="ConsistencyReport of the solved policy")
