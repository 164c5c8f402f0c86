"""Base adapter class for solve modes."""

import logging
from abc import ABC, abstractmethod
from typing import Any, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from privsig.errors import ValidationFailure
from privsig.models.game import EquilibriumReport, GameSpec
from privsig.models.requests import SolveRequest
from privsig.models.responses import CheckOutcome, SweepRow
from privsig.services.verify import check_consistency

logger = logging.getLogger(__name__)


class SolverOutput(BaseModel):
    """What an adapter hands back for one solve."""

    model_config = ConfigDict(frozen=True)

    mode: str
    spec: Optional[GameSpec] = Field(None, description="Game the policy is scored in")
    solution: Any = Field(..., description="Solver-specific solution model")
    report: Optional[EquilibriumReport] = None
    b_over_a: Optional[float] = None


def encoder_ratio(spec: GameSpec, f) -> Optional[float]:
    """B/A of a scalar encoder z = A x + B y, None when A = 0 or the source is a vector."""
    if not spec.source.is_scalar or f.shape[0] != 1 or f[0, 0] == 0.0:
        return None
    return float(f[0, 1] / f[0, 0])


class BaseSolver(ABC):
    """Base class for the solver adapters."""

    def __init__(self, name: str, modes: Tuple[str, ...]):
        """
        Initialize the adapter.

        Args:
            name: Human-readable name of the solver family
            modes: Solve modes this adapter answers
        """
        self.name = name
        self.modes = modes

    def supports(self, mode: str) -> bool:
        return mode in self.modes

    @abstractmethod
    def solve(self, request: SolveRequest) -> SolverOutput:
        """
        Solve one instance.

        Args:
            request: Validated solve request whose mode this adapter supports

        Returns:
            SolverOutput with the solution and, when a game is defined, its report
        """

    @abstractmethod
    def verify(
        self,
        request: SolveRequest,
        output: SolverOutput,
        corrupt: bool = False,
        tol: Optional[float] = None,
    ) -> List[CheckOutcome]:
        """
        Certify a solve.

        Args:
            request: The request that produced output
            output: Result of solve(request)
            corrupt: Perturb the encoder first (negative control)
            tol: Certificate tolerance (default from the numeric settings)

        Returns:
            One CheckOutcome per certificate run
        """

    def consistency(self, output: SolverOutput, n: int, seed: int) -> CheckOutcome:
        """Analytic vs Monte Carlo payoffs of the solved policy."""
        if output.spec is None or output.report is None:
            raise ValidationFailure(f"{output.mode} solve has no policy to simulate")
        report = check_consistency(output.spec, output.report.policy, n, seed)
        return CheckOutcome(check="consistency", passed=report.passed, report=report)

    def sweep_row(self, request: SolveRequest) -> SweepRow:
        """Solve and flatten into one CSV row."""
        output = self.solve(request)
        return SweepRow.from_report(request, output.report, output.b_over_a)
