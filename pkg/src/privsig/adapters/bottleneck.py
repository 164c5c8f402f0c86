"""Information bottleneck adapter (mode ib)."""

import logging
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from privsig.adapters.base import BaseSolver, SolverOutput
from privsig.errors import ValidationFailure
from privsig.models.game import GameSpec
from privsig.models.requests import SolveRequest
from privsig.models.responses import CheckOutcome
from privsig.services.bottleneck import (
    ChechikSolution,
    IBSolution,
    IBSpec,
    chechik_policy,
    compare_ib,
    gaussian_mutual_information,
    solve_chechik,
    solve_constrained_ib,
    solve_mmse_ib,
)

logger = logging.getLogger(__name__)


class MMSEBottleneckResult(BaseModel):
    """MMSE bottleneck solution with the information its message carries."""

    model_config = ConfigDict(frozen=True)

    solution: IBSolution
    information: Tuple[float, float]


class ChechikResult(BaseModel):
    """Mutual-information bottleneck solution with (I(X;Z), I(Y;Z))."""

    model_config = ConfigDict(frozen=True)

    solution: ChechikSolution
    information: Tuple[float, float]


class BottleneckSolver(BaseSolver):
    """
    Adapter for the bottleneck variants.

    alpha selects the constrained bottleneck, beta the mutual-information
    bottleneck (compared against the MMSE one when delta is also given),
    delta alone the MMSE bottleneck.
    """

    def __init__(self):
        super().__init__("Information bottleneck", ("ib",))

    def solve(self, request: SolveRequest) -> SolverOutput:
        source = request.source()
        spec = GameSpec(source=source, delta=request.delta) if request.delta is not None else None

        if request.alpha is not None:
            solution = solve_constrained_ib(source, request.alpha)
            return SolverOutput(mode="ib", solution=solution)

        if request.beta is not None and spec is not None:
            comparison = compare_ib(source, request.delta, request.beta)
            return SolverOutput(mode="ib", spec=spec, solution=comparison, report=comparison.mmse.report)

        if request.beta is not None:
            chechik = solve_chechik(source, request.beta)
            # decoders of the MI policy do not depend on delta
            policy = chechik_policy(GameSpec(source=source, delta=1.0), chechik)
            result = ChechikResult(solution=chechik, information=gaussian_mutual_information(source, policy))
            return SolverOutput(mode="ib", solution=result)

        solution = solve_mmse_ib(IBSpec(source=source, delta=request.delta))
        result = MMSEBottleneckResult(
            solution=solution,
            information=gaussian_mutual_information(source, solution.policy),
        )
        logger.debug("ib regime %s", solution.regime)
        return SolverOutput(mode="ib", spec=spec, solution=result, report=solution.report)

    def verify(
        self,
        request: SolveRequest,
        output: SolverOutput,
        corrupt: bool = False,
        tol: Optional[float] = None,
    ) -> List[CheckOutcome]:
        """Bottleneck policies are certified by simulation only."""
        if corrupt:
            raise ValidationFailure("encoder corruption applies to game and channel modes")
        if request.mc is None:
            raise ValidationFailure("ib verification is a Monte Carlo check and needs mc")
        return [self.consistency(output, request.mc, request.seed)]
