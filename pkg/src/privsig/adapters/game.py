"""Noiseless game adapter: nash, stackelberg and scalar modes."""

import logging
from typing import List, Optional

from privsig.adapters.base import BaseSolver, SolverOutput, encoder_ratio
from privsig.models.game import GameSpec
from privsig.models.requests import SolveRequest
from privsig.models.responses import CheckOutcome
from privsig.services.equilibrium import solve_nash, solve_scalar, solve_stackelberg
from privsig.services.verify import check_nash_scalar, check_stackelberg, perturb_encoder

logger = logging.getLogger(__name__)


class GameSolver(BaseSolver):
    """Adapter for the noiseless vector and scalar game."""

    def __init__(self):
        super().__init__("Noiseless game", ("nash", "stackelberg", "scalar"))

    def solve(self, request: SolveRequest) -> SolverOutput:
        if request.mode == "scalar":
            solution = solve_scalar(request.sigma_x2, request.sigma_y2, request.rho, request.delta)
            return SolverOutput(
                mode=request.mode,
                spec=solution.spec,
                solution=solution,
                report=solution.report,
                b_over_a=solution.b_over_a,
            )

        spec = GameSpec(source=request.source(), delta=request.delta)
        if request.mode == "nash":
            solution = solve_nash(spec, request.alphas)
        else:
            solution = solve_stackelberg(spec)
        return SolverOutput(
            mode=request.mode,
            spec=spec,
            solution=solution,
            report=solution.report,
            b_over_a=encoder_ratio(spec, solution.policy.f),
        )

    def verify(
        self,
        request: SolveRequest,
        output: SolverOutput,
        corrupt: bool = False,
        tol: Optional[float] = None,
    ) -> List[CheckOutcome]:
        """
        Scalar sources get the best-response fixed-point test; Stackelberg
        solves and vector sources get deviation sampling. With mc set, the
        analytic report is also checked against simulation.
        """
        spec = output.spec
        solution = perturb_encoder(spec, output.solution) if corrupt else output.solution
        checks = []

        if spec.source.is_scalar:
            report = check_nash_scalar(solution, tol, spec=spec)
            checks.append(CheckOutcome(
                check="nash_fixed_point", passed=report.verdict == "certified", report=report,
            ))
        if request.mode == "stackelberg" or not spec.source.is_scalar:
            report = check_stackelberg(
                spec,
                solution,
                n_encoders=request.n_encoders,
                seed=request.seed,
                tol=tol,
                n_nonlinear=request.n_nonlinear,
            )
            checks.append(CheckOutcome(
                check="stackelberg_deviation", passed=report.verdict == "certified", report=report,
            ))
        if request.mc is not None:
            scored = output.model_copy(update={"solution": solution, "report": solution.report})
            checks.append(self.consistency(scored, request.mc, request.seed))
        return checks
