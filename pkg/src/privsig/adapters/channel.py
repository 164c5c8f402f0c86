"""Channel adapter: scalar equilibria over AWGN and discrete channels."""

import logging
from typing import List, Optional

from privsig.adapters.base import BaseSolver, SolverOutput
from privsig.config import DEFAULTS
from privsig.models.requests import SolveRequest
from privsig.models.responses import CheckOutcome
from privsig.services.channel_eq import solve_awgn, solve_discrete
from privsig.services.verify import check_nash_scalar, check_stackelberg, perturb_encoder

logger = logging.getLogger(__name__)


class ChannelSolver(BaseSolver):
    """Adapter for the awgn and discrete modes."""

    def __init__(self):
        super().__init__("Noisy and discrete channels", ("awgn", "discrete"))

    def solve(self, request: SolveRequest) -> SolverOutput:
        args = (request.sigma_x2, request.sigma_y2, request.rho, request.delta)
        if request.mode == "awgn":
            solution = solve_awgn(*args, request.p, request.sigma_w2)
        else:
            solution = solve_discrete(*args, request.levels, request.bins)
        return SolverOutput(
            mode=request.mode,
            spec=solution.spec,
            solution=solution,
            report=solution.report,
            b_over_a=solution.b_over_a,
        )

    def verify(
        self,
        request: SolveRequest,
        output: SolverOutput,
        corrupt: bool = False,
        tol: Optional[float] = None,
    ) -> List[CheckOutcome]:
        """
        AWGN: fixed-point test and deviation sampling under the power
        constraint. Discrete: analytic vs Monte Carlo agreement, with
        DEFAULTS.mc_fit_samples draws unless mc is set.
        """
        spec = output.spec
        solution = perturb_encoder(spec, output.solution) if corrupt else output.solution
        scored = output.model_copy(update={"solution": solution, "report": solution.report})

        if request.mode == "discrete":
            n = request.mc if request.mc is not None else DEFAULTS.mc_fit_samples
            return [self.consistency(scored, n, request.seed)]

        fixed_point = check_nash_scalar(solution, tol)
        deviation = check_stackelberg(
            spec,
            solution,
            n_encoders=request.n_encoders,
            seed=request.seed,
            tol=tol,
            n_nonlinear=request.n_nonlinear,
        )
        checks = [
            CheckOutcome(check="nash_fixed_point", passed=fixed_point.verdict == "certified", report=fixed_point),
            CheckOutcome(check="stackelberg_deviation", passed=deviation.verdict == "certified", report=deviation),
        ]
        if request.mc is not None:
            checks.append(self.consistency(scored, request.mc, request.seed))
        return checks
