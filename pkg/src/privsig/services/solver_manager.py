"""Solver manager dispatching requests to the mode adapters."""

import asyncio
import logging
from typing import Dict, List, Optional, Sequence

from privsig.adapters.base import BaseSolver, SolverOutput
from privsig.adapters.bottleneck import BottleneckSolver
from privsig.adapters.channel import ChannelSolver
from privsig.adapters.game import GameSolver
from privsig.models.requests import QuantizeRequest, SimulateRequest, SolveRequest, VerifyRequest
from privsig.models.responses import (
    CheckOutcome,
    QuantizeResponse,
    SimulateResponse,
    SolveResponse,
    SweepRow,
    VerifyResponse,
)
from privsig.services.channel_eq import integrated_distortion, lloyd_conditions, lloyd_max_gaussian
from privsig.services.verify import CORRUPT_REL, certify_table

logger = logging.getLogger(__name__)


class SolverManager:
    """Manages the solver adapters and routes requests by mode."""

    def __init__(self):
        self.solvers: Dict[str, BaseSolver] = {}

    def initialize(self):
        """Register every adapter under each mode it supports."""
        for solver in (GameSolver(), BottleneckSolver(), ChannelSolver()):
            for mode in solver.modes:
                self.solvers[mode] = solver
        logger.debug("Registered solve modes: %s", ", ".join(self.solvers))
        return self

    def get_available_modes(self) -> List[str]:
        return list(self.solvers.keys())

    def _get_solver(self, mode: str) -> BaseSolver:
        """
        Get the adapter for a solve mode.

        Raises:
            ValueError: If no adapter handles the mode
        """
        if mode not in self.solvers:
            available = ", ".join(self.solvers.keys())
            raise ValueError(f"Solve mode '{mode}' is not available. Available modes: {available}")
        return self.solvers[mode]

    def run(self, request: SolveRequest) -> SolverOutput:
        solver = self._get_solver(request.mode)
        logger.debug("Solving %s with %s", request.mode, solver.name)
        return solver.solve(request)

    def solve(self, request: SolveRequest, command: str = "solve") -> SolveResponse:
        """Solve one instance and attach certificates when request.verify is set."""
        output = self.run(request)
        checks: List[CheckOutcome] = []
        if request.verify:
            checks = self._get_solver(request.mode).verify(request, output)
        passed = all(check.passed for check in checks)
        return SolveResponse(
            command=command,
            success=passed,
            message=None if passed else "verification failed",
            mode=request.mode,
            parameters=request.parameters(),
            b_over_a=output.b_over_a,
            report=output.report,
            result=output.solution,
            checks=checks,
        )

    def row(self, request: SolveRequest) -> SweepRow:
        return self._get_solver(request.mode).sweep_row(request)

    async def sweep(self, points: Sequence[SolveRequest], workers: int = 1) -> List[SweepRow]:
        """
        One row per point, in the order of points.

        With workers > 1 rows are computed in threads, at most `workers` at
        a time; gather keeps the input order whatever the completion order.
        """
        if workers <= 1:
            return [self.row(point) for point in points]

        semaphore = asyncio.Semaphore(workers)

        async def run_point(point: SolveRequest) -> SweepRow:
            async with semaphore:
                return await asyncio.to_thread(self.row, point)

        rows = await asyncio.gather(*(run_point(point) for point in points))
        logger.debug("Sweep of %d points finished on %d workers", len(rows), workers)
        return list(rows)

    def verify(self, request: VerifyRequest) -> VerifyResponse:
        """Certify one instance, or the encoder ratio table when no target is given."""
        if request.target is None:
            rows = certify_table(tol=request.tol, perturb=CORRUPT_REL if request.corrupt else 0.0)
            checks = [
                CheckOutcome(check="nash_fixed_point", passed=row.report.verdict == "certified", report=row)
                for row in rows
            ]
        else:
            target = request.target
            solver = self._get_solver(target.mode)
            output = solver.solve(target)
            checks = solver.verify(target, output, corrupt=request.corrupt is not None, tol=request.tol)

        failed = sum(not check.passed for check in checks)
        for check in checks:
            logger.info("%s: %s", check.check, "certified" if check.passed else "violated")
        return VerifyResponse(
            command="verify",
            success=failed == 0,
            message=f"{len(checks) - failed} of {len(checks)} checks passed",
            checks=checks,
        )

    def simulate(self, request: SimulateRequest) -> SimulateResponse:
        target = request.target
        solver = self._get_solver(target.mode)
        outcome = solver.consistency(solver.solve(target), request.n, target.seed)
        return SimulateResponse(
            command="simulate",
            success=outcome.passed,
            message=None if outcome.passed else "simulation disagrees with the analytic report",
            mode=target.mode,
            parameters=target.parameters(),
            consistency=outcome.report,
        )

    def quantize(self, request: QuantizeRequest) -> QuantizeResponse:
        quantizer = lloyd_max_gaussian(request.levels, request.tol, request.max_iter)
        centroid, midpoint = lloyd_conditions(quantizer)
        return QuantizeResponse(
            command="quantize",
            quantizer=quantizer,
            centroid_residual=centroid,
            midpoint_residual=midpoint,
            integrated_mse=integrated_distortion(quantizer) if request.oracle else None,
        )


def get_solver_manager(manager: Optional[SolverManager] = None) -> SolverManager:
    """Return manager, or a freshly initialized one."""
    return manager if manager is not None else SolverManager().initialize()
