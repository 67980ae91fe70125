"""Alternating minimization: fix one side, solve the SDP in the other."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .bnb.gamma import build_gamma_map
from .bnb.problem import BilinearProblem
from .bnb.solver import constraint_violation
from .errors import InvalidInputError, NumericalError
from .operators import coordinates, hermitian_basis
from .sdp import SolverSettings, Status, solve_conic
from .sdp.problem import fix_variables


@dataclass
class SeesawResult:
    values: dict
    value: float
    trace: list[float] = field(default_factory=list)
    reason: str = "ValueStalled"
    iterations: int = 0


def _usable(sol, settings: SolverSettings) -> bool:
    if sol.status is Status.OPTIMAL:
        return True
    loose = 1e3 * settings.feas_tol
    return (
        sol.status in (Status.NUMERICAL_TROUBLE, Status.ITERATION_LIMIT)
        and sol.primal_residual <= loose
        and sol.min_slack_eig >= -loose
    )


def _block_values(problem: BilinearProblem, xc: np.ndarray) -> dict:
    return problem.base_form().block_values(xc)


def start_point(problem: BilinearProblem, c: np.ndarray | None = None, settings: SolverSettings = SolverSettings()) -> np.ndarray:
    """A feasible solver vector: the minimizer of ``c`` (zero by default) over the constraint set."""
    form = problem.base_form()
    if c is not None:
        form = form.with_extra(0, c_base=np.asarray(c, float))
    sol = solve_conic(form, settings)
    if sol.status is Status.PRIMAL_INFEASIBLE:
        raise InvalidInputError("the constraint set is empty; no seesaw start exists")
    if not _usable(sol, settings):
        raise NumericalError(f"feasibility solve for the seesaw start failed: {sol.status.value}")
    return sol.x


def seesaw(
    problem: BilinearProblem,
    start: Mapping[str, np.ndarray] | np.ndarray | None = None,
    stall_tol: float = 1e-7,
    max_iters: int = 100,
    settings: SolverSettings = SolverSettings(),
) -> SeesawResult:
    """Alternate Y-steps and X-steps until the value stalls.

    ``start`` may be a dict of block values, a solver vector, or ``None`` for
    the zero-objective feasibility solution. A half-step whose value is not
    below the current one is discarded, so the trace never increases.

    Raises:
        InvalidInputError: the start point is infeasible.
        NumericalError: a subproblem failed; the message names the iteration.
    """
    form = problem.base_form()
    gm = build_gamma_map(problem)
    ix, iy = problem.solver_indices("X"), problem.solver_indices("Y")
    if start is None:
        xc = start_point(problem, settings=settings)
    elif isinstance(start, Mapping):
        xc = np.zeros(form.n)
        for name, (s0, s1, blk) in form.layout.items():
            xc[s0:s1] = coordinates(np.asarray(start[name]), hermitian_basis(blk.dim))
    else:
        xc = np.asarray(start, float).copy()
    viol = constraint_violation(form, xc)
    if viol > 10 * settings.feas_tol * max(1.0, np.abs(xc).max()):
        raise InvalidInputError(f"seesaw start violates the constraints by {viol:.3g}")

    def value(v):
        return float(v[ix] @ gm.U @ v[iy] + gm.a_hat @ v[ix] + gm.b_hat @ v[iy])

    current = value(xc)
    trace = [current]
    reason = "IterationLimit"
    it = 0
    for it in range(1, max_iters + 1):
        before = current
        for fixed, free, lin in ((ix, iy, lambda v: gm.U.T @ v[ix] + gm.b_hat), (iy, ix, lambda v: gm.U @ v[iy] + gm.a_hat)):
            c = np.zeros(form.n)
            c[free] = lin(xc)
            reduced, keep, _ = fix_variables(form.with_extra(0, c_base=c), fixed, xc[fixed], tol=1e-6)
            sol = solve_conic(reduced, settings)
            if not _usable(sol, settings):
                raise NumericalError(f"seesaw subproblem failed at iteration {it}: {sol.status.value} ({sol.message})")
            trial = xc.copy()
            trial[keep] = sol.x
            val = value(trial)
            if val <= current:
                xc, current = trial, val
            trace.append(current)
        if before - current < stall_tol:
            reason = "ValueStalled"
            break
    return SeesawResult(_block_values(problem, xc), current, trace, reason, it)


def seesaw_restarts(
    problem: BilinearProblem,
    restarts: int = 5,
    seed: int | None = 0,
    **kwargs,
) -> SeesawResult:
    """Best of one default-start run and ``restarts`` runs from random-objective feasible starts."""
    rng = np.random.default_rng(seed)
    settings = kwargs.get("settings", SolverSettings())
    best = seesaw(problem, **kwargs)
    n = problem.base_form().n
    for _ in range(restarts):
        x0 = start_point(problem, rng.normal(size=n), settings)
        res = seesaw(problem, start=x0, **kwargs)
        if res.value < best.value:
            best = res
    return best
