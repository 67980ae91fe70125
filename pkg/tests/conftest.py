import sys

import numpy as np
import pytest

import sdpbb.sdp.ipm as ipm

# every interior-point solve in the session is checked for weak duality and feasibility
SOLVE_LOG = {"optimal": 0, "other": 0, "violations": []}
ACCEPTANCE = {}

_original_solve_conic = ipm.solve_conic


def solve_invariant_violation(sol, settings) -> str | None:
    """Why an Optimal solution breaks weak duality or feasibility, else None."""
    if sol.status is not ipm.Status.OPTIMAL:
        return None
    p, d = sol.primal_objective, sol.dual_objective
    slack = 10 * settings.gap_tol * max(1.0, abs(p), abs(d))
    if d > p + slack:
        return f"dual objective {d!r} exceeds primal {p!r}"
    if sol.primal_residual > settings.feas_tol or sol.dual_residual > settings.feas_tol:
        return f"residuals {sol.primal_residual:.3g}, {sol.dual_residual:.3g} above {settings.feas_tol:g}"
    if sol.min_slack_eig < -settings.feas_tol:
        return f"primal slack eigenvalue {sol.min_slack_eig:.3g}"
    return None


def _recording_solve_conic(form, settings=ipm.SolverSettings()):
    sol = _original_solve_conic(form, settings)
    if sol.status is ipm.Status.OPTIMAL:
        SOLVE_LOG["optimal"] += 1
        why = solve_invariant_violation(sol, settings)
        if why:
            SOLVE_LOG["violations"].append(why)
    else:
        SOLVE_LOG["other"] += 1
    return sol


def _patch_targets():
    for name, mod in list(sys.modules.items()):
        if name.startswith("sdpbb") and getattr(mod, "solve_conic", None) is _original_solve_conic:
            yield mod


@pytest.fixture(autouse=True)
def check_every_solve(monkeypatch):
    for mod in _patch_targets():
        monkeypatch.setattr(mod, "solve_conic", _recording_solve_conic)
    before = len(SOLVE_LOG["violations"])
    yield
    new = SOLVE_LOG["violations"][before:]
    assert not new, f"{len(new)} solves broke weak duality or feasibility: {new[:3]}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            passed, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
    terminalreporter.write_line(
        f"interior-point solves checked: {SOLVE_LOG['optimal']} optimal, {SOLVE_LOG['other']} other, "
        f"{len(SOLVE_LOG['violations'])} invariant violations"
    )
