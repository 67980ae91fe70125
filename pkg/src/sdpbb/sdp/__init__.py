"""Interior-point SDP engine."""

from .ipm import ConicSolution, SdpSolution, SolverSettings, Status, solve_conic, solve_sdp
from .problem import (
    Block,
    ConicForm,
    PsdConstraint,
    PsdGroup,
    ScalarConstraint,
    SdpProblem,
    compile_standard_form,
    embed,
    fix_variables,
    unembed,
)

__all__ = [
    "Block",
    "ConicForm",
    "ConicSolution",
    "PsdConstraint",
    "PsdGroup",
    "ScalarConstraint",
    "SdpProblem",
    "SdpSolution",
    "SolverSettings",
    "Status",
    "compile_standard_form",
    "embed",
    "fix_variables",
    "solve_conic",
    "solve_sdp",
    "unembed",
]
