"""Branch-and-bound for jointly constrained semidefinite bilinear programs."""

from .gamma import GammaMap, build_gamma_map, compute_operator, compute_vector_rep, f_value
from .problem import BilinearProblem, VariableBlock, pair_coupling, side_basis
from .relaxation import (
    Hyperrectangle,
    Node,
    bounding_rectangle,
    branch_hyperrectangle,
    envelope_bounds,
    envelope_gaps,
    envelope_pieces,
    envelope_value,
    vex,
)
from .solver import (
    GlobalResult,
    Partition,
    TraceRow,
    constraint_violation,
    read_trace_csv,
    solve_bilinear,
    write_trace_csv,
)

__all__ = [
    "BilinearProblem",
    "GammaMap",
    "GlobalResult",
    "Hyperrectangle",
    "Node",
    "Partition",
    "TraceRow",
    "VariableBlock",
    "bounding_rectangle",
    "branch_hyperrectangle",
    "build_gamma_map",
    "compute_operator",
    "compute_vector_rep",
    "constraint_violation",
    "envelope_bounds",
    "envelope_gaps",
    "envelope_pieces",
    "envelope_value",
    "f_value",
    "pair_coupling",
    "read_trace_csv",
    "side_basis",
    "solve_bilinear",
    "vex",
    "write_trace_csv",
]
