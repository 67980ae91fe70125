"""Best-first branch-and-bound over envelope relaxations."""

from __future__ import annotations

import csv
import heapq
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import ConfigurationError, InvalidInputError
from ..sdp import SolverSettings
from ..operators import coordinates, hermitian_basis
from .gamma import GammaMap, build_gamma_map
from .problem import BilinearProblem
from .relaxation import Node, bounding_rectangle, branch_hyperrectangle, envelope_bounds

TRACE_COLUMNS = ("iteration", "partition_size", "lower", "upper")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    partition_size: int
    lower: float
    upper: float


@dataclass
class GlobalResult:
    """Certified interval ``[lower, value]`` for the global minimum and a witness attaining ``value``."""

    status: str
    value: float
    lower: float
    witness: dict
    nodes: int
    partition_size: int
    iterations: int
    trace: list[TraceRow] = field(default_factory=list)
    seconds: float = 0.0
    gamma: GammaMap | None = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        return self.value - self.lower

    @property
    def certified(self) -> bool:
        return self.status == "certified"


class Partition:
    """Nodes keyed by lower bound, oldest first on ties, plus the global incumbent."""

    def __init__(self):
        self._heap: list[tuple[float, int, Node]] = []
        self._counter = 0
        self.infeasible = 0
        self.upper = np.inf
        self.incumbent: dict | None = None

    def __len__(self) -> int:
        return len(self._heap) + self.infeasible

    @property
    def lower(self) -> float:
        return self._heap[0][0] if self._heap else np.inf

    def offer(self, upper: float, witness: dict | None):
        if witness is not None and upper < self.upper:
            self.upper, self.incumbent = upper, witness

    def push(self, node: Node):
        if not node.feasible:
            self.infeasible += 1
            return
        self.offer(node.upper, node.values)
        heapq.heappush(self._heap, (node.lower, self._counter, node))
        self._counter += 1

    def pop(self) -> Node:
        return heapq.heappop(self._heap)[2]


def _check_hint(problem: BilinearProblem, hint: Mapping[str, np.ndarray], tol: float) -> dict:
    form = problem.base_form()
    x = np.zeros(form.n)
    for name, (s0, s1, blk) in form.layout.items():
        if name not in hint:
            raise InvalidInputError(f"incumbent hint lacks block {name!r}")
        x[s0:s1] = coordinates(np.asarray(hint[name]), hermitian_basis(blk.dim))
    viol = constraint_violation(form, x)
    if viol > tol:
        raise InvalidInputError(f"incumbent hint violates the constraints by {viol:.3g}")
    return {k: np.asarray(v) for k, v in hint.items()}


def constraint_violation(form, x: np.ndarray) -> float:
    """Largest violation of the equalities, inequalities and PSD constraints at ``x``."""
    viol = [0.0]
    if form.A.shape[0]:
        viol.append(float(np.max(np.abs(form.A @ x - form.b))))
    if form.G_lp.shape[0]:
        viol.append(float(np.max(form.G_lp @ x - form.h_lp)))
    for g in form.psd:
        slack = g.h - np.einsum("knab,n->kab", g.G, x)
        viol.append(float(-np.linalg.eigvalsh(slack)[:, 0].min()))
    return max(viol)


def solve_bilinear(
    problem: BilinearProblem,
    epsilon: float = 1e-3,
    *,
    max_nodes: int = 100_000,
    incumbent_hint: Mapping[str, np.ndarray] | None = None,
    trace: bool = True,
    settings: SolverSettings = SolverSettings(),
    bound_all_coordinates: bool = False,
) -> GlobalResult:
    """Globally minimize a bilinear program to absolute precision ``epsilon``.

    Returns status ``"certified"`` when ``value - lower <= epsilon`` and
    ``"node_limit"`` if ``max_nodes`` relaxations were solved first; in both
    cases ``lower <= optimum <= value`` and the witness attains ``value``.

    Raises:
        ConfigurationError: ``epsilon`` below ten times the SDP gap tolerance.
        InfeasibleProblemError, UnboundedFeasibleRegionError: from the
            bounding rectangle.
    """
    if not epsilon >= 10 * settings.gap_tol:
        raise ConfigurationError(
            f"epsilon={epsilon!r} is below the floor 10*gap_tol={10 * settings.gap_tol:g}"
        )
    if max_nodes < 1:
        raise ConfigurationError("max_nodes must be positive")
    t0 = time.perf_counter()
    gm = build_gamma_map(problem)
    root_rect = bounding_rectangle(problem, gm, settings, all_coordinates=bound_all_coordinates)
    part = Partition()
    if incumbent_hint is not None:
        hint = _check_hint(problem, incumbent_hint, 10 * settings.feas_tol)
        part.offer(problem.objective_blocks(hint), hint)

    rows: list[TraceRow] = []
    root = envelope_bounds(problem, gm, root_rect, settings, node_id=0)
    part.push(root)
    nodes, it = 1, 0

    def record():
        if trace:
            rows.append(TraceRow(it, len(part), part.lower, part.upper))

    record()
    status = "certified"
    while part.upper - part.lower > epsilon:
        if nodes + 4 > max_nodes:
            status = "node_limit"
            break
        parent = part.pop()
        it += 1
        _, children = branch_hyperrectangle(parent.rect, (parent.x, parent.y), gm)
        for rect in children:
            child = envelope_bounds(problem, gm, rect, settings, node_id=nodes)
            child.depth = parent.depth + 1
            nodes += 1
            if child.feasible:
                # the child's set is a subset of the parent's, so its bound may inherit
                child.lower = max(child.lower, parent.lower)
            part.push(child)
        record()
    lower = min(part.lower, part.upper)
    return GlobalResult(
        status,
        part.upper,
        lower,
        part.incumbent or {},
        nodes,
        len(part),
        it,
        rows,
        time.perf_counter() - t0,
        gm,
    )


def write_trace_csv(path, rows) -> None:
    from ..io import write_csv_atomic

    write_csv_atomic(path, TRACE_COLUMNS, ((r.iteration, r.partition_size, r.lower, r.upper) for r in rows))


def read_trace_csv(path) -> list[TraceRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != TRACE_COLUMNS:
            raise InvalidInputError(f"unexpected trace columns {rd.fieldnames}")
        return [TraceRow(int(r["iteration"]), int(r["partition_size"]), float(r["lower"]), float(r["upper"])) for r in rd]
