"""Hyperrectangles, the bilinear convex envelope and the node relaxation SDP."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    InfeasibleProblemError,
    NodeError,
    NumericalError,
    UnboundedFeasibleRegionError,
)
from ..sdp import SolverSettings, Status, solve_conic
from .gamma import GammaMap, compute_operator, f_value
from .problem import BilinearProblem

# relative position below which a witness counts as sitting on a rectangle edge
EDGE_RTOL = 1e-6
# relative padding of the root box, covering solver tolerance in the coordinate bounds
ROOT_PAD = 1e-7


@dataclass(frozen=True)
class Hyperrectangle:
    """Coordinate box ``[lx, ux] × [ly, uy]``; infinite entries are unconstrained.

    Only the first ``active`` coordinate pairs carry envelope terms and are
    branched on.
    """

    lx: np.ndarray
    ux: np.ndarray
    ly: np.ndarray
    uy: np.ndarray
    active: int

    def __post_init__(self):
        if np.any(self.lx > self.ux) or np.any(self.ly > self.uy):
            raise ValueError("hyperrectangle has an empty coordinate interval")

    @property
    def widths(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.active
        return self.ux[:k] - self.lx[:k], self.uy[:k] - self.ly[:k]

    def volume(self) -> float:
        wx, wy = self.widths
        return float(np.prod(wx) * np.prod(wy))

    def contains(self, x, y, tol: float = 0.0) -> bool:
        return bool(
            np.all(x >= self.lx - tol) and np.all(x <= self.ux + tol)
            and np.all(y >= self.ly - tol) and np.all(y <= self.uy + tol)
        )

    def clip(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        return np.clip(x, self.lx, self.ux), np.clip(y, self.ly, self.uy)

    def replace_pair(self, j: int, xr: tuple[float, float], yr: tuple[float, float]) -> "Hyperrectangle":
        lx, ux, ly, uy = self.lx.copy(), self.ux.copy(), self.ly.copy(), self.uy.copy()
        lx[j], ux[j] = xr
        ly[j], uy[j] = yr
        return Hyperrectangle(lx, ux, ly, uy, self.active)


def envelope_pieces(sigma, x, y, lx, ux, ly, uy) -> tuple[np.ndarray, np.ndarray]:
    """The two affine underestimators of ``σ x y`` on ``[lx,ux] × [ly,uy]``."""
    h0 = sigma * (ly * x + lx * y - lx * ly)
    h1 = sigma * (uy * x + ux * y - ux * uy)
    return h0, h1


def vex(sigma, x, y, lx, ux, ly, uy) -> np.ndarray:
    """Convex envelope of ``σ x y`` over the box, elementwise."""
    h0, h1 = envelope_pieces(sigma, x, y, lx, ux, ly, uy)
    return np.maximum(h0, h1)


def envelope_gaps(gm: GammaMap, rect: Hyperrectangle, x, y) -> np.ndarray:
    """Per active pair, ``σ_j x_j y_j - Vex`` at the point ``(x, y)``."""
    k = gm.rank
    s = gm.sigma
    return s * x[:k] * y[:k] - vex(s, x[:k], y[:k], rect.lx[:k], rect.ux[:k], rect.ly[:k], rect.uy[:k])


def envelope_value(gm: GammaMap, rect: Hyperrectangle, x, y) -> float:
    """Convex envelope of the rotated objective at ``(x, y)``."""
    k = gm.rank
    s = gm.sigma
    v = vex(s, x[:k], y[:k], rect.lx[:k], rect.ux[:k], rect.ly[:k], rect.uy[:k])
    return float(np.sum(v) + gm.a @ x + gm.b @ y)


@dataclass
class Node:
    rect: Hyperrectangle
    lower: float
    upper: float
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    values: dict | None = None
    status: str = "bounded"
    sdp_status: Status | None = None
    node_id: int = 0
    depth: int = 0
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == "bounded"

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _accept(sol, settings: SolverSettings) -> bool:
    """Optimal, or a stalled iterate whose residuals are still small enough to trust."""
    if sol.status is Status.OPTIMAL:
        return True
    loose = 1e3 * settings.feas_tol
    return (
        sol.status in (Status.NUMERICAL_TROUBLE, Status.ITERATION_LIMIT)
        and sol.primal_residual <= loose
        and sol.dual_residual <= loose
        and sol.relative_gap <= 1e3 * settings.gap_tol
        and sol.min_slack_eig >= -loose
    )


def _coordinate_rows(problem: BilinearProblem, gm: GammaMap):
    """Linear maps from the solver vector to the rotated coordinates x and y."""
    form = problem.base_form()
    ix, iy = problem.solver_indices("X"), problem.solver_indices("Y")
    Mx = np.zeros((gm.n_x, form.n))
    My = np.zeros((gm.n_y, form.n))
    Mx[:, ix] = gm.S.T
    My[:, iy] = gm.T
    return Mx, My


def bounding_rectangle(
    problem: BilinearProblem,
    gm: GammaMap,
    settings: SolverSettings = SolverSettings(),
    all_coordinates: bool = False,
) -> Hyperrectangle:
    """Smallest box containing the rotated image of the feasible set.

    One SDP per bound. With ``all_coordinates`` every coordinate is bounded,
    otherwise only the ``K`` envelope-active pairs. Bounds are taken from the
    dual side of each solve and padded slightly, so the box encloses the set
    despite solver tolerance.

    Raises:
        InfeasibleProblemError: the constraint set is empty.
        UnboundedFeasibleRegionError: some coordinate is unbounded.
    """
    form = problem.base_form()
    sol = solve_conic(form, settings)
    if sol.status is Status.PRIMAL_INFEASIBLE:
        raise InfeasibleProblemError(f"the constraint set is empty ({sol.message})")
    if not _accept(sol, settings):
        raise NumericalError(f"feasibility solve failed: {sol.status.value} ({sol.message})")
    Mx, My = _coordinate_rows(problem, gm)
    k = gm.rank
    nx_b = gm.n_x if all_coordinates else k
    ny_b = gm.n_y if all_coordinates else k
    inf = np.inf
    lx, ux = np.full(gm.n_x, -inf), np.full(gm.n_x, inf)
    ly, uy = np.full(gm.n_y, -inf), np.full(gm.n_y, inf)

    def extent(row, label):
        out = []
        for sgn in (1.0, -1.0):
            res = solve_conic(_with_objective(form, sgn * row), settings)
            if res.status is Status.DUAL_INFEASIBLE:
                raise UnboundedFeasibleRegionError(f"coordinate {label} is unbounded on the feasible set")
            if res.status is Status.PRIMAL_INFEASIBLE:
                raise InfeasibleProblemError(f"the constraint set is empty ({res.message})")
            if not _accept(res, settings):
                raise NumericalError(f"bound solve for coordinate {label} failed: {res.status.value}")
            out.append(sgn * min(res.primal_objective, res.dual_objective))
        # the second solve minimized -row, so out[1] is already an upper bound
        lo, hi = out
        pad = ROOT_PAD * max(1.0, abs(lo), abs(hi))
        return lo - pad, hi + pad

    for j in range(nx_b):
        lx[j], ux[j] = extent(Mx[j], f"x[{j}]")
    for j in range(ny_b):
        ly[j], uy[j] = extent(My[j], f"y[{j}]")
    return Hyperrectangle(lx, ux, ly, uy, k)


def _with_objective(form, c):
    return form.with_extra(0, c_base=c)


def envelope_bounds(
    problem: BilinearProblem,
    gm: GammaMap,
    rect: Hyperrectangle,
    settings: SolverSettings = SolverSettings(),
    node_id: int = 0,
) -> Node:
    """Solve the envelope relaxation over ``rect`` and evaluate its argmin.

    The relaxation minimizes ``Σ r_j + a·x + b·y`` over the feasible set,
    the finite box rows of ``rect`` and, for each active pair, the two
    epigraph rows ``h_j^i(x_j, y_j) <= r_j``. The returned node carries
    ``lower`` (relaxation value), the witness mapped back through Γ and
    ``upper = f(witness)``. An infeasible relaxation yields an infeasible
    node with ``lower = +inf``.

    Raises:
        NodeError: the SDP solver failed on this node.
    """
    form = problem.base_form()
    n, k = form.n, gm.rank
    Mx, My = _coordinate_rows(problem, gm)
    rows, rhs = [], []
    for M, lo, hi in ((Mx, rect.lx, rect.ux), (My, rect.ly, rect.uy)):
        for j in range(M.shape[0]):
            if np.isfinite(hi[j]):
                rows.append(np.concatenate([M[j], np.zeros(k)]))
                rhs.append(hi[j])
            if np.isfinite(lo[j]):
                rows.append(np.concatenate([-M[j], np.zeros(k)]))
                rhs.append(-lo[j])
    s = gm.sigma
    for j in range(k):
        for bx, by in ((rect.lx[j], rect.ly[j]), (rect.ux[j], rect.uy[j])):
            row = np.zeros(n + k)
            row[:n] = s[j] * (by * Mx[j] + bx * My[j])
            row[n + j] = -1.0
            rows.append(row)
            rhs.append(s[j] * bx * by)
    c_base = np.zeros(n)
    c_base[problem.solver_indices("X")] = gm.a_hat
    c_base[problem.solver_indices("Y")] = gm.b_hat
    relax = form.with_extra(
        k,
        c_extra=np.ones(k),
        lp_rows=np.array(rows).reshape(-1, n + k),
        lp_rhs=np.array(rhs, dtype=float),
        c_base=c_base,
    )
    sol = solve_conic(relax, settings)
    if sol.status is Status.PRIMAL_INFEASIBLE:
        return Node(rect, np.inf, np.inf, status="infeasible", sdp_status=sol.status, node_id=node_id,
                    iterations=sol.iterations)
    if not _accept(sol, settings):
        raise NodeError(
            f"relaxation SDP failed at node {node_id}: {sol.status.value} ({sol.message})",
            node_id=node_id,
            status=sol.status,
        )
    lower = min(sol.primal_objective, sol.dual_objective)
    if sol.status is not Status.OPTIMAL:
        lower -= abs(sol.gap)
    xs = sol.x[:n]
    x, y = Mx @ xs, My @ xs
    X, Y = compute_operator(gm, x, y)
    values = {**problem.split(X, "X"), **problem.split(Y, "Y")}
    upper = f_value(gm, x, y)
    return Node(rect, lower, upper, x, y, values, sdp_status=sol.status, node_id=node_id, iterations=sol.iterations)


def branch_hyperrectangle(rect: Hyperrectangle, witness, gm: GammaMap, tol: float = 1e-6) -> tuple[int, list[Hyperrectangle]]:
    """Split ``rect`` into four children at the witness coordinate with the largest envelope gap.

    Returns the branching index and the children in the order
    ``[lo,v]×[lo,w]``, ``[v,hi]×[lo,w]``, ``[v,hi]×[w,hi]``, ``[lo,v]×[w,hi]``.
    A witness coordinate on (or within ``EDGE_RTOL`` of) an edge is replaced by
    the midpoint of that axis.

    Raises:
        NodeError: the witness lies outside ``rect`` by more than ``tol``
            (relative to the box size) or no pair is active.
    """
    v, w = (np.asarray(a, float) for a in witness)
    if gm.rank == 0:
        raise NodeError("nothing to branch on: the coupling has rank zero")
    scale = max(1.0, float(np.max(np.abs(np.concatenate([rect.lx[: gm.rank], rect.ux[: gm.rank],
                                                          rect.ly[: gm.rank], rect.uy[: gm.rank]])))))
    if not rect.contains(v, w, tol * scale):
        raise NodeError("witness lies outside its hyperrectangle")
    v, w = rect.clip(v, w)
    gaps = envelope_gaps(gm, rect, v, w)
    j = int(np.argmax(gaps))

    def cut(lo, hi, t):
        width = hi - lo
        if t - lo <= EDGE_RTOL * width or hi - t <= EDGE_RTOL * width:
            return lo + width / 2
        return t

    xl, xu, yl, yu = rect.lx[j], rect.ux[j], rect.ly[j], rect.uy[j]
    vc, wc = cut(xl, xu, v[j]), cut(yl, yu, w[j])
    children = [
        rect.replace_pair(j, (xl, vc), (yl, wc)),
        rect.replace_pair(j, (vc, xu), (yl, wc)),
        rect.replace_pair(j, (vc, xu), (wc, yu)),
        rect.replace_pair(j, (xl, vc), (wc, yu)),
    ]
    return j, children
