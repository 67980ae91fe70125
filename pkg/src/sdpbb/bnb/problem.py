"""Bilinear program model: block layout, objective triple and joint constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from ..errors import DimensionError, InvalidInputError
from ..operators import as_hermitian, hermitian_basis
from ..sdp.problem import Block, ConicForm, PsdConstraint, ScalarConstraint, SdpProblem, compile_standard_form

Side = Literal["X", "Y"]


@dataclass(frozen=True)
class VariableBlock:
    name: str
    side: Side
    dim: int


@dataclass
class BilinearProblem:
    """Minimize ``tr((X⊗Y)Q) + tr(AX) + tr(BY)`` over ``(X, Y)`` in a convex set.

    ``X`` is the direct sum of the X-side blocks (in layout order) and ``Y``
    that of the Y-side blocks. ``Q`` acts on ``C^p ⊗ C^q`` and ``A``, ``B`` on
    ``C^p``, ``C^q``; all three must live on the block-diagonal subspaces, since
    other entries never meet a feasible point. Constraints reference blocks
    by name. Treat instances as immutable once solved: the compiled constraint
    set is cached.
    """

    blocks: list[VariableBlock]
    Q: np.ndarray | None = None
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    scalar_constraints: list[ScalarConstraint] = field(default_factory=list)
    psd_constraints: list[PsdConstraint] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    _form: ConicForm | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate block names in {names}")
        for b in self.blocks:
            if b.side not in ("X", "Y"):
                raise InvalidInputError(f"block {b.name!r}: side must be 'X' or 'Y', got {b.side!r}")
            if int(b.dim) != b.dim or b.dim < 1:
                raise DimensionError(f"block {b.name!r}: invalid dimension {b.dim!r}")
        if not self.x_blocks or not self.y_blocks:
            raise InvalidInputError("a bilinear problem needs at least one X-side and one Y-side block")
        p, q = self.p, self.q
        self.Q = np.zeros((p * q, p * q), complex) if self.Q is None else as_hermitian(self.Q, 1e-10, "Q")
        self.A = np.zeros((p, p), complex) if self.A is None else as_hermitian(self.A, 1e-10, "A")
        self.B = np.zeros((q, q), complex) if self.B is None else as_hermitian(self.B, 1e-10, "B")
        for name, m, n in (("Q", self.Q, p * q), ("A", self.A, p), ("B", self.B, q)):
            if m.shape != (n, n):
                raise DimensionError(f"{name} has shape {m.shape}, expected {(n, n)}")
        for side, mat in (("X", self.A), ("Y", self.B)):
            if np.max(np.abs(mat - self.compose(self.split(mat, side), side)), initial=0) > 1e-10:
                raise InvalidInputError(f"linear term on side {side} has entries outside the block diagonal")

    @property
    def x_blocks(self) -> list[VariableBlock]:
        return [b for b in self.blocks if b.side == "X"]

    @property
    def y_blocks(self) -> list[VariableBlock]:
        return [b for b in self.blocks if b.side == "Y"]

    @property
    def p(self) -> int:
        return sum(b.dim for b in self.x_blocks)

    @property
    def q(self) -> int:
        return sum(b.dim for b in self.y_blocks)

    def side_blocks(self, side: Side) -> list[VariableBlock]:
        return self.x_blocks if side == "X" else self.y_blocks

    def offsets(self, side: Side) -> dict[str, tuple[int, int]]:
        out, o = {}, 0
        for b in self.side_blocks(side):
            out[b.name] = (o, o + b.dim)
            o += b.dim
        return out

    def compose(self, values: Mapping[str, np.ndarray], side: Side) -> np.ndarray:
        """Direct sum of one side's block values."""
        n = self.p if side == "X" else self.q
        out = np.zeros((n, n), complex)
        for name, (s0, s1) in self.offsets(side).items():
            out[s0:s1, s0:s1] = np.asarray(values[name]).reshape(s1 - s0, s1 - s0)
        return out

    def split(self, composite: np.ndarray, side: Side) -> dict[str, np.ndarray]:
        return {name: composite[s0:s1, s0:s1].copy() for name, (s0, s1) in self.offsets(side).items()}

    def objective(self, X: np.ndarray, Y: np.ndarray) -> float:
        """``F(X, Y)`` for composite operators."""
        val = np.trace(np.kron(X, Y) @ self.Q) + np.trace(self.A @ X) + np.trace(self.B @ Y)
        return float(val.real)

    def objective_blocks(self, values: Mapping[str, np.ndarray]) -> float:
        return self.objective(self.compose(values, "X"), self.compose(values, "Y"))

    def sdp_problem(self, objective: Mapping[str, object] | None = None) -> SdpProblem:
        return SdpProblem(
            [Block(b.name, b.dim) for b in self.blocks],
            dict(objective or {}),
            list(self.scalar_constraints),
            list(self.psd_constraints),
        )

    def base_form(self) -> ConicForm:
        """Compiled constraint set with a zero objective (cached)."""
        if self._form is None:
            self._form = compile_standard_form(self.sdp_problem())
        return self._form

    def solver_indices(self, side: Side) -> np.ndarray:
        """Positions of one side's basis coordinates inside the solver vector."""
        layout = self.base_form().layout
        return np.concatenate([np.arange(*layout[b.name][:2]) for b in self.side_blocks(side)]).astype(int)


def side_basis(problem: BilinearProblem, side: Side) -> np.ndarray:
    """Orthonormal basis of one side's block-diagonal Hermitian subspace.

    The ordering matches the solver coordinates: blocks in layout order, each
    with its own Gell-Mann basis.
    """
    n = problem.p if side == "X" else problem.q
    elems = []
    for name, (s0, s1) in problem.offsets(side).items():
        for e in hermitian_basis(s1 - s0):
            full = np.zeros((n, n), complex)
            full[s0:s1, s0:s1] = e
            elems.append(full)
    return np.array(elems)


def pair_coupling(problem_blocks: list[VariableBlock], pairs: Mapping[tuple[str, str], np.ndarray]) -> np.ndarray:
    """Assemble the full coupling ``Q`` from per-pair operators.

    ``pairs[(x_name, y_name)]`` acts on ``C^{d_x} ⊗ C^{d_y}`` and contributes
    ``tr((X_x ⊗ Y_y) Q_xy)`` to the objective.
    """
    xs = [b for b in problem_blocks if b.side == "X"]
    ys = [b for b in problem_blocks if b.side == "Y"]
    p, q = sum(b.dim for b in xs), sum(b.dim for b in ys)

    def offs(blocks):
        out, o = {}, 0
        for b in blocks:
            out[b.name] = (o, b.dim)
            o += b.dim
        return out

    ox, oy = offs(xs), offs(ys)
    Q = np.zeros((p, q, p, q), complex)
    for (xn, yn), mat in pairs.items():
        if xn not in ox or yn not in oy:
            raise InvalidInputError(f"coupling pair ({xn!r}, {yn!r}) does not name an X block and a Y block")
        (x0, dx), (y0, dy) = ox[xn], oy[yn]
        m = np.asarray(mat, complex)
        if m.shape != (dx * dy, dx * dy):
            raise DimensionError(f"coupling for ({xn!r}, {yn!r}) has shape {m.shape}, expected {(dx * dy,) * 2}")
        Q[x0 : x0 + dx, y0 : y0 + dy, x0 : x0 + dx, y0 : y0 + dy] += m.reshape(dx, dy, dx, dy)
    return Q.reshape(p * q, p * q)
