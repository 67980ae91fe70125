"""User-facing SDP model and its compilation to the solver's conic form.

An :class:`SdpProblem` has Hermitian matrix blocks and real scalar blocks, a
linear objective, scalar affine constraints and affine PSD constraints of the
form ``Σ_b γ_b V_b + K ⪰ 0``. :func:`compile_standard_form` turns it into a
:class:`ConicForm`::

    minimize    c·x
    subject to  G x + s = h,   s ∈ R^l_+ × S^{m_1}_+ × ...
                A x = b

where ``x`` stacks the Gell-Mann coordinates of every Hermitian block and the
scalar values. Complex d×d PSD constraints are embedded as real symmetric
2d×2d cones ``[[Re, -Im], [Im, Re]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from ..errors import DimensionError, HermitianError, InvalidInputError
from ..operators import as_hermitian, hermitian_basis

Relation = Literal["=", "<=", ">="]


@dataclass(frozen=True)
class Block:
    name: str
    dim: int = 1
    kind: Literal["hermitian", "scalar"] = "hermitian"

    @property
    def size(self) -> int:
        """Number of real coordinates."""
        return self.dim * self.dim if self.kind == "hermitian" else 1


@dataclass
class ScalarConstraint:
    """``Σ_b tr(C_b V_b) + Σ_s c_s v_s  (relation)  rhs``."""

    coeffs: Mapping[str, object]
    relation: Relation
    rhs: float
    label: str = ""


@dataclass
class PsdConstraint:
    """``Σ_b γ_b V_b + constant ⪰ 0`` (scalar blocks enter as ``γ v I``)."""

    coeffs: Mapping[str, float]
    constant: np.ndarray | None = None
    label: str = ""


@dataclass
class SdpProblem:
    blocks: Sequence[Block]
    objective: Mapping[str, object] = field(default_factory=dict)
    scalar_constraints: list[ScalarConstraint] = field(default_factory=list)
    psd_constraints: list[PsdConstraint] = field(default_factory=list)
    sense: Literal["min", "max"] = "min"
    offset: float = 0.0

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise InvalidInputError(f"unknown block {name!r}")


def embed(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``[[Re h, -Im h], [Im h, Re h]]`` of a Hermitian matrix."""
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed(m: np.ndarray) -> np.ndarray:
    d = m.shape[0] // 2
    return (m[:d, :d] + m[d:, d:]) / 2 + 1j * (m[d:, :d] - m[:d, d:]) / 2


@dataclass
class PsdGroup:
    """All PSD cones of one embedded size ``m``, stacked for batched algebra.

    ``G`` has shape ``(k, n, m, m)`` and ``h`` shape ``(k, m, m)``; the slack of
    cone ``i`` is ``h[i] - Σ_j x_j G[i, j]``.
    """

    G: np.ndarray
    h: np.ndarray
    labels: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return self.G.shape[0]

    @property
    def size(self) -> int:
        return self.G.shape[2]


@dataclass
class ConicForm:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G_lp: np.ndarray
    h_lp: np.ndarray
    psd: list[PsdGroup]
    # name -> (start, stop, Block); used to turn x back into block values
    layout: dict = field(default_factory=dict)
    sign: float = 1.0
    offset: float = 0.0
    lp_labels: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def degree(self) -> int:
        return self.G_lp.shape[0] + sum(g.count * g.size for g in self.psd)

    def block_values(self, x: np.ndarray) -> dict:
        out = {}
        for name, (start, stop, blk) in self.layout.items():
            if blk.kind == "scalar":
                out[name] = float(x[start])
            else:
                out[name] = np.einsum("j,jab->ab", x[start:stop], hermitian_basis(blk.dim))
        return out

    def user_objective(self, internal: float) -> float:
        return self.sign * internal + self.offset

    def with_extra(
        self,
        extra_vars: int = 0,
        c_extra: np.ndarray | None = None,
        lp_rows: np.ndarray | None = None,
        lp_rhs: np.ndarray | None = None,
        c_base: np.ndarray | None = None,
    ) -> "ConicForm":
        """Copy with appended scalar variables and LP inequality rows.

        ``lp_rows`` must already have ``n + extra_vars`` columns.
        """
        n = self.n + extra_vars
        c = np.concatenate([self.c if c_base is None else c_base, np.zeros(extra_vars) if c_extra is None else c_extra])
        pad = ((0, 0), (0, extra_vars))
        A = np.pad(self.A, pad)
        G_lp = np.pad(self.G_lp, pad)
        h_lp = self.h_lp
        if lp_rows is not None:
            G_lp = np.vstack([G_lp, lp_rows.reshape(-1, n)])
            h_lp = np.concatenate([h_lp, lp_rhs])
        psd = [
            PsdGroup(np.pad(g.G, ((0, 0), (0, extra_vars), (0, 0), (0, 0))), g.h, g.labels)
            for g in self.psd
        ]
        return ConicForm(c, A, self.b, G_lp, h_lp, psd, self.layout, self.sign, self.offset)


def _coeff_vector(coef, blk: Block, where: str) -> np.ndarray:
    if blk.kind == "scalar":
        val = np.asarray(coef, dtype=complex)
        if val.size != 1 or abs(val.imag).max() > 1e-12:
            raise DimensionError(f"{where}: scalar block {blk.name!r} needs a real number")
        return np.array([float(val.real.ravel()[0])])
    try:
        m = as_hermitian(coef, tol=1e-10, name=f"block {blk.name!r} ({where})")
    except HermitianError as exc:
        raise HermitianError(f"hermitian violation at block {blk.name!r} ({where})") from exc
    if m.shape != (blk.dim, blk.dim):
        raise DimensionError(
            f"{where}: coefficient for block {blk.name!r} has shape {m.shape}, expected {(blk.dim, blk.dim)}"
        )
    return np.einsum("ab,jba->j", m, hermitian_basis(blk.dim)).real


def compile_standard_form(problem: SdpProblem) -> ConicForm:
    """Compile an :class:`SdpProblem` into the solver's :class:`ConicForm`.

    Raises:
        DimensionError: a coefficient or constant does not match its block, or
            one PSD constraint mixes blocks of different dimensions. The message
            names the offending constraint.
    """
    if not problem.blocks:
        raise InvalidInputError("an SDP needs at least one block")
    layout, start = {}, 0
    for blk in problem.blocks:
        if blk.name in layout:
            raise InvalidInputError(f"duplicate block name {blk.name!r}")
        if blk.kind not in ("hermitian", "scalar") or blk.dim < 1:
            raise DimensionError(f"block {blk.name!r} has invalid kind/dim")
        layout[blk.name] = (start, start + blk.size, blk)
        start += blk.size
    n = start

    def lookup(name, where):
        if name not in layout:
            raise InvalidInputError(f"{where}: unknown block {name!r}")
        return layout[name]

    c = np.zeros(n)
    for name, coef in problem.objective.items():
        s0, s1, blk = lookup(name, "objective")
        c[s0:s1] += _coeff_vector(coef, blk, "objective")
    sign = 1.0
    if problem.sense == "max":
        c, sign = -c, -1.0
    elif problem.sense != "min":
        raise InvalidInputError(f"unknown sense {problem.sense!r}")

    eq_rows, eq_rhs, lp_rows, lp_rhs, lp_labels = [], [], [], [], []
    for i, con in enumerate(problem.scalar_constraints):
        where = f"scalar constraint {con.label or i}"
        row = np.zeros(n)
        for name, coef in con.coeffs.items():
            s0, s1, blk = lookup(name, where)
            row[s0:s1] += _coeff_vector(coef, blk, where)
        rhs = float(con.rhs)
        if con.relation == "=":
            eq_rows.append(row)
            eq_rhs.append(rhs)
        elif con.relation == "<=":
            lp_rows.append(row)
            lp_rhs.append(rhs)
            lp_labels.append(con.label or where)
        elif con.relation == ">=":
            lp_rows.append(-row)
            lp_rhs.append(-rhs)
            lp_labels.append(con.label or where)
        else:
            raise InvalidInputError(f"{where}: unknown relation {con.relation!r}")

    groups: dict[int, tuple[list, list, list]] = {}
    for i, con in enumerate(problem.psd_constraints):
        where = f"psd constraint {con.label or i}"
        dims = {lookup(name, where)[2].dim for name in con.coeffs if lookup(name, where)[2].kind == "hermitian"}
        if con.constant is not None:
            kc = np.asarray(con.constant)
            dims.add(kc.shape[0] if kc.ndim == 2 else 1)
        if len(dims) > 1:
            raise DimensionError(f"{where}: blocks of different dimensions {sorted(dims)} in one PSD constraint")
        if not dims:
            raise DimensionError(f"{where}: cannot infer the matrix dimension")
        d = dims.pop()
        if con.constant is None:
            const = np.zeros((d, d), dtype=complex)
        else:
            try:
                const = as_hermitian(con.constant, tol=1e-10, name=where)
            except HermitianError as exc:
                raise HermitianError(f"hermitian violation at {where} constant") from exc
            if const.shape != (d, d):
                raise DimensionError(f"{where}: constant has shape {const.shape}, expected {(d, d)}")
        Gi = np.zeros((n, 2 * d, 2 * d))
        for name, gamma in con.coeffs.items():
            s0, s1, blk = lookup(name, where)
            gamma = float(gamma)
            if blk.kind == "scalar":
                Gi[s0] -= gamma * np.eye(2 * d)
            else:
                basis = hermitian_basis(blk.dim)
                for j in range(blk.size):
                    Gi[s0 + j] -= gamma * embed(basis[j])
        gs, hs, labels = groups.setdefault(2 * d, ([], [], []))
        gs.append(Gi)
        hs.append(embed(const))
        labels.append(con.label or where)
    psd = [PsdGroup(np.array(g), np.array(h), lab) for _, (g, h, lab) in sorted(groups.items())]

    A = np.array(eq_rows).reshape(-1, n)
    b = np.array(eq_rhs, dtype=float)
    G_lp = np.array(lp_rows).reshape(-1, n)
    h_lp = np.array(lp_rhs, dtype=float)
    return ConicForm(c, A, b, G_lp, h_lp, psd, layout, sign, float(problem.offset), lp_labels)


def fix_variables(form: ConicForm, index: np.ndarray, values: np.ndarray, tol: float = 1e-7) -> tuple[ConicForm, np.ndarray, float]:
    """Substitute ``x[index] = values`` and drop constraints that become constant.

    Returns the reduced form (over the remaining coordinates), the array of
    remaining indices, and the objective constant contributed by the fixed
    coordinates. Constant constraints violated by more than ``tol`` raise
    :class:`InvalidInputError`.
    """
    index = np.asarray(index, dtype=int)
    values = np.asarray(values, dtype=float)
    keep = np.setdiff1d(np.arange(form.n), index)
    const = float(form.c[index] @ values)

    def split(mat):
        return mat[..., keep], mat[..., index] @ values

    A_k, A_f = split(form.A)
    b = form.b - A_f
    live = np.any(np.abs(A_k) > 0, axis=1)
    if np.any(np.abs(b[~live]) > tol * max(1.0, np.abs(form.b).max(initial=0))):
        raise InvalidInputError("fixed values violate an equality constraint")
    G_k, G_f = split(form.G_lp)
    h = form.h_lp - G_f
    live_lp = np.any(np.abs(G_k) > 0, axis=1)
    if np.any(h[~live_lp] < -tol):
        raise InvalidInputError("fixed values violate a scalar inequality")
    psd = []
    for g in form.psd:
        Gk = g.G[:, keep]
        hf = g.h - np.einsum("knab,n->kab", g.G[:, index], values)
        live_c = np.any(np.abs(Gk) > 0, axis=(1, 2, 3))
        for k in np.flatnonzero(~live_c):
            if np.linalg.eigvalsh(hf[k])[0] < -tol:
                raise InvalidInputError("fixed values violate a PSD constraint")
        if np.any(live_c):
            psd.append(PsdGroup(Gk[live_c], hf[live_c], [l for l, ok in zip(g.labels, live_c) if ok]))
    reduced = ConicForm(
        form.c[keep], A_k[live], b[live], G_k[live_lp], h[live_lp], psd, {}, form.sign, form.offset
    )
    return reduced, keep, const
