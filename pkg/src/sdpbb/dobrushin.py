"""Energy-constrained Dobrushin curves of quantum channels.

``F_E(δ)`` is the largest output trace distance ``‖Φ(ρ0) - Φ(ρ1)‖₁`` over
state pairs at input distance at most ``δ`` whose energies ``tr(Hρ)`` are at
most ``E``. It is computed as ``δ`` times minus the optimum of a bilinear
program in ``(P, Q, R)`` (qubit mode) or ``(P, Q, R, S)`` (general mode),
where ``Q`` is ``ρ1``, the difference ``ρ0 - ρ1`` is carried by ``R`` (and
``S``), and ``0 ⪯ P ⪯ I`` is the optimal measurement.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bnb import BilinearProblem, VariableBlock, pair_coupling, solve_bilinear
from .channels import QuantumChannel
from .errors import DimensionError, InvalidInputError, SdpbbError
from .operators import PAULI, as_hermitian
from .sdp import PsdConstraint, ScalarConstraint, SolverSettings


@dataclass
class DobrushinInstance:
    channel: QuantumChannel
    energy: float
    delta: float
    H: np.ndarray | None = None
    mode: str = "qubit"
    symmetry: bool = False
    trace_one_P: bool = False

    def __post_init__(self):
        d = self.channel.d_in
        if self.channel.d_out != d:
            raise DimensionError("Dobrushin curves need a channel with equal input and output dimension")
        if self.H is None:
            if d != 2:
                raise InvalidInputError("a Hamiltonian is required for channels that are not qubit channels")
            self.H = PAULI[2].copy()
        self.H = as_hermitian(self.H, tol=1e-10, name="Hamiltonian")
        if self.H.shape != (d, d):
            raise DimensionError(f"Hamiltonian has shape {self.H.shape}, expected {(d, d)}")
        if not 0.0 <= self.delta <= 2.0:
            raise InvalidInputError(f"delta={self.delta!r} outside [0, 2]")
        if self.energy < np.linalg.eigvalsh(self.H)[0] - 1e-12:
            raise InvalidInputError(f"energy {self.energy!r} is below the ground energy; no admissible states")
        if self.mode not in ("qubit", "general"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.mode == "qubit" and d != 2:
            raise DimensionError("qubit mode needs a qubit channel")
        if self.symmetry and d != 2:
            raise InvalidInputError("the σ2 symmetry constraint is defined for qubits only")


def build_instance(inst: DobrushinInstance) -> BilinearProblem:
    """Bilinear program whose minimum ``m`` gives ``F_E(δ) = δ·(-m)``.

    ``metadata`` records ``scale = δ`` and ``sign = -1`` for reporting.
    """
    d, delta, H, E = inst.channel.d_in, float(inst.delta), inst.H, float(inst.energy)
    I = np.eye(d)
    Qhat = inst.channel.flip_adjoint()
    trH = float(np.trace(H).real)
    if inst.mode == "qubit":
        blocks = [VariableBlock("P", "X", d), VariableBlock("Q", "Y", d), VariableBlock("R", "Y", d)]
        Q = pair_coupling(blocks, {("P", "R"): -2 * Qhat})
        A = inst.channel(I)
        scalar = [
            ScalarConstraint({"Q": I}, "=", 1.0, "trace Q"),
            ScalarConstraint({"R": I}, "=", 1.0, "trace R"),
            ScalarConstraint({"Q": H}, "<=", E, "energy of Q"),
            ScalarConstraint({"Q": H, "R": delta * H}, "<=", E + delta * trH / 2, "energy of shifted state"),
        ]
        psd = [
            PsdConstraint({"Q": 1.0}, label="Q psd"),
            PsdConstraint({"R": 1.0}, label="R psd"),
            PsdConstraint({"Q": 1.0, "R": delta}, -delta / 2 * I, label="shifted state psd"),
        ]
    else:
        blocks = [
            VariableBlock("P", "X", d),
            VariableBlock("Q", "Y", d),
            VariableBlock("R", "Y", d),
            VariableBlock("S", "Y", d),
        ]
        Q = pair_coupling(blocks, {("P", "R"): -Qhat, ("P", "S"): Qhat})
        A = None
        h = delta / 2
        scalar = [
            ScalarConstraint({"Q": I}, "=", 1.0, "trace Q"),
            ScalarConstraint({"R": I}, "=", 1.0, "trace R"),
            ScalarConstraint({"S": I}, "=", 1.0, "trace S"),
            ScalarConstraint({"Q": H}, "<=", E, "energy of Q"),
            ScalarConstraint({"Q": H, "R": h * H, "S": -h * H}, "<=", E, "energy of shifted state"),
        ]
        psd = [
            PsdConstraint({"Q": 1.0}, label="Q psd"),
            PsdConstraint({"R": 1.0}, label="R psd"),
            PsdConstraint({"S": 1.0}, label="S psd"),
            PsdConstraint({"Q": 1.0, "R": h, "S": -h}, label="shifted state psd"),
        ]
    psd += [PsdConstraint({"P": 1.0}, label="P psd"), PsdConstraint({"P": -1.0}, I, label="P below identity")]
    if inst.trace_one_P:
        scalar.append(ScalarConstraint({"P": I}, "=", 1.0, "trace P"))
    if inst.symmetry:
        scalar.append(ScalarConstraint({"Q": PAULI[1]}, "=", 0.0, "sigma2 symmetry"))
    meta = {"scale": delta, "sign": -1.0, "mode": inst.mode, "channel": inst.channel.name}
    return BilinearProblem(blocks, Q=Q, A=A, scalar_constraints=scalar, psd_constraints=psd, metadata=meta)


def states_from_witness(inst: DobrushinInstance, values: dict) -> tuple[np.ndarray, np.ndarray]:
    """The input pair ``(ρ0, ρ1)`` encoded by a witness of :func:`build_instance`."""
    Q, R = values["Q"], values["R"]
    if inst.mode == "qubit":
        return Q + inst.delta / 2 * (2 * R - np.eye(Q.shape[0])), Q
    return Q + inst.delta / 2 * (R - values["S"]), Q


@dataclass
class CurvePoint:
    delta: float
    value: float
    half_width: float
    nodes: int
    seconds: float
    status: str = "certified"
    partition_size: int = 0
    error: str = ""
    witness: dict = field(default_factory=dict, repr=False)

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.half_width, self.value + self.half_width


def solve_point(
    inst: DobrushinInstance,
    epsilon: float = 1e-3,
    *,
    seesaw_init: bool = True,
    max_nodes: int = 100_000,
    settings: SolverSettings = SolverSettings(),
    trace: bool = False,
):
    """Certified ``F_E(δ)`` for one instance; returns ``(CurvePoint, GlobalResult | None)``."""
    t0 = time.perf_counter()
    if inst.delta == 0:
        return CurvePoint(0.0, 0.0, 0.0, 0, time.perf_counter() - t0), None
    problem = build_instance(inst)
    hint = None
    if seesaw_init:
        from .seesaw import seesaw

        try:
            hint = seesaw(problem, settings=settings).values
        except SdpbbError:
            hint = None
    # F = δ·(-min), so this precision on the bilinear minimum gives a half-width of epsilon on F
    eps_bnb = max(2 * epsilon / inst.delta, 10 * settings.gap_tol)
    res = solve_bilinear(problem, eps_bnb, max_nodes=max_nodes, incumbent_hint=hint, settings=settings, trace=trace)
    lo_f, hi_f = inst.delta * -res.value, inst.delta * -res.lower
    point = CurvePoint(
        inst.delta,
        (lo_f + hi_f) / 2,
        (hi_f - lo_f) / 2,
        res.nodes,
        time.perf_counter() - t0,
        res.status,
        res.partition_size,
        witness=res.witness,
    )
    return point, res


def _curve_worker(args):
    inst, kwargs = args
    t0 = time.perf_counter()
    try:
        return solve_point(inst, **kwargs)[0]
    except SdpbbError as exc:
        return CurvePoint(inst.delta, float("nan"), float("nan"), 0, time.perf_counter() - t0, "error", error=str(exc))


def dobrushin_curve(
    channel: QuantumChannel,
    H: np.ndarray | None,
    energy: float,
    deltas,
    epsilon: float = 1e-3,
    *,
    mode: str = "qubit",
    symmetry: bool = False,
    trace_one_P: bool = False,
    seesaw_init: bool = True,
    max_nodes: int = 100_000,
    settings: SolverSettings = SolverSettings(),
    jobs: int = 1,
) -> list[CurvePoint]:
    """One certified point per ``δ``; failures are recorded in the point and the sweep continues."""
    deltas = [float(d) for d in deltas]
    if any(b < a for a, b in zip(deltas, deltas[1:])):
        raise InvalidInputError("delta grid must be sorted")
    insts = [DobrushinInstance(channel, energy, d, H, mode, symmetry, trace_one_P) for d in deltas]
    kwargs = dict(epsilon=epsilon, seesaw_init=seesaw_init, max_nodes=max_nodes, settings=settings)
    work = [(inst, kwargs) for inst in insts]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_curve_worker, work))
    return [_curve_worker(w) for w in work]


def contraction_coefficient(channel: QuantumChannel, epsilon: float = 1e-4, **kwargs) -> float:
    """Trace-norm contraction ratio ``η(Φ) ∈ [0, 1]``, from ``F(2)/2`` without energy constraint."""
    d = channel.d_in
    inst = DobrushinInstance(channel, 0.0, 2.0, np.zeros((d, d)), "qubit" if d == 2 else "general")
    point, _ = solve_point(inst, epsilon, **kwargs)
    return float(np.clip(point.value / 2, 0.0, 1.0))


def cascade(deltas, values, n: int, start: float = 2.0) -> np.ndarray:
    """Iterates ``F∘k(start)`` for ``k = 0..n`` using linear interpolation of a computed curve."""
    deltas, values = np.asarray(deltas, float), np.asarray(values, float)
    out = [float(start)]
    for _ in range(n):
        out.append(float(np.interp(out[-1], deltas, values)))
    return np.array(out)


def _check_curve_args(a, E, delta):
    if not 0 <= a <= 1:
        raise InvalidInputError(f"a={a!r} outside [0, 1]")
    if not -1 < E <= 0:
        raise InvalidInputError(f"E={E!r} outside (-1, 0]")
    if not 0 <= delta <= 2:
        raise InvalidInputError(f"delta={delta!r} outside [0, 2]")


def analytic_dephasing_curve(a: float, E: float, delta: float) -> float:
    """Closed-form curve for the dephasing channel with ``H = σ3``.

    Piecewise: ``δ`` up to ``1-|E|``, then ``g_E``, then ``h_E`` up to
    ``2√(1-E²)``, then the plateau ``2a√(1-E²)``. This is the value of an
    explicit family of input pairs (see :func:`dephasing_bloch_pair`), so it
    is a lower bound on ``F_E(δ)``.
    """
    _check_curve_args(a, E, delta)
    e = abs(E)
    if delta <= 1 - e:
        return float(delta)
    if delta <= np.sqrt(2 * (1 - e)):
        return float(np.sqrt(a**2 * (delta**2 - (1 - e) ** 2) + (1 - e) ** 2))
    if delta <= 2 * np.sqrt(1 - e**2):
        t = 2 * np.arccos(delta / 2) + np.arccos(e)
        return float(np.sqrt((e + np.cos(t)) ** 2 + a**2 * (np.sqrt(1 - e**2) + np.sin(t)) ** 2))
    return float(2 * a * np.sqrt(1 - e**2))


def dephasing_bloch_pair(E: float, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Input Bloch vectors realizing :func:`analytic_dephasing_curve`."""
    _check_curve_args(0.0, E, delta)
    e = abs(E)
    if delta <= 1 - e:
        return np.array([0.0, 0.0, -1.0 + delta]), np.array([0.0, 0.0, -1.0])
    if delta <= np.sqrt(2 * (1 - e)):
        return np.array([np.sqrt(delta**2 - (1 - e) ** 2), 0.0, -e]), np.array([0.0, 0.0, -1.0])
    if delta <= 2 * np.sqrt(1 - e**2):
        theta, phi = np.arcsin(delta / 2), np.arcsin(e)
        alpha = 2 * theta + phi - np.pi / 2
        return np.array([np.cos(phi), 0.0, -np.sin(phi)]), np.array([-np.sin(alpha), 0.0, -np.cos(alpha)])
    x = np.sqrt(1 - e**2)
    return np.array([x, 0.0, -e]), np.array([-x, 0.0, -e])


def analytic_dephasing_bloch(a: float, E: float, delta: float) -> float:
    """Same curve as :func:`analytic_dephasing_curve`, via the output Bloch vectors."""
    _check_curve_args(a, E, delta)
    r1, r2 = dephasing_bloch_pair(E, delta)
    return float(np.linalg.norm(np.array([a, a, 1.0]) * (r1 - r2)))


def bloch_state(w) -> np.ndarray:
    w = np.asarray(w, float)
    return (np.eye(2) + sum(c * s for c, s in zip(w, PAULI))) / 2
