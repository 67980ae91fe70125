"""Quantum channels in Kraus form, with Choi matrices and adjoints."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, InvalidInputError
from .operators import PAULI, as_hermitian

CPTP_TOL = 1e-10


@dataclass(frozen=True)
class QuantumChannel:
    """A CPTP map ``ρ ↦ Σ K ρ K†`` from ``d_in`` to ``d_out`` dimensions."""

    kraus: tuple
    name: str = "channel"
    _choi: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise InvalidInputError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ks):
            raise DimensionError(f"Kraus operators must share one 2-d shape, got {[k.shape for k in ks]}")
        object.__setattr__(self, "kraus", ks)
        self.validate()

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def adjoint(self, a: np.ndarray) -> np.ndarray:
        """Heisenberg-picture map ``Φ*`` with ``tr(A Φ(B)) = tr(Φ*(A) B)``."""
        return sum(k.conj().T @ a @ k for k in self.kraus)

    @property
    def choi(self) -> np.ndarray:
        """``J = Σ_ij |i><j| ⊗ Φ(|i><j|)``."""
        if not self._choi:
            d = self.d_in
            J = np.zeros((d * self.d_out, d * self.d_out), complex)
            for i in range(d):
                for j in range(d):
                    e = np.zeros((d, d))
                    e[i, j] = 1.0
                    J += np.kron(e, self(e))
            self._choi.append(J)
        return self._choi[0]

    def completeness_residual(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.d_in))))

    def validate(self, tol: float = CPTP_TOL) -> None:
        """Check trace preservation and complete positivity.

        Raises:
            InvalidInputError: either property fails by more than ``tol``.
        """
        res = self.completeness_residual()
        if res > tol:
            raise InvalidInputError(f"{self.name}: Kraus operators are not trace preserving (residual {res:.3g})")
        lam = np.linalg.eigvalsh(self.choi)[0]
        if lam < -tol:
            raise InvalidInputError(f"{self.name}: Choi matrix has eigenvalue {lam:.3g}")

    def flip_adjoint(self) -> np.ndarray:
        """``(I ⊗ Φ*)(F)``, the operator with ``tr(Q̂ (P ⊗ R)) = tr(P Φ(R))``."""
        d_in, d_out = self.d_in, self.d_out
        F = np.zeros((d_out * d_out, d_out * d_out), complex)
        for i in range(d_out):
            for j in range(d_out):
                F[i * d_out + j, j * d_out + i] = 1.0
        out = np.zeros((d_out * d_in, d_out * d_in), complex)
        for k in self.kraus:
            lift = np.kron(np.eye(d_out), k)
            out += lift.conj().T @ F @ lift
        return out


def _check_range(name, val, lo, hi):
    if not (lo <= val <= hi):
        raise InvalidInputError(f"{name}={val!r} outside [{lo}, {hi}]")


def dephasing_channel(a: float) -> QuantumChannel:
    """Qubit channel scaling the σ1 and σ2 Bloch components by ``a``."""
    _check_range("a", a, 0.0, 1.0)
    return QuantumChannel(
        (np.sqrt((1 + a) / 2) * np.eye(2), np.sqrt((1 - a) / 2) * PAULI[2]), name=f"dephasing(a={a:g})"
    )


def rotated_dephasing(a: float, theta: float) -> QuantumChannel:
    """Dephasing channel with its principal axes rotated about σ1 by ``theta``.

    ``Φ_θ(ρ) = U† Φ(U ρ U†) U`` with ``U = exp(iθσ1/2)``.
    """
    _check_range("theta", theta, 0.0, 2 * np.pi)
    base = dephasing_channel(a)
    U = scipy.linalg.expm(0.5j * theta * PAULI[0])
    ks = tuple(U.conj().T @ k @ U for k in base.kraus)
    return QuantumChannel(ks, name=f"rotated_dephasing(a={a:g}, theta={theta:g})")


def identity_channel(d: int = 2) -> QuantumChannel:
    return QuantumChannel((np.eye(d),), name="identity")


def depolarizing_channel(p: float, d: int = 2) -> QuantumChannel:
    """``ρ ↦ (1-p) ρ + p tr(ρ) I/d``; ``p = 1`` is the fully depolarizing channel."""
    _check_range("p", p, 0.0, 1.0)
    ks = [np.sqrt(1 - p) * np.eye(d)] if p < 1 else []
    for a in range(d):
        for b in range(d):
            e = np.zeros((d, d))
            e[a, b] = np.sqrt(p / d)
            ks.append(e)
    return QuantumChannel(tuple(ks), name=f"depolarizing(p={p:g})")


def from_choi(J: np.ndarray, d_in: int, tol: float = CPTP_TOL) -> QuantumChannel:
    """Kraus form of the channel with Choi matrix ``J`` (eigenvalues below ``tol`` dropped)."""
    J = as_hermitian(J, tol=1e-10, name="Choi matrix")
    if J.shape[0] % d_in:
        raise DimensionError(f"Choi matrix of size {J.shape[0]} is not divisible by d_in={d_in}")
    d_out = J.shape[0] // d_in
    w, v = np.linalg.eigh(J)
    if w[0] < -tol:
        raise InvalidInputError(f"Choi matrix is not PSD (eigenvalue {w[0]:.3g})")
    ks = [np.sqrt(lam) * v[:, i].reshape(d_in, d_out).T for i, lam in enumerate(w) if lam > tol]
    return QuantumChannel(tuple(ks), name="from_choi")
