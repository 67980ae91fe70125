"""Hermitian linear algebra: operator bases, trace norm, real SVD, flip operator.

Hermitian operators are plain ``numpy`` complex arrays. Functions that ingest
them validate self-adjointness through :func:`as_hermitian`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import DimensionError, HermitianError, InvalidInputError, NumericalError

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

#: relative threshold below which singular values are treated as zero
RANK_RTOL = 1e-9


def _check_dim(d) -> int:
    if isinstance(d, bool) or int(d) != d or int(d) < 1:
        raise DimensionError(f"invalid dimension {d!r}; expected a positive integer")
    return int(d)


def as_hermitian(m, tol: float = 1e-12, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a complex square array after checking self-adjointness.

    The returned array is exactly Hermitian: it is replaced by ``(m + m^†)/2``
    once the asymmetry is known to be below ``tol``.
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise HermitianError(f"hermitian violation in {name}: max |M - M^dagger| = {dev:.3g}")
    return (a + a.conj().T) / 2


@lru_cache(maxsize=None)
def _basis_cached(d: int) -> np.ndarray:
    elems = [np.eye(d, dtype=complex) / np.sqrt(d)]
    if d > 1:
        pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
        for j, k in pairs:
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = 1 / np.sqrt(2)
            elems.append(e)
        for j, k in pairs:
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = -1j / np.sqrt(2)
            e[k, j] = 1j / np.sqrt(2)
            elems.append(e)
        for l in range(1, d):
            diag = np.zeros(d)
            diag[:l] = 1.0
            diag[l] = -l
            elems.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    out = np.array(elems)
    out.setflags(write=False)
    return out


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of the d×d Hermitian matrices.

    Normalized generalized Gell-Mann matrices in a fixed order: ``I/sqrt(d)``,
    then the symmetric off-diagonal generators, the antisymmetric ones, and
    finally the traceless diagonal ones. For ``d = 2`` this is
    ``(I, σ1, σ2, σ3) / sqrt(2)``.

    Returns:
        Read-only array of shape ``(d*d, d, d)``.
    """
    return _basis_cached(_check_dim(d))


def coordinates(h: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Real coefficients ``tr(h η_j)`` of ``h`` in an orthonormal Hermitian basis."""
    h = np.asarray(h)
    if h.shape != basis.shape[1:]:
        raise DimensionError(f"operator shape {h.shape} does not match basis {basis.shape[1:]}")
    return np.einsum("ab,jba->j", h, basis).real


def from_coordinates(c: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Inverse of :func:`coordinates`: ``Σ_j c_j η_j``."""
    c = np.asarray(c, dtype=float)
    if c.shape != (basis.shape[0],):
        raise DimensionError(f"expected {basis.shape[0]} coefficients, got {c.shape}")
    return np.einsum("j,jab->ab", c, basis)


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Hilbert-Schmidt inner product ``tr(a b)`` of two Hermitian operators."""
    return float(np.einsum("ab,ba->", a, b).real)


def trace_norm(h) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator."""
    h = as_hermitian(h, tol=1e-10, name="trace_norm input")
    try:
        w = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(
            f"eigensolver did not converge for a {h.shape[0]}x{h.shape[0]} operator "
            f"(max |entry| = {np.max(np.abs(h)):.3g})"
        ) from exc
    return float(np.sum(np.abs(w)))


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Hermitian matrix with real and imaginary entries drawn uniformly from [-scale, scale]."""
    m = rng.uniform(-scale, scale, (d, d)) + 1j * rng.uniform(-scale, scale, (d, d))
    m = np.triu(m, 1)
    return m + m.conj().T + np.diag(rng.uniform(-scale, scale, d))


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def flip_operator(d: int) -> np.ndarray:
    """Swap operator on ``C^d ⊗ C^d``: ``F |i j> = |j i>``."""
    d = _check_dim(d)
    f = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return f


@dataclass(frozen=True)
class RealSvd:
    """Factorization ``M = left @ Δ @ right`` with ``left``, ``right`` orthogonal.

    ``right`` is stored as used in the product (it is ``Vᵀ`` of the usual
    ``U Σ Vᵀ`` convention), so ``y = right @ ŷ`` rotates the column space.
    """

    left: np.ndarray
    sigma: np.ndarray
    right: np.ndarray
    rank: int

    @property
    def delta(self) -> np.ndarray:
        m, n = self.left.shape[0], self.right.shape[0]
        out = np.zeros((m, n))
        k = len(self.sigma)
        out[np.arange(k), np.arange(k)] = self.sigma
        return out

    def reconstruct(self) -> np.ndarray:
        return self.left @ self.delta @ self.right


def _canonical_sign(v: np.ndarray) -> float:
    idx = int(np.argmax(np.abs(v) > np.max(np.abs(v)) * (1 - 1e-12)))
    return -1.0 if v[idx] < 0 else 1.0


def _complement(active: np.ndarray, n: int) -> np.ndarray:
    """Deterministic orthonormal basis (columns) of the complement of ``active``'s span."""
    k = active.shape[1]
    if k == n:
        return np.zeros((n, 0))
    proj = np.eye(n) - active @ active.T
    q, _, _ = scipy.linalg.qr(proj, pivoting=True)
    comp = q[:, : n - k]
    for j in range(comp.shape[1]):
        comp[:, j] *= _canonical_sign(comp[:, j])
    return comp


def real_svd(m) -> RealSvd:
    """Singular value decomposition of a real matrix in the ``M = S Δ T`` convention.

    The rank counts singular values above ``RANK_RTOL * σ_1``. Singular vectors
    are sign-normalized (largest component positive on the left side) and the
    null-space completions are chosen canonically, so the output depends only
    on ``m``.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"real_svd expects a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("real_svd input has non-finite entries")
    rows, cols = a.shape
    if a.size == 0:
        return RealSvd(np.eye(rows), np.zeros(0), np.eye(cols), 0)
    try:
        u, s, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError("SVD did not converge") from exc
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    left_act = u[:, :rank].copy()
    right_act = vt[:rank, :].copy()
    for j in range(rank):
        sg = _canonical_sign(left_act[:, j])
        left_act[:, j] *= sg
        right_act[j, :] *= sg
    left = np.hstack([left_act, _complement(left_act, rows)])
    right = np.vstack([right_act, _complement(right_act.T, cols).T])
    sigma = s.copy()
    # numerically dead values are dropped together with their vectors
    sigma[rank:] = 0.0
    return RealSvd(left, sigma, right, rank)


def block_diag(*mats) -> np.ndarray:
    return scipy.linalg.block_diag(*[np.asarray(m, dtype=complex) for m in mats])
