"""SVD-aligned vectorization that turns the coupling into ``Σ σ_j x_j y_j``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, InvalidInputError
from ..operators import RealSvd, real_svd
from .problem import BilinearProblem, side_basis


@dataclass(frozen=True)
class GammaMap:
    """Bases, coupling matrix and its SVD for one :class:`BilinearProblem`.

    With ``x̂_i = tr(X η_i)`` and ``ŷ_k = tr(Y ξ_k)`` the objective reads
    ``x̂ᵀ U ŷ + â·x̂ + b̂·ŷ``. Rotating by ``x = Sᵀ x̂``, ``y = T ŷ`` gives
    ``Σ_{j<K} σ_j x_j y_j + a·x + b·y``.
    """

    x_basis: np.ndarray
    y_basis: np.ndarray
    U: np.ndarray
    svd: RealSvd
    a_hat: np.ndarray
    b_hat: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def n_x(self) -> int:
        return self.x_basis.shape[0]

    @property
    def n_y(self) -> int:
        return self.y_basis.shape[0]

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def sigma(self) -> np.ndarray:
        return self.svd.sigma[: self.rank]

    @property
    def S(self) -> np.ndarray:
        return self.svd.left

    @property
    def T(self) -> np.ndarray:
        return self.svd.right


def build_gamma_map(problem: BilinearProblem) -> GammaMap:
    """Compute the bases, ``U_{jk} = tr(Q(η_j⊗ξ_k))`` and its SVD.

    Raises:
        InvalidInputError: ``Q`` has weight outside the block-diagonal
            subspaces of the layout.
    """
    xb, yb = side_basis(problem, "X"), side_basis(problem, "Y")
    p, q = problem.p, problem.q
    Q4 = problem.Q.reshape(p, q, p, q)
    Uc = np.einsum("abcd,jca,kdb->jk", Q4, xb, yb, optimize=True)
    if np.max(np.abs(Uc.imag), initial=0) > 1e-10:
        raise InvalidInputError("coupling coefficients have an imaginary part; Q is not Hermitian")
    U = Uc.real
    proj = np.einsum("jk,jac,kbd->abcd", U, xb, yb, optimize=True).reshape(p * q, p * q)
    off = np.max(np.abs(problem.Q - proj), initial=0)
    if off > 1e-10:
        raise InvalidInputError(f"Q has weight {off:.3g} outside the block-diagonal subspaces of the layout")
    svd = real_svd(U)
    a_hat = np.einsum("ab,jba->j", problem.A, xb).real
    b_hat = np.einsum("ab,jba->j", problem.B, yb).real
    return GammaMap(xb, yb, U, svd, a_hat, b_hat, svd.left.T @ a_hat, svd.right @ b_hat)


def compute_vector_rep(gm: GammaMap, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(x, y) = Γ(X, Y)`` for composite operators."""
    X, Y = np.asarray(X), np.asarray(Y)
    if X.shape != gm.x_basis.shape[1:] or Y.shape != gm.y_basis.shape[1:]:
        raise DimensionError(
            f"operators of shape {X.shape}, {Y.shape} do not match the layout "
            f"{gm.x_basis.shape[1:]}, {gm.y_basis.shape[1:]}"
        )
    x_hat = np.einsum("ab,jba->j", X, gm.x_basis).real
    y_hat = np.einsum("ab,jba->j", Y, gm.y_basis).real
    return gm.S.T @ x_hat, gm.T @ y_hat


def compute_operator(gm: GammaMap, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`compute_vector_rep`."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != (gm.n_x,) or y.shape != (gm.n_y,):
        raise DimensionError(f"expected vectors of length {gm.n_x} and {gm.n_y}, got {x.shape} and {y.shape}")
    X = np.einsum("j,jab->ab", gm.S @ x, gm.x_basis)
    Y = np.einsum("j,jab->ab", gm.T.T @ y, gm.y_basis)
    return X, Y


def hat_to_vec(gm: GammaMap, x_hat: np.ndarray, y_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return gm.S.T @ x_hat, gm.T @ y_hat


def f_value(gm: GammaMap, x: np.ndarray, y: np.ndarray) -> float:
    """Objective in rotated coordinates."""
    k = gm.rank
    return float(gm.sigma @ (x[:k] * y[:k]) + gm.a @ x + gm.b @ y)
