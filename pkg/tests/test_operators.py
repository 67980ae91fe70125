import numpy as np
import pytest

from sdpbb.errors import DimensionError, HermitianError, InvalidInputError
from sdpbb.operators import (
    PAULI,
    as_hermitian,
    coordinates,
    flip_operator,
    from_coordinates,
    hermitian_basis,
    hs_inner,
    random_density_matrix,
    random_hermitian,
    real_svd,
    trace_norm,
)


def test_qubit_basis_is_scaled_pauli():
    b = hermitian_basis(2)
    expected = np.array([np.eye(2)] + list(PAULI)) / np.sqrt(2)
    np.testing.assert_allclose(b, expected, atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_basis_orthonormal_and_hermitian(d):
    b = hermitian_basis(d)
    assert b.shape == (d * d, d, d)
    gram = np.einsum("iab,jba->ij", b, b)
    np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-13)
    np.testing.assert_allclose(b, np.conj(np.swapaxes(b, 1, 2)), atol=0)
    np.testing.assert_allclose(b[0], np.eye(d) / np.sqrt(d))


def test_coordinates_roundtrip(rng):
    for d in (2, 3):
        h = random_hermitian(d, rng)
        c = coordinates(h, hermitian_basis(d))
        np.testing.assert_allclose(from_coordinates(c, hermitian_basis(d)), h, atol=1e-13)
        # Hilbert-Schmidt products become dot products
        g = random_hermitian(d, rng)
        assert hs_inner(h, g) == pytest.approx(c @ coordinates(g, hermitian_basis(d)), abs=1e-12)


def test_coordinates_shape_mismatch():
    with pytest.raises(DimensionError):
        coordinates(np.eye(3), hermitian_basis(2))
    with pytest.raises(DimensionError):
        from_coordinates(np.zeros(3), hermitian_basis(2))


def test_as_hermitian_rejects_asymmetry():
    with pytest.raises(HermitianError, match="hermitian violation"):
        as_hermitian([[0, 1], [0, 0]])
    with pytest.raises(DimensionError):
        as_hermitian(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        as_hermitian([[np.nan, 0], [0, 1]])
    out = as_hermitian([[1, 1e-14], [0, 1]])
    np.testing.assert_array_equal(out, out.conj().T)


def test_trace_norm_of_state_difference():
    # orthogonal pure states are at trace norm 2
    assert trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0)
    w0, w1 = np.array([0.3, 0.0, 0.4]), np.array([-0.2, 0.1, 0.0])
    r0 = (np.eye(2) + sum(w * s for w, s in zip(w0, PAULI))) / 2
    r1 = (np.eye(2) + sum(w * s for w, s in zip(w1, PAULI))) / 2
    assert trace_norm(r0 - r1) == pytest.approx(np.linalg.norm(w0 - w1), abs=1e-14)


def test_random_density_matrix_is_state(rng):
    rho = random_density_matrix(3, rng)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-14


def test_flip_operator_swaps():
    f = flip_operator(2)
    a, b = np.array([1.0, 2.0]), np.array([0.5, -1.0])
    np.testing.assert_allclose(f @ np.kron(a, b), np.kron(b, a))
    np.testing.assert_allclose(f @ f, np.eye(4))


def test_real_svd_reconstructs_and_is_canonical(rng):
    m = rng.normal(size=(4, 3))
    s = real_svd(m)
    np.testing.assert_allclose(s.reconstruct(), m, atol=1e-12)
    np.testing.assert_allclose(s.left @ s.left.T, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(s.right @ s.right.T, np.eye(3), atol=1e-12)
    assert s.rank == 3
    # sign flips of the input's factors do not change the output
    s2 = real_svd(m.copy())
    np.testing.assert_array_equal(s.left, s2.left)


def test_real_svd_rank_deficient():
    m = np.outer([1.0, 2.0, 0.0], [0.0, 1.0, 1.0])
    s = real_svd(m)
    assert s.rank == 1
    assert s.sigma[0] == pytest.approx(np.sqrt(5) * np.sqrt(2))
    np.testing.assert_allclose(s.reconstruct(), m, atol=1e-12)
    assert real_svd(np.zeros((2, 2))).rank == 0
