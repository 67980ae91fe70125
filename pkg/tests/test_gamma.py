import numpy as np
import pytest

from oracles import qubit_pair_problem, random_qubit_pair
from sdpbb.bnb import BilinearProblem, VariableBlock, build_gamma_map, compute_operator, compute_vector_rep, f_value
from sdpbb.bnb.problem import pair_coupling
from sdpbb.errors import DimensionError, InvalidInputError
from sdpbb.operators import block_diag, random_density_matrix, random_hermitian


def test_coupling_of_product_operator():
    # Q = σ3⊗σ3 couples only the σ3 coordinates, with weight tr(σ3 η)tr(σ3 ξ) = 2
    Q = np.kron(np.diag([1.0, -1.0]), np.diag([1.0, -1.0]))
    gm = build_gamma_map(qubit_pair_problem(Q))
    expected = np.zeros((4, 4))
    expected[3, 3] = 2.0
    np.testing.assert_allclose(gm.U, expected, atol=1e-14)
    assert gm.rank == 1
    assert gm.sigma[0] == pytest.approx(2.0)


def test_objective_identity_on_random_states(rng):
    p = random_qubit_pair(rng, linear=True)
    gm = build_gamma_map(p)
    for _ in range(20):
        X, Y = random_density_matrix(2, rng), random_density_matrix(2, rng)
        x, y = compute_vector_rep(gm, X, Y)
        assert f_value(gm, x, y) == pytest.approx(p.objective(X, Y), abs=1e-12)


def test_roundtrip(rng):
    p = random_qubit_pair(rng)
    gm = build_gamma_map(p)
    X, Y = random_hermitian(2, rng), random_hermitian(2, rng)
    Xb, Yb = compute_operator(gm, *compute_vector_rep(gm, X, Y))
    np.testing.assert_allclose(Xb, X, atol=1e-13)
    np.testing.assert_allclose(Yb, Y, atol=1e-13)


def test_multi_block_layout(rng):
    blocks = [VariableBlock("P", "X", 2), VariableBlock("Q", "X", 1), VariableBlock("R", "Y", 2)]
    M = random_hermitian(4, rng)
    Q = pair_coupling(blocks, {("P", "R"): M})
    p = BilinearProblem(blocks, Q)
    gm = build_gamma_map(p)
    assert gm.n_x == 5 and gm.n_y == 4
    P, Qv, R = random_hermitian(2, rng), np.array([[0.7]]), random_hermitian(2, rng)
    X = block_diag(P, Qv)
    expected = np.trace(M @ np.kron(P, R)).real
    assert f_value(gm, *compute_vector_rep(gm, X, R)) == pytest.approx(expected, abs=1e-12)


def test_off_block_weight_rejected():
    blocks = [VariableBlock("P", "X", 1), VariableBlock("Q", "X", 1), VariableBlock("R", "Y", 1)]
    # X = diag(P, Q); an entry linking P and Q never meets a feasible point
    Q = np.zeros((2, 2))
    Q[0, 1] = Q[1, 0] = 1.0
    with pytest.raises(InvalidInputError, match="outside the block-diagonal"):
        build_gamma_map(BilinearProblem(blocks, Q))


def test_shape_errors(rng):
    gm = build_gamma_map(random_qubit_pair(rng))
    with pytest.raises(DimensionError):
        compute_vector_rep(gm, np.eye(3), np.eye(2))
    with pytest.raises(DimensionError):
        compute_operator(gm, np.zeros(3), np.zeros(4))
