import numpy as np
import pytest

from oracles import random_qubit_pair
from sdpbb.bnb import (
    Hyperrectangle,
    bounding_rectangle,
    branch_hyperrectangle,
    build_gamma_map,
    envelope_bounds,
    envelope_pieces,
    vex,
)
from sdpbb.bnb.relaxation import EDGE_RTOL
from sdpbb.errors import NodeError


def _random_boxes(rng, n):
    sigma = rng.uniform(0.1, 3.0, n)
    lx = rng.uniform(-2, 1, n)
    ux = lx + rng.uniform(1e-3, 3, n)
    ly = rng.uniform(-2, 1, n)
    uy = ly + rng.uniform(1e-3, 3, n)
    return sigma, lx, ux, ly, uy


def test_envelope_is_max_of_two_mccormick_planes():
    h0, h1 = envelope_pieces(2.0, 0.5, -0.5, -1.0, 1.0, -1.0, 1.0)
    # 2(-x - y - 1) and 2(x + y - 1)
    assert h0 == pytest.approx(-2.0)
    assert h1 == pytest.approx(-2.0)
    assert vex(2.0, 0.0, 0.0, -1, 1, -1, 1) == pytest.approx(-2.0)


def test_envelope_underestimates_and_matches_on_edges(rng):
    sigma, lx, ux, ly, uy = _random_boxes(rng, 20000)
    x = rng.uniform(lx, ux)
    y = rng.uniform(ly, uy)
    assert np.all(vex(sigma, x, y, lx, ux, ly, uy) <= sigma * x * y + 1e-12)
    for xe in (lx, ux):
        np.testing.assert_allclose(vex(sigma, xe, y, lx, ux, ly, uy), sigma * xe * y, atol=1e-12)
    for ye in (ly, uy):
        np.testing.assert_allclose(vex(sigma, x, ye, lx, ux, ly, uy), sigma * x * ye, atol=1e-12)


def test_envelope_gap_is_at_most_quarter_area(rng):
    # max of σxy - vex over the box is σ(ux-lx)(uy-ly)/4
    sigma, lx, ux, ly, uy = _random_boxes(rng, 5000)
    x = rng.uniform(lx, ux)
    y = rng.uniform(ly, uy)
    gap = sigma * x * y - vex(sigma, x, y, lx, ux, ly, uy)
    assert np.all(gap <= sigma * (ux - lx) * (uy - ly) / 4 + 1e-12)
    xm, ym = (lx + ux) / 2, (ly + uy) / 2
    np.testing.assert_allclose(sigma * xm * ym - vex(sigma, xm, ym, lx, ux, ly, uy),
                               sigma * (ux - lx) * (uy - ly) / 4, rtol=1e-9, atol=1e-12)


def _rect(k=2):
    return Hyperrectangle(np.array([-1.0, -1.0]), np.array([1.0, 1.0]), np.array([-1.0, -2.0]), np.array([1.0, 2.0]), k)


class _FakeGamma:
    def __init__(self, sigma):
        self.sigma = np.asarray(sigma, float)
        self.rank = len(sigma)


def test_branching_picks_largest_gap_and_orders_children():
    gm = _FakeGamma([1.0, 1.0])
    rect = _rect()
    # at (0, 0) the second pair has the wider y range and so the larger gap
    j, kids = branch_hyperrectangle(rect, (np.zeros(2), np.zeros(2)), gm)
    assert j == 1
    assert [(k.lx[1], k.ux[1], k.ly[1], k.uy[1]) for k in kids] == [
        (-1.0, 0.0, -2.0, 0.0), (0.0, 1.0, -2.0, 0.0), (0.0, 1.0, 0.0, 2.0), (-1.0, 0.0, 0.0, 2.0)]
    # the other pair is untouched
    for k in kids:
        assert (k.lx[0], k.ux[0]) == (-1.0, 1.0)
    assert sum(k.volume() for k in kids) == pytest.approx(rect.volume())


def test_branching_at_edge_uses_midpoint():
    gm = _FakeGamma([1.0])
    rect = Hyperrectangle(np.array([0.0]), np.array([2.0]), np.array([0.0]), np.array([4.0]), 1)
    # the gap vanishes on edges, so use an interior y and an x within the edge tolerance
    j, kids = branch_hyperrectangle(rect, (np.array([2.0 * (1 - EDGE_RTOL / 4)]), np.array([1.0])), gm)
    assert kids[0].ux[0] == pytest.approx(1.0)
    assert kids[0].uy[0] == pytest.approx(1.0)


def test_branching_rejects_outside_witness():
    with pytest.raises(NodeError, match="outside"):
        branch_hyperrectangle(_rect(), (np.array([3.0, 0.0]), np.zeros(2)), _FakeGamma([1.0, 1.0]))


def test_root_box_contains_states(rng):
    p = random_qubit_pair(rng)
    gm = build_gamma_map(p)
    rect = bounding_rectangle(p, gm, all_coordinates=True)
    # for density matrices each rotated coordinate is bounded by the norm of a Bloch-like vector
    assert np.all(np.isfinite(rect.lx)) and np.all(rect.ux - rect.lx <= 2 * np.sqrt(2) + 1e-6)


def test_children_bounds_do_not_decrease(rng):
    p = random_qubit_pair(rng)
    gm = build_gamma_map(p)
    root = envelope_bounds(p, gm, bounding_rectangle(p, gm), node_id=0)
    assert root.lower <= root.upper + 1e-9
    node = root
    for _ in range(5):
        _, kids = branch_hyperrectangle(node.rect, (node.x, node.y), gm)
        bounded = [envelope_bounds(p, gm, r) for r in kids]
        for child in bounded:
            if child.feasible:
                assert child.lower >= node.lower - 1e-9
                assert child.lower <= child.upper + 1e-9
        node = min((c for c in bounded if c.feasible), key=lambda c: c.lower)
