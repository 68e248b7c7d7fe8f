import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dotprod_trees.errors import MeasureError, OverlappingBranches, TooManyPoints
from dotprod_trees.measures import (
    cantor_1d,
    cantor_min_gap,
    cantor_product,
    diameter,
    min_gap,
    point_measure,
    product_measure,
    regularity_check,
    shift_to_box,
    uniform_cube_sample,
)
from dotprod_trees.scaling import dim_estimate


def brute_gap(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    dist[np.diag_indices(len(pts))] = np.inf
    return dist.min()


def test_cantor_examples():
    m = cantor_1d(1 / 3, 2, 1)
    np.testing.assert_allclose(m.points[:, 0], [0, 2 / 3], atol=1e-15)
    np.testing.assert_allclose(m.weights, [0.5, 0.5])
    m0 = cantor_1d(1 / 3, 2, 0)
    assert m0.n == 1 and m0.weights[0] == 1.0
    m2 = cantor_1d(0.25, 3, 2)
    assert m2.n == 9
    assert m2.s == pytest.approx(math.log(3) / math.log(4))
    with pytest.raises(OverlappingBranches):
        cantor_1d(0.5, 3, 1)


@pytest.mark.parametrize("ratio, b", [(1 / 3, 2), (0.25, 3), (0.2, 4), (0.1, 5)])
@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_cantor_gap(ratio, b, level):
    m = cantor_1d(ratio, b, level)
    gap = brute_gap(m.points)
    assert gap == pytest.approx(cantor_min_gap(ratio, b, level), rel=1e-12)
    assert gap == pytest.approx(min_gap(m), rel=1e-12)
    # the closed form r^L (1 - b r + r) never exceeds the true gap
    assert ratio**level * (1 - b * ratio + ratio) <= gap * (1 + 1e-12)


def test_product_examples():
    m1 = cantor_1d(1 / 3, 2, 1)
    p = product_measure(m1, m1)
    assert p.n == 4 and p.d == 2
    np.testing.assert_allclose(p.weights, 0.25)
    q = cantor_product(0.25, 3, 2, 2)
    assert q.s == pytest.approx(2 * math.log(3) / math.log(4))
    assert q.s > 1.5
    z = cantor_product(0.25, 3, 0, 2)
    assert z.n == 1 and z.weights[0] == 1.0
    with pytest.raises(TooManyPoints):
        product_measure(cantor_1d(0.25, 3, 7), cantor_1d(0.25, 3, 7), cap=10**6)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 10_000))
@settings(max_examples=30)
def test_product_weights(l1, l2, seed):
    a = cantor_1d(0.25, 3, l1)
    b = uniform_cube_sample(3, 1, 0.3, seed)
    p = product_measure(a, b)
    assert p.n == a.n * b.n
    assert abs(p.weights.sum() - 1) <= 1e-12
    for idx in range(p.n):
        i, j = divmod(idx, b.n)
        assert p.weights[idx] == pytest.approx(a.weights[i] * b.weights[j], rel=1e-15)
        np.testing.assert_array_equal(p.points[idx], np.concatenate([a.points[i], b.points[j]]))


def test_shift_examples():
    assert shift_to_box(point_measure([[0.0]]), 0.5).points[0, 0] == 0.5
    assert shift_to_box(point_measure([[1.0]]), 0.37).points[0, 0] == 1.0
    m = shift_to_box(cantor_1d(1 / 3, 2, 1), 0.4)
    np.testing.assert_allclose(m.points[:, 0], [0.4, 0.8], atol=1e-15)


@given(st.floats(0.01, 0.9), st.floats(0.01, 0.9), st.integers(0, 1000))
def test_shift_composes(c1, c2, seed):
    m = uniform_cube_sample(20, 2, 0.0, seed)
    twice = shift_to_box(shift_to_box(m, c1), c2)
    c = c2 + (1 - c2) * c1
    once = c + (1 - c) * m.points
    np.testing.assert_allclose(twice.points, once, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(twice.weights, m.weights)
    assert twice.meta["c"] == pytest.approx(c, abs=1e-15)
    back = (twice.points - c) / (1 - c)
    np.testing.assert_allclose(back, m.points, atol=1e-14)


def test_uniform_sample():
    one = uniform_cube_sample(1, 3, 0.3, 5)
    assert one.n == 1 and one.weights[0] == 1.0
    a = uniform_cube_sample(100, 2, 0.5, 7)
    b = uniform_cube_sample(100, 2, 0.5, 7)
    assert a.equals(b)
    assert a.points.min() >= 0.5 and a.points.max() <= 1.0
    assert a.meta["rng"] == "numpy.random.PCG64"
    big = uniform_cube_sample(10**4, 2, 0.5, 1)
    # radii between ~3x the mean spacing and diam/8; greedy covers undershoot outside that window
    est = dim_estimate(big, [2.0**-i for i in range(4, 7)])
    assert est.slope == pytest.approx(2, abs=0.2)


def test_weights_normalized_everywhere():
    ms = [
        cantor_1d(1 / 3, 2, 6),
        cantor_product(0.25, 3, 3, 2),
        shift_to_box(cantor_product(0.25, 3, 2, 2), 0.3),
        uniform_cube_sample(500, 3, 0.2, 3),
        point_measure([[0.1], [0.2], [0.7]], [1, 2, 3]),
    ]
    for m in ms:
        assert abs(m.weights.sum() - 1) <= 1e-12


def test_point_measure_rejects_bad_weights():
    with pytest.raises(MeasureError):
        point_measure([[0.1], [0.2]], [1.0, -1.0])
    with pytest.raises(MeasureError):
        point_measure([[0.1], [0.2]], [0.0, 0.0])


def test_measure_is_read_only():
    m = cantor_1d(1 / 3, 2, 2)
    with pytest.raises(ValueError):
        m.points[0, 0] = 5.0


def test_diameter_matches_brute():
    m = uniform_cube_sample(200, 2, 0.3, 1)
    diff = m.points[:, None] - m.points[None]
    assert diameter(m) == pytest.approx(np.sqrt((diff**2).sum(-1)).max(), rel=1e-12)


def test_regularity_examples():
    atom = point_measure([[0.5, 0.5]])
    rep = regularity_check(atom, 0.0, [0.5, 0.1, 0.01])
    assert rep.max_upper_ratio == 1.0 and rep.min_lower_ratio == 1.0
    ct = cantor_1d(1 / 3, 2, 6)
    rep = regularity_check(ct, math.log(2) / math.log(3), [3.0**-i for i in range(1, 6)])
    assert rep.max_upper_ratio <= 4 and rep.min_lower_ratio >= 0.25
    uni = uniform_cube_sample(10**4, 2, 0.3, 1)
    rep = regularity_check(uni, 2.0, [2.0**-i for i in range(1, 5)])
    assert 1 / 8 <= rep.min_lower_ratio and rep.max_upper_ratio <= 8


def test_dim_estimate_examples():
    ct = cantor_1d(1 / 3, 2, 7)
    est = dim_estimate(ct, [3.0**-i for i in range(1, 7)])
    assert est.slope == pytest.approx(math.log(2) / math.log(3), abs=0.05)
    atom = point_measure([[0.5]])
    assert dim_estimate(atom, [0.5, 0.25, 0.125]).slope == pytest.approx(0, abs=1e-12)
