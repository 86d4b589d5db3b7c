import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hpolytope, random_vpolytope, sample_box, unit_directions
from lagreach.errors import (
    DegenerateDirections,
    DimensionCapExceeded,
    DimensionMismatch,
    EmptyList,
    NonInvertibleMap,
    UnboundedPolytope,
    UnboundedSubtrahend,
)
from lagreach.geometry import (
    DirectionSet,
    Ellipsoid,
    HPolytope,
    VPolytope,
    affine_map,
    convert,
    convex_hull,
    from_dict,
    inner_polytope,
    intersect,
    is_subset,
    minkowski_sum,
    outer_polytope,
    outer_sum,
    pontryagin_diff,
    preimage_under_linear,
    slice_polytope,
    sum_with_segments,
    support_many,
    to_dict,
    volume,
)
from oracles import GEOMETRY_PROPERTIES

SQUARE = HPolytope.box([-1, -1], [1, 1])


def same_set(P, Q, rng=None, dirs=32, tol=1e-8):
    rng = rng or np.random.default_rng(0)
    D = unit_directions(rng, dirs, P.dim)
    return np.allclose(support_many(P.to_v(), D), support_many(Q.to_v(), D), atol=tol)


def box(lo, hi):
    return HPolytope.box(lo, hi)


# --- affine map -------------------------------------------------------------

def test_affine_identity_and_scaling():
    assert same_set(affine_map(SQUARE, np.eye(2)), SQUARE)
    assert same_set(affine_map(SQUARE, 2 * np.eye(2)), box([-2, -2], [2, 2]))
    assert same_set(affine_map(SQUARE.to_v(), 2 * np.eye(2)), box([-2, -2], [2, 2]))


def test_affine_random_pentagon_matches_vertex_map(rng):
    P = VPolytope(np.array([[np.cos(t), np.sin(t)]
                            for t in 2 * np.pi * np.arange(5) / 5 + 0.3]))
    M = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    t = rng.standard_normal(2)
    image = affine_map(P.to_h(), M, t)
    brute = P.vertices @ M.T + t
    assert np.all(image.contains(brute, tol=1e-9))
    D = unit_directions(rng, 32, 2)
    assert np.allclose(support_many(image, D), np.max(D @ brute.T, axis=1), atol=1e-9)


def test_affine_errors():
    with pytest.raises(NonInvertibleMap):
        affine_map(SQUARE, [[1, 0], [0, 0]])
    with pytest.raises(DimensionMismatch):
        affine_map(SQUARE, np.eye(3))


# --- preimage ---------------------------------------------------------------

def test_preimage_examples():
    assert same_set(preimage_under_linear(SQUARE, np.eye(2)), SQUARE)
    assert same_set(preimage_under_linear(SQUARE, 2 * np.eye(2)), box([-0.5, -0.5], [0.5, 0.5]))
    with pytest.raises(DimensionMismatch):
        preimage_under_linear(SQUARE, np.eye(3))


def test_preimage_membership_oracle(rng):
    P = random_hpolytope(rng, 2, 9)
    M = rng.standard_normal((2, 2)) + np.eye(2)
    S = preimage_under_linear(P, M)
    X = rng.uniform(-4, 4, size=(1000, 2))
    assert np.array_equal(S.contains(X), P.contains(X @ M.T))


# --- Minkowski sum ----------------------------------------------------------

def test_sum_of_boxes_and_translation():
    assert same_set(minkowski_sum(SQUARE, box([-0.2, -0.2], [0.2, 0.2])),
                    box([-1.2, -1.2], [1.2, 1.2]))
    shifted = minkowski_sum(SQUARE, VPolytope([[0.5, -2.0]]))
    assert same_set(shifted, box([-0.5, -3.0], [1.5, -1.0]))


def test_sum_support_additivity(rng):
    P, Q = random_vpolytope(rng, 2, 7), random_vpolytope(rng, 2, 6, center=[2, 1])
    S = minkowski_sum(P, Q)
    D = unit_directions(rng, 64, 2)
    err = support_many(S, D) - support_many(P, D) - support_many(Q, D)
    assert np.max(np.abs(err)) <= 1e-8


def test_sum_with_empty_is_empty():
    assert minkowski_sum(SQUARE, VPolytope.empty(2)).is_empty


def test_outer_sum_contains_exact_sum(rng):
    for _ in range(10):
        P = random_hpolytope(rng, 3, 10)
        Q = random_vpolytope(rng, 3, 6, spread=0.2)
        exact = minkowski_sum(P, Q)
        outer = outer_sum(P, Q)
        assert is_subset(exact, outer)
    # boxes plus boxes: the bound is tight
    assert same_set(outer_sum(SQUARE, box([-0.2, -0.1], [0.2, 0.1])),
                    box([-1.2, -1.1], [1.2, 1.1]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), m=st.integers(1, 3))
def test_segment_sum_matches_vertex_sum(seed, n, m):
    rng = np.random.default_rng(seed)
    P = random_hpolytope(rng, n, 3 * n + 2)
    G = 0.3 * rng.standard_normal((m, n))
    shift = 0.1 * rng.standard_normal(n)
    corners = np.array(np.meshgrid(*[[-1, 1]] * m)).reshape(m, -1).T
    Z = VPolytope(corners @ G + shift)
    exact = minkowski_sum(P, Z)
    fast = sum_with_segments(P, G, shift)
    D = unit_directions(rng, 64, n)
    assert np.allclose(support_many(fast, D), support_many(exact, D), atol=1e-8)
    assert np.allclose(support_many(fast.to_v(), D), support_many(exact, D), atol=1e-8)


def test_segment_sum_examples():
    assert same_set(sum_with_segments(SQUARE, [[0.5, 0.0]]), box([-1.5, -1], [1.5, 1]))
    # a diagonal segment turns the square into a hexagon
    hexagon = sum_with_segments(SQUARE, [[0.5, 0.5]])
    assert hexagon.n_facets == 6 and math.isclose(volume(hexagon), 8.0)
    assert sum_with_segments(HPolytope.empty(2), [[1.0, 0.0]]).is_empty


# --- Pontryagin difference --------------------------------------------------

def test_difference_examples():
    assert same_set(pontryagin_diff(SQUARE, box([-0.2, -0.2], [0.2, 0.2])),
                    box([-0.8, -0.8], [0.8, 0.8]))
    assert same_set(pontryagin_diff(SQUARE, VPolytope([[0.0, 0.0]])), SQUARE)


def test_difference_with_disk_by_definition(rng):
    disk = Ellipsoid([0, 0], np.eye(2), 0.04)
    D = pontryagin_diff(SQUARE, disk)
    assert same_set(D, box([-0.8, -0.8], [0.8, 0.8]))
    ring = 0.2 * np.column_stack([np.cos(t := np.linspace(0, 2 * np.pi, 100, endpoint=False)),
                                  np.sin(t)])
    X = rng.uniform(-1.1, 1.1, size=(2000, 2))
    brute = np.array([np.all(SQUARE.contains(x + ring, tol=1e-12)) for x in X])
    inside = D.contains(X, tol=1e-12)
    # a 100-point ring only approximates the disk, so allow points hugging the boundary
    margin = np.min(D.rhs - X @ D.A.T, axis=1)
    far = np.abs(margin) > 1e-3
    assert np.array_equal(brute[far], inside[far])


def test_difference_errors_and_empties():
    with pytest.raises(UnboundedSubtrahend):
        pontryagin_diff(SQUARE, HPolytope([[1.0, 0.0]], [1.0]))
    with pytest.raises(DimensionMismatch):
        pontryagin_diff(SQUARE, box([-1], [1]))
    assert pontryagin_diff(SQUARE, box([-2, -2], [2, 2])).is_empty
    assert pontryagin_diff(HPolytope.empty(2), box([-0.1, -0.1], [0.1, 0.1])).is_empty


# --- intersection -----------------------------------------------------------

def test_intersection_examples():
    assert same_set(intersect(SQUARE, SQUARE), SQUARE)
    assert same_set(intersect(SQUARE, box([0, 0], [2, 2])), box([0, 0], [1, 1]))
    assert intersect(box([-2, -2], [-1, -1]), box([1, 1], [2, 2])).is_empty
    with pytest.raises(DimensionMismatch):
        intersect(SQUARE, box([0], [1]))


# --- convex hull ------------------------------------------------------------

def test_hull_examples(rng):
    assert same_set(convex_hull([SQUARE]), SQUARE)
    seg = convex_hull([VPolytope([[0, 0]]), VPolytope([[1, 0]])])
    assert sorted(map(tuple, seg.vertices)) == [(0.0, 0.0), (1.0, 0.0)]
    with pytest.raises(EmptyList):
        convex_hull([])


def test_hull_contains_inputs_and_uses_their_vertices(rng):
    P = random_vpolytope(rng, 2, 8)
    Q = random_vpolytope(rng, 2, 8, center=[0.5, 0.3])
    H = convex_hull([P, Q])
    for S in (P, Q):
        X = sample_box(S, 2000, rng, pad=0.0)
        X = X[S.to_h().contains(X)]
        assert np.all(H.to_h().contains(X, tol=1e-9))
    pool = np.vstack([P.vertices, Q.vertices])
    for v in H.vertices:
        assert np.min(np.linalg.norm(pool - v, axis=1)) < 1e-12


# --- conversion -------------------------------------------------------------

def test_square_vertices():
    V = convert(SQUARE)
    assert sorted(map(tuple, V.vertices)) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_simplex_facets():
    H = convert(VPolytope(np.vstack([np.eye(3), np.zeros(3)])))
    assert H.n_facets == 4


def test_random_3d_conversion_oracle(rng):
    P = random_hpolytope(rng, 3, 10).normalize()
    V = convert(P)
    slack = P.rhs[None, :] - V.vertices @ P.A.T
    assert np.all(slack >= -1e-9)
    assert np.all((np.abs(slack) <= 1e-8).sum(axis=1) >= 3)
    X = sample_box(P, 10_000, rng)
    margin = np.min(P.rhs - X @ P.A.T, axis=1)
    far = np.abs(margin) > 1e-9
    assert np.array_equal(P.contains(X[far]), V.to_h().contains(X[far]))


def test_conversion_errors():
    with pytest.raises(UnboundedPolytope):
        convert(HPolytope([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0]))
    with pytest.raises(DimensionCapExceeded):
        convert(HPolytope.box(-np.ones(7), np.ones(7)))
    assert convert(HPolytope.box(-np.ones(7), np.ones(7)), cap=7).vertices.shape == (128, 7)


# --- ellipsoid approximations ----------------------------------------------

def test_disk_axis_directions():
    disk = Ellipsoid([0, 0], np.eye(2), 1.0)
    D = DirectionSet.axes(2)
    assert same_set(outer_polytope(disk, D), SQUARE)
    diamond = VPolytope([[1, 0], [0, 1], [-1, 0], [0, -1]])
    assert same_set(inner_polytope(disk, D), diamond)


def test_octagon_area():
    outer = outer_polytope(Ellipsoid([0, 0], np.eye(2), 1.0), DirectionSet.equiangular(8))
    assert volume(outer) == pytest.approx(8 * math.tan(math.pi / 8), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_inner_ellipsoid_outer(seed, n):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((n, n))
    E = Ellipsoid(rng.standard_normal(n), L @ L.T + 0.1 * np.eye(n), float(rng.uniform(0.1, 3)))
    D = DirectionSet.default_for(n, seed % 1000)
    inner, outer = inner_polytope(E, D), outer_polytope(E, D)
    X = E.center + rng.standard_normal((1000, n)) * np.sqrt(E.radius_sq * np.diag(E.shape).max())
    assert not np.any(inner.to_h().contains(X, tol=-1e-9) & ~E.contains(X))
    assert not np.any(E.contains(X, tol=-1e-9) & ~outer.contains(X))


def test_degenerate_directions():
    with pytest.raises(DegenerateDirections):
        DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    D = DirectionSet.random(4, 40, seed=3)
    assert np.allclose(np.linalg.norm(D.directions, axis=1), 1.0, atol=1e-12)
    assert np.array_equal(D.directions, DirectionSet.random(4, 40, seed=3).directions)


# --- representation odds and ends ------------------------------------------

def test_centered_hpolytope_is_shifted():
    P = HPolytope(SQUARE.A, SQUARE.b, c=[2.0, 0.0])
    assert P.contains([2.9, 0.5]) and not P.contains([0.5, 0.0])


def test_empty_and_point_vpolytope():
    assert VPolytope.empty(2).is_empty
    assert VPolytope([[1.0, 2.0]]).to_h().contains([1.0, 2.0])


def test_json_round_trip(rng):
    for S in (random_hpolytope(rng, 3, 8), random_vpolytope(rng, 2, 6),
              HPolytope(SQUARE.A, SQUARE.b, c=[1.0, -1.0]), Ellipsoid([0, 1], np.eye(2), 2.0)):
        back = from_dict(json.loads(json.dumps(to_dict(S))))
        D = unit_directions(rng, 16, S.dim)
        assert np.array_equal(support_many(S.to_v() if not isinstance(S, Ellipsoid) else S, D),
                              support_many(back.to_v() if not isinstance(S, Ellipsoid) else back, D))


def test_slice_of_cube():
    cube = HPolytope.box([-1, -2, -3], [1, 2, 3])
    cut = slice_polytope(cube, {2: 0.5})
    assert same_set(cut, box([-1, -2], [1, 2]))
    assert slice_polytope(cube, {2: 5.0}).is_empty


# --- properties (a smaller sweep; the acceptance gate runs 200 seeds each) --

@pytest.mark.parametrize("name", sorted(GEOMETRY_PROPERTIES))
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_geometry_property(name, seed):
    assert GEOMETRY_PROPERTIES[name](seed) is None
