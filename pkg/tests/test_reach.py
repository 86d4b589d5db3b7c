import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import di_system, random_hpolytope, sample_box, unit_directions, viability_tube
from lagreach.errors import EmptyList, HorizonMismatch, IndexOutOfRange
from lagreach.geometry import (
    DirectionSet,
    Ellipsoid,
    HPolytope,
    VPolytope,
    is_subset,
    support_many,
)
from lagreach.linsys import deterministic_reach_tube
from lagreach.reach import (
    load_tube,
    maximal_reach_tube,
    membership,
    minimal_reach_tube,
    multi_maximal_reach_tube,
    multi_minimal_reach_tube,
    save_tube,
    tube_from_dict,
    tube_to_dict,
    write_cross_section_csv,
    write_vertex_csv,
)
from lagreach.tube import TubeKind
from oracles import multi_box_sets, multi_dominance, one_step_agreement

ZERO = VPolytope([[0.0, 0.0]])


def small_box(h):
    return HPolytope.box([-h, -h], [h, h])


def _support(tube, k, D):
    members = [m for m in tube.members(k) if not m.is_empty]
    if not members:
        return None
    return np.max([support_many(m.to_v(), D) for m in members], axis=0)


def tube_sets_equal(a, b, rng):
    """Same support (of the convex hull of members) in 32 directions at every k."""
    D = unit_directions(rng, 32, 2)
    for k in range(a.horizon + 1):
        ha, hb = _support(a, k, D), _support(b, k, D)
        assert (ha is None) == (hb is None)
        if ha is not None:
            assert np.allclose(ha, hb, atol=1e-9)


@pytest.fixture(scope="module")
def di():
    return di_system(5), viability_tube(5)


def test_base_case_and_tube_bounds(di):
    sys_, T = di
    for t in (minimal_reach_tube(sys_, T, small_box(0.05)),
              maximal_reach_tube(sys_, T, small_box(0.05))):
        assert t.sets[5] is T[5]
        for k in range(6):
            assert is_subset(t.sets[k], T[k])


def test_zero_disturbance_is_deterministic(di, rng):
    sys_, T = di
    det = deterministic_reach_tube(sys_, T)
    tube_sets_equal(minimal_reach_tube(sys_, T, ZERO), det, rng)
    tube_sets_equal(maximal_reach_tube(sys_, T, ZERO), det, rng)
    tube_sets_equal(multi_minimal_reach_tube(sys_, T, [ZERO]), det, rng)
    tube_sets_equal(multi_maximal_reach_tube(sys_, T, [ZERO]), det, rng)


def test_containment_chain(di, rng):
    sys_, T = di
    W, O = small_box(0.04), small_box(0.08)
    lo, mid = minimal_reach_tube(sys_, T, W), deterministic_reach_tube(sys_, T)
    hi = maximal_reach_tube(sys_, T, O)
    for k in range(6):
        assert is_subset(lo.sets[k], mid.sets[k])
        assert is_subset(mid.sets[k], hi.sets[k])


@settings(max_examples=15, deadline=None)
@given(h1=st.floats(0.0, 0.1), h2=st.floats(0.0, 0.1))
def test_anti_monotone_in_disturbance(h1, h2):
    sys_, T = di_system(3), viability_tube(3)
    a, b = sorted((h1, h2))
    small, large = small_box(a).to_v(), small_box(b).to_v()
    m_small, m_large = minimal_reach_tube(sys_, T, small), minimal_reach_tube(sys_, T, large)
    M_small, M_large = maximal_reach_tube(sys_, T, small), maximal_reach_tube(sys_, T, large)
    for k in range(4):
        assert is_subset(m_large.sets[k], m_small.sets[k])
        assert is_subset(M_small.sets[k], M_large.sets[k])


def test_one_step_minimal_matches_grid_oracle():
    frac, cells = one_step_agreement("minimal")
    assert frac >= 0.99 and cells > 5000


def test_one_step_maximal_matches_grid_oracle():
    frac, cells = one_step_agreement("maximal")
    assert frac >= 0.99 and cells > 5000


def test_ellipsoid_disturbances(di):
    sys_, T = di
    E = Ellipsoid([0, 0], 0.005 * np.eye(2), 2.0)
    lo = minimal_reach_tube(sys_, T, E)
    hi = maximal_reach_tube(sys_, T, E, directions=DirectionSet.equiangular(12))
    assert hi.meta["outer_directions"] == 12
    for k in range(6):
        assert is_subset(lo.sets[k], hi.sets[k])


def test_offset_disturbance_warns(di):
    sys_, T = di
    off = HPolytope.box([0.01, 0.01], [0.02, 0.02])
    with pytest.warns(UserWarning):
        minimal_reach_tube(sys_, T, off)


def test_empty_propagates():
    sys_, T = di_system(4), viability_tube(4)
    t = minimal_reach_tube(sys_, T, small_box(1.5))
    assert t.empty_from == 3
    assert all(t.is_empty_at(k) for k in range(4))
    assert not membership(t, 0, [0.0, 0.0])


def test_support_sum_method_is_looser_but_outer(di):
    sys_, T = di
    O = small_box(0.06)
    exact = maximal_reach_tube(sys_, T, O, sum_method="exact")
    loose = maximal_reach_tube(sys_, T, O, sum_method="support")
    assert loose.meta["sum_method"] == "support"
    for k in range(6):
        assert is_subset(exact.sets[k], loose.sets[k])
    with pytest.raises(ValueError):
        maximal_reach_tube(sys_, T, O, sum_method="bogus")


def test_multi_single_set_and_duplicates(di, rng):
    sys_, T = di
    W = small_box(0.05)
    single = minimal_reach_tube(sys_, T, W)
    tube_sets_equal(multi_minimal_reach_tube(sys_, T, [W], "hull"), single, rng)
    tube_sets_equal(multi_minimal_reach_tube(sys_, T, [W, W], "hull"), single, rng)
    O = small_box(0.05)
    tube_sets_equal(multi_maximal_reach_tube(sys_, T, [O, O]), maximal_reach_tube(sys_, T, O), rng)
    with pytest.raises(EmptyList):
        multi_minimal_reach_tube(sys_, T, [])
    with pytest.raises(EmptyList):
        multi_maximal_reach_tube(sys_, T, [])
    with pytest.raises(ValueError):
        multi_minimal_reach_tube(sys_, T, [W], mode="average")


def test_three_boxes_hull_grows_union_members(rng):
    cfg, sets = multi_box_sets()
    sys_, T = cfg.build_system(), cfg.build_tube()
    hull = multi_minimal_reach_tube(sys_, T, sets.W, "hull", cfg.alpha,
                                    preconditions={"log_concave": True})
    union = multi_minimal_reach_tube(sys_, T, sets.W, "union", cfg.alpha)
    assert hull.meta["preconditions"] == {"log_concave": True}
    assert hull.kind == TubeKind.MULTI_MINIMAL_HULL and union.is_union
    centered = hull.meta["singles"][0]
    # some hull vertex lies outside the centred-box set (earliest nonempty step)
    k = min(j for j in range(cfg.horizon + 1) if not centered.is_empty_at(j))
    V = hull.sets[k].to_v().vertices
    assert np.any(~centered.sets[k].contains(V, tol=1e-7))
    X = rng.uniform(-1, 1, size=(3000, 2))
    in_any = np.zeros(len(X), bool)
    for s in union.meta["singles"]:
        in_any |= s.contains(k, X)
    assert np.array_equal(union.contains(k, X), in_any)


def test_multi_dominance():
    rows = multi_dominance()
    assert max(r[1] for r in rows) <= 1e-7
    assert sum(r[2] for r in rows) == 0


def test_membership_agrees_with_facets(di, rng):
    sys_, T = di
    t = minimal_reach_tube(sys_, T, small_box(0.05))
    X = rng.uniform(-1.2, 1.2, size=(1000, 2))
    S = t.sets[2]
    direct = np.all(X @ S.A.T <= S.rhs + 1e-9, axis=1)
    assert np.array_equal(t.contains(2, X), direct)
    x = T[5].to_v().vertices[0] * 0.5
    assert membership(t, 5, x) == T[5].contains(x)
    with pytest.raises(IndexOutOfRange):
        membership(t, 6, x)


def test_horizon_mismatch(di):
    sys_, _ = di
    with pytest.raises(HorizonMismatch):
        minimal_reach_tube(sys_, viability_tube(3), small_box(0.05))


def test_json_and_csv_export(di, tmp_path, rng):
    sys_, T = di
    t = maximal_reach_tube(sys_, T, Ellipsoid([0, 0], 0.005 * np.eye(2), 2.0), alpha=0.8)
    path = tmp_path / "tube.json"
    save_tube(t, path)
    back = load_tube(path)
    assert back.kind == t.kind and back.alpha == 0.8
    tube_sets_equal(t, back, rng)
    # timings are left out of saved files so reruns are byte-identical
    assert "timings_ms" not in json.loads(path.read_text())
    assert len(tube_to_dict(t)["timings_ms"]) == 6
    save_tube(t, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()
    union = multi_minimal_reach_tube(sys_, T, [small_box(0.05), HPolytope.box(
        [-0.02, -0.05], [0.08, 0.05])], "union")
    assert tube_from_dict(json.loads(json.dumps(tube_to_dict(union)))).is_union
    write_vertex_csv(union, tmp_path / "v.csv")
    rows = (tmp_path / "v.csv").read_text().splitlines()
    assert rows[0] == "k,member,x0,x1" and len(rows) > 10
    write_cross_section_csv(t, tmp_path / "cut.csv", {1: 0.0})
    assert (tmp_path / "cut.csv").read_text().splitlines()[0] == "k,member,x0"
