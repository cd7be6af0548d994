import itertools

import pytest
from hypothesis import given, settings, strategies as st

from coarsebox.covers import integer_cover, max_cover_radius
from coarsebox.metric import FiniteMetricSpace
from coarsebox.rips import RipsError, SimplexCapExceeded, build_rips, induced_cover_on_skeleton


def brute_force_simplices(X, d, cap):
    """Every subset of at most cap+1 points with diameter <= d."""
    D = X.distance_matrix()
    out = {}
    for k in range(cap + 1):
        out[k] = [s for s in itertools.combinations(range(X.size), k + 1)
                  if all(D[a, b] <= d for a, b in itertools.combinations(s, 2))]
    return out


def test_path_scale_one():
    P = build_rips(FiniteMetricSpace.path(3), 1, cap=2)
    assert P.edges == [(0, 1), (1, 2)]
    assert P.simplices[2] == []


def test_path_scale_two_is_full_simplex():
    P = build_rips(FiniteMetricSpace.path(3), 2, cap=2)
    assert P.simplices[2] == [(0, 1, 2)]


def test_ten_cycle_scale_two():
    P = build_rips(FiniteMetricSpace.cycle(10), 2, cap=3)
    assert P.counts() == {0: 10, 1: 20, 2: 10, 3: 0}
    # each triangle is three consecutive vertices
    assert all(sorted((min(t) + i) % 10 for i in range(3)) == list(t) or set(t) in ({8, 9, 0}, {9, 0, 1}) for t in P.simplices[2])
    assert (0, 1, 2) in P.simplices[2]


def test_full_simplex_at_large_scale():
    X = FiniteMetricSpace.cycle(5)
    P = build_rips(X, X.diameter(), cap=4)
    assert P.counts() == {0: 5, 1: 10, 2: 10, 3: 5, 4: 1}


def test_simplex_cap():
    with pytest.raises(SimplexCapExceeded):
        build_rips(FiniteMetricSpace.complete(30), 1, cap=3, max_simplices=1000)


def test_skeleton_z12():
    res = induced_cover_on_skeleton(integer_cover(12), 1)
    assert res.source_radius == 3
    assert res.predicted_radius == 2
    assert res.result.ok


def test_skeleton_z24_scale_two():
    res = induced_cover_on_skeleton(integer_cover(24), 2)
    assert res.source_radius == 6
    assert res.predicted_radius == 2
    assert res.result.ok
    assert res.to_json()["verified"] is True


def test_precondition():
    with pytest.raises(RipsError):
        induced_cover_on_skeleton(integer_cover(12), 2)


def test_write_simplices(tmp_path):
    build_rips(FiniteMetricSpace.path(3), 1).write_simplices(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "dimension,vertices"
    assert "1,0 1" in lines


@st.composite
def small_spaces(draw):
    n = draw(st.integers(1, 9))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), max_size=14)) if pairs else []
    return FiniteMetricSpace.from_edges(n, edges)


@settings(max_examples=50, deadline=None)
@given(small_spaces(), st.integers(1, 3), st.integers(1, 3))
def test_matches_subset_enumeration(X, d, cap):
    P = build_rips(X, d, cap)
    assert P.simplices == brute_force_simplices(X, d, cap)


@settings(max_examples=50, deadline=None)
@given(small_spaces(), st.integers(1, 3))
def test_downward_closed(X, d):
    P = build_rips(X, d, 3)
    faces = {s for v in P.simplices.values() for s in v}
    for s in faces:
        for r in range(1, len(s)):
            assert all(f in faces for f in itertools.combinations(s, r))


@settings(max_examples=20, deadline=None)
@given(st.integers(6, 40), st.integers(1, 3))
def test_skeleton_transfer_on_integer_covers(n, d):
    cover = integer_cover(n)
    R = max_cover_radius(cover)
    if R < 3 * d:
        return
    res = induced_cover_on_skeleton(cover, d, radius=R)
    assert res.predicted_radius == R // d - 1
    assert res.result.ok
