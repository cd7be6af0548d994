import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsebox.groups import FiniteGroup, QuotientTower, cyclic_group, margulis_group, symmetric_group
from coarsebox.metric import (
    FiniteMetricSpace,
    GroupAction,
    InfeasibleNet,
    MetricError,
    box_space,
    cayley_graph,
    max_separated_net,
    read_edge_list,
    write_distance_matrix,
    write_edge_list,
)


def test_cayley_cycle():
    X = cayley_graph(cyclic_group(10))
    assert X.size == 10
    assert X.diameter() == 5


def test_cayley_trivial_group():
    X = cayley_graph(symmetric_group(1))
    assert X.size == 1
    assert X.diameter() == 0


def test_cayley_sl2_f3():
    X = cayley_graph(QuotientTower(margulis_group(), [3]).stage_group(0))
    assert X.size == 24
    assert X.connected()
    assert {len(nb) for nb in X.neighbors} == {4}


def test_cayley_action_is_isometric():
    X = cayley_graph(symmetric_group(3))
    assert X.action.is_action()
    assert X.action.is_free()
    assert X.check_isometric_action() is None


def test_box_space_two_points():
    pt = FiniteMetricSpace.path(1)
    B = box_space([pt, pt])
    assert B.dist(0, 1) == 2


def test_box_space_single_component_is_isometric():
    C = FiniteMetricSpace.cycle(6)
    B = box_space([C])
    assert np.array_equal(B.distance_matrix(), C.distance_matrix())


def test_box_space_cross_distance():
    B = box_space([FiniteMetricSpace.cycle(4), FiniteMetricSpace.cycle(6)])
    assert B.dist(0, 4) == 7
    assert B.dist(0, 4) > 3
    assert B.check_metric() is None
    assert list(B.component_points(1)) == list(range(4, 10))


def test_box_space_rejects_repeated_indices():
    with pytest.raises(MetricError):
        box_space([FiniteMetricSpace.path(1)] * 2, indices=[1, 1])


def test_balls():
    C = FiniteMetricSpace.cycle(10)
    assert list(C.ball(0, 2)) == [0, 1, 2, 8, 9]
    assert list(C.ball(3, 0)) == [3]
    assert len(C.ball(0, 5)) == 10


def test_net_on_path():
    net = max_separated_net(FiniteMetricSpace.path(5), 2)
    assert net.points == (0, 2, 4)
    assert net.check() is None


def test_net_with_large_delta_is_a_point():
    net = max_separated_net(FiniteMetricSpace.cycle(9), 100)
    assert len(net.points) == 1
    assert net.check() is None


def test_equivariant_net_delta_one_is_everything():
    C = FiniteMetricSpace.cycle(10, with_rotation=True)
    net = max_separated_net(C, 1, equivariant=True)
    assert net.points == tuple(range(10))
    assert list(net.projection) == list(range(10))


def test_equivariant_net_infeasible_when_orbits_crowd():
    C = FiniteMetricSpace.cycle(10, with_rotation=True)
    with pytest.raises(InfeasibleNet):
        max_separated_net(C, 2, equivariant=True)


def test_rational_metric():
    X = FiniteMetricSpace.on_line([0, Fraction(1, 3), 2])
    assert X.dist(0, 1) == Fraction(1, 3)
    assert X.check_metric() is None


def test_disconnected_graph_has_infinite_distance():
    X = FiniteMetricSpace.from_edges(3, [(0, 1)])
    assert not X.connected()
    assert X.dist(0, 2) == np.inf


def test_metric_violation_is_reported():
    m = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    assert FiniteMetricSpace.from_matrix(m).check_metric()[0] == "triangle"


def test_non_action_detected():
    bad = GroupAction(FiniteGroup.cyclic(2), np.array([[0, 1, 2], [1, 0, 0]]))
    assert not bad.is_action()


def test_csv_round_trip(tmp_path):
    X = FiniteMetricSpace.cycle(7)
    write_edge_list(X, tmp_path / "e.csv")
    Y = read_edge_list(tmp_path / "e.csv")
    assert np.array_equal(X.distance_matrix(), Y.distance_matrix())
    write_distance_matrix(X, tmp_path / "d.csv")
    rows = (tmp_path / "d.csv").read_text().splitlines()
    assert rows[0].split(",")[:4] == ["0", "1", "2", "3"]


def test_large_graph_uses_bfs_rows():
    # above the dense crossover rows come from BFS on demand
    X = FiniteMetricSpace.cycle(6001)
    assert X.dist(0, 3000) == 3000
    assert X.dist(0, 3001) == 3000


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 12))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), max_size=20)) if pairs else []
    return FiniteMetricSpace.from_edges(n, edges)


@settings(max_examples=50, deadline=None)
@given(graphs())
def test_graph_metrics_are_metrics(X):
    assert X.check_metric() is None


@settings(max_examples=50, deadline=None)
@given(graphs(), st.integers(1, 4))
def test_greedy_nets_satisfy_invariants(X, delta):
    assert max_separated_net(X, delta).check() is None


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.data())
def test_cycle_balls_match_formula(n, data):
    C = FiniteMetricSpace.cycle(n)
    x = data.draw(st.integers(0, n - 1))
    r = data.draw(st.integers(0, n))
    assert len(C.ball(x, r)) == min(n, 2 * r + 1)
