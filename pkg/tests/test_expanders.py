import math

import numpy as np
import pytest

from coarsebox import expanders as ex
from coarsebox.metric import FiniteMetricSpace


def test_gamma3_shape():
    G = ex.margulis_graph(3)
    assert G.size == 24
    assert {len(nb) for nb in G.neighbors} == {4}


def test_gamma5_order():
    assert ex.margulis_graph(5).size == 120


@pytest.mark.parametrize("p", [2, 9, 37])
def test_rejected_primes(p):
    with pytest.raises(ex.ExpanderError):
        ex.margulis_graph(p)


def test_girth_of_cycle():
    assert ex.girth(FiniteMetricSpace.cycle(10)) == 10


def test_girth_of_tree_is_none():
    assert ex.girth(FiniteMetricSpace.path(6)) is None


def test_girth_non_homogeneous_graph():
    # a triangle hanging off a long path; the first vertex is not on the cycle
    X = FiniteMetricSpace.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 3)])
    assert ex.girth(X) == 3


def test_gamma3_girth_is_three():
    assert ex.girth(ex.margulis_graph(3)) == 3
    assert ex.relator_girth(3) == 3


def test_gamma5_girth_matches_relators():
    g = ex.girth(ex.margulis_graph(5))
    assert g <= 5
    assert g == ex.relator_girth(5)


def test_second_eigenvalue_k4():
    lam, err, conv = ex.second_eigenvalue(FiniteMetricSpace.complete(4))
    assert conv
    assert abs(lam + 1) < 1e-8


@pytest.mark.parametrize("n", [10, 17, 500])
def test_second_eigenvalue_cycles(n):
    lam, err, conv = ex.second_eigenvalue(FiniteMetricSpace.cycle(n))
    assert conv
    assert abs(lam - 2 * math.cos(2 * math.pi / n)) < 1e-8


def test_sparse_solver_matches_dense():
    G = ex.margulis_graph(11)
    lam, err, conv = ex.second_eigenvalue(G, seed=1)
    dense = np.linalg.eigvalsh(ex.adjacency(G).toarray())
    assert conv and err < 1e-6
    assert abs(lam - dense[-2]) < 1e-8


def test_report_gamma3():
    r = ex.spectral_report(ex.margulis_graph(3))
    assert r.degree == 4 and r.regular and r.connected
    assert r.to_json()["diameter_over_girth"] == str(r.diameter_over_girth)


def test_disconnected_report_rejected():
    with pytest.raises(ex.ExpanderError):
        ex.spectral_report(FiniteMetricSpace.from_edges(4, [(0, 1), (2, 3)]))


def test_family_summary():
    fam = ex.margulis_family([3, 5, 7])
    assert [r.order for r in fam.reports] == [24, 120, 336]
    assert fam.girth_nondecreasing
    assert fam.max_ratio == max(r.diameter_over_girth for r in fam.reports)
    assert fam.slope > 0


def test_log_slope_through_origin():
    orders = [math.e, math.e**2]
    assert ex.girth_log_slope(orders, [1, 2]) == pytest.approx(1.0)
