import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsebox.groups import (
    MARGULIS_A,
    MARGULIS_B,
    FiniteGroup,
    GroupElement,
    GroupError,
    KindMismatch,
    OrderCapExceeded,
    QuotientTower,
    alternating_group,
    cyclic_group,
    dihedral_group,
    enumerate_quotient,
    free_group,
    integers,
    inverse,
    margulis_group,
    matrix,
    multiply,
    power,
    reduce_mod,
    symmetric_group,
)


def test_margulis_generator_inverse():
    assert MARGULIS_A * inverse(MARGULIS_A) == matrix([[1, 0], [0, 1]])


def test_identity_is_neutral():
    e = matrix([[1, 0], [0, 1]])
    assert e * MARGULIS_B == MARGULIS_B


def test_product_mod_5():
    ab = reduce_mod(MARGULIS_A * MARGULIS_B, 5)
    assert ab == matrix([[0, 2], [2, 1]], modulus=5)


def test_reduction_examples():
    assert reduce_mod(MARGULIS_A, 3) == matrix([[1, 2], [0, 1]], modulus=3)
    assert power(MARGULIS_A, 3) == matrix([[1, 6], [0, 1]])
    assert reduce_mod(power(MARGULIS_A, 3), 3) == matrix([[1, 0], [0, 1]], modulus=3)
    assert reduce_mod(MARGULIS_B, 2) == matrix([[1, 0], [0, 1]], modulus=2)


def test_non_unimodular_reduction_rejected():
    with pytest.raises(GroupError):
        reduce_mod(matrix([[2, 0], [0, 1]]), 5)


def test_kinds_do_not_mix():
    with pytest.raises(KindMismatch):
        multiply(MARGULIS_A, GroupElement("cyclic", (1,), 3))


def test_sl2_f3_has_order_24():
    tower = QuotientTower(margulis_group(), [3])
    assert enumerate_quotient(tower, 0).order == 24


def test_stage_two_is_degenerate():
    g = QuotientTower(margulis_group(), [2]).stage_group(0)
    assert g.degenerate
    assert g.order == 1


def test_integer_tower_stage_is_cyclic():
    tower = QuotientTower(integers(), [10], quotient=lambda g, n: GroupElement("cyclic", (g.data[0] % n,), n))
    g = tower.stage_group(0)
    assert g.order == 10
    assert g.generators == (GroupElement("cyclic", (1,), 10),)


def test_order_cap():
    with pytest.raises(OrderCapExceeded):
        QuotientTower(margulis_group(), [7]).stage_group(0).elements(cap=100)


def test_order_cap_from_environment(monkeypatch):
    monkeypatch.setenv("COARSEBOX_MAX_ORDER", "50")
    with pytest.raises(OrderCapExceeded):
        symmetric_group(5).elements()


def test_infinite_group_refuses_enumeration():
    with pytest.raises(GroupError):
        free_group(2).elements()


@pytest.mark.parametrize(
    "group, order",
    [(cyclic_group(7), 7), (symmetric_group(3), 6), (symmetric_group(4), 24), (alternating_group(4), 12),
     (dihedral_group(4), 8)],
)
def test_named_group_orders(group, order):
    assert group.order == order


def test_free_words_reduce():
    F = free_group(2)
    a, b = F.generators
    assert a * b * inverse(b) * inverse(a) == F.identity


def test_finite_group_table_axioms():
    G = FiniteGroup.from_group(symmetric_group(3))
    T = G.table
    n = G.order
    for a in range(n):
        assert T[a, G.inv[a]] == 0
        for b in range(n):
            for c in range(n):
                assert T[T[a, b], c] == T[a, T[b, c]]


def test_subgroup_lattice_counts():
    # S3: 1, three of order 2, A3, S3; S4 has 30 subgroups, 4 normal
    S3 = FiniteGroup.from_group(symmetric_group(3))
    assert len(S3.subgroups()) == 6
    assert len(S3.normal_subgroups()) == 3
    S4 = FiniteGroup.from_group(symmetric_group(4))
    assert len(S4.subgroups()) == 30
    assert len(S4.normal_subgroups()) == 4


def test_cosets_partition_with_subgroup_first():
    G = FiniteGroup.from_group(dihedral_group(4))
    for H in G.subgroups():
        cos = G.left_cosets(H)
        assert cos[0] == H
        assert sorted(x for c in cos for x in c) == list(range(G.order))
        assert len(cos) * len(H) == G.order


def test_restrict_keeps_parent_indices():
    G = FiniteGroup.cyclic(6)
    H = G.generated([2])
    sub = G.restrict(H)
    assert sub.order == 3
    assert list(sub.parent) == sorted(H)
    for i in range(3):
        for j in range(3):
            assert sub.parent[sub.table[i, j]] == G.table[sub.parent[i], sub.parent[j]]


def test_element_json_round_trip():
    g = reduce_mod(MARGULIS_A * MARGULIS_B, 7)
    assert GroupElement.from_json(g.to_json()) == g
    F = margulis_group()
    assert type(F).from_json(F.to_json()).generators == F.generators


words = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=8)


@settings(max_examples=60, deadline=None)
@given(words, words, st.sampled_from([3, 5, 7]))
def test_reduction_is_a_homomorphism(u, v, p):
    F = margulis_group()
    g, h = F.evaluate(u), F.evaluate(v)
    assert reduce_mod(g * h, p) == reduce_mod(g, p) * reduce_mod(h, p)


@settings(max_examples=60, deadline=None)
@given(words)
def test_margulis_elements_have_determinant_one(w):
    g = margulis_group().evaluate(w)
    (a, b), (c, d) = g.data
    assert a * d - b * c == 1
    assert g * inverse(g) == margulis_group().identity
