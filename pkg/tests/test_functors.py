import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsebox import functors as fn
from coarsebox import modules as md
from coarsebox.covers import cycle_cover
from coarsebox.groups import FiniteGroup, cyclic_group, permutation, symmetric_group
from coarsebox.metric import FiniteMetricSpace, cayley_graph, max_separated_net
from coarsebox.modules import CoefficientObject, ControlledMorphism, GeometricModule
from coarsebox.suites import sharpness_example

Z = CoefficientObject(1, None)


def z2_setup():
    grp = cyclic_group(2)
    return FiniteGroup.from_group(grp), cayley_graph(grp)


def deck_module(c, levels=None):
    m = c.total.size
    return GeometricModule(c.total, range(m), levels or [0] * m, [1] * m, group=c.deck.group,
                           action=c.deck.perm, space_action=c.deck)


# -- group rings -------------------------------------------------------------------

def test_unit_goes_to_identity():
    G, X = z2_setup()
    t = fn.group_ring_to_T(fn.GroupRingMorphism(G, Z, Z, {0: [[1]]}), X, 0)
    assert t == ControlledMorphism.identity(t.source)


def test_sum_of_both_elements():
    G, X = z2_setup()
    m = fn.GroupRingMorphism(G, Z, Z, {0: [[1]], 1: [[1]]})
    t = fn.group_ring_to_T(m, X, 0)
    assert t.is_equivariant()
    assert len(t.entries) == 4
    rows = {s for s, _ in t.entries}
    assert all(sum(1 for s, _ in t.entries if s == r) == 2 for r in rows)
    assert fn.T_to_group_ring(t) == m


def test_hom_dimension_count():
    G, X = z2_setup()
    A = fn.orbit_module(G, X, 0, Z)
    assert fn.hom_parameter_count(A, A) == 2
    assert len(fn.group_ring_basis(G, Z, Z)) == 2


def test_zero_has_no_terms():
    G, X = z2_setup()
    A = fn.orbit_module(G, X, 0, Z)
    assert fn.T_to_group_ring(ControlledMorphism.zero(A, A)).terms == {}


def test_group_ring_hom_enumeration_size():
    G = FiniteGroup.cyclic(2)
    c = CoefficientObject(1, 5)
    assert sum(1 for _ in fn.enumerate_group_ring_hom(G, c, c)) == 25


def test_convolution_with_permuted_coefficients():
    grp = cyclic_group(2)
    G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
    c = CoefficientObject(2, 7)
    act = {2: np.array([[0, 1], [1, 0]])}
    a = fn.GroupRingMorphism(G, c, c, {0: [[1, 2], [0, 1]], 1: [[3, 0], [1, 1]]}, act)
    b = fn.GroupRingMorphism(G, c, c, {1: [[0, 1], [5, 2]]}, act)
    ta, tb = fn.group_ring_to_T(a, X, 0), fn.group_ring_to_T(b, X, 0)
    assert ta.is_equivariant() and tb.is_equivariant()
    assert fn.T_to_group_ring(md.compose(ta, tb)) == fn.convolve(a, b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["Z3", "S3", "Z4"]))
def test_convolution_compatibility(seed, name):
    from coarsebox.suites import named_group

    rng = np.random.default_rng(seed)
    grp = named_group(name)
    G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
    r = [CoefficientObject(int(k), 5) for k in rng.integers(1, 4, 3)]

    def rand(src, tgt):
        return fn.GroupRingMorphism(G, src, tgt, {g: rng.integers(0, 5, (tgt.rank, src.rank)) for g in range(G.order)})

    a, b = rand(r[1], r[2]), rand(r[0], r[1])
    ta, tb = fn.group_ring_to_T(a, X, 0), fn.group_ring_to_T(b, X, 0)
    assert fn.T_to_group_ring(ta) == a
    assert fn.T_to_group_ring(md.compose(ta, tb)) == fn.convolve(a, b)


# -- orbit decomposition --------------------------------------------------------------

def test_orbit_form_is_fixed():
    G, X = z2_setup()
    M = fn.orbit_module(G, X, 0, Z)
    dec = fn.orbit_decompose(M)
    assert dec.forward == ControlledMorphism.identity(M)
    assert dec.verify()


def test_two_orbits_two_blocks():
    c = cycle_cover(8, 4)
    M = GeometricModule.from_orbits(c.total, [(0, 0, 1), (1, 2, 2)], group=c.deck.group, space_action=c.deck)
    dec = fn.orbit_decompose(M)
    assert len(dec.blocks) == 2
    assert dec.verify()


def test_scrambled_module_splits_into_orbits():
    c = cycle_cover(4, 2)
    # S = 4 points, |G| = 2, stored out of orbit order
    M = GeometricModule(c.total, [0, 1, 2, 3], [0] * 4, [1] * 4, group=c.deck.group,
                        action=np.array([[0, 1, 2, 3], [2, 3, 0, 1]]), space_action=c.deck)
    dec = fn.orbit_decompose(M)
    assert len(dec.blocks) == 2
    assert dec.verify()


# -- descent --------------------------------------------------------------------------

def test_descent_of_identity():
    c = cycle_cover(8, 4)
    M = deck_module(c)
    down = fn.descent(ControlledMorphism.identity(M), c)
    assert down == ControlledMorphism.identity(down.source)


def test_descent_of_adjacency():
    c = cycle_cover(8, 4)
    M = deck_module(c)
    phi = ControlledMorphism(M, M, {(s, (s + 1) % 8): [[1]] for s in range(8)})
    down = fn.descent(phi, c)
    assert down.propagation() == (1, 0)
    assert not down.is_zero()
    assert fn.descent_faithfulness_check(phi, c).status == "pass"


def test_descent_sums_antipodal_terms():
    c = cycle_cover(8, 4)
    M = deck_module(c)
    phi = ControlledMorphism(M, M, {**{(s, s): [[2]] for s in range(8)}, **{(s, (s + 4) % 8): [[3]] for s in range(8)}})
    down = fn.descent(phi, c)
    assert all(int(a[0, 0]) == 5 for a in down.entries.values())


def test_sharpness_example():
    phi, c = sharpness_example()
    assert not phi.is_zero()
    assert phi.propagation() == (3, 0)
    assert fn.descent(phi, c).is_zero()
    assert fn.descent_faithfulness_check(phi, c).status == "skipped"


def test_descent_of_zero():
    c = cycle_cover(8, 4)
    M = deck_module(c)
    res = fn.descent_faithfulness_check(ControlledMorphism.zero(M, M), c)
    assert res.status == "pass" and res.descent_zero


def test_descent_needs_deck_module():
    c = cycle_cover(8, 4)
    M = GeometricModule(FiniteMetricSpace.cycle(8), range(8), [0] * 8, [1] * 8)
    with pytest.raises(fn.FunctorError):
        fn.descend_module(M, c)


def test_lift_then_descend():
    c = cycle_cover(12, 4)
    base = GeometricModule(c.base, [0, 3, 3], [0, 1, 2], [1, 2, 1])
    down = fn.descend_module(fn.lift_module(base, c), c).module
    assert list(down.pi_x) == [0, 3, 3] and list(down.ranks) == [1, 2, 1]


def test_faithfulness_threshold():
    covers = [cycle_cover(4 * k, 4) for k in (2, 3)]
    assert fn.faithfulness_threshold(covers, 1) == 0
    assert fn.faithfulness_threshold(covers, 2) is None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_descent_is_functorial(seed, k):
    rng = np.random.default_rng(seed)
    c = cycle_cover(4 * k, 4)
    kw = dict(group=c.deck.group, space_action=c.deck)
    A, B, C = (md.random_module(rng, c.total, int(rng.integers(1, 3)), **kw) for _ in range(3))
    psi = md.random_morphism(rng, A, B, density=0.5)
    phi = md.random_morphism(rng, B, C, density=0.5)
    assert fn.descent(md.compose(phi, psi), c) == md.compose(fn.descent(phi, c), fn.descent(psi, c))
    assert fn.descent(phi + phi, c) == fn.descent(phi, c) + fn.descent(phi, c)


# -- induction ------------------------------------------------------------------------

def test_induction_with_h_equal_g():
    grp = cyclic_group(4)
    G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
    T = fn.c0_module(X, G, range(4), [(0, 0, [(0, 1)])])
    R = fn.restrict_functor(T)
    assert R.module.size == T.flat.size
    rep, _ = fn.induction_round_trip(T)
    assert rep.ok


def test_induction_z4_over_z2():
    grp = cyclic_group(4)
    G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
    H = G.generated([G.index(grp.generators[0] * grp.generators[0])])
    assert len(H) == 2
    T = fn.c0_module(X, G, H, [(0, 0, [(0, 1), (1, 2)])])
    rep, (f1, b1, f2, b2, R, ind) = fn.induction_round_trip(T)
    assert rep.ok
    assert md.compose(b1, f1) == ControlledMorphism.identity(f1.source)


def test_induction_preserves_propagation_and_composition():
    rng = np.random.default_rng(3)
    grp = symmetric_group(3)
    G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
    for H in G.subgroups():
        sub = G.restrict(H)
        act = X.action.restrict(sub)
        A = md.random_module(rng, X, 2, group=sub, space_action=act)
        B = md.random_module(rng, X, 2, group=sub, space_action=act)
        phi = md.random_morphism(rng, A, B, density=0.6)
        psi = md.random_morphism(rng, B, A, density=0.6)
        IA, IB = (fn.induce_functor(M, G, H, X.action) for M in (A, B))
        Iphi = fn.induce_morphism(phi, IA, IB)
        assert Iphi.is_equivariant()
        assert fn.c0_morphism_ok(Iphi, IA.module, IB.module)
        assert Iphi.propagation() == phi.propagation()
        assert fn.induce_morphism(md.compose(psi, phi), IA, IA) == md.compose(fn.induce_morphism(psi, IB, IA), Iphi)


def test_c0_labels_must_be_a_subgroup():
    G = FiniteGroup.from_group(symmetric_group(3))
    with pytest.raises(fn.FunctorError):
        fn.c0_module(cayley_graph(symmetric_group(3)), G, [1], [(0, 0, [(0, 1)])])


# -- V-sets ---------------------------------------------------------------------------

def s3():
    grp = symmetric_group(3)
    G = FiniteGroup.from_group(grp)
    t = G.index(permutation([1, 0, 2]))
    return G, frozenset({0, t}), frozenset(G.generated([G.index(permutation([1, 2, 0]))]))


def test_vset_trivial_v():
    G, V, A3 = s3()
    b = fn.vset_bijection(G, A3, [0])
    assert b.verify()
    assert len(b.vh_mod_h) == 1
    assert len(b.phi) == 2


def test_vset_s3_a3_transposition():
    G, V, A3 = s3()
    b = fn.vset_bijection(G, A3, V)
    assert G.product_set(V, A3) == frozenset(range(6))
    assert len(b.g_mod_vh) == 1 and len(b.phi) == 2
    assert b.verify()


def test_vset_s3_trivial_h():
    G, V, _ = s3()
    choices = fn.vset_sections(G, V, G.left_cosets(V))
    for section in (None, [ch[-1] for ch in choices]):
        b = fn.vset_bijection(G, [0], V, section)
        assert len(b.phi) == 6
        assert b.verify()


def test_vset_rejects_non_normal_h():
    G, V, _ = s3()
    with pytest.raises(fn.FunctorError):
        fn.vset_bijection(G, V, [0])


def test_vset_rejects_bad_section():
    G, V, A3 = s3()
    b = fn.vset_bijection(G, [0], V)
    bad = list(b.section)
    bad[0] = next(x for x in range(6) if x not in fn.vset_sections(G, V, b.g_mod_vh)[0])
    with pytest.raises(fn.FunctorError):
        fn.vset_bijection(G, [0], V, bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["D4", "A4", "Z6", "Z8"]))
def test_vset_random_sections(seed, name):
    from coarsebox.suites import named_group

    rng = np.random.default_rng(seed)
    G = FiniteGroup.from_group(named_group(name))
    normals, subs = G.normal_subgroups(), G.subgroups()
    H = normals[int(rng.integers(len(normals)))]
    V = subs[int(rng.integers(len(subs)))]
    assert fn.vset_bijection(G, H, V, fn.random_section(rng, G, H, V)).verify()


# -- nets -----------------------------------------------------------------------------

def test_single_level_large_delta():
    X = FiniteMetricSpace.path(5)
    M = GeometricModule(X, range(5), [0] * 5, [1] * 5)
    net = max_separated_net(X, 10)
    r = fn.net_rearrange([M], [net])
    assert set(r.modules[0].pi_x.tolist()) == {net.points[0]}
    assert r.verify()


def test_path_two_levels():
    X = FiniteMetricSpace.path(7)
    M = GeometricModule(X, list(range(7)) * 2, [0] * 7 + [1] * 7, [1] * 14)
    r = fn.net_rearrange([M], [max_separated_net(X, 2), max_separated_net(X, 1)])
    assert r.verify()
    assert r.level_propagation(0) == {0: 1, 1: 0}


def test_empty_module():
    X = FiniteMetricSpace.path(3)
    M = GeometricModule(X, [], [], [])
    r = fn.net_rearrange([M], [max_separated_net(X, 1)])
    assert r.modules[0].ranks.sum() == 0
    assert r.verify()


def test_increasing_scales_rejected():
    X = FiniteMetricSpace.path(3)
    M = GeometricModule(X, [0], [0], [1])
    with pytest.raises(fn.FunctorError):
        fn.net_rearrange([M], [max_separated_net(X, 1), max_separated_net(X, 2)])


def test_equivariant_nets_on_a_cycle():
    X = FiniteMetricSpace.cycle(12)
    c = cycle_cover(12, 4)
    Xa = X.with_action(c.deck)
    kw = dict(group=c.deck.group, space_action=c.deck)
    rng = np.random.default_rng(0)
    M = md.random_module(rng, Xa, 3, levels=[0, 1], **kw)
    nets = [max_separated_net(Xa, d, equivariant=True) for d in (2, 1)]
    r = fn.net_rearrange([M], nets)
    assert r.verify()
