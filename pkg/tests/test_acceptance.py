"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary (see conftest.py)."""
import itertools
import time

import numpy as np

from coarsebox import cli
from coarsebox import covers as cv
from coarsebox import expanders as ex
from coarsebox import functors as fn
from coarsebox import modules as md
from coarsebox.groups import (
    FiniteGroup,
    QuotientTower,
    alternating_group,
    cyclic_group,
    dihedral_group,
    margulis_group,
    symmetric_group,
)
from coarsebox.metric import FiniteMetricSpace, cayley_graph, max_separated_net
from coarsebox.modules import CoefficientObject, ControlledMorphism, GeometricModule
from coarsebox.rips import induced_cover_on_skeleton
from coarsebox.suites import sharpness_example


# -- 1 ----------------------------------------------------------------------------

def brute_force_integer_radius(n: int) -> int:
    """Largest R such that reduction mod n is an isometric bijection of every
    closed R-ball of Z onto the closed R-ball of the n-cycle.

    Straight from the definition: all centers in two periods, all point pairs.
    """
    def cyc(a, b):
        d = abs(a - b) % n
        return min(d, n - d)

    best = 0
    for R in range(0, n + 1):
        ok = True
        for c in range(-n, n):
            ball = list(range(c - R, c + R + 1))
            imgs = [x % n for x in ball]
            target = {y for y in range(n) if cyc(y, c % n) <= R}
            if len(set(imgs)) != len(imgs) or set(imgs) != target:
                ok = False
                break
            if any(abs(a - b) != cyc(a, b) for a, b in itertools.combinations(ball, 2)):
                ok = False
                break
        if not ok:
            break
        best = R
    return best


def test_criterion_01_cover_radius_oracle(criterion):
    criterion(1)
    ns = range(4, 41)
    oracle = {n: brute_force_integer_radius(n) for n in ns}
    start = time.perf_counter()
    found = {n: cv.max_cover_radius(cv.integer_cover(n)) for n in ns}
    elapsed = time.perf_counter() - start
    assert found == oracle
    assert elapsed < 5, elapsed
    criterion(1, f"37 stages, {elapsed:.2f} s")


# -- 2 ----------------------------------------------------------------------------

def test_criterion_02_sl2_tower(criterion):
    criterion(2)
    start = time.perf_counter()
    primes = [3, 5, 7, 11]
    tower = QuotientTower(margulis_group(), primes)
    prof = cv.asymptotic_faithfulness_profile([cv.tower_cover(tower, i, 10) for i in range(4)], primes)
    elapsed = time.perf_counter() - start
    radii, bounds = prof.radii, prof.kernel_bounds
    assert all(a <= b for a, b in zip(radii, radii[1:])), radii
    assert None not in bounds and all(a <= b for a, b in zip(bounds, bounds[1:])), bounds
    assert radii[-1] > radii[0]
    assert elapsed < 60, elapsed
    criterion(2, f"radii {radii}, kernel bounds {bounds}, {elapsed:.1f} s")


# -- 3 ----------------------------------------------------------------------------

def test_criterion_03_rips_skeletons(criterion):
    criterion(3)
    checked = 0
    for n in (12, 24):
        cover = cv.integer_cover(n)
        R = cv.max_cover_radius(cover)
        for d in (1, 2):
            if R < 3 * d:
                continue
            res = induced_cover_on_skeleton(cover, d, radius=R)
            assert res.predicted_radius == R // d - 1
            assert res.result.ok, (n, d, res.result.witness)
            assert cv.verify_cover_radius(res.cover, R // d - 1)
            checked += 1
    assert checked == 3
    criterion(3, f"{checked} certified covers")


# -- 4 ----------------------------------------------------------------------------

def test_criterion_04_translative(criterion):
    criterion(4)
    checked = 0
    for n in range(3, 13):
        for k in range(2, 7):
            c = cv.cycle_cover(k * n, n)
            assert c.deck.is_free() and c.deck.is_action()
            R = cv.max_cover_radius(c)
            assert cv.verify_cover_radius(c, R)
            res = cv.check_translative(c.total, c.deck, R)
            assert res, (k * n, n, R, res.witness)
            checked += 1
    criterion(4, f"{checked} cycle covers")


# -- 5 ----------------------------------------------------------------------------

def _random_triple(rng, i):
    if i % 2:
        c = cv.cycle_cover(12, 4)
        X, kw = c.total, dict(group=c.deck.group, space_action=c.deck)
    else:
        X, kw = FiniteMetricSpace.cycle(10), {}
    return [md.random_module(rng, X, int(rng.integers(1, 4)), levels=list(range(5)), **kw) for _ in range(3)]


def test_criterion_05_engine(criterion):
    criterion(5)
    rng = np.random.default_rng(2024)
    for i in range(1000):
        A, B, C = _random_triple(rng, i)
        psi = md.random_morphism(rng, A, B, density=0.4)
        phi = md.random_morphism(rng, B, C, density=0.4)
        (px, pn), (qx, qn), (cx, cn) = phi.propagation(), psi.propagation(), md.compose(phi, psi).propagation()
        assert cx <= px + qx and cn <= pn + qn, i

    X = FiniteMetricSpace.cycle(12)
    for i in range(100):
        U = md.random_module(rng, X, 2, levels=[0, 1, 2], control="T")
        U2 = md.random_module(rng, X, 2, levels=[0, 1, 2], control="T")
        A = md.random_module(rng, X, 6, levels=list(range(10)))
        fac = md.karoubi_factorize(md.random_morphism(rng, U, A, density=0.5),
                                   md.random_morphism(rng, A, U2, density=0.5), mode="OT")
        assert fac.verify(), ("OT", i, fac.verify().witness)

        K = sorted(int(k) for k in rng.choice(12, 2, replace=False))
        Uc = GeometricModule(X, K, [0, 0], [1, 2], support="compact", compact=K)
        Uc2 = GeometricModule(X, K[::-1], [1, 0], [2, 1], support="compact", compact=K)
        fac = md.karoubi_factorize(md.random_morphism(rng, Uc, A, density=0.5, max_x=3),
                                   md.random_morphism(rng, A, Uc2, density=0.5, max_x=3), mode="LF")
        assert fac.verify(), ("LF", i, fac.verify().witness)

    for i in range(100):
        A, B, C = _random_triple(rng, i)
        psi = md.random_morphism(rng, A, B, density=0.4)
        phi = md.random_morphism(rng, B, C, density=0.4)
        n = int(rng.integers(0, 10))
        F = lambda m: md.shift_functor(n, m)  # noqa: E731
        assert F(md.compose(phi, psi)) == md.compose(F(phi), F(psi)), i
    criterion(5, "1000 pairs, 100+100 factorizations, 100 shifts")


# -- 6 ----------------------------------------------------------------------------

def test_criterion_06_group_ring(criterion):
    criterion(6)
    pairs = enumerated = 0
    for grp in (cyclic_group(2), cyclic_group(3), cyclic_group(4), symmetric_group(3)):
        G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
        coeff = {r: CoefficientObject(r, 5) for r in (1, 2, 3)}
        basis = {}
        for r1, r2 in itertools.product(coeff, coeff):
            basis[r1, r2] = []
            for b in fn.group_ring_basis(G, coeff[r1], coeff[r2]):
                t = fn.group_ring_to_T(b, X, 0)
                assert t.is_equivariant()
                assert fn.T_to_group_ring(t) == b
                basis[r1, r2].append((b, t))
        # the functor and both products are (bi)linear, so basis pairs decide everything
        for r1, r2, r3 in itertools.product(coeff, coeff, coeff):
            for a, ta in basis[r2, r3]:
                for b, tb in basis[r1, r2]:
                    assert fn.T_to_group_ring(md.compose(ta, tb)) == fn.convolve(a, b)
                    pairs += 1
        # small hom-sets are enumerated outright
        c1 = coeff[1]
        if G.order <= 4:
            homs = list(fn.enumerate_group_ring_hom(G, c1, c1))
            assert len(homs) == 5 ** G.order
            ts = [fn.group_ring_to_T(m, X, 0) for m in homs]
            assert all(fn.T_to_group_ring(t) == m for t, m in zip(ts, homs))
            if G.order <= 2:
                for (a, ta), (b, tb) in itertools.product(zip(homs, ts), repeat=2):
                    assert fn.T_to_group_ring(md.compose(ta, tb)) == fn.convolve(a, b)
                    pairs += 1
            enumerated += len(homs)
    criterion(6, f"{pairs} composable pairs, {enumerated} hom-set elements enumerated")


# -- 7 ----------------------------------------------------------------------------

def test_criterion_07_descent(criterion):
    criterion(7)
    rng = np.random.default_rng(77)
    status = {"pass": 0, "fail": 0, "skipped": 0}
    sampled = 0
    for k in range(2, 7):
        c = cv.cycle_cover(4 * k, 4)
        kw = dict(group=c.deck.group, space_action=c.deck)
        tau = cv.translation_length(c.total, c.deck)
        radius = cv.max_cover_radius(c)
        for _ in range(40):
            A, B, C = (md.random_module(rng, c.total, int(rng.integers(1, 3)), **kw) for _ in range(3))
            psi = md.random_morphism(rng, A, B, density=0.5, max_x=int(rng.integers(0, 4)))
            phi = md.random_morphism(rng, B, C, density=0.5, max_x=int(rng.integers(0, 4)))
            assert fn.descent(md.compose(phi, psi), c) == md.compose(fn.descent(phi, c), fn.descent(psi, c))
            for m in (phi, psi):
                status[fn.descent_faithfulness_check(m, c, cover_radius=radius, translation=tau).status] += 1
            sampled += 1
    assert sampled == 200
    assert status["fail"] == 0
    assert status["pass"] > 0
    sharp, c8 = sharpness_example()
    assert not sharp.is_zero() and fn.descent(sharp, c8).is_zero()
    assert fn.descent_faithfulness_check(sharp, c8).status == "skipped"
    criterion(7, f"{sampled} pairs; faithfulness {status}")


# -- 8 ----------------------------------------------------------------------------

def test_criterion_08_vsets(criterion):
    criterion(8)
    rng = np.random.default_rng(8)
    groups = [cyclic_group(n) for n in range(1, 25)]
    groups += [symmetric_group(3), dihedral_group(4), alternating_group(4), symmetric_group(4)]
    triples = checks = 0
    for grp in groups:
        G = FiniteGroup.from_group(grp)
        subs = G.subgroups()
        for H in G.normal_subgroups():
            for V in subs:
                sections = [None] + [fn.random_section(rng, G, H, V) for _ in range(5)]
                for s in sections:
                    res = fn.vset_bijection(G, H, V, s).verify()
                    assert res, (grp.name, sorted(H), sorted(V), res.witness)
                    checks += 1
                triples += 1
    criterion(8, f"{triples} triples, {checks} bijections")


# -- 9 ----------------------------------------------------------------------------

def test_criterion_09_induction(criterion):
    criterion(9)
    rng = np.random.default_rng(9)
    count = 0
    for grp in (cyclic_group(4), symmetric_group(3)):
        G, X = FiniteGroup.from_group(grp), cayley_graph(grp)
        for H in G.subgroups():
            for _ in range(50):
                T = fn.random_c0_module(rng, X, G, H, space_action=X.action)
                T2 = fn.random_c0_module(rng, X, G, H, space_action=X.action)
                rep, _ = fn.induction_round_trip(T)
                assert rep.ok, rep
                raw = md.random_morphism(rng, T.flat, T2.flat, density=0.5)
                phi = ControlledMorphism(T.flat, T2.flat, {k: v for k, v in raw.entries.items()
                                                           if T.labels[k[0]] == T2.labels[k[1]]})
                assert fn.c0_morphism_ok(phi, T, T2)
                restricted = fn.restrict_morphism(phi, T, T2)
                assert restricted.propagation() == phi.propagation()
                A, B = fn.restrict_functor(T).module, fn.restrict_functor(T2).module
                IA, IB = fn.induce_functor(A, G, H, X.action), fn.induce_functor(B, G, H, X.action)
                assert fn.induce_morphism(restricted, IA, IB).propagation() == restricted.propagation()
                count += 1
    criterion(9, f"{count} modules")


# -- 10 ---------------------------------------------------------------------------

def _net_oracle(X, net):
    D = X.distance_matrix()
    pts = list(net.points)
    assert all(D[a, b] >= net.delta for a, b in itertools.combinations(pts, 2))
    assert all(min(D[x, p] for p in pts) < net.delta for x in range(X.size))
    assert all(D[x, net.projection[x]] <= net.delta and net.projection[x] in pts for x in range(X.size))


def test_criterion_10_nets(criterion):
    criterion(10)
    rng = np.random.default_rng(10)
    spaces = [FiniteMetricSpace.path(n) for n in range(1, 11)]
    spaces += [FiniteMetricSpace.cycle(n) for n in range(3, 13)]
    spaces.append(ex.margulis_graph(3))
    runs = 0
    for X in spaces:
        nets = {d: max_separated_net(X, d) for d in (1, 2, 3)}
        for net in nets.values():
            assert net.check() is None
            _net_oracle(X, net)
        for deltas in ([3, 2, 1], [3], [2], [1], [2, 2]):
            chosen = [nets[d] for d in deltas]
            Ms = [md.random_module(rng, X, int(rng.integers(0, 6)), levels=list(range(len(deltas))))
                  for _ in range(2)]
            r = fn.net_rearrange(Ms, chosen)
            assert r.verify()
            for i in range(len(Ms)):
                for k, a in r.level_propagation(i).items():
                    assert a <= deltas[k]
            runs += 1
    criterion(10, f"{len(spaces)} spaces, {runs} rearrangements")


# -- 11 ---------------------------------------------------------------------------

def test_criterion_11_expanders(criterion):
    criterion(11)
    start = time.perf_counter()
    assert ex.girth(ex.margulis_graph(3)) == ex.relator_girth(3)
    fam = ex.margulis_family([3, 5, 7, 11, 13])
    girths = [r.girth for r in fam.reports]
    assert all(a <= b for a, b in zip(girths, girths[1:])), girths
    assert fam.girth_nondecreasing
    assert all(r.diameter_over_girth <= fam.max_ratio for r in fam.reports)
    assert all(r.converged for r in fam.reports)
    lam, _, _ = ex.second_eigenvalue(FiniteMetricSpace.complete(4))
    assert abs(lam - (-1.0)) < 1e-8
    for n in (10, 25, 600):
        lam, _, _ = ex.second_eigenvalue(FiniteMetricSpace.cycle(n))
        assert abs(lam - 2 * np.cos(2 * np.pi / n)) < 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed < 120, elapsed
    criterion(11, f"girths {girths}, max diameter/girth {fam.max_ratio}, {elapsed:.1f} s")


# -- 12 ---------------------------------------------------------------------------

def test_criterion_12_determinism(criterion, tmp_path):
    criterion(12)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["all", "--seed", "11", "--out", str(a)]) == 0
    assert cli.main(["all", "--seed", "11", "--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    assert len([f for f in files if f.endswith(".json")]) == 5
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    criterion(12, f"{len(files)} files byte-identical")
