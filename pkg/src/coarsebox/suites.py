"""Verification suites behind the command line.

Each suite returns ``(checks, results)``: a list of check records
``{"name", "claim", "ok", "details"}`` and a JSON-ready results payload.
Randomness comes only from the generator passed in.
"""
from __future__ import annotations

import re
from fractions import Fraction

import numpy as np

from . import covers as cv
from . import expanders as ex
from . import functors as fn
from . import modules as md
from . import rips as rp
from .groups import (
    FiniteGroup,
    QuotientTower,
    alternating_group,
    cyclic_group,
    dihedral_group,
    integers,
    margulis_group,
    symmetric_group,
)
from .metric import FiniteMetricSpace, _num, box_space, cayley_graph, max_separated_net


class SuiteError(ValueError):
    pass


def check(name: str, claim: str, ok: bool, **details) -> dict:
    return {"name": name, "claim": claim, "ok": bool(ok), "details": {k: _plain(v) for k, v in sorted(details.items())}}


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return _num(v)


def named_group(name: str):
    """``Zn``, ``S3``, ``S4``, ``A4``, ``Dn`` as a finitely generated group."""
    m = re.fullmatch(r"([ZSAD])(\d+)", name)
    if not m:
        raise SuiteError(f"unknown group {name!r}")
    kind, n = m.group(1), int(m.group(2))
    if n < 1 or n > 12:
        raise SuiteError(f"group parameter {n} out of range")
    return {"Z": cyclic_group, "S": symmetric_group, "A": alternating_group, "D": dihedral_group}[kind](n)


# -- covers ------------------------------------------------------------------------

def covers_suite(group: str, stages: list[int], truncation: int | None, max_order: int | None) -> tuple[list, dict]:
    if group == "Z":
        cs = [cv.integer_cover(n, truncation) for n in stages]
    elif group == "SL2":
        T = 10 if truncation is None else truncation
        tower = QuotientTower(margulis_group(), stages)
        cs = [cv.tower_cover(tower, i, T, max_order) for i in range(len(stages))]
    else:
        raise SuiteError(f"unknown tower group {group!r}")
    prof = cv.asymptotic_faithfulness_profile(cs, stages)
    kb = [b for b in prof.kernel_bounds if b is not None]
    checks = [
        check("radii-nondecreasing", "certified cover radii never decrease along the tower",
              prof.nondecreasing, radii=prof.radii),
        check("kernel-bounds-nondecreasing", "kernel-girth bounds never decrease along the tower",
              all(a <= b for a, b in zip(kb, kb[1:])), bounds=prof.kernel_bounds),
    ]
    for c, st in zip(cs, prof.stages):
        if c.deck is not None:
            checks.append(check(f"translative-{st.stage}", "an R-cover has an R-translative deck action",
                                cv.check_translative(c.total, c.deck, st.max_radius).ok))
    return checks, {"group": group, "profile": prof.to_json(), "symmetric_generators": True}


# -- rips --------------------------------------------------------------------------

def rips_suite(ns: list[int], ds: list[int], cap: int) -> tuple[list, dict]:
    checks, rows = [], []
    for n in ns:
        cover = cv.integer_cover(n)
        R = cv.max_cover_radius(cover)
        for d in ds:
            if R < 3 * d:
                rows.append({"n": n, "d": d, "source_radius": _num(R), "status": "precondition"})
                continue
            res = rp.induced_cover_on_skeleton(cover, d, cap, radius=R)
            row = {"n": n, "d": d, "status": "verified" if res.result.ok else "failed", **res.to_json()}
            rows.append(row)
            checks.append(check(f"skeleton-n{n}-d{d}",
                                "an R-cover with R >= 3d induces a (floor(R/d)-1)-cover of Rips skeletons",
                                res.result.ok, predicted=res.predicted_radius))
    return checks, {"rows": rows}


# -- expanders -------------------------------------------------------------------------

def primes_between(lo: int, hi: int) -> list[int]:
    return [p for p in range(max(lo, 3), hi + 1) if ex.is_prime(p)]


def expanders_suite(pmax: int, seed: int, max_prime: int) -> tuple[list, dict]:
    primes = primes_between(3, pmax)
    if not primes:
        raise SuiteError("no odd primes in range")
    fam = ex.margulis_family(primes, max_prime=max_prime, seed=seed)
    checks = []
    for p, r in zip(primes, fam.reports):
        checks.append(check(f"connected-{p}", "Gamma_p is connected for odd p", r.connected))
        checks.append(check(f"eigen-converged-{p}", "second eigenvalue converged", r.converged,
                            error_bound=r.error_bound))
        if p <= 7:
            checks.append(check(f"girth-oracle-{p}", "BFS girth equals shortest relator length",
                                r.girth == ex.relator_girth(p), girth=r.girth))
    small = [r.girth for p, r in zip(primes, fam.reports) if p <= 13]
    checks.append(check("girth-nondecreasing", "girth is nondecreasing over primes up to 13",
                        all(a <= b for a, b in zip(small, small[1:])), girths=small))
    summary = fam.to_json()
    summary["reports"] = [r.to_json() for r in fam.reports]
    return checks, summary


def expanders_csv_rows(summary: dict) -> list[list]:
    rows = [["p", "order", "girth", "diameter", "ratio", "lambda2"]]
    for p, r in zip(summary["primes"], summary["reports"]):
        rows.append([p, r["order"], r["girth"], r["diameter"], r["diameter_over_girth"], f"{r['lambda2']:.10f}"])
    return rows


# -- functors ---------------------------------------------------------------------------

def demo_vset(group_name: str, rng, sections: int = 5):
    G = FiniteGroup.from_group(named_group(group_name))
    n_triples, bad = 0, []
    for H in G.normal_subgroups():
        for V in G.subgroups():
            secs = [None] + [fn.random_section(rng, G, H, V) for _ in range(sections)]
            for s in secs:
                res = fn.vset_bijection(G, H, V, s).verify()
                if not res:
                    bad.append([sorted(H), sorted(V), list(res.witness)])
            n_triples += 1
    return [check("vset", "VH/H x G/VH and G/H are isomorphic V-sets via the section formulas",
                  not bad, triples=n_triples, failures=bad[:3])], {"group": group_name, "triples": n_triples}


def demo_group_ring(group_name: str, rng, modulus: int = 5, max_rank: int = 2):
    grp = named_group(group_name)
    G = FiniteGroup.from_group(grp)
    X = cayley_graph(grp)
    bad_rt = bad_conv = n = 0
    for r1 in range(1, max_rank + 1):
        for r2 in range(1, max_rank + 1):
            c1, c2 = md.CoefficientObject(r1, modulus), md.CoefficientObject(r2, modulus)
            for b in fn.group_ring_basis(G, c1, c2):
                n += 1
                t = fn.group_ring_to_T(b, X, 0)
                if fn.T_to_group_ring(t) != b or not t.is_equivariant():
                    bad_rt += 1
            for _ in range(20):
                a = _random_gr(rng, G, c2, c1)
                b = _random_gr(rng, G, c1, c2)
                lhs = fn.T_to_group_ring(md.compose(fn.group_ring_to_T(a, X, 0), fn.group_ring_to_T(b, X, 0)))
                if lhs != fn.convolve(a, b):
                    bad_conv += 1
    return [
        check("group-ring-round-trip", "A[G] to orbit modules and back is the identity", bad_rt == 0, basis=n),
        check("group-ring-convolution", "composition of orbit-module morphisms is group-ring convolution",
              bad_conv == 0),
    ], {"group": group_name, "modulus": modulus}


def _random_gr(rng, G, src, tgt):
    terms = {g: rng.integers(0, src.modulus, size=(tgt.rank, src.rank)) for g in range(G.order)}
    return fn.GroupRingMorphism(G, src, tgt, terms)


def demo_descent(rng, ks=(2, 3, 4), samples: int = 50):
    rows, func_bad = [], 0
    status = {"pass": 0, "fail": 0, "skipped": 0}
    for k in ks:
        c = cv.cycle_cover(4 * k, 4)
        M = md.GeometricModule(c.total, range(4 * k), [0] * (4 * k), [1] * (4 * k),
                               group=c.deck.group, action=c.deck.perm, space_action=c.deck)
        tau = cv.translation_length(c.total, c.deck)
        radius = cv.max_cover_radius(c)
        for _ in range(samples):
            a = md.random_morphism(rng, M, M, density=0.5, max_x=1)
            b = md.random_morphism(rng, M, M, density=0.3)
            if fn.descent(md.compose(a, b), c) != md.compose(fn.descent(a, c), fn.descent(b, c)):
                func_bad += 1
            status[fn.descent_faithfulness_check(a, c, cover_radius=radius, translation=tau).status] += 1
        rows.append({"k": k, "translation": _num(tau), "cover_radius": _num(radius)})
    sharp, cover8 = sharpness_example()
    down = fn.descent(sharp, cover8)
    return [
        check("descent-functorial", "descent preserves composition", func_bad == 0),
        check("descent-faithful", "descent is faithful when deck translates exceed twice the propagation",
              status["fail"] == 0 and status["pass"] > 0, **status),
        check("descent-sharpness", "with propagation beyond the threshold descent can kill a nonzero morphism",
              down.is_zero() and not sharp.is_zero(), propagation=list(sharp.propagation())),
    ], {"covers": rows}


def sharpness_example() -> tuple[md.ControlledMorphism, cv.MetricCoverMap]:
    """On C8 -> C4: +1 at (s, s+1), -1 at (s, s+5); the two cancel downstairs."""
    c = cv.cycle_cover(8, 4)
    M = md.GeometricModule(c.total, range(8), [0] * 8, [1] * 8,
                           group=c.deck.group, action=c.deck.perm, space_action=c.deck)
    ent = {}
    for s in range(8):
        ent[(s, (s + 1) % 8)] = [[1]]
        ent[(s, (s + 5) % 8)] = [[-1]]
    return md.ControlledMorphism(M, M, ent), c


def demo_induction(group_name: str, rng, samples: int = 10):
    grp = named_group(group_name)
    G = FiniteGroup.from_group(grp)
    X = cayley_graph(grp)
    bad_iso = bad_prop = n = 0
    for H in G.subgroups():
        for _ in range(samples):
            T = fn.random_c0_module(rng, X, G, H, space_action=X.action)
            T2 = fn.random_c0_module(rng, X, G, H, space_action=X.action)
            rep, _ = fn.induction_round_trip(T)
            if not rep.ok:
                bad_iso += 1
            phi = md.random_morphism(rng, T.flat, T2.flat, density=0.5)
            phi = md.ControlledMorphism(T.flat, T2.flat, {k: v for k, v in phi.entries.items()
                                                          if T.labels[k[0]] == T2.labels[k[1]]})
            if fn.restrict_morphism(phi, T, T2).propagation() != phi.propagation():
                bad_prop += 1
            n += 1
    return [
        check("induction-round-trip", "restriction and induction are inverse up to explicit isomorphism",
              bad_iso == 0, modules=n),
        check("induction-propagation", "restriction to H preserves propagation exactly", bad_prop == 0),
    ], {"group": group_name, "subgroups": len(G.subgroups())}


def demo_nets(rng, deltas=(3, 2, 1)):
    spaces = {"path8": FiniteMetricSpace.path(8), "cycle10": FiniteMetricSpace.cycle(10),
              "gamma3": ex.margulis_graph(3)}
    bad, rows = [], []
    for name, X in spaces.items():
        nets = [max_separated_net(X, d) for d in deltas]
        for net in nets:
            if net.check() is not None:
                bad.append([name, net.delta, list(net.check())])
        Ms = [md.random_module(rng, X, 6, levels=list(range(len(deltas)))) for _ in range(2)]
        r = fn.net_rearrange(Ms, nets)
        res = r.verify()
        if not res:
            bad.append([name, list(res.witness)])
        rows.append({"space": name, "net_sizes": [len(n.points) for n in nets],
                     "level_propagation": [r.level_propagation(i) for i in range(len(Ms))]})
    return [check("net-rearrangement", "regathering over maximal nets is an isomorphism with level-k control delta_k",
                  not bad, failures=bad[:3])], {"spaces": rows, "deltas": list(deltas)}


def functors_suite(demo: str, group_name: str, rng) -> tuple[list, dict]:
    demos = ["vset", "group-ring", "descent", "induction", "nets"] if demo == "all" else [demo]
    checks, results = [], {}
    for d in demos:
        if d == "vset":
            c, r = demo_vset(group_name, rng)
        elif d == "group-ring":
            c, r = demo_group_ring(group_name, rng)
        elif d == "descent":
            c, r = demo_descent(rng)
        elif d == "induction":
            c, r = demo_induction(group_name, rng)
        elif d == "nets":
            c, r = demo_nets(rng)
        else:
            raise SuiteError(f"unknown demo {d!r}")
        checks += c
        results[d] = r
    return checks, results


# -- modules ---------------------------------------------------------------------------

def modules_suite(rng, samples: int = 200, n_max: int = md.DEFAULT_N_MAX) -> tuple[list, dict]:
    X = FiniteMetricSpace.cycle(12, with_rotation=False)
    c = cv.cycle_cover(12, 4)
    Xg = c.total
    G = c.deck.group

    def rmod(space, group=None, action=None, **kw):
        return md.random_module(rng, space, int(rng.integers(1, 4)), group=group, space_action=action,
                                max_rank=2, levels=list(range(4)), n_max=n_max, **kw)

    sub_bad = shift_bad = 0
    for i in range(samples):
        if i % 2:
            A, B, C = (rmod(Xg, G, c.deck) for _ in range(3))
        else:
            A, B, C = (rmod(X) for _ in range(3))
        psi = md.random_morphism(rng, A, B, density=0.4)
        phi = md.random_morphism(rng, B, C, density=0.4)
        comp = md.compose(phi, psi)
        (px, pn), (qx, qn), (cx, cn) = phi.propagation(), psi.propagation(), comp.propagation()
        if cx > px + qx or cn > pn + qn:
            sub_bad += 1
        n = int(rng.integers(0, 4))
        if md.shift_functor(n, comp) != md.compose(md.shift_functor(n, phi), md.shift_functor(n, psi)):
            shift_bad += 1

    kar_bad = 0
    for i in range(max(1, samples // 10)):
        U = md.random_module(rng, X, 2, levels=[0, 1], control="T")
        U2 = md.random_module(rng, X, 2, levels=[0, 1], control="T")
        A = md.random_module(rng, X, 5, levels=list(range(8)))
        phi = md.random_morphism(rng, U, A, density=0.5)
        psi = md.random_morphism(rng, A, U2, density=0.5)
        if not md.karoubi_factorize(phi, psi, mode="OT").verify():
            kar_bad += 1
        K = [int(x) for x in rng.choice(12, 2, replace=False)]
        Uc = md.GeometricModule(X, K, [0, 0], [1, 1], support="compact", compact=K)
        phi = md.random_morphism(rng, Uc, A, density=0.5)
        psi = md.random_morphism(rng, A, Uc, density=0.5)
        if not md.karoubi_factorize(phi, psi, mode="LF").verify():
            kar_bad += 1

    box = box_space([FiniteMetricSpace.cycle(4), FiniteMetricSpace.cycle(6)])
    M = md.GeometricModule(box, range(10), [0] * 10, [1] * 10)
    d1 = md.ControlledMorphism(M, M, {(0, 1): [[1]], (5, 6): [[2]]})
    d2 = md.ControlledMorphism(M, M, {(5, 6): [[2]]})
    q1 = md.quotient_equal(d1, d2, md.CompactSupport(box.component_points(0).tolist()))
    deep = md.GeometricModule(FiniteMetricSpace.path(2), [0] * 12, list(range(12)), [1] * 12)
    dd = md.ControlledMorphism(deep, deep, {(k, k): [[1]] for k in range(12)})
    q2 = md.quotient_equal(dd, md.ControlledMorphism.zero(deep, deep), md.FiniteLevel(5))

    checks = [
        check("propagation-subadditive", "propagation of a composite is at most the sum", sub_bad == 0, pairs=samples),
        check("shift-functorial", "shift functors preserve composition", shift_bad == 0, pairs=samples),
        check("karoubi-triangles", "both factorization triangles commute entrywise (OT and LF)", kar_bad == 0),
        check("quotient-compact", "a difference over one box component vanishes modulo compact support",
              q1.status == "equal"),
        check("quotient-levels", "a difference reaching every level is nonzero modulo level-5 objects",
              q2.status == "distinct", witness=q2.witness),
    ]
    return checks, {"samples": samples, "quotient": [q1.to_json(), q2.to_json()]}
