"""Explicit functors between controlled categories, checked entrywise.

* group rings: morphisms ``sum_g phi_g g`` of ``A[G]`` versus equivariant
  morphisms of orbit modules ``(G, g -> g.x0, g -> g.A)``;
* orbit decomposition of a free module into orbit summands;
* descent along a cover with deck group: ``[s] -> [s']`` gets the sum of
  ``phi[s, h s']`` over the deck group;
* induction between G-modules with ``C_0(G/H)`` coefficients and H-modules;
* the V-set bijection ``VH/H x G/VH = G/H``;
* rearrangement of a family of modules over nets ``X_k`` at level ``k``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .covers import CheckResult, MetricCoverMap, max_cover_radius, translation_length
from .groups import FiniteGroup
from .metric import FiniteMetricSpace, GroupAction, Net, _num
from .modules import (
    CoefficientObject,
    ControlledMorphism,
    GeometricModule,
    ModuleError,
    NotEquivariant,
    _as_number,
    _reduce,
    compose,
    translate_matrix,
)


class FunctorError(ValueError):
    pass


# -- group rings -----------------------------------------------------------------

class GroupRingMorphism:
    """``sum_g phi_g g`` with ``phi_g: g.X -> Y`` stored as ``terms[g]``."""

    def __init__(
        self,
        group: FiniteGroup,
        source: CoefficientObject,
        target: CoefficientObject,
        terms: dict[int, np.ndarray] | None = None,
        coefficient_action: dict[int, np.ndarray] | None = None,
    ):
        if source.modulus != target.modulus:
            raise FunctorError("source and target use different rings")
        self.group = group
        self.source = source
        self.target = target
        self.coefficient_action = coefficient_action or {}
        self.terms: dict[int, np.ndarray] = {}
        for g, a in (terms or {}).items():
            a = _reduce(np.asarray(a, dtype=np.int64), source.modulus)
            if a.shape != (target.rank, source.rank):
                raise FunctorError(f"term {g} has shape {a.shape}, expected {(target.rank, source.rank)}")
            if not 0 <= int(g) < group.order:
                raise FunctorError(f"term {g} is not a group element")
            if a.any():
                self.terms[int(g)] = a

    def __repr__(self) -> str:
        return f"GroupRingMorphism({self.source.rank} -> {self.target.rank}, {len(self.terms)} terms)"

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupRingMorphism):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.terms.keys() == other.terms.keys()
            and all(np.array_equal(a, other.terms[g]) for g, a in self.terms.items())
        )

    __hash__ = None

    def __add__(self, other: "GroupRingMorphism") -> "GroupRingMorphism":
        out = dict(self.terms)
        for g, a in other.terms.items():
            out[g] = out[g] + a if g in out else a
        return GroupRingMorphism(self.group, self.source, self.target, out, self.coefficient_action)

    def act(self, g: int, a: np.ndarray) -> np.ndarray:
        """``g.a`` for a coefficient matrix ``a``."""
        return _reduce(_perm_matrix(self.coefficient_action, g, a.shape[0]) @ a
                       @ _perm_matrix(self.coefficient_action, g, a.shape[1]).T, self.source.modulus)

    def to_json(self) -> dict:
        return {
            "source_rank": self.source.rank,
            "target_rank": self.target.rank,
            "modulus": self.source.modulus,
            "terms": {str(g): a.tolist() for g, a in sorted(self.terms.items())},
        }


def _perm_matrix(action: dict[int, np.ndarray], g: int, rank: int) -> np.ndarray:
    p = action.get(rank)
    if p is None or g == 0:
        return np.eye(rank, dtype=np.int64)
    P = np.zeros((rank, rank), dtype=np.int64)
    P[p[g], np.arange(rank)] = 1
    return P


def convolve(phi: GroupRingMorphism, psi: GroupRingMorphism) -> GroupRingMorphism:
    """``phi . psi`` (``psi`` first): the term at ``k`` is ``sum_g phi_g (g.psi_{g^-1 k})``."""
    if phi.source != psi.target:
        raise FunctorError("not composable")
    G = phi.group
    out: dict[int, np.ndarray] = {}
    for g, a in phi.terms.items():
        for h, b in psi.terms.items():
            k = int(G.table[g, h])
            prod = a @ phi.act(g, b)
            out[k] = out[k] + prod if k in out else prod
    return GroupRingMorphism(G, psi.source, phi.target, out, phi.coefficient_action)


def orbit_module(
    group: FiniteGroup,
    space: FiniteMetricSpace,
    basepoint: int,
    coefficient: CoefficientObject,
    space_action: GroupAction | None = None,
    coefficient_action: dict[int, np.ndarray] | None = None,
    level: int = 0,
) -> GeometricModule:
    """``(G, g -> (g.x0, level), g -> g.A)``; point ``g`` is the group element ``g``."""
    return GeometricModule.from_orbits(
        space,
        [(basepoint, level, coefficient.rank)],
        group=group,
        space_action=space_action,
        modulus=coefficient.modulus,
        coefficient_action=coefficient_action,
    )


def group_ring_to_T(
    m: GroupRingMorphism,
    space: FiniteMetricSpace,
    basepoint: int,
    space_action: GroupAction | None = None,
) -> ControlledMorphism:
    """Equivariant extension of ``phi[g, 1] := phi_g`` to the orbit modules."""
    G = m.group
    src = orbit_module(G, space, basepoint, m.source, space_action, m.coefficient_action)
    tgt = orbit_module(G, space, basepoint, m.target, space_action, m.coefficient_action)
    entries = {}
    for b in range(G.order):
        for g, a in m.terms.items():
            # entry(b g, b) = b.phi_g
            entries[(int(G.table[b, g]), b)] = m.act(b, a)
    return ControlledMorphism(src, tgt, entries, check=False)


def T_to_group_ring(phi: ControlledMorphism) -> GroupRingMorphism:
    """Read off ``phi_g = phi[g.s0, t0]`` for single-orbit source and target."""
    src, tgt = phi.source, phi.target
    so, to = src.orbits(), tgt.orbits()
    if len(so) != 1 or len(to) != 1:
        raise FunctorError("source and target must each be a single orbit")
    s0, t0 = so[0][0], to[0][0]
    G = src.group
    terms = {g: phi.entry(int(src.action[g, s0]), t0) for g in range(G.order)}
    return GroupRingMorphism(
        G, src.coefficient(s0), tgt.coefficient(t0), terms, src.coefficient_action
    )


def group_ring_basis(group: FiniteGroup, source: CoefficientObject, target: CoefficientObject) -> list[GroupRingMorphism]:
    """Elementary morphisms ``E_ij g``; they span every hom-set additively."""
    out = []
    for g in range(group.order):
        for i in range(target.rank):
            for j in range(source.rank):
                a = np.zeros((target.rank, source.rank), dtype=np.int64)
                a[i, j] = 1
                out.append(GroupRingMorphism(group, source, target, {g: a}))
    return out


def enumerate_group_ring_hom(
    group: FiniteGroup, source: CoefficientObject, target: CoefficientObject
) -> Iterator[GroupRingMorphism]:
    """Every element of the (finite) hom-set over Z/m."""
    m = source.modulus
    if m is None:
        raise FunctorError("only hom-sets over Z/m are finite")
    n = group.order * target.rank * source.rank
    shape = (group.order, target.rank, source.rank)
    for vals in itertools.product(range(m), repeat=n):
        arr = np.array(vals, dtype=np.int64).reshape(shape)
        yield GroupRingMorphism(group, source, target, {g: arr[g] for g in range(group.order)})


def hom_parameter_count(source: GeometricModule, target: GeometricModule) -> int:
    """Free coefficient parameters of equivariant morphisms ``source -> target``.

    Orbits of pairs ``(s, t)`` under the diagonal action, each contributing
    ``rank(t) * rank(s)`` (coefficients act trivially).
    """
    G = source.group
    seen = set()
    total = 0
    for s in range(source.size):
        for t in range(target.size):
            if (s, t) in seen:
                continue
            for g in range(G.order):
                seen.add((int(source.action[g, s]), int(target.action[g, t])))
            total += int(source.ranks[s]) * int(target.ranks[t])
    return total


# -- orbit decomposition ------------------------------------------------------------

@dataclass
class OrbitDecomposition:
    module: GeometricModule
    orbit_form: GeometricModule
    forward: ControlledMorphism
    backward: ControlledMorphism
    blocks: list[np.ndarray]

    def verify(self) -> CheckResult:
        if not compose(self.backward, self.forward) == ControlledMorphism.identity(self.module):
            return CheckResult(False, ("backward-forward",))
        if not compose(self.forward, self.backward) == ControlledMorphism.identity(self.orbit_form):
            return CheckResult(False, ("forward-backward",))
        if not (self.forward.is_equivariant() and self.backward.is_equivariant()):
            return CheckResult(False, ("equivariance",))
        return CheckResult(True)


def orbit_decompose(M: GeometricModule) -> OrbitDecomposition:
    """Isomorphism onto the direct sum of the orbit modules of ``M``."""
    act = GroupAction(M.group, M.action)
    if not act.is_free():
        raise FunctorError("orbit decomposition needs a free action")
    orbits = act.orbits()
    reps = [o[0] for o in orbits]
    form = GeometricModule.from_orbits(
        M.space,
        [(int(M.pi_x[r]), int(M.pi_n[r]), int(M.ranks[r])) for r in reps],
        group=M.group,
        space_action=M.space_action,
        modulus=M.modulus,
        coefficient_action=M.coefficient_action,
        n_max=M.n_max,
    )
    order = M.group.order
    fwd, bwd = {}, {}
    blocks = []
    for k, r in enumerate(reps):
        block = []
        for g in range(order):
            s, j = int(M.action[g, r]), k * order + g
            eye = np.eye(int(M.ranks[s]), dtype=np.int64)
            fwd[(s, j)] = eye
            bwd[(j, s)] = eye
            block.append(j)
        blocks.append(np.array(block))
    return OrbitDecomposition(
        M, form, ControlledMorphism(M, form, fwd, check=False), ControlledMorphism(form, M, bwd, check=False), blocks
    )


# -- descent ------------------------------------------------------------------------

def _check_deck_module(M: GeometricModule, cover: MetricCoverMap) -> None:
    if cover.deck is None:
        raise FunctorError("descent needs a cover with a deck group")
    if M.space is not cover.total:
        raise FunctorError("module does not live over the total space of the cover")
    if not np.array_equal(M.space_action.perm, cover.deck.perm):
        raise FunctorError("module group does not act through the deck action")
    if M.coefficient_action:
        raise FunctorError("descent is implemented for trivial coefficient actions")


@dataclass
class DescendedModule:
    module: GeometricModule
    representatives: list[int]
    orbit_of: np.ndarray


def descend_module(M: GeometricModule, cover: MetricCoverMap) -> DescendedModule:
    """One point per deck orbit, placed at the image of its representative."""
    _check_deck_module(M, cover)
    orbits = M.orbits()
    orbit_of = np.empty(M.size, dtype=np.int64)
    for k, orb in enumerate(orbits):
        orbit_of[orb] = k
    reps = [o[0] for o in orbits]
    down = GeometricModule(
        cover.base,
        [int(cover.mapping[M.pi_x[r]]) for r in reps],
        [int(M.pi_n[r]) for r in reps],
        [int(M.ranks[r]) for r in reps],
        modulus=M.modulus,
        n_max=M.n_max,
    )
    return DescendedModule(down, reps, orbit_of)


def descent(phi: ControlledMorphism, cover: MetricCoverMap, check: bool = True) -> ControlledMorphism:
    """Push an equivariant morphism down: ``[s] -> [s']`` is ``sum_h phi[s, h s']``.

    The sum is over the orbit of ``s'``, so it depends only on ``[s']``;
    independence of the source representative is verified when ``check``.
    """
    if check and not phi.is_equivariant():
        raise NotEquivariant("descent needs an equivariant morphism")
    A = descend_module(phi.source, cover)
    B = descend_module(phi.target, cover)
    sums: dict[tuple[int, int, int], np.ndarray] = {}
    for (s, t), a in phi.entries.items():
        key = (s, int(A.orbit_of[s]), int(B.orbit_of[t]))
        sums[key] = sums[key] + a if key in sums else a
    entries = {}
    for (s, i, j), a in sums.items():
        if s == A.representatives[i]:
            entries[(i, j)] = a
    if check:
        m = phi.modulus
        for (s, i, j), a in sums.items():
            want = entries.get((i, j))
            if want is None:
                if _reduce(a, m).any():
                    raise FunctorError(f"descent depends on the representative of orbit {i}")
            elif not np.array_equal(_reduce(a, m), _reduce(want, m)):
                raise FunctorError(f"descent depends on the representative of orbit {i}")
    return ControlledMorphism(A.module, B.module, entries, check=False)


def lift_module(base_module: GeometricModule, cover: MetricCoverMap) -> GeometricModule:
    """A deck-equivariant module over the total space descending to ``base_module``.

    Each point ``s`` gets the orbit of the first preimage of ``pi_X(s)``.
    """
    if cover.deck is None:
        raise FunctorError("lifting needs a deck group")
    first = {}
    for x, y in enumerate(cover.mapping.tolist()):
        first.setdefault(y, x)
    reps = [(first[int(base_module.pi_x[s])], int(base_module.pi_n[s]), int(base_module.ranks[s]))
            for s in range(base_module.size)]
    return GeometricModule.from_orbits(
        cover.total, reps, group=cover.deck.group, space_action=cover.deck,
        modulus=base_module.modulus, n_max=base_module.n_max,
    )


@dataclass
class DescentFaithfulness:
    status: str  # "pass", "fail" or "skipped"
    propagation: object
    translation: object
    cover_radius: object
    phi_zero: bool
    descent_zero: bool | None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "propagation": _num(self.propagation),
            "translation": _num(self.translation),
            "cover_radius": _num(self.cover_radius),
            "phi_zero": self.phi_zero,
            "descent_zero": self.descent_zero,
        }


def descent_faithfulness_check(
    phi: ControlledMorphism, cover: MetricCoverMap, cover_radius=None, translation=None
) -> DescentFaithfulness:
    """``descent(phi) == 0`` implies ``phi == 0`` once deck translates are far apart.

    If every nontrivial deck element moves points by more than twice the
    propagation, at most one deck translate of ``s'`` can meet a nonzero entry
    in row ``s``, so no cancellation can occur. Below that threshold the check
    is skipped, not failed.
    """
    alpha = _as_number(phi.propagation()[0])
    tau = translation_length(cover.total, cover.deck) if translation is None else translation
    radius = max_cover_radius(cover) if cover_radius is None else cover_radius
    tau_n = _as_number(tau)
    if not tau_n > 2 * alpha:
        return DescentFaithfulness("skipped", alpha, tau, radius, phi.is_zero(), None)
    down = descent(phi, cover)
    ok = down.is_zero() == phi.is_zero()
    return DescentFaithfulness("pass" if ok else "fail", alpha, tau, radius, phi.is_zero(), down.is_zero())


def faithfulness_threshold(covers: Sequence[MetricCoverMap], alpha) -> int | None:
    """First stage from which every deck translation length exceeds ``2 alpha``."""
    taus = [_as_number(translation_length(c.total, c.deck)) for c in covers]
    start = None
    for i, t in enumerate(taus):
        if t > 2 * alpha:
            if start is None:
                start = i
        else:
            start = None
    return start


# -- induction ------------------------------------------------------------------------

@dataclass
class C0Module:
    """A G-module with coefficients in ``C_0(G/H; A)``, flattened.

    ``flat`` has one point per pair ``(s, t)`` with ``t`` in the fiber
    ``S_s``; ``g.(s, t) = (gs, t)``. ``labels[f]`` is the coset ``pi_s(t)`` as an
    index into ``cosets``, and satisfies ``labels[g.f] = g.labels[f]``.
    ``owner[f]`` is ``s``.
    """

    flat: GeometricModule
    owner: np.ndarray
    labels: np.ndarray
    subgroup: frozenset[int]
    cosets: list[frozenset[int]]

    def validate(self) -> None:
        G = self.flat.group
        cmul = coset_action(G, self.cosets)
        if not np.array_equal(self.labels[self.flat.action], cmul[:, self.labels]):
            raise ModuleError("coset labels are not equivariant")


def coset_action(G: FiniteGroup, cosets: list[frozenset[int]]) -> np.ndarray:
    """``out[g, i]`` is the index of ``g . cosets[i]``."""
    where = {}
    for i, c in enumerate(cosets):
        for x in c:
            where[x] = i
    out = np.empty((G.order, len(cosets)), dtype=np.int64)
    for i, c in enumerate(cosets):
        x = min(c)
        for g in range(G.order):
            out[g, i] = where[int(G.table[g, x])]
    return out


def c0_module(
    space: FiniteMetricSpace,
    group: FiniteGroup,
    subgroup: Iterable[int],
    reps: Sequence[tuple[int, int, Sequence[tuple[int, int]]]],
    space_action: GroupAction | None = None,
    modulus: int | None = None,
) -> C0Module:
    """Build from orbit representatives ``(x, n, [(coset, rank), ...])``."""
    H = frozenset(subgroup)
    if not group.is_subgroup(H):
        raise FunctorError("H is not a subgroup")
    cosets = group.left_cosets(H)
    cmul = coset_action(group, cosets)
    if space_action is None:
        space_action = space.action
    order = group.order
    pi_x, pi_n, ranks, labels, owner = [], [], [], [], []
    index = {}
    for k, (x, n, fiber) in enumerate(reps):
        for g in range(order):
            s = k * order + g
            for t, (c, r) in enumerate(fiber):
                index[(s, t)] = len(pi_x)
                pi_x.append(int(space_action.perm[g, x]))
                pi_n.append(n)
                ranks.append(r)
                labels.append(int(cmul[g, c]))
                owner.append(s)
    action = np.empty((order, len(pi_x)), dtype=np.int64)
    for (s, t), f in index.items():
        k, g = divmod(s, order)
        for h in range(order):
            action[h, f] = index[(k * order + int(group.table[h, g]), t)]
    flat = GeometricModule(space, pi_x, pi_n, ranks, group=group, action=action,
                           space_action=space_action, modulus=modulus)
    out = C0Module(flat, np.array(owner, dtype=np.int64), np.array(labels, dtype=np.int64), H, cosets)
    out.validate()
    return out


def c0_morphism_ok(phi: ControlledMorphism, source: C0Module, target: C0Module) -> bool:
    """Entries only between points over the same coset (coefficients are 0-controlled)."""
    return all(source.labels[s] == target.labels[t] for s, t in phi.entries)


def _restrict_to_subgroup(M: GeometricModule, H: frozenset[int], idx: np.ndarray) -> GeometricModule:
    sub = M.group.restrict(H)
    pos = np.full(M.size, -1, dtype=np.int64)
    pos[idx] = np.arange(len(idx))
    action = pos[M.action[sub.parent][:, idx]] if len(idx) else np.zeros((sub.order, 0), dtype=np.int64)
    if np.any(action < 0):
        raise FunctorError("subset is not invariant under H")
    return GeometricModule(
        M.space, M.pi_x[idx], M.pi_n[idx], M.ranks[idx], group=sub, action=action,
        space_action=M.space_action.restrict(sub), modulus=M.modulus, n_max=M.n_max,
    )


@dataclass
class Restricted:
    module: GeometricModule
    indices: np.ndarray  # flat indices of the source C0Module


def restrict_functor(T: C0Module) -> Restricted:
    """The fibers over ``H/H`` with the restricted H-action."""
    home = next(i for i, c in enumerate(T.cosets) if 0 in c)
    idx = np.nonzero(T.labels == home)[0]
    return Restricted(_restrict_to_subgroup(T.flat, T.subgroup, idx), idx)


def restrict_morphism(phi: ControlledMorphism, source: C0Module, target: C0Module) -> ControlledMorphism:
    A, B = restrict_functor(source), restrict_functor(target)
    pa = {int(f): i for i, f in enumerate(A.indices)}
    pb = {int(f): i for i, f in enumerate(B.indices)}
    entries = {(pa[s], pb[t]): a for (s, t), a in phi.entries.items() if s in pa and t in pb}
    return ControlledMorphism(A.module, B.module, entries, check=False)


@dataclass
class Induced:
    module: C0Module
    coset_reps: list[int]
    index: dict[tuple[int, int], int]  # (coset i, s) -> flat point of [g_i, s]


def induce_functor(M: GeometricModule, group: FiniteGroup, subgroup: Iterable[int],
                   space_action: GroupAction) -> Induced:
    """``G x_H S`` with ``[g, s] -> g.pi(s)`` and a one-point fiber over ``gH``.

    ``M`` is an H-module whose group is ``group.restrict(subgroup)``;
    ``space_action`` is the G-action on the space.
    """
    H = frozenset(subgroup)
    if not group.is_subgroup(H):
        raise FunctorError("H is not a subgroup")
    if M.group.order != len(H):
        raise FunctorError("module group does not match H")
    Hs = sorted(H)
    hpos = {h: i for i, h in enumerate(Hs)}
    cosets = group.left_cosets(H)
    reps = [min(c) for c in cosets]
    cmul = coset_action(group, cosets)
    index = {}
    pi_x, pi_n, ranks, labels = [], [], [], []
    for i, g in enumerate(reps):
        for s in range(M.size):
            index[(i, s)] = len(pi_x)
            pi_x.append(int(space_action.perm[g, M.pi_x[s]]))
            pi_n.append(int(M.pi_n[s]))
            ranks.append(int(M.ranks[s]))
            labels.append(i)
    inv = group.inv
    action = np.empty((group.order, len(pi_x)), dtype=np.int64)
    for g in range(group.order):
        for i, gi in enumerate(reps):
            j = int(cmul[g, i])
            h = int(group.table[inv[reps[j]], group.table[g, gi]])  # g g_i = g_j h
            hm = M.action[hpos[h]]
            for s in range(M.size):
                action[g, index[(i, s)]] = index[(j, int(hm[s]))]
    flat = GeometricModule(M.space, pi_x, pi_n, ranks, group=group, action=action,
                           space_action=space_action, modulus=M.modulus, n_max=M.n_max)
    out = C0Module(flat, np.arange(len(pi_x)), np.array(labels, dtype=np.int64), H, cosets)
    out.validate()
    return Induced(out, reps, index)


def induce_morphism(phi: ControlledMorphism, source: Induced, target: Induced) -> ControlledMorphism:
    entries = {}
    ncos = len(source.coset_reps)
    for (s, t), a in phi.entries.items():
        for i in range(ncos):
            entries[(source.index[(i, s)], target.index[(i, t)])] = a
    return ControlledMorphism(source.module.flat, target.module.flat, entries, check=False)


def _iso_pair(A: GeometricModule, B: GeometricModule, pairs: Iterable[tuple[int, int]]):
    fwd, bwd = {}, {}
    for a, b in pairs:
        if A.ranks[a] != B.ranks[b]:
            raise FunctorError("isomorphism pairs points of different rank")
        eye = np.eye(int(A.ranks[a]), dtype=np.int64)
        fwd[(a, b)] = eye
        bwd[(b, a)] = eye
    return ControlledMorphism(A, B, fwd, check=False), ControlledMorphism(B, A, bwd, check=False)


def _is_iso(f: ControlledMorphism, g: ControlledMorphism) -> bool:
    return compose(g, f) == ControlledMorphism.identity(f.source) and compose(f, g) == ControlledMorphism.identity(f.target)


@dataclass
class InductionReport:
    restrict_induce_iso: bool
    induce_restrict_iso: bool
    isos_equivariant: bool
    isos_propagation_zero: bool

    @property
    def ok(self) -> bool:
        return all(self.__dict__.values())


def induction_round_trip(T: C0Module) -> tuple[InductionReport, tuple]:
    """Both round trips, with explicit isomorphisms checked entrywise.

    ``F~(F-(T)) -> T`` sends ``[g_i, f]`` to ``g_i . f``; ``F-(F~(S)) -> S``
    sends the ``[1, s]`` point to ``s``.
    """
    G = T.flat.group
    R = restrict_functor(T)
    ind = induce_functor(R.module, G, T.subgroup, T.flat.space_action)
    pairs = []
    for (i, s), f in ind.index.items():
        pairs.append((f, int(T.flat.action[ind.coset_reps[i], R.indices[s]])))
    f1, b1 = _iso_pair(ind.module.flat, T.flat, pairs)
    back = restrict_functor(ind.module)
    home = next(i for i, c in enumerate(ind.module.cosets) if 0 in c)
    pos = {int(f): j for j, f in enumerate(back.indices)}
    pairs2 = [(pos[ind.index[(home, s)]], s) for s in range(R.module.size)]
    f2, b2 = _iso_pair(back.module, R.module, pairs2)
    rep = InductionReport(
        restrict_induce_iso=_is_iso(f2, b2),
        induce_restrict_iso=_is_iso(f1, b1) and bool(np.all(ind.module.labels[[p for p, _ in pairs]]
                                                            == T.labels[[q for _, q in pairs]])),
        isos_equivariant=all(m.is_equivariant() for m in (f1, b1, f2, b2)),
        isos_propagation_zero=all(m.propagation()[0] == 0 and m.propagation()[1] == 0 for m in (f1, b1, f2, b2)),
    )
    return rep, (f1, b1, f2, b2, R, ind)


def random_c0_module(rng: np.random.Generator, space: FiniteMetricSpace, group: FiniteGroup,
                     subgroup: Iterable[int], orbits: int = 2, max_fiber: int = 2, max_rank: int = 2,
                     levels: Sequence[int] = (0, 1, 2), space_action: GroupAction | None = None,
                     modulus: int | None = None) -> C0Module:
    H = frozenset(subgroup)
    ncos = group.order // len(H)
    reps = []
    for _ in range(orbits):
        fiber = [(int(rng.integers(ncos)), int(rng.integers(1, max_rank + 1)))
                 for _ in range(int(rng.integers(1, max_fiber + 1)))]
        reps.append((int(rng.integers(space.size)), int(rng.choice(levels)), fiber))
    return c0_module(space, group, H, reps, space_action, modulus)


# -- V-sets ------------------------------------------------------------------------------

@dataclass
class VSetBijection:
    """``VH/H x G/VH -> G/H`` and back, for a chosen section ``s``.

    Cosets are index positions in ``vh_mod_h`` (the left H-cosets inside VH),
    ``g_mod_vh`` and ``g_mod_h``; ``section[c]`` is a group element with
    ``section[c]^-1 VH = g_mod_vh[c]``.
    """

    group: FiniteGroup
    H: frozenset[int]
    V: frozenset[int]
    vh_mod_h: list[frozenset[int]]
    g_mod_vh: list[frozenset[int]]
    g_mod_h: list[frozenset[int]]
    section: list[int]
    phi: dict[tuple[int, int], int]
    psi: dict[int, tuple[int, int]]

    def verify(self) -> CheckResult:
        for x, y in self.phi.items():
            if self.psi[y] != x:
                return CheckResult(False, ("psi-phi", x))
        for y, x in self.psi.items():
            if self.phi[x] != y:
                return CheckResult(False, ("phi-psi", y))
        if len(self.phi) != len(self.g_mod_h) or len(self.psi) != len(self.g_mod_h):
            return CheckResult(False, ("cardinality",))
        G = self.group
        vh_of = {x: i for i, c in enumerate(self.vh_mod_h) for x in c}
        h_of = {x: i for i, c in enumerate(self.g_mod_h) for x in c}
        for v in sorted(self.V):
            on_vh = [vh_of[int(G.table[v, min(c)])] for c in self.vh_mod_h]
            on_h = [h_of[int(G.table[v, min(c)])] for c in self.g_mod_h]
            for (a, c), y in self.phi.items():
                if self.phi[(on_vh[a], c)] != on_h[y]:
                    return CheckResult(False, ("phi-equivariance", v, a, c))
            for y, (a, c) in self.psi.items():
                if self.psi[on_h[y]] != (on_vh[a], c):
                    return CheckResult(False, ("psi-equivariance", v, y))
        return CheckResult(True)


def vset_sections(G: FiniteGroup, VH: frozenset[int], g_mod_vh: list[frozenset[int]]) -> list[list[int]]:
    """For each coset ``c`` of VH, the elements ``g`` with ``g^-1 VH = c``."""
    return [sorted(int(G.inv[x]) for x in c) for c in g_mod_vh]


def vset_bijection(G: FiniteGroup, H: Iterable[int], V: Iterable[int], section: Sequence[int] | None = None) -> VSetBijection:
    H, V = frozenset(H), frozenset(V)
    if not G.is_normal(H):
        raise FunctorError("H is not normal")
    if not G.is_subgroup(V):
        raise FunctorError("V is not a subgroup")
    VH = G.product_set(V, H)
    g_mod_h = G.left_cosets(H)
    g_mod_vh = G.left_cosets(VH)
    vh_mod_h = [c for c in g_mod_h if c <= VH]
    choices = vset_sections(G, VH, g_mod_vh)
    if section is None:
        section = [ch[0] for ch in choices]
    section = [int(x) for x in section]
    for c, x in enumerate(section):
        if x not in choices[c]:
            raise FunctorError(f"section value {x} does not lie over coset {c}")
    h_of = {x: i for i, c in enumerate(g_mod_h) for x in c}
    vh_pos = {c: i for i, c in enumerate(vh_mod_h)}
    vh_of = {x: i for i, c in enumerate(g_mod_vh) for x in c}
    T, inv = G.table, G.inv
    phi = {}
    for a, cA in enumerate(vh_mod_h):
        v = min(cA)
        for c in range(len(g_mod_vh)):
            phi[(a, c)] = h_of[int(T[v, section[c]])]
    psi = {}
    for y, cY in enumerate(g_mod_h):
        g = min(cY)
        c = vh_of[int(inv[g])]
        first = int(T[g, inv[section[c]]])
        psi[y] = (vh_pos[g_mod_h[h_of[first]]], c)
    return VSetBijection(G, H, V, vh_mod_h, g_mod_vh, g_mod_h, section, phi, psi)


def random_section(rng: np.random.Generator, G: FiniteGroup, H: Iterable[int], V: Iterable[int]) -> list[int]:
    VH = G.product_set(frozenset(V), frozenset(H))
    return [int(rng.choice(ch)) for ch in vset_sections(G, VH, G.left_cosets(VH))]


# -- nets ------------------------------------------------------------------------------

@dataclass
class Rearrangement:
    """Modules ``M_n`` regathered over ``S = disjoint union of X_k``.

    ``modules[n]`` is the rearranged n-th module (rank 0 where nothing lands),
    ``isos[n]``/``inverses[n]`` the inclusion and projection isomorphisms and
    ``point_level[j]`` the level ``k`` of point ``j`` of ``S``.
    """

    sources: list[GeometricModule]
    modules: list[GeometricModule]
    isos: list[ControlledMorphism]
    inverses: list[ControlledMorphism]
    nets: list[Net]
    point_level: np.ndarray

    def level_propagation(self, n: int) -> dict[int, object]:
        out: dict[int, object] = {}
        X = self.sources[n].space
        src = self.sources[n]
        for s, j in self.isos[n].entries:
            k = int(self.point_level[j])
            d = X.dist(int(src.pi_x[s]), int(self.modules[n].pi_x[j]))
            out[k] = max(out.get(k, 0), d)
        return {k: _num(v) for k, v in sorted(out.items())}

    def verify(self) -> CheckResult:
        for n, (f, g) in enumerate(zip(self.isos, self.inverses)):
            if not _is_iso(f, g):
                return CheckResult(False, ("not-iso", n))
            if not (f.is_equivariant() and g.is_equivariant()):
                return CheckResult(False, ("equivariance", n))
            for k, a in self.level_propagation(n).items():
                if _as_number(a) > self.nets[k].delta:
                    return CheckResult(False, ("propagation", n, k, a))
        return CheckResult(True)


def net_rearrange(modules: Sequence[GeometricModule], nets: Sequence[Net]) -> Rearrangement:
    """Place ``M_n(s)`` at ``[f_k(pi_X s) in X_k]`` for ``k = pi_N(s)``.

    Nets must be maximal, have non-increasing ``delta`` and cover every level
    that occurs. With a nontrivial group the nets must be invariant with
    equivariant projections and the action on each ``X_k`` must be free.
    """
    if not nets:
        raise FunctorError("need at least one net")
    for k, net in enumerate(nets):
        bad = net.check()
        if bad is not None:
            raise FunctorError(f"net at level {k} violates {bad[0]}")
        if k and net.delta > nets[k - 1].delta:
            raise FunctorError("net scales must be non-increasing")
    if modules:
        space = modules[0].space
        group, saction = modules[0].group, modules[0].space_action
        modulus, n_max = modules[0].modulus, modules[0].n_max
    else:
        space, group = nets[0].host, FiniteGroup.trivial()
        saction, modulus, n_max = GroupAction.trivial(nets[0].host.size), None, 64
    for M in modules:
        if M.space is not space or not np.array_equal(M.group.table, group.table):
            raise FunctorError("modules must share space and group")
        if M.coefficient_action:
            raise FunctorError("rearrangement is implemented for trivial coefficient actions")
        if M.size and int(M.pi_n.max()) >= len(nets):
            raise FunctorError(f"level {int(M.pi_n.max())} has no net")
    order = group.order
    # points of S, and the group element taking the orbit representative to each point
    pts, lvl = [], []
    where: dict[tuple[int, int], int] = {}
    rep_of: dict[int, tuple[int, int]] = {}
    for k, net in enumerate(nets):
        if order > 1:
            f = net.projection
            if not np.array_equal(f[saction.perm], saction.perm[:, f]):
                raise FunctorError(f"projection at level {k} is not equivariant")
        for x in net.points:
            where[(k, x)] = len(pts)
            pts.append(x)
            lvl.append(k)
    action = np.empty((order, len(pts)), dtype=np.int64)
    for j, x in enumerate(pts):
        k = lvl[j]
        imgs = [where.get((k, int(saction.perm[g, x]))) for g in range(order)]
        if any(i is None for i in imgs):
            raise FunctorError(f"net at level {k} is not invariant")
        if len(set(imgs)) != order:
            raise FunctorError(f"action on the net at level {k} is not free")
        action[:, j] = imgs
    for j in range(len(pts)):
        if j not in rep_of:
            for g in range(order):
                rep_of[int(action[g, j])] = (j, g)
    point_level = np.array(lvl, dtype=np.int64)

    outs, isos, invs = [], [], []
    for M in modules:
        # summands of each representative point, in source order; translated elsewhere
        blocks: dict[int, list[int]] = {j: [] for j in range(len(pts))}
        for s in range(M.size):
            k = int(M.pi_n[s])
            j = where[(k, int(nets[k].projection[M.pi_x[s]]))]
            r, g = rep_of[j]
            if g == 0:
                blocks[j].append(s)
        for j in range(len(pts)):
            r, g = rep_of[j]
            if g:
                blocks[j] = [int(M.action[g, s]) for s in blocks[r]]
        ranks = [sum(int(M.ranks[s]) for s in blocks[j]) for j in range(len(pts))]
        R = GeometricModule(space, pts, lvl, ranks, group=group, action=action,
                            space_action=saction, modulus=modulus, n_max=n_max)
        fwd, bwd = {}, {}
        for j, members in blocks.items():
            off = 0
            for s in members:
                r = int(M.ranks[s])
                inc = np.zeros((ranks[j], r), dtype=np.int64)
                inc[off:off + r] = np.eye(r, dtype=np.int64)
                fwd[(s, j)] = inc
                bwd[(j, s)] = inc.T.copy()
                off += r
        outs.append(R)
        isos.append(ControlledMorphism(M, R, fwd, check=False))
        invs.append(ControlledMorphism(R, M, bwd, check=False))
    return Rearrangement(list(modules), outs, isos, invs, list(nets), point_level)
