"""Metric covers: radius certification, translativity and faithfulness profiles.

Balls are closed throughout. A cover whose total space is infinite (a group
``G`` itself) is represented by a truncation ``B_T(1)``: only centers ``x`` with
``depth(x) + 2R <= T`` are quantified over, which keeps every distance inside
``B_R(x)`` equal to the true distance in ``G``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .groups import FinGenGroup, FiniteGroup, QuotientTower, enumerate_quotient
from .metric import FiniteMetricSpace, GroupAction, _num, cayley_graph


class CoverError(ValueError):
    pass


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


class MetricCoverMap:
    """A surjection ``total -> base`` together with optional deck and truncation data.

    ``centers`` restricts the quantification to the given points. It is only
    sound for homogeneous covers (a group onto its quotient), where left
    translation carries every ball onto a ball around the identity.
    ``radius_scale`` converts a radius into total-space units for the
    truncation margin (Rips skeletons measure radii in edges of length ``d``).
    """

    def __init__(
        self,
        total: FiniteMetricSpace,
        base: FiniteMetricSpace,
        mapping: Sequence[int],
        *,
        deck: GroupAction | None = None,
        depth: Sequence[int] | None = None,
        truncation: int | None = None,
        centers: Sequence[int] | None = None,
        radius_scale=1,
        identity_point: int | None = None,
        base_identity: int | None = None,
        name: str = "",
    ):
        mapping = np.asarray(mapping, dtype=np.int64)
        if mapping.shape != (total.size,):
            raise CoverError("mapping must assign a base point to every total point")
        if np.any(mapping < 0) or np.any(mapping >= base.size):
            raise CoverError("mapping leaves the base space")
        if len(np.unique(mapping)) != base.size:
            missing = sorted(set(range(base.size)) - set(mapping.tolist()))
            raise CoverError(f"map is not surjective; base point {missing[0]} has no preimage")
        if (truncation is None) != (depth is None):
            raise CoverError("truncation and depth go together")
        if deck is not None:
            if deck.size != total.size:
                raise CoverError("deck action acts on the wrong number of points")
            bad = np.argwhere(mapping[deck.perm] != mapping[None, :])
            if len(bad):
                g, x = map(int, bad[0])
                raise CoverError(f"deck element {g} moves point {x} to a different fiber")
        self.total = total
        self.base = base
        self.mapping = mapping
        self.mapping.setflags(write=False)
        self.deck = deck
        self.depth = None if depth is None else np.asarray(depth, dtype=np.int64)
        self.truncation = truncation
        self.centers = None if centers is None else tuple(int(c) for c in centers)
        self.radius_scale = radius_scale
        self.identity_point = identity_point
        self.base_identity = base_identity
        self.name = name

    def __repr__(self) -> str:
        return f"MetricCoverMap({self.name or '?'}: {self.total.size} -> {self.base.size})"

    def eligible_centers(self, radius) -> np.ndarray:
        cand = np.arange(self.total.size) if self.centers is None else np.array(self.centers, dtype=np.int64)
        if self.truncation is not None:
            cand = cand[self.depth[cand] + 2 * radius * self.radius_scale <= self.truncation]
        return cand

    def covers_base(self, radius) -> bool:
        """Whether the eligible centers still see every base point."""
        if self.centers is not None:
            return len(self.eligible_centers(radius)) > 0
        return len(np.unique(self.mapping[self.eligible_centers(radius)])) == self.base.size

    def candidate_radii(self) -> list:
        rows = range(self.total.size) if self.centers is None else self.centers
        vals = set()
        for x in rows:
            for d in np.unique(self.total.row(x)):
                if np.isfinite(float(d)):
                    vals.add(d)
        return sorted(vals)


def verify_cover_radius(cover: MetricCoverMap, radius) -> CheckResult:
    """Is ``p`` restricted to every ``B_R(x)`` a bijective isometry onto ``B_R(p(x))``?

    Witnesses: ``("not-injective", x, u, v)``, ``("distance", x, u, v, d_total,
    d_base)``, ``("not-onto", x, y)`` or ``("truncation", R)`` when the
    truncation is too shallow to certify this radius.
    """
    if radius < 0:
        raise CoverError("radius must be nonnegative")
    if not cover.covers_base(radius):
        return CheckResult(False, ("truncation", radius))
    total, base, p = cover.total, cover.base, cover.mapping
    for x in cover.eligible_centers(radius):
        x = int(x)
        B = total.ball(x, radius)
        imgs = p[B]
        uniq, first, counts = np.unique(imgs, return_index=True, return_counts=True)
        if np.any(counts > 1):
            y = uniq[np.argmax(counts > 1)]
            u, v = (int(B[i]) for i in np.nonzero(imgs == y)[0][:2])
            return CheckResult(False, ("not-injective", x, u, v))
        for i, (u, drow) in enumerate(total.ball_rows(x, radius)):
            crow = base.row(int(imgs[i]))[imgs]
            bad = np.nonzero(drow != crow)[0]
            if len(bad):
                j = int(bad[0])
                return CheckResult(
                    False, ("distance", x, u, int(B[j]), _num(drow[j]), _num(crow[j]))
                )
        target = base.ball(int(p[x]), radius)
        if len(target) != len(imgs):
            missing = sorted(set(target.tolist()) - set(imgs.tolist()))
            return CheckResult(False, ("not-onto", x, int(missing[0])))
    return CheckResult(True)


def max_cover_radius(cover: MetricCoverMap):
    """Largest realized distance at which the cover condition holds (0 if none)."""
    cands = cover.candidate_radii()
    lo, hi = 0, len(cands) - 1
    best = 0
    # the verifier is monotone in R, so bisect over the sorted realized values
    while lo <= hi:
        mid = (lo + hi) // 2
        if verify_cover_radius(cover, cands[mid]):
            best = cands[mid]
            lo = mid + 1
        else:
            hi = mid - 1
    return _num(best)


def check_translative(space: FiniteMetricSpace, action: GroupAction | None, radius) -> CheckResult:
    """Every non-identity element moves every point by at least ``radius``."""
    if action is None:
        return CheckResult(True)
    for g in range(1, action.group.order):
        perm = action.perm[g]
        for x in range(space.size):
            if space.dist(x, int(perm[x])) < radius:
                return CheckResult(False, (g, x))
    return CheckResult(True)


def translation_length(space: FiniteMetricSpace, action: GroupAction | None):
    """``min d(x, gx)`` over non-identity ``g``; ``inf`` for a trivial group."""
    if action is None or action.group.order == 1:
        return float("inf")
    best = float("inf")
    for g in range(1, action.group.order):
        perm = action.perm[g]
        for x in range(space.size):
            d = space.dist(x, int(perm[x]))
            if d < best:
                best = d
    return _num(best)


# -- profiles ----------------------------------------------------------------

@dataclass
class StageReport:
    stage: object
    base_order: int
    total_size: int
    max_radius: object
    kernel_girth: int | None = None
    kernel_bound: int | None = None
    kernel_beyond_truncation: bool = False
    degenerate: bool = False

    def to_json(self) -> dict:
        return {k: _num(v) if not isinstance(v, (bool, type(None), str)) else v for k, v in self.__dict__.items()}


@dataclass
class FaithfulnessProfile:
    stages: list[StageReport] = field(default_factory=list)

    @property
    def radii(self) -> list:
        return [s.max_radius for s in self.stages]

    @property
    def kernel_bounds(self) -> list:
        return [s.kernel_bound for s in self.stages]

    @property
    def nondecreasing_from(self) -> int:
        """First index from which the radii never decrease."""
        r = self.radii
        start = 0
        for i in range(1, len(r)):
            if r[i] < r[i - 1]:
                start = i
        return start

    @property
    def nondecreasing(self) -> bool:
        return self.nondecreasing_from == 0

    def to_json(self) -> dict:
        return {
            "stages": [s.to_json() for s in self.stages],
            "radii": [_num(r) for r in self.radii],
            "nondecreasing": self.nondecreasing,
            "nondecreasing_from": self.nondecreasing_from,
        }


def kernel_girth(cover: MetricCoverMap) -> tuple[int | None, bool]:
    """Length of the shortest non-identity total point over the base identity.

    Returns ``(length, beyond_truncation)``; length is None when no such point
    lies inside the truncation.
    """
    if cover.identity_point is None or cover.base_identity is None:
        raise CoverError("kernel diagnostics need identity points on both sides")
    row = cover.total.row(cover.identity_point)
    ker = np.nonzero(cover.mapping == cover.base_identity)[0]
    ker = ker[ker != cover.identity_point]
    lengths = [row[k] for k in ker if np.isfinite(float(row[k]))]
    if not lengths:
        return None, True
    return int(min(lengths)), False


def asymptotic_faithfulness_profile(covers: Sequence[MetricCoverMap], stages: Sequence | None = None) -> FaithfulnessProfile:
    """Per-stage certified radius plus the kernel-girth bound.

    The kernel bound is the largest ``R`` with ``B_2R(1)`` meeting the kernel only
    in the identity, i.e. ``(L - 1) // 2`` for shortest kernel length ``L``. When
    no kernel element is visible the bound is the truncation-limited lower
    bound ``T // 2`` and ``kernel_beyond_truncation`` is set.
    """
    prof = FaithfulnessProfile()
    for i, cover in enumerate(covers):
        stage = stages[i] if stages is not None else i
        rep = StageReport(
            stage=stage,
            base_order=cover.base.size,
            total_size=cover.total.size,
            max_radius=max_cover_radius(cover),
            degenerate=cover.base.size == 1,
        )
        if cover.identity_point is not None and cover.base_identity is not None:
            L, beyond = kernel_girth(cover)
            rep.kernel_girth = L
            rep.kernel_beyond_truncation = beyond
            if L is not None:
                rep.kernel_bound = (L - 1) // 2
            elif cover.truncation is not None:
                rep.kernel_bound = cover.truncation // 2
        prof.stages.append(rep)
    return prof


# -- standard covers ---------------------------------------------------------

def default_integer_truncation(n: int) -> int:
    # T >= 2R + diam(Z/n) + 1 for every R up to diam(Z/n)
    return 3 * (n // 2) + 1


def integer_cover(n: int, truncation: int | None = None) -> MetricCoverMap:
    """The segment ``[-T, T]`` of Z onto the n-cycle by reduction mod n."""
    if n < 1:
        raise CoverError("n must be positive")
    T = default_integer_truncation(n) if truncation is None else int(truncation)
    total = FiniteMetricSpace.integer_segment(-T, T)
    base = FiniteMetricSpace.cycle(n)
    xs = np.arange(-T, T + 1)
    return MetricCoverMap(
        total,
        base,
        xs % n,
        depth=np.abs(xs),
        truncation=T,
        identity_point=T,
        base_identity=0,
        name=f"Z[-{T},{T}] -> Z/{n}",
    )


def cycle_cover(m: int, n: int) -> MetricCoverMap:
    """``C_m -> C_n`` for ``n | m`` with deck group ``Z/(m/n)`` rotating by ``n``."""
    if m % n:
        raise CoverError("n must divide m")
    k = m // n
    total = FiniteMetricSpace.cycle(m)
    base = FiniteMetricSpace.cycle(n)
    xs = np.arange(m)
    perm = np.array([(xs + n * j) % m for j in range(k)])
    deck = GroupAction(FiniteGroup.cyclic(k), perm)
    return MetricCoverMap(
        total, base, xs % n, deck=deck, identity_point=0, base_identity=0, name=f"C{m} -> C{n}"
    )


@dataclass(frozen=True)
class GroupBall:
    """``B_T(1)`` as an induced subgraph, with BFS-tree parent data."""

    space: FiniteMetricSpace
    elements: tuple
    lengths: np.ndarray
    parent: np.ndarray
    via: np.ndarray


@lru_cache(maxsize=8)
def group_ball(group: FinGenGroup, radius: int) -> GroupBall:
    gens = group.symmetric_generators
    index = {group.identity: 0}
    elements = [group.identity]
    lengths = [0]
    parent = [-1]
    via = [-1]
    neighbors: list[list[int]] = [[]]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        g = elements[i]
        for k, s in enumerate(gens):
            h = g * s
            j = index.get(h)
            if j is None:
                if lengths[i] == radius:
                    continue
                j = len(elements)
                index[h] = j
                elements.append(h)
                lengths.append(lengths[i] + 1)
                parent.append(i)
                via.append(k)
                neighbors.append([])
                queue.append(j)
            neighbors[i].append(j)
            neighbors[j].append(i)
    space = FiniteMetricSpace(len(elements), neighbors=neighbors, names=elements)
    return GroupBall(space, tuple(elements), np.array(lengths), np.array(parent), np.array(via))


def tower_cover(tower: QuotientTower, index: int, truncation: int, cap: int | None = None) -> MetricCoverMap:
    """Truncated ``(G, d_S) -> (G/H_n, d_[S])`` checked at the identity only.

    Both sides are homogeneous and the quotient map commutes with left
    translation, so the identity is the only center that needs checking.
    """
    quotient = enumerate_quotient(tower, index, cap)
    base = cayley_graph(quotient, cap)
    qels = quotient.elements()
    base_index = {e: i for i, e in enumerate(qels)}
    q = tower.quotient_map(tower.stages[index])
    qgens = [q(s) for s in tower.base.symmetric_generators]
    right = np.array([[base_index[e * s] for s in qgens] for e in qels], dtype=np.int64)
    ball = group_ball(tower.base, truncation)
    mapping = np.empty(len(ball.elements), dtype=np.int64)
    mapping[0] = base_index[q(tower.base.identity)]
    # BFS order puts every parent before its children
    for j in range(1, len(ball.elements)):
        mapping[j] = right[mapping[ball.parent[j]], ball.via[j]]
    return MetricCoverMap(
        ball.space,
        base,
        mapping,
        depth=ball.lengths,
        truncation=truncation,
        centers=[0],
        identity_point=0,
        base_identity=0,
        name=f"{tower.base.name} -> stage {tower.stages[index]}",
    )
