"""Rips complexes and the transfer of cover radii to their 1-skeletons."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .covers import CheckResult, MetricCoverMap, max_cover_radius, verify_cover_radius
from .metric import FiniteMetricSpace

DEFAULT_DIMENSION_CAP = 3
DEFAULT_SIMPLEX_CAP = 10_000_000


class RipsError(ValueError):
    pass


class SimplexCapExceeded(RipsError):
    pass


@dataclass
class RipsComplex:
    """``P_d(X)`` truncated at dimension ``cap``.

    ``simplices[k]`` lists the k-simplices as sorted vertex tuples, in
    lexicographic order. The skeleton metric gives every edge length one.
    """

    host: FiniteMetricSpace
    scale: object
    cap: int
    simplices: dict[int, list[tuple[int, ...]]]
    skeleton: FiniteMetricSpace

    def counts(self) -> dict[int, int]:
        return {k: len(v) for k, v in self.simplices.items()}

    @property
    def edges(self) -> list[tuple[int, int]]:
        return self.simplices.get(1, [])

    def is_simplex(self, vertices) -> bool:
        vs = tuple(sorted(set(int(v) for v in vertices)))
        if len(vs) - 1 > self.cap:
            raise RipsError("dimension above the cap")
        if not vs:
            return False
        sub = self.host.submatrix(vs)
        return bool(np.all(sub <= self.scale))

    def write_simplices(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dimension", "vertices"])
            for k in sorted(self.simplices):
                for s in self.simplices[k]:
                    w.writerow([k, " ".join(map(str, s))])


def build_rips(
    space: FiniteMetricSpace, d, cap: int = DEFAULT_DIMENSION_CAP, max_simplices: int = DEFAULT_SIMPLEX_CAP
) -> RipsComplex:
    """All subsets of at most ``cap + 1`` points whose diameter is at most ``d``.

    A subset has diameter ``<= d`` iff it is a clique of the threshold graph,
    so simplices are enumerated as ordered cliques.
    """
    if cap < 1:
        raise RipsError("dimension cap must be at least 1")
    if d < 0:
        raise RipsError("scale must be nonnegative")
    n = space.size
    higher = []
    for u in range(n):
        row = space.row(u)
        higher.append(frozenset(int(v) for v in np.nonzero(row <= d)[0] if v > u))
    simplices: dict[int, list[tuple[int, ...]]] = {0: [(u,) for u in range(n)]}
    total = n
    frontier = [((u,), higher[u]) for u in range(n)]
    for k in range(1, cap + 1):
        nxt = []
        for face, common in frontier:
            for v in sorted(common):
                nxt.append((face + (v,), common & higher[v]))
        total += len(nxt)
        if total > max_simplices:
            raise SimplexCapExceeded(f"more than {max_simplices} simplices up to dimension {k}")
        simplices[k] = [s for s, _ in nxt]
        frontier = nxt
    skeleton = FiniteMetricSpace.from_edges(n, simplices[1], names=space.names)
    return RipsComplex(space, d, cap, simplices, skeleton)


@dataclass
class SkeletonCover:
    cover: MetricCoverMap
    source_radius: object
    scale: object
    predicted_radius: int
    lifted_simplices: int
    result: CheckResult

    def to_json(self) -> dict:
        return {
            "source_radius": _plain(self.source_radius),
            "scale": _plain(self.scale),
            "predicted_radius": self.predicted_radius,
            "lifted_simplices": self.lifted_simplices,
            "verified": self.result.ok,
            "witness": None if self.result.witness is None else [_plain(w) for w in self.result.witness],
        }


def _plain(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return int(x) if float(x).is_integer() else float(x)
    return x


def induced_cover_on_skeleton(
    cover: MetricCoverMap, d, cap: int = DEFAULT_DIMENSION_CAP, radius=None
) -> SkeletonCover:
    """Push ``cover`` to the Rips 1-skeletons at scale ``d`` and verify it there.

    ``radius`` is the certified radius of ``cover`` (computed when omitted) and
    must be at least ``3d``. Every base simplex is lifted through an eligible
    center; a failed lift raises. The skeleton map is then checked at
    ``floor(R/d) - 1``.
    """
    if not (cover.total.is_graph and cover.base.is_graph):
        raise RipsError("the skeleton transfer is only implemented for graph metrics")
    if d <= 0:
        raise RipsError("scale must be positive")
    R = max_cover_radius(cover) if radius is None else radius
    if R < 3 * d:
        raise RipsError(f"need a certified radius of at least 3d = {3 * d}, have {R}")
    if radius is not None and not verify_cover_radius(cover, R):
        raise RipsError(f"cover does not hold at the stated radius {R}")
    upper = build_rips(cover.total, d, cap)
    lower = build_rips(cover.base, d, cap)
    p = cover.mapping

    centers = cover.eligible_centers(R)
    over: dict[int, int] = {}
    for x in centers.tolist():
        over.setdefault(int(p[x]), x)
    lifted = 0
    for k, faces in lower.simplices.items():
        for sigma in faces:
            x = over.get(sigma[0])
            if x is None:
                raise RipsError(f"no certified center over base vertex {sigma[0]}")
            B = cover.total.ball(x, d)
            inv = {int(p[b]): int(b) for b in B}
            try:
                lift = tuple(sorted(inv[v] for v in sigma))
            except KeyError as err:
                raise RipsError(f"simplex {sigma} does not lift at {x}") from err
            if not upper.is_simplex(lift):
                raise RipsError(f"lift {lift} of {sigma} is not a simplex")
            lifted += 1

    scale = Fraction(d) if isinstance(d, Fraction) else d
    skel = MetricCoverMap(
        upper.skeleton,
        lower.skeleton,
        p,
        depth=cover.depth,
        truncation=cover.truncation,
        centers=cover.centers,
        radius_scale=scale,
        identity_point=cover.identity_point,
        base_identity=cover.base_identity,
        name=f"P_{d}({cover.name})",
    )
    predicted = math.floor(Fraction(R) / Fraction(d)) - 1
    return SkeletonCover(skel, R, d, predicted, lifted, verify_cover_radius(skel, predicted))
