"""Finite metric spaces: graph metrics, dense matrices, box spaces and nets."""
from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .groups import FinGenGroup, FiniteGroup, multiply

DENSE_CROSSOVER = 5000
EXHAUSTIVE_THRESHOLD = 200


class MetricError(ValueError):
    pass


class InfeasibleNet(MetricError):
    pass


@dataclass(frozen=True)
class GroupAction:
    """A finite group acting on ``0..n-1``: ``perm[g, x]`` is ``g.x``."""

    group: FiniteGroup
    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        if perm.ndim != 2 or perm.shape[0] != self.group.order:
            raise MetricError("action array must have one row per group element")
        object.__setattr__(self, "perm", perm)
        perm.setflags(write=False)

    @classmethod
    def trivial(cls, n: int) -> "GroupAction":
        return cls(FiniteGroup.trivial(), np.arange(n)[None, :])

    @property
    def size(self) -> int:
        return self.perm.shape[1]

    def orbits(self) -> list[list[int]]:
        seen = np.zeros(self.size, dtype=bool)
        out = []
        for x in range(self.size):
            if not seen[x]:
                orb = sorted(set(int(y) for y in self.perm[:, x]))
                seen[orb] = True
                out.append(orb)
        return out

    def is_free(self) -> bool:
        return all(len(set(self.perm[:, x].tolist())) == self.group.order for x in range(self.size))

    def is_action(self) -> bool:
        G = self.group
        if not np.array_equal(self.perm[0], np.arange(self.size)):
            return False
        for a in range(G.order):
            for b in range(G.order):
                if not np.array_equal(self.perm[G.table[a, b]], self.perm[a][self.perm[b]]):
                    return False
        return True

    def restrict(self, sub: FiniteGroup) -> "GroupAction":
        return GroupAction(sub, self.perm[sub.parent])


class FiniteMetricSpace:
    """Points ``0..n-1`` with an exact metric.

    Exactly one backend is used: a graph (``neighbors``, unit edges, BFS
    distances with ``inf`` between components), a dense ``matrix`` (numbers or
    ``Fraction`` objects), or a ``row_fn`` computing one distance row.
    Graph spaces below ``DENSE_CROSSOVER`` points materialize all pairs once.
    """

    def __init__(
        self,
        size: int,
        *,
        neighbors: Sequence[Sequence[int]] | None = None,
        matrix=None,
        row_fn: Callable[[int], np.ndarray] | None = None,
        labels: Sequence | None = None,
        names: Sequence | None = None,
        action: GroupAction | Callable[[], GroupAction] | None = None,
        homogeneous: bool = False,
    ):
        backends = sum(x is not None for x in (neighbors, matrix, row_fn))
        if backends != 1:
            raise MetricError("give exactly one of neighbors, matrix, row_fn")
        self.size = int(size)
        self.labels = None if labels is None else tuple(labels)
        self.names = None if names is None else tuple(names)
        self.homogeneous = homogeneous
        self._action = action
        self._neighbors = None
        self._matrix = None
        self._row_fn = row_fn
        self._rows: dict[int, np.ndarray] = {}
        if neighbors is not None:
            if len(neighbors) != self.size:
                raise MetricError("neighbor list length differs from size")
            self._neighbors = tuple(tuple(sorted(set(int(v) for v in nb if v != u))) for u, nb in enumerate(neighbors))
        if matrix is not None:
            m = np.asarray(matrix)
            if m.shape != (self.size, self.size):
                raise MetricError("distance matrix has the wrong shape")
            self._matrix = m

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        backend = "graph" if self.is_graph else "dense" if self._matrix is not None else "lazy"
        return f"FiniteMetricSpace({self.size} points, {backend})"

    # -- constructors --------------------------------------------------

    @classmethod
    def from_edges(cls, size: int, edges: Iterable[tuple[int, int]], **kw) -> "FiniteMetricSpace":
        nb: list[set[int]] = [set() for _ in range(size)]
        for u, v in edges:
            if u != v:
                nb[u].add(v)
                nb[v].add(u)
        return cls(size, neighbors=[sorted(s) for s in nb], **kw)

    @classmethod
    def from_matrix(cls, matrix, **kw) -> "FiniteMetricSpace":
        m = np.asarray(matrix)
        return cls(m.shape[0], matrix=m, **kw)

    @classmethod
    def path(cls, n: int) -> "FiniteMetricSpace":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int, with_rotation: bool = False) -> "FiniteMetricSpace":
        action = None
        if with_rotation:
            idx = np.arange(n)
            action = GroupAction(FiniteGroup.cyclic(n), (idx[:, None] + idx[None, :]) % n)
        edges = [(i, (i + 1) % n) for i in range(n)] if n > 1 else []
        return cls.from_edges(n, edges, action=action, homogeneous=True)

    @classmethod
    def complete(cls, n: int) -> "FiniteMetricSpace":
        return cls.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], homogeneous=True)

    @classmethod
    def integer_segment(cls, lo: int, hi: int) -> "FiniteMetricSpace":
        """The integers ``lo..hi`` with ``|a-b|``; point i is the integer ``lo+i``."""
        n = hi - lo + 1
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)], names=list(range(lo, hi + 1)))

    @classmethod
    def on_line(cls, positions: Sequence) -> "FiniteMetricSpace":
        """Points on the real line with exact (rational) coordinates."""
        pos = [Fraction(p) for p in positions]
        m = np.empty((len(pos), len(pos)), dtype=object)
        for i, a in enumerate(pos):
            for j, b in enumerate(pos):
                m[i, j] = abs(a - b)
        return cls(len(pos), matrix=m, names=pos)

    # -- distances -----------------------------------------------------

    @property
    def is_graph(self) -> bool:
        return self._neighbors is not None

    @property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        if self._neighbors is None:
            raise MetricError("not a graph metric")
        return self._neighbors

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nb in enumerate(self.neighbors) for v in nb if u < v]

    def _csr(self) -> csr_matrix:
        rows = [u for u, nb in enumerate(self._neighbors) for _ in nb]
        cols = [v for nb in self._neighbors for v in nb]
        return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.size, self.size))

    def _materialize(self) -> None:
        if self._matrix is None and self.is_graph and self.size <= DENSE_CROSSOVER:
            if self.size == 0:
                self._matrix = np.zeros((0, 0))
            else:
                self._matrix = shortest_path(self._csr(), method="D", unweighted=True, directed=False)

    def row(self, i: int) -> np.ndarray:
        """Distances from point ``i`` to every point."""
        self._materialize()
        if self._matrix is not None:
            return self._matrix[i]
        r = self._rows.get(i)
        if r is None:
            r = self._row_fn(i) if self._row_fn is not None else self._bfs_row(i)
            if len(self._rows) > 4096:
                self._rows.clear()
            self._rows[i] = r
        return r

    def _bfs_row(self, i: int) -> np.ndarray:
        dist = np.full(self.size, np.inf)
        dist[i] = 0
        queue = deque([i])
        nb = self._neighbors
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for v in nb[u]:
                if dist[v] == np.inf:
                    dist[v] = du
                    queue.append(v)
        return dist

    def dist(self, i: int, j: int):
        return self.row(i)[j]

    def distance_matrix(self) -> np.ndarray:
        self._materialize()
        if self._matrix is not None:
            return self._matrix
        return np.vstack([self.row(i) for i in range(self.size)])

    def submatrix(self, idx: Sequence[int]) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return np.vstack([self.row(int(i))[idx] for i in idx]) if len(idx) else np.zeros((0, 0))

    def ball_rows(self, center: int, radius):
        """Yield ``(u, distances from u to the ball)`` for each ``u`` in ``B_R(center)``.

        For graphs every geodesic between two points of ``B_R(x)`` stays inside
        ``B_2R(x)``, so BFS is confined there; this keeps huge truncated totals cheap.
        """
        B = self.ball(center, radius)
        if not self.is_graph or self._matrix is not None:
            for u in B:
                yield int(u), self.row(int(u))[B]
            return
        crow = self.row(center)
        region = set(np.nonzero(crow <= 2 * radius)[0].tolist())
        pos = {int(b): i for i, b in enumerate(B)}
        nb = self._neighbors
        for u in B:
            u = int(u)
            out = np.full(len(B), np.inf)
            dist = {u: 0}
            queue = deque([u])
            found = 0
            while queue and found < len(B):
                a = queue.popleft()
                if a in pos:
                    out[pos[a]] = dist[a]
                    found += 1
                for v in nb[a]:
                    if v in region and v not in dist:
                        dist[v] = dist[a] + 1
                        queue.append(v)
            yield u, out

    def eccentricity(self, i: int):
        return max(self.row(i)) if self.size else 0

    def diameter(self):
        if self.size == 0:
            return 0
        if self.homogeneous:
            return self.eccentricity(0)
        return max(self.eccentricity(i) for i in range(self.size))

    def connected(self) -> bool:
        if self.size == 0:
            return True
        return bool(np.all(np.isfinite(np.asarray(self.row(0), dtype=float))))

    def ball(self, center: int, radius) -> np.ndarray:
        """Closed ball, as a sorted index array."""
        return np.nonzero(self.row(center) <= radius)[0]

    def realized_distances(self) -> list:
        vals = set()
        for i in range(self.size):
            for d in self.row(i):
                if d != np.inf:
                    vals.add(d)
        return sorted(vals)

    @property
    def action(self) -> GroupAction | None:
        if callable(self._action):
            self._action = self._action()
        return self._action

    def with_action(self, action: GroupAction) -> "FiniteMetricSpace":
        clone = object.__new__(FiniteMetricSpace)
        clone.__dict__.update(self.__dict__)
        clone._action = action
        return clone

    # -- invariants ----------------------------------------------------

    def check_metric(self, threshold: int = EXHAUSTIVE_THRESHOLD, samples: int = 20000, seed: int = 0):
        """Return a violating triple/pair or None. Exhaustive below ``threshold``."""
        n = self.size
        if n <= threshold:
            D = self.distance_matrix()
            if np.any(np.diag(D) != 0):
                return ("nonzero-diagonal", int(np.nonzero(np.diag(D) != 0)[0][0]))
            for i in range(n):
                for j in range(n):
                    if D[i, j] != D[j, i]:
                        return ("asymmetric", i, j)
                    if i != j and not D[i, j] > 0:
                        return ("zero-distance", i, j)
            for k in range(n):
                bad = D > D[:, [k]] + D[[k], :]
                if np.any(bad):
                    i, j = map(int, np.argwhere(bad)[0])
                    return ("triangle", i, j, k)
            return None
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            i, j, k = (int(x) for x in rng.integers(0, n, 3))
            if self.dist(i, j) != self.dist(j, i):
                return ("asymmetric", i, j)
            if self.dist(i, j) > self.dist(i, k) + self.dist(k, j):
                return ("triangle", i, j, k)
        return None

    def check_isometric_action(self, samples: int | None = None, seed: int = 0):
        """Return ``(g, x, y)`` with ``d(gx, gy) != d(x, y)``, or None."""
        act = self.action
        if act is None:
            return None
        rng = np.random.default_rng(seed)
        gs = range(act.group.order)
        if samples is not None:
            gs = rng.integers(0, act.group.order, samples)
        for g in gs:
            g = int(g)
            p = act.perm[g]
            for x in range(self.size):
                row = self.row(x)
                grow = self.row(int(p[x]))
                if np.any(grow[p] != row):
                    y = int(np.nonzero(grow[p] != row)[0][0])
                    return (g, x, y)
        return None


# -- Cayley graphs and box spaces --------------------------------------------

def cayley_graph(group: FinGenGroup, cap: int | None = None) -> FiniteMetricSpace:
    """Word metric on a finite group: edges ``g -- g*s`` for symmetric generators.

    Left translation is attached as an isometric action (built lazily, since
    it needs the full multiplication table).
    """
    elements = group.elements(cap)
    index = {e: i for i, e in enumerate(elements)}
    gens = group.symmetric_generators
    neighbors = []
    for g in elements:
        nb = []
        for s in gens:
            h = multiply(g, s)
            j = index.get(h)
            if j is None:
                raise MetricError("element set is not closed under the generators")
            nb.append(j)
        neighbors.append(nb)

    def left_translation() -> GroupAction:
        # closure starts at the identity, so group indices coincide with vertices
        fg = FiniteGroup.from_group(group)
        return GroupAction(fg, fg.table)

    space = FiniteMetricSpace(
        len(elements), neighbors=neighbors, names=elements, action=left_translation, homogeneous=True
    )
    return space


class BoxSpace(FiniteMetricSpace):
    """Disjoint union of components; across components ``m != n`` the distance is
    ``diam(X_m) + diam(X_n) + m + n + 1``."""

    def __init__(self, components: Sequence[FiniteMetricSpace], indices: Sequence[int] | None = None):
        comps = list(components)
        idx = list(range(len(comps))) if indices is None else [int(i) for i in indices]
        if len(idx) != len(comps) or len(set(idx)) != len(idx):
            raise MetricError("component indices must be distinct, one per component")
        self.components = comps
        self.indices = idx
        self.diameters = [c.diameter() for c in comps]
        self.offsets = np.cumsum([0] + [c.size for c in comps])
        labels = np.repeat(np.arange(len(comps)), [c.size for c in comps])
        self._label_arr = labels
        total = int(self.offsets[-1])
        super().__init__(total, row_fn=self._box_row, labels=[idx[c] for c in labels])
        if total <= DENSE_CROSSOVER:
            self._matrix = np.vstack([self._box_row(i) for i in range(total)]) if total else np.zeros((0, 0))

    def _box_row(self, i: int) -> np.ndarray:
        c = int(self._label_arr[i])
        local = i - int(self.offsets[c])
        out = []
        for k, comp in enumerate(self.components):
            if k == c:
                out.append(np.asarray(comp.row(local), dtype=float))
            else:
                cross = self.diameters[c] + self.diameters[k] + self.indices[c] + self.indices[k] + 1
                out.append(np.full(comp.size, float(cross)))
        return np.concatenate(out) if out else np.zeros(0)

    def component_points(self, k: int) -> np.ndarray:
        return np.arange(self.offsets[k], self.offsets[k + 1])

    def descriptor(self) -> dict:
        return {
            "components": [
                {"index": i, "size": c.size, "diameter": _num(d)}
                for i, c, d in zip(self.indices, self.components, self.diameters)
            ],
            "cross_distance": "diam(X_m)+diam(X_n)+m+n+1",
        }


def box_space(components: Sequence[FiniteMetricSpace], indices: Sequence[int] | None = None) -> BoxSpace:
    return BoxSpace(components, indices)


def ball(space: FiniteMetricSpace, center: int, radius) -> np.ndarray:
    return space.ball(center, radius)


# -- nets --------------------------------------------------------------------

@dataclass(frozen=True)
class Net:
    host: FiniteMetricSpace
    delta: object
    points: tuple[int, ...]
    projection: np.ndarray = field(repr=False)

    def check(self):
        """Return the first violated invariant as a tuple, or None."""
        pts = list(self.points)
        for a_i, a in enumerate(pts):
            row = self.host.row(a)
            for b in pts[a_i + 1:]:
                if row[b] < self.delta:
                    return ("separation", a, b)
        for x in range(self.host.size):
            row = self.host.row(x)
            if not any(row[p] < self.delta for p in pts):
                return ("covering", x)
            if row[int(self.projection[x])] > self.delta:
                return ("projection", x)
            if int(self.projection[x]) not in self.points:
                return ("projection-target", x)
        return None


def max_separated_net(
    space: FiniteMetricSpace,
    delta,
    order: Sequence[int] | None = None,
    equivariant: bool = False,
) -> Net:
    """Greedy maximal ``delta``-separated subset in a fixed point order.

    A point is kept when it is at distance >= delta from every kept point.
    With ``equivariant`` the candidates are whole orbits of the attached action,
    and the projection is made equivariant by translating it from orbit
    representatives.
    """
    if not delta > 0:
        raise MetricError("delta must be positive")
    order = list(range(space.size)) if order is None else [int(x) for x in order]
    if sorted(order) != list(range(space.size)):
        raise MetricError("order must be a permutation of the points")
    chosen: list[int] = []
    if not equivariant:
        for x in order:
            row = space.row(x)
            if all(row[p] >= delta for p in chosen):
                chosen.append(x)
        proj = np.array([_first_within(space, x, chosen, delta) for x in range(space.size)], dtype=np.int64)
        return Net(space, delta, tuple(chosen), proj)

    act = space.action
    if act is None:
        raise MetricError("equivariant net requested on a space without an action")
    orbit_of = {}
    for orb in act.orbits():
        for x in orb:
            orbit_of[x] = orb
    done: set[int] = set()
    for x in order:
        orb = orbit_of[x]
        if orb[0] in done:
            continue
        done.add(orb[0])
        sep = all(space.dist(a, b) >= delta for i, a in enumerate(orb) for b in orb[i + 1:])
        far = all(space.dist(a, p) >= delta for a in orb for p in chosen)
        if sep and far:
            chosen.extend(orb)
    for x in range(space.size):
        if not any(space.dist(x, p) < delta for p in chosen):
            raise InfeasibleNet(
                f"point {x} is uncovered: its orbit has two points closer than delta={delta}"
            )
    proj = np.full(space.size, -1, dtype=np.int64)
    for orb in act.orbits():
        rep = orb[0]
        target = _first_within(space, rep, chosen, delta)
        for g in range(act.group.order):
            gx, gt = int(act.perm[g, rep]), int(act.perm[g, target])
            if proj[gx] not in (-1, gt):
                raise InfeasibleNet(f"no equivariant projection: stabilizer of {rep} moves its target")
            proj[gx] = gt
    return Net(space, delta, tuple(sorted(chosen)), proj)


def _first_within(space: FiniteMetricSpace, x: int, chosen: Sequence[int], delta) -> int:
    row = space.row(x)
    for p in chosen:
        if row[p] < delta:
            return p
    raise InfeasibleNet(f"point {x} is not covered")


# -- import / export ---------------------------------------------------------

def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (float, np.floating)):
        if np.isinf(x):
            return "inf"
        if float(x).is_integer():
            return int(x)
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def write_edge_list(space: FiniteMetricSpace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        w.writerows(space.edges())


def read_edge_list(path, size: int | None = None) -> FiniteMetricSpace:
    edges = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and header != ["u", "v"]:
            edges.append((int(header[0]), int(header[1])))
        for row in reader:
            if row:
                edges.append((int(row[0]), int(row[1])))
    n = size if size is not None else (1 + max((max(e) for e in edges), default=-1))
    return FiniteMetricSpace.from_edges(n, edges)


def write_distance_matrix(space: FiniteMetricSpace, path) -> None:
    D = space.distance_matrix()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in D:
            w.writerow([_num(x) for x in row])


def write_box_descriptor(box: BoxSpace, path) -> None:
    with open(path, "w") as fh:
        json.dump(box.descriptor(), fh, indent=2, sort_keys=True)
        fh.write("\n")
