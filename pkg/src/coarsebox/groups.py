"""Finitely generated groups with concrete element arithmetic.

Elements are immutable values (:class:`GroupElement`) whose payload is a
canonical tuple, so equality and hashing are exact for every finite kind.
Normal subgroups are never stored explicitly; a quotient tower records the
quotient *maps* and an element lies in the kernel iff it maps to the identity.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_MAX_ORDER = 10_000_000

KINDS = (
    "free-word",
    "integer-matrix",
    "modular-matrix",
    "lattice",
    "cyclic",
    "permutation",
)
FINITE_KINDS = ("modular-matrix", "cyclic", "permutation")


class GroupError(ValueError):
    pass


class KindMismatch(GroupError):
    pass


class OrderCapExceeded(GroupError):
    pass


def max_quotient_order() -> int:
    """Order cap for quotient enumeration; ``COARSEBOX_MAX_ORDER`` overrides."""
    raw = os.environ.get("COARSEBOX_MAX_ORDER")
    if raw is None:
        return DEFAULT_MAX_ORDER
    try:
        cap = int(raw)
    except ValueError:
        raise GroupError(f"COARSEBOX_MAX_ORDER must be an integer, got {raw!r}") from None
    if cap <= 0:
        raise GroupError("COARSEBOX_MAX_ORDER must be positive")
    return cap


@dataclass(frozen=True)
class GroupElement:
    kind: str
    data: tuple
    modulus: int | None = None

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __repr__(self) -> str:
        mod = f" mod {self.modulus}" if self.modulus is not None else ""
        return f"{self.kind}{self.data}{mod}"

    def to_json(self):
        payload = [list(r) for r in self.data] if "matrix" in self.kind else list(self.data)
        return {"kind": self.kind, "data": payload, "modulus": self.modulus}

    @classmethod
    def from_json(cls, obj) -> "GroupElement":
        kind = obj["kind"]
        if kind not in KINDS:
            raise GroupError(f"unknown kind {kind!r}")
        if "matrix" in kind:
            data = tuple(tuple(int(x) for x in row) for row in obj["data"])
        else:
            data = tuple(int(x) for x in obj["data"])
        el = cls(kind, data, obj.get("modulus"))
        return _canonical(el)


# -- matrix helpers ---------------------------------------------------------

def _matmul(a: tuple, b: tuple, m: int | None = None) -> tuple:
    k = len(a)
    rows = []
    for i in range(k):
        row = []
        for j in range(k):
            v = sum(a[i][t] * b[t][j] for t in range(k))
            row.append(v % m if m else v)
        rows.append(tuple(row))
    return tuple(rows)


def _det(a: tuple) -> int:
    k = len(a)
    if k == 1:
        return a[0][0]
    if k == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    return sum(
        (-1) ** j * a[0][j] * _det(_minor(a, 0, j)) for j in range(k) if a[0][j]
    )


def _minor(a: tuple, i: int, j: int) -> tuple:
    return tuple(
        tuple(a[r][c] for c in range(len(a)) if c != j) for r in range(len(a)) if r != i
    )


def _adjugate(a: tuple) -> tuple:
    k = len(a)
    if k == 1:
        return ((1,),)
    return tuple(
        tuple((-1) ** (i + j) * _det(_minor(a, j, i)) for j in range(k)) for i in range(k)
    )


def _free_reduce(word: Iterable[int]) -> tuple:
    out: list[int] = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def _canonical(g: GroupElement) -> GroupElement:
    if g.kind == "free-word":
        return GroupElement(g.kind, _free_reduce(g.data))
    if g.kind == "modular-matrix":
        m = g.modulus
        return GroupElement(g.kind, tuple(tuple(x % m for x in r) for r in g.data), m)
    if g.kind == "cyclic":
        m = g.modulus
        return GroupElement(g.kind, tuple(x % m for x in g.data), m)
    return g


# -- element arithmetic -----------------------------------------------------

def _check_same(g: GroupElement, h: GroupElement) -> None:
    if g.kind != h.kind:
        raise KindMismatch(f"cannot multiply {g.kind} by {h.kind}")
    if g.modulus != h.modulus:
        raise KindMismatch(f"modulus mismatch: {g.modulus} vs {h.modulus}")
    if g.kind != "free-word" and len(g.data) != len(h.data):
        raise KindMismatch("size mismatch")


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product ``g*h``; permutations compose as ``(g*h)(i) = g(h(i))``."""
    _check_same(g, h)
    kind = g.kind
    if kind == "free-word":
        return GroupElement(kind, _free_reduce(g.data + h.data))
    if kind == "integer-matrix":
        return GroupElement(kind, _matmul(g.data, h.data))
    if kind == "modular-matrix":
        return GroupElement(kind, _matmul(g.data, h.data, g.modulus), g.modulus)
    if kind == "lattice":
        return GroupElement(kind, tuple(a + b for a, b in zip(g.data, h.data)))
    if kind == "cyclic":
        m = g.modulus
        return GroupElement(kind, tuple((a + b) % m for a, b in zip(g.data, h.data)), m)
    if kind == "permutation":
        return GroupElement(kind, tuple(g.data[i] for i in h.data))
    raise GroupError(f"unknown kind {kind!r}")


def inverse(g: GroupElement) -> GroupElement:
    kind = g.kind
    if kind == "free-word":
        return GroupElement(kind, tuple(-x for x in reversed(g.data)))
    if kind == "integer-matrix":
        det = _det(g.data)
        if det not in (1, -1):
            raise GroupError(f"integer matrix with determinant {det} is not invertible over Z")
        adj = _adjugate(g.data)
        return GroupElement(kind, tuple(tuple(det * x for x in r) for r in adj))
    if kind == "modular-matrix":
        m = g.modulus
        det = _det(g.data) % m
        try:
            dinv = pow(det, -1, m)
        except ValueError:
            raise GroupError(f"determinant {det} is not a unit mod {m}") from None
        adj = _adjugate(g.data)
        return GroupElement(kind, tuple(tuple(dinv * x % m for x in r) for r in adj), m)
    if kind == "lattice":
        return GroupElement(kind, tuple(-a for a in g.data))
    if kind == "cyclic":
        m = g.modulus
        return GroupElement(kind, tuple((-a) % m for a in g.data), m)
    if kind == "permutation":
        inv = [0] * len(g.data)
        for i, j in enumerate(g.data):
            inv[j] = i
        return GroupElement(kind, tuple(inv))
    raise GroupError(f"unknown kind {kind!r}")


def identity_like(g: GroupElement) -> GroupElement:
    kind = g.kind
    if kind == "free-word":
        return GroupElement(kind, ())
    if kind in ("integer-matrix", "modular-matrix"):
        k = len(g.data)
        data = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
        return GroupElement(kind, data, g.modulus)
    if kind in ("lattice", "cyclic"):
        return GroupElement(kind, (0,) * len(g.data), g.modulus)
    if kind == "permutation":
        return GroupElement(kind, tuple(range(len(g.data))))
    raise GroupError(f"unknown kind {kind!r}")


def power(g: GroupElement, n: int) -> GroupElement:
    if n < 0:
        return power(inverse(g), -n)
    out = identity_like(g)
    base = g
    while n:
        if n & 1:
            out = multiply(out, base)
        base = multiply(base, base)
        n >>= 1
    return out


def reduce_mod(g: GroupElement, m: int) -> GroupElement:
    """Reduce an integer matrix (or lattice vector) modulo ``m``.

    Matrices must lie in SL_k(Z); the image then has determinant 1 mod m.
    Lattice vectors land in the cyclic kind ``(Z/m)^k``.
    """
    if m < 2:
        raise GroupError(f"modulus must be >= 2, got {m}")
    if g.kind == "integer-matrix":
        if _det(g.data) != 1:
            raise GroupError(f"matrix {g.data} has determinant {_det(g.data)}, expected 1")
        return _canonical(GroupElement("modular-matrix", g.data, m))
    if g.kind == "lattice":
        return _canonical(GroupElement("cyclic", g.data, m))
    raise GroupError(f"reduce_mod expects an integer-matrix or lattice element, got {g.kind}")


def matrix(rows: Sequence[Sequence[int]], modulus: int | None = None) -> GroupElement:
    data = tuple(tuple(int(x) for x in r) for r in rows)
    if modulus is None:
        return GroupElement("integer-matrix", data)
    return _canonical(GroupElement("modular-matrix", data, modulus))


def permutation(images: Sequence[int]) -> GroupElement:
    images = tuple(int(i) for i in images)
    if sorted(images) != list(range(len(images))):
        raise GroupError(f"{images} is not a permutation")
    return GroupElement("permutation", images)


def cycle_permutation(n: int, *cycles: Sequence[int]) -> GroupElement:
    images = list(range(n))
    for cyc in cycles:
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            images[a] = b
    return permutation(images)


# -- finitely generated groups ----------------------------------------------

class FinGenGroup:
    """A group given by generators with concrete arithmetic.

    ``elements`` may be supplied for finite groups whose underlying set is
    known in advance; otherwise it is produced on demand by closure from the
    identity (which only ever yields the generated subgroup).
    """

    def __init__(
        self,
        generators: Sequence[GroupElement],
        *,
        identity: GroupElement | None = None,
        elements: Sequence[GroupElement] | None = None,
        name: str = "",
        symmetric: bool = True,
    ):
        generators = tuple(_canonical(g) for g in generators)
        if identity is None:
            if not generators:
                raise GroupError("a group without generators needs an explicit identity")
            identity = identity_like(generators[0])
        for g in generators:
            _check_same(g, identity)
            inverse(g)  # raises if not invertible
            if g.kind == "modular-matrix" and any(not 0 <= x < g.modulus for r in g.data for x in r):
                raise GroupError("modular entries must lie in [0, m)")
        self.kind = identity.kind
        self.modulus = identity.modulus
        self.identity = identity
        self.generators = generators
        self.symmetric = symmetric
        self.name = name
        self._elements = tuple(elements) if elements is not None else None

    def __repr__(self) -> str:
        return f"FinGenGroup({self.name or self.kind}, {len(self.generators)} generators)"

    @property
    def symmetric_generators(self) -> tuple[GroupElement, ...]:
        """Generators followed by their inverses (deduplicated, order kept)."""
        if not self.symmetric:
            return self.generators
        out: list[GroupElement] = []
        for g in self.generators:
            for x in (g, inverse(g)):
                if x not in out:
                    out.append(x)
        return tuple(out)

    @property
    def is_finite(self) -> bool:
        return self.kind in FINITE_KINDS or self._elements is not None

    @property
    def degenerate(self) -> bool:
        """True when every generator is the identity."""
        return all(g == self.identity for g in self.generators)

    def multiply(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return multiply(g, h)

    def inverse(self, g: GroupElement) -> GroupElement:
        return inverse(g)

    def evaluate(self, word: Sequence[int]) -> GroupElement:
        """Evaluate a word whose letters are ``+-(i+1)`` for generator ``i``."""
        out = self.identity
        for letter in word:
            g = self.generators[abs(letter) - 1]
            out = multiply(out, g if letter > 0 else inverse(g))
        return out

    def elements(self, cap: int | None = None) -> tuple[GroupElement, ...]:
        if self._elements is None:
            if not self.is_finite:
                raise GroupError(f"{self.kind} groups are infinite; enumerate a quotient instead")
            self._elements = closure(self.identity, self.symmetric_generators, cap)
        return self._elements

    @property
    def order(self) -> int:
        return len(self.elements())

    def ball(self, radius: int) -> tuple[list[GroupElement], list[int]]:
        """Elements of word length <= radius in BFS order, with their lengths."""
        gens = self.symmetric_generators
        seen = {self.identity: 0}
        order = [self.identity]
        queue = deque([self.identity])
        while queue:
            g = queue.popleft()
            d = seen[g]
            if d == radius:
                continue
            for s in gens:
                h = multiply(g, s)
                if h not in seen:
                    seen[h] = d + 1
                    order.append(h)
                    queue.append(h)
        return order, [seen[g] for g in order]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "modulus": self.modulus,
            "name": self.name,
            "symmetric": self.symmetric,
            "identity": self.identity.to_json(),
            "generators": [g.to_json() for g in self.generators],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FinGenGroup":
        return cls(
            [GroupElement.from_json(g) for g in obj["generators"]],
            identity=GroupElement.from_json(obj["identity"]),
            name=obj.get("name", ""),
            symmetric=obj.get("symmetric", True),
        )


def closure(
    start: GroupElement, generators: Sequence[GroupElement], cap: int | None = None
) -> tuple[GroupElement, ...]:
    """BFS closure of ``start`` under right multiplication by ``generators``."""
    cap = max_quotient_order() if cap is None else cap
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        g = queue.popleft()
        for s in generators:
            h = multiply(g, s)
            if h not in seen:
                seen.add(h)
                order.append(h)
                if len(order) > cap:
                    raise OrderCapExceeded(f"closure exceeded {cap} elements")
                queue.append(h)
    return tuple(order)


# -- named groups -----------------------------------------------------------

MARGULIS_A = matrix([[1, 2], [0, 1]])
MARGULIS_B = matrix([[1, 0], [2, 1]])


def margulis_group() -> FinGenGroup:
    """The free subgroup of SL2(Z) generated by A=(1 2;0 1), B=(1 0;2 1)."""
    return FinGenGroup([MARGULIS_A, MARGULIS_B], name="SL2(Z)<A,B>")


def integers(rank: int = 1) -> FinGenGroup:
    gens = [
        GroupElement("lattice", tuple(int(i == j) for j in range(rank))) for i in range(rank)
    ]
    return FinGenGroup(gens, name="Z" if rank == 1 else f"Z^{rank}")


def cyclic_group(n: int) -> FinGenGroup:
    if n < 1:
        raise GroupError("cyclic order must be >= 1")
    return FinGenGroup([GroupElement("cyclic", (1 % n,), n)], name=f"Z/{n}")


def free_group(rank: int) -> FinGenGroup:
    return FinGenGroup(
        [GroupElement("free-word", (i + 1,)) for i in range(rank)],
        identity=GroupElement("free-word", ()),
        name=f"F{rank}",
    )


def symmetric_group(n: int) -> FinGenGroup:
    if n < 2:
        return FinGenGroup([], identity=permutation(range(max(n, 1))), name=f"S{n}")
    gens = [cycle_permutation(n, (0, 1))]
    if n > 2:
        gens.append(cycle_permutation(n, tuple(range(n))))
    return FinGenGroup(gens, name=f"S{n}")


def alternating_group(n: int) -> FinGenGroup:
    if n < 3:
        return FinGenGroup([], identity=permutation(range(max(n, 1))), name=f"A{n}")
    gens = [cycle_permutation(n, (0, 1, i)) for i in range(2, n)]
    return FinGenGroup(gens, name=f"A{n}")


def dihedral_group(n: int) -> FinGenGroup:
    """Symmetries of the n-gon, order 2n (D4 is the order-8 group)."""
    rot = cycle_permutation(n, tuple(range(n)))
    ref = permutation([(-i) % n for i in range(n)])
    return FinGenGroup([rot, ref], name=f"D{n}")


# -- quotient towers --------------------------------------------------------

class QuotientTower:
    """Stages of finite quotients of a base group.

    For integer-matrix and lattice bases the stages are moduli and the
    quotient map is :func:`reduce_mod`; any other base needs an explicit
    ``quotient(element, stage)`` callable.
    """

    def __init__(
        self,
        base: FinGenGroup,
        stages: Sequence,
        *,
        quotient: Callable[[GroupElement, object], GroupElement] | None = None,
        nested: bool = False,
    ):
        if quotient is None and base.kind not in ("integer-matrix", "lattice"):
            raise GroupError(f"no default quotient map for {base.kind} groups")
        self.base = base
        self.stages = tuple(stages)
        self.nested = nested
        self._quotient = quotient

    def quotient_map(self, stage) -> Callable[[GroupElement], GroupElement]:
        if self._quotient is not None:
            fn = self._quotient
            return lambda g: fn(g, stage)
        return lambda g: reduce_mod(g, int(stage))

    def stage_group(self, index: int) -> FinGenGroup:
        stage = self.stages[index]
        q = self.quotient_map(stage)
        return FinGenGroup(
            [q(g) for g in self.base.generators],
            identity=q(self.base.identity),
            name=f"{self.base.name}/stage[{stage}]",
            symmetric=self.base.symmetric,
        )

    def check_homomorphism(self, index: int, max_length: int = 3) -> bool:
        """Quotient map respects products of generator words up to ``max_length``."""
        q = self.quotient_map(self.stages[index])
        gens = self.base.symmetric_generators
        for length in range(1, max_length + 1):
            for combo in _words(len(gens), length):
                g = self.base.identity
                img = q(self.base.identity)
                for i in combo:
                    g = multiply(g, gens[i])
                    img = multiply(img, q(gens[i]))
                if q(g) != img:
                    return False
        return True

    def check_nested(self) -> bool:
        """For modulus stages m_n | m_{n+1}: reducing stage n+1 images gives stage n."""
        for a, b in zip(self.stages, self.stages[1:]):
            if int(b) % int(a):
                return False
            qa, qb = self.quotient_map(a), self.quotient_map(b)
            for g in self.base.generators:
                hb = qb(g)
                down = _canonical(GroupElement(hb.kind, hb.data, int(a)))
                if down != qa(g):
                    return False
        return True

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "stages": list(self.stages), "nested": self.nested}


def _words(k: int, length: int):
    if length == 0:
        yield ()
        return
    for w in _words(k, length - 1):
        for i in range(k):
            yield w + (i,)


def enumerate_quotient(tower: QuotientTower, index: int, cap: int | None = None) -> FinGenGroup:
    """Finite quotient at a stage, all elements listed, induced generators kept."""
    group = tower.stage_group(index)
    if not group.is_finite:
        raise GroupError("stage quotient is not of a finite kind")
    group.elements(cap)
    return group


# -- indexed finite groups --------------------------------------------------

class FiniteGroup:
    """A finite group on indices ``0..n-1`` with identity ``0``.

    Backed by a multiplication table, so it is meant for small groups (the
    coset and subgroup computations), not for large Cayley graphs.
    """

    def __init__(self, table: np.ndarray, elements: Sequence | None = None, name: str = ""):
        table = np.asarray(table, dtype=np.int64)
        n = table.shape[0]
        if table.shape != (n, n):
            raise GroupError("multiplication table must be square")
        if not np.array_equal(table[0], np.arange(n)) or not np.array_equal(table[:, 0], np.arange(n)):
            raise GroupError("index 0 must be the identity")
        self.table = table
        self.table.setflags(write=False)
        self.elements = tuple(elements) if elements is not None else tuple(range(n))
        self.name = name
        inv = np.empty(n, dtype=np.int64)
        for a in range(n):
            (hits,) = np.nonzero(table[a] == 0)
            inv[a] = hits[0]
        self.inv = inv
        self.inv.setflags(write=False)
        self._index = {el: i for i, el in enumerate(self.elements)}

    @classmethod
    def from_group(cls, group: FinGenGroup, cap: int | None = None) -> "FiniteGroup":
        els = group.elements(cap)
        if els[0] != group.identity:
            els = (group.identity,) + tuple(e for e in els if e != group.identity)
        index = {e: i for i, e in enumerate(els)}
        n = len(els)
        table = np.empty((n, n), dtype=np.int64)
        for i, a in enumerate(els):
            for j, b in enumerate(els):
                table[i, j] = index[multiply(a, b)]
        return cls(table, els, name=group.name)

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls(np.zeros((1, 1), dtype=np.int64), name="1")

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        idx = np.arange(n)
        return cls((idx[:, None] + idx[None, :]) % n, name=f"Z/{n}")

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.order

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or '?'}, order={self.order})"

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def index(self, element) -> int:
        return self._index[element]

    def generated(self, gens: Iterable[int]) -> frozenset[int]:
        gens = list(gens)
        seen = {0}
        queue = deque([0])
        while queue:
            a = queue.popleft()
            for g in gens:
                b = int(self.table[a, g])
                if b not in seen:
                    seen.add(b)
                    queue.append(b)
        return frozenset(seen)

    def is_subgroup(self, H: Iterable[int]) -> bool:
        H = frozenset(H)
        if 0 not in H:
            return False
        return all(int(self.table[a, self.inv[b]]) in H for a in H for b in H)

    def is_normal(self, H: Iterable[int]) -> bool:
        H = frozenset(H)
        return self.is_subgroup(H) and all(
            int(self.table[self.table[g, h], self.inv[g]]) in H for g in range(self.order) for h in H
        )

    def subgroups(self) -> list[frozenset[int]]:
        """All subgroups, by repeatedly joining cyclic subgroups."""
        cyclic = {self.generated([g]) for g in range(self.order)}
        found = set(cyclic)
        frontier = set(cyclic)
        while frontier:
            new = set()
            for A in frontier:
                for C in cyclic:
                    if C <= A:
                        continue
                    J = self.generated(sorted(A | C))
                    if J not in found:
                        new.add(J)
            found |= new
            frontier = new
        return sorted(found, key=lambda S: (len(S), sorted(S)))

    def normal_subgroups(self) -> list[frozenset[int]]:
        return [H for H in self.subgroups() if self.is_normal(H)]

    def left_coset(self, g: int, H: Iterable[int]) -> frozenset[int]:
        return frozenset(int(self.table[g, h]) for h in H)

    def left_cosets(self, H: Iterable[int]) -> list[frozenset[int]]:
        H = frozenset(H)
        cosets: list[frozenset[int]] = []
        covered: set[int] = set()
        for g in range(self.order):
            if g not in covered:
                c = self.left_coset(g, H)
                cosets.append(c)
                covered |= c
        return cosets

    def product_set(self, A: Iterable[int], B: Iterable[int]) -> frozenset[int]:
        return frozenset(int(self.table[a, b]) for a in A for b in B)

    def restrict(self, H: Iterable[int]) -> "FiniteGroup":
        """``H`` as a group in its own right; ``parent`` maps its indices into self."""
        H = sorted(H)
        if not self.is_subgroup(H):
            raise GroupError("not a subgroup")
        pos = {h: i for i, h in enumerate(H)}
        table = np.array([[pos[int(self.table[a, b])] for b in H] for a in H], dtype=np.int64)
        sub = FiniteGroup(table, [self.elements[h] for h in H], name=f"{self.name}|sub")
        sub.parent = np.array(H, dtype=np.int64)
        return sub
