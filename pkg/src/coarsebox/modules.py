"""Finite geometric modules and controlled morphisms between them.

A module is a triple ``(S, pi, M)``: a finite index set ``S`` with a free
action of a finite group, a map ``pi = (pi_X, pi_N)`` into ``X x N`` and a
free coefficient module ``M(s)`` of rank ``rank[s]`` over Z or Z/m. A
morphism ``phi: (S, pi, M) -> (S', pi', M')`` is a sparse family of matrices
``phi[s, s']: M(s) -> M'(s')`` stored with shape ``(rank'(s'), rank(s))``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .covers import CheckResult
from .groups import FiniteGroup
from .metric import FiniteMetricSpace, GroupAction, _num

DEFAULT_N_MAX = 64
CONTROLS = ("O", "T", "C")
SUPPORTS = ("lf", "compact")


class ModuleError(ValueError):
    pass


class NotEquivariant(ModuleError):
    pass


class WindowExceeded(ModuleError):
    pass


@dataclass(frozen=True)
class CoefficientObject:
    """The free module of the given rank over Z (``modulus=None``) or Z/m."""

    rank: int
    modulus: int | None = None

    def __post_init__(self):
        if self.rank < 0:
            raise ModuleError("rank must be nonnegative")
        if self.modulus is not None and self.modulus < 2:
            raise ModuleError("modulus must be at least 2")

    def reduce(self, a) -> np.ndarray:
        return _reduce(np.asarray(a, dtype=np.int64), self.modulus)


def _reduce(a: np.ndarray, modulus: int | None) -> np.ndarray:
    return a % modulus if modulus is not None else a


class GeometricModule:
    """A finite G-module over ``X x N``.

    ``action[g, s]`` is ``g.s``. ``space_action`` is the action of the same
    group on ``X`` (defaults to the one attached to ``space``).
    ``coefficient_action`` maps a rank ``r`` to an array ``(|G|, r)`` of
    coordinate permutations; ranks not listed carry the trivial action.
    """

    def __init__(
        self,
        space: FiniteMetricSpace,
        pi_x: Sequence[int],
        pi_n: Sequence[int],
        ranks: Sequence[int],
        *,
        group: FiniteGroup | None = None,
        action=None,
        space_action: GroupAction | None = None,
        modulus: int | None = None,
        control: str = "O",
        support: str = "lf",
        compact: Iterable[int] | None = None,
        concentrated: bool = False,
        coefficient_action: dict[int, np.ndarray] | None = None,
        n_max: int = DEFAULT_N_MAX,
        check: bool = True,
    ):
        self.space = space
        self.pi_x = np.asarray(pi_x, dtype=np.int64).reshape(-1)
        self.pi_n = np.asarray(pi_n, dtype=np.int64).reshape(-1)
        self.ranks = np.asarray(ranks, dtype=np.int64).reshape(-1)
        n = len(self.pi_x)
        if len(self.pi_n) != n or len(self.ranks) != n:
            raise ModuleError("pi_x, pi_n and ranks must have equal length")
        self.group = group if group is not None else FiniteGroup.trivial()
        if action is None:
            if self.group.order != 1:
                raise ModuleError("a nontrivial group needs an action on S")
            action = np.arange(n)[None, :]
        self.action = np.asarray(action, dtype=np.int64).reshape(self.group.order, n)
        if space_action is None:
            space_action = space.action if self.group.order > 1 else GroupAction.trivial(space.size)
        self.space_action = space_action
        self.modulus = modulus
        if control not in CONTROLS:
            raise ModuleError(f"control must be one of {CONTROLS}")
        if support not in SUPPORTS:
            raise ModuleError(f"support must be one of {SUPPORTS}")
        self.control = control
        self.support = support
        self.compact = None if compact is None else frozenset(int(k) for k in compact)
        self.concentrated = concentrated
        self.coefficient_action = {int(r): np.asarray(p, dtype=np.int64) for r, p in (coefficient_action or {}).items()}
        self.n_max = n_max
        for arr in (self.pi_x, self.pi_n, self.ranks, self.action):
            arr.setflags(write=False)
        if check:
            self.validate()

    # -- structure -------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.pi_x)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"GeometricModule(|S|={self.size}, G={self.group.name or self.group.order}, {self.control}/{self.support})"

    def coefficient(self, s: int) -> CoefficientObject:
        return CoefficientObject(int(self.ranks[s]), self.modulus)

    def validate(self) -> None:
        G, n = self.group, self.size
        if np.any(self.ranks < 0):
            raise ModuleError("ranks must be nonnegative")
        if n and (self.pi_x.min() < 0 or self.pi_x.max() >= self.space.size):
            raise ModuleError("pi_x leaves the space")
        if n and (self.pi_n.min() < 0 or self.pi_n.max() > self.n_max):
            raise WindowExceeded(f"N-coordinates must lie in [0, {self.n_max}]")
        if self.space_action is None or self.space_action.group.order != G.order:
            raise ModuleError("space action and module action use different groups")
        if not np.array_equal(self.space_action.group.table, G.table):
            raise ModuleError("space action and module action use different groups")
        sa = GroupAction(G, self.action)
        if not sa.is_action():
            raise ModuleError("action on S is not a group action")
        for s in range(n):
            if len(set(self.action[:, s].tolist())) != G.order:
                g = next(g for g in range(1, G.order) if self.action[g, s] == s)
                raise ModuleError(f"action on S is not free: {g} fixes {s}")
        if not np.array_equal(self.pi_x[self.action], self.space_action.perm[:, self.pi_x]):
            raise NotEquivariant("pi_X is not equivariant")
        if not np.all(self.pi_n[self.action] == self.pi_n[None, :]):
            raise NotEquivariant("pi_N is not invariant")
        if not np.all(self.ranks[self.action] == self.ranks[None, :]):
            raise NotEquivariant("coefficient ranks are not invariant")
        for r, p in self.coefficient_action.items():
            if p.shape != (G.order, r):
                raise ModuleError(f"coefficient action for rank {r} has the wrong shape")
            if not GroupAction(G, p).is_action():
                raise ModuleError(f"coefficient action for rank {r} is not a group action")

    def coefficient_matrix(self, g: int, rank: int) -> np.ndarray:
        """Permutation matrix of ``g`` on the rank-``rank`` coefficients."""
        p = self.coefficient_action.get(rank)
        if p is None or g == 0:
            return np.eye(rank, dtype=np.int64)
        P = np.zeros((rank, rank), dtype=np.int64)
        P[p[g], np.arange(rank)] = 1
        return P

    def orbits(self) -> list[list[int]]:
        return GroupAction(self.group, self.action).orbits()

    def orbit_representatives(self) -> list[int]:
        return [orb[0] for orb in self.orbits()]

    def same_as(self, other: "GeometricModule") -> bool:
        if self is other:
            return True
        return (
            self.space is other.space
            and self.modulus == other.modulus
            and np.array_equal(self.group.table, other.group.table)
            and np.array_equal(self.pi_x, other.pi_x)
            and np.array_equal(self.pi_n, other.pi_n)
            and np.array_equal(self.ranks, other.ranks)
            and np.array_equal(self.action, other.action)
            and self.coefficient_action.keys() == other.coefficient_action.keys()
            and all(np.array_equal(v, other.coefficient_action[k]) for k, v in self.coefficient_action.items())
        )

    def _kw(self) -> dict:
        return dict(
            group=self.group,
            space_action=self.space_action,
            modulus=self.modulus,
            control=self.control,
            support=self.support,
            compact=self.compact,
            concentrated=self.concentrated,
            coefficient_action=self.coefficient_action,
            n_max=self.n_max,
        )

    def replace(self, **kw) -> "GeometricModule":
        """Copy with some fields changed (``pi_x``, ``pi_n``, ``ranks``, flags...)."""
        args = dict(pi_x=self.pi_x, pi_n=self.pi_n, ranks=self.ranks, action=self.action, **self._kw())
        args.update(kw)
        space = args.pop("space", self.space)
        return GeometricModule(space, args.pop("pi_x"), args.pop("pi_n"), args.pop("ranks"), **args)

    def restrict(self, indices: Iterable[int]) -> tuple["GeometricModule", np.ndarray]:
        """Submodule on an invariant subset; returns it with the old indices."""
        idx = np.array(sorted(set(int(i) for i in indices)), dtype=np.int64)
        pos = np.full(self.size, -1, dtype=np.int64)
        pos[idx] = np.arange(len(idx))
        sub_action = pos[self.action[:, idx]] if len(idx) else np.zeros((self.group.order, 0), dtype=np.int64)
        if np.any(sub_action < 0):
            raise ModuleError("subset is not invariant under the group")
        sub = GeometricModule(
            self.space, self.pi_x[idx], self.pi_n[idx], self.ranks[idx], action=sub_action, **self._kw()
        )
        return sub, idx

    @classmethod
    def from_orbits(
        cls,
        space: FiniteMetricSpace,
        reps: Sequence[tuple[int, int, int]],
        *,
        group: FiniteGroup | None = None,
        space_action: GroupAction | None = None,
        **kw,
    ) -> "GeometricModule":
        """Free orbits ``G.x``: one ``(x, n, rank)`` per orbit.

        Point ``s = k*|G| + g`` is ``g`` applied to the k-th representative.
        """
        group = group if group is not None else FiniteGroup.trivial()
        if space_action is None:
            space_action = space.action if group.order > 1 else GroupAction.trivial(space.size)
        order = group.order
        pi_x, pi_n, ranks = [], [], []
        for x, n, r in reps:
            for g in range(order):
                pi_x.append(int(space_action.perm[g, x]))
                pi_n.append(n)
                ranks.append(r)
        k = len(reps)
        base = np.arange(k)[:, None] * order
        action = np.empty((order, k * order), dtype=np.int64)
        for h in range(order):
            action[h] = (base + group.table[h][None, :]).reshape(-1)
        return cls(space, pi_x, pi_n, ranks, group=group, action=action, space_action=space_action, **kw)

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "pi_x": self.pi_x.tolist(),
            "pi_n": self.pi_n.tolist(),
            "ranks": self.ranks.tolist(),
            "group_order": self.group.order,
            "action": self.action.tolist(),
            "modulus": self.modulus,
            "control": self.control,
            "support": self.support,
            "compact": None if self.compact is None else sorted(self.compact),
            "concentrated": self.concentrated,
            "coefficient_action": {str(r): p.tolist() for r, p in sorted(self.coefficient_action.items())},
            "n_max": self.n_max,
        }

    @classmethod
    def from_json(cls, obj: dict, space: FiniteMetricSpace, group: FiniteGroup | None = None,
                  space_action: GroupAction | None = None) -> "GeometricModule":
        return cls(
            space,
            obj["pi_x"],
            obj["pi_n"],
            obj["ranks"],
            group=group,
            action=np.array(obj["action"], dtype=np.int64).reshape(obj["group_order"], obj["size"]),
            space_action=space_action,
            modulus=obj["modulus"],
            control=obj["control"],
            support=obj["support"],
            compact=obj["compact"],
            concentrated=obj["concentrated"],
            coefficient_action={int(r): np.array(p) for r, p in obj["coefficient_action"].items()},
            n_max=obj["n_max"],
        )


class ControlledMorphism:
    """Sparse matrix of coefficient maps; zero blocks are never stored."""

    def __init__(
        self,
        source: GeometricModule,
        target: GeometricModule,
        entries: dict[tuple[int, int], np.ndarray] | None = None,
        *,
        check: bool = True,
    ):
        if source.space is not target.space:
            raise ModuleError("source and target must live over the same space")
        if source.modulus != target.modulus:
            raise ModuleError("source and target use different coefficient rings")
        if source.group.order != target.group.order or not np.array_equal(source.group.table, target.group.table):
            raise ModuleError("source and target carry different groups")
        self.source = source
        self.target = target
        self.entries: dict[tuple[int, int], np.ndarray] = {}
        m = source.modulus
        for (s, t), a in (entries or {}).items():
            s, t = int(s), int(t)
            if not (0 <= s < source.size and 0 <= t < target.size):
                raise ModuleError(f"entry ({s}, {t}) is out of range")
            a = _reduce(np.asarray(a, dtype=np.int64), m)
            shape = (int(target.ranks[t]), int(source.ranks[s]))
            if a.shape != shape:
                raise ModuleError(f"entry ({s}, {t}) has shape {a.shape}, expected {shape}")
            if a.any():
                self.entries[(s, t)] = a
        self._propagation = None
        if check:
            w = self.equivariance_witness()
            if w is not None:
                raise NotEquivariant(f"entry {w[1:]} is not carried to its translate by {w[0]}")

    def __repr__(self) -> str:
        return f"ControlledMorphism({self.source.size} -> {self.target.size}, {len(self.entries)} entries)"

    @property
    def modulus(self) -> int | None:
        return self.source.modulus

    def is_zero(self) -> bool:
        return not self.entries

    def entry(self, s: int, t: int) -> np.ndarray:
        a = self.entries.get((s, t))
        if a is None:
            return np.zeros((int(self.target.ranks[t]), int(self.source.ranks[s])), dtype=np.int64)
        return a

    def translate_entry(self, g: int, s: int, t: int) -> np.ndarray:
        """``g.phi[s, t]``: conjugation by the coefficient permutations."""
        return translate_matrix(self.source, self.target, g, self.entry(s, t))

    def equivariance_witness(self):
        G = self.source.group
        if G.order == 1:
            return None
        sa, ta = self.source.action, self.target.action
        for (s, t) in self.entries:
            for g in range(1, G.order):
                want = self.translate_entry(g, s, t)
                if not np.array_equal(self.entry(int(sa[g, s]), int(ta[g, t])), want):
                    return (g, s, t)
        return None

    def is_equivariant(self) -> bool:
        return self.equivariance_witness() is None

    # -- arithmetic ------------------------------------------------------

    def _same_ends(self, other: "ControlledMorphism") -> None:
        if not (self.source.same_as(other.source) and self.target.same_as(other.target)):
            raise ModuleError("morphisms are not parallel")

    def __add__(self, other: "ControlledMorphism") -> "ControlledMorphism":
        self._same_ends(other)
        out = dict(self.entries)
        for k, a in other.entries.items():
            out[k] = out[k] + a if k in out else a
        return ControlledMorphism(self.source, self.target, out, check=False)

    def __neg__(self) -> "ControlledMorphism":
        return ControlledMorphism(self.source, self.target, {k: -a for k, a in self.entries.items()}, check=False)

    def __sub__(self, other: "ControlledMorphism") -> "ControlledMorphism":
        return self + (-other)

    def __matmul__(self, other: "ControlledMorphism") -> "ControlledMorphism":
        return compose(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ControlledMorphism):
            return NotImplemented
        if not (self.source.same_as(other.source) and self.target.same_as(other.target)):
            return False
        return self.entries.keys() == other.entries.keys() and all(
            np.array_equal(a, other.entries[k]) for k, a in self.entries.items()
        )

    __hash__ = None

    @classmethod
    def identity(cls, module: GeometricModule) -> "ControlledMorphism":
        return cls(module, module, {(s, s): np.eye(int(r), dtype=np.int64) for s, r in enumerate(module.ranks)}, check=False)

    @classmethod
    def zero(cls, source: GeometricModule, target: GeometricModule) -> "ControlledMorphism":
        return cls(source, target, {}, check=False)

    # -- control ---------------------------------------------------------

    def propagation(self) -> tuple:
        """``(alpha_X, alpha_N)``: exact maxima over nonzero entries, ``(0, 0)`` for zero."""
        if self._propagation is None:
            ax, an = 0, 0
            X = self.source.space
            for s, t in self.entries:
                d = X.dist(int(self.source.pi_x[s]), int(self.target.pi_x[t]))
                if d > ax:
                    ax = d
                dn = abs(int(self.source.pi_n[s]) - int(self.target.pi_n[t]))
                if dn > an:
                    an = dn
            self._propagation = (_num(ax), an)
        return self._propagation

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "entries": [[s, t, a.tolist()] for (s, t), a in sorted(self.entries.items())],
            "propagation": list(self.propagation()),
        }

    @classmethod
    def from_json(cls, obj: dict, source: GeometricModule, target: GeometricModule) -> "ControlledMorphism":
        entries = {(s, t): np.array(a, dtype=np.int64).reshape(int(target.ranks[t]), int(source.ranks[s]))
                   for s, t, a in obj["entries"]}
        return cls(source, target, entries)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def translate_matrix(source: GeometricModule, target: GeometricModule, g: int, a: np.ndarray) -> np.ndarray:
    Pt = target.coefficient_matrix(g, a.shape[0])
    Ps = source.coefficient_matrix(g, a.shape[1])
    return _reduce(Pt @ a @ Ps.T, source.modulus)


def compose(phi: ControlledMorphism, psi: ControlledMorphism) -> ControlledMorphism:
    """``phi o psi``: ``(phi psi)[s, s''] = sum_{s'} phi[s', s''] @ psi[s, s']``."""
    if not psi.target.same_as(phi.source):
        raise ModuleError("target of the first morphism is not the source of the second")
    by_source: dict[int, list[tuple[int, np.ndarray]]] = {}
    for (s1, s2), a in phi.entries.items():
        by_source.setdefault(s1, []).append((s2, a))
    out: dict[tuple[int, int], np.ndarray] = {}
    for (s, s1), b in psi.entries.items():
        for s2, a in by_source.get(s1, ()):
            prod = a @ b
            key = (s, s2)
            out[key] = out[key] + prod if key in out else prod
    return ControlledMorphism(psi.source, phi.target, out, check=False)


def is_controlled(phi: ControlledMorphism, alpha_x, alpha_n=None) -> bool:
    """Propagation at most ``alpha`` in each constrained coordinate."""
    ax, an = phi.propagation()
    if _as_number(ax) > alpha_x:
        return False
    return alpha_n is None or an <= alpha_n


def _as_number(x):
    if isinstance(x, str):
        return float("inf") if x == "inf" else Fraction(x)
    return x


# -- decorations ---------------------------------------------------------------

@dataclass
class DecorationReport:
    checks: dict[str, CheckResult] = field(default_factory=dict)
    profile: list[tuple] | None = None

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "checks": {k: {"ok": v.ok, "witness": None if v.witness is None else [_num(w) for w in v.witness]}
                       for k, v in sorted(self.checks.items())},
            "profile": None if self.profile is None else [[_num(e), t] for e, t in self.profile],
        }


def _module_checks(M: GeometricModule, prefix: str, out: dict) -> None:
    out[f"{prefix}locally-finite"] = CheckResult(True)  # finite S
    if M.control == "C":
        bad = np.nonzero(M.pi_n != 0)[0]
        out[f"{prefix}C"] = CheckResult(False, (int(bad[0]),)) if len(bad) else CheckResult(True)
    if M.control == "T":
        out[f"{prefix}T"] = CheckResult(True)  # finite S has finite N-image
    if M.support == "compact":
        if M.compact is None:
            out[f"{prefix}compact"] = CheckResult(True)  # finite X is compact
        else:
            bad = [s for s in range(M.size) if int(M.pi_x[s]) not in M.compact]
            out[f"{prefix}compact"] = CheckResult(False, (bad[0],)) if bad else CheckResult(True)


def control_profile(phi: ControlledMorphism, depth: int = 8) -> list[tuple[Fraction, int]]:
    """Minimal ``t0`` with ``d(pi_X s, pi_X s') < eps`` whenever ``pi_N(s) > t0``.

    Evaluated for ``eps`` in ``1, 1/2, ..., 1/2**depth``.
    """
    X = phi.source.space
    rows = []
    for s, t in phi.entries:
        rows.append((X.dist(int(phi.source.pi_x[s]), int(phi.target.pi_x[t])), int(phi.source.pi_n[s])))
    out = []
    for k in range(depth + 1):
        eps = Fraction(1, 2**k)
        bad = [n for d, n in rows if d >= eps]
        out.append((eps, max(bad) if bad else 0))
    return out


def check_decoration(obj, depth: int = 8) -> DecorationReport:
    """Evaluate the decoration flags carried by a module or morphism.

    For morphisms the report also includes the control profile ``eps -> t0``.
    """
    rep = DecorationReport()
    if isinstance(obj, GeometricModule):
        _module_checks(obj, "", rep.checks)
        return rep
    phi: ControlledMorphism = obj
    _module_checks(phi.source, "source-", rep.checks)
    _module_checks(phi.target, "target-", rep.checks)
    rep.checks["finite-rows-columns"] = CheckResult(True)
    if "C" in (phi.source.control, phi.target.control):
        moving = [(s, t) for s, t in sorted(phi.entries) if phi.source.pi_n[s] != phi.target.pi_n[t]]
        rep.checks["C-morphism"] = CheckResult(False, moving[0]) if moving else CheckResult(True)
    if phi.source.concentrated or phi.target.concentrated:
        off = [(s, t) for s, t in sorted(phi.entries) if phi.source.pi_x[s] != phi.target.pi_x[t]]
        rep.checks["concentrated"] = CheckResult(False, off[0]) if off else CheckResult(True)
    w = phi.equivariance_witness()
    rep.checks["equivariant"] = CheckResult(w is None, w)
    rep.profile = control_profile(phi, depth)
    return rep


# -- Karoubi factorization ------------------------------------------------------

@dataclass
class KaroubiFactorization:
    """``A = A' + A''`` with ``phi = incl o phi'`` and ``psi = psi' o proj``."""

    mode: str
    subset: np.ndarray
    sub: GeometricModule
    inclusion: ControlledMorphism
    projection: ControlledMorphism
    phi: ControlledMorphism | None
    psi: ControlledMorphism | None
    phi_prime: ControlledMorphism | None
    psi_prime: ControlledMorphism | None

    def verify(self) -> CheckResult:
        if not compose(self.projection, self.inclusion) == ControlledMorphism.identity(self.sub):
            return CheckResult(False, ("projection-inclusion",))
        if self.phi is not None and not compose(self.inclusion, self.phi_prime) == self.phi:
            return CheckResult(False, ("phi",))
        if self.psi is not None and not compose(self.psi_prime, self.projection) == self.psi:
            return CheckResult(False, ("psi",))
        return CheckResult(True)


def inclusion_projection(A: GeometricModule, subset) -> tuple[GeometricModule, np.ndarray, ControlledMorphism, ControlledMorphism]:
    sub, idx = A.restrict(subset)
    inc = {(i, int(s)): np.eye(int(A.ranks[s]), dtype=np.int64) for i, s in enumerate(idx)}
    pro = {(int(s), i): np.eye(int(A.ranks[s]), dtype=np.int64) for i, s in enumerate(idx)}
    return sub, idx, ControlledMorphism(sub, A, inc, check=False), ControlledMorphism(A, sub, pro, check=False)


def karoubi_factorize(
    phi: ControlledMorphism | None = None,
    psi: ControlledMorphism | None = None,
    mode: str = "OT",
    alpha=None,
    compact: Iterable[int] | None = None,
) -> KaroubiFactorization:
    """Factor ``phi: U -> A`` and/or ``psi: A -> U'`` through one summand of ``A``.

    OT mode: ``U``, ``U'`` are T-objects with N-image at most ``L`` and
    ``A' = pi_N^{-1}[0, L + alpha]``. LF mode: ``U``, ``U'`` are compact
    objects over ``K`` and ``A' = pi_X^{-1}(B_alpha(K))``. ``alpha`` defaults
    to the relevant propagation of the given morphisms.
    """
    if phi is None and psi is None:
        raise ModuleError("give at least one morphism")
    A = phi.target if phi is not None else psi.source
    if phi is not None and psi is not None and not psi.source.same_as(A):
        raise ModuleError("phi and psi must share the big object")
    small = [m for m in (phi.source if phi is not None else None, psi.target if psi is not None else None) if m is not None]
    props = [m.propagation() for m in (phi, psi) if m is not None]
    if mode == "OT":
        for U in small:
            if U.control not in ("T", "C"):
                raise ModuleError("OT mode needs T-objects on the small side")
        if A.control != "O":
            raise ModuleError("OT mode needs an O-object as the big side")
        a = max(p[1] for p in props) if alpha is None else alpha
        L = max((int(U.pi_n.max()) for U in small if U.size), default=0)
        subset = np.nonzero(A.pi_n <= L + a)[0]
    elif mode == "LF":
        for U in small:
            if U.support != "compact":
                raise ModuleError("LF mode needs compact objects on the small side")
        a = max(_as_number(p[0]) for p in props) if alpha is None else alpha
        if compact is None:
            K = set()
            for U in small:
                K |= set(U.compact) if U.compact is not None else set(U.pi_x.tolist())
        else:
            K = set(int(k) for k in compact)
        K = set(A.space_action.perm[:, sorted(K)].reshape(-1).tolist()) if K else set()
        X = A.space
        near = np.zeros(X.size, dtype=bool)
        for k in K:
            near |= X.row(k) <= a
        subset = np.nonzero(near[A.pi_x])[0]
    else:
        raise ModuleError("mode must be OT or LF")
    sub, idx, inc, pro = inclusion_projection(A, subset)
    pos = {int(s): i for i, s in enumerate(idx)}
    phi_p = psi_p = None
    if phi is not None:
        ent = {}
        for (u, s), m in phi.entries.items():
            if s not in pos:
                raise ModuleError(f"entry ({u}, {s}) escapes the summand")
            ent[(u, pos[s])] = m
        phi_p = ControlledMorphism(phi.source, sub, ent, check=False)
    if psi is not None:
        ent = {}
        for (s, u), m in psi.entries.items():
            if s not in pos:
                raise ModuleError(f"entry ({s}, {u}) escapes the summand")
            ent[(pos[s], u)] = m
        psi_p = ControlledMorphism(sub, psi.target, ent, check=False)
    return KaroubiFactorization(mode, idx, sub, inc, pro, phi, psi, phi_p, psi_p)


# -- shift functors -------------------------------------------------------------

def shift_functor(n: int, obj):
    """``F^n``: add ``n`` to every N-coordinate, leave entries unchanged."""
    if n < 0:
        raise ModuleError("shift must be nonnegative")
    if isinstance(obj, GeometricModule):
        if n == 0:
            return obj
        if obj.size and int(obj.pi_n.max()) + n > obj.n_max:
            raise WindowExceeded(f"shift by {n} leaves the window [0, {obj.n_max}]")
        return obj.replace(pi_n=obj.pi_n + n)
    phi: ControlledMorphism = obj
    src = shift_functor(n, phi.source)
    tgt = src if phi.target is phi.source else shift_functor(n, phi.target)
    return ControlledMorphism(src, tgt, phi.entries, check=False)


# -- quotient categories --------------------------------------------------------

@dataclass
class QuotientVerdict:
    status: str  # "equal", "distinct" or "undecided"
    factor: GeometricModule | None = None
    maps: tuple | None = None
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.status == "equal"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "factor_size": None if self.factor is None else self.factor.size,
            "witness": None if self.witness is None else [_num(w) for w in self.witness],
        }


class Admissible:
    """Objects allowed as factoring objects, with a propagation budget.

    ``budget=(beta_X, beta_N)`` bounds both factor maps; ``None`` means the
    propagation of the difference being tested. Subclasses with an exact
    per-entry criterion return ``points``/``levels``; a bare predicate only
    supports the sufficient search.
    """

    exact = False

    def __init__(self, admits: Callable[[GeometricModule], bool] | None = None, budget=None):
        self._admits = admits
        self.budget = budget

    def admits(self, M: GeometricModule) -> bool:
        return bool(self._admits(M)) if self._admits is not None else False

    def points(self, X: FiniteMetricSpace, action: GroupAction) -> np.ndarray | None:
        return None

    def levels(self, n_max: int) -> np.ndarray | None:
        return None


class FiniteLevel(Admissible):
    """Objects whose N-image lies in ``[0, L]``."""

    exact = True

    def __init__(self, level: int, budget=None):
        super().__init__(None, budget)
        self.level = int(level)

    def admits(self, M: GeometricModule) -> bool:
        return M.size == 0 or int(M.pi_n.max()) <= self.level

    def points(self, X, action):
        return np.arange(X.size)

    def levels(self, n_max):
        return np.arange(min(self.level, n_max) + 1)


class CompactSupport(Admissible):
    """Objects whose spatial image lies in the (invariant hull of) ``K``."""

    exact = True

    def __init__(self, compact: Iterable[int], budget=None):
        super().__init__(None, budget)
        self.compact = frozenset(int(k) for k in compact)

    def _hull(self, action: GroupAction) -> frozenset[int]:
        if not self.compact:
            return frozenset()
        return frozenset(action.perm[:, sorted(self.compact)].reshape(-1).tolist())

    def admits(self, M: GeometricModule) -> bool:
        hull = self._hull(M.space_action)
        return all(int(x) in hull for x in M.pi_x)

    def points(self, X, action):
        return np.array(sorted(self._hull(action)), dtype=np.int64)

    def levels(self, n_max):
        return np.arange(n_max + 1)


def _relocate(D: ControlledMorphism, points: np.ndarray, levels: np.ndarray, bx, bn):
    """Factor ``D`` through one new point per nonzero entry.

    Entry ``e = (s, s'')`` is routed through ``t_e`` placed at an allowed point
    within ``bx`` of both ends and an allowed level within ``bn`` of both.
    Returns ``(T, a, b)`` or ``("obstruction", s, s'')``.
    """
    A, B = D.source, D.target
    X, G = A.space, A.group
    keys = sorted(D.entries)
    where = {k: i for i, k in enumerate(keys)}
    place = [None] * len(keys)
    for i, (s, t) in enumerate(keys):
        if place[i] is not None:
            continue
        xs, xt = int(A.pi_x[s]), int(B.pi_x[t])
        ns, nt = int(A.pi_n[s]), int(B.pi_n[t])
        rs, rt = X.row(xs), X.row(xt)
        ok_pts = points[(rs[points] <= bx) & (rt[points] <= bx)] if len(points) else points
        ok_lvl = levels[(np.abs(levels - ns) <= bn) & (np.abs(levels - nt) <= bn)]
        if not len(ok_pts) or not len(ok_lvl):
            return ("obstruction", s, t)
        x0, n0 = int(ok_pts[0]), int(ok_lvl[0])
        for g in range(G.order):
            j = where[(int(A.action[g, s]), int(B.action[g, t]))]
            place[j] = (int(A.space_action.perm[g, x0]), n0)
    order_ = G.order
    act = np.empty((order_, len(keys)), dtype=np.int64)
    for j, (s, t) in enumerate(keys):
        for g in range(order_):
            act[g, j] = where[(int(A.action[g, s]), int(B.action[g, t]))]
    T = GeometricModule(
        X,
        [p[0] for p in place],
        [p[1] for p in place],
        [int(A.ranks[s]) for s, _ in keys],
        group=G,
        action=act,
        space_action=A.space_action,
        modulus=A.modulus,
        coefficient_action=A.coefficient_action,
        n_max=A.n_max,
    )
    a = {(s, j): np.eye(int(A.ranks[s]), dtype=np.int64) for j, (s, _) in enumerate(keys)}
    b = {(j, t): D.entries[(s, t)] for j, (s, t) in enumerate(keys)}
    return T, ControlledMorphism(A, T, a, check=False), ControlledMorphism(T, B, b, check=False)


def _within(phi: ControlledMorphism, bx, bn) -> bool:
    return is_controlled(phi, bx, bn)


def quotient_equal(phi: ControlledMorphism, psi: ControlledMorphism, admissible: Admissible) -> QuotientVerdict:
    """Does ``phi - psi`` factor through an admissible object within budget?

    Tries the support subobjects of source and target first, then routing
    each entry through its own point. Exact predicates also certify the
    negative answer: a nonzero entry with no admissible routing point is an
    obstruction for every factorization. Other predicates report
    ``undecided`` when the search fails.
    """
    D = phi - psi
    A, B = D.source, D.target
    if D.is_zero():
        empty, _ = A.restrict([])
        return QuotientVerdict("equal", empty, (ControlledMorphism.zero(A, empty), ControlledMorphism.zero(empty, B)))
    if admissible.budget is None:
        bx, bn = D.propagation()
        bx = _as_number(bx)
    else:
        bx, bn = admissible.budget

    src_support = sorted({int(A.action[g, s]) for s, _ in D.entries for g in range(A.group.order)})
    sub, idx, inc, pro = inclusion_projection(A, src_support)
    if admissible.admits(sub):
        b = compose(D, inc)
        if _within(pro, bx, bn) and _within(b, bx, bn):
            return QuotientVerdict("equal", sub, (pro, b))
    tgt_support = sorted({int(B.action[g, t]) for _, t in D.entries for g in range(B.group.order)})
    sub, idx, inc, pro = inclusion_projection(B, tgt_support)
    if admissible.admits(sub):
        a = compose(pro, D)
        if _within(a, bx, bn) and _within(inc, bx, bn):
            return QuotientVerdict("equal", sub, (a, inc))

    pts = admissible.points(A.space, A.space_action)
    lvls = admissible.levels(A.n_max)
    if pts is not None and lvls is not None:
        res = _relocate(D, pts, lvls, bx, bn)
        if res[0] == "obstruction":
            return QuotientVerdict("distinct", witness=res[1:])
        T, a, b = res
        if admissible.admits(T) and compose(b, a) == D:
            return QuotientVerdict("equal", T, (a, b))
        raise ModuleError("entry routing produced an invalid factorization")
    return QuotientVerdict("undecided")


# -- random instances -----------------------------------------------------------

def random_module(
    rng: np.random.Generator,
    space: FiniteMetricSpace,
    orbits: int,
    *,
    group: FiniteGroup | None = None,
    space_action: GroupAction | None = None,
    max_rank: int = 2,
    levels: Sequence[int] = (0, 1, 2, 3),
    **kw,
) -> GeometricModule:
    reps = [
        (int(rng.integers(space.size)), int(rng.choice(levels)), int(rng.integers(1, max_rank + 1)))
        for _ in range(orbits)
    ]
    return GeometricModule.from_orbits(space, reps, group=group, space_action=space_action, **kw)


def random_morphism(
    rng: np.random.Generator,
    source: GeometricModule,
    target: GeometricModule,
    *,
    density: float = 0.3,
    max_x=None,
    max_n: int | None = None,
    low: int = -2,
    high: int = 2,
) -> ControlledMorphism:
    """Random equivariant morphism, seeded on source orbit representatives.

    The action on ``S`` is free, so each orbit of pairs ``(s, s')`` has exactly
    one member with ``s`` a representative; its matrix is chosen freely and
    translated to the rest of the orbit.
    """
    X = source.space
    entries: dict[tuple[int, int], np.ndarray] = {}
    for r in source.orbit_representatives():
        for t in range(target.size):
            if max_x is not None and X.dist(int(source.pi_x[r]), int(target.pi_x[t])) > max_x:
                continue
            if max_n is not None and abs(int(source.pi_n[r]) - int(target.pi_n[t])) > max_n:
                continue
            if rng.random() >= density:
                continue
            m = rng.integers(low, high + 1, size=(int(target.ranks[t]), int(source.ranks[r])))
            for g in range(source.group.order):
                key = (int(source.action[g, r]), int(target.action[g, t]))
                entries[key] = translate_matrix(source, target, g, m)
    return ControlledMorphism(source, target, entries, check=False)
