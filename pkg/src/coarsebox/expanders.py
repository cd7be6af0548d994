"""The Margulis graphs ``Cay(SL2(F_p), {A, B})`` and their diagnostics."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .groups import MARGULIS_A, MARGULIS_B, QuotientTower, inverse, margulis_group
from .metric import FiniteMetricSpace, cayley_graph

DEFAULT_MAX_PRIME = 31
EIGEN_TOL = 1e-8
DENSE_SPECTRUM_BELOW = 400
MARGULIS_CONSTANT = 0.756


class ExpanderError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % q for q in range(2, math.isqrt(n) + 1))


def margulis_graph(p: int, max_prime: int = DEFAULT_MAX_PRIME) -> FiniteMetricSpace:
    """``Gamma_p`` with the symmetrized generators ``A, A^-1, B, B^-1`` reduced mod p."""
    if not is_prime(p):
        raise ExpanderError(f"{p} is not prime")
    if p == 2:
        raise ExpanderError("p = 2 is degenerate: A and B both reduce to the identity")
    if p > max_prime:
        raise ExpanderError(f"p = {p} exceeds the cap {max_prime}")
    tower = QuotientTower(margulis_group(), [p])
    return cayley_graph(tower.stage_group(0))


def girth(space: FiniteMetricSpace, roots=None) -> int | None:
    """Shortest cycle length, or None for a forest.

    BFS from each root; a non-tree edge ``(u, v)`` closes a cycle of length at
    most ``d(u) + d(v) + 1``, exact when the root lies on a shortest cycle.
    Vertex-transitive spaces only need one root.
    """
    nb = space.neighbors
    n = space.size
    if roots is None:
        roots = [0] if space.homogeneous and n else range(n)
    best = math.inf
    for r in roots:
        dist = {r: 0}
        parent = {r: -1}
        queue = deque([r])
        while queue:
            u = queue.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for v in nb[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    queue.append(v)
                elif v != parent[u]:
                    best = min(best, dist[u] + dist[v] + 1)
    return None if best == math.inf else int(best)


def relator_girth(p: int, max_length: int = 16) -> int | None:
    """Shortest freely reduced word of length >= 3 in ``A^+-1, B^+-1`` equal to I mod p.

    Enumerates words breadth-first, independent of any graph search.
    """
    gens = [MARGULIS_A, MARGULIS_B]
    letters = []
    for g in gens:
        letters += [g, inverse(g)]
    mats = [tuple(tuple(x % p for x in row) for row in m.data) for m in letters]
    ident = ((1, 0), (0, 1))

    def mul(a, b):
        return (
            ((a[0][0] * b[0][0] + a[0][1] * b[1][0]) % p, (a[0][0] * b[0][1] + a[0][1] * b[1][1]) % p),
            ((a[1][0] * b[0][0] + a[1][1] * b[1][0]) % p, (a[1][0] * b[0][1] + a[1][1] * b[1][1]) % p),
        )

    level = [(mats[i], i) for i in range(4)]
    for length in range(2, max_length + 1):
        nxt = []
        for m, last in level:
            for i in range(4):
                if i == last ^ 1:  # inverse letter
                    continue
                w = mul(m, mats[i])
                if length >= 3 and w == ident:
                    return length
                nxt.append((w, i))
        level = nxt
    return None


@dataclass
class GraphReport:
    order: int
    degree: int
    regular: bool
    girth: int | None
    diameter: int
    diameter_over_girth: Fraction | None
    lambda2: float
    error_bound: float
    converged: bool
    connected: bool
    label: str = ""

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "order": self.order,
            "degree": self.degree,
            "regular": self.regular,
            "girth": self.girth,
            "diameter": self.diameter,
            "diameter_over_girth": None if self.diameter_over_girth is None else str(self.diameter_over_girth),
            "lambda2": round(self.lambda2, 10),
            "error_bound": float(f"{self.error_bound:.3e}"),
            "converged": self.converged,
            "connected": self.connected,
        }


def adjacency(space: FiniteMetricSpace) -> csr_matrix:
    nb = space.neighbors
    rows = [u for u, vs in enumerate(nb) for _ in vs]
    cols = [v for vs in nb for v in vs]
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(space.size, space.size))


def second_eigenvalue(space: FiniteMetricSpace, seed: int = 0, tol: float = EIGEN_TOL,
                      maxiter: int | None = None) -> tuple[float, float, bool]:
    """``(lambda_2, error bound, converged)`` for the adjacency operator.

    The top eigenvector is deflated by pushing its eigenvalue below the
    spectrum (shift by ``lambda_1 + d + 1``); Lanczos then returns the largest
    remaining eigenvalue. The error bound is the residual norm, which bounds
    the distance to the nearest true eigenvalue of a symmetric operator.
    Small graphs use a dense solver with machine-precision bound.
    """
    n = space.size
    if n < 2:
        raise ExpanderError("need at least two vertices")
    A = adjacency(space)
    if n <= DENSE_SPECTRUM_BELOW:
        w = np.linalg.eigvalsh(A.toarray())
        return float(w[-2]), float(n * np.finfo(float).eps * max(1.0, abs(w).max())), True
    rng = np.random.default_rng(seed)
    degrees = np.asarray(A.sum(axis=1)).ravel()
    dmax = float(degrees.max())
    if np.all(degrees == dmax):
        lam1, v1 = dmax, np.ones(n) / math.sqrt(n)
    else:
        w, V = eigsh(A, k=1, which="LA", tol=tol, v0=rng.standard_normal(n))
        lam1, v1 = float(w[0]), V[:, 0]
    shift = lam1 + dmax + 1

    def matvec(x):
        x = np.asarray(x).ravel()
        return A @ x - shift * v1 * (v1 @ x)

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    converged = True
    try:
        w, V = eigsh(op, k=1, which="LA", tol=tol, v0=rng.standard_normal(n), maxiter=maxiter,
                     ncv=min(n - 1, 40))
        lam, v = float(w[0]), V[:, 0]
    except ArpackNoConvergence as err:
        converged = False
        if len(err.eigenvalues) == 0:
            return float("nan"), float("inf"), False
        lam, v = float(err.eigenvalues[0]), err.eigenvectors[:, 0]
    resid = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
    return lam, resid, converged


def spectral_report(space: FiniteMetricSpace, label: str = "", seed: int = 0) -> GraphReport:
    if not space.connected():
        raise ExpanderError("spectral report needs a connected graph")
    degrees = [len(nb) for nb in space.neighbors]
    g = girth(space)
    diam = int(space.diameter())
    lam, err, conv = second_eigenvalue(space, seed=seed)
    return GraphReport(
        order=space.size,
        degree=max(degrees),
        regular=len(set(degrees)) == 1,
        girth=g,
        diameter=diam,
        diameter_over_girth=None if g is None else Fraction(diam, g),
        lambda2=lam,
        error_bound=err,
        converged=conv,
        connected=True,
        label=label,
    )


@dataclass
class FamilySummary:
    primes: list[int]
    reports: list[GraphReport]
    girth_nondecreasing: bool
    max_ratio: Fraction | None
    slope: float
    reference_slope: float = MARGULIS_CONSTANT

    def to_json(self) -> dict:
        return {
            "primes": self.primes,
            "girth_nondecreasing": self.girth_nondecreasing,
            "max_diameter_over_girth": None if self.max_ratio is None else str(self.max_ratio),
            "girth_vs_log_order_slope": round(self.slope, 6),
            "reference_slope": self.reference_slope,
            "slope_note": "fit through the origin; the reference constant is asymptotic and not asserted",
        }


def girth_log_slope(orders, girths) -> float:
    """Least-squares slope of girth against ``log(order)`` through the origin."""
    x = np.log(np.asarray(orders, dtype=float))
    y = np.asarray(girths, dtype=float)
    return float((x @ y) / (x @ x))


def margulis_family(primes, max_prime: int = DEFAULT_MAX_PRIME, seed: int = 0) -> FamilySummary:
    reports = [spectral_report(margulis_graph(p, max_prime), label=f"p={p}", seed=seed) for p in primes]
    girths = [r.girth for r in reports]
    ratios = [r.diameter_over_girth for r in reports if r.diameter_over_girth is not None]
    return FamilySummary(
        primes=list(primes),
        reports=reports,
        girth_nondecreasing=all(a <= b for a, b in zip(girths, girths[1:])),
        max_ratio=max(ratios) if ratios else None,
        slope=girth_log_slope([r.order for r in reports], girths),
    )
