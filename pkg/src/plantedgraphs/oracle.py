"""Exact brute-force computations for tiny instances.

Everything here is exhaustive and budgeted: a computation either finishes
exactly or raises :class:`BudgetExceededError`. These functions are the
reference against which the scalable code paths are tested.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, InvalidParameterError
from .graph import DaryTree, Graph, Line, Star

DEFAULT_BUDGET = 10_000_000


class _Budget:
    __slots__ = ("left", "total", "what")

    def __init__(self, total, what):
        self.left = total
        self.total = total
        self.what = what

    def spend(self, k=1):
        self.left -= k
        if self.left < 0:
            raise BudgetExceededError(self.what, self.total)


@dataclass(frozen=True)
class CopyCount:
    embeddings: int
    copies: int
    aut_size: int


def aut_size(spec):
    """Order of the automorphism group of the planted structure."""
    if isinstance(spec, Line):
        return 2
    if isinstance(spec, Star):
        # Star{1} is a single edge: swapping its ends is the only symmetry
        return 2 if spec.K == 1 else math.factorial(spec.K)
    if isinstance(spec, DaryTree):
        if spec.h == 0:
            return 1
        if spec.D == 1:
            return 2
        return math.factorial(spec.D) ** spec.internal_count()
    raise InvalidParameterError(f"unsupported structure {spec!r}")


def _pattern(spec):
    k = spec.vertex_count()
    adj = [set() for _ in range(k)]
    for a, b in spec.local_edges():
        adj[a].add(b)
        adj[b].add(a)
    # BFS order so that every vertex after the first has an earlier neighbour
    order, seen = [], set()
    for start in range(k):
        if start in seen:
            continue
        seen.add(start)
        queue = [start]
        while queue:
            x = queue.pop(0)
            order.append(x)
            for y in sorted(adj[x]):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
    return adj, order


def count_embeddings(g, spec, budget=DEFAULT_BUDGET):
    """Injective maps of the structure into ``g`` sending edges to edges."""
    padj, order = _pattern(spec)
    k = len(order)
    if k > g.n:
        return 0
    gadj = [set(nb) for nb in g.adjacency_lists()]
    gdeg = [len(nb) for nb in gadj]
    pos = {v: i for i, v in enumerate(order)}
    # earlier-placed pattern neighbours of each pattern vertex
    back = [[w for w in padj[v] if pos[w] < pos[v]] for v in order]
    need = [len(padj[v]) for v in order]
    image = [-1] * k
    used = [False] * g.n
    b = _Budget(budget, "count_copies")

    def extend(i):
        if i == k:
            return 1
        anchors = back[i]
        if anchors:
            cands = gadj[image[pos[anchors[0]]]]
        else:
            cands = range(g.n)
        total = 0
        for c in cands:
            b.spend()
            if used[c] or gdeg[c] < need[i]:
                continue
            if any(image[pos[a]] not in gadj[c] for a in anchors[1:]):
                continue
            image[i] = c
            used[c] = True
            total += extend(i + 1)
            used[c] = False
        image[i] = -1
        return total

    return extend(0)


def count_copies(g, spec, budget=DEFAULT_BUDGET):
    emb = count_embeddings(g, spec, budget)
    a = aut_size(spec)
    if emb % a:
        raise AssertionError(f"embedding count {emb} not divisible by |Aut| = {a}")
    return CopyCount(embeddings=emb, copies=emb // a, aut_size=a)


def _ordered_paths(g, K, budget, visit):
    adj = g.adjacency_lists()
    b = _Budget(budget, "count_k_paths")
    path = []
    on_path = [False] * g.n

    def walk(v):
        b.spend()
        path.append(v)
        on_path[v] = True
        if len(path) == K:
            visit(path)
        else:
            for w in adj[v]:
                if not on_path[w]:
                    walk(w)
        on_path[v] = False
        path.pop()

    for s in range(g.n):
        walk(s)


def count_k_paths(g, K, budget=DEFAULT_BUDGET):
    """Number of ordered sequences of ``K`` distinct vertices with consecutive pairs adjacent."""
    if K < 1:
        raise InvalidParameterError("K must be >= 1")
    count = 0

    def visit(_):
        nonlocal count
        count += 1

    _ordered_paths(g, K, budget, visit)
    return count


def _log_falling(n, k):
    return math.lgamma(n + 1) - math.lgamma(n - k + 1)


def log_expected_copies(n, spec, lam):
    """log E0[X] = log(C(n,K) K! / |Aut|) + e * log(lam/n)."""
    k = spec.vertex_count()
    if k > n:
        return -math.inf
    return _log_falling(n, k) - math.log(aut_size(spec)) + spec.edge_count() * math.log(lam / n)


def exact_likelihood_ratio(g, spec, lam, budget=DEFAULT_BUDGET):
    """``X / E0[X]`` with ``X`` the exact number of copies of ``spec`` in ``g``."""
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if lam > g.n:
        raise InvalidParameterError(f"lambda must be <= n, got {lam}")
    x = count_copies(g, spec, budget).copies
    if x == 0:
        return 0.0
    return math.exp(math.log(x) - log_expected_copies(g.n, spec, lam))


@dataclass(frozen=True)
class IdentityReport:
    n: int
    spec: object
    lam: float
    graphs: int
    placements: int
    max_abs_error_P1_vs_LP0: float
    sum_P1: float
    E0_L: float

    def passes(self, tol=1e-12):
        return (
            self.max_abs_error_P1_vs_LP0 <= tol
            and abs(self.sum_P1 - 1.0) <= tol
            and abs(self.E0_L - 1.0) <= tol
        )


def exact_identity_check(n, spec, lam, budget=DEFAULT_BUDGET):
    """Check P1(g) = L(g) P0(g) over every graph on ``n`` labelled vertices.

    P1 is computed straight from the planting model: average, over all
    injective placements, of the probability of ``g`` given that the placed
    edges are forced present. L comes from exact copy counting. Sums use
    ``math.fsum``.
    """
    if n > 6:
        raise BudgetExceededError("exact_identity_check (n > 6)", budget)
    if not 0 < lam < n:
        raise InvalidParameterError(f"need 0 < lambda < n, got lambda={lam}, n={n}")
    pairs = list(itertools.combinations(range(n), 2))
    npairs = len(pairs)
    if (1 << npairs) > budget:
        raise BudgetExceededError("exact_identity_check", budget)
    bit = {pr: 1 << i for i, pr in enumerate(pairs)}
    k = spec.vertex_count()
    local = spec.local_edges()

    placements = Counter()
    for sigma in itertools.permutations(range(n), k):
        mask = 0
        for a, b in local:
            u, v = sigma[a], sigma[b]
            mask |= bit[(u, v) if u < v else (v, u)]
        placements[mask] += 1
    n_maps = sum(placements.values())
    weights = [(mask, cnt / n_maps, mask.bit_count()) for mask, cnt in placements.items()]

    p = lam / n
    lp, lq = math.log(p), math.log1p(-p)
    errs, p1s, lp0s = [], [], []
    for gmask in range(1 << npairs):
        e = gmask.bit_count()
        log_p0 = e * lp + (npairs - e) * lq
        p1 = math.fsum(
            w * math.exp((e - ec) * lp + (npairs - e) * lq)
            for mask, w, ec in weights
            if mask & gmask == mask
        )
        g = Graph(n, [pr for pr in pairs if gmask & bit[pr]])
        L = exact_likelihood_ratio(g, spec, lam, budget)
        lp0 = L * math.exp(log_p0)
        errs.append(abs(p1 - lp0))
        p1s.append(p1)
        lp0s.append(lp0)
    return IdentityReport(
        n=n,
        spec=spec,
        lam=lam,
        graphs=1 << npairs,
        placements=n_maps,
        max_abs_error_P1_vs_LP0=max(errs),
        sum_P1=math.fsum(p1s),
        E0_L=math.fsum(lp0s),
    )


def exact_E0_L2_line(n, K, lam, budget=DEFAULT_BUDGET):
    """Average of ``(n/lam)**S`` over all ordered K-paths on ``[n]``.

    ``S`` is the number of undirected edges the path shares with the fixed
    path ``0-1-...-(K-1)``.
    """
    if K < 2 or K > n:
        raise InvalidParameterError(f"need 2 <= K <= n, got K={K}, n={n}")
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    total = math.perm(n, K)
    if total > budget:
        raise BudgetExceededError("exact_E0_L2_line", budget)
    hist = Counter()
    for path in itertools.permutations(range(n), K):
        s = 0
        for a, b in zip(path, path[1:]):
            if abs(a - b) == 1 and a < K and b < K:
                s += 1
        hist[s] += 1
    x = n / lam
    return math.fsum(cnt * x**s for s, cnt in hist.items()) / total


@dataclass(frozen=True)
class MapPosterior:
    scores: tuple
    top: tuple


def map_posterior_line(g, K, budget=DEFAULT_BUDGET):
    """Per-vertex number of ordered K-paths through it, and the top-K vertices.

    Ties are broken towards lower vertex index.
    """
    scores = np.zeros(g.n, dtype=np.int64)

    def visit(path):
        scores[path] += 1

    _ordered_paths(g, K, budget, visit)
    order = sorted(range(g.n), key=lambda v: (-scores[v], v))
    top = tuple(sorted(order[:K]))
    return MapPosterior(scores=tuple(int(s) for s in scores), top=top)
