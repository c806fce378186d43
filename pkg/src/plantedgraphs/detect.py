"""Detection tests for planted lines, stars and D-ary trees."""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .graph import component_labels

H0, H1 = "H0", "H1"

DEFAULT_PATH_BUDGET = 1_000_000
DEFAULT_TREE_BUDGET = 200_000


@dataclass
class DetectionResult:
    test: str
    decision: str
    stats: dict = field(default_factory=dict)
    exact: bool = True

    @property
    def rejects_null(self):
        return self.decision == H1

    def to_dict(self):
        return {"test": self.test, "decision": self.decision, "exact": bool(self.exact), "stats": _jsonable(self.stats)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(stats):
    out = {}
    for k, v in stats.items():
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (np.floating,)):
            v = float(v)
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# Small-component counts


def small_component_counts(g):
    """Numbers ``(A1, A2, A3)`` of components with 1, 2 and 3 vertices."""
    if g.n == 0:
        return 0, 0, 0
    sizes = component_labels(g).sizes
    hist = np.bincount(sizes, minlength=4)
    return int(hist[1]), int(hist[2]), int(hist[3])


def component_count_test(g, K):
    """Decide H1 when ``k_hat = n - exp(lambda_hat) * A1`` reaches ``sqrt(K sqrt(n))``.

    ``lambda_hat = n A3 / (A1 A2)``; when ``A1 A2 = 0`` the edge-density
    estimate ``2|E|/n`` is used instead and ``stats["fallback"]`` is 1.
    """
    if g.n < 1:
        raise InvalidParameterError("component_count_test needs n >= 1")
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    n = g.n
    a1, a2, a3 = small_component_counts(g)
    if a1 * a2 > 0:
        lam_hat = n * a3 / (a1 * a2)
        fallback = 0
    else:
        lam_hat = 2.0 * g.m / n
        fallback = 1
    k_hat = n - math.exp(lam_hat) * a1
    t_n = math.sqrt(K * math.sqrt(n))
    stats = {
        "A1": a1, "A2": a2, "A3": a3,
        "lambda_hat": lam_hat, "k_hat": k_hat, "threshold": t_n,
        "K": K, "fallback": fallback,
    }
    return DetectionResult("components", H1 if k_hat >= t_n else H0, stats, True)


# ---------------------------------------------------------------------------
# Longest path


@dataclass(frozen=True)
class LongestPath:
    length: int  # in vertices
    path: tuple
    exact: bool


def _bfs_far(start, ind, ptr, members=None):
    """BFS from ``start``; returns the farthest vertex and the parent map."""
    parent = {start: -1}
    queue = deque([start])
    last = start
    while queue:
        u = queue.popleft()
        last = u
        for w in ind[ptr[u]:ptr[u + 1]]:
            if w not in parent:
                parent[w] = u
                queue.append(w)
    return last, parent


def _tree_diameter_path(start, ind, ptr):
    a, _ = _bfs_far(start, ind, ptr)
    b, parent = _bfs_far(a, ind, ptr)
    path = [b]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    return path


def _two_core(vertices, ind, ptr):
    """Vertices of the 2-core of the subgraph spanned by ``vertices`` (a whole component)."""
    deg = {v: ptr[v + 1] - ptr[v] for v in vertices}
    stack = [v for v, d in deg.items() if d <= 1]
    removed = set()
    while stack:
        v = stack.pop()
        if v in removed:
            continue
        removed.add(v)
        for w in ind[ptr[v]:ptr[v + 1]]:
            if w not in removed:
                deg[w] -= 1
                if deg[w] == 1:
                    stack.append(w)
    return [v for v in vertices if v not in removed]


def _longest_simple_path(vertices, ind, ptr, budget):
    """Exhaustive DFS over simple paths of one cyclic component.

    Only leaves and 2-core vertices can end a maximal path, so only they are
    used as start points. Returns ``(path, exhausted)``.
    """
    core = set(_two_core(vertices, ind, ptr))
    starts = [v for v in vertices if ptr[v + 1] - ptr[v] == 1 or v in core]
    size = len(vertices)
    best = [vertices[0]]
    steps = 0
    for s in starts:
        on_path = {s}
        path = [s]
        iters = [iter(ind[ptr[s]:ptr[s + 1]])]
        while iters:
            nxt = None
            for w in iters[-1]:
                if w not in on_path:
                    nxt = w
                    break
            if nxt is None:
                iters.pop()
                on_path.discard(path.pop())
                continue
            steps += 1
            if steps > budget:
                return best, True
            path.append(nxt)
            on_path.add(nxt)
            iters.append(iter(ind[ptr[nxt]:ptr[nxt + 1]]))
            if len(path) > len(best):
                best = list(path)
                if len(best) == size:
                    return best, False
    return best, False


def longest_path(g, budget=DEFAULT_PATH_BUDGET):
    """Longest simple path, measured in vertices.

    Acyclic components are solved exactly with two BFS sweeps. Cyclic
    components use budgeted exhaustive DFS; if any budget runs out the result
    is a lower bound and ``exact`` is False. Components no larger than the
    current best are skipped.
    """
    if g.n == 0:
        return LongestPath(0, (), True)
    cl = component_labels(g)
    order = np.argsort(cl.labels, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(cl.sizes)])
    ind = g.indices.tolist()
    ptr = g.indptr.tolist()
    best = (int(order[0]),)
    exact = True
    by_size = np.argsort(-cl.sizes, kind="stable")
    for c in by_size.tolist():
        size = int(cl.sizes[c])
        if size <= len(best):
            break
        verts = order[bounds[c]:bounds[c + 1]].tolist()
        if cl.edge_counts[c] == size - 1:
            path = _tree_diameter_path(verts[0], ind, ptr)
        else:
            path, exhausted = _longest_simple_path(verts, ind, ptr, budget)
            if exhausted:
                exact = False
        if len(path) > len(best):
            best = tuple(path)
    return LongestPath(len(best), tuple(int(v) for v in best), exact)


def k_path_test(g, K, budget=DEFAULT_PATH_BUDGET):
    """Decide H1 iff ``g`` contains a path on ``K`` vertices."""
    if K < 2:
        raise InvalidParameterError(f"K must be >= 2, got {K}")
    lp = longest_path(g, budget)
    stats = {"K": K, "longest_path_len": lp.length}
    return DetectionResult("kpath", H1 if lp.length >= K else H0, stats, lp.exact)


def star_test(g, K):
    """Decide H1 iff some vertex has degree at least ``K``."""
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    if g.n == 0:
        return DetectionResult("star", H0, {"K": K, "max_degree": 0, "argmax": -1}, True)
    deg = g.degrees
    arg = int(np.argmax(deg))
    dmax = int(deg[arg])
    return DetectionResult("star", H1 if dmax >= K else H0, {"K": K, "max_degree": dmax, "argmax": arg}, True)


# ---------------------------------------------------------------------------
# D-ary trees


def _reverse_index(g):
    """For directed edge ``e = (u -> v)`` in CSR order, the index of ``v -> u``."""
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    dst = g.indices
    # CSR order is sorted by (src, dst); sorting by (dst, src) lists reverses in the same order
    by_dst = np.lexsort((src, dst))
    rev = np.empty_like(by_dst)
    rev[by_dst] = np.arange(len(dst), dtype=np.int64)
    return src, rev


def _message_passing(g, D, h_max):
    """Non-backtracking height messages on directed edges.

    ``msg[e]`` for ``e = (u -> v)`` is the largest ``t`` such that ``u`` roots a
    D-ary tree of height ``t`` in the non-backtracking cover away from ``v``,
    capped at ``h_max``. Returns ``(msg, root)`` with per-vertex root heights.
    """
    n = g.n
    deg = g.degrees
    ptr = g.indptr
    if g.m == 0 or D < 1:
        return np.zeros(len(g.indices), dtype=np.int64), np.zeros(n, dtype=np.int64)
    src, rev = _reverse_index(g)
    start = ptr[src]
    pos_in_row = np.arange(len(src), dtype=np.int64) - start
    can_send = deg[src] >= D + 1
    can_root = deg >= D
    msg = np.zeros(len(src), dtype=np.int64)

    def kth(vals):
        # incoming[e] for e in row u is the message arriving at u from indices[e]
        order = np.lexsort((-vals, src))
        sorted_vals = vals[order]
        rank = np.empty_like(order)
        rank[order] = pos_in_row
        return sorted_vals, rank

    for _ in range(h_max):
        incoming = msg[rev]
        sorted_vals, rank = kth(incoming)
        # D-th largest among the row excluding the entry itself
        pick = np.where(rank < D, start + D, start + D - 1)
        pick = np.minimum(pick, len(src) - 1)
        new = np.where(can_send, 1 + sorted_vals[pick], 0)
        np.minimum(new, h_max, out=new)
        if np.array_equal(new, msg):
            break
        msg = new

    incoming = msg[rev]
    sorted_vals, _ = kth(incoming)
    root = np.zeros(n, dtype=np.int64)
    idx = np.flatnonzero(can_root)
    root[idx] = 1 + sorted_vals[ptr[idx] + D - 1]
    np.minimum(root, h_max, out=root)
    return msg, root


def _ball(g, v, radius, ind, ptr):
    dist = {v: 0}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for w in ind[ptr[u]:ptr[u + 1]]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def _ball_edge_count(ball, ind, ptr):
    twice = 0
    for u in ball:
        for w in ind[ptr[u]:ptr[u + 1]]:
            if w in ball:
                twice += 1
    return twice // 2


def ball_is_acyclic(g, v, radius):
    """Whether the subgraph induced by vertices within ``radius`` of ``v`` is a tree."""
    ind = g.indices.tolist()
    ptr = g.indptr.tolist()
    ball = _ball(g, v, radius, ind, ptr)
    return _ball_edge_count(ball, ind, ptr) == len(ball) - 1


def _all_balls_acyclic(g, radius):
    cl = component_labels(g)
    cyclic = ~cl.acyclic
    if not cyclic.any():
        return True
    ind = g.indices.tolist()
    ptr = g.indptr.tolist()
    for v in np.flatnonzero(cyclic[cl.labels]).tolist():
        ball = _ball(g, v, radius, ind, ptr)
        if _ball_edge_count(ball, ind, ptr) != len(ball) - 1:
            return False
    return True


@dataclass(frozen=True)
class DaryHeights:
    heights: np.ndarray
    exact: bool
    h_max: int

    @property
    def max_height(self):
        return int(self.heights.max()) if len(self.heights) else 0


def dary_height_messages(g, D, h_max):
    """Per-vertex height of the tallest D-ary tree rooted there, capped at ``h_max``.

    Exact when every ``h_max``-neighbourhood is a tree (then the
    non-backtracking cover coincides with the graph locally); otherwise the
    heights are upper bounds and ``exact`` is False.
    """
    if D < 1:
        raise InvalidParameterError(f"D must be >= 1, got {D}")
    if h_max < 0:
        raise InvalidParameterError(f"h_max must be >= 0, got {h_max}")
    _, root = _message_passing(g, D, h_max)
    return DaryHeights(heights=root, exact=_all_balls_acyclic(g, h_max), h_max=h_max)


def _dary_preorder(D, h):
    """Parent index, previous-sibling index and required height for each pattern node in DFS preorder."""
    parent, prev_sib, need = [], [], []

    def visit(par, sib, k):
        i = len(parent)
        parent.append(par)
        prev_sib.append(sib)
        need.append(k)
        last = -1
        if k > 0:
            for _ in range(D):
                last = visit(i, last, k - 1)
        return i

    visit(-1, -1, h)
    return parent, prev_sib, need


class _OutOfBudget(Exception):
    pass


class _TreeSearch:
    """Complete search for an injective D-ary tree of height ``h`` rooted at a vertex.

    Pattern nodes are assigned in DFS preorder. A child of a node placed at
    ``u`` may only go to a neighbour ``w`` whose message towards ``u`` is at
    least the child's required height; messages are upper bounds, so this
    pruning is sound. Siblings are placed in increasing candidate order to
    remove their permutation symmetry, and dead ends jump straight back to the
    latest conflicting assignment (conflict-directed backjumping).
    """

    def __init__(self, g, D, h, budget):
        self.g = g
        self.D = D
        self.h = h
        self.budget = budget
        self.steps = 0
        self.ind = g.indices.tolist()
        self.ptr = g.indptr.tolist()
        self.msg, self.root = _message_passing(g, D, h)
        self.msg_list = self.msg.tolist()
        self.parent, self.prev_sib, self.need = _dary_preorder(D, h)
        self._cands = {}

    def _spend(self):
        self.steps += 1
        if self.steps > self.budget:
            raise _OutOfBudget

    def _msg(self, w, u):
        return self.msg_list[bisect_left(self.ind, u, self.ptr[w], self.ptr[w + 1])]

    def _candidates(self, u, k):
        """Neighbours of ``u`` able to root height ``k`` away from ``u``, shortest sufficient first."""
        key = (u, k)
        c = self._cands.get(key)
        if c is None:
            scored = sorted((self._msg(w, u), w) for w in self.ind[self.ptr[u]:self.ptr[u + 1]])
            c = [w for m, w in scored if m >= k]
            self._cands[key] = c
        return c

    def embed(self, v):
        """An injective embedding as a list of ``(parent, child)`` edges, or None if none exists."""
        N = len(self.parent)
        parent, prev_sib, need = self.parent, self.prev_sib, self.need
        image = [-1] * N
        slot = [0] * N  # next position to try in the candidate list
        conf = [set() for _ in range(N)]
        owner = {}
        i = 0
        fresh = True
        while True:
            if fresh:
                conf[i] = set()
                if i == 0:
                    slot[i] = 0
                elif prev_sib[i] >= 0:
                    slot[i] = slot[prev_sib[i]]
                else:
                    slot[i] = 0
            cands = [v] if i == 0 else self._candidates(image[parent[i]], need[i])
            placed = False
            while slot[i] < len(cands):
                w = cands[slot[i]]
                slot[i] += 1
                self._spend()
                j = owner.get(w)
                if j is not None:
                    conf[i].add(j)
                    continue
                image[i] = w
                owner[w] = i
                placed = True
                break
            if placed:
                i += 1
                if i == N:
                    return [(image[parent[t]], image[t]) for t in range(1, N)]
                fresh = True
                continue
            culprits = set(conf[i])
            if parent[i] >= 0:
                culprits.add(parent[i])
            if prev_sib[i] >= 0:
                culprits.add(prev_sib[i])
            if not culprits:
                return None
            back = max(culprits)
            conf[back] |= culprits - {back}
            for t in range(back, i):
                if image[t] >= 0:
                    del owner[image[t]]
                    image[t] = -1
            i = back
            fresh = False


def dary_test(g, D, h, budget=DEFAULT_TREE_BUDGET):
    """Decide H1 iff ``g`` contains a complete D-ary tree of height ``h``.

    Message passing bounds every vertex's rooted height from above; vertices
    reaching ``h`` are then settled one by one by an exhaustive embedding
    search. If the shared budget runs out first, the decision falls back to
    the message-passing bound (H1) and ``exact`` is False.
    """
    if D < 2:
        raise InvalidParameterError(f"D must be >= 2, got {D}")
    if h < 1:
        raise InvalidParameterError(f"h must be >= 1, got {h}")
    search = _TreeSearch(g, D, h, budget)
    root = search.root
    max_h = int(root.max()) if g.n else 0
    candidates = np.flatnonzero(root >= h).tolist()
    stats = {"D": D, "h": h, "max_dheight": max_h, "candidates": len(candidates),
             "refuted": 0, "undetermined": 0, "witness_root": -1}
    for v in candidates:
        try:
            tree = search.embed(v)
        except _OutOfBudget:
            stats["undetermined"] = len(candidates) - stats["refuted"]
            return DetectionResult("dary", H1, stats, False)
        if tree is not None:
            stats["witness_root"] = v
            return DetectionResult("dary", H1, stats, True)
        stats["refuted"] += 1
    return DetectionResult("dary", H0, stats, True)


def lambda_hat(g):
    """Component-count estimate of lambda, falling back to ``2|E|/n``."""
    n = g.n
    a1, a2, a3 = small_component_counts(g)
    if a1 * a2 > 0:
        return n * a3 / (a1 * a2)
    return 2.0 * g.m / n if n else 0.0


def run_test(g, test, *, K=None, D=None, h=None):
    """Dispatch by test name; ``auto`` picks ``kpath`` when the estimated lambda is below 1."""
    if test == "auto":
        test = "kpath" if lambda_hat(g) < 1 else "components"
    if test in ("components", "kpath", "star"):
        if K is None:
            raise InvalidParameterError(f"test {test!r} needs K")
        return {"components": component_count_test, "kpath": k_path_test, "star": star_test}[test](g, K)
    if test == "dary":
        if D is None or h is None:
            raise InvalidParameterError("test 'dary' needs D and h")
        return dary_test(g, D, h)
    raise InvalidParameterError(f"unknown test {test!r}")
