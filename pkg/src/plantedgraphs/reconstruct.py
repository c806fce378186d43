"""Recovering the planted vertex set: peeling for lines, max-degree for stars."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .detect import longest_path
from .errors import InvalidParameterError
from .graph import component_labels
from .rng import make_rng


@dataclass
class ReconstructionResult:
    estimated: tuple
    method: str
    overlap: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "estimated": list(self.estimated),
            "overlap": self.overlap,
            "method": self.method,
            "diagnostics": dict(self.diagnostics),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def overlap(estimated, truth):
    return len(set(estimated) & set(truth))


def _finish(estimated, method, truth, diagnostics):
    est = tuple(sorted(int(v) for v in estimated))
    ov = None if truth is None else overlap(est, truth)
    return ReconstructionResult(est, method, ov, diagnostics)


def peel(vertices, g, rounds):
    """Remove, ``rounds`` times and simultaneously, every vertex of induced degree <= 1."""
    if rounds < 0:
        raise InvalidParameterError(f"rounds must be >= 0, got {rounds}")
    alive = np.zeros(g.n, dtype=bool)
    verts = np.fromiter((int(v) for v in vertices), dtype=np.int64)
    alive[verts] = True
    e = g.edges
    inside = alive[e[:, 0]] & alive[e[:, 1]]
    eu, ev = e[inside, 0], e[inside, 1]
    for _ in range(rounds):
        keep = alive[eu] & alive[ev]
        eu, ev = eu[keep], ev[keep]
        deg = np.bincount(eu, minlength=g.n) + np.bincount(ev, minlength=g.n)
        doomed = alive & (deg <= 1)
        if not doomed.any():
            break
        alive &= ~doomed
    return set(np.flatnonzero(alive).tolist())


def _bfs_order(g, source, members):
    """Vertices of ``members`` in BFS order from ``source`` (ties by index within a level)."""
    ind = g.indices.tolist()
    ptr = g.indptr.tolist()
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in ind[ptr[u]:ptr[u + 1]]:
            if w in members and w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return sorted(dist, key=lambda v: (dist[v], v))


def reconstruct_line(g, K, truth=None):
    """Peel the component of the longest path ``ceil(sqrt(K))`` times, then trim or pad to ``K``.

    Trimming keeps the survivors closest to the midpoint of what remains of
    the longest path. Padding adds the longest path's own vertices by their
    position from that midpoint, then other component vertices by graph
    distance, then the lowest-index unused vertices.
    """
    if K < 2:
        raise InvalidParameterError(f"K must be >= 2, got {K}")
    if K > g.n:
        raise InvalidParameterError(f"K={K} exceeds n={g.n}")
    rounds = math.ceil(math.sqrt(K))
    diag = {"peel_rounds": rounds, "component_size": 0, "peeled_size": 0,
            "pad_count": 0, "trim_count": 0, "degenerate": 0}
    if g.m == 0:
        diag["degenerate"] = 1
        diag["pad_count"] = K
        return _finish(range(K), "peel", truth, diag)
    lp = longest_path(g)
    cl = component_labels(g)
    comp = set(np.flatnonzero(cl.labels == cl.labels[lp.path[0]]).tolist())
    core = peel(comp, g, rounds)
    diag["component_size"] = len(comp)
    diag["peeled_size"] = len(core)
    surviving = [v for v in lp.path if v in core]
    spine = surviving if surviving else list(lp.path)
    mid = spine[len(spine) // 2]
    by_distance = _bfs_order(g, mid, comp)
    if len(core) >= K:
        chosen = [v for v in by_distance if v in core][:K]
        diag["trim_count"] = len(core) - K
    else:
        # proximity is measured along the longest path first, so padding
        # restores the peeled path ends before any side branch
        at = lp.path.index(mid)
        along = sorted(range(len(lp.path)), key=lambda i: (abs(i - at), i))
        chosen = list(core)
        taken = set(core)
        for v in [lp.path[i] for i in along] + by_distance:
            if len(chosen) == K:
                break
            if v not in taken:
                chosen.append(v)
                taken.add(v)
        v = 0
        while len(chosen) < K:
            if v not in taken:
                chosen.append(v)
                taken.add(v)
            v += 1
        diag["pad_count"] = K - len(core)
    return _finish(chosen, "peel", truth, diag)


def reconstruct_star(g, K, seed, truth=None):
    """Highest-degree vertex plus ``K`` of its neighbours drawn uniformly without replacement."""
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    if K + 1 > g.n:
        raise InvalidParameterError(f"star with {K} leaves needs {K + 1} vertices, n={g.n}")
    deg = g.degrees
    c = int(np.argmax(deg))
    nbrs = g.neighbors(c)
    diag = {"center": c, "center_degree": int(deg[c]), "pad_count": 0}
    if len(nbrs) >= K:
        rng = make_rng(seed, "reconstruct_star")
        leaves = rng.choice(nbrs, size=K, replace=False).tolist()
    else:
        leaves = nbrs.tolist()
        taken = set(leaves) | {c}
        v = 0
        while len(leaves) < K:
            if v not in taken:
                leaves.append(v)
                taken.add(v)
            v += 1
        diag["pad_count"] = K - len(nbrs)
    return _finish([c] + leaves, "max_degree", truth, diag)
