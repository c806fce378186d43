"""Sparse undirected graphs, Erdos-Renyi sampling and structure planting."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .errors import InvalidParameterError, InvalidProbabilityError, ParseError
from .rng import make_rng


class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``.

    Edges are stored once as ``(u, v)`` with ``u < v``, sorted
    lexicographically. Adjacency is kept in CSR form with sorted neighbour
    lists.
    """

    __slots__ = ("_n", "_edges", "_keys", "_indptr", "_indices")

    def __init__(self, n, edges=(), *, dedupe=False):
        n = int(n)
        if n < 0:
            raise InvalidParameterError(f"vertex count must be >= 0, got {n}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= n:
                raise InvalidParameterError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidParameterError("self-loops are not allowed")
        u = np.minimum(e[:, 0], e[:, 1])
        v = np.maximum(e[:, 0], e[:, 1])
        keys = u * n + v
        if dedupe:
            keys = np.unique(keys)
        else:
            order = np.argsort(keys, kind="stable")
            keys = keys[order]
            if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
                raise InvalidParameterError("duplicate edge")
        self._init_from_keys(n, keys)

    @classmethod
    def _from_sorted_keys(cls, n, keys):
        g = cls.__new__(cls)
        g._init_from_keys(n, np.asarray(keys, dtype=np.int64))
        return g

    def _init_from_keys(self, n, keys):
        self._n = n
        self._keys = keys
        if n:
            u, v = np.divmod(keys, n)
        else:
            u = v = np.empty(0, dtype=np.int64)
        self._edges = np.stack([u, v], axis=1) if keys.size else np.empty((0, 2), dtype=np.int64)
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        self._indices = dst[order]
        self._indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self._indptr[1:])
        for arr in (self._keys, self._edges, self._indices, self._indptr):
            arr.flags.writeable = False

    @property
    def n(self):
        return self._n

    @property
    def m(self):
        return len(self._keys)

    @property
    def edges(self):
        """Read-only ``(m, 2)`` array of edges with ``u < v``."""
        return self._edges

    @property
    def indptr(self):
        return self._indptr

    @property
    def indices(self):
        return self._indices

    @property
    def degrees(self):
        return np.diff(self._indptr)

    def neighbors(self, u):
        return self._indices[self._indptr[u]:self._indptr[u + 1]]

    def degree(self, u):
        return int(self._indptr[u + 1] - self._indptr[u])

    def has_edge(self, u, v):
        if u == v:
            return False
        a, b = (u, v) if u < v else (v, u)
        k = a * self._n + b
        i = np.searchsorted(self._keys, k)
        return bool(i < len(self._keys) and self._keys[i] == k)

    def edge_set(self):
        return {(int(a), int(b)) for a, b in self._edges}

    def adjacency_lists(self):
        """Python lists of neighbours, convenient for pure-Python traversals."""
        ind = self._indices.tolist()
        ptr = self._indptr.tolist()
        return [ind[ptr[i]:ptr[i + 1]] for i in range(self._n)]

    def to_scipy(self):
        data = np.ones(len(self._indices), dtype=np.int8)
        return csr_matrix((data, self._indices, self._indptr), shape=(self._n, self._n))

    def subgraph_edges_within(self, vertices):
        """Number of edges with both endpoints in ``vertices``."""
        mask = np.zeros(self._n, dtype=bool)
        mask[np.asarray(list(vertices), dtype=np.int64)] = True
        return int(np.count_nonzero(mask[self._edges[:, 0]] & mask[self._edges[:, 1]]))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._keys, other._keys)

    def __hash__(self):
        return hash((self._n, self._keys.tobytes()))

    def __repr__(self):
        return f"Graph(n={self._n}, m={self.m})"


# ---------------------------------------------------------------------------
# Planted structures


class PlantSpec:
    """Base class of the plantable structures."""

    variant = ""

    def vertex_count(self):
        raise NotImplementedError

    def edge_count(self):
        return self.vertex_count() - 1

    def local_edges(self):
        """Edges of the structure over local labels ``0..vertex_count()-1``."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(d):
        variant = d.get("variant")
        if variant == "line":
            return Line(int(d["K"]))
        if variant == "star":
            return Star(int(d["K"]))
        if variant == "dary":
            return DaryTree(int(d["D"]), int(d["h"]))
        raise InvalidParameterError(f"unknown structure variant {variant!r}")

    @staticmethod
    def parse(text):
        """Parse ``line:K``, ``star:K`` or ``dary:D,h``."""
        try:
            kind, _, args = text.partition(":")
            kind = kind.strip().lower()
            if kind == "line":
                return Line(int(args))
            if kind == "star":
                return Star(int(args))
            if kind in ("dary", "tree"):
                d, h = args.split(",")
                return DaryTree(int(d), int(h))
        except ValueError as exc:
            raise InvalidParameterError(f"bad structure spec {text!r}: {exc}") from None
        raise InvalidParameterError(f"bad structure spec {text!r}")


@dataclass(frozen=True)
class Line(PlantSpec):
    """Path on ``K`` vertices."""

    K: int
    variant = "line"

    def __post_init__(self):
        if self.K < 2:
            raise InvalidParameterError(f"line needs K >= 2, got {self.K}")

    def vertex_count(self):
        return self.K

    def local_edges(self):
        return [(i, i + 1) for i in range(self.K - 1)]

    def to_dict(self):
        return {"variant": "line", "K": self.K}

    def __str__(self):
        return f"line:{self.K}"


@dataclass(frozen=True)
class Star(PlantSpec):
    """Centre (local label 0) joined to ``K`` leaves."""

    K: int
    variant = "star"

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameterError(f"star needs K >= 1, got {self.K}")

    def vertex_count(self):
        return self.K + 1

    def local_edges(self):
        return [(0, i) for i in range(1, self.K + 1)]

    def to_dict(self):
        return {"variant": "star", "K": self.K}

    def __str__(self):
        return f"star:{self.K}"


@dataclass(frozen=True)
class DaryTree(PlantSpec):
    """Complete ``D``-ary tree of height ``h`` in heap order (children of i are D*i+1..D*i+D)."""

    D: int
    h: int
    variant = "dary"

    def __post_init__(self):
        if self.D < 1:
            raise InvalidParameterError(f"arity must be >= 1, got {self.D}")
        if self.h < 0:
            raise InvalidParameterError(f"height must be >= 0, got {self.h}")

    def vertex_count(self):
        if self.D == 1:
            return self.h + 1
        return (self.D ** (self.h + 1) - 1) // (self.D - 1)

    def internal_count(self):
        if self.D == 1:
            return self.h
        return (self.D ** self.h - 1) // (self.D - 1)

    def local_edges(self):
        return [(i, self.D * i + c) for i in range(self.internal_count()) for c in range(1, self.D + 1)]

    def to_dict(self):
        return {"variant": "dary", "D": self.D, "h": self.h}

    def __str__(self):
        return f"dary:{self.D},{self.h}"


@dataclass(frozen=True)
class GroundTruth:
    spec: PlantSpec
    planted_vertices: tuple  # sigma, in structure order
    planted_edges: tuple  # (u, v) pairs with u < v

    @property
    def vertex_set(self):
        return frozenset(self.planted_vertices)


@dataclass(frozen=True)
class Instance:
    graph: Graph
    truth: Optional[GroundTruth] = None
    seed: Optional[int] = None
    lam: Optional[float] = None

    def __post_init__(self):
        t = self.truth
        if t is None:
            return
        if len(t.planted_vertices) != t.spec.vertex_count():
            raise InvalidParameterError("planted vertex count does not match the structure")
        if len(set(t.planted_vertices)) != len(t.planted_vertices):
            raise InvalidParameterError("planted vertices must be distinct")
        for u, v in t.planted_edges:
            if not self.graph.has_edge(u, v):
                raise InvalidParameterError(f"planted edge ({u}, {v}) missing from graph")


# ---------------------------------------------------------------------------
# Sampling


def _check_er_params(n, lam):
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    if not math.isfinite(lam) or lam < 0:
        raise InvalidParameterError(f"lambda must be a finite non-negative number, got {lam}")
    if lam > n:
        raise InvalidProbabilityError(f"edge probability lambda/n = {lam}/{n} exceeds 1")


def pair_index_to_edges(idx, n):
    """Map lexicographic pair indices to ``(u, v)`` arrays with ``u < v``.

    Row ``u`` holds the ``n-1-u`` pairs ``(u, u+1), ..., (u, n-1)`` and starts at
    offset ``u*(2n-u-1)/2``.
    """
    idx = np.asarray(idx, dtype=np.int64)
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * idx, 0.0))) / 2).astype(np.int64)
    u = np.clip(u, 0, max(n - 2, 0))

    def offset(r):
        return r * (2 * n - r - 1) // 2

    # float rounding can leave u off by one in either direction
    for _ in range(2):
        u = np.where(offset(u) > idx, u - 1, u)
        u = np.where(offset(u + 1) <= idx, u + 1, u)
    v = idx - offset(u) + u + 1
    return u, v


def sample_er(n, lam, seed):
    """Sample G(n, lam/n).

    Pairs are visited in lexicographic order ``(0,1), (0,2), ..., (n-2,n-1)``.
    Starting from position -1, geometric gaps with success probability
    ``lam/n`` are drawn in blocks from ``make_rng(seed, "er")``; every landing
    position below ``n(n-1)/2`` is an edge. Expected time is O(n * lam).
    """
    n = int(n)
    lam = float(lam)
    _check_er_params(n, lam)
    total = n * (n - 1) // 2
    p = lam / n if n else 0.0
    if total == 0 or p == 0.0:
        return Graph(n)
    if p >= 1.0:
        return Graph._from_sorted_keys(n, _all_pair_keys(n))
    rng = make_rng(seed, "er")
    mean = total * p
    block = int(mean + 6.0 * math.sqrt(mean) + 64)
    found = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=block)
        landing = pos + np.cumsum(gaps)
        inside = landing[landing < total]
        found.append(inside)
        if len(inside) < block:
            break
        pos = int(landing[-1])
    idx = np.concatenate(found)
    u, v = pair_index_to_edges(idx, n)
    return Graph._from_sorted_keys(n, u * n + v)


def _all_pair_keys(n):
    u, v = np.triu_indices(n, k=1)
    return (u.astype(np.int64) * n + v).astype(np.int64)


def plant(base, spec, seed, lam=None):
    """Union ``base`` with a copy of ``spec`` placed by a uniform injective map.

    Edges already present in ``base`` are merged silently.
    """
    k = spec.vertex_count()
    if k > base.n:
        raise InvalidParameterError(f"{spec} needs {k} vertices but the graph has {base.n}")
    rng = make_rng(seed, "plant")
    sigma = rng.choice(base.n, size=k, replace=False).astype(np.int64)
    local = np.asarray(spec.local_edges(), dtype=np.int64).reshape(-1, 2)
    a = sigma[local[:, 0]]
    b = sigma[local[:, 1]]
    pu, pv = np.minimum(a, b), np.maximum(a, b)
    n = base.n
    keys = np.union1d(base._keys, pu * n + pv)
    graph = Graph._from_sorted_keys(n, keys)
    truth = GroundTruth(
        spec=spec,
        planted_vertices=tuple(int(x) for x in sigma),
        planted_edges=tuple(sorted(zip(pu.tolist(), pv.tolist()))),
    )
    return Instance(graph=graph, truth=truth, seed=int(seed), lam=lam)


# ---------------------------------------------------------------------------
# Components


@dataclass(frozen=True)
class Component:
    vertices: tuple
    n_edges: int

    @property
    def size(self):
        return len(self.vertices)

    @property
    def acyclic(self):
        return self.n_edges == self.size - 1


@dataclass(frozen=True)
class ComponentLabels:
    """Vectorised component decomposition: ``labels[v]`` plus per-label sizes and edge counts."""

    labels: np.ndarray
    sizes: np.ndarray
    edge_counts: np.ndarray = field(repr=False)

    @property
    def count(self):
        return len(self.sizes)

    @property
    def acyclic(self):
        return self.edge_counts == self.sizes - 1


def component_labels(g):
    if g.n == 0:
        empty = np.empty(0, dtype=np.int64)
        return ComponentLabels(empty, empty, empty)
    k, labels = _cc(g.to_scipy(), directed=False)
    labels = labels.astype(np.int64)
    sizes = np.bincount(labels, minlength=k)
    edge_counts = np.bincount(labels[g.edges[:, 0]], minlength=k) if g.m else np.zeros(k, dtype=np.int64)
    return ComponentLabels(labels, sizes, edge_counts)


def connected_components(g):
    """List of components ordered by their smallest vertex."""
    cl = component_labels(g)
    order = np.argsort(cl.labels, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(cl.sizes)])
    comps = []
    for c in range(cl.count):
        verts = order[bounds[c]:bounds[c + 1]]
        comps.append(Component(tuple(int(x) for x in verts), int(cl.edge_counts[c])))
    comps.sort(key=lambda c: c.vertices[0])
    return comps


# ---------------------------------------------------------------------------
# Edge-list files


def truth_path(path):
    return os.fspath(path) + ".truth.json"


def save_edgelist(inst, path):
    """Write ``inst`` as an edge list plus a ``.truth.json`` sidecar.

    The sidecar always carries ``seed`` and ``lambda``; ``spec``, ``vertices``
    and ``edges`` are null for unplanted instances.
    """
    g = inst.graph
    lines = [f"{g.n} {g.m}\n"]
    lines.extend(f"{u} {v}\n" for u, v in g.edges.tolist())
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)
    t = inst.truth
    doc = {
        "spec": t.spec.to_dict() if t else None,
        "vertices": list(t.planted_vertices) if t else None,
        "edges": [list(e) for e in t.planted_edges] if t else None,
        "seed": inst.seed,
        "lambda": inst.lam,
    }
    with open(truth_path(path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def _parse_ints(line, lineno, count):
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} integers, got {line.strip()!r}", lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"not an integer in {line.strip()!r}", lineno) from None


def load_edgelist(path):
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file: missing 'n m' header", 1)
    n, m = _parse_ints(lines[0], 1, 2)
    if n < 0 or m < 0:
        raise ParseError("negative header value", 1)
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != m:
        # point at the first missing or first surplus edge line
        raise ParseError(f"header announces {m} edges but file has {len(body)}", min(len(body), m) + 2)
    seen = set()
    edges = []
    for i, line in enumerate(body, start=2):
        u, v = _parse_ints(line, i, 2)
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"vertex index out of range [0, {n})", i)
        if u == v:
            raise ParseError(f"self-loop at vertex {u}", i)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"duplicate edge {key}", i)
        seen.add(key)
        edges.append(key)
    graph = Graph(n, edges)
    truth, seed, lam = None, None, None
    sidecar = truth_path(path)
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as fh:
            doc = json.load(fh)
        seed = doc.get("seed")
        lam = doc.get("lambda")
        if doc.get("spec") is not None:
            truth = GroundTruth(
                spec=PlantSpec.from_dict(doc["spec"]),
                planted_vertices=tuple(int(x) for x in doc["vertices"]),
                planted_edges=tuple(sorted((int(a), int(b)) for a, b in doc["edges"])),
            )
    return Instance(graph=graph, truth=truth, seed=seed, lam=lam)
