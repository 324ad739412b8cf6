"""Finite graph windows, subgraph masks, seeded label fields and traversal helpers."""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

INF = math.inf

Edge = tuple[int, int]


def norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Window:
    """A finite induced region of an infinite substrate.

    Vertices are the dense range ``0..n-1``. ``coords`` holds lattice
    coordinates (x, y) for diagnostics; ``core`` is a boolean mask of the
    vertices far enough from the boundary to be used in estimates.
    """

    adj: tuple[tuple[int, ...], ...]
    root: int
    core: np.ndarray
    wrap: bool = False
    coords: np.ndarray | None = None
    kind: str = "custom"
    width: int = 0
    height: int = 0

    def __post_init__(self) -> None:
        n = len(self.adj)
        for u, nbrs in enumerate(self.adj):
            if len(set(nbrs)) != len(nbrs):
                raise ValueError(f"parallel edge at vertex {u}")
            for v in nbrs:
                if v == u:
                    raise ValueError(f"self-loop at vertex {u}")
                if not 0 <= v < n or u not in self.adj[v]:
                    raise ValueError(f"asymmetric adjacency {u}-{v}")
        if not 0 <= self.root < n:
            raise ValueError("root out of range")
        if len(self.core) != n or not self.core[self.root]:
            raise ValueError("root must lie in the core")
        if self.wrap and len({len(a) for a in self.adj}) > 1:
            raise ValueError("wrapped window must be regular")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge], root: int = 0, core=None, **kw) -> "Window":
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        if core is None:
            core = np.ones(n, dtype=bool)
        return cls(tuple(tuple(sorted(a)) for a in nbrs), root, np.asarray(core, dtype=bool), **kw)

    @property
    def n(self) -> int:
        return len(self.adj)

    @cached_property
    def edges(self) -> np.ndarray:
        """All edges as an (E, 2) array with ``u < v``, sorted."""
        out = [(u, v) for u, nbrs in enumerate(self.adj) for v in nbrs if u < v]
        return np.array(sorted(out), dtype=np.int64).reshape(-1, 2)

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {(int(u), int(v)): i for i, (u, v) in enumerate(self.edges)}

    @cached_property
    def degree(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    @cached_property
    def core_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.core)

    @cached_property
    def core_pairs(self) -> np.ndarray:
        """Ordered (o, x) pairs with o in the core and x a neighbour of o."""
        pairs = [(o, x) for o in self.core_vertices for x in self.adj[o]]
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    def is_transitive_proxy(self) -> bool:
        return self.wrap and len(set(self.degree.tolist())) == 1

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError("vertex out of range")


def edge_matrix(n: int, edges: np.ndarray) -> sparse.csr_matrix:
    """Symmetric 0/1 adjacency matrix for an (E, 2) edge array."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    data = np.ones(2 * len(edges), dtype=np.int8)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass
class SubgraphMask:
    """Vertex and edge subset of a host window."""

    vertices: set[int] = field(default_factory=set)
    edges: set[Edge] = field(default_factory=set)

    @classmethod
    def full(cls, w: Window) -> "SubgraphMask":
        return cls(set(range(w.n)), {(int(u), int(v)) for u, v in w.edges})

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], vertices: Iterable[int] = ()) -> "SubgraphMask":
        m = cls(set(vertices))
        for u, v in edges:
            m.add_edge(u, v)
        return m

    @classmethod
    def induced(cls, w: Window, vertices: Iterable[int]) -> "SubgraphMask":
        vs = set(int(v) for v in vertices)
        es = {(u, v) for u in vs for v in w.adj[u] if u < v and v in vs}
        return cls(vs, es)

    def add_edge(self, u: int, v: int) -> None:
        self.vertices.add(u)
        self.vertices.add(v)
        self.edges.add(norm_edge(u, v))

    def copy(self) -> "SubgraphMask":
        return SubgraphMask(set(self.vertices), set(self.edges))

    def union(self, other: "SubgraphMask") -> "SubgraphMask":
        return SubgraphMask(self.vertices | other.vertices, self.edges | other.edges)

    def issubset(self, other: "SubgraphMask") -> bool:
        return self.vertices <= other.vertices and self.edges <= other.edges

    def vertex_array(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        if self.vertices:
            out[list(self.vertices)] = True
        return out

    def edge_array(self) -> np.ndarray:
        return np.array(sorted(self.edges), dtype=np.int64).reshape(-1, 2)

    def adjacency(self) -> dict[int, list[int]]:
        nbrs: dict[int, list[int]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return nbrs

    def validate(self, w: Window) -> None:
        for u, v in self.edges:
            if u not in self.vertices or v not in self.vertices:
                raise ValueError(f"edge {u}-{v} has an endpoint outside the mask")
            if v not in w.adj[u]:
                raise ValueError(f"edge {u}-{v} is not an edge of the window")


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser on uint64 arrays; wraparound is intended
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _tag_key(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class LabelField:
    """Deterministic iid uniform labels derived from a 64-bit seed.

    Each named ``tag`` gives an independent stream; a label is a pure
    function of ``(seed, tag, key)`` so labels do not depend on the order
    in which they are requested.
    """

    seed: int

    def _stream_key(self, tag: str) -> np.uint64:
        base = np.array([(self.seed & 0xFFFFFFFFFFFFFFFF) ^ _tag_key(tag)], dtype=np.uint64)
        return _mix64(base)[0]

    def labels(self, tag: str, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64).astype(np.uint64)
        h = _mix64(_mix64(keys) ^ self._stream_key(tag))
        return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def stream(self, tag: str, v: int) -> float:
        return float(self.labels(tag, [v])[0])

    def vertex_labels(self, n: int, tag: str = "vertex") -> np.ndarray:
        return self.labels(tag, np.arange(n))

    def vertex_label(self, v: int, tag: str = "vertex") -> float:
        return self.stream(tag, v)

    def edge_labels(self, edges: np.ndarray, tag: str = "edge") -> np.ndarray:
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        return self.labels(tag, (lo << 32) | hi)

    def edge_label(self, u: int, v: int, tag: str = "edge") -> float:
        return float(self.edge_labels(np.array([[u, v]]), tag)[0])


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def bfs_dist(w: Window, m: SubgraphMask, u: int, v: int) -> float:
    """Shortest-path length between ``u`` and ``v`` inside ``m`` (``inf`` if disconnected)."""
    w.check_vertex(u)
    w.check_vertex(v)
    if u not in m.vertices or v not in m.vertices:
        raise ValueError("vertex not in mask")
    if u == v:
        return 0
    nbrs = m.adjacency()
    dist = {u: 0}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for y in nbrs[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                if y == v:
                    return dist[y]
                queue.append(y)
    return INF


def connected_components(w: Window, m: SubgraphMask) -> list[set[int]]:
    """Components of ``m`` ordered by their minimum vertex id."""
    nbrs = m.adjacency()
    seen: set[int] = set()
    comps = []
    for s in sorted(m.vertices):
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y in nbrs[x]:
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        seen |= comp
        comps.append(comp)
    return comps


def is_forest(w: Window, m: SubgraphMask) -> bool:
    return len(m.edges) == len(m.vertices) - len(connected_components(w, m))


def is_spanning_tree(w: Window, m: SubgraphMask) -> bool:
    if len(m.vertices) != w.n or len(m.edges) != w.n - 1:
        return False
    return len(connected_components(w, m)) == 1


def component_labels(n: int, edges: np.ndarray) -> np.ndarray:
    """Component id per vertex for the graph ``(range(n), edges)``."""
    from scipy.sparse.csgraph import connected_components as cc

    _, lab = cc(edge_matrix(n, edges), directed=False)
    return lab


def path_edges(path: Sequence[int]) -> list[Edge]:
    return [norm_edge(a, b) for a, b in zip(path, path[1:])]
