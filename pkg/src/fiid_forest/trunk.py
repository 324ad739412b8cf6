"""From a two-ended spanning tree to a thinning connected sequence, plus trunk distance diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .graph_core import LabelField, SubgraphMask, Window, connected_components, edge_matrix, norm_edge
from .substrates import SubstrateSpec, TwoEndedTree, make_window, snake_tree


@dataclass
class QuotientGraph:
    """Graph on the spine indices of a two-ended tree; ``i`` stands for ``tree.spine[i]``.

    ``graph`` carries the projected edges ``{b(v), b(w)}``, its root is the
    spine index of the root's bush and its core the spine indices whose
    vertex lies in the host core.
    """

    tree: TwoEndedTree
    graph: Window
    sign: int = 1

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def origin(self) -> int:
        return self.graph.root

    def position(self, i):
        """Signed coordinate along the spine, 0 at the root's bush."""
        return self.sign * (np.asarray(i) - self.origin)

    def index_at(self, p: int) -> int:
        return self.origin + self.sign * p

    @cached_property
    def matrix(self):
        return edge_matrix(self.n, self.graph.edges)


def quotient_graph(w: Window, t: TwoEndedTree, labels: LabelField | None = None) -> QuotientGraph:
    """Project every window edge onto the spine; the orientation is a fair bit of ``labels``."""
    idx = np.full(w.n, -1, dtype=np.int64)
    idx[t.spine] = np.arange(len(t.spine))
    b = idx[t.bush_of]
    if np.any(b < 0):
        raise ValueError("bush_of must map every vertex to the spine")
    pu, pv = b[w.edges[:, 0]], b[w.edges[:, 1]]
    keep = pu != pv
    pairs = {norm_edge(int(u), int(v)) for u, v in zip(pu[keep], pv[keep])}
    core = w.core[t.spine]
    root = int(b[w.root])
    g = Window.from_edges(len(t.spine), sorted(pairs), root=root, core=core, kind="quotient")
    sign = 1
    if labels is not None and labels.stream("orient", 0) < 0.5:
        sign = -1
    return QuotientGraph(t, g, sign)


@dataclass
class ConnectorSet:
    """Open spine indices, one shortest connector per consecutive open pair, and their union ``K``."""

    open: np.ndarray
    connectors: dict[tuple[int, int], list[int]]
    K: SubgraphMask
    n: int = 0

    @property
    def extremes(self) -> tuple[int, int]:
        return int(self.open.min()), int(self.open.max())

    def connector_mask(self, x: int, y: int) -> SubgraphMask:
        path = self.connectors[(x, y)]
        return SubgraphMask.from_edges(zip(path, path[1:]), path)


def _bfs_from(q: QuotientGraph, y: int, limit: float) -> np.ndarray:
    return dijkstra(q.matrix, directed=False, indices=y, unweighted=True, limit=limit)


def _dist_rows(q: QuotientGraph, sources: np.ndarray, limit: float, chunk: int = 256) -> np.ndarray:
    """Distances from each source, truncated at ``limit``; one row per source."""
    rows = [
        dijkstra(q.matrix, directed=False, indices=sources[i : i + chunk], unweighted=True, limit=limit)
        for i in range(0, len(sources), chunk)
    ]
    return np.vstack(rows) if rows else np.zeros((0, q.n))


def _greedy_path(q: QuotientGraph, x: int, dist: np.ndarray) -> list[int]:
    """Walk from ``x`` down ``dist`` to its zero, always taking the smallest index."""
    path = [x]
    cur = x
    while dist[cur] > 0:
        cur = min(v for v in q.graph.adj[cur] if dist[v] == dist[cur] - 1)
        path.append(cur)
    return path


def open_vertices(q: QuotientGraph, n: int, labels: LabelField) -> np.ndarray:
    """Spine indices opened by Bernoulli(2**-n) percolation, in spine order."""
    if n < 0:
        raise ValueError("n must be >= 0")
    u = labels.labels(f"perc-{n}", np.arange(q.n))
    return np.flatnonzero(u < 2.0**-n)


def bernoulli_connectors(q: QuotientGraph, n: int, labels: LabelField, opened=None) -> ConnectorSet:
    opened = open_vertices(q, n, labels) if opened is None else np.sort(np.asarray(opened, dtype=np.int64))
    if len(opened) < 2:
        raise ValueError("degenerate sample")
    connectors = {}
    K = SubgraphMask()
    rows = _dist_rows(q, opened[1:], int(np.max(np.diff(opened))))
    for j, (x, y) in enumerate(zip(opened[:-1].tolist(), opened[1:].tolist())):
        path = _greedy_path(q, x, rows[j])
        connectors[(x, y)] = path
        for v in path:
            K.vertices.add(v)
        for a, b in zip(path, path[1:]):
            K.add_edge(a, b)
    return ConnectorSet(opened, connectors, K, q.n)


def connected_between_extremes(q: QuotientGraph, k: ConnectorSet) -> bool:
    return len(connected_components(q.graph, k.K)) == 1


def lift_to_G(k: ConnectorSet, t: TwoEndedTree, w: Window) -> SubgraphMask:
    """Bushes of the ``K`` vertices with their tree edges, plus window edges projecting into ``K``."""
    idx = np.full(w.n, -1, dtype=np.int64)
    idx[t.spine] = np.arange(len(t.spine))
    b = idx[t.bush_of]
    in_k = np.zeros(len(t.spine), dtype=bool)
    in_k[list(k.K.vertices)] = True
    verts = np.flatnonzero(in_k[b])
    out = SubgraphMask({int(v) for v in verts})
    for u, v in t.tree.edges:
        if b[u] == b[v] and in_k[b[u]]:
            out.add_edge(u, v)
    pu, pv = b[w.edges[:, 0]], b[w.edges[:, 1]]
    for (u, v), a, c in zip(w.edges.tolist(), pu.tolist(), pv.tolist()):
        if a != c and norm_edge(a, c) in k.K.edges:
            out.add_edge(u, v)
    return out


# --- diagnostics ----------------------------------------------------------------------------


def ladder_quotient(length: int = 1024, margin: int = 256) -> QuotientGraph:
    """Two-ended control: the rung snake on a ``2 x length`` ladder."""
    w = make_window(SubstrateSpec("ladder", length, margin))
    return quotient_graph(w, snake_tree(w))


def plane_quotient(side: int = 64, margin: int = 16, pendant: bool = False) -> QuotientGraph:
    """The boustrophedon snake on a square grid window."""
    w = make_window(SubstrateSpec("grid2d", side, margin))
    return quotient_graph(w, snake_tree(w, pendant=pendant))


def _valid_centres(q: QuotientGraph, reach: int) -> np.ndarray:
    core = q.graph.core
    i = np.arange(q.n)
    ok = (i - reach >= 0) & (i + reach < q.n)
    ok[ok] &= core[(i - reach)[ok]] & core[(i + reach)[ok]]
    return np.flatnonzero(ok)


@dataclass
class RatioRow:
    n: int
    ratio: float
    se: float
    replicas: int


def distance_ratio_profile(q: QuotientGraph, ns: list[int], seeds: int = 30, seed: int = 0) -> list[RatioRow]:
    """Mean of ``dist(x_-n, x_n) / 2n`` with the centre and orientation drawn per replica."""
    if not ns or min(ns) < 1:
        raise ValueError("ns must be positive")
    centres = _valid_centres(q, max(ns))
    if len(centres) == 0:
        raise ValueError("n exceeds window")
    vals = np.zeros((seeds, len(ns)))
    for r in range(seeds):
        lab = LabelField(seed + r)
        c = int(centres[min(int(lab.stream("centre", 0) * len(centres)), len(centres) - 1)])
        sign = -1 if lab.stream("orient", 0) < 0.5 else 1
        for j, n in enumerate(ns):
            a, b = c - sign * n, c + sign * n
            d = _bfs_from(q, a, 2 * n)[b]
            vals[r, j] = d / (2 * n)
    out = []
    for j, n in enumerate(ns):
        col = vals[:, j]
        se = float(col.std(ddof=1) / math.sqrt(seeds)) if seeds > 1 else math.nan
        out.append(RatioRow(n, float(col.mean()), se, seeds))
    return out


def fit_power(rows: list[RatioRow]) -> tuple[float, float]:
    """Least-squares fit of ``ratio ~ C * n**alpha`` on log scale; returns ``(C, alpha)``."""
    x = np.log([r.n for r in rows])
    y = np.log([r.ratio for r in rows])
    alpha, logc = np.polyfit(x, y, 1)
    return float(math.exp(logc)), float(alpha)


@dataclass
class Realization:
    """Per-vertex quantities of one percolation sample, restricted to the core between the extremes."""

    members: np.ndarray
    in_k: np.ndarray
    gap_ratio: np.ndarray
    gap: np.ndarray
    sent: np.ndarray
    received: np.ndarray


def realize(q: QuotientGraph, n: int, labels: LabelField) -> tuple[ConnectorSet, Realization]:
    """Connectors plus the one-sided ratios ``dist(o, o+)/(o+ - o)`` and the connector transport."""
    k = bernoulli_connectors(q, n, labels)
    opened = k.open
    # order along positions; for sign -1 the roles of the two neighbours swap
    sign = q.sign
    N = q.n
    gap_ratio = np.full(N, np.nan)
    gap = np.zeros(N, dtype=np.int64)
    sent = np.zeros(N)
    received = np.zeros(N)
    plus_side = opened[1:] if sign > 0 else opened[:-1]
    rows = _dist_rows(q, plus_side, int(np.max(np.diff(opened))))
    for j, (x, y) in enumerate(zip(opened[:-1].tolist(), opened[1:].tolist())):
        path = k.connectors[(x, y)]
        # o- <= o < o+ in position order
        senders = np.arange(x, y) if sign > 0 else np.arange(x + 1, y + 1)
        plus = y if sign > 0 else x
        gap[senders] = np.abs(plus - senders)
        gap_ratio[senders] = rows[j][senders] / gap[senders]
        # each of the y - x senders ships 1/(y - x) to every connector vertex
        sent[senders] = len(path) / (y - x)
        received[path] += 1.0
    lo, hi = k.extremes
    members = q.graph.core.copy()
    members[:lo] = False
    members[hi + 1 :] = False
    in_k = np.zeros(N, dtype=bool)
    in_k[list(k.K.vertices)] = True
    return k, Realization(members, in_k, gap_ratio, gap, sent, received)


@dataclass
class BoundReport:
    n: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    head: float
    tail: float
    replicas: int
    skipped: int
    lhs_values: list[float] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 3 * math.hypot(self.lhs_se, self.rhs_se)


def marginal_bound_check(q: QuotientGraph, n: int, M: int = 16, seeds: int = 30, seed: int = 0) -> BoundReport:
    """Compare ``P(o in K_n)`` with ``2 E[dist(o, o+)/(o+ - o)]`` over core vertices and replicas.

    The right side is split into gaps up to ``M`` (head) and longer gaps (tail).
    """
    lhs, rhs, heads, tails = [], [], [], []
    skipped = 0
    for r in range(seeds):
        lab = LabelField(seed + r)
        try:
            _, real = realize(q, n, lab)
        except ValueError as exc:
            if "degenerate" not in str(exc):
                raise
            skipped += 1
            continue
        m = real.members & ~np.isnan(real.gap_ratio)
        if not m.any():
            skipped += 1
            continue
        gr = real.gap_ratio[m]
        short = real.gap[m] <= M
        lhs.append(float(real.in_k[m].mean()))
        rhs.append(2 * float(gr.mean()))
        heads.append(2 * float(np.sum(gr[short])) / m.sum())
        tails.append(2 * float(np.sum(gr[~short])) / m.sum())
    if not lhs:
        raise ValueError("degenerate sample")

    def mse(v):
        a = np.asarray(v)
        return float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else math.nan

    l, lse = mse(lhs)
    rr, rse = mse(rhs)
    return BoundReport(n, l, lse, rr, rse, float(np.mean(heads)), float(np.mean(tails)), len(lhs), skipped, lhs)
