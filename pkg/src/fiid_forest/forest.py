"""Stage-by-stage construction of a spanning tree with one end from a thinning sequence of subgraphs.

Stage ``n`` starts from a forest ``F_n`` covering every vertex outside
``H_{k(n)}``. Each component is hung from an anchor in the annulus
``H_{k(n)} \\ H_{k(n+1)}``, a breadth-first forest is grown inside that
annulus from its outer rim, and components lying inside one block of the
partition hierarchy are joined. The union is ``F_{n+1}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .graph_core import (
    LabelField,
    SubgraphMask,
    UnionFind,
    Window,
    component_labels,
    connected_components,
    edge_matrix,
)
from .partitions import Hierarchy, build_block_hierarchy
from .substrates import dyadic_exponent, gridline_subgraph

log = logging.getLogger(__name__)


class WindowExhausted(RuntimeError):
    pass


# --- thinning sequence ---------------------------------------------------------------


def _multi_source_dist(w: Window, sources: set[int]) -> np.ndarray:
    n = w.n
    dist = np.full(n, np.inf)
    frontier = sorted(sources)
    for s in frontier:
        dist[s] = 0
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in w.adj[u]:
                if dist[v] == np.inf:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist


def nest_sequence(w: Window, hs: list[SubgraphMask], eps: float, labels: LabelField) -> list[SubgraphMask]:
    """Make a sequence of connected subgraphs nested by adding short connecting paths.

    For consecutive levels at graph distance ``k > 0``, every vertex of the
    coarser-indexed level at distance ``k`` from the next level contributes
    a fixed shortest path, kept with probability ``eps / (k + 1)``. Output
    level ``n`` is the union of all modified levels ``>= n``.
    """
    if not hs:
        raise ValueError("empty H sequence")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    for h in hs:
        if not h.vertices or len(connected_components(w, h)) != 1:
            raise ValueError("H_n must be connected")
    modified = []
    for n, (cur, nxt) in enumerate(zip(hs, hs[1:])):
        dist = _multi_source_dist(w, nxt.vertices)
        k = min(dist[v] for v in cur.vertices)
        out = cur.copy()
        if k > 0:
            k = int(k)
            starts = sorted(v for v in cur.vertices if dist[v] == k)
            picked = [v for v in starts if labels.stream(f"nest-{n}", v) < eps / (k + 1)]
            if not picked:
                # a finite window may select nothing; keep the connection with the smallest label
                picked = [min(starts, key=lambda v: labels.stream(f"nest-{n}", v))]
            for v in picked:
                while dist[v] > 0:
                    u = min(x for x in w.adj[v] if dist[x] == dist[v] - 1)
                    out.add_edge(v, u)
                    v = u
        modified.append(out)
    modified.append(hs[-1].copy())
    result = [modified[-1]]
    for h in reversed(modified[:-1]):
        result.append(h.union(result[-1]))
    return result[::-1]


def thinning_levels(w: Window) -> list[SubgraphMask]:
    """Gridline levels ``0..s`` followed by the single vertex at the origin."""
    s = dyadic_exponent(w)
    levels = [gridline_subgraph(w, j) for j in range(s + 1)]
    levels.append(SubgraphMask({0}, set()))
    return levels


# --- array kernels -----------------------------------------------------------------------


def _edge_in_mask(w: Window, m: SubgraphMask) -> np.ndarray:
    out = np.zeros(len(w.edges), dtype=bool)
    idx = [w.edge_index[e] for e in m.edges]
    out[idx] = True
    return out


def _first_per_group(groups: np.ndarray, *keys: np.ndarray) -> np.ndarray:
    """Index of the smallest ``keys`` row within each group (lexicographic)."""
    order = np.lexsort(tuple(reversed(keys)) + (groups,))
    g = groups[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = g[1:] != g[:-1]
    return order[first]


@dataclass
class Annulus:
    members: np.ndarray
    rim: np.ndarray
    layer: np.ndarray
    parent_edges: np.ndarray


def annulus_forest_arrays(
    w: Window, in_cur: np.ndarray, cur_edges: np.ndarray, in_next: np.ndarray, labels: LabelField
) -> Annulus:
    if np.any(in_next & ~in_cur):
        raise ValueError("H sequence not nested")
    members = in_cur & ~in_next
    E = w.edges
    hu, hv = E[:, 0], E[:, 1]
    to_next = cur_edges & ((members[hu] & in_next[hv]) | (members[hv] & in_next[hu]))
    rim = np.zeros(w.n, dtype=bool)
    rim[hu[to_next & members[hu]]] = True
    rim[hv[to_next & members[hv]]] = True
    inner = cur_edges & members[hu] & members[hv]
    layer = np.full(w.n, -1, dtype=np.int64)
    if not members.any():
        return Annulus(members, rim, layer, np.zeros(0, dtype=np.int64))
    sources = np.flatnonzero(rim)
    if len(sources) == 0:
        raise ValueError("annulus has no outer rim")
    d = dijkstra(edge_matrix(w.n, E[inner]), directed=False, indices=sources, unweighted=True, min_only=True)
    if np.any(np.isinf(d[members])):
        raise ValueError("annulus not reachable from its rim")
    layer[members] = d[members].astype(np.int64)
    eidx = np.flatnonzero(inner)
    du, dv = layer[hu[eidx]], layer[hv[eidx]]
    child = np.concatenate([hu[eidx][du == dv + 1], hv[eidx][dv == du + 1]])
    cand = np.concatenate([eidx[du == dv + 1], eidx[dv == du + 1]])
    if len(cand) == 0:
        return Annulus(members, rim, layer, np.zeros(0, dtype=np.int64))
    lab = labels.edge_labels(E[cand], "annulus")
    pick = _first_per_group(child, lab)
    return Annulus(members, rim, layer, np.sort(cand[pick]))


def _comp_contained(comp: np.ndarray, members: np.ndarray, cls: np.ndarray) -> np.ndarray:
    size = comp.max() + 1
    lo = np.full(size, np.iinfo(np.int64).max)
    hi = np.full(size, -1)
    np.minimum.at(lo, comp[members], cls[members])
    np.maximum.at(hi, comp[members], cls[members])
    return lo == hi


def merge_candidates(w: Window, members: np.ndarray, forest_edges: np.ndarray, cls: np.ndarray) -> np.ndarray:
    """Edges inside one class joining two distinct forest components contained in that class."""
    E = w.edges
    comp = component_labels(w.n, E[forest_edges])
    contained = _comp_contained(comp, members, cls)
    u, v = E[:, 0], E[:, 1]
    ok = members[u] & members[v] & (comp[u] != comp[v]) & (cls[u] == cls[v])
    ok &= contained[comp[u]] & contained[comp[v]]
    return np.flatnonzero(ok)


def merge_within_classes_arrays(
    w: Window, members: np.ndarray, forest_edges: np.ndarray, cls: np.ndarray, labels: LabelField
) -> np.ndarray:
    cand = merge_candidates(w, members, forest_edges, cls)
    if len(cand) == 0:
        return cand
    E = w.edges
    comp = component_labels(w.n, E[forest_edges])
    order = cand[np.argsort(labels.edge_labels(E[cand], "merge"), kind="stable")]
    uf = UnionFind(int(comp.max()) + 1)
    added = [e for e in order.tolist() if uf.union(int(comp[E[e, 0]]), int(comp[E[e, 1]]))]
    return np.array(sorted(added), dtype=np.int64)


def choose_anchors(
    w: Window,
    fcomp: np.ndarray,
    eligible: np.ndarray,
    targets: np.ndarray,
    labels: LabelField,
    partial: bool = False,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Per forest component: anchor vertex in ``targets`` and the attaching vertex in ``eligible``.

    Components with no eligible vertex adjacent to ``targets`` get ``-1``
    when ``partial`` is set; otherwise the call returns ``None``.
    """
    ncomp = int(fcomp.max()) + 1 if (fcomp >= 0).any() else 0
    anchor = np.full(ncomp, -1, dtype=np.int64)
    attach = np.full(ncomp, -1, dtype=np.int64)
    if ncomp == 0:
        return anchor, attach
    E = w.edges
    a, b = E[:, 0], E[:, 1]
    fwd = eligible[a] & targets[b]
    bwd = eligible[b] & targets[a]
    us = np.concatenate([a[fwd], b[bwd]])
    vs = np.concatenate([b[fwd], a[bwd]])
    comps = fcomp[us]
    if not partial and len(np.unique(comps)) < ncomp:
        return None
    if len(us):
        pick = _first_per_group(comps, labels.labels("anchor", vs), labels.labels("attach", us))
        anchor[comps[pick]] = vs[pick]
        attach[comps[pick]] = us[pick]
    return anchor, attach


# --- mask-level operations ---------------------------------------------------------------


def annulus_forest(w: Window, H_kn: SubgraphMask, H_knext: SubgraphMask, labels: LabelField) -> SubgraphMask:
    """Breadth-first forest in ``H_kn \\ H_knext`` grown from the vertices adjacent to ``H_knext``."""
    if not H_knext.vertices <= H_kn.vertices:
        raise ValueError("H sequence not nested")
    ann = annulus_forest_arrays(
        w, H_kn.vertex_array(w.n), _edge_in_mask(w, H_kn), H_knext.vertex_array(w.n), labels
    )
    out = SubgraphMask({int(v) for v in np.flatnonzero(ann.members)})
    for e in ann.parent_edges:
        out.add_edge(int(w.edges[e, 0]), int(w.edges[e, 1]))
    return out


def merge_within_classes(
    Fminus: SubgraphMask, h: Hierarchy, m: int, w: Window, labels: LabelField
) -> SubgraphMask:
    """Greedily add acyclic window edges joining components that lie inside one class of level ``m``."""
    members = Fminus.vertex_array(w.n)
    fe = np.array(sorted(w.edge_index[e] for e in Fminus.edges), dtype=np.int64)
    added = merge_within_classes_arrays(w, members, fe, h.levels[m], labels)
    out = Fminus.copy()
    for e in added:
        out.add_edge(int(w.edges[e, 0]), int(w.edges[e, 1]))
    return out


def attach_components(
    w: Window, F: SubgraphMask, H_next: SubgraphMask, labels: LabelField, fresh: set[int] | None = None
) -> tuple[SubgraphMask, dict[int, int]]:
    """Hang every component of ``F`` from one vertex of ``H_next`` by a single edge.

    The anchor is the adjacent ``H_next`` vertex with the smallest ``anchor``
    label; the attaching endpoint is restricted to ``fresh`` (default: all of
    the component). Returns ``F+`` and a map from component minimum vertex
    to anchor.
    """
    if not F.vertices:
        return F.copy(), {}
    comps = connected_components(w, F)
    fcomp = np.full(w.n, -1, dtype=np.int64)
    for i, c in enumerate(comps):
        fcomp[list(c)] = i
    fresh_arr = np.zeros(w.n, dtype=bool)
    fresh_arr[list(F.vertices if fresh is None else fresh)] = True
    got = choose_anchors(w, fcomp, fresh_arr, H_next.vertex_array(w.n), labels)
    if got is None:
        raise ValueError("adjacency precondition failed")
    anchor, attach = got
    out = F.copy()
    anchors = {}
    for i, c in enumerate(comps):
        if anchor[i] in c:
            raise AssertionError("anchor inside its own component")
        out.add_edge(int(anchor[i]), int(attach[i]))
        anchors[min(c)] = int(anchor[i])
    return out, anchors


# --- the staged builder ---------------------------------------------------------------------


@dataclass
class StageRecord:
    n: int
    k_from: int
    k_to: int
    m: int
    connectivity: float
    bound: float
    event_a: float
    annulus_size: int
    merged_edges: int
    deferred: int = 0
    forced: bool = False


@dataclass
class ForestState:
    """Recursion state: forest ``F_n`` covering every vertex outside ``H_{k(n)}``.

    ``cut_anchor[v]`` is the anchor that the component of ``v`` was first
    hung from and ``cut_child[v]`` the endpoint of that hanging edge; both
    are ``-1`` while ``v`` is not yet hung.
    """

    n: int
    F_edges: np.ndarray
    k: list[int]
    absorbed: np.ndarray
    absorbed_at: np.ndarray
    cut_anchor: np.ndarray
    cut_child: np.ndarray
    anchors: dict[int, int] = field(default_factory=dict)
    history: list[StageRecord] = field(default_factory=list)
    closure_edges: int = 0

    @property
    def uncut(self) -> np.ndarray:
        return self.absorbed & (self.cut_anchor < 0)

    def mask(self, w: Window) -> SubgraphMask:
        verts = {int(v) for v in np.flatnonzero(self.absorbed)}
        return SubgraphMask(verts, {(int(u), int(v)) for u, v in w.edges[self.F_edges]})


def pair_connectivity(w: Window, present: np.ndarray, comp: np.ndarray) -> float:
    """Fraction of ordered core pairs (o, x), x a neighbour of o, joined in the forest."""
    o, x = w.core_pairs[:, 0], w.core_pairs[:, 1]
    return float(np.mean(present[o] & present[x] & (comp[o] == comp[x])))


@dataclass
class _Plan:
    k_to: int
    annulus: Annulus
    fcomp: np.ndarray
    anchor: np.ndarray
    attach: np.ndarray


def _hang(st: ForestState, fcomp: np.ndarray, anchor: np.ndarray, attach: np.ndarray):
    """Hanging edges for anchored components and the updated cut arrays."""
    cut_anchor, cut_child = st.cut_anchor.copy(), st.cut_child.copy()
    uncut = st.uncut
    c = fcomp[uncut]
    cut_anchor[uncut] = anchor[c] if len(anchor) else -1
    cut_child[uncut] = attach[c] if len(attach) else -1
    ok = anchor >= 0
    lo = np.minimum(anchor[ok], attach[ok])
    hi = np.maximum(anchor[ok], attach[ok])
    return (lo, hi), cut_anchor, cut_child


class ForestBuilder:
    """Runs the staged construction on a dyadic lattice window.

    Each stage takes the smallest next level index, and then the smallest
    partition level, for which the measured pair connectivity of the new
    forest reaches ``1 - 2**-(n+1)``. A component with no neighbour in the
    current annulus is left unattached until a later stage.
    """

    def __init__(self, w: Window, labels: LabelField, eps: float = 0.5, max_stage: int | None = None) -> None:
        self.w = w
        self.labels = labels
        self.eps = eps
        self.max_stage = max_stage
        self.levels = nest_sequence(w, thinning_levels(w), eps, labels)
        self.in_h = [h.vertex_array(w.n) for h in self.levels]
        self.h_edges = [_edge_in_mask(w, h) for h in self.levels]
        self.hier = build_block_hierarchy(w)
        self.last = len(self.levels) - 1

    def initial_state(self) -> ForestState:
        n = self.w.n
        return ForestState(
            n=0,
            F_edges=np.zeros(0, dtype=np.int64),
            k=[0],
            absorbed=np.zeros(n, dtype=bool),
            absorbed_at=np.full(n, -1, dtype=np.int64),
            cut_anchor=np.full(n, -1, dtype=np.int64),
            cut_child=np.full(n, -1, dtype=np.int64),
            history=[StageRecord(0, 0, 0, -1, 0.0, 0.0, 0.0, 0, 0)],
        )

    def _forest_comp(self, st: ForestState) -> np.ndarray:
        comp = component_labels(self.w.n, self.w.edges[st.F_edges])
        out = np.full(self.w.n, -1, dtype=np.int64)
        _, dense = np.unique(comp[st.absorbed], return_inverse=True)
        out[st.absorbed] = dense
        return out

    def _plan(self, st: ForestState, fcomp: np.ndarray, k_to: int) -> _Plan:
        cur = st.k[-1]
        ann = annulus_forest_arrays(self.w, self.in_h[cur], self.h_edges[cur], self.in_h[k_to], self.labels)
        anchor, attach = choose_anchors(self.w, fcomp, st.uncut, ann.members, self.labels, partial=True)
        return _Plan(k_to, ann, fcomp, anchor, attach)

    def _predicted(self, st: ForestState, plan: _Plan, m: int) -> float:
        """Connectivity of ``F_{n+1}`` read off through the anchors, before building it."""
        ann = plan.annulus
        cand = merge_candidates(self.w, ann.members, ann.parent_edges, self.hier.levels[m])
        closure = component_labels(self.w.n, self.w.edges[np.concatenate([ann.parent_edges, cand])])
        key = np.full(self.w.n, -1, dtype=np.int64)
        key[ann.members] = closure[ann.members]
        if len(plan.anchor):
            ab = np.flatnonzero(st.absorbed)
            c = plan.fcomp[ab]
            a = plan.anchor[c]
            key[ab] = np.where(a >= 0, closure[np.maximum(a, 0)], self.w.n + c)
        return pair_connectivity(self.w, key >= 0, key)

    def step(self, st: ForestState) -> ForestState:
        """Build ``F_{n+1}`` from ``F_n``."""
        n = st.n
        target = 1.0 - 2.0 ** -(n + 1)
        cur = st.k[-1]
        if cur >= self.last:
            raise WindowExhausted(f"window exhausted at stage {n}")
        fcomp = self._forest_comp(st)
        chosen = None
        for k_to in range(cur + 1, self.last + 1):
            plan = self._plan(st, fcomp, k_to)
            for m in range(self.hier.max_level + 1):
                conn = self._predicted(st, plan, m)
                if conn >= target:
                    chosen = (plan, m, conn)
                    break
            if chosen:
                break
        forced = chosen is None
        if forced:
            # target out of reach on this window: close out with the coarsest choices
            log.info("stage %d: target %.4f unreachable, using last level", n, target)
            chosen = (plan, self.hier.max_level, conn)
        plan, m, predicted = chosen
        return self._commit(st, plan, m, predicted, target, forced)

    def _commit(self, st, plan: _Plan, m: int, predicted: float, target: float, forced: bool) -> ForestState:
        w = self.w
        ann = plan.annulus
        merged = merge_within_classes_arrays(w, ann.members, ann.parent_edges, self.hier.levels[m], self.labels)
        (lo, hi), cut_anchor, cut_child = _hang(st, plan.fcomp, plan.anchor, plan.attach)
        hang = np.array([w.edge_index[(int(a), int(b))] for a, b in zip(lo, hi)], dtype=np.int64)
        F_edges = np.unique(np.concatenate([st.F_edges, ann.parent_edges, merged, hang]))
        absorbed = st.absorbed | ann.members
        stage = st.n + 1
        absorbed_at = st.absorbed_at.copy()
        absorbed_at[ann.members] = stage
        comp = component_labels(w.n, w.edges[F_edges])
        record = StageRecord(
            n=stage,
            k_from=st.k[-1],
            k_to=plan.k_to,
            m=m,
            connectivity=pair_connectivity(w, absorbed, comp),
            bound=target,
            event_a=predicted,
            annulus_size=int(ann.members.sum()),
            merged_edges=len(merged),
            deferred=int(np.sum(plan.anchor < 0)),
            forced=forced,
        )
        roots = np.flatnonzero(st.absorbed)
        first: dict[int, int] = {}
        for v, c in zip(roots.tolist(), plan.fcomp[roots].tolist()):
            first.setdefault(c, v)
        anchors = {v: int(plan.anchor[c]) for c, v in first.items() if plan.anchor[c] >= 0}
        return ForestState(
            n=stage,
            F_edges=F_edges,
            k=st.k + [plan.k_to],
            absorbed=absorbed,
            absorbed_at=absorbed_at,
            cut_anchor=cut_anchor,
            cut_child=cut_child,
            anchors=anchors,
            history=st.history + [record],
        )

    def finish(self, st: ForestState) -> ForestState:
        """Hang the last forest from the final level and join anything still separate."""
        w = self.w
        last = self.in_h[st.k[-1]]
        fcomp = self._forest_comp(st)
        anchor, attach = choose_anchors(w, fcomp, st.uncut, last, self.labels, partial=True)
        (lo, hi), cut_anchor, cut_child = _hang(st, fcomp, anchor, attach)
        hang = np.array([w.edge_index[(int(a), int(b))] for a, b in zip(lo, hi)], dtype=np.int64)
        F_edges = np.unique(np.concatenate([st.F_edges, hang]))
        # finite-window closure, smallest edge label first
        comp = component_labels(w.n, w.edges[F_edges])
        closure = []
        if comp.max() > 0:
            order = np.argsort(self.labels.edge_labels(w.edges, "closure"), kind="stable")
            uf = UnionFind(int(comp.max()) + 1)
            for e in order.tolist():
                if uf.union(int(comp[w.edges[e, 0]]), int(comp[w.edges[e, 1]])):
                    closure.append(e)
        F_edges = np.unique(np.concatenate([F_edges, np.array(closure, dtype=np.int64)]))
        return ForestState(
            n=st.n,
            F_edges=F_edges,
            k=st.k,
            absorbed=np.ones(w.n, dtype=bool),
            absorbed_at=np.where(last, st.n + 1, st.absorbed_at),
            cut_anchor=cut_anchor,
            cut_child=cut_child,
            anchors=st.anchors,
            history=st.history,
            closure_edges=len(closure),
        )

    def run(self) -> ForestState:
        st = self.initial_state()
        while st.k[-1] < self.last:
            if self.max_stage is not None and st.n >= self.max_stage:
                break
            st = self.step(st)
        return self.finish(st)


@dataclass
class TreeReport:
    stages: list[StageRecord]
    k: list[int]
    closure_edges: int
    vertices: int


def build_one_ended_tree(
    w: Window, labels: LabelField, eps: float = 0.5, max_stage: int | None = None
) -> tuple[SubgraphMask, TreeReport, ForestState]:
    builder = ForestBuilder(w, labels, eps=eps, max_stage=max_stage)
    st = builder.run()
    report = TreeReport(st.history, st.k, st.closure_edges, w.n)
    return st.mask(w), report, st


def stage_invariants(w: Window, builder: ForestBuilder, st: ForestState) -> list[str]:
    """Forest, edges outside ``H_{k(n)}``, and every component adjacent to ``H_{k(n)}``."""
    problems = []
    E = w.edges[st.F_edges]
    comp = component_labels(w.n, E)
    touched = st.absorbed
    ncomp = len(np.unique(comp[touched])) if touched.any() else 0
    if len(E) != int(touched.sum()) - ncomp:
        problems.append("not a forest")
    inside = builder.in_h[st.k[-1]]
    if len(E) and np.any(inside[E[:, 0]] | inside[E[:, 1]]):
        problems.append("forest edge touches H_k(n)")
    if np.any(~touched & ~inside) or np.any(touched & inside):
        problems.append("forest does not cover exactly the complement of H_k(n)")
    if touched.any():
        a, b = w.edges[:, 0], w.edges[:, 1]
        adj = np.concatenate([comp[a][touched[a] & inside[b]], comp[b][touched[b] & inside[a]]])
        if len(np.unique(adj)) != ncomp:
            problems.append("component not adjacent to H_k(n)")
    return problems


# --- one-end proxy ---------------------------------------------------------------------------


@dataclass
class EndProxy:
    sizes: np.ndarray
    mean: float
    p99: float
    histogram: dict[int, int]


def _rooted(w: Window, edges: np.ndarray, root: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    nbrs: list[list[int]] = [[] for _ in range(w.n)]
    for u, v in edges.tolist():
        nbrs[u].append(v)
        nbrs[v].append(u)
    parent = np.full(w.n, -1, dtype=np.int64)
    order = [root]
    parent[root] = root
    for u in order:
        for v in nbrs[u]:
            if parent[v] < 0:
                parent[v] = u
                order.append(v)
    size = np.ones(w.n, dtype=np.int64)
    for u in reversed(order[1:]):
        size[parent[u]] += size[u]
    tin = np.zeros(w.n, dtype=np.int64)
    tout = np.zeros(w.n, dtype=np.int64)
    # iterative Euler tour for ancestor tests
    children: list[list[int]] = [[] for _ in range(w.n)]
    for u in order[1:]:
        children[parent[u]].append(u)
    clock = 0
    stack = [(root, 0)]
    while stack:
        u, i = stack.pop()
        if i == 0:
            tin[u] = clock
            clock += 1
        if i < len(children[u]):
            stack.append((u, i + 1))
            stack.append((children[u][i], 0))
        else:
            tout[u] = clock
    return parent, size, tin, tout


def end_proxy_stats(F: SubgraphMask, st: ForestState, w: Window) -> EndProxy:
    """Size of the piece of ``F`` holding ``v`` once ``v``'s anchor is removed, over core vertices."""
    if st is None or not np.any(st.cut_anchor >= 0):
        raise ValueError("state required")
    edges = np.array(sorted(F.edges), dtype=np.int64).reshape(-1, 2)
    root = 0
    parent, size, tin, tout = _rooted(w, edges, root)
    verts = [v for v in w.core_vertices.tolist() if st.cut_anchor[v] >= 0]
    out = np.empty(len(verts), dtype=np.int64)
    for i, v in enumerate(verts):
        a, c = int(st.cut_anchor[v]), int(st.cut_child[v])
        if parent[c] == a and tin[c] <= tin[v] < tout[c]:
            out[i] = size[c]
        elif tin[a] <= tin[v] < tout[a]:
            # v below a through another child; locate it by walking up
            x = v
            while parent[x] != a:
                x = parent[x]
            out[i] = size[x]
        else:
            out[i] = w.n - size[a]
    vals, counts = np.unique(out, return_counts=True)
    return EndProxy(
        sizes=out,
        mean=float(out.mean()),
        p99=float(np.percentile(out, 99)),
        histogram=dict(zip(vals.tolist(), counts.tolist())),
    )
