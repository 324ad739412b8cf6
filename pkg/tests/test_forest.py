import numpy as np
import pytest

from fiid_forest.forest import (
    ForestBuilder,
    WindowExhausted,
    annulus_forest,
    attach_components,
    build_one_ended_tree,
    end_proxy_stats,
    merge_within_classes,
    nest_sequence,
    stage_invariants,
    thinning_levels,
)
from fiid_forest.graph_core import (
    LabelField,
    SubgraphMask,
    UnionFind,
    Window,
    connected_components,
    is_forest,
    is_spanning_tree,
)
from fiid_forest.partitions import build_block_hierarchy
from fiid_forest.substrates import SubstrateSpec, gridline_subgraph, make_window


def path_window(n):
    return Window.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def torus(side):
    return make_window(SubstrateSpec("torus2d", side))


def test_nest_sequence_identity_on_nested_levels():
    w = torus(16)
    hs = [gridline_subgraph(w, j) for j in range(5)]
    out = nest_sequence(w, hs, 0.5, LabelField(0))
    assert [h.vertices for h in out] == [h.vertices for h in hs]
    assert [h.edges for h in out] == [h.edges for h in hs]


def test_nest_sequence_bridges_at_distance_one():
    # two disjoint edges joined by three candidate bridges of length 1
    w = Window.from_edges(6, [(0, 1), (2, 3), (4, 5), (0, 2), (2, 4), (1, 3), (3, 5)])
    lower = SubgraphMask.from_edges([(0, 1)])
    upper = SubgraphMask.from_edges([(2, 3)])
    picked = 0
    trials = 1000
    for seed in range(trials):
        out = nest_sequence(w, [lower, upper], 1.0, LabelField(seed))
        assert len(connected_components(w, out[0])) == 1
        picked += len(out[0].edges) - 2
    # each of the two bridges is kept with probability 1/2; at least one always survives
    assert abs(picked / trials - (1.0 + 0.25)) < 0.1


def test_nest_sequence_errors():
    w = path_window(4)
    with pytest.raises(ValueError):
        nest_sequence(w, [], 0.5, LabelField(0))
    broken = SubgraphMask({0, 3})
    with pytest.raises(ValueError, match="H_n must be connected"):
        nest_sequence(w, [broken], 0.5, LabelField(0))


def test_attach_unique_anchor():
    w = path_window(5)
    F = SubgraphMask.from_edges([(0, 1)])
    out, anchors = attach_components(w, F, SubgraphMask.from_edges([(2, 3), (3, 4)]), LabelField(0))
    assert anchors == {0: 2}
    assert out.edges == {(0, 1), (1, 2)}


def test_attach_shared_anchor_stays_forest():
    # star around vertex 0; two components {1,2} and {3,4} both touch 0
    w = Window.from_edges(6, [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)])
    F = SubgraphMask.from_edges([(1, 2), (3, 4)])
    out, anchors = attach_components(w, F, SubgraphMask({0, 5}, {(0, 5)}), LabelField(3))
    assert set(anchors.values()) == {0}
    assert is_forest(w, out)


def test_attach_empty_and_precondition():
    w = path_window(5)
    out, anchors = attach_components(w, SubgraphMask(), SubgraphMask({4}), LabelField(0))
    assert out == SubgraphMask() and anchors == {}
    with pytest.raises(ValueError, match="adjacency precondition failed"):
        attach_components(w, SubgraphMask.from_edges([(0, 1)]), SubgraphMask({4}), LabelField(0))


def test_annulus_forced_chain():
    w = path_window(5)
    f = annulus_forest(w, SubgraphMask.full(w), SubgraphMask({4}), LabelField(0))
    assert f.vertices == {0, 1, 2, 3}
    assert f.edges == {(0, 1), (1, 2), (2, 3)}
    assert len(connected_components(w, f)) == 1


@pytest.mark.parametrize("seed", range(6))
def test_annulus_two_rims(seed):
    w = path_window(7)
    top = SubgraphMask({0, 6})
    # H_kn must contain H_knext; only the middle is annulus
    f = annulus_forest(w, SubgraphMask.full(w), top, LabelField(seed))
    comps = connected_components(w, f)
    assert len(comps) == 2
    assert all(len(c & {1, 5}) == 1 for c in comps)
    assert len(f.edges) == 5 - 2


def test_annulus_empty_and_not_nested():
    w = path_window(5)
    full = SubgraphMask.full(w)
    assert annulus_forest(w, full, full, LabelField(0)).edges == set()
    with pytest.raises(ValueError, match="H sequence not nested"):
        annulus_forest(w, SubgraphMask({0, 1}, {(0, 1)}), SubgraphMask({4}), LabelField(0))


def test_merge_examples():
    w = torus(8)
    h = build_block_hierarchy(w)
    # vertices 0 and 1 share a level-1 block; 1 and 2 do not
    F = SubgraphMask({0, 1})
    out = merge_within_classes(F, h, 1, w, LabelField(0))
    assert out.edges == {(0, 1)}
    F = SubgraphMask({1, 2})
    assert merge_within_classes(F, h, 1, w, LabelField(0)).edges == set()


@pytest.mark.parametrize("seed", range(4))
def test_merge_reaches_minimal_component_count(seed):
    w = torus(16)
    h = build_block_hierarchy(w)
    lab = LabelField(seed)
    f = annulus_forest(w, SubgraphMask.full(w), gridline_subgraph(w, 2), lab)
    for m in range(h.max_level + 1):
        out = merge_within_classes(f, h, m, w, lab)
        assert is_forest(w, out) and f.issubset(out)
        # oracle: union-find closure over every eligible window edge
        comps = connected_components(w, f)
        cid = {v: i for i, c in enumerate(comps) for v in c}
        cls = h.levels[m]
        inside = [len({int(cls[v]) for v in c}) == 1 for c in comps]
        uf = UnionFind(len(comps))
        for u, v in w.edges.tolist():
            if u in cid and v in cid and cls[u] == cls[v] and inside[cid[u]] and inside[cid[v]]:
                uf.union(cid[u], cid[v])
        expected = len({uf.find(i) for i in range(len(comps))})
        assert len(connected_components(w, out)) == expected


@pytest.mark.parametrize("side", [8, 16, 32])
def test_stage_invariants_hold(side):
    w = torus(side)
    b = ForestBuilder(w, LabelField(side))
    st = b.initial_state()
    prev = st.F_edges
    while st.k[-1] < b.last:
        st = b.step(st)
        assert stage_invariants(w, b, st) == []
        assert set(prev.tolist()) <= set(st.F_edges.tolist())
        assert is_forest(w, st.mask(w))
        rec = st.history[-1]
        assert rec.connectivity >= rec.bound
        assert rec.event_a == pytest.approx(rec.connectivity)
        prev = st.F_edges
    with pytest.raises(WindowExhausted, match="window exhausted at stage"):
        b.step(st)


def test_first_stage_spans_annulus():
    w = torus(16)
    b = ForestBuilder(w, LabelField(2))
    st = b.step(b.initial_state())
    annulus = b.in_h[0] & ~b.in_h[st.k[-1]]
    assert np.array_equal(st.absorbed, annulus)
    assert st.history[0].connectivity == 0.0 and st.history[0].bound == 0.0


def test_spanning_tree_small():
    w = torus(8)
    F, rep, _ = build_one_ended_tree(w, LabelField(1))
    assert is_spanning_tree(w, F)
    assert rep.closure_edges == 0


def test_seeds_change_the_tree():
    w = torus(8)
    a, _, _ = build_one_ended_tree(w, LabelField(1))
    b, _, _ = build_one_ended_tree(w, LabelField(2))
    assert a.edges != b.edges


def test_max_stage_cap_still_spans():
    w = torus(32)
    F, rep, _ = build_one_ended_tree(w, LabelField(0), max_stage=1)
    assert is_spanning_tree(w, F)
    assert len(rep.stages) == 2


def test_end_proxy_brute_force():
    w = torus(16)
    F, _, st = build_one_ended_tree(w, LabelField(4))
    ep = end_proxy_stats(F, st, w)
    nbrs = F.adjacency()
    verts = [v for v in range(w.n) if st.cut_anchor[v] >= 0]
    for v, got in zip(verts[::7], ep.sizes[::7]):
        a = int(st.cut_anchor[v])
        seen, stack = {v}, [v]
        while stack:
            x = stack.pop()
            for y in nbrs[x]:
                if y != a and y not in seen:
                    seen.add(y)
                    stack.append(y)
        assert got == len(seen)
    assert ep.mean == pytest.approx(ep.sizes.mean())
    assert sum(ep.histogram.values()) == len(ep.sizes)


def test_end_proxy_pieces_stay_below_anchor():
    # the piece cut off is never the side holding the origin
    w = torus(32)
    F, _, st = build_one_ended_tree(w, LabelField(5))
    ep = end_proxy_stats(F, st, w)
    assert ep.sizes.max() < w.n


def test_first_stage_vertices_have_small_pieces():
    w = torus(16)
    F, _, st = build_one_ended_tree(w, LabelField(6))
    ep = end_proxy_stats(F, st, w)
    verts = [v for v in range(w.n) if st.cut_anchor[v] >= 0]
    first = np.array([st.absorbed_at[v] == 1 for v in verts])
    annulus = int(np.sum(st.absorbed_at == 1))
    assert ep.sizes[first].max() <= annulus


def test_end_proxy_requires_state():
    w = torus(8)
    F, _, st = build_one_ended_tree(w, LabelField(1))
    st.cut_anchor[:] = -1
    with pytest.raises(ValueError, match="state required"):
        end_proxy_stats(F, st, w)


def test_thinning_levels_end_at_origin():
    levels = thinning_levels(torus(8))
    assert levels[-1].vertices == {0}
    assert len(levels) == 5


def test_end_proxy_median_does_not_grow():
    meds = []
    for side in (32, 64):
        w = torus(side)
        sizes = [end_proxy_stats(F, st, w).sizes for F, _, st in (build_one_ended_tree(w, LabelField(s)) for s in range(3))]
        meds.append(np.median(np.concatenate(sizes)))
    assert meds[1] <= 2 * meds[0]
