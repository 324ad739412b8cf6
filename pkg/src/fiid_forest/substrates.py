"""Concrete lattice substrates, gridline subgraph sequences and two-ended snake trees."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph_core import SubgraphMask, Window, norm_edge

KINDS = ("grid2d", "torus2d", "ladder", "path")
TWO_D = ("grid2d", "torus2d", "ladder")


@dataclass(frozen=True)
class SubstrateSpec:
    kind: str
    side: int
    margin: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"invalid substrate: unknown kind {self.kind!r}")
        min_side = 8 if self.kind in ("grid2d", "torus2d") else 2
        if self.side < min_side:
            raise ValueError(f"invalid substrate: side must be >= {min_side}")
        if self.margin is not None and self.margin < 0:
            raise ValueError("invalid substrate: negative margin")

    @property
    def shape(self) -> tuple[int, int]:
        if self.kind == "ladder":
            return 2, self.side
        if self.kind == "path":
            return 1, self.side
        return self.side, self.side

    @property
    def effective_margin(self) -> int:
        return self.side // 4 if self.margin is None else self.margin


def make_window(spec: SubstrateSpec) -> Window:
    """Build the window for ``spec``; vertex id is ``y * width + x``."""
    width, height = spec.shape
    wrap = spec.kind == "torus2d"
    n = width * height
    xs = np.arange(n) % width
    ys = np.arange(n) // width
    nbrs: list[list[int]] = [[] for _ in range(n)]

    def link(u: int, v: int) -> None:
        if v not in nbrs[u]:
            nbrs[u].append(v)
            nbrs[v].append(u)

    for v in range(n):
        x, y = int(xs[v]), int(ys[v])
        if x + 1 < width:
            link(v, v + 1)
        elif wrap:
            link(v, y * width)
        if y + 1 < height:
            link(v, v + width)
        elif wrap:
            link(v, x)

    margin = spec.effective_margin
    if wrap:
        core = np.ones(n, dtype=bool)
    elif spec.kind == "grid2d":
        core = np.minimum.reduce([xs, ys, width - 1 - xs, height - 1 - ys]) >= margin
    else:
        core = np.minimum(ys, height - 1 - ys) >= margin
    root = (height // 2) * width + width // 2
    if not core[root]:
        raise ValueError("invalid substrate: margin leaves an empty core")
    return Window(
        adj=tuple(tuple(sorted(a)) for a in nbrs),
        root=root,
        core=core,
        wrap=wrap,
        coords=np.stack([xs, ys], axis=1),
        kind=spec.kind,
        width=width,
        height=height,
    )


def dyadic_exponent(w: Window) -> int:
    if w.kind not in ("grid2d", "torus2d"):
        raise ValueError("substrate unsupported")
    side = w.width
    s = side.bit_length() - 1
    if side != 1 << s:
        raise ValueError("side must be dyadic")
    return s


def gridline_subgraph(w: Window, n: int) -> SubgraphMask:
    """Lattice lines at spacing ``2**n`` through the origin.

    Level 0 is the whole window; the top level ``s`` (side ``2**s``) keeps
    only the two axis lines.
    """
    s = dyadic_exponent(w)
    if not 0 <= n <= s:
        raise ValueError("level exceeds window")
    step = 1 << n
    xs, ys = w.coords[:, 0], w.coords[:, 1]
    on_col = xs % step == 0
    on_row = ys % step == 0
    keep = on_col | on_row
    verts = {int(v) for v in np.flatnonzero(keep)}
    edges = set()
    for u, v in w.edges:
        if not (keep[u] and keep[v]):
            continue
        horizontal = ys[u] == ys[v]
        if (horizontal and on_row[u]) or (not horizontal and on_col[u]):
            edges.add((int(u), int(v)))
    return SubgraphMask(verts, edges)


@dataclass
class TwoEndedTree:
    """Spanning tree with a distinguished spine path and finite bushes."""

    tree: SubgraphMask
    spine: list[int]
    bush_of: np.ndarray

    @cached_property
    def spine_index(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.spine)}

    @cached_property
    def bushes(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {x: [] for x in self.spine}
        for v, x in enumerate(self.bush_of.tolist()):
            out[x].append(v)
        return out

    @classmethod
    def from_path(cls, w: Window, path: list[int]) -> "TwoEndedTree":
        tree = SubgraphMask.from_edges(zip(path, path[1:]), path)
        bush_of = np.full(w.n, -1, dtype=np.int64)
        bush_of[list(path)] = path
        return cls(tree, list(path), bush_of)


def snake_tree(w: Window, pendant: bool = False) -> TwoEndedTree:
    """Boustrophedon spanning tree with a long spine.

    ``pendant=False`` gives a Hamiltonian path that is its own spine.
    ``pendant=True`` runs the spine along even rows, turning through one
    end vertex of each odd row; every other odd-row vertex hangs off the
    spine vertex directly below it.
    """
    if w.kind not in TWO_D or w.coords is None:
        raise ValueError("substrate unsupported")
    width, height = w.width, w.height

    def vid(x: int, y: int) -> int:
        return y * width + x

    def row(y: int, forward: bool) -> list[int]:
        xs = range(width) if forward else range(width - 1, -1, -1)
        return [vid(x, y) for x in xs]

    if not pendant:
        spine = [v for y in range(height) for v in row(y, y % 2 == 0)]
        return TwoEndedTree.from_path(w, spine)

    spine: list[int] = []
    even_rows = list(range(0, height, 2))
    for i, y in enumerate(even_rows):
        forward = i % 2 == 0
        spine.extend(row(y, forward))
        if y + 2 < height:
            spine.append(vid(width - 1 if forward else 0, y + 1))
    on_spine = set(spine)
    bush_of = np.empty(w.n, dtype=np.int64)
    tree = SubgraphMask.from_edges(zip(spine, spine[1:]), spine)
    for v in spine:
        bush_of[v] = v
    for v in range(w.n):
        if v in on_spine:
            continue
        below = v - width
        tree.add_edge(below, v)
        bush_of[v] = below
    return TwoEndedTree(tree, spine, bush_of)


def validate_two_ended(w: Window, t: TwoEndedTree) -> None:
    from .graph_core import is_spanning_tree

    if not is_spanning_tree(w, t.tree):
        raise ValueError("tree is not a spanning tree")
    for a, b in zip(t.spine, t.spine[1:]):
        if norm_edge(a, b) not in t.tree.edges:
            raise ValueError("spine is not a path in the tree")
    for x in t.spine:
        if t.bush_of[x] != x:
            raise ValueError("bush_of must fix spine vertices")
