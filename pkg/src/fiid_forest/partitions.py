"""Nested sequence of connected vertex partitions built from aligned dyadic blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import SubgraphMask, Window, connected_components
from .substrates import dyadic_exponent


@dataclass(frozen=True)
class Hierarchy:
    """``levels[m][v]`` is the class id of vertex ``v`` at level ``m``."""

    levels: tuple[np.ndarray, ...]

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def class_of(self, m: int, v: int) -> int:
        if not 0 <= m <= self.max_level:
            raise ValueError("level out of range")
        return int(self.levels[m][v])

    def classes(self, m: int) -> list[np.ndarray]:
        lab = self.levels[m]
        order = np.argsort(lab, kind="stable")
        cuts = np.flatnonzero(np.diff(lab[order])) + 1
        return np.split(order, cuts)


def build_block_hierarchy(w: Window) -> Hierarchy:
    """Level ``m`` splits the window into aligned ``2**m x 2**m`` blocks; level ``s`` is one block."""
    try:
        s = dyadic_exponent(w)
    except ValueError as exc:
        if "dyadic" in str(exc):
            raise
        raise ValueError("side must be dyadic") from exc
    xs, ys = w.coords[:, 0], w.coords[:, 1]
    levels = []
    for m in range(s + 1):
        per_row = w.width >> m
        levels.append(((ys >> m) * per_row + (xs >> m)).astype(np.int64))
    return Hierarchy(tuple(levels))


def class_of(h: Hierarchy, m: int, v: int) -> int:
    return h.class_of(m, v)


def check_hierarchy(w: Window, h: Hierarchy) -> list[str]:
    """Connectivity of every class, refinement between levels and a single top class on the core."""
    problems = []
    for m, lab in enumerate(h.levels):
        for members in h.classes(m):
            if len(connected_components(w, SubgraphMask.induced(w, members))) != 1:
                problems.append(f"level {m}: class {int(lab[members[0]])} disconnected")
        if m + 1 <= h.max_level:
            coarse = h.levels[m + 1]
            for members in h.classes(m):
                if len(set(coarse[members].tolist())) != 1:
                    problems.append(f"level {m}: class split at level {m + 1}")
    if len(set(h.levels[-1][w.core].tolist())) != 1:
        problems.append("top level is not a single class on the core")
    return problems
