"""Mass-transport identities on finite transitive windows and replica estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from .graph_core import Window


@dataclass
class TransportRule:
    """Nonnegative mass sent from ``u`` to ``v`` given a realized configuration.

    ``sends`` may list the receivers with positive mass for a sender, which
    avoids the all-pairs loop; the result must agree with ``mass``.
    """

    name: str
    mass: Callable[[Window, Any, int, int], float]
    sends: Callable[[Window, Any, int], Iterable[tuple[int, float]]] | None = None

    def outgoing(self, w: Window, cfg, u: int) -> list[tuple[int, float]]:
        if self.sends is not None:
            return list(self.sends(w, cfg, u))
        out = []
        for v in range(w.n):
            m = self.mass(w, cfg, u, v)
            if m:
                out.append((v, m))
        return out


@dataclass
class MTPResult:
    mass_out_avg: float
    mass_in_avg: float
    received: np.ndarray

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.mass_out_avg), abs(self.mass_in_avg), 1e-300)
        return abs(self.mass_out_avg - self.mass_in_avg) / scale


def mtp_check(w: Window, cfg, rule: TransportRule) -> MTPResult:
    """Average mass sent and average mass received, accumulated separately."""
    if not w.is_transitive_proxy():
        raise ValueError("MTP check requires transitive window")
    sent_tot = []
    inbox: list[list[float]] = [[] for _ in range(w.n)]
    for u in range(w.n):
        row = rule.outgoing(w, cfg, u)
        for v, m in row:
            if m < 0 or not math.isfinite(m):
                raise ValueError(f"rule {rule.name} produced invalid mass {m}")
            inbox[v].append(m)
        sent_tot.append(math.fsum(m for _, m in row))
    received = np.array([math.fsum(r) for r in inbox])
    return MTPResult(math.fsum(sent_tot) / w.n, math.fsum(received.tolist()) / w.n, received)


def neighbour_rule() -> TransportRule:
    return TransportRule(
        "neighbour",
        lambda w, cfg, u, v: 1.0 if v in w.adj[u] else 0.0,
        lambda w, cfg, u: [(v, 1.0) for v in w.adj[u]],
    )


@dataclass
class ConnectorConfig:
    """Spine-indexed connectors laid over a window whose vertices are the spine indices."""

    spine: list[int]
    open: np.ndarray
    connectors: dict[tuple[int, int], list[int]]
    minus: dict[int, tuple[int, int]] = field(default_factory=dict)

    @classmethod
    def build(cls, spine: list[int], open_idx: np.ndarray, connectors: dict, sign: int = 1) -> "ConnectorConfig":
        minus = {}
        for x, y in connectors:
            senders = range(x, y) if sign > 0 else range(x + 1, y + 1)
            for o in senders:
                minus[spine[o]] = (x, y)
        return cls(list(spine), np.asarray(open_idx), dict(connectors), minus)


def connector_rule() -> TransportRule:
    """Each vertex ``o`` sends ``1/(o+ - o-)`` to every vertex of the connector between them."""

    def sends(w, cfg: ConnectorConfig, u):
        pair = cfg.minus.get(u)
        if pair is None:
            return []
        x, y = pair
        share = 1.0 / (y - x)
        return [(cfg.spine[i], share) for i in cfg.connectors[pair]]

    def mass(w, cfg: ConnectorConfig, u, v):
        return dict(sends(w, cfg, u)).get(v, 0.0)

    return TransportRule("connector", mass, sends)


@dataclass
class EstimateReport:
    mean: float
    se: float
    replicas: int
    se_defined: bool
    stages: dict[Any, "EstimateReport"] = field(default_factory=dict)


def estimate(values, stages: dict | None = None) -> EstimateReport:
    """Mean and standard error across replicas; a single replica leaves the error undefined."""
    a = np.asarray(list(values), dtype=float)
    if a.size == 0:
        raise ValueError("empty input")
    sub = {k: estimate(v) for k, v in (stages or {}).items()}
    if a.size == 1:
        return EstimateReport(float(a[0]), math.nan, 1, False, sub)
    return EstimateReport(float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size)), int(a.size), True, sub)
