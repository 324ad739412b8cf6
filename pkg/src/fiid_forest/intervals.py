"""Bridging paths in discrete interval graphs and their snapping onto a coarse grid.

Intervals are discrete: ``Interval(2, 5)`` is the point set ``{2, 3, 4, 5}``
and its length is ``hi - lo``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence


class InvalidIntervalSet(ValueError):
    pass


class CertificateViolation(AssertionError):
    pass


@dataclass(frozen=True, order=True)
class Interval:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> int:
        return self.hi - self.lo

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, x: int) -> bool:
        return self.lo <= x <= self.hi

    def meets(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __repr__(self) -> str:
        return f"[{self.lo},{self.hi}]"


def as_intervals(items) -> list[Interval]:
    return [it if isinstance(it, Interval) else Interval(*it) for it in items]


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[Interval, ...]
    span: Interval

    @classmethod
    def of(cls, items, span=None) -> "IntervalSet":
        ivs = tuple(as_intervals(items))
        if span is None:
            if not ivs:
                raise InvalidIntervalSet("invalid interval set: no intervals")
            span = Interval(min(i.lo for i in ivs), max(i.hi for i in ivs))
        elif not isinstance(span, Interval):
            span = Interval(*span)
        return cls(ivs, span)

    def validate(self) -> None:
        a, b = self.span.lo, self.span.hi
        if not self.intervals:
            raise InvalidIntervalSet("invalid interval set: no intervals")
        if any(i.lo < a or i.hi > b for i in self.intervals):
            raise InvalidIntervalSet("invalid interval set: interval outside span")
        if not any(a in i for i in self.intervals) or not any(b in i for i in self.intervals):
            raise InvalidIntervalSet("invalid interval set: uncovered endpoint")
        if not interval_graph_connected(self.intervals):
            raise InvalidIntervalSet("invalid interval set: disconnected interval graph")


def interval_graph_connected(intervals: Sequence[Interval]) -> bool:
    ordered = sorted(intervals)
    reach = ordered[0].hi
    for iv in ordered[1:]:
        if iv.lo > reach:
            return False
        reach = max(reach, iv.hi)
    return True


@dataclass(frozen=True)
class IntervalPath:
    intervals: tuple[Interval, ...]
    span: Interval

    @property
    def hops(self) -> int:
        return len(self.intervals) - 1

    @property
    def labels(self) -> list[int]:
        """Endpoint values ``x_0 .. x_{2m+1}`` in the interleaved labelling.

        ``I_0 = [x_0, x_2]``, ``I_k = [x_{2k-1}, x_{2k+2}]`` for ``0 < k < m``,
        ``I_m = [x_{2m-1}, x_{2m+1}]``. A one-interval path has labels ``[lo, hi]``.
        """
        m = self.hops
        if m == 0:
            return [self.intervals[0].lo, self.intervals[0].hi]
        xs = [0] * (2 * m + 2)
        for k, (i, j) in enumerate(label_slots(m)):
            xs[i] = self.intervals[k].lo
            xs[j] = self.intervals[k].hi
        return xs

    def multiplicity(self) -> list[int]:
        """Cover count of every point of the span, left to right."""
        a, b = self.span.lo, self.span.hi
        diff = [0] * (b - a + 2)
        for iv in self.intervals:
            lo, hi = max(iv.lo, a), min(iv.hi, b)
            if lo <= hi:
                diff[lo - a] += 1
                diff[hi - a + 1] -= 1
        out, run = [], 0
        for d in diff[:-1]:
            run += d
            out.append(run)
        return out

    def validate(self) -> None:
        ivs = self.intervals
        if not ivs or self.span.lo not in ivs[0] or self.span.hi not in ivs[-1]:
            raise InvalidIntervalSet("path does not bridge the span")
        if any(not p.meets(q) for p, q in zip(ivs, ivs[1:])):
            raise InvalidIntervalSet("consecutive path intervals do not meet")


def label_slots(m: int) -> list[tuple[int, int]]:
    """(lo-label, hi-label) indices for each interval of an ``m``-hop path."""
    if m == 0:
        return [(0, 1)]
    slots = [(0, 2)]
    slots += [(2 * k - 1, 2 * k + 2) for k in range(1, m)]
    slots.append((2 * m - 1, 2 * m + 1))
    return slots


def minimal_bridge_path(s: IntervalSet) -> IntervalPath:
    """Fewest-hop path from an interval containing ``a`` to one containing ``b``.

    Among shortest paths the lexicographically smallest sequence of
    ``(lo, hi)`` pairs is returned.
    """
    s.validate()
    a, b = s.span.lo, s.span.hi
    ivs = sorted(set(s.intervals))
    k = len(ivs)
    nbrs = [[j for j in range(k) if j != i and ivs[i].meets(ivs[j])] for i in range(k)]
    dist = [-1] * k
    queue = deque()
    for i, iv in enumerate(ivs):
        if b in iv:
            dist[i] = 0
            queue.append(i)
    while queue:
        i = queue.popleft()
        for j in nbrs[i]:
            if dist[j] < 0:
                dist[j] = dist[i] + 1
                queue.append(j)
    sources = [i for i, iv in enumerate(ivs) if a in iv and dist[i] >= 0]
    if not sources:
        raise InvalidIntervalSet("invalid interval set: a and b not bridged")
    best = min(dist[i] for i in sources)
    cur = min(i for i in sources if dist[i] == best)
    path = [cur]
    while dist[cur] > 0:
        # nbrs are index-sorted and ivs is sorted, so the first hit is lexicographically smallest
        cur = next(j for j in nbrs[cur] if dist[j] == dist[cur] - 1)
        path.append(cur)
    return IntervalPath(tuple(ivs[i] for i in path), s.span)


ORACLE_CAP = 12


def oracle_bridge_path(s: IntervalSet) -> IntervalPath:
    """Plain forward breadth-first search; a test oracle for :func:`minimal_bridge_path`."""
    if len(s.intervals) > ORACLE_CAP:
        raise ValueError("oracle cap")
    s.validate()
    a, b = s.span.lo, s.span.hi
    ivs = list(s.intervals)
    parent: dict[int, int | None] = {i: None for i, iv in enumerate(ivs) if a in iv}
    frontier = list(parent)
    while frontier:
        for i in frontier:
            if b in ivs[i]:
                chain = [i]
                while parent[chain[-1]] is not None:
                    chain.append(parent[chain[-1]])
                return IntervalPath(tuple(ivs[j] for j in reversed(chain)), s.span)
        nxt = []
        for i in frontier:
            for j, iv in enumerate(ivs):
                if j not in parent and ivs[i].meets(iv):
                    parent[j] = i
                    nxt.append(j)
        frontier = nxt
    raise InvalidIntervalSet("invalid interval set: a and b not bridged")


# --- snapping onto the grid delta*Z ------------------------------------------------


def nearest_grid(x: int, delta: int) -> int:
    """Closest multiple of ``delta``; ties go to the smaller one."""
    q, r = divmod(x, delta)
    return (q + 1) * delta if 2 * r > delta else q * delta


@dataclass
class SnapMap:
    delta: int
    labels: list[int]
    images: list[int]
    method: str = "nearest"
    assignments: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.assignments:
            self.assignments = dict(zip(self.labels, self.images))

    def __call__(self, x: int) -> int:
        return self.assignments[x]

    def snapped(self, p: IntervalPath) -> list[Interval]:
        return [Interval(self.images[i], self.images[j]) for i, j in label_slots(p.hops)]

    @property
    def max_displacement(self) -> int:
        return max(abs(x - g) for x, g in zip(self.labels, self.images))


def _strict_pairs(m: int) -> set[int]:
    # label j must map strictly above label j-1 when j = 2k+1, 1 <= k <= m-1
    return {2 * k + 1 for k in range(1, m)}


def snap_violations(p: IntervalPath, labels: Sequence[int], images: Sequence[int], delta: int) -> list[str]:
    out = []
    strict = _strict_pairs(p.hops)
    for j in range(1, len(labels)):
        if labels[j] == labels[j - 1] and images[j] != images[j - 1]:
            out.append(f"equal endpoints {labels[j]} mapped apart")
        if images[j] < images[j - 1]:
            out.append(f"not monotone at label {j}")
        if j in strict and images[j] <= images[j - 1]:
            out.append(f"triple cover at label {j}")
    for x, g in zip(labels, images):
        if g % delta:
            out.append(f"image {g} off grid")
        if abs(x - g) > 2 * delta:
            out.append(f"displacement {abs(x - g)} > {2 * delta}")
    return out


def _collision_rule(labels: list[int], images: list[int], delta: int) -> list[int]:
    """Split runs of three labels sharing a grid point, left to right."""
    out = list(images)
    i = 0
    while i + 2 < len(labels):
        v = out[i]
        if out[i + 1] == v and out[i + 2] == v and (i + 3 >= len(labels) or out[i + 3] != v):
            if labels[i + 2] > v:
                out[i + 2] = v + delta
            else:
                out[i] = v - delta
            i += 3
        else:
            i += 1
    return out


def _dp_repair(p: IntervalPath, labels: list[int], nearest: list[int], delta: int) -> list[int] | None:
    """Valid images closest to ``nearest``: fewest changed labels, then least total displacement."""
    strict = _strict_pairs(p.hops)
    big = 10 * (len(labels) + 1) * 4 * delta
    cands = []
    for x in labels:
        lo = -((-(x - 2 * delta)) // delta) * delta
        cands.append(list(range(lo, x + 2 * delta + 1, delta)))
    cost = [{g: (g != nearest[0]) * big + abs(labels[0] - g) for g in cands[0]}]
    back: list[dict[int, int]] = [{}]
    for j in range(1, len(labels)):
        row, ptr = {}, {}
        for g in cands[j]:
            best = None
            for h, c in cost[j - 1].items():
                if labels[j] == labels[j - 1]:
                    ok = g == h
                elif j in strict:
                    ok = g > h
                else:
                    ok = g >= h
                if ok and (best is None or c < best[0]):
                    best = (c, h)
            if best is not None:
                row[g] = best[0] + (g != nearest[j]) * big + abs(labels[j] - g)
                ptr[g] = best[1]
        if not row:
            return None
        cost.append(row)
        back.append(ptr)
    g = min(cost[-1], key=lambda k: (cost[-1][k], k))
    out = [g]
    for j in range(len(labels) - 1, 0, -1):
        g = back[j][g]
        out.append(g)
    return out[::-1]


def snap_map(p: IntervalPath, delta: int) -> SnapMap:
    """Monotone rounding of the path's endpoints onto ``delta * Z``.

    Endpoints first go to the nearest grid point. Runs of three endpoints on
    one grid point are split by shifting the outer one a step outwards. If
    the result still lets three snapped intervals share a point (two
    endpoints of non-consecutive intervals on one grid point, or four-label
    runs), the images are re-chosen by dynamic programming over grid points
    within ``2 * delta``, changing as few endpoints as possible.
    """
    if delta < 1:
        raise ValueError("delta must be positive")
    if any(iv.length < 2 * delta for iv in p.intervals):
        raise ValueError("delta too large")
    labels = p.labels
    images = [nearest_grid(x, delta) for x in labels]
    if not snap_violations(p, labels, images, delta):
        return SnapMap(delta, labels, images, "nearest")
    ruled = _collision_rule(labels, images, delta)
    if not snap_violations(p, labels, ruled, delta):
        return SnapMap(delta, labels, ruled, "collision-rule")
    repaired = _dp_repair(p, labels, images, delta)
    if repaired is None:
        raise CertificateViolation(f"no valid snap for {p.intervals} at delta={delta}")
    return SnapMap(delta, labels, repaired, "dp-repair")


def snap_properties(p: IntervalPath, sm: SnapMap) -> dict[str, bool]:
    """Check displacement, monotonicity, adjacency preservation and image multiplicity."""
    labels, images = sm.labels, sm.images
    displacement = all(abs(x - g) <= 2 * sm.delta for x, g in zip(labels, images))
    pairs = sorted(zip(labels, images))
    monotone = all(g1 <= g2 for (_, g1), (_, g2) in zip(pairs, pairs[1:]))
    monotone &= all(sm.assignments[x] == g for x, g in zip(labels, images))
    snapped = sm.snapped(p)
    adjacency = all(
        snapped[i].meets(snapped[j])
        for i in range(len(snapped))
        for j in range(i + 1, len(snapped))
        if p.intervals[i].meets(p.intervals[j])
    )
    lo, hi = min(i.lo for i in snapped), max(i.hi for i in snapped)
    multiplicity = all(sum(x in iv for iv in snapped) <= 2 for x in range(lo, hi + 1))
    return {
        "displacement": displacement,
        "monotone": monotone,
        "adjacency": adjacency,
        "multiplicity": multiplicity,
    }


# --- run decomposition and counting certificates -----------------------------------


def s123_decomposition(p: IntervalPath) -> tuple[list[Interval], list[Interval], list[Interval]]:
    """Split the span into doubly covered runs (S2) and alternating singly covered runs (S1, S3)."""
    a = p.span.lo
    mult = p.multiplicity()
    if any(c not in (1, 2) for c in mult):
        raise InvalidIntervalSet("path cover multiplicity outside {1, 2}")
    runs: list[tuple[int, Interval]] = []
    start = 0
    for i in range(1, len(mult) + 1):
        if i == len(mult) or mult[i] != mult[start]:
            runs.append((mult[start], Interval(a + start, a + i - 1)))
            start = i
    singles = [iv for c, iv in runs if c == 1]
    s2 = [iv for c, iv in runs if c == 2]
    return singles[0::2], s2, singles[1::2]


@dataclass
class BoundCertificate:
    path_size: int
    path_bound: Fraction
    runs: int
    runs_bound: Fraction
    max_displacement: int
    displacement_bound: int

    @property
    def ok(self) -> bool:
        return (
            self.path_size <= self.path_bound
            and self.runs <= self.runs_bound
            and self.max_displacement <= self.displacement_bound
        )


def bound_certificate(p: IntervalPath, D: int, delta: int) -> BoundCertificate:
    """Evaluate |I'| <= 2|span|/D, |S1|+|S2|+|S3| <= 4|span|/D and snap displacement <= 2 delta."""
    if D < 1 or any(iv.length < D for iv in p.intervals):
        raise ValueError("every path interval must have length >= D")
    s1, s2, s3 = s123_decomposition(p)
    sm = snap_map(p, delta)
    cert = BoundCertificate(
        path_size=len(p.intervals),
        path_bound=Fraction(2 * p.span.size, D),
        runs=len(s1) + len(s2) + len(s3),
        runs_bound=Fraction(4 * p.span.size, D),
        max_displacement=sm.max_displacement,
        displacement_bound=2 * delta,
    )
    if not cert.ok:
        raise CertificateViolation(f"certificate violation: {cert}")
    return cert


# --- exhaustive sweep ------------------------------------------------------------------


def canonical_interval_sets(max_intervals: int = 5, top: int = 12) -> Iterator[IntervalSet]:
    """Connected interval sets in ``[0, top]`` whose distinct endpoint values are ``0, 1, .., r``.

    Hop counts and path choice depend only on the relative order of the
    endpoint values. A point strictly between two consecutive endpoint
    values is covered by a subset of the path intervals covering the left
    one, and by at least one of them, so the multiplicity verdict is also
    unchanged when such gaps are closed. Every set with at most
    ``max_intervals`` intervals and endpoints in ``[0, top]`` is therefore
    order-equivalent to one yielded here.
    """
    pool = [Interval(lo, hi) for lo in range(top + 1) for hi in range(lo, top + 1)]
    chosen: list[Interval] = []

    def gaps_ok(values) -> bool:
        vs = sorted(values)
        return vs[0] == 0 and all(b - a == 1 for a, b in zip(vs, vs[1:]))

    def rec(start: int, reach: int, ends: frozenset) -> Iterator[IntervalSet]:
        if chosen and gaps_ok(ends):
            yield IntervalSet.of(chosen)
        if len(chosen) == max_intervals:
            return
        for idx in range(start, len(pool)):
            iv = pool[idx]
            if chosen and iv.lo > reach:
                break
            if not chosen and iv.lo != 0:
                break
            new_ends = ends | {iv.lo, iv.hi}
            if not gaps_ok(e for e in new_ends if e <= iv.lo):
                continue
            chosen.append(iv)
            yield from rec(idx + 1, max(reach, iv.hi), new_ends)
            chosen.pop()

    yield from rec(0, -1, frozenset())


@dataclass
class SweepReport:
    instances: int = 0
    failures: int = 0
    certificates: int = 0
    certificate_failures: int = 0
    snaps: int = 0
    snap_failures: int = 0
    methods: dict[str, int] = field(default_factory=dict)
    examples: list[str] = field(default_factory=list)


def check_instance(s: IntervalSet, report: SweepReport) -> None:
    """Oracle equivalence, cover multiplicity, snap properties and bound certificates for one set."""
    report.instances += 1
    p = minimal_bridge_path(s)
    q = oracle_bridge_path(s)
    ok = p.hops == q.hops and all(c in (1, 2) for c in p.multiplicity())
    if not ok:
        report.failures += 1
        if len(report.examples) < 5:
            report.examples.append(f"bridge mismatch {s.intervals}")
        return
    big_delta = min(iv.length for iv in s.intervals)
    if big_delta < 1:
        return
    delta = big_delta // 2
    try:
        if delta >= 1:
            sm = snap_map(p, delta)
            report.snaps += 1
            report.methods[sm.method] = report.methods.get(sm.method, 0) + 1
            if not all(snap_properties(p, sm).values()):
                raise CertificateViolation("snap property")
            bound_certificate(p, big_delta, delta)
        else:
            s1, s2, s3 = s123_decomposition(p)
            if len(p.intervals) * big_delta > 2 * s.span.size or (len(s1) + len(s2) + len(s3)) * big_delta > 4 * s.span.size:
                raise CertificateViolation("counting bound")
        report.certificates += 1
    except CertificateViolation as exc:
        report.certificate_failures += 1
        if len(report.examples) < 5:
            report.examples.append(f"{exc} {s.intervals}")


def exhaustive_sweep(max_intervals: int = 5, top: int = 12) -> SweepReport:
    report = SweepReport()
    for s in canonical_interval_sets(max_intervals, top):
        check_instance(s, report)
    return report
