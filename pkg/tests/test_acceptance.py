"""Acceptance criteria 1 to 10, each at its stated tolerance."""

import math
import random
import time

import numpy as np
import pytest

from fiid_forest.cli import main
from fiid_forest.forest import build_one_ended_tree, end_proxy_stats
from fiid_forest.graph_core import LabelField, is_spanning_tree
from fiid_forest.intervals import (
    Interval,
    IntervalSet,
    InvalidIntervalSet,
    bound_certificate,
    exhaustive_sweep,
    minimal_bridge_path,
    snap_map,
    snap_properties,
)
from fiid_forest.mtp import ConnectorConfig, connector_rule, estimate, mtp_check, neighbour_rule
from fiid_forest.substrates import SubstrateSpec, make_window, snake_tree
from fiid_forest.trunk import (
    distance_ratio_profile,
    ladder_quotient,
    marginal_bound_check,
    plane_quotient,
    quotient_graph,
    realize,
)

SEEDS = 30


def _random_snap_instances(count, seed=2024):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        k = rng.randint(1, 7)
        delta = rng.randint(1, 5)
        lo, ivs = 0, []
        for _ in range(k):
            length = rng.randint(2 * delta, 2 * delta + 14)
            ivs.append(Interval(lo, lo + length))
            lo = rng.randint(lo + 1, lo + length)
        s = IntervalSet.of(ivs)
        try:
            p = minimal_bridge_path(s)
        except InvalidIntervalSet:
            continue
        out.append((p, delta))
    return out


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    rep = exhaustive_sweep(5, 12)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def snap_instances():
    return _random_snap_instances(1000)


def test_criterion_01_bridge_oracle_exhaustive(sweep, record_property):
    rep, secs = sweep
    record_property("detail", f"instances={rep.instances} failures={rep.failures} runtime={secs:.1f}s")
    assert rep.instances > 0
    assert rep.failures == 0
    assert secs < 60


def test_criterion_02_snap_properties_random(snap_instances, record_property):
    failures = 0
    for p, delta in snap_instances:
        assert min(iv.length for iv in p.intervals) >= 2 * delta
        props = snap_properties(p, snap_map(p, delta))
        failures += not all(props.values())
    record_property("detail", f"instances={len(snap_instances)} failures={failures}")
    assert failures == 0


def test_criterion_03_bound_certificates(sweep, snap_instances, record_property):
    rep, _ = sweep
    bad = rep.certificate_failures + rep.snap_failures
    for p, delta in snap_instances:
        D = min(iv.length for iv in p.intervals)
        bad += not bound_certificate(p, D, delta).ok
    record_property("detail", f"sweep_certificates={rep.certificates} random={len(snap_instances)} failures={bad}")
    assert bad == 0


def test_criterion_04_spanning_trees(record_property):
    t0 = time.perf_counter()
    bad, closure = 0, []
    for side in (8, 16, 32):
        w = make_window(SubstrateSpec("torus2d", side))
        for s in range(SEEDS):
            F, rep, _ = build_one_ended_tree(w, LabelField(s))
            bad += not is_spanning_tree(w, F)
            closure.append(rep.closure_edges / w.n)
    secs = time.perf_counter() - t0
    frac = float(np.mean(closure))
    record_property("detail", f"trees={3 * SEEDS} non_trees={bad} closure_fraction={frac:.4f} runtime={secs:.1f}s")
    assert bad == 0
    assert frac < 0.05
    assert secs < 300


def test_criterion_05_recursive_bound(record_property):
    w = make_window(SubstrateSpec("torus2d", 32))
    per_stage = {}
    for s in range(SEEDS):
        _, rep, _ = build_one_ended_tree(w, LabelField(s))
        for rec in rep.stages:
            per_stage.setdefault(rec.n, []).append(rec.connectivity)
    assert per_stage[0] == [0.0] * SEEDS  # base case is exact
    worst = []
    ok = True
    for n, vals in sorted(per_stage.items()):
        est = estimate(vals)
        se = est.se if est.se_defined else 0.0
        bound = 1 - 2.0**-n if n else 0.0
        ok &= est.mean >= bound - 3 * se
        worst.append(f"n={n}:{est.mean:.4f}>={bound:.4f}")
    record_property("detail", " ".join(worst))
    assert ok


def test_criterion_06_end_proxy_scaling(record_property):
    p99 = {}
    for side in (32, 64, 128):
        w = make_window(SubstrateSpec("torus2d", side))
        sizes = []
        for s in range(SEEDS):
            F, _, st = build_one_ended_tree(w, LabelField(s))
            sizes.append(end_proxy_stats(F, st, w).sizes)
        p99[side] = float(np.percentile(np.concatenate(sizes), 99))
    growth = [p99[64] / p99[32], p99[128] / p99[64]]
    record_property(
        "detail",
        " ".join(f"p99[{k}]={v:.0f}" for k, v in p99.items()) + f" growth={growth[0]:.2f},{growth[1]:.2f} (need < 2)",
    )
    assert max(growth) < 2


def test_criterion_07_distance_dichotomy(record_property):
    plane = distance_ratio_profile(plane_quotient(64, 16), [4, 256], seeds=SEEDS)
    ladder = distance_ratio_profile(ladder_quotient(1024, 256), [4, 256], seeds=SEEDS)
    rp = plane[1].ratio / plane[0].ratio
    rl = ladder[1].ratio / ladder[0].ratio
    record_property("detail", f"plane ratio(256)/ratio(4)={rp:.4f} (<0.25) ladder={rl:.4f} (>0.8)")
    assert plane[1].ratio < 0.25 * plane[0].ratio
    assert ladder[1].ratio > 0.8 * ladder[0].ratio


def test_criterion_08_marginal_decay_and_transport(record_property):
    q = plane_quotient(64, 16)
    reps = [marginal_bound_check(q, n, M=16, seeds=SEEDS) for n in range(2, 7)]
    decay = all(
        b.lhs <= a.lhs + 3 * math.hypot(a.lhs_se, b.lhs_se) for a, b in zip(reps, reps[1:])
    )
    holds = all(r.holds for r in reps)
    record_property("detail", " ".join(f"n={r.n}:{r.lhs:.3f}<={r.rhs:.3f}" for r in reps))
    assert decay and holds


def test_criterion_09_mtp_identity(record_property):
    worst, checked = 0.0, 0
    for side in (8, 16, 32):
        w = make_window(SubstrateSpec("torus2d", side))
        worst = max(worst, mtp_check(w, None, neighbour_rule()).rel_error)
        checked += 1
        t = snake_tree(w)
        for s in range(10):
            lab = LabelField(s)
            q = quotient_graph(w, t, lab)
            for n in (1, 2, 3):
                k, _ = realize(q, n, lab)
                cfg = ConnectorConfig.build(t.spine, k.open, k.connectors, q.sign)
                worst = max(worst, mtp_check(w, cfg, connector_rule()).rel_error)
                checked += 1
    record_property("detail", f"configurations={checked} max_rel_error={worst:.2e}")
    assert worst <= 1e-9


def test_criterion_10_cli_determinism(tmp_path, record_property):
    commands = [
        ["build-tree", "--side", "16", "--seeds", "3"],
        ["verify-lemma2", "--max-intervals", "4", "--top", "10"],
        ["distance-profile", "--side", "64", "--seeds", "5"],
        ["distance-profile", "--substrate", "ladder", "--side", "512", "--seeds", "5"],
        ["trunk-demo", "--side", "32", "--seeds", "3", "--max-stage", "3"],
        ["mtp-check", "--side", "16", "--seeds", "3"],
    ]
    same = 0
    for i, cmd in enumerate(commands):
        a, b = tmp_path / f"{i}a.csv", tmp_path / f"{i}b.csv"
        assert main(cmd + ["--out", str(a)]) == 0
        assert main(cmd + ["--out", str(b)]) == 0
        same += a.read_bytes() == b.read_bytes()
    record_property("detail", f"identical={same}/{len(commands)}")
    assert same == len(commands)
