"""Command-line runner: each subcommand writes a deterministic comma-separated report."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .forest import build_one_ended_tree, end_proxy_stats
from .graph_core import LabelField, connected_components, is_spanning_tree
from .intervals import exhaustive_sweep
from .mtp import ConnectorConfig, connector_rule, estimate, mtp_check, neighbour_rule
from .substrates import SubstrateSpec, make_window, snake_tree
from .trunk import (
    distance_ratio_profile,
    fit_power,
    lift_to_G,
    marginal_bound_check,
    quotient_graph,
    realize,
)

OUT_ENV = "FIID_FOREST_OUT"

DEFAULTS = {
    "build-tree": {"substrate": "torus2d", "side": 32},
    "verify-lemma2": {},
    "distance-profile": {"substrate": "grid2d", "side": 64},
    "trunk-demo": {"substrate": "grid2d", "side": 64},
    "mtp-check": {"substrate": "torus2d", "side": 16},
}


class Report:
    def __init__(self, columns: list[str]) -> None:
        self.columns = ["invariant"] + columns
        self.rows: list[list] = []
        self.violations: list[str] = []

    def row(self, invariant: str, *values, ok: bool = True) -> None:
        self.rows.append([invariant, *values])
        if not ok:
            self.violations.append(invariant)

    def render(self, config: dict) -> str:
        buf = io.StringIO()
        buf.write(f"# fiid-forest v{__version__} config={canonical(config)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    return str(x)


def canonical(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- commands -------------------------------------------------------------------------


def cmd_build_tree(cfg: dict) -> Report:
    spec = SubstrateSpec(cfg["substrate"], cfg["side"])
    w = make_window(spec)
    rep = Report(["seed", "n", "k_n", "m_n", "connectivity", "bound", "event_a", "deferred", "value"])
    per_stage: dict[int, list[float]] = {}
    closure = []
    for r in range(cfg["seeds"]):
        seed = cfg["seed"] + r
        F, tr, st = build_one_ended_tree(w, LabelField(seed), eps=cfg["eps"], max_stage=cfg["max_stage"])
        for s in tr.stages:
            per_stage.setdefault(s.n, []).append(s.connectivity)
            rep.row("stage_connectivity", seed, s.n, s.k_to, s.m, s.connectivity, s.bound, s.event_a, s.deferred, "")
        ok = is_spanning_tree(w, F)
        rep.row("spanning_tree", seed, "", "", "", "", "", "", "", ok, ok=ok)
        rep.row("closure_edges", seed, "", "", "", "", "", "", "", tr.closure_edges)
        closure.append(tr.closure_edges)
        if tr.closure_edges == 0 and ok:
            ep = end_proxy_stats(F, st, w)
            rep.row("end_proxy_p99", seed, "", "", "", "", "", "", "", ep.p99)
    for n in sorted(per_stage):
        est = estimate(per_stage[n])
        bound = 1.0 - 2.0**-n if n > 0 else 0.0
        slack = 3 * est.se if est.se_defined else 0.0
        ok = est.mean >= bound - slack
        rep.row("recursive_bound", "all", n, "", "", est.mean, bound, "", "", est.se, ok=ok)
    rep.row("closure_fraction", "all", "", "", "", "", "", "", "", float(np.mean(closure)) / w.n)
    return rep


def cmd_verify_lemma2(cfg: dict) -> Report:
    sw = exhaustive_sweep(cfg["max_intervals"], cfg["top"])
    rep = Report(["value"])
    rep.row("instances", sw.instances)
    rep.row("oracle_and_multiplicity_failures", sw.failures, ok=sw.failures == 0)
    rep.row("snap_failures", sw.snap_failures, ok=sw.snap_failures == 0)
    rep.row("certificate_failures", sw.certificate_failures, ok=sw.certificate_failures == 0)
    for k in sorted(sw.methods):
        rep.row(f"snap_method_{k}", sw.methods[k])
    rep.summary = f"instances: {sw.instances}, failures: {sw.failures + sw.snap_failures + sw.certificate_failures}"
    return rep


def _spine_quotient(cfg: dict, labels: LabelField | None = None):
    kind = cfg["substrate"]
    if kind not in ("grid2d", "ladder", "torus2d"):
        raise ValueError("substrate unsupported")
    spec = SubstrateSpec(kind, cfg["side"], cfg.get("margin"))
    w = make_window(spec)
    t = snake_tree(w, pendant=cfg.get("pendant", False))
    return w, t, quotient_graph(w, t, labels)


def _default_ns(q) -> list[int]:
    from .trunk import _valid_centres

    # powers of two from 4 up to the largest reach that still fits in the core
    reach = [1 << j for j in range(2, 13) if len(_valid_centres(q, 1 << j))]
    return [1 << j for j in range(2, 13) if reach and (1 << j) <= reach[-1]] or [1]


def cmd_distance_profile(cfg: dict) -> Report:
    _, _, q = _spine_quotient(cfg)
    ns = cfg["ns"] or _default_ns(q)
    rows = distance_ratio_profile(q, ns, seeds=cfg["seeds"], seed=cfg["seed"])
    rep = Report(["n", "ratio", "se", "replicas"])
    for r in rows:
        rep.row("distance_ratio", r.n, r.ratio, r.se, r.replicas)
    if len(rows) >= 2 and all(r.ratio > 0 for r in rows):
        c, alpha = fit_power(rows)
        rep.row("power_fit_exponent", "", alpha, "", "")
        rep.row("power_fit_constant", "", c, "", "")
    return rep


def cmd_trunk_demo(cfg: dict) -> Report:
    w, t, q = _spine_quotient(cfg, LabelField(cfg["seed"]))
    top = cfg["max_stage"] or 6
    rep = Report(["n", "value", "se", "extra"])
    rep.row("spine_length", "", len(t.spine), "", "")
    rep.row("quotient_edges", "", len(q.graph.edges), "", "")
    for n in range(1, top + 1):
        try:
            k, real = realize(q, n, LabelField(cfg["seed"]))
        except ValueError as exc:
            rep.row("degenerate_sample", n, str(exc), "", "")
            continue
        H = lift_to_G(k, t, w)
        k_ok = len(connected_components(q.graph, k.K)) == 1
        h_ok = len(connected_components(w, H)) == 1
        rep.row("K_connected_between_extremes", n, k_ok, "", len(k.open), ok=k_ok)
        rep.row("H_connected", n, h_ok, "", len(H.vertices), ok=h_ok)
        m = real.members
        rep.row("K_marginal", n, float(real.in_k[m].mean()), "", "")
        b = marginal_bound_check(q, n, M=cfg["M"], seeds=cfg["seeds"], seed=cfg["seed"])
        rep.row("transport_bound_lhs", n, b.lhs, b.lhs_se, b.skipped)
        rep.row("transport_bound_rhs", n, b.rhs, b.rhs_se, f"head={b.head!r};tail={b.tail!r}", ok=b.holds)
    return rep


def cmd_mtp_check(cfg: dict) -> Report:
    spec = SubstrateSpec(cfg["substrate"], cfg["side"])
    w = make_window(spec)
    rep = Report(["seed", "rule", "mass_out_avg", "mass_in_avg", "rel_error"])
    res = mtp_check(w, None, neighbour_rule())
    rep.row("mtp_identity", "", "neighbour", res.mass_out_avg, res.mass_in_avg, res.rel_error, ok=res.rel_error <= 1e-9)
    t = snake_tree(w)
    for r in range(cfg["seeds"]):
        seed = cfg["seed"] + r
        lab = LabelField(seed)
        q = quotient_graph(w, t, lab)
        try:
            k, _ = realize(q, cfg["n"], lab)
        except ValueError:
            rep.row("degenerate_sample", seed, "connector", "", "", "")
            continue
        conf = ConnectorConfig.build(t.spine, k.open, k.connectors, q.sign)
        res = mtp_check(w, conf, connector_rule())
        ok = res.rel_error <= 1e-9
        rep.row("mtp_identity", seed, "connector", res.mass_out_avg, res.mass_in_avg, res.rel_error, ok=ok)
        in_k = float(np.mean(res.received > 0))
        rep.row("received_at_least_marginal", seed, "connector", in_k, res.mass_in_avg, "", ok=res.mass_in_avg >= in_k)
    return rep


COMMANDS = {
    "build-tree": cmd_build_tree,
    "verify-lemma2": cmd_verify_lemma2,
    "distance-profile": cmd_distance_profile,
    "trunk-demo": cmd_trunk_demo,
    "mtp-check": cmd_mtp_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fiid-forest", description=__doc__)
    p.add_argument("--version", action="version", version=f"fiid-forest {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        d = DEFAULTS[name]
        s.add_argument("--substrate", choices=["grid2d", "torus2d", "ladder", "path"], default=d.get("substrate"))
        s.add_argument("--side", type=int, default=d.get("side"))
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--seeds", type=int, default=1)
        s.add_argument("--eps", type=float, default=0.5)
        s.add_argument("--max-stage", type=int, default=None)
        s.add_argument("--out", default=None, help=f"report path (default: ${OUT_ENV}/<command>.csv)")
        if name == "verify-lemma2":
            s.add_argument("--max-intervals", type=int, default=5)
            s.add_argument("--top", type=int, default=12)
        if name in ("distance-profile", "trunk-demo"):
            s.add_argument("--margin", type=int, default=None)
            s.add_argument("--pendant", action="store_true")
        if name == "distance-profile":
            s.add_argument("--ns", type=int, nargs="*", default=None)
        if name == "trunk-demo":
            s.add_argument("-M", dest="M", type=int, default=16)
        if name == "mtp-check":
            s.add_argument("-n", dest="n", type=int, default=2)
    return p


def config_from_args(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "out"}
    if cfg["seeds"] < 1:
        raise ValueError("seeds must be >= 1")
    if not 0 < cfg["eps"] <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        rep = COMMANDS[args.command](cfg)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"fiid-forest: error: {exc}", file=sys.stderr)
        return 2
    text = rep.render(cfg)
    out = args.out
    if out is None and os.environ.get(OUT_ENV):
        out = str(Path(os.environ[OUT_ENV]) / f"{args.command}.csv")
    if out:
        write_atomic(Path(out), text)
    else:
        sys.stdout.write(text)
    summary = getattr(rep, "summary", None)
    if summary:
        print(summary)
    if rep.violations:
        print("invariant violated: " + ", ".join(sorted(set(rep.violations))), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
