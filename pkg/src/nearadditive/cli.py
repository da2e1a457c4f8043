"""Command-line entry point.

    nearadditive build --algo distributed --gen grid:16 --kappa 4 --rho 0.45 --out runs/grid16
    nearadditive verify --graph runs/grid16/graph.txt --emulator runs/grid16/emulator.txt \
        --schedule runs/grid16/schedule.json --transcript runs/grid16/build_transcript.jsonl
    nearadditive bench --suite scripts/suites/smoke.json --out bench.csv

Exit codes: 0 success, 1 invariant breach or failed verification, 2 invalid
configuration or input, 3 schedule infeasible at this scale.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .centralized import build_emulator_centralized
from .congest import SimTranscript
from .distributed import SEQ, SIM, build_emulator_distributed, round_ratio
from .graph import EMULATOR, SPANNER, Graph, GraphFormatError, GraphParamError, WeightedEdgeSet, dump_graph, generate_graph, load_graph, parse_gen_spec
from .params import CENTRALIZED, DISTRIBUTED, Config, ConfigError, InfeasibleSchedule, Schedule, make_schedule, stretch_budget
from .spanner import build_spanner_distributed
from .transcript import BuildTranscript, InvariantBreach
from .verify import SCHEMA_VERSION, build_report, verify_soundness, verify_size

log = logging.getLogger("nearadditive")

EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3

DEFAULTS = {
    "algo": CENTRALIZED,
    "mode": "sim",
    "graph": None,
    "gen": None,
    "format": "edge-list",
    "eps": 0.5,
    "kappa": 2,
    "rho": None,
    "seed": 0,
    "out": "out",
    "no_feasibility_check": False,
}


@dataclass
class BuildResult:
    graph: Graph
    schedule: Schedule
    h: WeightedEdgeSet
    transcript: BuildTranscript
    sim: SimTranscript
    elapsed: float
    summary: dict = field(default_factory=dict)


def resolve_graph(graph: str | None, gen: str | None, seed: int, fmt: str = "edge-list") -> tuple[Graph, str]:
    if (graph is None) == (gen is None):
        raise ConfigError("give exactly one of --graph or --gen")
    if graph is not None:
        with open(graph) as fh:
            return load_graph(fh, fmt), graph
    fam, params = parse_gen_spec(gen)
    return generate_graph(fam, params, seed), gen


def run_build(g: Graph, algo: str, eps, kappa, rho=None, mode: str = "sim", check_feasibility: bool = True) -> BuildResult:
    """Builds one emulator or spanner; raises ConfigError / InfeasibleSchedule / InvariantBreach."""
    if algo not in (CENTRALIZED, DISTRIBUTED, SPANNER):
        raise ConfigError(f"unknown algorithm {algo!r}")
    if mode not in ("sim", "seq"):
        raise ConfigError(f"unknown mode {mode!r}")
    cfg = Config.make(g.n, eps, kappa, rho)
    s = make_schedule(algo, cfg, check_feasibility)
    t0 = time.perf_counter()
    sim = SimTranscript()
    if algo == CENTRALIZED:
        h, t = build_emulator_centralized(g, s)
    elif algo == DISTRIBUTED:
        h, t, sim = build_emulator_distributed(g, s, SIM if mode == "sim" else SEQ)
    else:
        h, t, sim, _ = build_spanner_distributed(g, s, SIM if mode == "sim" else SEQ, check_feasibility)
    elapsed = time.perf_counter() - t0
    b = stretch_budget(s)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "algo": algo,
        "mode": mode,
        "n": g.n,
        "m": g.m,
        "kappa": s.kappa,
        "rho": None if s.rho is None else str(s.rho),
        "eps": str(s.eps_user),
        "eps_internal": str(s.eps_internal),
        "ell": s.ell,
        "edges": len(h),
        "size_bound": g.n ** (1 + 1 / s.kappa),
        "size_constant": len(h) / g.n ** (1 + 1 / s.kappa) if g.n else 0.0,
        "alpha": float(b.alpha),
        "beta": str(b.beta),
        "rounds": sim.rounds,
        "messages": sim.messages,
        "max_words": sim.max_words,
        "max_edge_load": sim.max_edge_load,
        "round_ratio": round_ratio(s, sim.rounds) if algo != CENTRALIZED and g.n else None,
        "phases": [rec.stats for rec in t.phases],
        "elapsed_s": round(elapsed, 3),
    }
    return BuildResult(g, s, h, t, sim, elapsed, summary)


def post_build_checks(res: BuildResult) -> list[str]:
    """Cheap guarantees every build must meet; non-empty means a breach."""
    out = []
    kind = res.schedule.kind
    if kind != SPANNER:
        size = verify_size(len(res.h), res.graph.n, res.schedule.kappa, "exact")
        if not size["pass"]:
            out.append(f"|H| = {len(res.h)} exceeds n^(1+1/kappa) = {size['bound']:.1f}")
    sound = verify_soundness(res.graph, res.h, kind)
    if not sound["pass"]:
        out.append(f"{sound['violation_count']} unsound edges, e.g. {sound['violations'][:2]}")
    if res.sim.max_edge_load > 1 or res.sim.max_words > 4:
        out.append("bandwidth exceeded")
    return out


def write_outputs(res: BuildResult, out: Path, extra: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    name = "spanner.txt" if res.schedule.kind == SPANNER else "emulator.txt"
    (out / name).write_text(res.h.dumps())
    (out / "graph.txt").write_text(dump_graph(res.graph))
    (out / "schedule.txt").write_text(res.schedule.report())
    (out / "schedule.json").write_text(res.schedule.to_json())
    (out / "build_transcript.jsonl").write_text(res.transcript.to_jsonl())
    (out / "sim_transcript.jsonl").write_text(res.sim.to_jsonl())
    summary = dict(res.summary)
    summary.update(extra)
    (out / "summary.json").write_text(json.dumps(summary, indent=1))


def _merged(args: argparse.Namespace, keys) -> dict:
    conf = {}
    if getattr(args, "config", None):
        conf = json.loads(Path(args.config).read_text())
        unknown = set(conf) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for k in keys:
        flag = getattr(args, k, None)
        merged[k] = flag if flag not in (None, False) else conf.get(k, DEFAULTS[k])
    return merged


def cmd_build(args) -> int:
    o = _merged(args, DEFAULTS)
    log.info("seed=%s algo=%s mode=%s", o["seed"], o["algo"], o["mode"])
    g, source = resolve_graph(o["graph"], o["gen"], int(o["seed"]), o["format"])
    res = run_build(g, o["algo"], o["eps"], o["kappa"], o["rho"], o["mode"], not o["no_feasibility_check"])
    problems = post_build_checks(res)
    write_outputs(res, Path(o["out"]), {"graph": source, "seed": int(o["seed"]), "breaches": problems})
    print(json.dumps({k: res.summary[k] for k in ("algo", "n", "m", "edges", "size_constant", "rounds")}))
    if problems:
        for p in problems:
            log.error("invariant breach: %s", p)
        return EXIT_BREACH
    return EXIT_OK


def cmd_verify(args) -> int:
    if (args.emulator is None) == (args.spanner is None):
        raise ConfigError("give exactly one of --emulator or --spanner")
    with open(args.graph) as fh:
        g = load_graph(fh, args.format)
    s = Schedule.from_json(Path(args.schedule).read_text())
    path = args.emulator or args.spanner
    with open(path) as fh:
        h = WeightedEdgeSet.load(fh)
    expected = SPANNER if args.spanner else EMULATOR
    if h.mode != expected:
        raise ConfigError(f"{path} holds a {h.mode}, expected {expected}")
    if (s.kind == SPANNER) != (expected == SPANNER):
        raise ConfigError(f"schedule kind {s.kind} does not match a {expected}")
    t = BuildTranscript.from_jsonl(Path(args.transcript).read_text()) if args.transcript else None
    rep = build_report(g, h, s, stretch_budget(s), t, args.mode, args.seed, args.force)
    text = json.dumps(rep, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK if rep["pass"] else EXIT_BREACH


BENCH_COLUMNS = [
    "algo",
    "graph",
    "seed",
    "n",
    "m",
    "kappa",
    "rho",
    "eps",
    "edges",
    "size_constant",
    "rounds",
    "round_ratio",
    "max_stretch_ratio",
    "max_additive_slack",
    "pass",
]


def expand_suite(suite: dict) -> list[dict]:
    """``runs`` lists explicit runs; ``grid`` takes the product of its lists."""
    import itertools

    base = dict(suite.get("defaults", {}))
    runs = [dict(base, **r) for r in suite.get("runs", [])]
    grid = suite.get("grid")
    if grid:
        keys = sorted(grid)
        for combo in itertools.product(*(grid[k] for k in keys)):
            runs.append(dict(base, **dict(zip(keys, combo))))
    return runs


def bench_row(run: dict) -> dict:
    o = dict(DEFAULTS)
    o.update(run)
    g, source = resolve_graph(o["graph"], o["gen"], int(o["seed"]), o["format"])
    res = run_build(g, o["algo"], o["eps"], o["kappa"], o["rho"], o["mode"], not o["no_feasibility_check"])
    rep = build_report(g, res.h, res.schedule, stretch_budget(res.schedule), res.transcript)
    return {
        "algo": o["algo"],
        "graph": source,
        "seed": o["seed"],
        "n": g.n,
        "m": g.m,
        "kappa": res.schedule.kappa,
        "rho": "" if res.schedule.rho is None else float(res.schedule.rho),
        "eps": float(res.schedule.eps_user),
        "edges": len(res.h),
        "size_constant": f"{res.summary['size_constant']:.6f}",
        "rounds": res.sim.rounds,
        "round_ratio": "" if res.summary["round_ratio"] is None else f"{res.summary['round_ratio']:.6f}",
        "max_stretch_ratio": f"{rep['stretch']['max_ratio']:.6f}",
        "max_additive_slack": f"{rep['stretch']['max_additive_slack_used']:.6f}",
        "pass": rep["pass"],
    }


def cmd_bench(args) -> int:
    suite = json.loads(Path(args.suite).read_text())
    runs = expand_suite(suite)
    rows = []
    for r in runs:
        log.info("bench run %s", r)
        rows.append(bench_row(r))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_BREACH


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nearadditive", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build an emulator or spanner")
    b.add_argument("--config", help="JSON file whose keys mirror the flags; flags win")
    b.add_argument("--algo", choices=["centralized", "distributed", "spanner"])
    b.add_argument("--mode", choices=["sim", "seq"])
    b.add_argument("--graph", help="input graph file")
    b.add_argument("--format", choices=["edge-list", "dimacs"])
    b.add_argument("--gen", help="generator spec, e.g. cycle:5, grid:8, erdos_renyi:64:0.1, hypercube:6")
    b.add_argument("--eps", type=float)
    b.add_argument("--kappa", type=int)
    b.add_argument("--rho", type=float)
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.add_argument("--no-feasibility-check", action="store_true", help="build spanners below the scale their schedule needs")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="verify a built emulator or spanner")
    v.add_argument("--graph", required=True)
    v.add_argument("--format", choices=["edge-list", "dimacs"], default="edge-list")
    v.add_argument("--emulator")
    v.add_argument("--spanner")
    v.add_argument("--schedule", required=True, help="schedule.json written by build")
    v.add_argument("--transcript", help="build_transcript.jsonl; enables the structural checks")
    v.add_argument("--mode", default="auto", help="exhaustive | sampled:k | auto")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--force", action="store_true", help="override the exhaustive size guard")
    v.add_argument("--out", help="also write the report here")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("bench", help="run a suite and write a CSV")
    c.add_argument("--suite", required=True)
    c.add_argument("--out", default="bench.csv")
    c.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphParamError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleSchedule as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
