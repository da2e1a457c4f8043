"""Near-additive spanners in the CONGEST model.

Same phase skeleton as the distributed emulator, but every logical edge is
replaced by a path of the input graph:

* superclustering keeps one supercluster per tree; backtracking only
  carries subtree center counts, and every tree edge below a center joins
  the spanner;
* interconnection sends one token per (unclustered center, nearby center)
  pair back along detection predecessors; every hop joins the spanner.
"""

from __future__ import annotations

from dataclasses import dataclass

from .congest import Network, SimTranscript
from .distributed import SEQ, SIM, compute_ruling_set, detect_popular, ruling_levels
from .graph import SPANNER, Graph, WeightedEdgeSet
from .params import Config, Schedule, spanner_schedule
from .protocols import CountNode, ForestNode, TraceNode, budget_count, budget_detect, budget_forest, budget_trace
from .transcript import INTERCONNECT, SUPERCLUSTER, BuildTranscript, Cluster, InvariantBreach, PhaseRecord

SUPERCLUSTERING = "superclustering"
INTERCONNECTION = "interconnection"


@dataclass(frozen=True)
class PathTrace:
    vertices: tuple[int, ...]
    phase: int
    purpose: str


class PathLedger:
    """Per-phase count of spanner edges each purpose actually inserted."""

    def __init__(self):
        self.inserted: dict[tuple[int, str], int] = {}
        self.edges: dict[tuple[int, str], set] = {}

    def count(self, phase: int, purpose: str) -> int:
        return self.inserted.get((phase, purpose), 0)

    def edge_set(self, phase: int, purpose: str) -> set:
        return self.edges.get((phase, purpose), set())


def add_path(trace: PathTrace, h: WeightedEdgeSet, ledger: PathLedger | None = None) -> int:
    """Insert every edge of the path; returns how many were new. Idempotent."""
    new = 0
    vs = trace.vertices
    for a, b in zip(vs, vs[1:]):
        if h.add(a, b, 1):
            new += 1
        if ledger is not None:
            ledger.edges.setdefault((trace.phase, trace.purpose), set()).add((min(a, b), max(a, b)))
    if ledger is not None:
        key = (trace.phase, trace.purpose)
        ledger.inserted[key] = ledger.inserted.get(key, 0) + new
    return new


def _pred_path(tables, start: int, target: int) -> tuple[int, ...]:
    path = [start]
    while path[-1] != target:
        path.append(tables[path[-1]].table[target][1])
    return tuple(path)


def build_spanner_distributed(
    g: Graph, cfg: Config | Schedule, mode: str = SIM, check_feasibility: bool = True
) -> tuple[WeightedEdgeSet, BuildTranscript, SimTranscript, PathLedger]:
    s = cfg if isinstance(cfg, Schedule) else spanner_schedule(cfg, check_feasibility)
    if s.n != g.n:
        raise ValueError(f"schedule is for n={s.n}, graph has n={g.n}")
    if mode not in (SIM, SEQ):
        raise ValueError(f"unknown mode {mode!r}")
    n = g.n
    net = Network(g, parallel=(mode == SIM))
    t = BuildTranscript("spanner", n)
    h = WeightedEdgeSet(n, SPANNER, g)
    ledger = PathLedger()
    local: set[tuple[int, int]] = set()
    clusters = {v: t.new_cluster(v, (v,), 0) for v in range(n)}
    levels = ruling_levels(s.rho)

    for i in s.phases:
        centers = set(clusters)
        D = s.deg[i].ceil()
        cap = D + 1
        delta = s.delta[i]
        rec = PhaseRecord(i, clusters=[clusters[c].id for c in sorted(clusters)])
        start = net.offset
        det, popular = detect_popular(net, centers, delta, s.deg[i], cap, f"p{i}/detect")
        rec.popular = popular
        last = i == s.ell
        if last and popular:
            raise InvariantBreach(f"{len(popular)} popular centers in the final phase {i}")

        nxt: dict[int, Cluster] = {}
        if last:
            unspanned = sorted(centers)
        else:
            ruling = compute_ruling_set(net, popular, 2 * delta, levels, f"p{i}/ruling")
            rec.ruling = ruling
            limit = s.rul[i] + delta
            rs = set(ruling)
            fr = net.run(f"p{i}/forest", [ForestNode(v, v in rs, limit) for v in range(n)], budget_forest(limit))
            cn = net.run(f"p{i}/count", [CountNode(v, fr[v], v in centers, limit) for v in range(n)], budget_count(limit))
            unspanned = []
            for c in sorted(centers):
                if fr[c].root is None:
                    unspanned.append(c)
                else:
                    rec.trees.setdefault(fr[c].root, []).append(c)
            tree_edges = {(min(p.edge), max(p.edge)) for p in cn if p.edge is not None}
            local |= tree_edges
            rec.supercluster_edges = sorted(tree_edges)
            for root in sorted(rec.trees):
                members = rec.trees[root]
                if cn[root].count != len(members):
                    raise InvariantBreach(f"phase {i}: root {root} counted {cn[root].count}, tree spans {len(members)}")
                kids = [clusters[c] for c in members]
                union = frozenset().union(*(k.members for k in kids))
                cl = t.new_cluster(root, union, i + 1, sorted(k.id for k in kids))
                nxt[root] = cl
                rec.formed.append(cl.id)
                rec.tree_of[cl.id] = root
                for c in members:
                    if c == root:
                        continue
                    path = [c]
                    while path[-1] != root:
                        path.append(fr[path[-1]].parent)
                    add_path(PathTrace(tuple(path), i, SUPERCLUSTERING), h, ledger)
                    t.event(SUPERCLUSTER, i, u=root, v=c, w=len(path) - 1, charged=c)
            if ledger.edge_set(i, SUPERCLUSTERING) != tree_edges:
                raise InvariantBreach(f"phase {i}: local tree edges differ from traced superclustering paths")

        rec.unclustered = [clusters[c].id for c in unspanned]
        uset = set(unspanned)
        span = budget_detect(delta, cap)
        tr = net.run(
            f"p{i}/trace",
            [TraceNode(v, det[v], det[v].table.keys() if v in uset else (), span) for v in range(n)],
            budget_trace(delta, cap),
        )
        hop_edges = set()
        for p in tr:
            hop_edges |= p.edges
        local |= hop_edges
        for r in unspanned:
            for c, (d, _) in sorted(det[r].table.items()):
                if c == r:
                    continue
                path = _pred_path(det, r, c)
                if len(path) - 1 != d:
                    raise InvariantBreach(f"phase {i}: traced path {r}->{c} has {len(path) - 1} hops, expected {d}")
                add_path(PathTrace(path, i, INTERCONNECTION), h, ledger)
                t.event(INTERCONNECT, i, u=r, v=c, w=d, charged=r)
        if ledger.edge_set(i, INTERCONNECTION) != hop_edges:
            raise InvariantBreach(f"phase {i}: token hops differ from traced interconnection paths")
        rec.interconnect_edges = sorted(hop_edges)
        steps = [st for st in net.transcript.steps if st.offset >= start]
        rec.stats = {
            "P": len(centers),
            "U": len(unspanned),
            "popular": len(popular),
            "ruling": len(rec.ruling),
            "superclusters": len(nxt),
            "supercluster_inserted": ledger.count(i, SUPERCLUSTERING),
            "interconnect_inserted": ledger.count(i, INTERCONNECTION),
            "rounds_budget": sum(st.budget for st in steps),
            "rounds_used": sum(st.used for st in steps),
        }
        t.phases.append(rec)
        clusters = nxt

    if clusters:
        raise InvariantBreach("clusters survived the final phase")
    if {(a, b) for a, b, _ in h} != local:
        raise InvariantBreach("spanner differs from the union of locally kept edges")
    return h, t, net.transcript, ledger


def size_constant(h: WeightedEdgeSet, s: Schedule) -> float:
    """|H| / n^(1 + 1/kappa)."""
    return len(h) / float(s.n) ** (1 + 1 / s.kappa)
