"""Emulator construction in the CONGEST model.

Every phase below the last runs five sub-protocols on the simulator:

1. popularity detection from all current centers,
2. a ruling set over the popular centers,
3. a BFS forest from the ruling set,
4. backtracking of center reports with hub splitting, then notification,
5. a second detection from the centers left out of the forest, whose
   results give the interconnection edges.

The last phase runs detection once from all centers and interconnects them.
Edges live in per-vertex state; the emulator is the union of what the
vertices hold, and both endpoints of every edge must hold it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .congest import Network, SimTranscript
from .graph import EMULATOR, Graph, WeightedEdgeSet
from .params import Config, Schedule, distributed_schedule, stretch_budget
from .protocols import (
    BacktrackNode,
    DetectNode,
    ForestNode,
    NotifyNode,
    RulingNode,
    budget_backtrack,
    budget_detect,
    budget_forest,
    budget_notify,
    budget_ruling,
    ruling_digits,
)
from .transcript import HUB, INTERCONNECT, SUPERCLUSTER, BuildTranscript, Cluster, InvariantBreach, PhaseRecord

SIM = "simulate"
SEQ = "sequential"


def ruling_levels(rho) -> int:
    """Digit levels for the ruling set: floor(1/rho), at least 2 when rho < 1/2."""
    return max(1, int(1 / rho))


def detect_popular(net: Network, centers, delta: int, deg, cap: int, label: str):
    """Returns ``(programs, popular)``; popular centers heard of >= deg others."""
    n = net.g.n
    progs = net.run(label, [DetectNode(v, v in centers, delta, cap) for v in range(n)], budget_detect(delta, cap))
    popular = sorted(v for v in centers if not deg.exceeds(progs[v].learned()))
    return progs, popular


def compute_ruling_set(net: Network, candidates, q: int, levels: int, label: str = "ruling") -> list[int]:
    """Candidates kept are pairwise > q apart and dominate within levels * q."""
    n = net.g.n
    base = ruling_digits(n, levels)
    cand = set(candidates)
    progs = net.run(label, [RulingNode(v, v in cand, levels, base, q) for v in range(n)], budget_ruling(levels, base, q))
    return sorted(v for v in cand if progs[v].alive)


@dataclass
class ForestOutcome:
    forest: list[ForestNode]
    backtrack: list[BacktrackNode]
    notify: list[NotifyNode]


def grow_forest_and_supercluster(net: Network, roots, centers, limit: int, D: int, label: str) -> ForestOutcome:
    n = net.g.n
    rs = set(roots)
    fr = net.run(f"{label}/forest", [ForestNode(v, v in rs, limit) for v in range(n)], budget_forest(limit))
    stride = 2 * D + 2
    bt = net.run(
        f"{label}/backtrack",
        [BacktrackNode(v, fr[v], v in centers, limit, stride) for v in range(n)],
        budget_backtrack(limit, stride),
    )
    nt = net.run(f"{label}/notify", [NotifyNode(v, bt[v], D) for v in range(n)], budget_notify(limit, D))
    return ForestOutcome(fr, bt, nt)


def interconnect(net: Network, sources, delta: int, cap: int, label: str) -> list[DetectNode]:
    n = net.g.n
    src = set(sources)
    return net.run(label, [DetectNode(v, v in src, delta, cap) for v in range(n)], budget_detect(delta, cap))


def _learn(known: dict, v: int, a: int, b: int, w: int) -> None:
    key = (a, b) if a < b else (b, a)
    box = known.setdefault(v, {})
    old = box.get(key)
    if old is not None and old != w:
        raise InvariantBreach(f"vertex {v} holds two weights for {key}: {old}, {w}")
    box[key] = w


def build_emulator_distributed(
    g: Graph, cfg: Config | Schedule, mode: str = SIM
) -> tuple[WeightedEdgeSet, BuildTranscript, SimTranscript]:
    s = cfg if isinstance(cfg, Schedule) else distributed_schedule(cfg)
    if s.n != g.n:
        raise ValueError(f"schedule is for n={s.n}, graph has n={g.n}")
    if mode not in (SIM, SEQ):
        raise ValueError(f"unknown mode {mode!r}")
    net = Network(g, parallel=(mode == SIM))
    t = BuildTranscript("distributed", g.n)
    known: dict[int, dict] = {}
    clusters = {v: t.new_cluster(v, (v,), 0) for v in range(g.n)}
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
        if i == s.ell:
            if popular:
                raise InvariantBreach(f"{len(popular)} popular centers in the final phase {i}")
            rec.unclustered = list(rec.clusters)
            for r in sorted(centers):
                for c, (d, _) in det[r].table.items():
                    if c != r:
                        _learn(known, r, r, c, d)
                        t.event(INTERCONNECT, i, u=r, v=c, w=d, charged=r)
            rec.stats = _stats(clusters, rec, net, start)
            t.phases.append(rec)
            clusters = {}
            break

        ruling = compute_ruling_set(net, popular, 2 * delta, levels, f"p{i}/ruling")
        rec.ruling = ruling
        limit = s.rul[i] + delta
        out = grow_forest_and_supercluster(net, ruling, centers, limit, D, f"p{i}")
        fr, bt, nt = out.forest, out.backtrack, out.notify

        groups: dict[int, list[int]] = {}
        unspanned = []
        for c in sorted(centers):
            if fr[c].root is None:
                unspanned.append(c)
                continue
            rec.trees.setdefault(fr[c].root, []).append(c)
            nc = nt[c].new_center
            if nc is None:
                raise InvariantBreach(f"phase {i}: center {c} is in a tree but joined no supercluster")
            groups.setdefault(nc, []).append(c)
        rec.hubs = sum(1 for p in bt if p.hub)
        for v in range(g.n):
            for (a, b), w in nt[v].known.items():
                _learn(known, v, a, b, w)
        for v in range(g.n):
            if bt[v].hub:
                t.event(HUB, i, vertex=v, reports=len(bt[v].M), center=v in centers)

        nxt: dict[int, Cluster] = {}
        for nc in sorted(groups):
            kids = [clusters[c] for c in groups[nc]]
            if nc not in groups[nc]:
                raise InvariantBreach(f"phase {i}: new center {nc} is not among its own members")
            union = frozenset().union(*(k.members for k in kids))
            cl = t.new_cluster(nc, union, i + 1, sorted(k.id for k in kids))
            nxt[nc] = cl
            rec.formed.append(cl.id)
            rec.tree_of[cl.id] = fr[nc].root
            if nc != fr[nc].root:
                rec.hub_formed.append(cl.id)
            for c in groups[nc]:
                if c != nc:
                    w = known.get(c, {}).get((min(c, nc), max(c, nc)))
                    t.event(SUPERCLUSTER, i, u=nc, v=c, w=w, charged=c)

        rec.unclustered = [clusters[c].id for c in unspanned]
        det2 = interconnect(net, unspanned, delta, cap, f"p{i}/interconnect")
        uset = set(unspanned)
        for r in unspanned:
            for c, (d, _) in det[r].table.items():
                if c != r:
                    _learn(known, r, r, c, d)
                    t.event(INTERCONNECT, i, u=r, v=c, w=d, charged=r)
        for c in sorted(centers):
            for r, (d, _) in det2[c].table.items():
                if r != c and r in uset:
                    _learn(known, c, c, r, d)
        rec.stats = _stats(clusters, rec, net, start)
        t.phases.append(rec)
        clusters = nxt

    if clusters:
        raise InvariantBreach("clusters survived the final phase")
    h = WeightedEdgeSet(g.n, EMULATOR)
    for v in sorted(known):
        for (a, b), w in known[v].items():
            h.add(a, b, w)
    for a, b, w in h:
        if known.get(a, {}).get((a, b)) != w or known.get(b, {}).get((a, b)) != w:
            raise InvariantBreach(f"edge ({a}, {b}) is not held by both endpoints")
    t.known_edges = known
    return h, t, net.transcript


def _stats(clusters, rec: PhaseRecord, net: Network, start: int) -> dict:
    steps = [st for st in net.transcript.steps if st.offset >= start]
    return {
        "P": len(clusters),
        "U": len(rec.unclustered),
        "popular": len(rec.popular),
        "ruling": len(rec.ruling),
        "superclusters": len(rec.formed),
        "hubs": rec.hubs,
        "rounds_budget": sum(st.budget for st in steps),
        "rounds_used": sum(st.used for st in steps),
    }


def round_ratio(s: Schedule, rounds: int) -> float:
    """rounds / (beta * n^rho), the constant hidden in the round bound."""
    beta = stretch_budget(s).beta
    return rounds / (float(beta) * float(s.n) ** float(s.rho))
