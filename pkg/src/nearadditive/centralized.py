"""Sequential emulator construction by superclustering and interconnection.

Each phase pops cluster centers in ascending ID order. A popped center sees
every still-live center (unprocessed or buffered) within ``delta_i``. If there
are at least ``deg_i`` of them it absorbs them into a new supercluster and
pushes unprocessed centers at distance ``(delta_i, 2 delta_i]`` into a buffer
tagged with that supercluster; otherwise it connects to all of them and
retires. Buffered centers join their tagged supercluster when the phase ends.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import EMULATOR, Graph, WeightedEdgeSet, bfs_ball
from .params import Config, Schedule, centralized_schedule
from .transcript import (
    BUFFER_ABSORB,
    BUFFER_ADMIT,
    INTERCONNECT,
    SUPERCLUSTER,
    BuildTranscript,
    Cluster,
    InvariantBreach,
    PhaseRecord,
)


@dataclass
class PhaseState:
    phase: int
    clusters: list[Cluster]


def initial_state(g: Graph, t: BuildTranscript) -> PhaseState:
    return PhaseState(0, [t.new_cluster(v, (v,), 0) for v in range(g.n)])


def run_phase(g: Graph, s: Schedule, st: PhaseState, h: WeightedEdgeSet, t: BuildTranscript) -> PhaseState:
    i = st.phase
    delta, deg = s.delta[i], s.deg[i]
    last = i == s.ell
    by_center = {c.center: c for c in st.clusters}
    live = set(by_center)
    buffer: dict[int, tuple[int, int]] = {}
    formed: list[tuple[int, list[Cluster]]] = []
    rec = PhaseRecord(i, clusters=[c.id for c in st.clusters])
    charges = t.charges

    for r in sorted(by_center):
        if r not in live:
            continue
        live.discard(r)
        ball = bfs_ball(g.adj, r, delta)
        near = sorted(c for c in ball if c != r and (c in live or c in buffer))
        if deg.exceeds(len(near)):
            rec.unclustered.append(by_center[r].id)
            for c in near:
                h.add(r, c, ball[c])
                t.event(INTERCONNECT, i, u=r, v=c, w=ball[c], charged=r)
            charges[r] += len(near)
            continue
        if last:
            raise InvariantBreach(f"center {r} is popular in the final phase {i}")
        idx = len(formed)
        members = [by_center[r]]
        for c in near:
            live.discard(c)
            buffer.pop(c, None)
            h.add(r, c, ball[c])
            charges[c] += 1
            members.append(by_center[c])
            t.event(SUPERCLUSTER, i, u=r, v=c, w=ball[c], charged=c)
        formed.append((r, members))
        outer = bfs_ball(g.adj, r, 2 * delta)
        for c in sorted(c for c, d in outer.items() if d > delta and c in live):
            live.discard(c)
            buffer[c] = (idx, outer[c])
            t.event(BUFFER_ADMIT, i, center=c, tag=r, w=outer[c])

    rec.buffered = len(buffer)
    for c in sorted(buffer):
        idx, d = buffer[c]
        r, members = formed[idx]
        h.add(r, c, d)
        charges[c] += 1
        members.append(by_center[c])
        t.event(BUFFER_ABSORB, i, u=r, v=c, w=d, charged=c)

    nxt = []
    for r, members in formed:
        union = frozenset().union(*(m.members for m in members))
        c = t.new_cluster(r, union, i + 1, sorted(m.id for m in members))
        nxt.append(c)
    rec.formed = [c.id for c in nxt]
    rec.stats = {"P": len(st.clusters), "U": len(rec.unclustered), "N": rec.buffered, "superclusters": len(nxt)}
    t.phases.append(rec)
    return PhaseState(i + 1, nxt)


def build_emulator_centralized(g: Graph, cfg: Config | Schedule) -> tuple[WeightedEdgeSet, BuildTranscript]:
    s = cfg if isinstance(cfg, Schedule) else centralized_schedule(cfg)
    if s.n != g.n:
        raise ValueError(f"schedule is for n={s.n}, graph has n={g.n}")
    h = WeightedEdgeSet(g.n, EMULATOR)
    t = BuildTranscript("centralized", g.n, charges=[0] * g.n)
    st = initial_state(g, t)
    for _ in s.phases:
        st = run_phase(g, s, st, h, t)
    if st.clusters:
        raise InvariantBreach("clusters survived the final phase")
    return h, t


def charge_report(t: BuildTranscript, s: Schedule, h: WeightedEdgeSet) -> dict:
    """Per-vertex charges and the accounting facts that bound |H|."""
    unclustered_centers = {}
    for rec in t.phases:
        for cid in rec.unclustered:
            unclustered_centers[t.clusters[cid].center] = rec.phase
    absorbed = {e["charged"] for e in t.events if e["event"] in (SUPERCLUSTER, BUFFER_ABSORB)}
    over = []
    for v, c in enumerate(t.charges):
        if v in unclustered_centers:
            i = unclustered_centers[v]
            if not s.deg[i].exceeds(c):
                over.append((v, c, f"deg_{i}"))
        elif v in absorbed:
            if c > 1:
                over.append((v, c, "1"))
        elif c:
            over.append((v, c, "0"))
    total = sum(t.charges)
    return {
        "charges": list(t.charges),
        "total": total,
        "edges": len(h),
        "sum_matches": total == len(h),
        "over_budget": over,
        "ok": total == len(h) and not over,
    }
