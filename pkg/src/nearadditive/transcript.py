"""Build transcripts: the cluster hierarchy and every edge insertion."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

INTERCONNECT = "interconnect"
SUPERCLUSTER = "supercluster"
BUFFER_ADMIT = "buffer_admission"
BUFFER_ABSORB = "buffer_absorption"
HUB = "hub"


@dataclass
class Cluster:
    id: int
    center: int
    members: frozenset[int]
    formed_in_phase: int
    children: tuple[int, ...] = ()


@dataclass
class PhaseRecord:
    phase: int
    clusters: list[int] = field(default_factory=list)
    unclustered: list[int] = field(default_factory=list)
    formed: list[int] = field(default_factory=list)
    buffered: int = 0
    popular: list[int] = field(default_factory=list)
    ruling: list[int] = field(default_factory=list)
    # tree root -> centers of P_i spanned by that tree
    trees: dict[int, list[int]] = field(default_factory=dict)
    # formed cluster id -> root of the tree it came from
    tree_of: dict[int, int] = field(default_factory=dict)
    # formed cluster ids created at a hub rather than at a root
    hub_formed: list[int] = field(default_factory=list)
    hubs: int = 0
    supercluster_edges: list[tuple[int, int]] = field(default_factory=list)
    interconnect_edges: list[tuple[int, int]] = field(default_factory=list)
    stats: dict = field(default_factory=dict)


@dataclass
class BuildTranscript:
    kind: str
    n: int
    clusters: dict[int, Cluster] = field(default_factory=dict)
    phases: list[PhaseRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    charges: list[int] = field(default_factory=list)
    # vertex -> {(u, v): w} for every edge that vertex inserted or was told about
    known_edges: dict[int, dict[tuple[int, int], int]] = field(default_factory=dict)
    _next_id: int = 0

    def new_cluster(self, center: int, members, phase: int, children=()) -> Cluster:
        c = Cluster(self._next_id, center, frozenset(members), phase, tuple(children))
        self.clusters[c.id] = c
        self._next_id += 1
        return c

    def event(self, kind: str, phase: int, **data) -> None:
        rec = {"event": kind, "phase": phase}
        rec.update(data)
        self.events.append(rec)

    def cluster_sets(self, phase: int) -> list[Cluster]:
        return [self.clusters[c] for c in self.phases[phase].clusters]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"type": "meta", "kind": self.kind, "n": self.n})]
        for c in self.clusters.values():
            lines.append(
                json.dumps(
                    {
                        "type": "cluster",
                        "id": c.id,
                        "center": c.center,
                        "members": sorted(c.members),
                        "phase": c.formed_in_phase,
                        "children": list(c.children),
                    }
                )
            )
        for p in self.phases:
            d = asdict(p)
            d["trees"] = {str(k): v for k, v in p.trees.items()}
            d["tree_of"] = {str(k): v for k, v in p.tree_of.items()}
            d["type"] = "phase"
            lines.append(json.dumps(d))
        for e in self.events:
            lines.append(json.dumps({"type": "event", **e}))
        if self.charges:
            lines.append(json.dumps({"type": "charges", "charges": self.charges}))
        for v in sorted(self.known_edges):
            known = [[a, b, w] for (a, b), w in sorted(self.known_edges[v].items())]
            lines.append(json.dumps({"type": "known", "vertex": v, "edges": known}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "BuildTranscript":
        t = None
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            kind = d.pop("type")
            if kind == "meta":
                t = cls(d["kind"], d["n"])
            elif kind == "cluster":
                c = Cluster(d["id"], d["center"], frozenset(d["members"]), d["phase"], tuple(d["children"]))
                t.clusters[c.id] = c
                t._next_id = max(t._next_id, c.id + 1)
            elif kind == "phase":
                d["trees"] = {int(k): v for k, v in d["trees"].items()}
                d["tree_of"] = {int(k): v for k, v in d["tree_of"].items()}
                d["supercluster_edges"] = [tuple(e) for e in d["supercluster_edges"]]
                d["interconnect_edges"] = [tuple(e) for e in d["interconnect_edges"]]
                t.phases.append(PhaseRecord(**d))
            elif kind == "event":
                t.events.append(d)
            elif kind == "charges":
                t.charges = d["charges"]
            elif kind == "known":
                t.known_edges[d["vertex"]] = {(a, b): w for a, b, w in d["edges"]}
        if t is None:
            raise ValueError("transcript has no meta line")
        return t


class InvariantBreach(AssertionError):
    """A property the construction guarantees was observed to fail."""
