from __future__ import annotations

import pytest
from hypothesis import given, settings

from nearadditive.congest import (
    BandwidthViolation,
    Network,
    NodeProgram,
    RoundCapExceeded,
    run_sequentially,
    simulate,
)
from nearadditive.graph import Graph, generate_graph
from test_graph import graphs


class SendId(NodeProgram):
    def __init__(self, v):
        self.v = v
        self.wake = 0
        self.heard = []

    def on_round(self, rnd, inbox):
        self.heard += [m[1] for _, m in inbox]
        if rnd == 0:
            return [(None, (0, self.v))]
        return None


class Flood(NodeProgram):
    """Flood from vertex 0; each vertex forwards once to everyone but its parent."""

    def __init__(self, g, v):
        self.g, self.v = g, v
        self.parent = None
        self.at = 0 if v == 0 else None
        self.wake = 0 if v == 0 else None

    def on_round(self, rnd, inbox):
        if self.v == 0 and rnd == 0:
            return [(u, (1,)) for u in self.g.adj[0]]
        if self.at is None and inbox:
            self.parent = min(s for s, _ in inbox)
            self.at = rnd
            return [(u, (1,)) for u in self.g.adj[self.v] if u != self.parent]
        return None


class FloodEcho(Flood):
    """Flood down a tree, then echo up once all children answered."""

    def __init__(self, g, v):
        super().__init__(g, v)
        self.waiting = None
        self.done_at = None

    def on_round(self, rnd, inbox):
        out = []
        if self.v == 0 and rnd == 0:
            self.waiting = set(self.g.adj[0])
            out = [(u, ("f",)) for u in self.g.adj[0]]
        for s, m in inbox:
            if m[0] == "f" and self.at is None:
                self.parent, self.at = s, rnd
                self.waiting = set(self.g.adj[self.v]) - {s}
                out = [(u, ("f",)) for u in sorted(self.waiting)]
            elif m[0] == "e":
                self.waiting.discard(s)
        if self.waiting == set() and self.done_at is None:
            self.done_at = rnd
            if self.parent is not None:
                out.append((self.parent, ("e",)))
        return out


class DoubleSend(NodeProgram):
    wake = 0

    def on_round(self, rnd, inbox):
        return [(1, (0,)), (1, (1,))]


class BigMessage(NodeProgram):
    wake = 0

    def on_round(self, rnd, inbox):
        return [(None, (0, 1, 2, 3, 4))]


def path(n):
    return generate_graph("path", {"n": n})


def test_two_node_exchange():
    g = path(2)
    outs, tr = simulate(g, SendId, 10)
    assert outs[0].heard == [1] and outs[1].heard == [0]
    assert tr.steps[-1].used == 1 and tr.messages == 2


def test_two_messages_on_one_edge():
    with pytest.raises(BandwidthViolation, match=r"round 0.*\(0, 1\)"):
        simulate(path(2), lambda v: DoubleSend() if v == 0 else NodeProgram(), 5)


def test_oversized_message():
    with pytest.raises(BandwidthViolation, match="5 words"):
        simulate(path(2), lambda v: BigMessage(), 5)


def test_non_edge_send():
    class Jump(NodeProgram):
        wake = 0

        def on_round(self, rnd, inbox):
            return [(2, (0,))]

    with pytest.raises(BandwidthViolation, match="not an edge"):
        simulate(path(3), lambda v: Jump() if v == 0 else NodeProgram(), 5)


def test_flood_echo_on_path():
    g = path(5)
    outs, tr = simulate(g, lambda v: FloodEcho(g, v), 100)
    assert tr.steps[-1].used == 8
    assert outs[0].done_at == 8
    assert tr.max_edge_load == 1 and tr.max_words <= 4
    # each directed edge carries one message per round at most: one per round on a path
    assert all(cnt == 1 for _, _, cnt, _ in tr.active)


def test_cycle_flood():
    g = generate_graph("cycle", {"n": 5})
    outs, tr = simulate(g, lambda v: Flood(g, v), 100)
    assert max(p.at for p in outs) == 2
    assert tr.steps[-1].used == 3


def test_empty_graph():
    outs, tr = simulate(Graph(4, []), lambda v: NodeProgram(), 10)
    assert tr.messages == 0 and tr.steps[-1].used == 0


def test_round_cap_keeps_partial_transcript():
    g = path(5)
    with pytest.raises(RoundCapExceeded) as exc:
        simulate(g, lambda v: FloodEcho(g, v), 5)
    tr = exc.value.transcript
    assert tr.messages == 5 and tr.steps[-1].used == 5


def test_network_charges_full_budget():
    g = path(5)
    net = Network(g)
    net.run("a", [FloodEcho(g, v) for v in range(5)], 20)
    net.run("b", [Flood(g, v) for v in range(5)], 7)
    assert net.transcript.rounds == 27
    assert [(s.name, s.budget, s.used, s.offset) for s in net.transcript.steps] == [("a", 20, 8, 0), ("b", 7, 4, 20)]


def test_fast_forward_over_idle_rounds():
    class Late(NodeProgram):
        def __init__(self, v):
            self.v = v
            self.wake = 10**12 if v == 0 else None
            self.got = False

        def on_round(self, rnd, inbox):
            self.got = self.got or bool(inbox)
            return [(1, (0,))] if self.v == 0 else None

    outs, tr = simulate(path(2), Late, 10**12 + 1)
    assert outs[1].got and tr.steps[-1].used == 10**12 + 1


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=80))
def test_parallel_and_sequential_transcripts_match(g):
    a_out, a = simulate(g, lambda v: Flood(g, v), 200)
    b_out, b = run_sequentially(g, lambda v: Flood(g, v), 200)
    assert a.to_jsonl() == b.to_jsonl()
    assert [p.at for p in a_out] == [p.at for p in b_out]
