"""Synchronous CONGEST simulator.

A message is a tuple ``(tag, *words)`` of at most ``W_MAX`` entries. A node
may put at most one message on each incident edge per round; a broadcast
(target ``None``) counts as one message on every incident edge. Messages sent
in round ``r`` are delivered at the start of round ``r + 1``.

Node programs are persistent objects. A program is invoked in a round when
its inbox is non-empty or when ``program.wake`` equals that round, so idle
stretches cost nothing; this is what makes schedules with very large
``delta`` affordable.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable, Iterable, Sequence

from .graph import Graph

W_MAX = 4

Outbox = Iterable[tuple["int | None", tuple]]


class BandwidthViolation(RuntimeError):
    pass


class RoundCapExceeded(RuntimeError):
    def __init__(self, msg: str, transcript: "SimTranscript"):
        super().__init__(msg)
        self.transcript = transcript


class NodeProgram:
    """Base program: override ``on_round``; set ``wake`` to be called back."""

    wake: int | None = None

    def on_round(self, rnd: int, inbox: list[tuple[int, tuple]]) -> Outbox:
        return ()

    def output(self):
        return self


@dataclass
class StepRecord:
    name: str
    budget: int
    used: int
    offset: int


@dataclass
class SimTranscript:
    rounds: int = 0
    messages: int = 0
    max_words: int = 0
    max_edge_load: int = 0
    steps: list[StepRecord] = field(default_factory=list)
    # (step, global round, messages in round, max words in round)
    active: list[tuple[str, int, int, int]] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "type": "summary",
                    "rounds": self.rounds,
                    "messages": self.messages,
                    "max_words": self.max_words,
                    "max_edge_load": self.max_edge_load,
                }
            )
        ]
        for s in self.steps:
            lines.append(json.dumps({"type": "step", "name": s.name, "budget": s.budget, "used": s.used, "offset": s.offset}))
        for name, rnd, cnt, words in self.active:
            lines.append(json.dumps({"type": "round", "step": name, "round": rnd, "messages": cnt, "max_words": words}))
        return "\n".join(lines) + "\n"


def _cap_hit(label, cap, used, offset, transcript):
    transcript.steps.append(StepRecord(label, cap, used, offset))
    raise RoundCapExceeded(f"{label}: round cap {cap} reached with work pending", transcript)


def _run_chunk(programs, chunk, rnd, inboxes):
    return [programs[v].on_round(rnd, inboxes.get(v, [])) for v in chunk]


def _execute(
    g: Graph,
    programs: Sequence[NodeProgram],
    round_cap: int,
    parallel: bool,
    label: str,
    transcript: SimTranscript,
    offset: int,
) -> int:
    """Run to quiescence; returns the number of rounds in which anything was sent.

    Messages sent in the last allowed round are still delivered and handled,
    but nothing may be sent from round ``round_cap`` on.
    """
    adj = g.adj
    adjsets = [set(a) for a in adj]
    wake_heap: list[tuple[int, int]] = []
    for v, p in enumerate(programs):
        if p.wake is not None:
            heappush(wake_heap, (p.wake, v))
    inboxes: dict[int, list] = {}
    rnd = 0
    used = 0
    pool = ThreadPoolExecutor(max_workers=4) if parallel else None
    try:
        while True:
            if not inboxes:
                while wake_heap and programs[wake_heap[0][1]].wake != wake_heap[0][0]:
                    heappop(wake_heap)
                if not wake_heap:
                    break
                rnd = max(rnd, wake_heap[0][0])
            active = set(inboxes)
            while wake_heap and wake_heap[0][0] <= rnd:
                w, v = heappop(wake_heap)
                if programs[v].wake == w:
                    if w < rnd:
                        raise RuntimeError(f"{label}: node {v} asked to wake in past round {w}")
                    active.add(v)
            if not active:
                continue
            if rnd > round_cap:
                _cap_hit(label, round_cap, used, offset, transcript)
            order = sorted(active)
            if pool is not None and len(order) > 64:
                k = (len(order) + 3) // 4
                chunks = [order[j : j + k] for j in range(0, len(order), k)]
                outs = []
                for part in pool.map(lambda c: _run_chunk(programs, c, rnd, inboxes), chunks):
                    outs.extend(part)
            else:
                outs = _run_chunk(programs, order, rnd, inboxes)
            nxt: dict[int, list] = {}
            count = 0
            words = 0
            for v, out in zip(order, outs):
                if out:
                    targets: set = set()
                    bcast = False
                    for tgt, msg in out:
                        if len(msg) > W_MAX:
                            raise BandwidthViolation(f"{label}: round {offset + rnd}: node {v} sent {len(msg)} words (max {W_MAX})")
                        if len(msg) > words:
                            words = len(msg)
                        if tgt is None:
                            if bcast or targets:
                                raise BandwidthViolation(
                                    f"{label}: round {offset + rnd}: node {v} broadcast on top of other sends"
                                )
                            bcast = True
                            for u in adj[v]:
                                box = nxt.get(u)
                                if box is None:
                                    nxt[u] = [(v, msg)]
                                else:
                                    box.append((v, msg))
                            count += len(adj[v])
                        else:
                            if bcast or tgt in targets:
                                raise BandwidthViolation(
                                    f"{label}: round {offset + rnd}: two messages on edge ({v}, {tgt})"
                                )
                            if tgt not in adjsets[v]:
                                raise BandwidthViolation(f"{label}: round {offset + rnd}: ({v}, {tgt}) is not an edge")
                            targets.add(tgt)
                            box = nxt.get(tgt)
                            if box is None:
                                nxt[tgt] = [(v, msg)]
                            else:
                                box.append((v, msg))
                            count += 1
                p = programs[v]
                if p.wake is not None:
                    if p.wake <= rnd:
                        p.wake = None
                    else:
                        heappush(wake_heap, (p.wake, v))
            if count:
                if rnd >= round_cap:
                    _cap_hit(label, round_cap, used, offset, transcript)
                transcript.active.append((label, offset + rnd, count, words))
                transcript.messages += count
                transcript.max_words = max(transcript.max_words, words)
                transcript.max_edge_load = max(transcript.max_edge_load, 1)
                used = rnd + 1
            inboxes = nxt
            rnd += 1
    finally:
        if pool is not None:
            pool.shutdown()
    return used


def simulate(
    g: Graph,
    factory: Callable[[int], NodeProgram],
    round_cap: int,
    *,
    parallel: bool = True,
    label: str = "run",
    transcript: SimTranscript | None = None,
    offset: int = 0,
):
    """Run ``factory(v)`` on every vertex; returns ``(outputs, transcript)``.

    With ``parallel`` the handlers of one round run on a thread pool; results
    are merged in vertex order so the transcript does not depend on it.
    """
    programs = [factory(v) for v in range(g.n)]
    tr = transcript if transcript is not None else SimTranscript()
    used = _execute(g, programs, round_cap, parallel, label, tr, offset)
    tr.steps.append(StepRecord(label, round_cap, used, offset))
    tr.rounds = max(tr.rounds, offset + round_cap)
    return [p.output() for p in programs], tr


def run_sequentially(g: Graph, factory: Callable[[int], NodeProgram], round_cap: int, **kw):
    kw["parallel"] = False
    return simulate(g, factory, round_cap, **kw)


class Network:
    """Runs consecutive sub-protocols on one graph and concatenates their rounds.

    Every sub-protocol is charged its full round budget, whether or not it
    finishes early, since nodes start the next step at a globally known round.
    """

    def __init__(self, g: Graph, parallel: bool = True):
        self.g = g
        self.parallel = parallel
        self.transcript = SimTranscript()
        self.offset = 0

    def run(self, label: str, programs: Sequence[NodeProgram], budget: int) -> Sequence[NodeProgram]:
        if len(programs) != self.g.n:
            raise ValueError("one program per vertex required")
        used = _execute(self.g, programs, budget, self.parallel, label, self.transcript, self.offset)
        if used > budget:
            raise RoundCapExceeded(f"{label}: used {used} rounds, budget {budget}", self.transcript)
        self.transcript.steps.append(StepRecord(label, budget, used, self.offset))
        self.offset += budget
        self.transcript.rounds = self.offset
        return programs
