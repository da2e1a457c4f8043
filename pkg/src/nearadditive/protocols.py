"""Node programs for the distributed phases.

Each class below is one synchronous sub-protocol; ``budget_*`` helpers give
its round budget. Message tags are small ints so a message is
``(tag, w1, w2, w3)`` at most.
"""

from __future__ import annotations

from collections import deque

from .congest import NodeProgram

DET, RULE, BFS, BACK, CONF, REP, BUCKET, COUNT, TRACE = range(1, 10)


# --------------------------------------------------------------------------
# popularity detection


class DetectNode(NodeProgram):
    """Bounded exploration from a source set.

    Stride ``j`` lasts ``cap`` rounds. At its start a vertex broadcasts, one
    per round, the (up to ``cap``) lowest-ID origins it first learned in
    stride ``j - 1``. An origin first heard in stride ``j`` is at distance
    ``j``; the neighbour it was first heard from becomes its predecessor.
    """

    __slots__ = ("v", "table", "heard_at", "fresh", "queue", "strides", "cap", "wake")

    def __init__(self, v: int, source: bool, strides: int, cap: int):
        self.v = v
        self.strides = strides
        self.cap = cap
        self.table: dict[int, tuple[int, int | None]] = {}
        self.heard_at: dict[int, int] = {}
        self.fresh: list[int] = []
        self.queue: list[tuple] = []
        self.wake = None
        if source and strides > 0:
            self.table[v] = (0, None)
            self.fresh = [v]
            self.wake = 0

    def on_round(self, rnd, inbox):
        T = self.cap
        if inbox:
            d = (rnd - 1) // T + 1
            tab = self.table
            for sender, msg in inbox:
                o = msg[1]
                if o not in tab:
                    tab[o] = (d, sender)
                    self.heard_at[o] = rnd
                    self.fresh.append(o)
        if rnd % T == 0 and self.fresh and rnd // T < self.strides:
            d = rnd // T
            self.fresh.sort()
            self.queue = [(DET, o, d) for o in reversed(self.fresh[:T])]
            self.fresh = []
        out = None
        if self.queue:
            out = ((None, self.queue.pop()),)
        if self.queue:
            self.wake = rnd + 1
        elif self.fresh:
            nxt = (rnd // T + 1) * T
            self.wake = nxt if nxt // T < self.strides else None
        else:
            self.wake = None
        return out

    def learned(self) -> int:
        """Number of other origins heard of."""
        return len(self.table) - (1 if self.v in self.table and self.table[self.v][0] == 0 else 0)


def budget_detect(delta: int, cap: int) -> int:
    return delta * cap


# --------------------------------------------------------------------------
# ruling set


def ruling_digits(n: int, levels: int) -> int:
    """Smallest base b with b ** levels >= n."""
    b = max(2, round(n ** (1 / levels)))
    while b**levels < n:
        b += 1
    while b > 2 and (b - 1) ** levels >= n:
        b -= 1
    return b


class RulingNode(NodeProgram):
    """Digit-by-digit elimination.

    IDs are written with ``levels`` digits in base ``base``. For each digit
    position (least significant first) and each digit value ``t`` in turn,
    surviving candidates whose digit is ``t`` flood a kill token to depth
    ``q``; surviving candidates with a larger digit that hear it drop out.
    Survivors are pairwise more than ``q`` apart and every candidate is within
    ``levels * q`` of one.
    """

    __slots__ = ("v", "alive", "digits", "base", "q", "levels", "decided", "seen", "wake")

    def __init__(self, v: int, candidate: bool, levels: int, base: int, q: int):
        self.v = v
        self.alive = candidate
        self.levels = levels
        self.base = base
        self.q = q
        self.digits = [(v // base**s) % base for s in range(levels)]
        self.decided = -1
        self.seen = -1
        self.wake = self._start(0) if candidate else None

    def _start(self, s: int) -> int:
        return (s * self.base + self.digits[s]) * self.q

    def on_round(self, rnd, inbox):
        out = None
        if inbox:
            sub = (rnd - 1) // self.q
            if self.seen != sub:
                self.seen = sub
                hops = max(m[1] for _, m in inbox)
                s, t = divmod(sub, self.base)
                if self.alive and self.decided < s and self.digits[s] > t:
                    self.alive = False
                    self.wake = None
                if hops > 0:
                    out = ((None, (RULE, hops - 1)),)
        if self.alive and self.wake == rnd:
            s = rnd // (self.base * self.q)
            self.decided = s
            out = ((None, (RULE, self.q - 1)),)
            self.wake = self._start(s + 1) if s + 1 < self.levels else None
        return out


def budget_ruling(levels: int, base: int, q: int) -> int:
    return levels * base * q


# --------------------------------------------------------------------------
# BFS forest


class ForestNode(NodeProgram):
    """Joins the first tree to reach it; ties go to the lowest root, then parent."""

    __slots__ = ("v", "root", "parent", "depth", "limit", "wake")

    def __init__(self, v: int, is_root: bool, limit: int):
        self.v = v
        self.limit = limit
        self.root = v if is_root else None
        self.parent = None
        self.depth = 0 if is_root else None
        self.wake = 0 if is_root else None

    def on_round(self, rnd, inbox):
        if rnd == 0 and self.root == self.v:
            return ((None, (BFS, self.v)),) if self.limit > 0 else None
        if self.root is None and inbox:
            self.root, self.parent = min((m[1], s) for s, m in inbox)
            self.depth = rnd
            if rnd < self.limit:
                return ((None, (BFS, self.root)),)
        return None


def budget_forest(limit: int) -> int:
    return limit


# --------------------------------------------------------------------------
# backtracking with hubs (emulator)


class BacktrackNode(NodeProgram):
    """Center reports travel up the tree, one per round per stride.

    A vertex at depth ``h`` owns stride ``limit - h`` of ``stride`` rounds. At
    its start it holds every report its children sent plus its own (if it is
    a center). With at least ``stride`` reports it becomes a hub and keeps
    them; otherwise it forwards them to its parent, lowest center first.
    """

    __slots__ = ("v", "parent", "depth", "center", "M", "route", "hub", "start", "queue", "stride", "wake")

    def __init__(self, v: int, forest: ForestNode, center: bool, limit: int, stride: int):
        self.v = v
        self.parent = forest.parent
        self.depth = forest.depth
        self.center = center
        self.M: list[tuple[int, int]] = []
        self.route: dict[int, int] = {}
        self.hub = False
        self.queue: list = []
        self.wake = None
        self.start = None
        self.stride = stride
        if self.depth is None:
            return
        if self.depth == 0:
            self.M.append((v, 0))
            self.route[v] = v
        else:
            self.start = (limit - self.depth) * stride
            self.wake = self.start

    def on_round(self, rnd, inbox):
        for sender, msg in inbox:
            if self.start is not None and rnd > self.start:
                raise RuntimeError(f"late report at vertex {self.v}, round {rnd}")
            self.M.append((msg[1], msg[2]))
            self.route[msg[1]] = sender
        if rnd == self.start:
            if self.center:
                self.M.append((self.v, self.depth))
                self.route[self.v] = self.v
            if len(self.M) >= self.stride:
                self.hub = True
            else:
                self.queue = sorted(self.M, reverse=True)
        out = None
        if self.queue:
            c, d = self.queue.pop()
            out = ((self.parent, (BACK, c, d)),)
        if self.queue:
            self.wake = rnd + 1
        elif self.start is not None and self.start > rnd:
            self.wake = self.start
        else:
            self.wake = None
        return out



def budget_backtrack(limit: int, stride: int) -> int:
    return limit * stride


def buckets(counts: list[tuple[int, int]], cap: int, floor: int) -> list[list[int]]:
    """Greedy grouping of ``(child, count)`` pairs, each bucket at most ``cap``.

    A trailing bucket smaller than ``floor`` is merged into its predecessor.
    """
    out: list[list[int]] = []
    cur: list[int] = []
    total = 0
    sizes = []
    for child, cnt in counts:
        if cur and total + cnt > cap:
            out.append(cur)
            sizes.append(total)
            cur, total = [], 0
        cur.append(child)
        total += cnt
    if cur:
        out.append(cur)
        sizes.append(total)
    if len(out) >= 2 and sizes[-1] < floor:
        out[-2].extend(out.pop())
    return out


class NotifyNode(NodeProgram):
    """Tells absorbed centers their new center and the new emulator edge.

    Roots and center hubs confirm each report back along its route. A
    non-center hub splits its children into buckets; each bucket elects its
    lowest center and the hub broadcasts the election and all bucket edges
    down that bucket's subtrees.
    """

    __slots__ = ("v", "route", "kids", "queues", "known", "new_center", "wake", "member")

    def __init__(self, v: int, bt: BacktrackNode, D: int):
        self.v = v
        self.route = bt.route
        self.kids = sorted(set(bt.route.values()) - {v})
        self.member = bt.route.get(v) == v
        self.queues: dict[int, deque] = {}
        self.known: dict[tuple[int, int], int] = {}
        self.new_center = None
        self.wake = None
        initiator = bt.depth == 0 or bt.hub
        if initiator and bt.center:
            self.new_center = v
            for c, d in sorted(bt.M):
                if c == v:
                    continue
                w = d - bt.depth
                self._record(v, c, w)
                self._enqueue(self.route[c], (CONF, v, c, w))
        elif initiator:
            dist = dict(bt.M)
            per_child: dict[int, list[int]] = {}
            for c, _ in bt.M:
                per_child.setdefault(self.route[c], []).append(c)
            counts = [(k, len(per_child[k])) for k in sorted(per_child)]
            for group in buckets(counts, 4 * D + 4, 2 * D + 2):
                Z = sorted(c for k in group for c in per_child[k])
                r = Z[0]
                items = [(REP, r)] + [(BUCKET, r, c, (dist[c] - bt.depth) + (dist[r] - bt.depth)) for c in Z[1:]]
                for k in group:
                    for it in items:
                        self._enqueue(k, it)
        if self.queues:
            self.wake = 0

    def _record(self, a: int, b: int, w: int) -> None:
        self.known[(a, b) if a < b else (b, a)] = w

    def _enqueue(self, k: int, msg: tuple) -> None:
        q = self.queues.get(k)
        if q is None:
            self.queues[k] = deque([msg])
        else:
            q.append(msg)

    def on_round(self, rnd, inbox):
        v = self.v
        for _, msg in inbox:
            tag = msg[0]
            if tag == CONF:
                _, a, b, w = msg
                if b == v:
                    self._record(a, b, w)
                    self.new_center = a
                else:
                    self._enqueue(self.route[b], msg)
            elif tag == REP:
                if self.member:
                    self.new_center = msg[1]
                for k in self.kids:
                    self._enqueue(k, msg)
            elif tag == BUCKET:
                _, r, c, w = msg
                if v == r or v == c:
                    self._record(r, c, w)
                for k in self.kids:
                    self._enqueue(k, msg)
        out = []
        for k in sorted(self.queues):
            q = self.queues[k]
            if q:
                out.append((k, q.popleft()))
        self.wake = rnd + 1 if any(self.queues.values()) else None
        return out


def budget_notify(limit: int, D: int) -> int:
    return limit + 6 * D + 8


# --------------------------------------------------------------------------
# spanner: counting backtrack and path tracing


class CountNode(NodeProgram):
    """Subtree center counts flow to the root; a non-zero count keeps the parent edge."""

    __slots__ = ("v", "parent", "depth", "count", "start", "edge", "wake")

    def __init__(self, v: int, forest: ForestNode, center: bool, limit: int):
        self.v = v
        self.parent = forest.parent
        self.depth = forest.depth
        self.count = 1 if center and self.depth is not None else 0
        self.edge = None
        self.start = None
        self.wake = None
        if self.depth is not None and self.depth >= 1:
            self.start = limit - self.depth
            self.wake = self.start

    def on_round(self, rnd, inbox):
        for _, msg in inbox:
            self.count += msg[1]
        if rnd == self.start and self.count > 0:
            self.edge = (self.v, self.parent)
            return ((self.parent, (COUNT, self.count)),)
        return None


def budget_count(limit: int) -> int:
    return limit


class TraceNode(NodeProgram):
    """Walks a token for each origin back along detection predecessors.

    Detection in reverse: the token for origin ``c`` leaves ``v`` towards its
    predecessor in round ``span - heard_at[c]``. Each directed edge carried at
    most one detection message per round, so it carries at most one token per
    round, and a token always reaches ``v`` before its slot there.
    """

    __slots__ = ("v", "table", "heard_at", "span", "slots", "done", "edges", "hops", "wake")

    def __init__(self, v: int, detect: DetectNode, origins, span: int):
        self.v = v
        self.table = detect.table
        self.heard_at = detect.heard_at
        self.span = span
        self.slots: dict[int, list[tuple[int, int]]] = {}
        self.done: set[int] = set()
        self.edges: set[tuple[int, int]] = set()
        self.hops: list[tuple[int, int]] = []
        self.wake = None
        for c in sorted(origins):
            self._push(c, 0)
        self._rearm()

    def _push(self, c: int, rnd: int) -> None:
        if c == self.v or c in self.done:
            return
        self.done.add(c)
        p = self.table[c][1]
        at = self.span - self.heard_at[c]
        if at < rnd:
            raise RuntimeError(f"token for {c} reached {self.v} after its slot {at}")
        self.hops.append((c, p))
        self.edges.add((self.v, p) if self.v < p else (p, self.v))
        self.slots.setdefault(at, []).append((p, c))

    def _rearm(self) -> None:
        self.wake = min(self.slots) if self.slots else None

    def on_round(self, rnd, inbox):
        for _, msg in inbox:
            self._push(msg[1], rnd)
        out = [(p, (TRACE, c)) for p, c in self.slots.pop(rnd, ())]
        self._rearm()
        return out


def budget_trace(delta: int, cap: int) -> int:
    return delta * cap
