"""Unweighted input graphs, weighted edge sets, and exact shortest paths.

Vertex IDs are ``0..n-1``. Adjacency lists are sorted ascending so every
traversal that breaks ties "by lowest ID" does so by iteration order alone.
"""

from __future__ import annotations

import heapq
import io
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

EMULATOR = "emulator"
SPANNER = "spanner"


class GraphFormatError(ValueError):
    """Malformed graph input; the message carries the offending line number."""


class GraphParamError(ValueError):
    """Invalid generator family or parameters."""


class Graph:
    """Simple undirected graph with sorted adjacency lists."""

    __slots__ = ("n", "adj", "_edges", "_adjsets")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise GraphParamError(f"vertex count must be >= 0, got {n}")
        self.n = n
        seen: set[tuple[int, int]] = set()
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise GraphFormatError(f"duplicate edge {key}")
            seen.add(key)
            adj[u].append(v)
            adj[v].append(u)
        for a in adj:
            a.sort()
        self.adj = adj
        self._edges = sorted(seen)
        self._adjsets = None

    @property
    def m(self) -> int:
        return len(self._edges)

    def edges(self) -> list[tuple[int, int]]:
        return list(self._edges)

    def neighbors(self, v: int) -> list[int]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        if self._adjsets is None:
            self._adjsets = [frozenset(a) for a in self.adj]
        return v in self._adjsets[u]

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self._edges == other._edges

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class WeightedEdgeSet:
    """Undirected pairs with positive integer weights.

    Re-inserting a pair keeps the smaller weight. In spanner mode every entry
    has weight 1 and, when a base graph is supplied, must be one of its edges.
    """

    def __init__(self, n: int, mode: str = EMULATOR, base: Graph | None = None):
        if mode not in (EMULATOR, SPANNER):
            raise ValueError(f"unknown edge-set mode {mode!r}")
        self.n = n
        self.mode = mode
        self.base = base
        self._w: dict[tuple[int, int], int] = {}

    def add(self, u: int, v: int, w: int = 1) -> bool:
        """Insert ``{u, v}``; returns True if the pair was new."""
        if u == v:
            raise ValueError(f"self-loop ({u}, {v}) in edge set")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"pair ({u}, {v}) out of range for n={self.n}")
        w = int(w)
        if w <= 0:
            raise ValueError(f"weight must be a positive integer, got {w}")
        if self.mode == SPANNER:
            if w != 1:
                raise ValueError("spanner entries have weight 1")
            if self.base is not None and not self.base.has_edge(u, v):
                raise ValueError(f"({u}, {v}) is not an edge of the base graph")
        k = _key(u, v)
        old = self._w.get(k)
        if old is None:
            self._w[k] = w
            return True
        if w < old:
            self._w[k] = w
        return False

    def weight(self, u: int, v: int) -> int | None:
        return self._w.get(_key(u, v))

    def __contains__(self, pair) -> bool:
        return _key(*pair) in self._w

    def __len__(self) -> int:
        return len(self._w)

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        for (u, v), w in sorted(self._w.items()):
            yield u, v, w

    def items(self) -> list[tuple[int, int, int]]:
        return list(self)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for (u, v), w in self._w.items():
            adj[u].append((v, w))
            adj[v].append((u, w))
        for a in adj:
            a.sort()
        return adj

    def copy(self) -> "WeightedEdgeSet":
        h = WeightedEdgeSet(self.n, self.mode, self.base)
        h._w = dict(self._w)
        return h

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeightedEdgeSet)
            and self.n == other.n
            and self.mode == other.mode
            and self._w == other._w
        )

    def dumps(self) -> str:
        out = [f"{self.n} {len(self)} {self.mode}"]
        out.extend(f"{u} {v} {w}" for u, v, w in self)
        return "\n".join(out) + "\n"

    def dump(self, stream: TextIO) -> None:
        stream.write(self.dumps())

    @classmethod
    def load(cls, stream: TextIO | str, base: Graph | None = None) -> "WeightedEdgeSet":
        if isinstance(stream, str):
            stream = io.StringIO(stream)
        lines = _content_lines(stream)
        try:
            lineno, header = next(lines)
        except StopIteration:
            raise GraphFormatError("line 1: empty edge-set file") from None
        parts = header.split()
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'n k mode'")
        n, k, mode = int(parts[0]), int(parts[1]), parts[2]
        h = cls(n, mode, base)
        count = 0
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise GraphFormatError(f"line {lineno}: expected 'u v w'")
            try:
                h.add(int(parts[0]), int(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise GraphFormatError(f"line {lineno}: {exc}") from None
            count += 1
        if count != k:
            raise GraphFormatError(f"header promised {k} pairs, found {count}")
        return h


@dataclass
class DistanceMap:
    """Single-source distances; ``None`` marks unreachable or beyond the cap."""

    source: int
    dist: list[int | None]
    pred: list[int | None] = field(repr=False)

    def path_to(self, t: int) -> list[int] | None:
        if self.dist[t] is None:
            return None
        path = [t]
        while path[-1] != self.source:
            path.append(self.pred[path[-1]])
        path.reverse()
        return path


def _content_lines(stream: TextIO) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def _parse_ints(line: str, lineno: int, count: int) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise GraphFormatError(f"line {lineno}: expected {count} integers, got {line!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise GraphFormatError(f"line {lineno}: non-integer token in {line!r}") from None


def _checked_add(edges: dict, u: int, v: int, n: int, lineno: int) -> None:
    if not (0 <= u < n and 0 <= v < n):
        raise GraphFormatError(f"line {lineno}: vertex out of range 0..{n - 1}")
    if u == v:
        raise GraphFormatError(f"line {lineno}: self-loop at vertex {u}")
    k = _key(u, v)
    if k in edges:
        raise GraphFormatError(f"line {lineno}: duplicate edge {k} (first at line {edges[k]})")
    edges[k] = lineno


def _load_edge_list(stream: TextIO) -> Graph:
    lines = _content_lines(stream)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise GraphFormatError("line 1: missing 'n m' header") from None
    n, m = _parse_ints(header, lineno, 2)
    if n < 0 or m < 0:
        raise GraphFormatError(f"line {lineno}: negative size in header")
    edges: dict[tuple[int, int], int] = {}
    for lineno, line in lines:
        u, v = _parse_ints(line, lineno, 2)
        _checked_add(edges, u, v, n, lineno)
    if len(edges) != m:
        raise GraphFormatError(f"header promised {m} edges, found {len(edges)}")
    return Graph(n, edges)


def _load_dimacs(stream: TextIO) -> Graph:
    """DIMACS ``p sp``/``a`` or ``p edge``/``e`` files, 1-based IDs.

    Shortest-path files list both arc directions; a reverse arc is folded into
    the same undirected edge, any other repeat is an error.
    """
    n = None
    edges: dict[tuple[int, int], int] = {}
    arcs: set[tuple[int, int]] = set()
    for lineno, line in _content_lines(stream):
        parts = line.split()
        tag = parts[0]
        if tag == "c":
            continue
        if tag == "p":
            if n is not None or len(parts) != 4:
                raise GraphFormatError(f"line {lineno}: bad problem line")
            n = int(parts[2])
            continue
        if tag not in ("a", "e"):
            raise GraphFormatError(f"line {lineno}: unknown record {tag!r}")
        if n is None:
            raise GraphFormatError(f"line {lineno}: arc before problem line")
        if tag == "a":
            if len(parts) != 4:
                raise GraphFormatError(f"line {lineno}: expected 'a u v w'")
            if int(parts[3]) != 1:
                raise GraphFormatError(f"line {lineno}: weight {parts[3]} != 1; input must be unweighted")
        u, v = int(parts[1]) - 1, int(parts[2]) - 1
        if (u, v) in arcs:
            raise GraphFormatError(f"line {lineno}: duplicate arc ({u + 1}, {v + 1})")
        arcs.add((u, v))
        if tag == "a" and (v, u) in arcs and _key(u, v) in edges:
            continue
        _checked_add(edges, u, v, n, lineno)
    if n is None:
        raise GraphFormatError("line 1: missing problem line")
    return Graph(n, edges)


def load_graph(stream: TextIO | str, fmt: str = "edge-list") -> Graph:
    """Parse a graph. ``stream`` may be a file object or the text itself."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    if fmt in ("edge-list", "edgelist"):
        return _load_edge_list(stream)
    if fmt == "dimacs":
        return _load_dimacs(stream)
    raise GraphParamError(f"unknown graph format {fmt!r}")


def dump_graph(g: Graph) -> str:
    out = [f"{g.n} {g.m}"]
    out.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(out) + "\n"


def _need_int(params: dict, name: str, lo: int) -> int:
    if name not in params:
        raise GraphParamError(f"missing parameter {name!r}")
    val = params[name]
    if isinstance(val, bool) or int(val) != val:
        raise GraphParamError(f"{name} must be an integer, got {val!r}")
    val = int(val)
    if val < lo:
        raise GraphParamError(f"{name} must be >= {lo}, got {val}")
    return val


def generate_graph(family: str, params: dict | None = None, seed: int = 0) -> Graph:
    """Deterministic generators.

    path(n), cycle(n>=3), star(leaves; center is vertex 0), grid(rows, cols
    or side), erdos_renyi(n, p), hypercube(dim).
    """
    p = dict(params or {})
    if family == "path":
        n = _need_int(p, "n", 1)
        return Graph(n, ((i, i + 1) for i in range(n - 1)))
    if family == "cycle":
        n = _need_int(p, "n", 3)
        return Graph(n, ((i, (i + 1) % n) for i in range(n)))
    if family == "star":
        k = _need_int(p, "leaves", 1)
        return Graph(k + 1, ((0, i) for i in range(1, k + 1)))
    if family == "grid":
        if "side" in p:
            rows = cols = _need_int(p, "side", 1)
        else:
            rows, cols = _need_int(p, "rows", 1), _need_int(p, "cols", 1)
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return Graph(rows * cols, edges)
    if family == "erdos_renyi":
        n = _need_int(p, "n", 1)
        prob = float(p.get("p", -1))
        if not 0.0 <= prob <= 1.0:
            raise GraphParamError(f"p must lie in [0, 1], got {p.get('p')!r}")
        rng = random.Random(seed)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < prob]
        return Graph(n, edges)
    if family == "hypercube":
        d = _need_int(p, "dim", 0)
        n = 1 << d
        return Graph(n, ((v, v ^ (1 << b)) for v in range(n) for b in range(d) if v < v ^ (1 << b)))
    raise GraphParamError(f"unknown family {family!r}")


def parse_gen_spec(spec: str) -> tuple[str, dict]:
    """``cycle:5``, ``grid:8``, ``grid:4x6``, ``erdos_renyi:64:0.1``, ``hypercube:6``."""
    parts = spec.split(":")
    fam, args = parts[0], parts[1:]
    try:
        if fam in ("path", "cycle") and len(args) == 1:
            return fam, {"n": int(args[0])}
        if fam == "star" and len(args) == 1:
            return fam, {"leaves": int(args[0])}
        if fam == "grid" and len(args) == 1:
            if "x" in args[0]:
                r, c = args[0].split("x")
                return fam, {"rows": int(r), "cols": int(c)}
            return fam, {"side": int(args[0])}
        if fam in ("erdos_renyi", "er") and len(args) == 2:
            return "erdos_renyi", {"n": int(args[0]), "p": float(args[1])}
        if fam == "hypercube" and len(args) == 1:
            return fam, {"dim": int(args[0])}
    except ValueError:
        pass
    raise GraphParamError(f"cannot parse generator spec {spec!r}")


def bfs_ball(adj: list[list[int]], source: int, cap: int | None = None) -> dict[int, int]:
    """Distances from ``source`` to every vertex within ``cap`` hops."""
    dist = {source: 0}
    frontier = [source]
    d = 0
    while frontier and (cap is None or d < cap):
        d += 1
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y not in dist:
                    dist[y] = d
                    nxt.append(y)
        frontier = nxt
    return dist


def bfs_distances(g: Graph, source: int, depth_cap: int | None = None) -> DistanceMap:
    """Hop distances; vertices past ``depth_cap`` report ``None``."""
    dist: list[int | None] = [None] * g.n
    pred: list[int | None] = [None] * g.n
    dist[source] = 0
    q = deque([source])
    while q:
        x = q.popleft()
        dx = dist[x]
        if depth_cap is not None and dx >= depth_cap:
            continue
        for y in g.adj[x]:
            if dist[y] is None:
                dist[y] = dx + 1
                pred[y] = x
                q.append(y)
    return DistanceMap(source, dist, pred)


def dijkstra_distances(h: WeightedEdgeSet, n: int | None = None, source: int = 0) -> DistanceMap:
    """Binary-heap Dijkstra over a weighted edge set."""
    n = h.n if n is None else n
    adj = h.adjacency()
    dist: list[int | None] = [None] * n
    pred: list[int | None] = [None] * n
    dist[source] = 0
    heap = [(0, source)]
    done = [False] * n
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y, w in adj[x]:
            nd = d + w
            if dist[y] is None or nd < dist[y]:
                dist[y] = nd
                pred[y] = x
                heapq.heappush(heap, (nd, y))
    return DistanceMap(source, dist, pred)
