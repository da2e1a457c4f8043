"""Independent checks of a finished build.

Distances are recomputed from ``g`` and ``h`` with scipy's csgraph routines,
which share no code with the builders' own BFS and Dijkstra. Structural
checks read only the cluster hierarchy recorded in the build transcript.

Exhaustive stretch checking costs O(n (m + |h| + n log n)) time and O(n^2)
memory; above ``EXHAUSTIVE_GUARD`` vertices it refuses to run unless forced.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .graph import Graph, WeightedEdgeSet, bfs_distances, dijkstra_distances
from .params import CENTRALIZED, DISTRIBUTED, SPANNER, RealPower, Schedule, StretchBudget
from .transcript import BuildTranscript

SCHEMA_VERSION = 1
EXHAUSTIVE_DEFAULT_MAX_N = 1024
EXHAUSTIVE_GUARD = 4096
DEFAULT_SAMPLES = 64
WITNESS_LIMIT = 20


class SizeGuardError(ValueError):
    pass


def _graph_matrix(g: Graph) -> csr_matrix:
    e = g.edges()
    rows = [u for u, _ in e]
    cols = [v for _, v in e]
    return csr_matrix((np.ones(len(e)), (rows, cols)), shape=(g.n, g.n))


def _edge_set_matrix(h: WeightedEdgeSet) -> csr_matrix:
    it = h.items()
    return csr_matrix(
        ([float(w) for *_, w in it], ([u for u, *_ in it], [v for _, v, _ in it])), shape=(h.n, h.n)
    )


def graph_distances(g: Graph, sources=None) -> np.ndarray:
    """Hop distances (rows = sources), ``inf`` when unreachable."""
    if g.n == 0:
        return np.zeros((0, 0))
    return shortest_path(_graph_matrix(g), method="D", directed=False, unweighted=True, indices=sources)


def edge_set_distances(h: WeightedEdgeSet, sources=None) -> np.ndarray:
    if h.n == 0:
        return np.zeros((0, 0))
    return shortest_path(_edge_set_matrix(h), method="D", directed=False, indices=sources)


@dataclass
class StretchReport:
    mode: str
    pairs: int
    max_ratio: float
    max_additive: float
    max_additive_slack_used: float
    violation_count: int
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "pairs": self.pairs,
            "max_ratio": self.max_ratio,
            "max_additive": self.max_additive,
            "max_additive_slack_used": self.max_additive_slack_used,
            "violation_count": self.violation_count,
            "violations": self.violations,
            "pass": self.ok,
        }


def parse_mode(mode: str | None, n: int) -> tuple[str, int | None]:
    """``None``/``auto``, ``exhaustive``, ``sampled`` or ``sampled:k``."""
    if mode in (None, "auto"):
        return ("exhaustive", None) if n <= EXHAUSTIVE_DEFAULT_MAX_N else ("sampled", DEFAULT_SAMPLES)
    if mode == "exhaustive":
        return "exhaustive", None
    if mode.startswith("sampled"):
        _, _, k = mode.partition(":")
        return "sampled", int(k) if k else DEFAULT_SAMPLES
    raise ValueError(f"unknown stretch mode {mode!r}")


def _finite(x: float) -> float | None:
    return None if not math.isfinite(x) else x


def verify_stretch(
    g: Graph,
    h: WeightedEdgeSet,
    budget: StretchBudget,
    mode: str | None = None,
    seed: int = 0,
    force: bool = False,
) -> StretchReport:
    """Checks ``d_G <= d_H <= alpha d_G + beta`` for every same-component pair."""
    n = g.n
    kind, k = parse_mode(mode, n)
    if kind == "exhaustive":
        if n > EXHAUSTIVE_GUARD and not force:
            raise SizeGuardError(f"exhaustive stretch on n={n} > {EXHAUSTIVE_GUARD}; pass force=True")
        sources = np.arange(n)
        label = "exhaustive"
    else:
        rng = random.Random(seed)
        sources = np.array(sorted(rng.sample(range(n), min(k, n))), dtype=int)
        label = f"sampled:{len(sources)}"
    if n == 0 or len(sources) == 0:
        return StretchReport(label, 0, 1.0, 0.0, 0.0, 0)
    G = graph_distances(g, sources)
    H = edge_set_distances(h, sources)
    alpha, beta = budget.alpha, budget.beta
    af, bf = float(alpha), float(beta)

    with np.errstate(invalid="ignore", divide="ignore"):
        rows, cols = np.indices(G.shape)
        src = sources[rows]
        pair = (src != cols) & np.isfinite(G)
        if kind == "exhaustive":
            pair &= src < cols
        shorter = pair & (H < G)
        bound = af * G + bf
        diff = np.where(pair & np.isfinite(H), H - bound, -np.inf)
        tol = 1e-9 * np.maximum(1.0, bound)
        broken = pair & ~np.isfinite(H)
        clear = diff > tol
        border = pair & np.isfinite(H) & (np.abs(diff) <= tol)
        exact_bad = np.zeros_like(pair)
        for r, c in zip(*np.nonzero(border)):
            if Fraction(int(H[r, c])) > alpha * int(G[r, c]) + beta:
                exact_bad[r, c] = True
        over = broken | clear | exact_bad
        bad = over | shorter

        pos = pair & (G > 0)
        ratios = np.where(pos, H / np.where(pos, G, 1), 1.0)
        max_ratio = float(ratios.max()) if pos.any() else 1.0
        fin = pair & np.isfinite(H)
        max_add = float((H - G)[fin].max()) if fin.any() else 0.0
        slack = float((H - af * G)[fin].max()) if fin.any() else 0.0
        if broken.any():
            max_ratio = math.inf
            max_add = math.inf

    witnesses = []
    for r, c in zip(*np.nonzero(bad)):
        if len(witnesses) >= WITNESS_LIMIT:
            break
        u, v = int(sources[r]), int(c)
        dg, dh = float(G[r, c]), float(H[r, c])
        witnesses.append(
            {
                "u": u,
                "v": v,
                "d_G": _finite(dg),
                "d_H": _finite(dh),
                "bound": float(alpha * int(dg) + beta),
                "kind": "shorter" if shorter[r, c] else "stretch",
                "path_G": bfs_distances(g, u).path_to(v),
                "path_H": dijkstra_distances(h, n, u).path_to(v),
            }
        )
    return StretchReport(label, int(pair.sum()), max_ratio, max_add, slack, int(bad.sum()), witnesses)


def ultra_sparse_kappa(n: int) -> int:
    """ceil(log2 n * log2 log2 n)."""
    return math.ceil(math.log2(n) * math.log2(math.log2(n)))


def verify_size(h_size: int, n: int, kappa: int, form: str = "exact") -> dict:
    """``exact``: |H| <= n^(1+1/kappa); ``big_oh``: report the constant only;
    ``ultra_sparse``: |H| <= n * 2^(1/log2 log2 n)."""
    bound = RealPower(n, 1 + Fraction(1, kappa))
    const = h_size / float(bound) if n else 0.0
    if form == "exact":
        ok = bound.bounds(h_size)
        lim = float(bound)
    elif form == "big_oh":
        ok = True
        lim = float(bound)
    elif form == "ultra_sparse":
        f = math.log2(math.log2(n))
        lim = n * 2 ** (1 / f)
        ok = h_size <= lim
    else:
        raise ValueError(f"unknown size form {form!r}")
    return {"form": form, "edges": h_size, "bound": lim, "constant": const, "excess_over_n": h_size - n, "pass": bool(ok)}


def verify_soundness(g: Graph, h: WeightedEdgeSet, kind: str) -> dict:
    """Centralized weights equal d_G; distributed weights are >= d_G and at
    most n - 1 (a simple G-path); spanner entries are G edges of weight 1."""
    bad = []
    if kind == SPANNER:
        for u, v, w in h:
            if not g.has_edge(u, v) or w != 1:
                bad.append({"u": u, "v": v, "w": w, "reason": "not an input edge"})
    else:
        items = h.items()
        srcs = sorted({u for u, _, _ in items})
        D = graph_distances(g, srcs) if srcs else None
        row = {s: i for i, s in enumerate(srcs)}
        for u, v, w in items:
            d = D[row[u], v]
            if not math.isfinite(d):
                bad.append({"u": u, "v": v, "w": w, "reason": "endpoints disconnected in G"})
            elif kind == CENTRALIZED and w != d:
                bad.append({"u": u, "v": v, "w": w, "d_G": d, "reason": "weight != d_G"})
            elif w < d:
                bad.append({"u": u, "v": v, "w": w, "d_G": d, "reason": "weight < d_G"})
            elif w > g.n - 1:
                bad.append({"u": u, "v": v, "w": w, "reason": "no simple path that long"})
    return {"pass": not bad, "violations": bad[:WITNESS_LIMIT], "violation_count": len(bad)}


# --------------------------------------------------------------------------
# structural checks


def _phase_cluster_bounds(s: Schedule) -> list[RealPower]:
    """Closed-form upper bounds on |P_i|."""
    n, k = s.n, s.kappa
    out = []
    for i in s.phases:
        if s.kind == CENTRALIZED or (s.kind == DISTRIBUTED and i <= s.i0 + 1):
            e = 1 - Fraction(2**i - 1, k)
        elif s.kind == DISTRIBUTED:
            e = 1 - Fraction(2 ** (s.i0 + 1) - 1, k) - (i - s.i0 - 1) * s.rho
        else:
            g = s.gamma
            if i <= s.i0 + 1:
                e = 1 - (2**i - 1 - i) / (g * k) - Fraction(i, k) if isinstance(g, Fraction) else 1 - (2**i - 1 - i) / (g * k) - i / k
                if i == s.i0 + 1 and isinstance(e, Fraction):
                    e = min(e, 1 - s.rho)
            else:
                e = 1 - s.rho / 2 - (i - s.i0 - 1) * s.rho
        out.append(RealPower(n, e))
    return out


def _check(results: dict, details: dict, name: str, problems: list[str]) -> None:
    results[name] = "pass" if not problems else "fail"
    if problems:
        details[name] = problems[:10]


def verify_structure(t: BuildTranscript, g: Graph, s: Schedule, h: WeightedEdgeSet) -> tuple[dict, dict]:
    """Returns ``(checklist, details)``; checklist maps name -> pass|fail."""
    n = g.n
    C = t.clusters
    ph = t.phases
    sched = [rec for rec in ph if 0 <= rec.phase <= s.ell]
    res: dict[str, str] = {}
    det: dict[str, list] = {}

    # supercluster size
    probs = []
    for rec in sched:
        i = rec.phase
        deg = s.deg[i]
        if t.kind == DISTRIBUTED:
            D = deg.ceil()
            for cid in rec.hub_formed:
                if len(C[cid].children) < 2 * D + 2:
                    probs.append(f"phase {i}: hub supercluster {cid} has {len(C[cid].children)} < {2 * D + 2} clusters")
            per_tree: dict[int, int] = {}
            for cid in rec.formed:
                per_tree[rec.tree_of[cid]] = per_tree.get(rec.tree_of[cid], 0) + 1
            for root, spanned in rec.trees.items():
                x, sc = len(spanned), per_tree.get(root, 0)
                if sc == 0 or not deg.at_most(Fraction(x - sc, sc)):
                    probs.append(f"phase {i}: tree {root} spans {x} clusters but yields {sc} superclusters")
        else:
            for cid in rec.formed:
                if deg.exceeds(len(C[cid].children) - 1):
                    probs.append(f"phase {i}: supercluster {cid} has {len(C[cid].children)} clusters, needs deg+1")
    _check(res, det, "supercluster_size", probs)

    # disjointness
    probs = []
    for rec in ph:
        for label, ids in (("P", rec.clusters), ("formed", rec.formed)):
            seen: dict[int, int] = {}
            for cid in ids:
                for v in C[cid].members:
                    if v in seen:
                        probs.append(f"phase {rec.phase}: vertex {v} in {label} clusters {seen[v]} and {cid}")
                    seen[v] = cid
        used: dict[int, int] = {}
        for cid in rec.formed:
            for ch in C[cid].children:
                if ch in used:
                    probs.append(f"phase {rec.phase}: cluster {ch} absorbed by {used[ch]} and {cid}")
                used[ch] = cid
    _check(res, det, "disjointness", probs)

    # |P_i| decay
    probs = []
    bounds = _phase_cluster_bounds(s)
    for rec in ph:
        i, p = rec.phase, len(rec.clusters)
        if i > s.ell:
            probs.append(f"phase {i} recorded beyond the schedule's last phase {s.ell}")
            continue
        if not bounds[i].bounds(p):
            probs.append(f"|P_{i}| = {p} > {bounds[i]}")
        if i < len(ph) - 1:
            q = len(ph[i + 1].clusters)
            if q and not s.deg[i].at_most(Fraction(p - q, q)):
                probs.append(f"|P_{i + 1}| = {q} > |P_{i}| / (deg_{i} + 1) with |P_{i}| = {p}")
    if len(ph) != s.ell + 1:
        probs.append(f"{len(ph)} phases recorded, schedule has {s.ell + 1}")
    elif t.kind != CENTRALIZED and not RealPower(n, s.rho).bounds(len(ph[-1].clusters)):
        probs.append(f"|P_ell| = {len(ph[-1].clusters)} > n^rho")
    _check(res, det, "cluster_count_decay", probs)

    # radii
    probs = []
    for rec in ph:
        if rec.phase == 0 or not rec.clusters:
            continue
        cl = [C[c] for c in rec.clusters]
        dist = edge_set_distances(h, [c.center for c in cl])
        R = s.radius[rec.phase]
        for row, c in enumerate(cl):
            m = sorted(c.members)
            worst = dist[row, m].max()
            if worst > R:
                probs.append(f"phase {rec.phase}: cluster {c.id} has radius {worst} > R = {R}")
    _check(res, det, "radii", probs)

    # partition
    probs = []
    retired: list[int] = []
    for rec in sched:
        cover = [v for cid in rec.clusters + retired for v in C[cid].members]
        if len(cover) != n or set(cover) != set(range(n)):
            probs.append(f"phase {rec.phase}: P_i and earlier U do not partition V")
        if not set(rec.unclustered) <= set(rec.clusters):
            probs.append(f"phase {rec.phase}: U_i not contained in P_i")
        retired += rec.unclustered
    cover = [v for cid in retired for v in C[cid].members]
    if len(cover) != n or set(cover) != set(range(n)):
        probs.append("final unclustered collection does not partition V")
    _check(res, det, "partition", probs)

    # laminarity
    probs = []
    for idx, rec in enumerate(ph):
        pset = set(rec.clusters)
        if idx + 1 < len(ph) and ph[idx + 1].clusters != rec.formed:
            probs.append(f"phase {rec.phase}: next phase does not start from the clusters formed here")
        for cid in rec.formed:
            c = C[cid]
            if not set(c.children) <= pset:
                probs.append(f"phase {rec.phase}: supercluster {cid} has children outside P_i")
                continue
            union = frozenset().union(*(C[ch].members for ch in c.children)) if c.children else frozenset()
            if union != c.members:
                probs.append(f"phase {rec.phase}: supercluster {cid} members differ from its children's union")
            if c.center not in {C[ch].center for ch in c.children}:
                probs.append(f"phase {rec.phase}: supercluster {cid} center is not a child center")
        if {C[c].center for c in rec.formed} & {C[c].center for c in rec.unclustered}:
            probs.append(f"phase {rec.phase}: a retired center also leads a supercluster")
    _check(res, det, "laminarity", probs)

    # neighbouring clusters at exact distance
    probs = []
    for rec in sched:
        if not rec.unclustered:
            continue
        centers = np.array(sorted(C[c].center for c in rec.clusters))
        us = sorted(C[c].center for c in rec.unclustered)
        DG = graph_distances(g, us)
        DH = edge_set_distances(h, us)
        delta = s.delta[rec.phase]
        sub_g, sub_h = DG[:, centers], DH[:, centers]
        near = sub_g <= delta
        wrong = near & (sub_h != sub_g)
        for r, c in zip(*np.nonzero(wrong)):
            probs.append(f"phase {rec.phase}: d_H({us[r]}, {centers[c]}) = {sub_h[r, c]} != d_G = {sub_g[r, c]}")
    _check(res, det, "neighbor_exact", probs)

    if t.kind in (DISTRIBUTED, SPANNER):
        probs = []
        for rec in sched:
            if not rec.clusters:
                continue
            centers = np.array(sorted(C[c].center for c in rec.clusters))
            D = graph_distances(g, centers)[:, centers]
            counts = (D <= s.delta[rec.phase]).sum(axis=1) - 1
            deg = s.deg[rec.phase]
            popular = {int(centers[j]) for j in range(len(centers)) if not deg.exceeds(int(counts[j]))}
            if sorted(popular) != rec.popular:
                probs.append(f"phase {rec.phase}: recorded popular set differs from brute force")
            near = D <= s.delta[rec.phase]
            idx = {int(c): j for j, c in enumerate(centers)}
            for cid in rec.unclustered:
                j = idx[C[cid].center]
                if any(int(centers[x]) in popular for x in np.nonzero(near[j])[0]):
                    probs.append(f"phase {rec.phase}: unclustered center {C[cid].center} is or neighbours a popular center")
        _check(res, det, "popular_superclustered", probs)

    if t.kind == DISTRIBUTED:
        probs = []
        for u, v, w in h:
            for x in (u, v):
                if t.known_edges.get(x, {}).get((u, v)) != w:
                    probs.append(f"edge ({u}, {v}, {w}) not held by endpoint {x}")
        _check(res, det, "endpoint_knowledge", probs)

    if t.kind == SPANNER:
        probs = []
        for rec in ph:
            es = rec.supercluster_edges
            if len(es) > n - 1:
                probs.append(f"phase {rec.phase}: {len(es)} superclustering edges > n - 1")
            parent = list(range(n))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for a, b in es:
                if not g.has_edge(a, b):
                    probs.append(f"phase {rec.phase}: superclustering edge ({a}, {b}) not in G")
                ra, rb = find(a), find(b)
                if ra == rb:
                    probs.append(f"phase {rec.phase}: superclustering edges contain a cycle through ({a}, {b})")
                    break
                parent[ra] = rb
        _check(res, det, "spanner_forest", probs)

    if t.kind == CENTRALIZED and t.charges:
        from .centralized import charge_report

        rep = charge_report(t, s, h)
        _check(res, det, "charges", [] if rep["ok"] else [f"charges: {rep['over_budget'][:5]}, sum {rep['total']} vs |H| {rep['edges']}"])

    return res, det


def build_report(
    g: Graph,
    h: WeightedEdgeSet,
    s: Schedule,
    budget: StretchBudget,
    transcript: BuildTranscript | None = None,
    mode: str | None = None,
    seed: int = 0,
    force: bool = False,
) -> dict:
    kind = s.kind
    size = verify_size(len(h), g.n, s.kappa, "big_oh" if kind == SPANNER else "exact")
    sound = verify_soundness(g, h, kind)
    stretch = verify_stretch(g, h, budget, mode, seed, force)
    checklist, details = ({}, {}) if transcript is None else verify_structure(transcript, g, s, h)
    ok = size["pass"] and sound["pass"] and stretch.ok and all(v == "pass" for v in checklist.values())
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "n": g.n,
        "m": g.m,
        "size": size,
        "soundness": sound,
        "stretch": stretch.as_dict(),
        "lemma_checklist": checklist,
        "lemma_details": details,
        "pass": bool(ok),
    }
