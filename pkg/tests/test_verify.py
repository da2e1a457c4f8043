from __future__ import annotations

import copy
import math
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearadditive.centralized import build_emulator_centralized
from nearadditive.distributed import build_emulator_distributed
from nearadditive.graph import EMULATOR, SPANNER, Graph, WeightedEdgeSet, dijkstra_distances, bfs_distances, generate_graph
from nearadditive.params import Config, RealPower, StretchBudget, centralized_schedule, distributed_schedule, spanner_schedule, stretch_budget
from nearadditive.spanner import build_spanner_distributed
from nearadditive.transcript import INTERCONNECT, SUPERCLUSTER, BuildTranscript, PhaseRecord
from nearadditive.verify import (
    SizeGuardError,
    build_report,
    parse_mode,
    ultra_sparse_kappa,
    verify_size,
    verify_soundness,
    verify_stretch,
    verify_structure,
)
from test_graph import graphs


def unit(g):
    h = WeightedEdgeSet(g.n, EMULATOR)
    for u, v in g.edges():
        h.add(u, v, 1)
    return h


def failing(checks):
    return sorted(k for k, v in checks.items() if v == "fail")


ZERO = StretchBudget(Fraction(1), Fraction(0), (Fraction(1),), (Fraction(0),))


class TestStretch:
    def test_identity(self):
        g = generate_graph("grid", {"side": 5})
        r = verify_stretch(g, unit(g), ZERO, "exhaustive")
        assert r.ok and r.max_ratio == 1.0 and r.pairs == 25 * 24 // 2

    def test_empty_h(self):
        g = generate_graph("cycle", {"n": 6})
        r = verify_stretch(g, WeightedEdgeSet(6, EMULATOR), ZERO, "exhaustive")
        assert r.violation_count == 15 and r.max_ratio == math.inf
        assert r.violations[0]["path_H"] is None

    def test_shortcut_is_reported(self):
        g = generate_graph("path", {"n": 4})
        h = unit(g)
        h.add(0, 3, 1)
        r = verify_stretch(g, h, ZERO, "exhaustive")
        w = [x for x in r.violations if x["kind"] == "shorter"]
        assert w and (w[0]["u"], w[0]["v"]) == (0, 3) and w[0]["path_G"] == [0, 1, 2, 3]

    def test_exact_boundary(self):
        g = generate_graph("path", {"n": 2})
        h = WeightedEdgeSet(2, EMULATOR)
        h.add(0, 1, 2)
        b = StretchBudget(Fraction(1), Fraction(1), (), ())
        assert verify_stretch(g, h, b, "exhaustive").ok
        b = StretchBudget(Fraction(1), Fraction(999999999999, 10**12), (), ())
        assert not verify_stretch(g, h, b, "exhaustive").ok

    def test_sampled(self):
        g = generate_graph("cycle", {"n": 50})
        r = verify_stretch(g, unit(g), ZERO, "sampled:5", seed=3)
        assert r.mode == "sampled:5" and r.pairs == 5 * 49

    def test_modes(self):
        assert parse_mode(None, 10) == ("exhaustive", None)
        assert parse_mode(None, 2000) == ("sampled", 64)
        assert parse_mode("sampled:7", 10) == ("sampled", 7)
        with pytest.raises(ValueError):
            parse_mode("bogus", 10)

    def test_guard(self):
        g = Graph(5000, [])
        with pytest.raises(SizeGuardError):
            verify_stretch(g, WeightedEdgeSet(5000, EMULATOR), ZERO, "exhaustive")

    def test_sampled_large(self):
        g = generate_graph("erdos_renyi", {"n": 2000, "p": 0.003}, 1)
        r = verify_stretch(g, unit(g), ZERO, None)
        assert r.ok and r.mode == "sampled:64"

    @settings(max_examples=60, deadline=None)
    @given(graphs(max_n=14), st.data())
    def test_against_fraction_oracle(self, g, data):
        h = WeightedEdgeSet(g.n, EMULATOR)
        for u in range(g.n):
            for v in range(u + 1, g.n):
                if data.draw(st.booleans()):
                    h.add(u, v, data.draw(st.integers(1, 6)))
        alpha = Fraction(data.draw(st.integers(3, 12)), 3)
        beta = Fraction(data.draw(st.integers(0, 9)), 2)
        b = StretchBudget(alpha, beta, (), ())
        expected = 0
        for u in range(g.n):
            dg = bfs_distances(g, u).dist
            dh = dijkstra_distances(h, g.n, u).dist
            for v in range(u + 1, g.n):
                if dg[v] is None:
                    continue
                if dh[v] is None or dh[v] < dg[v] or dh[v] > alpha * dg[v] + beta:
                    expected += 1
        assert verify_stretch(g, h, b, "exhaustive").violation_count == expected


class TestSize:
    def test_star_counts(self):
        assert verify_size(8, 9, 2)["pass"]
        assert verify_size(27, 9, 2)["pass"]
        assert not verify_size(28, 9, 2)["pass"]

    def test_big_oh_reports_constant(self):
        r = verify_size(100, 9, 2, "big_oh")
        assert r["pass"] and r["constant"] == pytest.approx(100 / 27)

    def test_ultra_sparse(self):
        n = 4096
        k = ultra_sparse_kappa(n)
        assert k == math.ceil(12 * math.log2(12))
        lim = n * 2 ** (1 / math.log2(12))
        assert verify_size(math.floor(lim), n, k, "ultra_sparse")["pass"]
        assert not verify_size(math.floor(lim) + 1, n, k, "ultra_sparse")["pass"]


class TestSoundness:
    def test_short_weight(self):
        g = generate_graph("path", {"n": 4})
        h = unit(g)
        h.add(0, 3, 2)
        assert not verify_soundness(g, h, "distributed")["pass"]

    def test_centralized_needs_exact(self):
        g = generate_graph("path", {"n": 6})
        h = unit(g)
        h.add(0, 3, 4)
        assert verify_soundness(g, h, "distributed")["pass"]
        assert not verify_soundness(g, h, "centralized")["pass"]

    def test_spanner_non_edge(self):
        g = generate_graph("path", {"n": 4})
        h = WeightedEdgeSet(4, SPANNER)
        h.add(0, 2)
        assert not verify_soundness(g, h, SPANNER)["pass"]

    def test_disconnected(self):
        h = WeightedEdgeSet(2, EMULATOR)
        h.add(0, 1, 1)
        assert verify_soundness(Graph(2, []), h, "distributed")["violations"][0]["reason"].startswith("endpoints")


# --------------------------------------------------------------------------
# structural checks and fault injection


def test_clean_star_and_cycle():
    for g in (generate_graph("star", {"leaves": 8}), generate_graph("cycle", {"n": 5})):
        s = distributed_schedule(Config.make(g.n, Fraction(1, 2), 3, Fraction(9, 20)))
        h, t, _ = build_emulator_distributed(g, s)
        assert build_report(g, h, s, stretch_budget(s), t)["pass"]


def test_supercluster_of_size_deg():
    # path 0-1-2-3, kappa 2: deg_0 = 2, so a supercluster needs 3 clusters
    g = generate_graph("path", {"n": 4})
    s = centralized_schedule(Config.make(4, Fraction(1, 2), 2))
    t = BuildTranscript("centralized", 4, charges=[0, 1, 1, 1])
    singles = [t.new_cluster(v, (v,), 0) for v in range(4)]
    big = t.new_cluster(0, (0, 1), 1, (singles[0].id, singles[1].id))
    t.phases.append(PhaseRecord(0, clusters=[c.id for c in singles], unclustered=[singles[2].id, singles[3].id], formed=[big.id]))
    t.phases.append(PhaseRecord(1, clusters=[big.id], unclustered=[big.id]))
    t.event(SUPERCLUSTER, 0, u=0, v=1, w=1, charged=1)
    h = unit(g)
    checks, details = verify_structure(t, g, s, h)
    assert failing(checks) == ["supercluster_size"], details


# Each corruption takes a clean (g, s, h, t) run and returns arguments for
# verify_structure on which the named check, and only it, must fail.


def _tree_too_small(g, s, h, t):
    t = copy.deepcopy(t)
    rec = t.phases[0]
    root = next(r for r, cs in rec.trees.items() if len(cs) > 1)
    rec.trees[root] = [root]
    return t, g, s, h


def _double_absorption(g, s, h, t):
    t = copy.deepcopy(t)
    rec = t.phases[0]
    a, b = rec.formed[0], rec.formed[1]
    stolen = next(ch for ch in t.clusters[a].children if t.clusters[ch].center != t.clusters[a].center)
    cb = t.clusters[b]
    t.clusters[b] = replace(cb, children=cb.children + (stolen,), members=cb.members | t.clusters[stolen].members)
    return t, g, s, h


def _extra_phase(g, s, h, t):
    t = copy.deepcopy(t)
    t.phases.append(PhaseRecord(len(t.phases)))
    return t, g, s, h


def _radius_too_small(g, s, h, t):
    s = copy.deepcopy(s)
    s.radius[1] = 0
    return t, g, s, h


def _lost_cluster(g, s, h, t):
    t = copy.deepcopy(t)
    next(r for r in reversed(t.phases) if r.unclustered).unclustered.pop()
    return t, g, s, h


def _dropped_child(g, s, h, t):
    t = copy.deepcopy(t)
    rec = t.phases[0]
    cid = next(c for c in rec.formed if c not in rec.hub_formed and len(t.clusters[c].children) > 1)
    c = t.clusters[cid]
    keep = tuple(ch for ch in c.children if t.clusters[ch].center == c.center)
    t.clusters[cid] = replace(c, children=keep + tuple(ch for ch in c.children if ch not in keep)[1:])
    return t, g, s, h


def _stretched_interconnection(g, s, h, t):
    t = copy.deepcopy(t)
    ev = next(e for e in t.events if e["event"] == INTERCONNECT)
    key = (min(ev["u"], ev["v"]), max(ev["u"], ev["v"]))
    bad = WeightedEdgeSet(g.n, EMULATOR)
    for u, v, w in h:
        bad.add(u, v, w + 5 if (u, v) == key else w)
    for x in key:
        t.known_edges[x][key] += 5
    return t, g, s, bad


def _popular_misrecorded(g, s, h, t):
    t = copy.deepcopy(t)
    t.phases[0].popular = t.phases[0].popular[1:]
    return t, g, s, h


def _forgotten_edge(g, s, h, t):
    t = copy.deepcopy(t)
    u, v, _ = next(iter(h))
    del t.known_edges[v][(u, v)]
    return t, g, s, h


def _forest_cycle(g, s, h, t):
    t = copy.deepcopy(t)
    rec = next(r for r in t.phases if r.supercluster_edges)
    rec.supercluster_edges.append(rec.supercluster_edges[0])
    return t, g, s, h


def _overcharged(g, s, h, t):
    t = copy.deepcopy(t)
    t.charges[0] += 1
    return t, g, s, h


# check -> (which clean run to corrupt, corruption, only this check fails)
FAULTS = {
    "supercluster_size": ("distributed", _tree_too_small, True),
    "disjointness": ("distributed", _double_absorption, False),
    "cluster_count_decay": ("distributed", _extra_phase, True),
    "radii": ("distributed", _radius_too_small, True),
    "partition": ("distributed", _lost_cluster, True),
    "laminarity": ("distributed", _dropped_child, True),
    "neighbor_exact": ("distributed", _stretched_interconnection, False),
    "popular_superclustered": ("distributed", _popular_misrecorded, True),
    "endpoint_knowledge": ("distributed", _forgotten_edge, True),
    "spanner_forest": ("spanner", _forest_cycle, True),
    "charges": ("centralized", _overcharged, True),
}


def clean_runs():
    g = generate_graph("grid", {"side": 16})
    s = distributed_schedule(Config.make(g.n, Fraction(1, 2), 8, Fraction(3, 10)))
    h, t, _ = build_emulator_distributed(g, s)
    runs = {"distributed": (g, s, h, t)}
    g = generate_graph("erdos_renyi", {"n": 120, "p": 0.05}, 2)
    s = centralized_schedule(Config.make(g.n, Fraction(1, 2), 3))
    h, t = build_emulator_centralized(g, s)
    runs["centralized"] = (g, s, h, t)
    s = spanner_schedule(Config.make(g.n, Fraction(1, 2), 3, Fraction(9, 20)), check_feasibility=False)
    h, t, _, _ = build_spanner_distributed(g, s)
    runs["spanner"] = (g, s, h, t)
    return runs


@pytest.fixture(scope="module")
def runs():
    return clean_runs()


def test_clean_runs_pass(runs):
    for kind, (g, s, h, t) in runs.items():
        checks, details = verify_structure(t, g, s, h)
        assert failing(checks) == [], details
    assert "endpoint_knowledge" in verify_structure(*_swap(runs["distributed"]))[0]
    assert "spanner_forest" in verify_structure(*_swap(runs["spanner"]))[0]
    assert "charges" in verify_structure(*_swap(runs["centralized"]))[0]


def _swap(run):
    g, s, h, t = run
    return t, g, s, h


@pytest.mark.parametrize("check", sorted(FAULTS))
def test_fault_injection(runs, check):
    kind, corrupt, alone = FAULTS[check]
    checks, details = verify_structure(*corrupt(*runs[kind]))
    bad = failing(checks)
    assert check in bad, details
    if alone:
        assert bad == [check], details
