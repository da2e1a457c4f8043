"""Near-additive emulators and spanners: centralized and simulated CONGEST builders."""

from .centralized import build_emulator_centralized, charge_report
from .distributed import build_emulator_distributed
from .graph import DistanceMap, Graph, WeightedEdgeSet, bfs_distances, dijkstra_distances, generate_graph, load_graph
from .params import Config, Schedule, centralized_schedule, distributed_schedule, spanner_schedule, stretch_budget
from .spanner import build_spanner_distributed
from .verify import verify_size, verify_soundness, verify_stretch, verify_structure

__all__ = [
    "Config",
    "DistanceMap",
    "Graph",
    "Schedule",
    "WeightedEdgeSet",
    "bfs_distances",
    "build_emulator_centralized",
    "build_emulator_distributed",
    "build_spanner_distributed",
    "centralized_schedule",
    "charge_report",
    "dijkstra_distances",
    "distributed_schedule",
    "generate_graph",
    "load_graph",
    "spanner_schedule",
    "stretch_budget",
    "verify_size",
    "verify_soundness",
    "verify_stretch",
    "verify_structure",
]
