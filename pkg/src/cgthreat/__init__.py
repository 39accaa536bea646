"""Clustering-based threat heuristics for software call graphs."""

__version__ = "0.1.0"

from .clustering import NOISE, Clustering  # noqa: E402
from .community import Partition, check_connectivity, leiden, louvain, modularity  # noqa: E402
from .density import core_distances, dbscan, hdbscan, mutual_reachability, silhouette  # noqa: E402
from .dot import parse_dot  # noqa: E402
from .graph import (  # noqa: E402
    CallGraph,
    DistanceModel,
    UndirectedView,
    degree_stats,
    hop_distance_model,
    parse_edge_list,
    project_undirected,
    serialize_edge_list,
)
from .heuristics import Finding, HeuristicConfig, profile_clusters, run_all_heuristics  # noqa: E402
from .report import AnalysisReport, export_top_k_dot, parse_report, render_json, render_markdown  # noqa: E402

__all__ = [
    "NOISE",
    "AnalysisReport",
    "CallGraph",
    "Clustering",
    "DistanceModel",
    "Finding",
    "HeuristicConfig",
    "Partition",
    "UndirectedView",
    "check_connectivity",
    "core_distances",
    "dbscan",
    "degree_stats",
    "export_top_k_dot",
    "hdbscan",
    "hop_distance_model",
    "leiden",
    "louvain",
    "modularity",
    "mutual_reachability",
    "parse_dot",
    "parse_edge_list",
    "parse_report",
    "profile_clusters",
    "project_undirected",
    "render_json",
    "render_markdown",
    "run_all_heuristics",
    "serialize_edge_list",
    "silhouette",
]
