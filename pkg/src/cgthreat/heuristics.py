"""Structural threat heuristics over a clustered call graph.

Five detectors flag clusters or nodes whose shape is associated with a CWE
weakness class: bridging clusters, hotspot clusters, dangling nodes, hub
nodes and weak (poorly encapsulated) clusters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

from .clustering import NOISE, Clustering
from .errors import ConsistencyError, ParameterError
from .graph import CallGraph

log = logging.getLogger(__name__)

HEURISTICS = ("bridging", "hotspot", "dangling", "hub", "weak")

CWE_MAP: dict[str, tuple[str, ...]] = {
    "bridging": ("CWE-668",),
    "hotspot": ("CWE-284",),
    "dangling": ("CWE-94", "CWE-1164"),
    "hub": ("CWE-20",),
    "weak": ("CWE-200",),
}

HEURISTIC_TITLES = {
    "bridging": "Bridging Clusters",
    "hotspot": "Hotspot Clusters",
    "dangling": "Dangling Nodes",
    "hub": "Hub Nodes",
    "weak": "Weak Clusters",
}


@dataclass(frozen=True)
class BridgingConfig:
    max_cluster_size: int = 10
    min_neighbor_clusters: int = 3


@dataclass(frozen=True)
class HotspotConfig:
    min_incoming_zscore: float = 1.5


@dataclass(frozen=True)
class HubConfig:
    min_degree_zscore: float = 3.0
    min_cluster_spread: int = 2


@dataclass(frozen=True)
class WeakConfig:
    min_ratio: float = 1.0


@dataclass(frozen=True)
class HeuristicConfig:
    bridging: BridgingConfig = field(default_factory=BridgingConfig)
    hotspot: HotspotConfig = field(default_factory=HotspotConfig)
    hub: HubConfig = field(default_factory=HubConfig)
    weak: WeakConfig = field(default_factory=WeakConfig)

    KEYS = (
        "bridging.max_cluster_size",
        "bridging.min_neighbor_clusters",
        "hotspot.min_incoming_zscore",
        "hub.min_degree_zscore",
        "hub.min_cluster_spread",
        "weak.min_ratio",
    )

    def __post_init__(self) -> None:
        for key, value in self.flat().items():
            if not value > 0:
                raise ParameterError(f"heuristic threshold {key} must be positive, got {value}")

    def flat(self) -> dict[str, float]:
        out = {}
        for section in ("bridging", "hotspot", "hub", "weak"):
            for k, v in asdict(getattr(self, section)).items():
                out[f"{section}.{k}"] = v
        return out

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: HeuristicConfig | None = None) -> HeuristicConfig:
        """Builds a config from dotted keys (``hub.min_degree_zscore``) or
        nested sections (``{"hub": {"min_degree_zscore": 2}}``); unspecified
        keys keep the values of ``base``."""
        flat: dict[str, Any] = {}
        for k, v in values.items():
            if isinstance(v, Mapping):
                for kk, vv in v.items():
                    flat[f"{k}.{kk}"] = vv
            else:
                flat[k] = v
        unknown = set(flat) - set(cls.KEYS)
        if unknown:
            raise ParameterError(f"unknown heuristic config keys: {', '.join(sorted(unknown))}")
        merged = (base or cls()).flat()
        for k, v in flat.items():
            kind = int if k.endswith(("max_cluster_size", "min_neighbor_clusters", "min_cluster_spread")) else float
            try:
                merged[k] = kind(v)
            except (TypeError, ValueError):
                raise ParameterError(f"heuristic config {k}: {v!r} is not a valid {kind.__name__}") from None
        return cls(
            BridgingConfig(merged["bridging.max_cluster_size"], merged["bridging.min_neighbor_clusters"]),
            HotspotConfig(merged["hotspot.min_incoming_zscore"]),
            HubConfig(merged["hub.min_degree_zscore"], merged["hub.min_cluster_spread"]),
            WeakConfig(merged["weak.min_ratio"]),
        )


@dataclass(frozen=True)
class ClusterProfile:
    cluster_id: int
    node_count: int
    internal_weight: int
    external_weight: int
    incoming_weight: int
    outgoing_weight: int
    neighbor_clusters: int

    @property
    def ratio(self) -> float:
        """External-to-internal weight ratio; +inf when nothing is internal."""
        if self.internal_weight == 0:
            return math.inf if self.external_weight > 0 else 0.0
        return self.external_weight / self.internal_weight


@dataclass(frozen=True)
class Finding:
    heuristic: str
    subject_kind: str  # "cluster" or "node"
    subject: int | str
    score: float
    cwe_ids: tuple[str, ...]
    evidence: dict[str, Any] = field(default_factory=dict)
    rank: int = 0
    run: str = ""

    def sort_key(self) -> tuple:
        return (-self.score, self.subject)


def _ranked(findings: list[Finding]) -> list[Finding]:
    ordered = sorted(findings, key=Finding.sort_key)
    return [
        Finding(f.heuristic, f.subject_kind, f.subject, f.score, f.cwe_ids, f.evidence, i, f.run)
        for i, f in enumerate(ordered, start=1)
    ]


def _labels_for(g: CallGraph, c: Clustering) -> dict[str, int]:
    if set(c.node_ids) != set(g.node_ids) or len(c.node_ids) != g.node_count:
        raise ConsistencyError("clustering and call graph cover different node sets")
    return c.label_of()


def profile_clusters(g: CallGraph, c: Clustering) -> list[ClusterProfile]:
    label = _labels_for(g, c)
    sizes: dict[int, int] = {}
    for lab in c.labels:
        if lab != NOISE:
            sizes[lab] = sizes.get(lab, 0) + 1
    internal = dict.fromkeys(sizes, 0)
    incoming = dict.fromkeys(sizes, 0)
    outgoing = dict.fromkeys(sizes, 0)
    neighbors: dict[int, set[int]] = {k: set() for k in sizes}
    for e in g.edges:
        if e.is_self_loop:
            continue
        a, b = label[e.caller], label[e.callee]
        if a == b:
            if a != NOISE:
                internal[a] += e.weight
            continue
        if a != NOISE:
            outgoing[a] += e.weight
            if b != NOISE:
                neighbors[a].add(b)
        if b != NOISE:
            incoming[b] += e.weight
            if a != NOISE:
                neighbors[b].add(a)
    return [
        ClusterProfile(
            cid, sizes[cid], internal[cid], incoming[cid] + outgoing[cid],
            incoming[cid], outgoing[cid], len(neighbors[cid]),
        )
        for cid in sorted(sizes)
    ]


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def detect_bridging(profiles: list[ClusterProfile], cfg: HeuristicConfig | None = None) -> list[Finding]:
    cfg = cfg or HeuristicConfig()
    out = []
    for p in profiles:
        if p.node_count <= cfg.bridging.max_cluster_size and p.neighbor_clusters >= cfg.bridging.min_neighbor_clusters:
            out.append(Finding(
                "bridging", "cluster", p.cluster_id, float(p.neighbor_clusters), CWE_MAP["bridging"],
                {"node_count": p.node_count, "neighbor_clusters": p.neighbor_clusters,
                 "external_weight": p.external_weight},
            ))
    return _ranked(out)


def detect_hotspots(profiles: list[ClusterProfile], cfg: HeuristicConfig | None = None) -> list[Finding]:
    """Clusters whose external incoming call weight is a z-score outlier."""
    cfg = cfg or HeuristicConfig()
    if len(profiles) < 2:
        log.warning("hotspot detection needs at least two clusters; skipping")
        return []
    mean, std = _mean_std([p.incoming_weight for p in profiles])
    threshold = mean + cfg.hotspot.min_incoming_zscore * std
    out = [
        Finding(
            "hotspot", "cluster", p.cluster_id, float(p.incoming_weight), CWE_MAP["hotspot"],
            {"incoming_weight": p.incoming_weight, "node_count": p.node_count,
             "mean": mean, "stddev": std, "threshold": threshold},
        )
        for p in profiles
        if std > 0 and p.incoming_weight > threshold
    ]
    return _ranked(out)


def _undirected_neighbors(g: CallGraph) -> dict[str, set[str]]:
    nbrs: dict[str, set[str]] = {n: set() for n in g.node_ids}
    for e in g.edges:
        if e.is_self_loop:
            continue
        nbrs[e.caller].add(e.callee)
        nbrs[e.callee].add(e.caller)
    return nbrs


def detect_dangling(g: CallGraph, c: Clustering) -> list[Finding]:
    """Nodes whose only neighbour sits in another (non-noise) cluster."""
    label = _labels_for(g, c)
    out = []
    for node, nbrs in _undirected_neighbors(g).items():
        if len(nbrs) != 1:
            continue
        (other,) = nbrs
        own, theirs = label[node], label[other]
        if theirs == NOISE or theirs == own:
            continue
        out.append(Finding(
            "dangling", "node", node, 1.0, CWE_MAP["dangling"],
            {"cluster": own, "neighbor": other, "neighbor_cluster": theirs},
        ))
    return _ranked(out)


def detect_hubs(g: CallGraph, c: Clustering, cfg: HeuristicConfig | None = None) -> list[Finding]:
    """Nodes with outlying connection counts that touch several clusters."""
    cfg = cfg or HeuristicConfig()
    label = _labels_for(g, c)
    if g.node_count < 2:
        return []
    in_deg = dict.fromkeys(g.node_ids, 0)
    out_deg = dict.fromkeys(g.node_ids, 0)
    for e in g.edges:
        if e.is_self_loop:
            continue
        out_deg[e.caller] += 1
        in_deg[e.callee] += 1
    total = {n: in_deg[n] + out_deg[n] for n in g.node_ids}
    mean, std = _mean_std(list(total.values()))
    if std == 0:
        return []
    threshold = mean + cfg.hub.min_degree_zscore * std
    nbrs = _undirected_neighbors(g)
    out = []
    for node in g.node_ids:
        if total[node] <= threshold:
            continue
        clusters = {label[u] for u in nbrs[node]} - {NOISE}
        if len(clusters) < cfg.hub.min_cluster_spread:
            continue
        external = sum(1 for u in nbrs[node] if label[u] != label[node] or label[u] == NOISE)
        out.append(Finding(
            "hub", "node", node, float(total[node]), CWE_MAP["hub"],
            {"total_connections": total[node], "in_degree": in_deg[node], "out_degree": out_deg[node],
             "cluster_spread": len(clusters), "external_neighbors": external, "cluster": label[node],
             "mean": mean, "stddev": std, "threshold": threshold},
        ))
    return _ranked(out)


def detect_weak_clusters(profiles: list[ClusterProfile], cfg: HeuristicConfig | None = None) -> list[Finding]:
    cfg = cfg or HeuristicConfig()
    out = [
        Finding(
            "weak", "cluster", p.cluster_id, p.ratio, CWE_MAP["weak"],
            {"internal_weight": p.internal_weight, "external_weight": p.external_weight,
             "node_count": p.node_count, "ratio": p.ratio},
        )
        for p in profiles
        if p.external_weight > 0 and p.ratio >= cfg.weak.min_ratio
    ]
    return _ranked(out)


def run_all_heuristics(
    g: CallGraph, c: Clustering, cfg: HeuristicConfig | None = None, run: str = ""
) -> tuple[list[Finding], dict[str, int]]:
    """Runs all five detectors; returns findings (ranked within each
    heuristic, tagged with ``run``) and per-heuristic counts."""
    cfg = cfg or HeuristicConfig()
    profiles = profile_clusters(g, c)
    groups = {
        "bridging": detect_bridging(profiles, cfg),
        "hotspot": detect_hotspots(profiles, cfg),
        "dangling": detect_dangling(g, c),
        "hub": detect_hubs(g, c, cfg),
        "weak": detect_weak_clusters(profiles, cfg),
    }
    findings = [
        Finding(f.heuristic, f.subject_kind, f.subject, f.score, f.cwe_ids, f.evidence, f.rank, run)
        for name in HEURISTICS
        for f in groups[name]
    ]
    counts = {name: len(groups[name]) for name in HEURISTICS}
    return findings, counts
