"""Analysis reports (JSON, Markdown) and top-K cluster export to DOT."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .clustering import NOISE, Clustering
from .dot import quote_id
from .errors import ParameterError
from .graph import CallGraph
from .heuristics import CWE_MAP, HEURISTIC_TITLES, HEURISTICS, Finding

SCHEMA_VERSION = 1
TOP_FINDINGS = 3

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)


@dataclass(frozen=True)
class GraphStats:
    nodes: int = 0
    edges: int = 0
    total_weight: int = 0
    self_loops: int = 0

    @classmethod
    def of(cls, g: CallGraph) -> GraphStats:
        return cls(g.node_count, g.edge_count, g.total_weight, len(g.self_loops))


@dataclass(frozen=True)
class RunSummary:
    name: str
    algorithm: str
    params: dict[str, Any]
    cluster_count: int
    noise_count: int
    quality_metric: str
    quality: float | None
    elapsed_ms: float | None

    @classmethod
    def of(cls, name: str, c: Clustering) -> RunSummary:
        metric = "modularity" if c.algorithm in ("louvain", "leiden") else "silhouette"
        return cls(
            name, c.algorithm, dict(c.params), c.cluster_count, c.noise_count, metric,
            c.quality, None if c.elapsed is None else c.elapsed * 1000.0,
        )


@dataclass(frozen=True)
class AnalysisReport:
    graph: GraphStats = field(default_factory=GraphStats)
    runs: list[RunSummary] = field(default_factory=list)
    findings: list[Finding] = field(default_factory=list)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def findings_for(self, run: str, heuristic: str) -> list[Finding]:
        return sorted(
            (f for f in self.findings if f.run == run and f.heuristic == heuristic),
            key=lambda f: f.rank,
        )

    @property
    def total_findings(self) -> int:
        return len(self.findings)


def _num(x: Any) -> Any:
    """6-significant-digit float policy; infinities become strings."""
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(f"{x:.6g}")
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _num(x.item())
    return x


def _unnum(x: Any) -> Any:
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if x == "nan":
        return math.nan
    if isinstance(x, dict):
        return {k: _unnum(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_unnum(v) for v in x]
    return x


def report_to_dict(r: AnalysisReport) -> dict[str, Any]:
    return {
        "schema_version": r.schema_version,
        "tool_version": r.tool_version,
        "graph": {
            "nodes": r.graph.nodes,
            "edges": r.graph.edges,
            "total_weight": r.graph.total_weight,
            "self_loops": r.graph.self_loops,
        },
        "runs": [
            {
                "name": run.name,
                "algorithm": run.algorithm,
                "params": run.params,
                "cluster_count": run.cluster_count,
                "noise_count": run.noise_count,
                "quality_metric": run.quality_metric,
                "quality": run.quality,
                "elapsed_ms": run.elapsed_ms,
            }
            for run in r.runs
        ],
        "findings": [
            {
                "run": f.run,
                "heuristic": f.heuristic,
                "rank": f.rank,
                "subject_kind": f.subject_kind,
                "subject": f.subject,
                "score": f.score,
                "cwe_ids": list(f.cwe_ids),
                "evidence": f.evidence,
            }
            for f in r.findings
        ],
        "counts": r.counts,
        "config": r.config,
    }


def render_json(r: AnalysisReport) -> str:
    return json.dumps(_num(report_to_dict(r)), sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_report(text: str) -> AnalysisReport:
    doc = _unnum(json.loads(text))
    g = doc.get("graph", {})
    return AnalysisReport(
        graph=GraphStats(g.get("nodes", 0), g.get("edges", 0), g.get("total_weight", 0), g.get("self_loops", 0)),
        runs=[
            RunSummary(
                run["name"], run["algorithm"], run["params"], run["cluster_count"], run["noise_count"],
                run["quality_metric"], run["quality"], run["elapsed_ms"],
            )
            for run in doc.get("runs", [])
        ],
        findings=[
            Finding(
                f["heuristic"], f["subject_kind"], f["subject"], f["score"], tuple(f["cwe_ids"]),
                f["evidence"], f["rank"], f["run"],
            )
            for f in doc.get("findings", [])
        ],
        counts=doc.get("counts", {}),
        config=doc.get("config", {}),
        tool_version=doc.get("tool_version", __version__),
        schema_version=doc.get("schema_version", SCHEMA_VERSION),
    )


def fmt_num(x: Any) -> str:
    """Same 6-significant-digit rendering the JSON report uses."""
    if x is None:
        return "n/a"
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    v = _num(float(x))
    if isinstance(v, str):
        return v
    return f"{v:.6g}"


def _md_table(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return lines


def _subject(f: Finding) -> str:
    return f"cluster {f.subject}" if f.subject_kind == "cluster" else f"`{f.subject}`"


def _evidence(f: Finding) -> str:
    keep = {k: v for k, v in f.evidence.items() if k not in ("mean", "stddev", "threshold")}
    return ", ".join(f"{k}={fmt_num(v) if not isinstance(v, str) else v}" for k, v in keep.items())


def render_markdown(r: AnalysisReport) -> str:
    out = ["# Call-graph threat analysis", ""]
    out += ["## Graph summary", ""]
    out += _md_table(
        ["Metric", "Value"],
        [["Nodes", str(r.graph.nodes)], ["Edges", str(r.graph.edges)],
         ["Total call weight", str(r.graph.total_weight)], ["Self-loops", str(r.graph.self_loops)]],
    )
    out += ["", "## Algorithm comparison", ""]
    if r.runs:
        rows = []
        for run in r.runs:
            runtime = "n/a" if run.elapsed_ms is None else fmt_num(run.elapsed_ms / 1000.0)
            rows.append([
                run.name, run.algorithm,
                ", ".join(f"{k}={fmt_num(v) if not isinstance(v, str) else v}" for k, v in sorted(run.params.items())),
                str(run.cluster_count), str(run.noise_count), run.quality_metric, fmt_num(run.quality), runtime,
            ])
        out += _md_table(["Run", "Algorithm", "Parameters", "Clusters", "Noise", "Metric", "Quality", "Runtime (s)"], rows)
    else:
        out.append("No clustering runs.")
    out += ["", "## Heuristic counts", ""]
    names = [run.name for run in r.runs]
    rows = []
    for h in HEURISTICS:
        rows.append([HEURISTIC_TITLES[h]] + [str(r.counts.get(n, {}).get(h, 0)) for n in names] + [", ".join(CWE_MAP[h])])
    rows.append(["Total number of clusters"] + [str(run.cluster_count) for run in r.runs] + [""])
    out += _md_table(["Heuristic"] + names + ["Weakness"], rows)
    out += ["", "## Top findings", ""]
    for run in r.runs:
        out += [f"### {run.name}", ""]
        for h in HEURISTICS:
            found = r.findings_for(run.name, h)
            out.append(f"#### {HEURISTIC_TITLES[h]} ({', '.join(CWE_MAP[h])})")
            out.append("")
            if not found:
                out.append("No findings")
            for f in found[:TOP_FINDINGS]:
                out.append(f"{f.rank}. {_subject(f)}: score {fmt_num(f.score)} ({_evidence(f)})")
            if len(found) > TOP_FINDINGS:
                out.append(f"+{len(found) - TOP_FINDINGS} more")
            out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def top_k_clusters(c: Clustering, k: int) -> list[int]:
    """The k largest non-noise clusters, lowest id first among equal sizes."""
    if k < 1:
        raise ParameterError(f"top-k must be a positive integer, got {k}")
    sizes: dict[int, int] = {}
    for lab in c.labels:
        if lab != NOISE:
            sizes[lab] = sizes.get(lab, 0) + 1
    return sorted(sizes, key=lambda cid: (-sizes[cid], cid))[:k]


def export_top_k_dot(g: CallGraph, c: Clustering, k: int = 10) -> str:
    chosen = top_k_clusters(c, k)
    if set(c.node_ids) != set(g.node_ids):
        raise ParameterError("clustering does not match the call graph")
    label = c.label_of()
    keep = set(chosen)
    lines = [f"digraph {quote_id(f'top_{k}_{c.algorithm}')} {{", '  graph [rankdir="LR"];', '  node [shape="box", style="filled"];']
    for cid in chosen:
        color = PALETTE[cid % len(PALETTE)]
        members = [n for n in g.node_ids if label[n] == cid]
        lines.append(f"  subgraph {quote_id(f'cluster_{cid}')} {{")
        lines.append(f"    label={quote_id(f'cluster {cid} ({len(members)} nodes)')};")
        lines.append(f"    color={quote_id(color)};")
        for n in members:
            node = g.node(n)
            lines.append(f"    {quote_id(n)} [label={quote_id(node.label or n)}, fillcolor={quote_id(color)}];")
        lines.append("  }")
    for e in g.edges:
        if label[e.caller] in keep and label[e.callee] in keep:
            lines.append(f"  {quote_id(e.caller)} -> {quote_id(e.callee)} [weight={e.weight}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
