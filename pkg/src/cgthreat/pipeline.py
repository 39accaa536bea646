"""End-to-end analysis: ingest, cluster, score, run heuristics, assemble the
report."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .clustering import Clustering
from .community import leiden, louvain
from .density import dbscan, hdbscan, silhouette
from .dot import parse_dot
from .errors import ParameterError, UndefinedScoreError
from .graph import DEFAULT_NODE_CAP, CallGraph, hop_distance_model, parse_edge_list, project_undirected
from .heuristics import HeuristicConfig, run_all_heuristics
from .report import AnalysisReport, GraphStats, RunSummary, export_top_k_dot, render_json, render_markdown

log = logging.getLogger(__name__)

ALGORITHM_ORDER = ("dbscan", "hdbscan", "louvain", "leiden")
OUTPUT_FORMATS = ("json", "md", "dot")
INPUT_FORMATS = ("dot", "edgelist")


def _split(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        value = value.split(",")
    return tuple(v.strip().lower() for v in value if v and v.strip())


@dataclass(frozen=True)
class RunConfig:
    input: Path | None = None
    format_in: str | None = None
    algorithms: tuple[str, ...] = ("hdbscan", "leiden")
    eps: float = 1.0
    min_pts: int = 5
    min_cluster_size: int = 8
    k: int | None = None
    resolution: float = 1.0
    seed: int = 42
    heuristics: HeuristicConfig = field(default_factory=HeuristicConfig)
    out_dir: Path = Path(".")
    formats: tuple[str, ...] = ("json",)
    top_k: int = 10
    node_cap: int = DEFAULT_NODE_CAP
    timing: bool = True

    RUN_KEYS = ("algorithms", "eps", "min_pts", "min_cluster_size", "k", "resolution", "seed",
                "format", "top_k", "node_cap", "format_in")

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithms", _split(self.algorithms))
        object.__setattr__(self, "formats", _split(self.formats))
        self.validate()

    def validate(self) -> None:
        if not self.algorithms:
            raise ParameterError("at least one algorithm is required")
        bad = [a for a in self.algorithms if a not in ALGORITHM_ORDER]
        if bad:
            raise ParameterError(f"unknown algorithm(s): {', '.join(bad)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ParameterError("each algorithm may be requested once")
        if not self.formats:
            raise ParameterError("at least one output format is required")
        bad = [f for f in self.formats if f not in OUTPUT_FORMATS]
        if bad:
            raise ParameterError(f"unknown output format(s): {', '.join(bad)}")
        if self.format_in is not None and self.format_in not in INPUT_FORMATS:
            raise ParameterError(f"unknown input format {self.format_in!r}")
        if not self.eps > 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")
        if self.min_pts < 1:
            raise ParameterError(f"min-pts must be >= 1, got {self.min_pts}")
        if self.min_cluster_size < 2:
            raise ParameterError(f"min-cluster-size must be >= 2, got {self.min_cluster_size}")
        if self.k is not None and self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if not self.resolution > 0:
            raise ParameterError(f"resolution must be > 0, got {self.resolution}")
        if self.top_k < 1:
            raise ParameterError(f"top-k must be >= 1, got {self.top_k}")
        if self.node_cap < 1:
            raise ParameterError(f"node-cap must be >= 1, got {self.node_cap}")

    def with_overrides(self, values: Mapping[str, Any]) -> RunConfig:
        """Returns a copy with run keys and heuristic keys from ``values``."""
        run: dict[str, Any] = {}
        heur: dict[str, Any] = {}
        for key, value in values.items():
            if value is None:
                continue
            if key in HeuristicConfig.KEYS or key in ("bridging", "hotspot", "hub", "weak"):
                heur[key] = value
            elif key in self.RUN_KEYS:
                run[key] = value
            else:
                raise ParameterError(f"unknown configuration key {key!r}")
        kwargs = self.snapshot_kwargs()
        casts = {"eps": float, "min_pts": int, "min_cluster_size": int, "k": int,
                 "resolution": float, "seed": int, "top_k": int, "node_cap": int}
        for key, value in run.items():
            target = "formats" if key == "format" else key
            try:
                kwargs[target] = casts[key](value) if key in casts else value
            except (TypeError, ValueError):
                raise ParameterError(f"{key}: {value!r} is not a valid value") from None
        if heur:
            kwargs["heuristics"] = HeuristicConfig.from_mapping(heur, self.heuristics)
        return RunConfig(**kwargs)

    def snapshot_kwargs(self) -> dict[str, Any]:
        return {
            "input": self.input, "format_in": self.format_in, "algorithms": self.algorithms,
            "eps": self.eps, "min_pts": self.min_pts, "min_cluster_size": self.min_cluster_size,
            "k": self.k, "resolution": self.resolution, "seed": self.seed, "heuristics": self.heuristics,
            "out_dir": self.out_dir, "formats": self.formats, "top_k": self.top_k,
            "node_cap": self.node_cap, "timing": self.timing,
        }

    def snapshot(self) -> dict[str, Any]:
        """Configuration echoed into reports (paths excluded)."""
        return {
            "algorithms": list(self.algorithms),
            "eps": self.eps,
            "min_pts": self.min_pts,
            "min_cluster_size": self.min_cluster_size,
            "k": self.k if self.k is not None else self.min_cluster_size,
            "resolution": self.resolution,
            "seed": self.seed,
            "top_k": self.top_k,
            "node_cap": self.node_cap,
            "heuristics": self.heuristics.flat(),
        }


def sniff_format(path: Path, text: str) -> str:
    if path.suffix.lower() in (".dot", ".gv"):
        return "dot"
    head = text.lstrip()[:64].lower()
    if head.startswith(("digraph", "strict", "graph")):
        return "dot"
    return "edgelist"


def load_graph(path: Path, format_in: str | None = None) -> CallGraph:
    text = Path(path).read_text(encoding="utf-8")
    fmt = format_in or sniff_format(Path(path), text)
    return parse_dot(text) if fmt == "dot" else parse_edge_list(text)


def cluster(g: CallGraph, algorithm: str, cfg: RunConfig, _cache: dict | None = None) -> Clustering:
    """Runs one algorithm and attaches its quality score."""
    cache = _cache if _cache is not None else {}
    if algorithm in ("dbscan", "hdbscan"):
        if "dm" not in cache:
            cache["dm"] = hop_distance_model(g, cfg.node_cap)
        dm = cache["dm"]
        if algorithm == "dbscan":
            c = dbscan(dm, cfg.eps, cfg.min_pts)
        else:
            c = hdbscan(dm, cfg.min_cluster_size, cfg.k)
        try:
            quality = silhouette(dm, c)
        except UndefinedScoreError:
            log.info("%s produced fewer than two clusters; silhouette undefined", algorithm)
            quality = None
        return c.with_timing(quality, c.elapsed)
    if "view" not in cache:
        cache["view"] = project_undirected(g)
    view = cache["view"]
    run = louvain if algorithm == "louvain" else leiden
    return run(view, cfg.resolution, cfg.seed)


def analyze(g: CallGraph, cfg: RunConfig) -> tuple[AnalysisReport, dict[str, Clustering]]:
    cache: dict = {}
    runs: list[RunSummary] = []
    findings = []
    counts: dict[str, dict[str, int]] = {}
    clusterings: dict[str, Clustering] = {}
    for algorithm in sorted(cfg.algorithms, key=ALGORITHM_ORDER.index):
        c = cluster(g, algorithm, cfg, cache)
        if not cfg.timing:
            c = c.with_timing(c.quality, None)
        clusterings[algorithm] = c
        runs.append(RunSummary.of(algorithm, c))
        found, count = run_all_heuristics(g, c, cfg.heuristics, run=algorithm)
        findings.extend(found)
        counts[algorithm] = count
    report = AnalysisReport(
        graph=GraphStats.of(g), runs=runs, findings=findings, counts=counts, config=cfg.snapshot(),
    )
    return report, clusterings


def write_outputs(report: AnalysisReport, g: CallGraph, clusterings: dict[str, Clustering], cfg: RunConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in cfg.formats:
        path = out_dir / "report.json"
        path.write_text(render_json(report), encoding="utf-8")
        written.append(path)
    if "md" in cfg.formats:
        path = out_dir / "report.md"
        path.write_text(render_markdown(report), encoding="utf-8")
        written.append(path)
    if "dot" in cfg.formats:
        for name, c in clusterings.items():
            path = out_dir / f"top{cfg.top_k}_{name}.dot"
            path.write_text(export_top_k_dot(g, c, cfg.top_k), encoding="utf-8")
            written.append(path)
    return written


def load_config_file(path: Path) -> dict[str, Any]:
    """Reads ``key = value`` lines (optional ``[section]`` headers become
    dotted prefixes, ``#``/``;`` start comments) or a JSON object."""
    text = Path(path).read_text(encoding="utf-8")
    if Path(path).suffix.lower() == ".json" or text.lstrip().startswith("{"):
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ParameterError(f"{path}: configuration must be a JSON object")
        return doc
    out: dict[str, Any] = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[f"{section}.{key}" if section else key] = value
    return out
