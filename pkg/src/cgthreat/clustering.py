"""Clustering result type shared by the density and community algorithms."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import ConsistencyError

NOISE = -1
ALGORITHMS = ("dbscan", "hdbscan", "louvain", "leiden")
COMMUNITY_ALGORITHMS = ("louvain", "leiden")


def canonical_labels(labels: Sequence[int]) -> list[int]:
    """Renumber non-noise labels to 0..C-1 in order of first appearance."""
    mapping: dict[int, int] = {}
    out = []
    for lab in labels:
        if lab == NOISE:
            out.append(NOISE)
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return out


def partition_of(node_ids: Sequence[str], labels: Sequence[int]) -> tuple[frozenset, frozenset]:
    """Label-free view of a clustering: (set of clusters, noise set)."""
    groups: dict[int, set[str]] = {}
    noise = set()
    for node, lab in zip(node_ids, labels):
        if lab == NOISE:
            noise.add(node)
        else:
            groups.setdefault(lab, set()).add(node)
    return frozenset(frozenset(g) for g in groups.values()), frozenset(noise)


@dataclass(frozen=True)
class Clustering:
    node_ids: tuple[str, ...]
    labels: tuple[int, ...]
    algorithm: str
    params: dict[str, Any] = field(default_factory=dict)
    quality: float | None = None
    elapsed: float | None = None  # seconds

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if len(self.labels) != len(self.node_ids):
            raise ConsistencyError("labels length must equal node count")
        if self.algorithm not in ALGORITHMS:
            raise ConsistencyError(f"unknown algorithm {self.algorithm!r}")
        used = {x for x in self.labels if x != NOISE}
        if used != set(range(len(used))):
            raise ConsistencyError("cluster labels must form a contiguous range 0..C-1")
        if any(x < NOISE for x in self.labels):
            raise ConsistencyError("labels below -1 are not allowed")
        if self.algorithm in COMMUNITY_ALGORITHMS and NOISE in self.labels:
            raise ConsistencyError("community algorithms never emit noise")

    @property
    def cluster_count(self) -> int:
        return len({x for x in self.labels if x != NOISE})

    @property
    def noise_count(self) -> int:
        return sum(1 for x in self.labels if x == NOISE)

    def label_of(self) -> dict[str, int]:
        return dict(zip(self.node_ids, self.labels))

    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node, lab in zip(self.node_ids, self.labels):
            if lab != NOISE:
                out.setdefault(lab, []).append(node)
        return out

    def partition(self) -> tuple[frozenset, frozenset]:
        return partition_of(self.node_ids, self.labels)

    def with_timing(self, quality: float | None, elapsed: float | None) -> Clustering:
        return Clustering(self.node_ids, self.labels, self.algorithm, dict(self.params), quality, elapsed)

    def to_dict(self) -> dict[str, Any]:
        order = sorted(range(len(self.node_ids)), key=lambda i: self.node_ids[i])
        return {
            "algorithm": self.algorithm,
            "params": dict(sorted(self.params.items())),
            "labels": [{"node": self.node_ids[i], "cluster": self.labels[i]} for i in order],
            "quality": self.quality,
            "elapsed_ms": None if self.elapsed is None else self.elapsed * 1000.0,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> Clustering:
        rows = doc["labels"]
        elapsed = doc.get("elapsed_ms")
        return cls(
            node_ids=tuple(r["node"] for r in rows),
            labels=tuple(int(r["cluster"]) for r in rows),
            algorithm=doc["algorithm"],
            params=dict(doc.get("params", {})),
            quality=doc.get("quality"),
            elapsed=None if elapsed is None else elapsed / 1000.0,
        )
