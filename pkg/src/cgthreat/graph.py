"""Call-graph data model, edge-list ingestion, structural statistics and
graph-derived distance models."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import CapacityError, ConsistencyError, ParseError

DEFAULT_NODE_CAP = 5000


def derive_package(node_id: str) -> str:
    """Best-effort Go package of a go-callvis function id.

    ``github.com/x/y.Func`` -> ``github.com/x/y``; ``(*net/http.Client).Do``
    -> ``net/http``; ids without a package qualifier give ``""``.
    """
    s = node_id.strip()
    if s.startswith("("):
        close = s.find(")")
        if close < 0:
            return ""
        s = s[1:close].lstrip("*")
    slash = s.rfind("/")
    dot = s.find(".", slash + 1)
    if dot <= 0:
        return ""
    return s[:dot]


@dataclass(frozen=True)
class NodeRecord:
    id: str
    package: str = ""
    label: str = ""


@dataclass(frozen=True)
class EdgeRecord:
    caller: str
    callee: str
    weight: int = 1

    @property
    def is_self_loop(self) -> bool:
        return self.caller == self.callee


@dataclass(frozen=True)
class CallGraph:
    """Directed call graph with parallel calls folded into integer weights.

    Build instances through :class:`GraphBuilder` (or the parsers), which
    enforce the invariants; the constructor only validates them.
    """

    nodes: tuple[NodeRecord, ...] = ()
    edges: tuple[EdgeRecord, ...] = ()
    directed: bool = True
    _index: dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[str, int] = {}
        for i, node in enumerate(self.nodes):
            if not node.id:
                raise ConsistencyError("node identifiers must be non-empty")
            if node.id in index:
                raise ConsistencyError(f"duplicate node id {node.id!r}")
            index[node.id] = i
        seen = set()
        for e in self.edges:
            if e.caller not in index or e.callee not in index:
                raise ConsistencyError(f"edge {e.caller!r}->{e.callee!r} references unknown node")
            if (e.caller, e.callee) in seen:
                raise ConsistencyError(f"duplicate edge {e.caller!r}->{e.callee!r}")
            if e.weight < 1:
                raise ConsistencyError(f"edge {e.caller!r}->{e.callee!r} has weight {e.weight} < 1")
            seen.add((e.caller, e.callee))
        object.__setattr__(self, "_index", index)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges)

    @property
    def self_loops(self) -> tuple[EdgeRecord, ...]:
        return tuple(e for e in self.edges if e.is_self_loop)

    def index_of(self, node_id: str) -> int:
        return self._index[node_id]

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._index

    def node(self, node_id: str) -> NodeRecord:
        return self.nodes[self._index[node_id]]

    def subgraph(self, keep: Iterable[str]) -> CallGraph:
        keep = set(keep)
        return CallGraph(
            nodes=tuple(n for n in self.nodes if n.id in keep),
            edges=tuple(e for e in self.edges if e.caller in keep and e.callee in keep),
        )

    def same_structure(self, other: CallGraph) -> bool:
        """Equality of node ids and weighted edges, ignoring order and labels."""
        return set(self.node_ids) == set(other.node_ids) and set(self.edges) == set(other.edges)


class GraphBuilder:
    """Accumulates nodes and calls; duplicate calls fold into edge weight."""

    def __init__(self) -> None:
        self._nodes: dict[str, NodeRecord] = {}
        self._weights: dict[tuple[str, str], int] = {}

    def add_node(self, node_id: str, label: str | None = None) -> None:
        existing = self._nodes.get(node_id)
        if existing is None:
            self._nodes[node_id] = NodeRecord(node_id, derive_package(node_id), label or node_id)
        elif label:
            self._nodes[node_id] = NodeRecord(node_id, existing.package, label)

    def add_edge(self, caller: str, callee: str, weight: int = 1) -> None:
        if weight < 1:
            raise ValueError(f"edge weight must be >= 1, got {weight}")
        self.add_node(caller)
        self.add_node(callee)
        key = (caller, callee)
        self._weights[key] = self._weights.get(key, 0) + weight

    def build(self) -> CallGraph:
        return CallGraph(
            nodes=tuple(self._nodes.values()),
            edges=tuple(EdgeRecord(a, b, w) for (a, b), w in self._weights.items()),
        )


def graph_from_edges(edges: Iterable[tuple], nodes: Iterable[str] = ()) -> CallGraph:
    """Convenience constructor from ``(caller, callee[, weight])`` tuples."""
    b = GraphBuilder()
    for n in nodes:
        b.add_node(n)
    for e in edges:
        b.add_edge(e[0], e[1], int(e[2]) if len(e) > 2 else 1)
    return b.build()


_INT_RE = re.compile(r"[+-]?\d+")


def parse_edge_list(text: str) -> CallGraph:
    b = GraphBuilder()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 'caller callee [weight]', got {len(fields)} fields", lineno)
        weight = 1
        if len(fields) == 3:
            if not _INT_RE.fullmatch(fields[2]):
                raise ParseError(f"weight {fields[2]!r} is not an integer", lineno)
            weight = int(fields[2])
            if weight < 1:
                raise ParseError(f"weight must be >= 1, got {weight}", lineno)
        b.add_edge(fields[0], fields[1], weight)
    return b.build()


def serialize_edge_list(g: CallGraph) -> str:
    """Canonical edge-list text: edges sorted by (caller, callee)."""
    lines = []
    for e in sorted(g.edges, key=lambda e: (e.caller, e.callee)):
        for ident in (e.caller, e.callee):
            if not ident or any(ch.isspace() for ch in ident):
                raise ValueError(f"node id {ident!r} cannot be written to the edge-list format")
        lines.append(f"{e.caller} {e.callee} {e.weight}")
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class UndirectedView:
    """Symmetric weighted adjacency over the graph's nodes, self-loops dropped.

    ``adjacency[i]`` maps neighbor index -> summed weight of both call
    directions.
    """

    node_ids: tuple[str, ...]
    adjacency: tuple[dict[int, float], ...]

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def weight(self, u: str, v: str) -> float:
        i, j = self.node_ids.index(u), self.node_ids.index(v)
        return self.adjacency[i].get(j, 0.0)

    def degrees(self) -> list[float]:
        return [sum(a.values()) for a in self.adjacency]

    @property
    def total_weight(self) -> float:
        """m, the sum of undirected edge weights."""
        return sum(self.degrees()) / 2.0

    def edges(self) -> list[tuple[int, int, float]]:
        return [(i, j, w) for i, a in enumerate(self.adjacency) for j, w in a.items() if i < j]

    def to_csr(self) -> csr_matrix:
        rows, cols, vals = [], [], []
        for i, a in enumerate(self.adjacency):
            for j, w in a.items():
                rows.append(i)
                cols.append(j)
                vals.append(w)
        return csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def component_count(self) -> int:
        if self.n == 0:
            return 0
        count, _ = connected_components(self.to_csr(), directed=False)
        return int(count)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]], node_ids: Sequence[str] | None = None) -> UndirectedView:
        adj: list[dict[int, float]] = [{} for _ in range(n)]
        for i, j, w in edges:
            if i == j:
                continue
            adj[i][j] = adj[i].get(j, 0.0) + w
            adj[j][i] = adj[j].get(i, 0.0) + w
        ids = tuple(node_ids) if node_ids is not None else tuple(str(i) for i in range(n))
        return cls(ids, tuple(adj))


def project_undirected(g: CallGraph) -> UndirectedView:
    edges = [(g.index_of(e.caller), g.index_of(e.callee), float(e.weight)) for e in g.edges]
    return UndirectedView.from_edges(g.node_count, edges, g.node_ids)


@dataclass(frozen=True)
class DegreeRecord:
    in_degree: int = 0
    out_degree: int = 0
    total_connections: int = 0
    in_weight: int = 0
    out_weight: int = 0


def degree_stats(g: CallGraph) -> dict[str, DegreeRecord]:
    """Per-node degree record, keyed by node id in graph node order.

    Self-loops count toward both in and out degree of their node.
    """
    ind = dict.fromkeys(g.node_ids, 0)
    outd = dict.fromkeys(g.node_ids, 0)
    inw = dict.fromkeys(g.node_ids, 0)
    outw = dict.fromkeys(g.node_ids, 0)
    for e in g.edges:
        outd[e.caller] += 1
        outw[e.caller] += e.weight
        ind[e.callee] += 1
        inw[e.callee] += e.weight
    return {
        n: DegreeRecord(ind[n], outd[n], ind[n] + outd[n], inw[n], outw[n])
        for n in g.node_ids
    }


@dataclass(frozen=True)
class DistanceModel:
    node_ids: tuple[str, ...]
    distances: np.ndarray
    sentinel: float

    def __post_init__(self) -> None:
        d = np.asarray(self.distances, dtype=float)
        n = len(self.node_ids)
        if d.shape != (n, n):
            raise ConsistencyError(f"distance matrix shape {d.shape} does not match {n} nodes")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @classmethod
    def from_matrix(cls, matrix, node_ids: Sequence[str] | None = None, sentinel: float | None = None) -> DistanceModel:
        m = np.asarray(matrix, dtype=float)
        ids = tuple(node_ids) if node_ids is not None else tuple(str(i) for i in range(m.shape[0]))
        if sentinel is None:
            sentinel = float(max(m.max(initial=0.0), len(ids)))
        return cls(ids, m, float(sentinel))

    @classmethod
    def from_points(cls, points: Sequence[float] | np.ndarray, node_ids: Sequence[str] | None = None) -> DistanceModel:
        """Euclidean distances between points (1-D values or rows of a 2-D array)."""
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        diff = p[:, None, :] - p[None, :, :]
        return cls.from_matrix(np.sqrt((diff ** 2).sum(axis=-1)), node_ids)

    def scaled(self, factor: float) -> DistanceModel:
        return DistanceModel(self.node_ids, self.distances * factor, self.sentinel * factor)


def hop_distance_model(g: CallGraph, node_cap: int = DEFAULT_NODE_CAP) -> DistanceModel:
    """Unweighted shortest-path hop counts over the undirected projection.

    Unreachable pairs get the sentinel ``n``, which no hop count can reach.
    """
    n = g.node_count
    if node_cap < 1:
        raise ValueError("node_cap must be positive")
    if n > node_cap:
        raise CapacityError(
            f"graph has {n} nodes but the dense distance model is capped at {node_cap}; "
            "raise --node-cap or subsample the graph"
        )
    if n == 0:
        return DistanceModel((), np.zeros((0, 0)), 0.0)
    view = project_undirected(g)
    d = shortest_path(view.to_csr(), method="D", directed=False, unweighted=True)
    d[np.isinf(d)] = float(n)
    return DistanceModel(g.node_ids, d, float(n))

