"""Modularity, Louvain and Leiden community detection on the undirected
projection of a call graph."""

from __future__ import annotations

import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .clustering import Clustering, canonical_labels
from .errors import ParameterError, UndefinedScoreError
from .graph import UndirectedView

MIN_DELTA_Q = 1e-7
MAX_OUTER_ITERATIONS = 100


@dataclass(frozen=True)
class Partition:
    """Community labels plus per-community aggregates.

    ``internal[c]`` is the undirected edge weight inside community ``c`` (each
    edge once); ``total_degree[c]`` is the sum of member degrees.
    """

    node_ids: tuple[str, ...]
    labels: tuple[int, ...]
    internal: tuple[float, ...] = field(default=())
    total_degree: tuple[float, ...] = field(default=())

    @classmethod
    def from_labels(cls, g: UndirectedView, labels: Sequence[int]) -> Partition:
        labels = tuple(canonical_labels(labels))
        if len(labels) != g.n:
            raise ParameterError("partition size does not match the graph")
        if any(x < 0 for x in labels):
            raise ParameterError("community partitions cannot contain noise labels")
        c = max(labels, default=-1) + 1
        internal = [0.0] * c
        total = [0.0] * c
        for i, adj in enumerate(g.adjacency):
            li = labels[i]
            for j, w in adj.items():
                total[li] += w
                if labels[j] == li and i < j:
                    internal[li] += w
        return cls(tuple(g.node_ids), labels, tuple(internal), tuple(total))

    @property
    def community_count(self) -> int:
        return len(self.internal)

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.community_count)]
        for i, lab in enumerate(self.labels):
            out[lab].append(i)
        return out


def modularity(g: UndirectedView, p: Partition | Sequence[int], resolution: float = 1.0) -> float:
    """Newman modularity, with ``resolution`` scaling the null-model term."""
    if not isinstance(p, Partition):
        p = Partition.from_labels(g, p)
    two_m = sum(p.total_degree)
    if two_m <= 0:
        raise UndefinedScoreError("modularity is undefined on a graph without edges")
    q = 0.0
    for internal, total in zip(p.internal, p.total_degree):
        q += 2.0 * internal / two_m - resolution * (total / two_m) ** 2
    return q


class _Net:
    """Compact weighted graph used inside the optimisers.

    ``loops[v]`` holds A_vv under the double-counting convention (twice the
    weight folded into ``v`` by aggregation), so ``deg[v]`` includes it and
    the total ``two_m`` is the same at every aggregation level.
    """

    __slots__ = ("n", "nbr", "wt", "loops", "deg", "two_m")

    def __init__(self, nbr: list[list[int]], wt: list[list[float]], loops: list[float]):
        self.n = len(nbr)
        self.nbr = nbr
        self.wt = wt
        self.loops = loops
        self.deg = [sum(w) + s for w, s in zip(wt, loops)]
        self.two_m = sum(self.deg)

    @classmethod
    def from_view(cls, g: UndirectedView) -> _Net:
        nbr = [list(a.keys()) for a in g.adjacency]
        wt = [[float(x) for x in a.values()] for a in g.adjacency]
        return cls(nbr, wt, [0.0] * g.n)

    def aggregate(self, groups: list[int], count: int) -> _Net:
        loops = [0.0] * count
        adj: list[dict[int, float]] = [{} for _ in range(count)]
        for v in range(self.n):
            r = groups[v]
            loops[r] += self.loops[v]
            row = adj[r]
            for u, w in zip(self.nbr[v], self.wt[v]):
                s = groups[u]
                if s == r:
                    loops[r] += w
                else:
                    row[s] = row.get(s, 0.0) + w
        return _Net([list(a.keys()) for a in adj], [list(a.values()) for a in adj], loops)

    def quality(self, comm: list[int], gamma: float) -> float:
        inside: dict[int, float] = {}
        total: dict[int, float] = {}
        for v in range(self.n):
            c = comm[v]
            total[c] = total.get(c, 0.0) + self.deg[v]
            acc = inside.get(c, 0.0) + self.loops[v]
            for u, w in zip(self.nbr[v], self.wt[v]):
                if comm[u] == c:
                    acc += w
            inside[c] = acc
        two_m = self.two_m
        return sum(inside[c] / two_m - gamma * (total[c] / two_m) ** 2 for c in total)


def _renumber(comm: list[int]) -> tuple[list[int], int]:
    mapping: dict[int, int] = {}
    out = []
    for c in comm:
        if c not in mapping:
            mapping[c] = len(mapping)
        out.append(mapping[c])
    return out, len(mapping)


def _best_move(net: _Net, v: int, comm: list[int], tot: list[float], gamma: float):
    """Returns (target community, gain over staying) for node ``v``.

    ``tot`` must already exclude ``v``'s own degree from its community.
    """
    links: dict[int, float] = {}
    comm_ = comm
    for u, w in zip(net.nbr[v], net.wt[v]):
        c = comm_[u]
        links[c] = links.get(c, 0.0) + w
    cv = comm[v]
    factor = gamma * net.deg[v] / net.two_m
    stay = links.get(cv, 0.0) - factor * tot[cv]
    best_c, best = cv, stay
    for c, w in links.items():
        gain = w - factor * tot[c]
        if gain > best or (gain == best and c < best_c):
            best_c, best = c, gain
    return best_c, best - stay


def _sweep_local_moves(net: _Net, comm: list[int], gamma: float, rng: random.Random) -> bool:
    """Louvain local moving: full sweeps in shuffled order until a sweep
    makes no move worth more than ``MIN_DELTA_Q``."""
    tot = [0.0] * net.n
    for v in range(net.n):
        tot[comm[v]] += net.deg[v]
    threshold = MIN_DELTA_Q * net.two_m / 2.0
    deg = net.deg
    changed = False
    order = list(range(net.n))
    while True:
        rng.shuffle(order)
        moved = False
        for v in order:
            cv = comm[v]
            tot[cv] -= deg[v]
            target, gain = _best_move(net, v, comm, tot, gamma)
            if target != cv and gain > threshold:
                comm[v] = target
                moved = True
            tot[comm[v]] += deg[v]
        if not moved:
            return changed
        changed = True


def _queue_local_moves(net: _Net, comm: list[int], gamma: float, rng: random.Random) -> bool:
    """Leiden fast local moving: a node queue, re-queueing the neighbours of
    every moved node that sit outside its new community."""
    n = net.n
    tot = [0.0] * n
    for v in range(n):
        tot[comm[v]] += net.deg[v]
    threshold = MIN_DELTA_Q * net.two_m / 2.0
    deg, nbr = net.deg, net.nbr
    order = list(range(n))
    rng.shuffle(order)
    queue = deque(order)
    queued = [True] * n
    changed = False
    while queue:
        v = queue.popleft()
        queued[v] = False
        cv = comm[v]
        tot[cv] -= deg[v]
        target, gain = _best_move(net, v, comm, tot, gamma)
        if target != cv and gain > threshold:
            comm[v] = target
            changed = True
            for u in nbr[v]:
                if not queued[u] and comm[u] != target:
                    queued[u] = True
                    queue.append(u)
        tot[comm[v]] += deg[v]
    return changed


def _refine(net: _Net, comm: list[int], gamma: float, rng: random.Random) -> list[int]:
    """Splits every community into well-connected sub-communities.

    Starts from singletons; a singleton node that is well connected to the
    rest of its community merges into the admissible sub-community (inside
    the same community, linked to the node, itself well connected) with the
    largest non-negative gain, lowest id on ties. Merges only follow edges,
    so every sub-community stays connected.
    """
    n = net.n
    deg, nbr, wt = net.deg, net.nbr, net.wt
    two_m = net.two_m
    comm_tot: dict[int, float] = {}
    for v in range(n):
        comm_tot[comm[v]] = comm_tot.get(comm[v], 0.0) + deg[v]
    # weight from each node to the rest of its own community
    ext_node = [0.0] * n
    for v in range(n):
        cv = comm[v]
        acc = 0.0
        for u, w in zip(nbr[v], wt[v]):
            if comm[u] == cv:
                acc += w
        ext_node[v] = acc
    refined = list(range(n))
    r_tot = list(deg)
    r_ext = list(ext_node)
    r_size = [1] * n

    order = list(range(n))
    rng.shuffle(order)
    for v in order:
        if r_size[refined[v]] != 1:
            continue
        cv = comm[v]
        k_v = deg[v]
        big_k = comm_tot[cv]
        if ext_node[v] < gamma * k_v * (big_k - k_v) / two_m:
            continue
        links: dict[int, float] = {}
        for u, w in zip(nbr[v], wt[v]):
            if comm[u] == cv:
                r = refined[u]
                links[r] = links.get(r, 0.0) + w
        own = refined[v]
        best_r, best_gain = -1, 0.0
        for r, w in links.items():
            if r == own:
                continue
            if r_ext[r] < gamma * r_tot[r] * (big_k - r_tot[r]) / two_m:
                continue
            gain = w - gamma * k_v * r_tot[r] / two_m
            if gain < 0:
                continue
            if best_r < 0 or gain > best_gain or (gain == best_gain and r < best_r):
                best_r, best_gain = r, gain
        if best_r < 0:
            continue
        w_link = links[best_r]
        refined[v] = best_r
        r_size[own] = 0
        r_tot[own] = 0.0
        r_size[best_r] += 1
        r_tot[best_r] += k_v
        r_ext[best_r] = r_ext[best_r] + ext_node[v] - 2.0 * w_link
    return refined


def _split_disconnected(g: UndirectedView, labels: list[int]) -> list[int]:
    """Splits each community into the connected components of its induced
    subgraph; never lowers modularity."""
    out = [-1] * g.n
    next_label = 0
    for start in range(g.n):
        if out[start] != -1:
            continue
        c = labels[start]
        out[start] = next_label
        stack = [start]
        while stack:
            v = stack.pop()
            for u in g.adjacency[v]:
                if out[u] == -1 and labels[u] == c:
                    out[u] = next_label
                    stack.append(u)
        next_label += 1
    return canonical_labels(out)


def check_connectivity(g: UndirectedView, p: Partition | Sequence[int]) -> list[int]:
    """Ids of communities whose induced subgraph has more than one component."""
    labels = p.labels if isinstance(p, Partition) else tuple(p)
    members: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        members.setdefault(lab, []).append(i)
    broken = []
    for lab in sorted(members):
        nodes = members[lab]
        if len(nodes) < 2:
            continue
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            v = stack.pop()
            for u in g.adjacency[v]:
                if u not in seen and labels[u] == lab:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != len(nodes):
            broken.append(lab)
    return broken


def _require_edges(g: UndirectedView, resolution: float) -> None:
    if not resolution > 0:
        raise ParameterError(f"resolution must be > 0, got {resolution}")
    if g.total_weight <= 0:
        raise UndefinedScoreError("community detection needs at least one edge")


def _louvain_labels(g: UndirectedView, resolution: float, seed: int, trace: list[float] | None) -> list[int]:
    rng = random.Random(seed)
    net = _Net.from_view(g)
    node_of = list(range(g.n))  # original node -> node of the current level
    comm = list(range(net.n))
    if trace is not None:
        trace.append(net.quality(comm, resolution))
    for _ in range(MAX_OUTER_ITERATIONS):
        comm = list(range(net.n))
        if not _sweep_local_moves(net, comm, resolution, rng):
            break
        comm, count = _renumber(comm)
        if trace is not None:
            trace.append(net.quality(comm, resolution))
        node_of = [comm[x] for x in node_of]
        if count == net.n:
            break
        net = net.aggregate(comm, count)
    return canonical_labels(node_of)


def louvain(g: UndirectedView, resolution: float = 1.0, seed: int = 42, trace: list[float] | None = None) -> Clustering:
    """Louvain: local moving then aggregation, repeated until no move gains
    more than ``MIN_DELTA_Q``. ``trace`` (if given) receives the modularity
    after every level."""
    _require_edges(g, resolution)
    start = time.perf_counter()
    labels = _louvain_labels(g, resolution, seed, trace)
    elapsed = time.perf_counter() - start
    q = modularity(g, labels, resolution)
    return Clustering(g.node_ids, labels, "louvain", {"resolution": resolution, "seed": seed}, q, elapsed)


def _leiden_pass(base: _Net, start: list[int], gamma: float, rng: random.Random) -> list[int]:
    """One Leiden iteration from an initial partition of the base nodes."""
    net = base
    comm = list(start)
    node_of = list(range(base.n))
    for _ in range(MAX_OUTER_ITERATIONS):
        _queue_local_moves(net, comm, gamma, rng)
        comm, count = _renumber(comm)
        if count == net.n:
            break
        refined, r_count = _renumber(_refine(net, comm, gamma, rng))
        if r_count == net.n:
            # refinement merged nothing; aggregation would not shrink the graph
            break
        parent = [0] * r_count
        for v in range(net.n):
            parent[refined[v]] = comm[v]
        node_of = [refined[x] for x in node_of]
        net = net.aggregate(refined, r_count)
        comm = parent
    return [comm[x] for x in node_of]


def _leiden_labels(g: UndirectedView, resolution: float, seed: int, trace: list[float] | None) -> list[int]:
    rng = random.Random(seed)
    base = _Net.from_view(g)
    labels = list(range(g.n))
    q = base.quality(labels, resolution)
    if trace is not None:
        trace.append(q)
    for _ in range(MAX_OUTER_ITERATIONS):
        candidate = _split_disconnected(g, _leiden_pass(base, labels, resolution, rng))
        q_new = base.quality(candidate, resolution)
        if q_new <= q + MIN_DELTA_Q:
            if q_new >= q and candidate != labels:
                labels, q = candidate, q_new
            break
        labels, q = candidate, q_new
        if trace is not None:
            trace.append(q)
    return canonical_labels(labels)


def leiden(g: UndirectedView, resolution: float = 1.0, seed: int = 42, trace: list[float] | None = None) -> Clustering:
    """Leiden: fast local moving, refinement into well-connected
    sub-communities, aggregation of the refined partition; repeated from the
    previous result until modularity stops improving. Every returned
    community is connected in its induced subgraph."""
    _require_edges(g, resolution)
    start = time.perf_counter()
    labels = _leiden_labels(g, resolution, seed, trace)
    elapsed = time.perf_counter() - start
    q = modularity(g, labels, resolution)
    return Clustering(g.node_ids, labels, "leiden", {"resolution": resolution, "seed": seed}, q, elapsed)
