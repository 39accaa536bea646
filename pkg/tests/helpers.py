"""Reference oracles and fixture builders shared by the test modules.

The oracles are deliberately naive and share no code with the package's
algorithms.
"""

from __future__ import annotations

import functools
import itertools
import random
from collections import deque

import numpy as np

from cgthreat.clustering import Clustering
from cgthreat.graph import CallGraph, UndirectedView, graph_from_edges

# ---------------------------------------------------------------- oracles


def naive_dbscan(dist, node_ids, eps, min_pts):
    """Textbook O(n^2) DBSCAN returning (clusters as frozensets, noise set).

    Border points are attached to the cluster of their core neighbour with
    the smallest node id.
    """
    n = len(node_ids)
    nbrs = [[j for j in range(n) if dist[i][j] <= eps] for i in range(n)]
    core = [len(nbrs[i]) >= min_pts for i in range(n)]
    comp = [None] * n
    cid = 0
    for i in range(n):
        if not core[i] or comp[i] is not None:
            continue
        comp[i] = cid
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if core[v] and comp[v] is None:
                    comp[v] = cid
                    queue.append(v)
        cid += 1
    label = list(comp)
    for i in range(n):
        if core[i]:
            continue
        cores = [j for j in nbrs[i] if core[j]]
        if cores:
            label[i] = comp[min(cores, key=lambda j: node_ids[j])]
    groups = {}
    noise = set()
    for i, lab in enumerate(label):
        if lab is None:
            noise.add(node_ids[i])
        else:
            groups.setdefault(lab, set()).add(node_ids[i])
    return frozenset(frozenset(g) for g in groups.values()), frozenset(noise)


def adjacency_matrix(view: UndirectedView):
    n = view.n
    a = [[0.0] * n for _ in range(n)]
    for i, row in enumerate(view.adjacency):
        for j, w in row.items():
            a[i][j] = w
    return a


def naive_modularity(view: UndirectedView, labels, resolution=1.0):
    """Direct double sum (1/2m) sum_ij (A_ij - g k_i k_j / 2m) delta(c_i, c_j)."""
    a = adjacency_matrix(view)
    n = view.n
    k = [sum(row) for row in a]
    two_m = sum(k)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                total += a[i][j] - resolution * k[i] * k[j] / two_m
    return total / two_m


def set_partitions(n):
    """All set partitions of range(n) as label lists (restricted growth)."""
    def rec(i, labels, top):
        if i == n:
            yield list(labels)
            return
        for c in range(top + 1):
            labels.append(c)
            yield from rec(i + 1, labels, max(top, c + 1))
            labels.pop()
    yield from rec(0, [], 0)


@functools.lru_cache(maxsize=None)
def _partition_table(n):
    return np.array(list(set_partitions(n)), dtype=np.int64)


def best_modularity(view: UndirectedView, resolution=1.0):
    """Maximum of the double sum over every set partition (Bell(n) of them)."""
    a = np.array(adjacency_matrix(view))
    k = a.sum(axis=1)
    two_m = k.sum()
    b = a - resolution * np.outer(k, k) / two_m
    table = _partition_table(view.n)
    same = table[:, :, None] == table[:, None, :]
    return float((same * b).sum(axis=(1, 2)).max() / two_m)


def kruskal_weight(matrix):
    n = len(matrix)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    total = 0.0
    for w, i, j in sorted((matrix[i][j], i, j) for i in range(n) for j in range(i + 1, n)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            total += w
    return total


def silhouette_reference(dist, labels):
    """Formula-direct silhouette mean over non-noise points."""
    clusters = sorted(set(labels) - {-1})
    scores = []
    for i, li in enumerate(labels):
        if li == -1:
            continue
        own = [j for j, lj in enumerate(labels) if lj == li and j != i]
        if not own:
            scores.append(0.0)
            continue
        a = sum(dist[i][j] for j in own) / len(own)
        b = min(
            sum(dist[i][j] for j, lj in enumerate(labels) if lj == c) / sum(1 for lj in labels if lj == c)
            for c in clusters if c != li
        )
        scores.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    return sum(scores) / len(scores)


def bfs_hops(view: UndirectedView, source):
    dist = [None] * view.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in view.adjacency[u]:
            if dist[v] is None:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def induced_components(view: UndirectedView, members):
    members = set(members)
    seen = set()
    count = 0
    for s in members:
        if s in seen:
            continue
        count += 1
        stack = [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            for v in view.adjacency[u]:
                if v in members and v not in seen:
                    seen.add(v)
                    stack.append(v)
    return count


# ---------------------------------------------------------------- builders


def two_triangles_bridge() -> CallGraph:
    return graph_from_edges([
        ("a", "b"), ("b", "c"), ("c", "a"),
        ("d", "e"), ("e", "f"), ("f", "d"),
        ("c", "d"),
    ])


def random_view(rng: random.Random, n: int, p: float, weighted=True) -> UndirectedView:
    edges = []
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.append((i, j, float(rng.randint(1, 5)) if weighted else 1.0))
    return UndirectedView.from_edges(n, edges)


def random_connected_view(rng: random.Random, n: int, p: float, weighted=True) -> UndirectedView:
    """Random spanning tree plus extra G(n, p) edges."""
    edges = {}
    order = list(range(n))
    rng.shuffle(order)
    for idx in range(1, n):
        u, v = order[idx], order[rng.randrange(idx)]
        edges[(min(u, v), max(u, v))] = float(rng.randint(1, 5)) if weighted else 1.0
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in edges and rng.random() < p:
            edges[(i, j)] = float(rng.randint(1, 5)) if weighted else 1.0
    return UndirectedView.from_edges(n, [(i, j, w) for (i, j), w in edges.items()])


def clean_modular_graph(blocks=4, size=6) -> tuple[CallGraph, list[int]]:
    """Complete DAG blocks joined in a ring by one call each."""
    edges = []
    planted = []
    names = [[f"m{b}.f{i}" for i in range(size)] for b in range(blocks)]
    for b in range(blocks):
        for i in range(size):
            for j in range(i + 1, size):
                edges.append((names[b][i], names[b][j]))
        edges.append((names[b][size - 1], names[(b + 1) % blocks][0]))
    order = [n for block in names for n in block]
    planted = [b for b in range(blocks) for _ in range(size)]
    return graph_from_edges(edges, nodes=order), planted


def _banded_cluster(prefix, size, weight):
    names = [f"{prefix}{i:02d}" for i in range(size)]
    edges = [(names[i], names[j], weight) for i in range(size) for j in range(i + 1, min(size, i + 4))]
    return names, edges


def planted_threat_fixture():
    """Call graph plus explicit clustering with exactly one instance of each
    heuristic pattern.

    Returns (graph, clustering, expected) where ``expected`` maps heuristic
    name to the planted subject.
    """
    edges = []
    clusters: dict[str, list[str]] = {}
    for name in ("A", "B", "C", "D", "E", "H"):
        members, internal = _banded_cluster(f"{name.lower()}.fn", 12, 10)
        clusters[name] = members
        edges += internal
    A, B, C, D, E, H = (clusters[k] for k in "ABCDEH")

    # hotspot: H absorbs heavy external traffic
    edges += [(A[0], H[0], 50), (B[0], H[1], 50), (C[0], H[2], 50), (D[0], H[3], 50)]

    # bridging: a 3-node cluster touching A, B and C
    bridge = ["s.gw0", "s.gw1", "s.gw2"]
    clusters["S"] = bridge
    edges += [(bridge[0], bridge[1], 2), (bridge[1], bridge[2], 2), (bridge[2], bridge[0], 2)]
    edges += [(bridge[0], A[1], 1), (bridge[1], B[1], 1), (bridge[2], C[1], 1)]

    # dangling: a node labelled with E whose only neighbour lives in D
    clusters["E"] = E + ["e.orphan"]
    edges.append(("e.orphan", D[5], 1))

    # hub: a node of C calling eight functions in each of A, B, D and E
    hub = "c.dispatch"
    clusters["C"] = C + [hub]
    edges.append((C[3], hub, 1))
    for target in (A, B, D, E):
        edges += [(hub, t, 1) for t in target[2:10]]

    # weak: an 11-node chain whose calls mostly leave for E
    chain = [f"w.step{i:02d}" for i in range(11)]
    clusters["W"] = chain
    edges += [(chain[i], chain[i + 1], 1) for i in range(10)]
    edges += [(chain[i], E[i], 1) for i in range(11)] + [(chain[0], E[11], 1)]

    g = graph_from_edges(edges)
    order = ["A", "B", "C", "D", "E", "H", "S", "W"]
    cid = {name: i for i, name in enumerate(order)}
    label = {n: cid[name] for name, members in clusters.items() for n in members}
    c = Clustering(g.node_ids, [label[n] for n in g.node_ids], "leiden")
    expected = {
        "bridging": cid["S"],
        "hotspot": cid["H"],
        "dangling": "e.orphan",
        "hub": hub,
        "weak": cid["W"],
    }
    return g, c, expected
