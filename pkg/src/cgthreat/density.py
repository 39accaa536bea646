"""Density-based clustering (DBSCAN, HDBSCAN) and silhouette scoring over a
:class:`~cgthreat.graph.DistanceModel`."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .clustering import NOISE, Clustering
from .errors import ParameterError, UndefinedScoreError
from .graph import DistanceModel

# relative slack when comparing stabilities; keeps selection invariant under
# rescaling of the distances
_STABILITY_RTOL = 1e-9


def _id_rank(node_ids) -> np.ndarray:
    """rank[i] = position of node i in ascending node-id order."""
    order = sorted(range(len(node_ids)), key=lambda i: node_ids[i])
    rank = np.empty(len(node_ids), dtype=np.int64)
    rank[order] = np.arange(len(node_ids))
    return rank


def _number_by_smallest_id(groups: list[np.ndarray], rank: np.ndarray, n: int) -> np.ndarray:
    """Labels clusters 0..C-1 ordered by their smallest member node id."""
    labels = np.full(n, NOISE, dtype=np.int64)
    keyed = sorted(groups, key=lambda members: int(rank[members].min()))
    for lab, members in enumerate(keyed):
        labels[members] = lab
    return labels


def dbscan(dm: DistanceModel, eps: float, min_pts: int) -> Clustering:
    """Core/border/noise DBSCAN.

    A node is core when at least ``min_pts`` nodes (itself included) lie
    within ``eps``. Border nodes join the cluster of their core neighbor with
    the smallest node id, so the partition does not depend on node order.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    if min_pts < 1:
        raise ParameterError(f"min_pts must be >= 1, got {min_pts}")
    n = dm.n
    if n == 0:
        raise ParameterError("cannot cluster an empty distance model")
    start = time.perf_counter()
    within = dm.distances <= eps
    core = within.sum(axis=1) >= min_pts
    core_idx = np.flatnonzero(core)
    rank = _id_rank(dm.node_ids)

    groups: list[np.ndarray] = []
    if core_idx.size:
        sub = within[np.ix_(core_idx, core_idx)]
        count, comp = connected_components(csr_matrix(sub), directed=False)
        groups = [core_idx[comp == c] for c in range(count)]
    labels = _number_by_smallest_id(groups, rank, n)

    for i in np.flatnonzero(~core):
        nbrs = np.flatnonzero(within[i] & core)
        if nbrs.size:
            labels[i] = labels[nbrs[np.argmin(rank[nbrs])]]
    return Clustering(
        dm.node_ids, tuple(labels.tolist()), "dbscan",
        {"eps": eps, "min_pts": min_pts}, None, time.perf_counter() - start,
    )


def core_distances(dm: DistanceModel, k: int) -> np.ndarray:
    """Distance from every node to its k-th nearest *other* node."""
    n = dm.n
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ParameterError(f"k={k} must be smaller than the node count {n}")
    d = dm.distances
    # drop the diagonal (self) and take the k-th smallest of the remaining n-1
    off = d[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    return np.partition(off, k - 1, axis=1)[:, k - 1]


def mutual_reachability(dm: DistanceModel, k: int) -> DistanceModel:
    core = core_distances(dm, k)
    mr = np.maximum(dm.distances, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mr, 0.0)
    return DistanceModel(dm.node_ids, mr, max(dm.sentinel, float(mr.max(initial=0.0))))


def minimum_spanning_tree(matrix: np.ndarray) -> list[tuple[int, int, float]]:
    """Prim's algorithm on a dense symmetric matrix, O(n^2).

    Ties pick the lowest vertex index, so the tree is deterministic.
    """
    n = matrix.shape[0]
    if n <= 1:
        return []
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    edges = []
    current = 0
    for _ in range(n - 1):
        in_tree[current] = True
        row = matrix[current]
        better = (~in_tree) & (row < best)
        best[better] = row[better]
        parent[better] = current
        masked = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(masked))
        edges.append((int(parent[nxt]), nxt, float(best[nxt])))
        current = nxt
    return edges


@dataclass
class LinkageLevel:
    """One merge level of the single-linkage hierarchy.

    All MST edges of equal weight are applied together, so a level may join
    more than two components; ``children`` are hierarchy node ids (points are
    ``0..n-1``, levels are numbered from ``n``).
    """

    node: int
    distance: float
    children: list[int]
    size: int


def single_linkage(mst: list[tuple[int, int, float]], n: int) -> list[LinkageLevel]:
    """Single-linkage hierarchy from MST edges, bottom-up."""
    parent = list(range(n))
    top = list(range(n))  # union-find root -> current hierarchy node
    size = [1] * n

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    levels: list[LinkageLevel] = []
    ordered = sorted(mst, key=lambda e: e[2])
    i = 0
    while i < len(ordered):
        w = ordered[i][2]
        j = i
        while j < len(ordered) and ordered[j][2] == w:
            j += 1
        # components touched by this weight group, before merging
        before: dict[int, int] = {}
        for a, b, _ in ordered[i:j]:
            for x in (a, b):
                r = find(x)
                before.setdefault(r, top[r])
        for a, b, _ in ordered[i:j]:
            ra, rb = find(a), find(b)
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
        merged: dict[int, list[int]] = {}
        for r, node in before.items():
            merged.setdefault(find(r), []).append(node)
        for root in sorted(merged, key=lambda r: min(merged[r])):
            node_id = n + len(levels)
            levels.append(LinkageLevel(node_id, w, sorted(merged[root]), size[root]))
            top[root] = node_id
        i = j
    return levels


@dataclass
class CondensedTreeNode:
    cluster_id: int
    parent_id: int | None
    birth_lambda: float
    death_lambda: float
    member_count: int
    stability: float = 0.0
    children: list[int] | None = None
    # (point, lambda at which it left this cluster)
    fallen: list[tuple[int, float]] | None = None


def _lambda(distance: float, cap: float) -> float:
    return cap if distance <= 0 else min(1.0 / distance, cap)


def condense_tree(levels: list[LinkageLevel], n: int, min_cluster_size: int) -> dict[int, CondensedTreeNode]:
    """Prunes the hierarchy to splits where at least two parts reach
    ``min_cluster_size``; everything else falls out of its parent cluster."""
    positive = [lv.distance for lv in levels if lv.distance > 0]
    cap = 1.0 / min(positive) if positive else 1.0
    by_id = {lv.node: lv for lv in levels}

    def leaves(node: int) -> list[int]:
        out, stack = [], [node]
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                stack.extend(by_id[x].children)
        return out

    def node_size(node: int) -> int:
        return 1 if node < n else by_id[node].size

    root_node = levels[-1].node if levels else 0
    tree: dict[int, CondensedTreeNode] = {
        0: CondensedTreeNode(0, None, 0.0, 0.0, n, children=[], fallen=[])
    }
    work = [(root_node, 0)]
    while work:
        node, cid = work.pop()
        cluster = tree[cid]
        if node < n:
            # a lone point that the cluster kept until the very end
            lam = cap
            cluster.fallen.append((node, lam))
            cluster.death_lambda = max(cluster.death_lambda, lam)
            continue
        lv = by_id[node]
        lam = _lambda(lv.distance, cap)
        big = [c for c in lv.children if node_size(c) >= min_cluster_size]
        small = [c for c in lv.children if node_size(c) < min_cluster_size]
        for c in small:
            for p in leaves(c):
                cluster.fallen.append((p, lam))
        if len(big) >= 2:
            cluster.death_lambda = lam
            for c in big:
                new_id = len(tree)
                tree[new_id] = CondensedTreeNode(new_id, cid, lam, lam, node_size(c), children=[], fallen=[])
                cluster.children.append(new_id)
                work.append((c, new_id))
        elif len(big) == 1:
            cluster.death_lambda = max(cluster.death_lambda, lam)
            work.append((big[0], cid))
        else:
            cluster.death_lambda = max(cluster.death_lambda, lam)

    for cluster in tree.values():
        birth = cluster.birth_lambda
        stab = sum(lam - birth for _, lam in cluster.fallen)
        for child in cluster.children:
            stab += tree[child].member_count * (tree[child].birth_lambda - birth)
        cluster.stability = stab
    return tree


def select_clusters(tree: dict[int, CondensedTreeNode]) -> list[int]:
    """Excess-of-mass selection; ties go to the parent.

    The root is a candidate only when it has no child clusters.
    """
    best: dict[int, float] = {}
    selected: set[int] = set()
    for cid in sorted(tree, reverse=True):  # children always have larger ids
        node = tree[cid]
        if not node.children:
            best[cid] = node.stability
            selected.add(cid)
            continue
        child_total = sum(best[c] for c in node.children)
        if cid == 0:
            break
        if child_total > node.stability + _STABILITY_RTOL * max(abs(node.stability), abs(child_total)):
            best[cid] = child_total
        else:
            best[cid] = node.stability
            stack = list(node.children)
            while stack:
                x = stack.pop()
                selected.discard(x)
                stack.extend(tree[x].children)
            selected.add(cid)
    return sorted(selected)


def _subtree_points(tree: dict[int, CondensedTreeNode], cid: int) -> list[int]:
    out, stack = [], [cid]
    while stack:
        x = stack.pop()
        out.extend(p for p, _ in tree[x].fallen)
        stack.extend(tree[x].children)
    return out


def hdbscan(dm: DistanceModel, min_cluster_size: int, k: int | None = None) -> Clustering:
    """Hierarchical density clustering over mutual-reachability distances.

    ``k`` (neighbors defining core distance) defaults to ``min_cluster_size``.
    """
    if min_cluster_size < 2:
        raise ParameterError(f"min_cluster_size must be >= 2, got {min_cluster_size}")
    k = min_cluster_size if k is None else k
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    n = dm.n
    params = {"min_cluster_size": min_cluster_size, "k": k}
    start = time.perf_counter()
    if n < min_cluster_size:
        return Clustering(dm.node_ids, (NOISE,) * n, "hdbscan", params, None, time.perf_counter() - start)

    mr = mutual_reachability(dm, k)
    mst = minimum_spanning_tree(mr.distances)
    levels = single_linkage(mst, n)
    tree = condense_tree(levels, n, min_cluster_size)
    chosen = select_clusters(tree)

    rank = _id_rank(dm.node_ids)
    groups = [np.array(sorted(_subtree_points(tree, cid)), dtype=np.int64) for cid in chosen]
    labels = _number_by_smallest_id([g for g in groups if g.size], rank, n)
    return Clustering(dm.node_ids, tuple(labels.tolist()), "hdbscan", params, None, time.perf_counter() - start)


def silhouette_samples(dm: DistanceModel, labels) -> np.ndarray:
    """Per-point silhouette; NaN for noise points."""
    labels = np.asarray(labels)
    clusters = sorted(set(labels.tolist()) - {NOISE})
    if len(clusters) < 2:
        raise UndefinedScoreError("silhouette needs at least two non-noise clusters")
    d = dm.distances
    n = len(labels)
    # mean distance from every point to every cluster
    sums = np.stack([d[:, labels == c].sum(axis=1) for c in clusters], axis=1)
    sizes = np.array([(labels == c).sum() for c in clusters], dtype=float)
    col = {c: i for i, c in enumerate(clusters)}
    out = np.full(n, np.nan)
    for i in range(n):
        if labels[i] == NOISE:
            continue
        own = col[int(labels[i])]
        if sizes[own] == 1:
            out[i] = 0.0
            continue
        a = sums[i, own] / (sizes[own] - 1)
        others = np.delete(sums[i] / sizes, own)
        b = others.min()
        denom = max(a, b)
        out[i] = 0.0 if denom == 0 else (b - a) / denom
    return out


def silhouette(dm: DistanceModel, c: Clustering) -> float:
    """Mean silhouette over non-noise points, in [-1, 1]."""
    if tuple(c.node_ids) != tuple(dm.node_ids):
        raise ParameterError("clustering and distance model disagree on node order")
    s = silhouette_samples(dm, c.labels)
    value = float(np.nanmean(s))
    return min(1.0, max(-1.0, value)) if not math.isnan(value) else value
