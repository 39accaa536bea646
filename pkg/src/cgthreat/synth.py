"""Synthetic call graphs with planted block structure, for tests and
benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import CallGraph, GraphBuilder


def planted_partition(
    n_blocks: int,
    block_size: int,
    p_in: float,
    p_out: float,
    seed: int = 0,
    prefix: str = "n",
) -> tuple[CallGraph, list[int]]:
    """Dense-sampled planted partition digraph (every ordered pair is tried).

    Each unordered pair gets one call edge, oriented at random. Returns the
    graph and the planted block of every node, in node order.
    """
    rng = np.random.default_rng(seed)
    n = n_blocks * block_size
    blocks = np.repeat(np.arange(n_blocks), block_size)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(blocks[iu] == blocks[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    flip = rng.random(iu.size) < 0.5
    b = GraphBuilder()
    width = len(str(n - 1))
    names = [f"{prefix}{i:0{width}d}" for i in range(n)]
    for name in names:
        b.add_node(name)
    for i, j, f in zip(iu[keep], ju[keep], flip[keep]):
        if f:
            i, j = j, i
        b.add_edge(names[i], names[j])
    return b.build(), blocks.tolist()


def sparse_planted_partition(
    n_nodes: int,
    n_edges: int,
    n_blocks: int,
    mixing: float,
    seed: int = 0,
    prefix: str = "f",
) -> tuple[CallGraph, list[int]]:
    """Large sparse planted partition graph with an exact edge count.

    A fraction ``mixing`` of edges join different blocks; the rest stay
    inside a block. Duplicate pairs and self-loops are rejected, so the
    result has exactly ``n_edges`` distinct weight-1 calls.
    """
    rng = np.random.default_rng(seed)
    blocks = np.arange(n_nodes) % n_blocks
    rng.shuffle(blocks)
    members = [np.flatnonzero(blocks == b) for b in range(n_blocks)]
    width = len(str(n_nodes - 1))
    names = [f"{prefix}{i:0{width}d}" for i in range(n_nodes)]
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    n_inter = int(round(mixing * n_edges))
    targets = [(n_edges - n_inter, False), (n_inter, True)]
    for want, inter in targets:
        placed = 0
        while placed < want:
            batch = (want - placed) * 2 + 16
            if inter:
                us = rng.integers(0, n_nodes, batch)
                vs = rng.integers(0, n_nodes, batch)
                ok = blocks[us] != blocks[vs]
            else:
                bs = rng.integers(0, n_blocks, batch)
                us = np.array([members[b][rng.integers(len(members[b]))] for b in bs])
                vs = np.array([members[b][rng.integers(len(members[b]))] for b in bs])
                ok = us != vs
            for u, v in zip(us[ok].tolist(), vs[ok].tolist()):
                key = (u, v) if u < v else (v, u)
                if key in seen:
                    continue
                seen.add(key)
                edges.append((u, v))
                placed += 1
                if placed == want:
                    break
    b = GraphBuilder()
    for name in names:
        b.add_node(name)
    for u, v in edges:
        b.add_edge(names[u], names[v])
    return b.build(), blocks.tolist()
