import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgthreat.clustering import NOISE, Clustering
from cgthreat.community import leiden
from cgthreat.errors import ConsistencyError, ParameterError
from cgthreat.graph import graph_from_edges, project_undirected
from cgthreat.heuristics import (
    CWE_MAP,
    HEURISTICS,
    ClusterProfile,
    HeuristicConfig,
    detect_bridging,
    detect_dangling,
    detect_hotspots,
    detect_hubs,
    detect_weak_clusters,
    profile_clusters,
    run_all_heuristics,
)
from helpers import clean_modular_graph, planted_threat_fixture


def clustered(edges, assignment, nodes=()):
    g = graph_from_edges(edges, nodes=nodes)
    labels = tuple(assignment[n] for n in g.node_ids)
    return g, Clustering(g.node_ids, labels, "hdbscan" if NOISE in labels else "leiden")


def profile(cid, incoming=0, internal=1, external=None, nodes=4, neighbors=1):
    ext = incoming if external is None else external
    return ClusterProfile(cid, nodes, internal, ext, incoming, ext - incoming, neighbors)


def random_clustered(seed, n=None, noise=True):
    rng = random.Random(seed)
    n = n or rng.randint(3, 40)
    names = [f"fn{i:03d}" for i in range(n)]
    edges = [(rng.choice(names), rng.choice(names), rng.randint(1, 3)) for _ in range(rng.randint(2, 3 * n))]
    k = rng.randint(1, 5)
    labels = {m: rng.randrange(-1 if noise else 0, k) for m in names}
    used = sorted({v for v in labels.values() if v != NOISE})
    remap = {old: new for new, old in enumerate(used)}
    remap[NOISE] = NOISE
    assignment = {m: remap[v] for m, v in labels.items()}
    g = graph_from_edges(edges, nodes=names)
    return g, Clustering(g.node_ids, tuple(assignment[m] for m in g.node_ids), "hdbscan")


# ---------------------------------------------------------------- profiles


def test_profile_triangle_single_cluster():
    g, c = clustered([("a", "b"), ("b", "c"), ("c", "a")], dict(a=0, b=0, c=0))
    (p,) = profile_clusters(g, c)
    assert (p.internal_weight, p.external_weight, p.ratio) == (3, 0, 0)


def test_profile_isolated_member_has_infinite_ratio():
    g, c = clustered([("a", "x"), ("y", "a"), ("x", "y")], dict(a=0, x=1, y=1))
    p = profile_clusters(g, c)[0]
    assert (p.internal_weight, p.external_weight) == (0, 2)
    assert p.ratio == math.inf
    assert (p.incoming_weight, p.outgoing_weight) == (1, 1)


def test_profile_two_clusters_one_edge():
    g, c = clustered([("a", "b"), ("c", "d"), ("b", "c")], dict(a=0, b=0, c=1, d=1))
    for p in profile_clusters(g, c):
        assert p.external_weight == 1 and p.neighbor_clusters == 1


def test_profile_node_mismatch_is_consistency_error():
    g = graph_from_edges([("a", "b")])
    with pytest.raises(ConsistencyError):
        profile_clusters(g, Clustering(("a", "z"), (0, 0), "leiden"))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_profile_weights_account_for_every_edge(seed):
    g, c = random_clustered(seed)
    label = c.label_of()
    internal = sum(e.weight for e in g.edges if not e.is_self_loop and label[e.caller] == label[e.callee] != NOISE)
    external_ends = sum(
        e.weight * ((label[e.caller] != NOISE) + (label[e.callee] != NOISE))
        for e in g.edges if not e.is_self_loop and label[e.caller] != label[e.callee]
    )
    profiles = profile_clusters(g, c)
    assert sum(p.internal_weight for p in profiles) == internal
    assert sum(p.external_weight for p in profiles) == external_ends
    assert sum(p.incoming_weight + p.outgoing_weight for p in profiles) == external_ends


# -------------------------------------------------------------- detectors


def test_bridging_small_cluster_touching_five():
    edges, assign = [], {}
    for k in range(5):
        members = [f"big{k}.{i}" for i in range(12)]
        edges += [(members[i], members[i + 1]) for i in range(11)]
        assign.update({m: k + 1 for m in members})
    small = ["s0", "s1", "s2"]
    assign.update({m: 0 for m in small})
    edges += [("s0", "s1"), ("s1", "s2")]
    edges += [(small[k % 3], f"big{k}.0") for k in range(5)]
    g, c = clustered(edges, assign)
    (f,) = detect_bridging(profile_clusters(g, c))
    assert f.subject == 0 and f.score == 5
    assert f.cwe_ids == CWE_MAP["bridging"] == ("CWE-668",)


def test_bridging_clean_two_block_graph():
    g, planted = clean_modular_graph(blocks=2, size=6)
    c = Clustering(g.node_ids, tuple(planted), "leiden")
    assert detect_bridging(profile_clusters(g, c)) == []


def test_hotspot_single_outlier():
    profiles = [profile(i, incoming=w) for i, w in enumerate([100, 2, 2, 2, 2])]
    weights = [100, 2, 2, 2, 2]
    mean = sum(weights) / 5
    std = math.sqrt(sum((w - mean) ** 2 for w in weights) / 5)
    assert (mean, std) == pytest.approx((21.6, 39.2))
    (f,) = detect_hotspots(profiles)
    assert f.subject == 0 and f.score == 100
    assert f.evidence["threshold"] == pytest.approx(mean + 1.5 * std)


def test_hotspot_equal_weights_flags_nothing():
    assert detect_hotspots([profile(i, incoming=7) for i in range(4)]) == []


def test_hotspot_single_cluster_warns(caplog):
    assert detect_hotspots([profile(0, incoming=50)]) == []
    assert "at least two clusters" in caplog.text


def test_hotspot_preserves_volume_order():
    weights = [8338, 6806] + [10] * 30
    found = detect_hotspots([profile(i, incoming=w) for i, w in enumerate(weights)])
    assert [f.subject for f in found] == [0, 1]
    assert [f.rank for f in found] == [1, 2]


def test_dangling_single_external_neighbor():
    g, c = clustered([("d", "x"), ("x", "y"), ("y", "z")], dict(d=0, x=1, y=1, z=1))
    (f,) = detect_dangling(g, c)
    assert f.subject == "d" and f.score == 1
    assert f.cwe_ids == ("CWE-94", "CWE-1164")


def test_dangling_neighbor_in_own_cluster():
    g, c = clustered([("d", "x"), ("x", "y")], dict(d=0, x=0, y=1))
    assert [f.subject for f in detect_dangling(g, c)] == ["y"]


def test_dangling_exhaustive_one_neighbor_predicate():
    # 6-node fixture: only nodes with exactly one distinct neighbor, living
    # in another non-noise cluster, may be flagged
    edges = [("p", "q"), ("p", "r"), ("s", "q"), ("t", "t"), ("t", "u"), ("u", "t")]
    assign = dict(p=0, q=1, r=2, s=0, t=0, u=1)
    g, c = clustered(edges, assign)
    nbrs = {n: set() for n in g.node_ids}
    for e in g.edges:
        if e.caller != e.callee:
            nbrs[e.caller].add(e.callee)
            nbrs[e.callee].add(e.caller)
    expected = {
        n for n, ns in nbrs.items()
        if len(ns) == 1 and assign[next(iter(ns))] not in (NOISE, assign[n])
    }
    assert {f.subject for f in detect_dangling(g, c)} == expected == {"r", "s", "t", "u"}
    assert "p" not in expected  # two external neighbours


def test_dangling_noise_node_is_eligible():
    g, c = clustered([("n", "x"), ("x", "y")], dict(n=NOISE, x=0, y=0))
    assert [f.subject for f in detect_dangling(g, c)] == ["n"]


def test_hub_star_over_five_clusters():
    spokes = [f"s{i:02d}" for i in range(50)]
    assign = {s: i % 5 for i, s in enumerate(spokes)}
    assign["hub"] = 0
    g, c = clustered([("hub", s) for s in spokes], assign)
    (f,) = detect_hubs(g, c)
    assert f.subject == "hub" and f.score == 50
    assert f.evidence["cluster_spread"] == 5
    assert f.evidence["external_neighbors"] == 40


def test_hub_regular_ring():
    names = [f"r{i}" for i in range(12)]
    g, c = clustered([(names[i], names[(i + 1) % 12]) for i in range(12)], {n: i % 3 for i, n in enumerate(names)})
    assert detect_hubs(g, c) == []


def test_weak_cluster_ratio_ten():
    (f,) = detect_weak_clusters([profile(0, internal=3, external=30, incoming=10)])
    assert f.score == 10


def test_weak_encapsulated_cluster_not_flagged():
    p = profile(0, internal=5, external=0)
    assert p.ratio == 0
    assert detect_weak_clusters([p]) == []


def test_weak_ranked_by_ratio():
    found = detect_weak_clusters([profile(0, internal=1, external=120), profile(1, internal=1, external=687)])
    assert [f.subject for f in found] == [1, 0]


def test_weak_infinite_ratio_always_flagged():
    cfg = HeuristicConfig.from_mapping({"weak.min_ratio": 1e12})
    (f,) = detect_weak_clusters([profile(0, internal=0, external=1)], cfg)
    assert f.score == math.inf


# ----------------------------------------------------------------- driver


def test_all_noise_clustering_gives_zero_counts():
    g = graph_from_edges([("a", "b"), ("b", "c"), ("c", "a"), ("a", "d")])
    c = Clustering(g.node_ids, (NOISE,) * g.node_count, "hdbscan")
    _, counts = run_all_heuristics(g, c)
    assert counts == dict.fromkeys(HEURISTICS, 0)


def test_planted_fixture_one_finding_each():
    g, c, expected = planted_threat_fixture()
    findings, counts = run_all_heuristics(g, c, run="leiden")
    assert counts == dict.fromkeys(HEURISTICS, 1)
    for f in findings:
        assert f.subject == expected[f.heuristic]
        assert f.run == "leiden" and f.rank == 1
        assert f.cwe_ids == CWE_MAP[f.heuristic]


def test_clean_modular_graph_has_no_findings():
    g, _ = clean_modular_graph()
    _, counts = run_all_heuristics(g, leiden(project_undirected(g)))
    assert counts == dict.fromkeys(HEURISTICS, 0)


def test_config_from_mapping_accepts_dotted_and_nested():
    cfg = HeuristicConfig.from_mapping({"hub.min_degree_zscore": "2.5", "weak": {"min_ratio": 0.5}})
    assert cfg.hub.min_degree_zscore == 2.5
    assert cfg.weak.min_ratio == 0.5
    assert cfg.bridging.max_cluster_size == 10


@pytest.mark.parametrize("values", [{"hub.nonsense": 1}, {"weak.min_ratio": 0}, {"hotspot.min_incoming_zscore": "x"}])
def test_config_rejects_bad_values(values):
    with pytest.raises(ParameterError):
        HeuristicConfig.from_mapping(values)


# ------------------------------------------------------------- properties


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_findings_deterministic_and_subjects_exist(seed):
    g, c = random_clustered(seed)
    a = run_all_heuristics(g, c)
    assert a == run_all_heuristics(g, c)
    clusters = set(c.labels) - {NOISE}
    for f in a[0]:
        if f.subject_kind == "node":
            assert f.subject in g.node_ids
        else:
            assert f.subject in clusters
        assert f.cwe_ids == CWE_MAP[f.heuristic]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_dangling_and_hubs_disjoint(seed):
    g, c = random_clustered(seed)
    if g.edge_count < 2:
        return
    dangling = {f.subject for f in detect_dangling(g, c)}
    hubs = {f.subject for f in detect_hubs(g, c)}
    assert not dangling & hubs


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_weak_count_monotone_in_threshold(seed, a, b):
    g, c = random_clustered(seed)
    lo, hi = sorted((a, b))
    profiles = profile_clusters(g, c)
    strict = {f.subject for f in detect_weak_clusters(profiles, HeuristicConfig.from_mapping({"weak.min_ratio": hi}))}
    loose = {f.subject for f in detect_weak_clusters(profiles, HeuristicConfig.from_mapping({"weak.min_ratio": lo}))}
    assert strict <= loose


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.randoms(use_true_random=False))
def test_findings_independent_of_node_order(seed, rnd):
    g, c = random_clustered(seed, noise=True)
    label = c.label_of()
    order = list(g.node_ids)
    rnd.shuffle(order)
    edges = [(e.caller, e.callee, e.weight) for e in g.edges]
    rnd.shuffle(edges)
    g2 = graph_from_edges(edges, nodes=order)
    c2 = Clustering(g2.node_ids, tuple(label[n] for n in g2.node_ids), "hdbscan")

    def key(fs):
        return sorted((f.heuristic, str(f.subject), f.score, f.rank) for f in fs)

    assert key(run_all_heuristics(g, c)[0]) == key(run_all_heuristics(g2, c2)[0])
