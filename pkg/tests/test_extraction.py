import numpy as np
import pytest

from echograph.extraction import (ExtractConfig, SimilarityGraph, adaptive_k,
                                  extract_similarity_graph,
                                  load_similarity_graph, save_similarity_graph)
from echograph.graphs import Graph


def _dense_oracle(s, degrees, cfg):
    """Brute-force reference: full N x N similarity, per-row sort, mutual rule."""
    s = np.asarray(s, dtype=np.float64)
    norms = np.linalg.norm(s, axis=1, keepdims=True)
    sh = np.divide(s, norms, out=np.zeros_like(s), where=norms > 0)
    n = s.shape[0]
    sims = np.clip(sh @ sh.T, -1.0, 1.0).astype(np.float32)
    tops = []
    for u in range(n):
        k = min(max(int(degrees[u]), cfg.k_min), cfg.k_max, n - 1)
        others = np.array([v for v in range(n) if v != u])
        order = sorted(others, key=lambda v: (-sims[u, v], v))
        tops.append(set(order[:k]))
    edges = {}
    for u in range(n):
        for v in tops[u]:
            a, b = min(u, v), max(u, v)
            mutual = (v in tops[u]) and (u in tops[v])
            if cfg.one_sided or mutual:
                w = max(sims[a, b], sims[b, a])
                if w >= np.float32(cfg.delta):
                    edges[(a, b)] = w
    items = sorted(edges.items())
    return (np.array([a for (a, _), _ in items], dtype=np.int64),
            np.array([b for (_, b), _ in items], dtype=np.int64),
            np.array([w for _, w in items], dtype=np.float32))


def _edge_set(sg: SimilarityGraph):
    order = np.lexsort((sg.dst, sg.src))
    return (sg.src[order], sg.dst[order], sg.weight[order])


def test_adaptive_k_clamps():
    cfg = ExtractConfig(k_min=5, k_max=30)
    assert adaptive_k(0, cfg) == 5
    assert adaptive_k(17, cfg) == 17
    assert adaptive_k(99, cfg) == 30
    with pytest.raises(ValueError):
        adaptive_k(-1, cfg)


def test_matches_dense_oracle_across_chunk_sizes():
    rng = np.random.default_rng(0)
    n = 300
    s = rng.normal(size=(n, 16))
    degrees = rng.integers(1, 40, size=n)
    cfg0 = ExtractConfig(k_min=5, k_max=30, delta=0.15)
    want = _dense_oracle(s, degrees, cfg0)
    for chunk in (1, 7, 64, 300):
        cfg = ExtractConfig(k_min=5, k_max=30, delta=0.15, chunk_rows=chunk)
        got = _edge_set(extract_similarity_graph(s, degrees, cfg))
        assert np.array_equal(got[0], want[0]), f"chunk={chunk}"
        assert np.array_equal(got[1], want[1]), f"chunk={chunk}"
        assert np.array_equal(got[2], want[2]), f"chunk={chunk}"


def test_chunk_results_are_bit_identical():
    rng = np.random.default_rng(1)
    s = rng.normal(size=(123, 8))
    degrees = np.full(123, 10)
    ref = None
    for chunk in (1, 7, 64, 123):
        sg = extract_similarity_graph(s, degrees, ExtractConfig(chunk_rows=chunk))
        key = (sg.src.tobytes(), sg.dst.tobytes(), sg.weight.tobytes())
        if ref is None:
            ref = key
        assert key == ref


def test_duplicated_embeddings_force_ties():
    """Many exactly-equal similarity values: tie-break must stay id-ordered."""
    rng = np.random.default_rng(2)
    base = rng.normal(size=(6, 4))
    s = np.vstack([base[i % 6] for i in range(60)])   # every row repeated 10x
    degrees = np.full(60, 4)
    cfg0 = ExtractConfig(k_min=3, k_max=4, delta=-1.0)
    want = _dense_oracle(s, degrees, cfg0)
    for chunk in (1, 13, 60):
        got = _edge_set(extract_similarity_graph(
            s, degrees, ExtractConfig(k_min=3, k_max=4, delta=-1.0, chunk_rows=chunk)))
        assert np.array_equal(got[0], want[0])
        assert np.array_equal(got[1], want[1])
        assert np.array_equal(got[2], want[2])


def test_delta_filters_edges():
    s = np.array([[1.0, 0.0], [1.0, 0.01], [0.0, 1.0]])
    degrees = np.array([2, 2, 2])
    high = extract_similarity_graph(s, degrees, ExtractConfig(k_min=2, k_max=2, delta=0.9))
    low = extract_similarity_graph(s, degrees, ExtractConfig(k_min=2, k_max=2, delta=-1.0))
    assert high.n_edges < low.n_edges
    assert np.all(high.weight >= np.float32(0.9))


def test_one_sided_is_superset_of_mutual():
    rng = np.random.default_rng(3)
    s = rng.normal(size=(80, 6))
    degrees = rng.integers(1, 20, size=80)
    mutual = extract_similarity_graph(s, degrees, ExtractConfig(delta=-1.0))
    onesided = extract_similarity_graph(s, degrees, ExtractConfig(delta=-1.0, one_sided=True))
    m = set(zip(mutual.src.tolist(), mutual.dst.tolist()))
    o = set(zip(onesided.src.tolist(), onesided.dst.tolist()))
    assert m <= o
    assert len(o) >= len(m)


def test_accepts_graph_for_degrees(two_triangles):
    s = np.random.default_rng(4).normal(size=(6, 3))
    sg = extract_similarity_graph(s, two_triangles, ExtractConfig(k_min=2, k_max=2, delta=-1.0))
    assert sg.n_nodes == 6


def test_small_inputs():
    sg = extract_similarity_graph(np.ones((1, 3)), np.array([0]), ExtractConfig())
    assert sg.n_edges == 0
    with pytest.raises(ValueError):
        extract_similarity_graph(np.zeros((0, 3)), np.array([]), ExtractConfig())
    with pytest.raises(ValueError):
        extract_similarity_graph(np.ones((3, 2)), np.array([1, 1]), ExtractConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        ExtractConfig(k_min=0)
    with pytest.raises(ValueError):
        ExtractConfig(k_min=5, k_max=4)
    with pytest.raises(ValueError):
        ExtractConfig(delta=1.5)
    with pytest.raises(ValueError):
        ExtractConfig(chunk_rows=0)


def test_save_load_roundtrip(tmp_path):
    sg = SimilarityGraph(5, np.array([0, 1]), np.array([2, 4]),
                         np.array([0.5, 0.25], dtype=np.float32))
    path = tmp_path / "sim.txt"
    save_similarity_graph(path, sg)
    back = load_similarity_graph(path)
    assert back.n_nodes == 5
    assert np.array_equal(back.src, sg.src)
    assert np.array_equal(back.dst, sg.dst)
    assert np.allclose(back.weight, sg.weight, atol=1e-7)
