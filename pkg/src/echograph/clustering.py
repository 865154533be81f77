"""Modularity maximization (Louvain) and the label-propagation baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extraction import SimilarityGraph
from .graphs import Graph, Partition
from .rng import Rng


@dataclass
class LouvainConfig:
    max_passes: int = 20
    min_modularity_gain: float = 1e-7
    resolution: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")


def _weighted_csr(graph_like):
    """(indptr, indices, weights, n) for either container, both directions."""
    if isinstance(graph_like, Graph):
        n = graph_like.n_nodes
        src, dst = graph_like.directed_edges()
        w = np.ones(src.size, dtype=np.float64)
    elif isinstance(graph_like, SimilarityGraph):
        n = graph_like.n_nodes
        src = np.concatenate([graph_like.src, graph_like.dst])
        dst = np.concatenate([graph_like.dst, graph_like.src])
        w = np.concatenate([graph_like.weight, graph_like.weight]).astype(np.float64)
        if w.size and w.min() < 0:
            raise ValueError("negative edge weight")
    else:
        raise TypeError(f"unsupported graph container {type(graph_like)!r}")
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst, w, n


def modularity(graph_like, p: Partition, resolution: float = 1.0) -> float:
    """Weighted Newman modularity with a resolution parameter.

    An edgeless graph has modularity 0 by convention (2m = 0 guard).
    """
    indptr, indices, weights, n = _weighted_csr(graph_like)
    if p.n_nodes != n:
        raise ValueError("partition size must match node count")
    two_m = weights.sum()
    if two_m == 0:
        return 0.0
    comm = p.assignment
    strength = np.zeros(n, dtype=np.float64)
    np.add.at(strength, np.repeat(np.arange(n), np.diff(indptr)), weights)
    src = np.repeat(np.arange(n), np.diff(indptr))
    internal = weights[comm[src] == comm[indices]].sum()
    n_comm = comm.max() + 1
    comm_strength = np.zeros(n_comm, dtype=np.float64)
    np.add.at(comm_strength, comm, strength)
    return float(internal / two_m - resolution * np.sum((comm_strength / two_m) ** 2))


def _louvain_local_pass(indptr, indices, weights, node_w_self, comm, rng: Rng,
                        resolution: float, min_gain: float) -> bool:
    """One round of greedy local moves; mutates ``comm``. Returns True if
    any node moved."""
    n = comm.size
    strength = node_w_self.copy()
    src = np.repeat(np.arange(n), np.diff(indptr))
    np.add.at(strength, src, weights)
    two_m = strength.sum()
    comm_tot = np.zeros(n, dtype=np.float64)
    np.add.at(comm_tot, comm, strength)
    moved_any = False
    improved = True
    while improved:
        improved = False
        order = rng.permutation(n)
        for u in order:
            cu = comm[u]
            lo, hi = indptr[u], indptr[u + 1]
            nbrs = indices[lo:hi]
            wts = weights[lo:hi]
            # weight from u into each adjacent community (self edges ignored
            # for the gain; they move with the node)
            link = {}
            for v, w in zip(nbrs, wts):
                if v == u:
                    continue
                c = comm[v]
                link[c] = link.get(c, 0.0) + w
            k_u = strength[u]
            comm_tot[cu] -= k_u
            base = link.get(cu, 0.0) - resolution * k_u * comm_tot[cu] / two_m
            best_c, best_gain = cu, 0.0
            for c in sorted(link):
                if c == cu:
                    continue
                gain = (link[c] - resolution * k_u * comm_tot[c] / two_m) - base
                if gain > best_gain and gain > min_gain:
                    best_c, best_gain = c, gain
            comm[u] = best_c
            comm_tot[best_c] += k_u
            if best_c != cu:
                improved = True
                moved_any = True
    return moved_any


def _aggregate(indptr, indices, weights, node_w_self, comm):
    """Collapse communities into super-nodes, keeping self-loop weight."""
    labels = Partition(comm).assignment
    n_new = labels.max() + 1
    src = np.repeat(np.arange(labels.size), np.diff(indptr))
    a, b = labels[src], labels[indices]
    self_w = np.zeros(n_new, dtype=np.float64)
    np.add.at(self_w, labels, node_w_self)
    loop = a == b
    np.add.at(self_w, a[loop], weights[loop])
    a, b, w = a[~loop], b[~loop], weights[~loop]
    key = a * n_new + b
    order = np.argsort(key, kind="stable")
    key, w = key[order], w[order]
    uniq, start = np.unique(key, return_index=True)
    sums = np.add.reduceat(w, start) if w.size else np.empty(0)
    na, nb = uniq // n_new, uniq % n_new
    new_indptr = np.zeros(n_new + 1, dtype=np.int64)
    np.add.at(new_indptr, na + 1, 1)
    return np.cumsum(new_indptr), nb, sums, self_w, labels


def louvain(sg, cfg: LouvainConfig | None = None, rng: Rng | None = None,
            with_history: bool = False):
    """Classic two-phase Louvain on a weighted graph; returns the flat
    partition of the original nodes (and per-pass modularity when asked)."""
    if cfg is None:
        cfg = LouvainConfig()
    if rng is None:
        rng = Rng(cfg.seed)
    indptr, indices, weights, n = _weighted_csr(sg)
    if n < 1:
        raise ValueError("need at least one node")
    node_w_self = np.zeros(n, dtype=np.float64)
    if weights.sum() == 0:
        p = Partition(np.arange(n))
        return (p, [0.0]) if with_history else p
    mapping = np.arange(n)
    comm = np.arange(n)
    history = []
    for _ in range(cfg.max_passes):
        moved = _louvain_local_pass(indptr, indices, weights, node_w_self, comm,
                                    rng, cfg.resolution, cfg.min_modularity_gain)
        indptr, indices, weights, node_w_self, labels = _aggregate(
            indptr, indices, weights, node_w_self, comm)
        mapping = labels[mapping]
        comm = np.arange(labels.max() + 1)
        if with_history:
            history.append(modularity(sg, Partition(mapping), cfg.resolution))
        if not moved or comm.size == 1:
            break
    p = Partition(mapping)
    return (p, history) if with_history else p


def lpa(g: Graph, max_iters: int = 100, rng: Rng | None = None) -> Partition:
    """Asynchronous label propagation: random node order, majority neighbor
    label, random tie-break; stops when no label changes or at max_iters."""
    if g.n_nodes < 1:
        raise ValueError("need at least one node")
    if rng is None:
        rng = Rng(0)
    labels = np.arange(g.n_nodes, dtype=np.int64)
    for _ in range(max_iters):
        changed = False
        for u in rng.permutation(g.n_nodes):
            nbrs = g.neighbors(u)
            if nbrs.size == 0:
                continue
            counts = np.bincount(labels[nbrs])
            best = np.flatnonzero(counts == counts.max())
            new = int(best[rng.integers(0, best.size)]) if best.size > 1 else int(best[0])
            if new != labels[u]:
                labels[u] = new
                changed = True
        if not changed:
            break
    return Partition(labels)
