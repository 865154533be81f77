"""Chunked degree-adaptive mutual top-k similarity graph construction.

Embeddings are row-normalized and scanned in row chunks; each node keeps its
top-k_i cosine candidates (k_i = its original degree clamped to
[k_min, k_max], self excluded) and an undirected edge survives only if the
selection is mutual and the similarity clears the threshold delta. No N x N
buffer is ever materialized.

Similarities are accumulated in float64 and stored as float32 before any
comparison, which makes the result independent of the chunking (BLAS
blocking differences vanish below float32 resolution). Ties at the top-k
boundary are broken toward the smaller node id.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph

# argpartition emits a full index row per input row, so partition work runs
# over narrow sub-blocks to keep the auxiliary footprint small
_PARTITION_SUBROWS = 128


@dataclass
class ExtractConfig:
    k_min: int = 5
    k_max: int = 30
    delta: float = 0.15
    chunk_rows: int = 4096
    one_sided: bool = False   # keep edges present in either top-k list

    def __post_init__(self):
        if not (1 <= self.k_min <= self.k_max):
            raise ValueError("need 1 <= k_min <= k_max")
        if not (-1.0 <= self.delta <= 1.0):
            raise ValueError("delta must lie in [-1, 1]")
        if self.chunk_rows < 1:
            raise ValueError("chunk_rows must be >= 1")


@dataclass
class SimilarityGraph:
    """Weighted undirected sparse edges with src < dst."""
    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @property
    def n_edges(self) -> int:
        return self.src.size


def adaptive_k(degree: int, cfg: ExtractConfig) -> int:
    if degree < 0:
        raise ValueError("degree must be >= 0")
    return int(min(max(degree, cfg.k_min), cfg.k_max))


def _normalize(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    norms = np.linalg.norm(s, axis=1, keepdims=True)
    return np.divide(s, norms, out=np.zeros_like(s), where=norms > 0)


def _row_topk(sims_row: np.ndarray, k: int) -> np.ndarray:
    """Exact top-k of one full similarity row; ties prefer smaller ids."""
    n = sims_row.size
    if k >= n:
        cand = np.arange(n)
    else:
        cand = np.argpartition(-sims_row, k - 1)[:k]
        boundary = sims_row[cand].min()
        cand = np.flatnonzero(sims_row >= boundary)
    order = np.lexsort((cand, -sims_row[cand]))
    return cand[order[:k]]


def _chunk_topk(block: np.ndarray, row_ids: np.ndarray, ks: np.ndarray,
                out_idx: np.ndarray, out_val: np.ndarray) -> None:
    """Fill per-row top-k candidates for one chunk of the f32 similarity block."""
    c, n = block.shape
    k_cap = out_idx.shape[1]
    # self-similarity is never a candidate
    block[np.arange(c), row_ids] = -np.inf
    for lo in range(0, c, _PARTITION_SUBROWS):
        hi = min(lo + _PARTITION_SUBROWS, c)
        sub = block[lo:hi]
        m = min(k_cap + 1, n - 1)
        if m >= n:
            part = np.tile(np.arange(n), (hi - lo, 1))
        else:
            part = np.argpartition(-sub, m - 1, axis=1)[:, :m]
        part_vals = np.take_along_axis(sub, part, axis=1)
        for r in range(hi - lo):
            row = lo + r
            k = int(ks[row])
            cand, vals = part[r], part_vals[r]
            order = np.lexsort((cand, -vals))
            cand, vals = cand[order], vals[order]
            if k < cand.size:
                boundary = vals[k - 1]
                # the partition set is only trustworthy if every global tie at
                # the boundary fits inside it; otherwise rescan the full row
                strict = int(np.sum(vals > boundary))
                tie_count = int(np.sum(sub[r] == boundary))
                if strict + tie_count > cand.size:
                    keep = _row_topk(sub[r], k)
                else:
                    keep = cand[:k]
            else:
                keep = cand[vals > -np.inf]
            out_idx[row, :keep.size] = keep
            out_val[row, :keep.size] = sub[r][keep]


def extract_similarity_graph(s: np.ndarray, g, cfg: ExtractConfig) -> SimilarityGraph:
    """Build the mutual top-k similarity graph from (N, d) embeddings.

    ``g`` supplies the original degrees used for the adaptive k; it may be a
    Graph or a plain per-node degree array.
    """
    s = np.asarray(s)
    n = s.shape[0]
    if n == 0:
        raise ValueError("no embeddings")
    degrees = g.degrees if isinstance(g, Graph) else np.asarray(g, dtype=np.int64)
    if degrees.size != n:
        raise ValueError("degree count must match embedding rows")
    ks = np.minimum(np.maximum(degrees, cfg.k_min), cfg.k_max).astype(np.int64)
    ks = np.minimum(ks, max(n - 1, 1))
    k_cap = int(ks.max())

    if n == 1:
        return SimilarityGraph(1, np.empty(0, dtype=np.int64),
                               np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float32))

    s_hat = _normalize(s)
    top_idx = np.full((n, k_cap), -1, dtype=np.int64)
    top_val = np.full((n, k_cap), -np.inf, dtype=np.float32)
    for lo in range(0, n, cfg.chunk_rows):
        hi = min(lo + cfg.chunk_rows, n)
        raw = s_hat[lo:hi] @ s_hat.T
        np.clip(raw, -1.0, 1.0, out=raw)
        block = raw.astype(np.float32)
        del raw
        _chunk_topk(block, np.arange(lo, hi), ks[lo:hi], top_idx[lo:hi], top_val[lo:hi])
        del block

    valid = top_idx >= 0
    src = np.repeat(np.arange(n, dtype=np.int64), valid.sum(axis=1))
    dst = top_idx[valid]
    val = top_val[valid]

    key = src * n + dst
    order = np.argsort(key)
    key_sorted = key[order]
    val_sorted = val[order]
    rev = dst * n + src
    pos = np.searchsorted(key_sorted, rev)
    pos_clip = np.minimum(pos, key_sorted.size - 1)
    has_rev = key_sorted[pos_clip] == rev
    if cfg.one_sided:
        # keep either-direction selections; weight from the forward value
        # (reverse value equal for cosine, max taken when both exist)
        w = val.copy()
        w[has_rev] = np.maximum(w[has_rev], val_sorted[pos_clip[has_rev]])
        keep = w >= np.float32(cfg.delta)
        e_src, e_dst, e_w = src[keep], dst[keep], w[keep]
        lo_ = np.minimum(e_src, e_dst)
        hi_ = np.maximum(e_src, e_dst)
        und = np.stack([lo_, hi_], axis=1)
        und, first = np.unique(und, axis=0, return_index=True)
        return SimilarityGraph(n, und[:, 0], und[:, 1], e_w[first])

    mutual = has_rev
    w = np.maximum(val, np.where(mutual, val_sorted[pos_clip], -np.inf).astype(np.float32))
    keep = mutual & (w >= np.float32(cfg.delta)) & (src < dst)
    return SimilarityGraph(n, src[keep], dst[keep], w[keep])


def save_similarity_graph(path, sg: SimilarityGraph) -> None:
    """"i j w" per line, i < j."""
    with open(path, "w") as fh:
        fh.write(f"# nodes {sg.n_nodes}\n")
        for i, j, w in zip(sg.src, sg.dst, sg.weight):
            fh.write(f"{i} {j} {w:.8g}\n")


def load_similarity_graph(path) -> SimilarityGraph:
    src, dst, w = [], [], []
    n = 0
    with open(path) as fh:
        for line in fh:
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                parts = text.split()
                if len(parts) == 3 and parts[1] == "nodes":
                    n = int(parts[2])
                continue
            a, b, c = text.split()
            src.append(int(a))
            dst.append(int(b))
            w.append(float(c))
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    n = max(n, int(max(src.max(initial=-1), dst.max(initial=-1))) + 1)
    return SimilarityGraph(n, src, dst, w)
