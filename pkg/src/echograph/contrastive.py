"""Memory-sharded full-batch InfoNCE with attention-weighted positives.

sim(u, v) is the cosine of the row-normalized embeddings scaled by 1/tau.
Positives are a node's true neighbors weighted by (alpha + eps); negatives
are P uniform samples per node, evaluated chunk-by-chunk whenever the
N x P x d negative tensor would exceed the element threshold. The sharded
and unsharded paths run the same code with different chunk sizes, so they
agree up to float64 summation-order noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .diffusion import EdgeAttention
from .graphs import Graph
from .rng import Rng

DEFAULT_SHARD_ELEM_THRESHOLD = 200_000_000


@dataclass
class LossConfig:
    temperature: float = 0.1
    neg_per_node: int = 256
    epsilon: float = 1e-8
    sparsity_lambda: float = 0.0
    shard_elem_threshold: int = DEFAULT_SHARD_ELEM_THRESHOLD

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.neg_per_node < 1:
            raise ValueError("need at least one negative per node")
        if self.epsilon < 0 or self.sparsity_lambda < 0:
            raise ValueError("epsilon and sparsity_lambda must be >= 0")


@dataclass
class LossBreakdown:
    contrastive: float
    sparsity: float
    total: float
    sharded: bool
    chunks_used: int
    tensor: Tensor = None   # scalar node to call backward() on


def sample_negatives(n_nodes: int, neg_per_node: int, rng: Rng) -> np.ndarray:
    """Uniform (N, P) node indices. A node may draw itself or a neighbor;
    at scale such collisions are negligible and they are not filtered."""
    if n_nodes < 2:
        raise ValueError("need at least two nodes to sample negatives")
    return rng.integers(0, n_nodes, size=(n_nodes, neg_per_node)).astype(np.int64)


def shard_decision(n: int, neg_per_node: int, dim: int, threshold: int):
    """Shard iff N*P*d exceeds the threshold; chunk covers floor(T/(P*d)) nodes."""
    if n <= 0 or neg_per_node <= 0 or dim <= 0 or threshold <= 0:
        raise ValueError("shard_decision arguments must be positive")
    if n * neg_per_node * dim <= threshold:
        return False, n
    chunk = threshold // (neg_per_node * dim)
    if chunk == 0:
        raise ValueError("shard threshold too small: below one node's P*d footprint")
    return True, int(chunk)


def compute_loss(s: Tensor, alpha: EdgeAttention, g: Graph, pool: np.ndarray,
                 cfg: LossConfig, tape: Tape) -> LossBreakdown:
    n, d = s.shape
    if pool.shape[0] != n:
        raise ValueError("negative pool row count must match node count")
    sharded, chunk = shard_decision(n, pool.shape[1], d, cfg.shard_elem_threshold)
    chunks_used = -(-n // chunk)
    inv_tau = 1.0 / cfg.temperature

    s_hat = ad.l2_normalize_rows(tape, s)

    # positive signal: per directed edge, (alpha + eps) * exp(sim(u, v))
    su = ad.gather_rows(tape, s_hat, alpha.src)
    sv = ad.gather_rows(tape, s_hat, alpha.dst)
    sims = ad.scale(tape, ad.row_dot(tape, su, sv), inv_tau)
    weight = ad.add(tape, alpha.values, ad.constant(np.full((1, 1), cfg.epsilon), dtype=alpha.values.data.dtype))
    pos_terms = ad.mul(tape, weight, ad.exp(tape, sims))
    p_v = ad.scatter_add_rows(tape, pos_terms, alpha.dst, n)

    n_v = ad.negative_energy(tape, s_hat, pool, inv_tau, chunk)

    active = np.flatnonzero(g.degrees > 0)
    if active.size == 0:
        raise ValueError("loss undefined: every node is isolated")
    p_act = ad.gather_rows(tape, p_v, active)
    n_act = ad.gather_rows(tape, n_v, active)
    log_ratio = ad.sub(tape, ad.log(tape, p_act), ad.log(tape, ad.add(tape, p_act, n_act)))
    contrastive = ad.scale(tape, ad.mean_all(tape, log_ratio), -1.0)

    sparsity = ad.mean_all(tape, alpha.values)
    total = ad.add(tape, contrastive, ad.scale(tape, sparsity, cfg.sparsity_lambda))

    c_val = float(contrastive.data[0, 0])
    s_val = float(sparsity.data[0, 0])
    t_val = float(total.data[0, 0])
    if not (np.isfinite(c_val) and np.isfinite(t_val)):
        raise FloatingPointError("non-finite loss (temperature too small or parameters exploded)")
    return LossBreakdown(contrastive=c_val, sparsity=s_val, total=t_val,
                         sharded=sharded, chunks_used=chunks_used, tensor=total)
