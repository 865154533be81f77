"""Attention-guided K-step diffusion over the graph edges.

Each step scores every directed edge with a two-layer tanh MLP on the
concatenated endpoint embeddings, softmax-normalizes the scores over each
destination's incoming edges, and applies a residual update
z_v <- tanh(z_v + sum_u alpha_uv * W * z_u). Scorer parameters are shared
across steps. With K = 0 the embedding passes through unchanged, but one
attention pass still runs so the contrastive loss has edge weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .encoders import glorot_uniform
from .graphs import Graph
from .rng import Rng


@dataclass
class DiffusionParams:
    tensors: Dict[str, Tensor]
    steps: int

    def parameters(self) -> Dict[str, Tensor]:
        return self.tensors


@dataclass
class EdgeAttention:
    """Per-directed-edge softmax weights; ``values`` is an (2E, 1) tensor.

    Entries sharing a destination sum to 1; isolated nodes have no entries.
    """
    src: np.ndarray
    dst: np.ndarray
    values: Tensor

    @property
    def n_edges_directed(self) -> int:
        return self.src.size


def init_diffusion(embed_dim: int, steps: int, rng: Rng | None = None,
                   dtype=np.float32) -> DiffusionParams:
    if steps < 0:
        raise ValueError("diffusion steps must be >= 0")
    if rng is None:
        rng = Rng(0)
    t = {
        "attn_w0": Tensor(glorot_uniform(rng, 2 * embed_dim, embed_dim, dtype), requires_grad=True),
        "attn_b0": Tensor(np.zeros((1, embed_dim), dtype=dtype), requires_grad=True),
        "attn_w1": Tensor(glorot_uniform(rng, embed_dim, 1, dtype), requires_grad=True),
        "attn_b1": Tensor(np.zeros((1, 1), dtype=dtype), requires_grad=True),
        "w_node": Tensor(glorot_uniform(rng, embed_dim, embed_dim, dtype), requires_grad=True),
    }
    return DiffusionParams(tensors=t, steps=steps)


def attention_pass(z: Tensor, g: Graph, p: DiffusionParams, tape: Tape) -> EdgeAttention:
    """Raw score per directed edge, softmax-normalized over incoming edges."""
    src, dst = g.directed_edges()
    zu = ad.gather_rows(tape, z, src)
    zv = ad.gather_rows(tape, z, dst)
    h = ad.concat_rows(tape, zu, zv)
    h = ad.tanh(tape, ad.add(tape, ad.matmul(tape, h, p.tensors["attn_w0"]), p.tensors["attn_b0"]))
    scores = ad.add(tape, ad.matmul(tape, h, p.tensors["attn_w1"]), p.tensors["attn_b1"])
    alpha = ad.segment_softmax(tape, scores, dst, g.n_nodes)
    return EdgeAttention(src=src, dst=dst, values=alpha)


def diffuse(z0: Tensor, g: Graph, p: DiffusionParams, tape: Tape):
    """Apply the residual attention update ``steps`` times.

    Returns the final embedding and the attention from the last pass. With
    steps = 0 the returned embedding is exactly z0 and a standalone attention
    pass over z0 supplies the edge weights.
    """
    z = z0
    if p.steps == 0:
        return z0, attention_pass(z0, g, p, tape)
    alpha = None
    src, dst = g.directed_edges()
    for _ in range(p.steps):
        alpha = attention_pass(z, g, p, tape)
        msg = ad.matmul(tape, ad.gather_rows(tape, z, src), p.tensors["w_node"])
        weighted = ad.mul(tape, alpha.values, msg)
        agg = ad.scatter_add_rows(tape, weighted, dst, g.n_nodes)
        z = ad.tanh(tape, ad.add(tape, z, agg))
    return z, alpha
