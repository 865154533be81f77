"""Initial embedding encoders: Isolating (MLP) and Densifying (1-hop mean).

The Isolating pathway projects raw features row-wise through a two-layer
tanh MLP. The Densifying pathway combines each node's own features with the
mean of its neighbors' features through two projection matrices before a
tanh; an empty neighborhood contributes a zero mean vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .graphs import Graph
from .rng import Rng
from .router import EncoderKind

DEFAULT_EMBED_DIM = 128


def glorot_uniform(rng: Rng, fan_in: int, fan_out: int, dtype=np.float32) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out)).astype(dtype)


@dataclass
class EncoderParams:
    pathway: EncoderKind
    tensors: Dict[str, Tensor]

    def parameters(self) -> Dict[str, Tensor]:
        return self.tensors


def init_encoder(pathway: EncoderKind, in_dim: int, embed_dim: int = DEFAULT_EMBED_DIM,
                 rng: Rng | None = None, depth: int = 2, dtype=np.float32) -> EncoderParams:
    """Glorot-uniform weights, zero biases. The MLP pathway has ``depth``
    layers with hidden width equal to the embedding dim."""
    if in_dim < 1 or embed_dim < 1:
        raise ValueError("dims must be >= 1")
    if rng is None:
        rng = Rng(0)
    t: Dict[str, Tensor] = {}
    if pathway is EncoderKind.ISOLATING:
        dims = [in_dim] + [embed_dim] * depth
        for i in range(depth):
            t[f"mlp_w{i}"] = Tensor(glorot_uniform(rng, dims[i], dims[i + 1], dtype), requires_grad=True)
            t[f"mlp_b{i}"] = Tensor(np.zeros((1, dims[i + 1]), dtype=dtype), requires_grad=True)
    else:
        t["w_self"] = Tensor(glorot_uniform(rng, in_dim, embed_dim, dtype), requires_grad=True)
        t["w_neigh"] = Tensor(glorot_uniform(rng, in_dim, embed_dim, dtype), requires_grad=True)
    return EncoderParams(pathway=pathway, tensors=t)


def neighbor_mean(g: Graph, x: np.ndarray) -> np.ndarray:
    """Mean of neighbor feature rows; isolated nodes get the zero vector."""
    src, dst = g.directed_edges()
    acc = np.zeros_like(np.asarray(x, dtype=np.float64))
    np.add.at(acc, dst, np.asarray(x, dtype=np.float64)[src])
    deg = g.degrees.astype(np.float64)
    safe = np.where(deg == 0, 1.0, deg)
    return acc / safe[:, None]


def encode(g: Graph, x: np.ndarray, p: EncoderParams, tape: Tape) -> Tensor:
    """Produce the (N, h) initial embedding for the configured pathway."""
    if np.asarray(x).shape[0] != g.n_nodes:
        raise ValueError("feature row count must match node count")
    dtype = next(iter(p.tensors.values())).data.dtype
    xt = Tensor(np.asarray(x, dtype=dtype))
    if p.pathway is EncoderKind.ISOLATING:
        h = xt
        i = 0
        while f"mlp_w{i}" in p.tensors:
            h = ad.matmul(tape, h, p.tensors[f"mlp_w{i}"])
            h = ad.add(tape, h, p.tensors[f"mlp_b{i}"])
            h = ad.tanh(tape, h)
            i += 1
        return h
    nm = Tensor(neighbor_mean(g, x).astype(dtype))
    own = ad.matmul(tape, xt, p.tensors["w_self"])
    agg = ad.matmul(tape, nm, p.tensors["w_neigh"])
    return ad.tanh(tape, ad.add(tape, own, agg))
