"""Full-batch training loop: encode -> diffuse -> contrastive loss -> Adam.

Every epoch draws a fresh negative pool, runs the forward pass on a new
tape, backpropagates, and applies a bias-corrected Adam update with
decoupled weight decay. A final no-update forward pass produces the
embeddings and attention that downstream extraction consumes.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .contrastive import (DEFAULT_SHARD_ELEM_THRESHOLD, LossBreakdown,
                          LossConfig, compute_loss, sample_negatives)
from .diffusion import DiffusionParams, EdgeAttention, diffuse, init_diffusion
from .encoders import DEFAULT_EMBED_DIM, EncoderParams, encode, init_encoder
from .graphs import Graph
from .rng import Rng
from .router import RouterReport


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 5e-4
    weight_decay: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    steps: int = 1                     # diffusion K
    temperature: float = 0.1
    sparsity_lambda: float = 1e-4
    neg_per_node: int = 256
    epsilon: float = 1e-8
    shard_elem_threshold: int = DEFAULT_SHARD_ELEM_THRESHOLD
    embed_dim: int = DEFAULT_EMBED_DIM
    dtype: type = np.float32

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")

    def loss_config(self) -> LossConfig:
        return LossConfig(temperature=self.temperature, neg_per_node=self.neg_per_node,
                          epsilon=self.epsilon, sparsity_lambda=self.sparsity_lambda,
                          shard_elem_threshold=self.shard_elem_threshold)


@dataclass
class TrainReport:
    history: List[LossBreakdown] = field(default_factory=list)
    train_seconds: float = 0.0


class AdamState:
    def __init__(self, params: Dict[str, Tensor]):
        self.step = 0
        self.m = {k: np.zeros(v.shape, dtype=np.float64) for k, v in params.items()}
        self.v = {k: np.zeros(v.shape, dtype=np.float64) for k, v in params.items()}


def adam_step(params: Dict[str, Tensor], state: AdamState, cfg: TrainConfig) -> None:
    """Bias-corrected Adam; weight decay is decoupled (shrink, then delta)."""
    state.step += 1
    t = state.step
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros(p.shape, dtype=np.float64)
        w = p.data.astype(np.float64)
        if cfg.weight_decay:
            w -= cfg.learning_rate * cfg.weight_decay * w
        m = state.m[name] = b1 * state.m[name] + (1 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        w -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        p.data = w.astype(p.data.dtype)


def init_model(route: RouterReport, in_dim: int, cfg: TrainConfig, rng: Rng):
    enc = init_encoder(route.decision, in_dim, cfg.embed_dim, rng, dtype=cfg.dtype)
    diff = init_diffusion(cfg.embed_dim, cfg.steps, rng, dtype=cfg.dtype)
    return enc, diff


def collect_params(enc: EncoderParams, diff: DiffusionParams) -> Dict[str, Tensor]:
    out = {f"enc.{k}": v for k, v in enc.parameters().items()}
    out.update({f"diff.{k}": v for k, v in diff.parameters().items()})
    return out


def forward(g: Graph, x: np.ndarray, enc: EncoderParams, diff: DiffusionParams,
            tape: Tape):
    z0 = encode(g, x, enc, tape)
    return diffuse(z0, g, diff, tape)


def train(g: Graph, x: np.ndarray, route: RouterReport, cfg: TrainConfig):
    """Run the full loop; returns (params, final S, final attention, report)."""
    rng = Rng(cfg.seed)
    enc, diff = init_model(route, np.asarray(x).shape[1], cfg, rng)
    params = collect_params(enc, diff)
    state = AdamState(params)
    loss_cfg = cfg.loss_config()
    report = TrainReport()
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        tape = Tape()
        for p in params.values():
            p.zero_grad()
        s, alpha = forward(g, x, enc, diff, tape)
        pool = sample_negatives(g.n_nodes, cfg.neg_per_node, rng)
        try:
            breakdown = compute_loss(s, alpha, g, pool, loss_cfg, tape)
        except FloatingPointError as err:
            raise FloatingPointError(f"epoch {epoch}: {err}") from err
        ad.backward(breakdown.tensor, tape)
        adam_step(params, state, cfg)
        report.history.append(breakdown)
    # final forward without an update, for downstream extraction
    tape = Tape()
    s, alpha = forward(g, x, enc, diff, tape)
    report.train_seconds = time.perf_counter() - t0
    return params, s, alpha, report
