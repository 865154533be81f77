"""Structural heuristics and the encoder routing decision.

Three unsupervised metrics are computed before any training: feature
sparsity (fraction of exact zeros), mean degree, and an assortativity ratio
comparing edge-pair cosine similarity against random-pair cosine similarity.
Dense or low-homophily graphs are routed to the Isolating (MLP) encoder,
everything else to the Densifying (1-hop aggregate) encoder.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import Graph, mean_degree
from .rng import Rng

# Exact all-pairs enumeration is used instead of sampling below this size,
# which makes small-graph routing fully deterministic regardless of seed.
EXACT_PAIR_LIMIT = 2000


class EncoderKind(enum.Enum):
    ISOLATING = "isolating"
    DENSIFYING = "densifying"


@dataclass
class RouterConfig:
    degree_threshold: float = 20.0
    homophily_threshold: float = 1.5
    sparsity_threshold: float = 0.85
    random_pair_samples: Optional[int] = None   # default: min(10*N, 1e6)
    force: Optional[EncoderKind] = None

    def __post_init__(self):
        if self.degree_threshold <= 0 or self.homophily_threshold <= 0 or self.sparsity_threshold <= 0:
            raise ValueError("router thresholds must be positive")


@dataclass
class RouterReport:
    feature_sparsity: float
    mean_degree: float
    assortativity_ratio: float
    decision: EncoderKind
    sample_pairs_used: int


def feature_sparsity(x: np.ndarray) -> float:
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("feature matrix is empty")
    return float(np.count_nonzero(x == 0.0) / x.size)


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def assortativity_ratio(g: Graph, x: np.ndarray, rng: Rng,
                        samples: Optional[int] = None) -> tuple[float, int]:
    """Edge-pair mean cosine over random-pair mean cosine.

    Graphs with up to EXACT_PAIR_LIMIT nodes enumerate all unordered pairs
    exactly; larger graphs sample uniform (u, v) pairs with replacement,
    u != v. Zero-norm feature rows contribute cosine 0. Returns the ratio
    and the number of pairs that entered the denominator.
    """
    if g.n_edges < 1:
        raise ValueError("assortativity ratio undefined on a graph with no edges")
    n = g.n_nodes
    xh = _normalize_rows(x)
    edge_cos = float(np.mean(np.sum(xh[g.edges[:, 0]] * xh[g.edges[:, 1]], axis=1)))
    if n <= EXACT_PAIR_LIMIT:
        # mean over all ordered pairs u != v via the Gram identity
        total = np.sum(xh, axis=0)
        self_terms = float(np.sum(xh * xh))      # = count of nonzero rows
        pair_sum = float(total @ total) - self_terms
        pairs_used = n * (n - 1) // 2
        rand_cos = pair_sum / (n * (n - 1))
    else:
        if samples is None:
            samples = min(10 * n, 1_000_000)
        if samples < 1:
            raise ValueError("need at least one random pair sample")
        u = rng.integers(0, n, size=samples)
        v = rng.integers(0, n, size=samples)
        clash = u == v
        while np.any(clash):
            v[clash] = rng.integers(0, n, size=int(clash.sum()))
            clash = u == v
        rand_cos = float(np.mean(np.sum(xh[u] * xh[v], axis=1)))
        pairs_used = samples
    floor = 1e-9
    return edge_cos / max(rand_cos, floor), pairs_used


def route(g: Graph, x: np.ndarray, cfg: RouterConfig, rng: Rng) -> RouterReport:
    if np.asarray(x).shape[0] != g.n_nodes:
        raise ValueError("feature row count must match node count")
    rho = feature_sparsity(x)
    k = mean_degree(g)
    hr, pairs = assortativity_ratio(g, x, rng, cfg.random_pair_samples)
    if cfg.force is not None:
        decision = cfg.force
    elif k > cfg.degree_threshold or hr < cfg.homophily_threshold:
        decision = EncoderKind.ISOLATING
    else:
        decision = EncoderKind.DENSIFYING
    return RouterReport(feature_sparsity=rho, mean_degree=k,
                        assortativity_ratio=hr, decision=decision,
                        sample_pairs_used=pairs)
