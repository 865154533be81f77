"""End-to-end pipeline composition and the flat key=value config format."""
from __future__ import annotations

import time
from dataclasses import dataclass, fields

import numpy as np

from .clustering import LouvainConfig, louvain, modularity
from .extraction import ExtractConfig, extract_similarity_graph
from .graphs import Graph, Partition
from .rng import Rng
from .router import EncoderKind, RouterConfig, RouterReport, route
from .trainer import TrainConfig, train


@dataclass
class PipelineConfig:
    """Union of all phase configs, loadable from a flat key=value file.

    Unknown keys are rejected; CLI flags override file values.
    """
    encoder: str = "auto"              # auto | isolating | densifying
    degree_threshold: float = 20.0
    homophily_threshold: float = 1.5
    sparsity_threshold: float = 0.85
    steps: int = 1
    temperature: float = 0.1
    sparsity_lambda: float = 1e-4
    neg_per_node: int = 256
    epsilon: float = 1e-8
    epochs: int = 200
    learning_rate: float = 5e-4
    weight_decay: float = 5e-4
    shard_threshold: int = 200_000_000
    embed_dim: int = 128
    k_min: int = 5
    k_max: int = 30
    delta: float = 0.15
    chunk_rows: int = 4096
    one_sided: bool = False
    resolution: float = 1.0
    max_passes: int = 20
    seed: int = 0

    # keys as they appear in config files (lambda is a Python keyword)
    _ALIASES = {"lambda": "sparsity_lambda", "lr": "learning_rate",
                "kmin": "k_min", "kmax": "k_max", "temp": "temperature"}

    @classmethod
    def field_names(cls):
        return {f.name for f in fields(cls)}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        cfg = cls()
        cfg.update(d)
        return cfg

    def update(self, d: dict) -> None:
        names = self.field_names()
        for key, value in d.items():
            name = self._ALIASES.get(key, key)
            if name not in names:
                raise KeyError(f"unknown config key {key!r}")
            current = getattr(self, name)
            if isinstance(current, bool):
                value = str(value).strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                value = int(value)
            elif isinstance(current, float):
                value = float(value)
            else:
                value = str(value)
            setattr(self, name, value)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        cfg = cls()
        cfg.update(parse_config_file(path))
        return cfg

    def router_config(self) -> RouterConfig:
        force = None
        if self.encoder == "isolating":
            force = EncoderKind.ISOLATING
        elif self.encoder == "densifying":
            force = EncoderKind.DENSIFYING
        elif self.encoder != "auto":
            raise ValueError(f"unknown encoder {self.encoder!r}")
        return RouterConfig(degree_threshold=self.degree_threshold,
                            homophily_threshold=self.homophily_threshold,
                            sparsity_threshold=self.sparsity_threshold,
                            force=force)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate,
                           weight_decay=self.weight_decay, seed=self.seed,
                           steps=self.steps, temperature=self.temperature,
                           sparsity_lambda=self.sparsity_lambda,
                           neg_per_node=self.neg_per_node, epsilon=self.epsilon,
                           shard_elem_threshold=self.shard_threshold,
                           embed_dim=self.embed_dim)

    def extract_config(self) -> ExtractConfig:
        return ExtractConfig(k_min=self.k_min, k_max=self.k_max, delta=self.delta,
                             chunk_rows=self.chunk_rows, one_sided=self.one_sided)

    def louvain_config(self) -> LouvainConfig:
        return LouvainConfig(max_passes=self.max_passes, resolution=self.resolution,
                             seed=self.seed)

    def as_flat_dict(self) -> dict:
        inverse = {v: k for k, v in self._ALIASES.items()}
        out = {}
        for f in fields(self):
            out[inverse.get(f.name, f.name)] = getattr(self, f.name)
        return out


def parse_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, value = text.split("=", 1)
            out[key.strip()] = value.strip()
    return out


@dataclass
class DetectResult:
    partition: Partition
    route_report: RouterReport
    modularity: float
    embeddings: np.ndarray
    timings: dict


def detect(g: Graph, x: np.ndarray, cfg: PipelineConfig) -> DetectResult:
    """route -> train -> extract -> louvain, with per-phase timings."""
    t0 = time.perf_counter()
    report = route(g, x, cfg.router_config(), Rng(cfg.seed))
    t1 = time.perf_counter()
    _, s, _, _ = train(g, x, report, cfg.train_config())
    t2 = time.perf_counter()
    sg = extract_similarity_graph(s.data, g, cfg.extract_config())
    p = louvain(sg, cfg.louvain_config(), Rng(cfg.seed))
    t3 = time.perf_counter()
    q = modularity(sg, p, cfg.resolution) if sg.n_edges else 0.0
    total = t3 - t0
    timings = {
        "phase1_s": t1 - t0,
        "phase2_s": t2 - t1,
        "phase3_s": t3 - t2,
        "total_s": total,
        "nodes_per_s": g.n_nodes / total if total > 0 else 0.0,
    }
    return DetectResult(partition=p, route_report=report, modularity=q,
                        embeddings=s.data, timings=timings)
