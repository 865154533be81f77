"""Partition-quality metrics and the evaluation report."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict

import numpy as np

from .graphs import Partition


def nmi(truth: Partition, pred: Partition) -> float:
    """Normalized mutual information 2I/(H(Y)+H(C)), natural logs.

    1 means identical clusterings, 0 independent. If both partitions are a
    single cluster (H(Y)+H(C) = 0) they are trivially identical and the
    value is 1; a single-cluster prediction against a multi-cluster truth
    scores 0.
    """
    a, b = truth.assignment, pred.assignment
    if a.size != b.size:
        raise ValueError("partitions cover different node counts")
    n = a.size
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.float64)
    np.add.at(table, (a, b), 1.0)
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    pj = table / n
    h_a = -np.sum(pa[pa > 0] * np.log(pa[pa > 0]))
    h_b = -np.sum(pb[pb > 0] * np.log(pb[pb > 0]))
    if h_a + h_b == 0.0:
        return 1.0
    mask = pj > 0
    mi = np.sum(pj[mask] * (np.log(pj[mask]) - np.log(np.outer(pa, pb)[mask])))
    return float(np.clip(2.0 * mi / (h_a + h_b), 0.0, 1.0))


@dataclass
class EvalReport:
    nmi: float
    n_communities_pred: int
    n_communities_true: int
    modularity_pred: float
    runtime_seconds: Dict[str, float] = field(default_factory=dict)
    throughput_nodes_per_second: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def evaluate(g, truth: Partition, pred: Partition, timings: Dict[str, float] | None = None,
             modularity_pred: float = 0.0) -> EvalReport:
    timings = dict(timings or {})
    total = sum(timings.values())
    throughput = g.n_nodes / total if total > 0 else 0.0
    return EvalReport(
        nmi=nmi(truth, pred),
        n_communities_pred=pred.n_communities,
        n_communities_true=truth.n_communities,
        modularity_pred=modularity_pred,
        runtime_seconds=timings,
        throughput_nodes_per_second=throughput,
    )
