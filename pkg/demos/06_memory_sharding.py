"""Memory-sharded loss evaluation equals the dense path exactly.

Shows the shard decision rule for a few problem sizes, then runs one training
epoch twice -- once with a threshold large enough to stay dense, once forcing
many chunks -- and compares every parameter gradient.
"""
import numpy as np

from echograph.contrastive import shard_decision
from echograph.rng import Rng
from echograph.router import RouterConfig, route
from echograph.synth import FeatureSynthConfig, LfrConfig, generate_lfr, synthesize_features
from echograph.trainer import TrainConfig, train


def main():
    print("shard decision (threshold 200,000,000 elements):")
    for n, p, d in ((5_000, 256, 128), (10_000, 256, 128), (1_600_000, 256, 128)):
        sharded, chunk = shard_decision(n, p, d, 200_000_000)
        print(f"  N={n:>9,} P={p} d={d}: sharded={sharded!s:5}  chunk={chunk:,} nodes")
    print()

    rng = Rng(0)
    g, truth = generate_lfr(LfrConfig(n=500, mu=0.4, seed=0), rng)
    x = synthesize_features(g, truth, FeatureSynthConfig(), rng)
    report = route(g, x, RouterConfig(), Rng(0))

    grads = {}
    for label, threshold in (("dense", 10**9), ("sharded", 500 * 256 * 32 // 16)):
        cfg = TrainConfig(epochs=1, seed=0, embed_dim=32, shard_elem_threshold=threshold)
        params, _, _, tr = train(g, x, report, cfg)
        grads[label] = {k: t.grad for k, t in params.items()}
        print(f"{label:7s}: loss={tr.history[0].total:.6f} "
              f"chunks={tr.history[0].chunks_used}")

    worst = max(np.max(np.abs(grads["dense"][k] - grads["sharded"][k]))
                for k in grads["dense"])
    print(f"largest absolute gradient difference: {worst:.3e}")


if __name__ == "__main__":
    main()
