"""Command-line interface exposing the pipeline phases.

Subcommands mirror the phase structure: ``route``, ``train``, ``extract``,
``cluster``, ``lpa``, ``eval``, ``gen-lfr``, and the all-in-one ``detect``.
Exit codes: 0 success, 1 runtime failure, 2 usage or IO error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .clustering import lpa, louvain, modularity
from .extraction import extract_similarity_graph, load_similarity_graph, save_similarity_graph
from .graphs import (Graph, Partition, load_edge_list, load_embeddings,
                     load_features, load_partition, save_edge_list,
                     save_embeddings, save_features_csv, save_partition)
from .metrics import evaluate, nmi
from .pipeline import DetectResult, PipelineConfig, detect
from .rng import Rng
from .router import route
from .synth import FeatureSynthConfig, LfrConfig, generate_lfr, synthesize_features
from .trainer import train


class UsageError(Exception):
    pass


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for flag, key in [("steps", "steps"), ("temp", "temp"), ("sparsity_lambda", "lambda"),
                      ("neg", "neg_per_node"), ("epochs", "epochs"), ("lr", "lr"),
                      ("seed", "seed"), ("shard_threshold", "shard_threshold"),
                      ("kmin", "kmin"), ("kmax", "kmax"), ("delta", "delta"),
                      ("resolution", "resolution"), ("encoder", "encoder"),
                      ("embed_dim", "embed_dim"), ("chunk_rows", "chunk_rows"),
                      ("one_sided", "one_sided")]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    cfg.update(overrides)
    return cfg


def _load_inputs(args):
    try:
        g = load_edge_list(args.graph)
    except OSError as err:
        raise UsageError(f"cannot read graph file {args.graph}: {err}") from err
    try:
        x = load_features(args.features)
    except OSError as err:
        raise UsageError(f"cannot read features file {args.features}: {err}") from err
    if x.shape[0] < g.n_nodes:
        raise UsageError(f"feature rows ({x.shape[0]}) < nodes ({g.n_nodes})")
    if x.shape[0] > g.n_nodes:
        # trailing isolated nodes exist only in the feature file
        g = Graph.from_edges(x.shape[0], g.edges)
    return g, x


def _print_kv(pairs):
    for k, v in pairs:
        print(f"{k}={v}")


def cmd_route(args) -> int:
    g, x = _load_inputs(args)
    cfg = _load_config(args)
    report = route(g, x, cfg.router_config(), Rng(cfg.seed))
    _print_kv([
        ("feature_sparsity", f"{report.feature_sparsity:.6f}"),
        ("mean_degree", f"{report.mean_degree:.6f}"),
        ("assortativity_ratio", f"{report.assortativity_ratio:.6f}"),
        ("decision", report.decision.value),
        ("sample_pairs_used", report.sample_pairs_used),
    ])
    return 0


def cmd_train(args) -> int:
    g, x = _load_inputs(args)
    cfg = _load_config(args)
    report = route(g, x, cfg.router_config(), Rng(cfg.seed))
    _, s, alpha, train_report = train(g, x, report, cfg.train_config())
    if args.dump_embeddings:
        save_embeddings(args.dump_embeddings, s.data)
    if args.dump_attention:
        with open(args.dump_attention, "w") as fh:
            for u, v, a in zip(alpha.src, alpha.dst, alpha.values.data[:, 0]):
                fh.write(f"{u} {v} {a:.8g}\n")
    last = train_report.history[-1]
    _print_kv([
        ("decision", report.decision.value),
        ("epochs", len(train_report.history)),
        ("final_loss", f"{last.total:.6f}"),
        ("final_contrastive", f"{last.contrastive:.6f}"),
        ("sharded", str(last.sharded).lower()),
        ("train_seconds", f"{train_report.train_seconds:.3f}"),
    ])
    return 0


def cmd_extract(args) -> int:
    try:
        s = load_embeddings(args.embeddings)
        g = load_edge_list(args.graph)
    except OSError as err:
        raise UsageError(str(err)) from err
    if g.n_nodes < s.shape[0]:
        g = Graph.from_edges(s.shape[0], g.edges)
    cfg = _load_config(args)
    sg = extract_similarity_graph(s, g, cfg.extract_config())
    save_similarity_graph(args.out, sg)
    _print_kv([("nodes", sg.n_nodes), ("edges", sg.n_edges)])
    return 0


def cmd_cluster(args) -> int:
    try:
        sg = load_similarity_graph(args.sim)
    except OSError as err:
        raise UsageError(str(err)) from err
    cfg = _load_config(args)
    p = louvain(sg, cfg.louvain_config(), Rng(cfg.seed))
    save_partition(args.out, p)
    _print_kv([("communities", p.n_communities),
               ("modularity", f"{modularity(sg, p, cfg.resolution):.6f}")])
    return 0


def cmd_lpa(args) -> int:
    try:
        g = load_edge_list(args.graph)
    except OSError as err:
        raise UsageError(str(err)) from err
    p = lpa(g, max_iters=args.max_iters, rng=Rng(args.seed))
    save_partition(args.out, p)
    _print_kv([("communities", p.n_communities)])
    return 0


def cmd_eval(args) -> int:
    try:
        truth = load_partition(args.truth)
        pred = load_partition(args.pred)
    except OSError as err:
        raise UsageError(str(err)) from err
    value = nmi(truth, pred)
    _print_kv([
        ("nmi", f"{value:.6f}"),
        ("n_communities_true", truth.n_communities),
        ("n_communities_pred", pred.n_communities),
    ])
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"nmi": value,
                       "n_communities_true": truth.n_communities,
                       "n_communities_pred": pred.n_communities}, fh, indent=2)
    return 0


def cmd_gen_lfr(args) -> int:
    cfg = LfrConfig(n=args.n, mean_degree=args.mean_degree, max_degree=args.max_degree,
                    mu=args.mu, seed=args.seed)
    rng = Rng(args.seed)
    g, truth = generate_lfr(cfg, rng)
    x = synthesize_features(g, truth, FeatureSynthConfig(noise_sigma=args.noise_sigma), rng)
    save_edge_list(f"{args.out_prefix}.edges", g)
    save_partition(f"{args.out_prefix}.truth", truth)
    save_features_csv(f"{args.out_prefix}.features.csv", x)
    _print_kv([("nodes", g.n_nodes), ("edges", g.n_edges),
               ("communities", truth.n_communities),
               ("mean_degree", f"{2 * g.n_edges / g.n_nodes:.3f}")])
    return 0


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    if args.dry_run:
        _print_kv(sorted(cfg.as_flat_dict().items()))
        return 0
    g, x = _load_inputs(args)
    result: DetectResult = detect(g, x, cfg)
    save_partition(args.out, result.partition)
    pairs = [
        ("decision", result.route_report.decision.value),
        ("communities", result.partition.n_communities),
        ("modularity", f"{result.modularity:.6f}"),
    ]
    if args.timings:
        for key in ("phase1_s", "phase2_s", "phase3_s", "total_s", "nodes_per_s"):
            pairs.append((key, f"{result.timings[key]:.6f}"))
    _print_kv(pairs)
    if args.truth:
        truth = load_partition(args.truth)
        print(f"nmi={nmi(truth, result.partition):.6f}")
    if args.json:
        timings = {k: result.timings[k] for k in ("phase1_s", "phase2_s", "phase3_s")}
        report = evaluate(g, load_partition(args.truth) if args.truth else result.partition,
                          result.partition, timings, result.modularity)
        with open(args.json, "w") as fh:
            fh.write(report.to_json())
    return 0


def cmd_version(args) -> int:
    _print_kv([("version", __version__), ("python", sys.version.split()[0]),
               ("numpy", np.__version__)])
    return 0


def _add_config_flags(p: argparse.ArgumentParser, train_flags=False, extract_flags=False,
                      cluster_flags=False):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None)
    if train_flags:
        p.add_argument("--steps", type=int, default=None, help="diffusion steps K")
        p.add_argument("--temp", type=float, default=None, help="contrastive temperature")
        p.add_argument("--lambda", dest="sparsity_lambda", type=float, default=None,
                       help="attention sparsity penalty")
        p.add_argument("--neg", type=int, default=None, help="negatives per node")
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--shard-threshold", dest="shard_threshold", type=int, default=None)
        p.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
        p.add_argument("--encoder", choices=["auto", "isolating", "densifying"], default=None)
    if extract_flags:
        p.add_argument("--kmin", type=int, default=None)
        p.add_argument("--kmax", type=int, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--chunk-rows", dest="chunk_rows", type=int, default=None)
        p.add_argument("--one-sided", dest="one_sided", action="store_const", const=True,
                       default=None, help="keep edges on one-sided top-k membership")
    if cluster_flags:
        p.add_argument("--resolution", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echo",
                                     description="Attributed-graph community detection pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("route", help="compute structural heuristics and the encoder decision")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    _add_config_flags(p, train_flags=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("train", help="train embeddings")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--dump-embeddings", dest="dump_embeddings")
    p.add_argument("--dump-attention", dest="dump_attention")
    _add_config_flags(p, train_flags=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="build the mutual top-k similarity graph")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p, extract_flags=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("cluster", help="Louvain modularity maximization")
    p.add_argument("--sim", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p, cluster_flags=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("lpa", help="label propagation baseline")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=100)
    p.set_defaults(func=cmd_lpa)

    p = sub.add_parser("eval", help="score a prediction against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--json", help="also write a JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-lfr", help="generate a synthetic benchmark")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--mean-degree", dest="mean_degree", type=float, default=15.0)
    p.add_argument("--max-degree", dest="max_degree", type=int, default=50)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", dest="out_prefix", required=True)
    p.set_defaults(func=cmd_gen_lfr)

    p = sub.add_parser("detect", help="full pipeline: route, train, extract, cluster")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default="partition.txt")
    p.add_argument("--truth", help="optional ground truth for an NMI line")
    p.add_argument("--json", help="write an evaluation report as JSON")
    p.add_argument("--timings", action="store_true", help="print per-phase seconds")
    p.add_argument("--dry-run", dest="dry_run", action="store_true",
                   help="echo the resolved config and exit")
    _add_config_flags(p, train_flags=True, extract_flags=True, cluster_flags=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("version", help="print build info")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, RuntimeError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
