"""LFR-style benchmark generation and noisy feature synthesis.

Degrees follow a truncated power law rescaled to the requested mean;
community sizes follow their own power law; each node splits its degree
into round((1 - mu) * deg) intra-community stubs and the rest
inter-community. Stubs are matched configuration-model style with
rejection of self-loops, duplicates, and (for external stubs) same-community
pairs, followed by a bounded swap-repair pass; irreparable stubs are
dropped, which the +-10% mean-degree tolerance absorbs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, Partition
from .rng import Rng

_RESHUFFLE_ROUNDS = 60
_SWAP_TRIES = 80


@dataclass
class LfrConfig:
    n: int
    mean_degree: float = 15.0
    max_degree: int = 50
    mu: float = 0.5
    degree_exponent: float = 2.0
    community_exponent: float = 1.0
    min_community: int = 20
    max_community: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError("mu must lie in [0, 1]")
        if not (1 <= self.min_community <= self.max_community <= self.n):
            raise ValueError("need min_community <= max_community <= n")
        if self.mean_degree >= self.max_degree:
            raise ValueError("mean_degree must be below max_degree")


@dataclass
class FeatureSynthConfig:
    noise_sigma: float = 0.5
    include_degree: bool = True

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def _powerlaw_sample(rng: Rng, lo: float, hi: float, exponent: float, size: int) -> np.ndarray:
    """Inverse-CDF draws from p(x) ~ x^-exponent on [lo, hi]."""
    u = rng.random(size=size)
    if abs(exponent - 1.0) < 1e-9:
        return lo * (hi / lo) ** u
    a = 1.0 - exponent
    return (lo ** a + u * (hi ** a - lo ** a)) ** (1.0 / a)


def _powerlaw_mean(lo: float, hi: float, exponent: float) -> float:
    if abs(exponent - 1.0) < 1e-9:
        return (hi - lo) / np.log(hi / lo)
    if abs(exponent - 2.0) < 1e-9:
        a = 1.0 - exponent
        return np.log(hi / lo) / ((hi ** a - lo ** a) / a)
    a1, a2 = 1.0 - exponent, 2.0 - exponent
    return ((hi ** a2 - lo ** a2) / a2) / ((hi ** a1 - lo ** a1) / a1)


def _sample_degrees(cfg: LfrConfig, rng: Rng) -> np.ndarray:
    # bisect the lower cutoff so the truncated power law hits the target mean
    lo, hi = 1.0, float(cfg.max_degree) - 1e-6
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _powerlaw_mean(mid, cfg.max_degree, cfg.degree_exponent) < cfg.mean_degree:
            lo = mid
        else:
            hi = mid
    deg = np.rint(_powerlaw_sample(rng, lo, cfg.max_degree, cfg.degree_exponent, cfg.n))
    deg = np.clip(deg, 1, cfg.max_degree).astype(np.int64)
    # nudge random nodes until the realized mean is close and the sum is even
    target = cfg.mean_degree * cfg.n
    for _ in range(10 * cfg.n):
        diff = deg.sum() - target
        if abs(diff) <= max(1.0, 0.02 * target) and deg.sum() % 2 == 0:
            break
        i = int(rng.integers(0, cfg.n))
        if diff > 0 and deg[i] > 1:
            deg[i] -= 1
        elif diff <= 0 and deg[i] < cfg.max_degree:
            deg[i] += 1
    if deg.sum() % 2 == 1:
        i = int(np.argmax(deg < cfg.max_degree))
        deg[i] += 1
    return deg


def _sample_community_sizes(cfg: LfrConfig, rng: Rng) -> np.ndarray:
    sizes = []
    while sum(sizes) < cfg.n:
        s = int(np.rint(_powerlaw_sample(rng, cfg.min_community, cfg.max_community,
                                         cfg.community_exponent, 1)[0]))
        sizes.append(int(np.clip(s, cfg.min_community, cfg.max_community)))
    excess = sum(sizes) - cfg.n
    # shave the excess off communities that sit above the minimum
    i = 0
    guard = 0
    while excess > 0:
        if sizes[i] > cfg.min_community:
            sizes[i] -= 1
            excess -= 1
        i = (i + 1) % len(sizes)
        guard += 1
        if guard > 10 * (excess + len(sizes) + 1) + 1000:
            # everyone at the minimum: drop one community and grow the rest
            dropped = sizes.pop()
            excess -= dropped
            if excess < 0:
                j = 0
                while excess < 0:
                    if sizes[j] < cfg.max_community:
                        sizes[j] += 1
                        excess += 1
                    j = (j + 1) % len(sizes)
            guard = 0
    return np.asarray(sizes, dtype=np.int64)


def _assign_communities(deg: np.ndarray, sizes: np.ndarray, mu: float, rng: Rng):
    """Place nodes so round((1-mu)*deg) fits inside the community when
    possible; returns (assignment, internal degree per node)."""
    n = deg.size
    d_int = np.rint((1.0 - mu) * deg).astype(np.int64)
    capacity = sizes.copy()
    assign = np.full(n, -1, dtype=np.int64)
    order = np.argsort(-d_int, kind="stable")
    for u in order:
        feasible = np.flatnonzero((capacity > 0) & (sizes - 1 >= d_int[u]))
        if feasible.size:
            c = int(feasible[rng.integers(0, feasible.size)])
        else:
            open_c = np.flatnonzero(capacity > 0)
            if open_c.size == 0:
                raise RuntimeError("community capacities exhausted")
            c = int(open_c[np.argmax(sizes[open_c])])
            d_int[u] = min(d_int[u], sizes[c] - 1)
        assign[u] = c
        capacity[c] -= 1
    return assign, d_int


def _pair_stubs(stubs: np.ndarray, rng: Rng, forbidden, same_group=None):
    """Match stubs into simple edges; returns (edges, leftover stub count).

    ``forbidden`` is a set of canonical (u, v) pairs that already exist.
    ``same_group``, when given, maps node -> group id and same-group pairs
    are rejected too.
    """
    edges = []
    pool = stubs.copy()
    for _ in range(_RESHUFFLE_ROUNDS):
        if pool.size < 2:
            break
        rng.shuffle(pool)
        bad = []
        for i in range(0, pool.size - 1, 2):
            u, v = int(pool[i]), int(pool[i + 1])
            key = (u, v) if u < v else (v, u)
            if u == v or key in forbidden or (same_group is not None and same_group[u] == same_group[v]):
                bad.extend((u, v))
                continue
            forbidden.add(key)
            edges.append(key)
        if pool.size % 2 == 1:
            bad.append(int(pool[-1]))
        pool = np.asarray(bad, dtype=np.int64)
        if pool.size < 2:
            break
    # swap-repair: splice leftover stubs into existing edges
    leftovers = list(pool)
    still = []
    while len(leftovers) >= 2:
        u = leftovers.pop()
        v = leftovers.pop()
        done = False
        for _ in range(_SWAP_TRIES):
            if not edges:
                break
            j = int(rng.integers(0, len(edges)))
            a, b = edges[j]
            cand1 = (min(u, a), max(u, a))
            cand2 = (min(v, b), max(v, b))
            ok = (u != a and v != b and cand1 != cand2
                  and cand1 not in forbidden and cand2 not in forbidden
                  and (same_group is None or (same_group[u] != same_group[a]
                                              and same_group[v] != same_group[b])))
            if ok:
                forbidden.discard((a, b))
                forbidden.add(cand1)
                forbidden.add(cand2)
                edges[j] = cand1
                edges.append(cand2)
                done = True
                break
        if not done:
            still.extend((u, v))
    return edges, len(still) + len(leftovers)


def generate_lfr(cfg: LfrConfig, rng: Rng | None = None):
    """Returns (Graph, planted Partition)."""
    if rng is None:
        rng = Rng(cfg.seed)
    deg = _sample_degrees(cfg, rng)
    sizes = _sample_community_sizes(cfg, rng)
    assign, d_int = _assign_communities(deg, sizes, cfg.mu, rng)
    d_int = np.minimum(d_int, deg)

    forbidden: set = set()
    all_edges = []
    for c in range(sizes.size):
        members = np.flatnonzero(assign == c)
        local = d_int[members]
        if local.sum() % 2 == 1:
            # flip one member's internal degree to even the stub count
            room = np.flatnonzero((local < np.minimum(members.size - 1, deg[members])))
            if room.size:
                j = int(room[rng.integers(0, room.size)])
                local[j] += 1
            else:
                # no member can grow: drop the half-edge outright instead of
                # turning it into an external stub (matters when mu = 0)
                j = int(np.argmax(local))
                local[j] -= 1
                deg[members[j]] -= 1
            d_int[members] = local
        stubs = np.repeat(members, local)
        edges, _ = _pair_stubs(stubs, rng, forbidden)
        all_edges.extend(edges)

    d_ext = deg - d_int
    ext_stubs = np.repeat(np.arange(cfg.n), d_ext)
    if ext_stubs.size % 2 == 1:
        ext_stubs = ext_stubs[:-1]
    if ext_stubs.size:
        edges, _ = _pair_stubs(ext_stubs, rng, forbidden, same_group=assign)
        all_edges.extend(edges)

    g = Graph.from_edges(cfg.n, np.asarray(all_edges, dtype=np.int64).reshape(-1, 2))
    realized = 2.0 * g.n_edges / cfg.n
    if abs(realized - cfg.mean_degree) > 0.1 * cfg.mean_degree + 1.0:
        raise RuntimeError(f"generator missed the target mean degree: {realized:.2f} vs {cfg.mean_degree}")
    return g, Partition(assign)


def synthesize_features(g: Graph, truth: Partition, cfg: FeatureSynthConfig,
                        rng: Rng | None = None) -> np.ndarray:
    """Normalized degree column + one-hot community columns, all obscured by
    i.i.d. Gaussian noise."""
    if truth.n_nodes != g.n_nodes:
        raise ValueError("truth must cover every node")
    if rng is None:
        rng = Rng(0)
    k = truth.n_communities
    cols = []
    if cfg.include_degree:
        max_deg = max(int(g.degrees.max()), 1)
        cols.append((g.degrees / max_deg).reshape(-1, 1))
    onehot = np.zeros((g.n_nodes, k))
    onehot[np.arange(g.n_nodes), truth.assignment] = 1.0
    cols.append(onehot)
    x = np.concatenate(cols, axis=1)
    if cfg.noise_sigma > 0:
        x = x + rng.normal(0.0, cfg.noise_sigma, size=x.shape)
    return x
