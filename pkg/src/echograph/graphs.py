"""Graph, feature-matrix, and partition containers plus file IO.

A ``Graph`` is an immutable undirected simple graph held in compressed
sparse row form (offsets + sorted neighbor targets). Node ids are dense and
0-based. Feature matrices are plain float numpy arrays, one row per node.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FEATURE_MAGIC = b"ECHF"
EMBEDDING_MAGIC = b"ECHE"


@dataclass(eq=False)
class Graph:
    n_nodes: int
    edges: np.ndarray          # (E, 2), u < v, lexicographically sorted
    indptr: np.ndarray         # (n_nodes + 1,)
    indices: np.ndarray        # sorted neighbor targets, len = 2E
    node_ids: Optional[np.ndarray] = None   # original ids if the loader remapped
    dropped_self_loops: int = 0
    _directed: Optional[tuple] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n_nodes: int, edges, dropped_self_loops: int = 0,
                   node_ids=None) -> "Graph":
        """Canonicalize an edge collection: drop self-loops, dedup, sort."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= n_nodes:
                raise ValueError("edge endpoint out of range")
            loops = e[:, 0] == e[:, 1]
            dropped_self_loops += int(loops.sum())
            e = e[~loops]
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            e = np.unique(np.stack([lo, hi], axis=1), axis=0)
        else:
            e = e.reshape(0, 2)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n_nodes=n_nodes, edges=e, indptr=indptr, indices=dst,
                   node_ids=node_ids, dropped_self_loops=dropped_self_loops)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.indptr[1:] - self.indptr[:-1]

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def directed_edges(self):
        """(src, dst) arrays covering both directions of every edge."""
        if self._directed is None:
            src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            self._directed = (src, dst)
        return self._directed


def mean_degree(g: Graph) -> float:
    if g.n_nodes < 1:
        raise ValueError("mean_degree requires at least one node")
    return 2.0 * g.n_edges / g.n_nodes


class Partition:
    """Node -> community assignment with permutation-invariant equality.

    The canonical form relabels community ids by order of first appearance,
    so two partitions that differ only by a relabeling compare equal.
    """

    def __init__(self, assignment):
        a = np.asarray(assignment, dtype=np.int64).ravel()
        self.assignment = _canonicalize(a)

    @property
    def n_nodes(self) -> int:
        return self.assignment.size

    @property
    def n_communities(self) -> int:
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def __repr__(self):
        return f"Partition(n={self.n_nodes}, communities={self.n_communities})"


def _canonicalize(a: np.ndarray) -> np.ndarray:
    _, first = np.unique(a, return_index=True)
    labels_in_order = a[np.sort(first)]
    remap = {int(lab): i for i, lab in enumerate(labels_in_order)}
    return np.array([remap[int(x)] for x in a], dtype=np.int64)


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------

def load_edge_list(path, zero_indexed: bool = True) -> Graph:
    """Read a whitespace-separated "u v" edge file ("#" comments ignored).

    Self-loop lines are dropped (counted on the returned graph, with a
    warning); duplicate edges are deduplicated. With ``zero_indexed`` the ids
    are used as-is and trailing isolated nodes exist up to the max id; without
    it, arbitrary external ids are remapped to dense 0-based ids and the
    original ids are kept on ``Graph.node_ids``.
    """
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise ValueError(f"{path}:{lineno}: expected two integer tokens, got {text!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: non-integer token in {text!r}") from err
            pairs.append((u, v))
    e = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    node_ids = None
    if zero_indexed:
        if e.size and e.min() < 0:
            raise ValueError(f"{path}: negative node id with zero_indexed=True")
        n = int(e.max()) + 1 if e.size else 0
    else:
        uniq = np.unique(e)
        remap = {int(x): i for i, x in enumerate(uniq)}
        e = np.array([[remap[int(u)], remap[int(v)]] for u, v in e], dtype=np.int64).reshape(-1, 2)
        n = uniq.size
        node_ids = uniq
    g = Graph.from_edges(n, e, node_ids=node_ids)
    if g.dropped_self_loops:
        warnings.warn(f"{path}: dropped {g.dropped_self_loops} self-loop line(s)")
    return g


def save_edge_list(path, g: Graph) -> None:
    with open(path, "w") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def load_features_csv(path) -> np.ndarray:
    """Rectangular numeric CSV, one row per node (row order = node order)."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            cells = text.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ValueError(f"{path}:{lineno}: ragged row ({len(cells)} cells, expected {width})")
            try:
                rows.append([float(c) for c in cells])
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from err
    if not rows:
        raise ValueError(f"{path}: no rows")
    x = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{path}: non-finite feature value")
    return x


def save_features_csv(path, x: np.ndarray) -> None:
    np.savetxt(path, np.asarray(x), delimiter=",", fmt="%.10g")


def _write_matrix(path, x: np.ndarray, magic: bytes) -> None:
    x = np.ascontiguousarray(x, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<QQ", x.shape[0], x.shape[1]))
        fh.write(x.astype("<f4").tobytes())


def _read_matrix(path, magic: bytes) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head != magic:
            raise ValueError(f"{path}: bad magic {head!r}, expected {magic!r}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        payload = fh.read(rows * cols * 4)
        if len(payload) != rows * cols * 4:
            raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float32)


def save_features_binary(path, x: np.ndarray) -> None:
    """Little-endian container: magic "ECHF", u64 rows, u64 cols, f32 row-major."""
    _write_matrix(path, x, FEATURE_MAGIC)


def load_features_binary(path) -> np.ndarray:
    return _read_matrix(path, FEATURE_MAGIC)


def load_features(path) -> np.ndarray:
    """Dispatch on the magic bytes: binary container or plain CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == FEATURE_MAGIC:
        return load_features_binary(path)
    return load_features_csv(path)


def save_embeddings(path, x: np.ndarray) -> None:
    """Embedding container: magic "ECHE", u64 N, u64 h, f32 rows."""
    _write_matrix(path, x, EMBEDDING_MAGIC)


def load_embeddings(path) -> np.ndarray:
    return _read_matrix(path, EMBEDDING_MAGIC)


def save_partition(path, p: Partition) -> None:
    """One community id per line; line i is node i."""
    with open(path, "w") as fh:
        for c in p.assignment:
            fh.write(f"{c}\n")


def load_partition(path) -> Partition:
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                labels.append(int(text))
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: non-integer community id {text!r}") from err
    return Partition(labels)
