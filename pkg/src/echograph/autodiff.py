"""Minimal reverse-mode autodiff over the fixed pipeline computation graph.

Supports exactly the ops the pipeline needs: dense matmul, broadcast add/mul,
tanh/exp/log, per-row concatenation, row gather/scatter over edge index
arrays, segment softmax/sum over incoming edges, row L2-normalization, scalar
reductions, and a fused chunked negative-pool energy. Forward values keep the
dtype of their inputs (float32 by default in training); gradients always
accumulate in float64.
"""
from __future__ import annotations

from typing import Callable, List, Optional

import numpy as np

# When enabled, every op output is checked for NaN/Inf and raises on failure.
DEBUG_CHECK_FINITE = False


class Tensor:
    """A 2-D value node. ``grad`` is allocated lazily, always float64."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError(f"Tensor must be 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def accumulate(self, g: np.ndarray):
        g = np.broadcast_to(g, self.data.shape)
        if self.grad is None:
            self.grad = g.astype(np.float64, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of executed ops; backward replays it exactly reversed."""

    def __init__(self):
        self._records: List[Callable[[], None]] = []
        self._consumed = False

    def record(self, backward_fn: Callable[[], None]):
        self._records.append(backward_fn)

    def __len__(self):
        return len(self._records)

    def reset(self):
        self._records.clear()
        self._consumed = False


def backward(loss: Tensor, tape: Tape):
    """Seed d(loss)/d(loss) = 1 and accumulate gradients into every leaf."""
    if tape._consumed:
        raise RuntimeError("backward() already called on this tape; reset() first")
    if loss.data.size != 1:
        raise ValueError("backward() expects a scalar (1x1) loss tensor")
    tape._consumed = True
    loss.accumulate(np.ones((1, 1), dtype=np.float64))
    for fn in reversed(tape._records):
        fn()


def _check(out: np.ndarray):
    if DEBUG_CHECK_FINITE and not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite value produced in forward op")
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum-reduce a gradient back onto a (possibly broadcast) input shape."""
    g = grad
    if g.shape[0] != shape[0]:
        g = g.sum(axis=0, keepdims=True)
    if g.shape[1] != shape[1]:
        g = g.sum(axis=1, keepdims=True)
    return g


def _needs(*tensors: Tensor) -> bool:
    return any(t.requires_grad for t in tensors)


def _segment_rowsum(rows: np.ndarray, index: np.ndarray, n_rows: int) -> np.ndarray:
    """Sum ``rows`` into ``n_rows`` buckets; sort + reduceat beats ufunc.at
    for wide row blocks."""
    out = np.zeros((n_rows, rows.shape[1]), dtype=rows.dtype)
    if index.size == 0:
        return out
    order = np.argsort(index, kind="stable")
    sidx = index[order]
    starts = np.flatnonzero(np.r_[True, sidx[1:] != sidx[:-1]])
    out[sidx[starts]] = np.add.reduceat(rows[order], starts, axis=0)
    return out


def constant(data, dtype=np.float32) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=False)


def matmul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    out = Tensor(_check(a.data @ b.data), requires_grad=_needs(a, b))
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            # heavy products run in the forward dtype; accumulation stays f64
            g = out.grad.astype(a.data.dtype) if a.data.dtype != np.float64 else out.grad
            if a.requires_grad:
                a.accumulate(g @ b.data.T)
            if b.requires_grad:
                b.accumulate(a.data.T @ g)
        tape.record(bwd)
    return out


def add(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(_check(a.data + b.data), requires_grad=_needs(a, b))
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            if a.requires_grad:
                a.accumulate(_unbroadcast(out.grad, a.shape))
            if b.requires_grad:
                b.accumulate(_unbroadcast(out.grad, b.shape))
        tape.record(bwd)
    return out


def sub(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(_check(a.data - b.data), requires_grad=_needs(a, b))
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            if a.requires_grad:
                a.accumulate(_unbroadcast(out.grad, a.shape))
            if b.requires_grad:
                b.accumulate(-_unbroadcast(out.grad, b.shape))
        tape.record(bwd)
    return out


def mul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(_check(a.data * b.data), requires_grad=_needs(a, b))
    if out.requires_grad:
        ad, bd = a.data, b.data
        def bwd():
            if out.grad is None:
                return
            if a.requires_grad:
                a.accumulate(_unbroadcast(out.grad * bd, a.shape))
            if b.requires_grad:
                b.accumulate(_unbroadcast(out.grad * ad, b.shape))
        tape.record(bwd)
    return out


def scale(tape: Tape, a: Tensor, c: float) -> Tensor:
    out = Tensor(_check(a.data * a.data.dtype.type(c)), requires_grad=a.requires_grad)
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            a.accumulate(out.grad * c)
        tape.record(bwd)
    return out


def tanh(tape: Tape, a: Tensor) -> Tensor:
    out = Tensor(_check(np.tanh(a.data)), requires_grad=a.requires_grad)
    if out.requires_grad:
        y = out.data
        def bwd():
            if out.grad is None:
                return
            a.accumulate(out.grad.astype(y.dtype) * (1.0 - y * y))
        tape.record(bwd)
    return out


def exp(tape: Tape, a: Tensor) -> Tensor:
    out = Tensor(_check(np.exp(a.data)), requires_grad=a.requires_grad)
    if out.requires_grad:
        y = out.data
        def bwd():
            if out.grad is None:
                return
            a.accumulate(out.grad * y)
        tape.record(bwd)
    return out


def log(tape: Tape, a: Tensor) -> Tensor:
    out = Tensor(_check(np.log(a.data)), requires_grad=a.requires_grad)
    if out.requires_grad:
        x = a.data
        def bwd():
            if out.grad is None:
                return
            a.accumulate(out.grad / x)
        tape.record(bwd)
    return out


def concat_rows(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """Concatenate corresponding rows: (n, p) ++ (n, q) -> (n, p + q)."""
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"concat_rows row mismatch: {a.shape} vs {b.shape}")
    out = Tensor(np.concatenate([a.data, b.data], axis=1), requires_grad=_needs(a, b))
    if out.requires_grad:
        p = a.shape[1]
        def bwd():
            if out.grad is None:
                return
            if a.requires_grad:
                a.accumulate(out.grad[:, :p])
            if b.requires_grad:
                b.accumulate(out.grad[:, p:])
        tape.record(bwd)
    return out


def gather_rows(tape: Tape, a: Tensor, index: np.ndarray) -> Tensor:
    """One output row per index entry, copied from ``a``."""
    idx = np.asarray(index, dtype=np.int64).ravel()
    out = Tensor(a.data[idx], requires_grad=a.requires_grad)
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            g = out.grad.astype(a.data.dtype) if a.data.dtype != np.float64 else out.grad
            a.accumulate(_segment_rowsum(g, idx, a.shape[0]))
        tape.record(bwd)
    return out


def scatter_add_rows(tape: Tape, a: Tensor, index: np.ndarray, n_rows: int) -> Tensor:
    """Sum rows of ``a`` into ``n_rows`` destination rows given by ``index``."""
    idx = np.asarray(index, dtype=np.int64).ravel()
    if idx.size and idx.max() >= n_rows:
        raise ValueError("scatter index out of range")
    out = Tensor(_check(_segment_rowsum(a.data, idx, n_rows)), requires_grad=a.requires_grad)
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            a.accumulate(out.grad[idx])
        tape.record(bwd)
    return out


def segment_sum(tape: Tape, a: Tensor, segment: np.ndarray, n_segments: int) -> Tensor:
    return scatter_add_rows(tape, a, segment, n_segments)


def segment_softmax(tape: Tape, scores: Tensor, segment: np.ndarray, n_segments: int) -> Tensor:
    """Softmax over rows of a column vector grouped by segment id.

    Each group of entries sharing a segment id sums to 1. Segments with no
    entries simply contribute nothing.
    """
    if scores.shape[1] != 1:
        raise ValueError("segment_softmax expects a column vector of scores")
    seg = np.asarray(segment, dtype=np.int64).ravel()
    if seg.size != scores.shape[0]:
        raise ValueError("segment index length must match score count")
    s = scores.data[:, 0]
    # subtract the per-segment max for numerical stability
    seg_max = np.full(n_segments, -np.inf, dtype=s.dtype)
    np.maximum.at(seg_max, seg, s)
    e = np.exp(s - seg_max[seg])
    denom = np.zeros(n_segments, dtype=e.dtype)
    np.add.at(denom, seg, e)
    alpha = e / denom[seg]
    out = Tensor(_check(alpha.reshape(-1, 1)), requires_grad=scores.requires_grad)
    if out.requires_grad:
        a_val = alpha.astype(np.float64)
        def bwd():
            if out.grad is None:
                return
            g = out.grad[:, 0]
            ag = a_val * g
            seg_dot = np.zeros(n_segments, dtype=np.float64)
            np.add.at(seg_dot, seg, ag)
            scores.accumulate((ag - a_val * seg_dot[seg]).reshape(-1, 1))
        tape.record(bwd)
    return out


def l2_normalize_rows(tape: Tape, a: Tensor) -> Tensor:
    """Scale each row to unit L2 norm; all-zero rows map to zero (zero grad)."""
    norms = np.linalg.norm(a.data.astype(np.float64), axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    out_data = (a.data / safe).astype(a.data.dtype)
    out = Tensor(_check(out_data), requires_grad=a.requires_grad)
    if out.requires_grad:
        y = out_data.astype(np.float64)
        inv = 1.0 / safe
        zero = (norms == 0.0)
        def bwd():
            if out.grad is None:
                return
            g = out.grad
            proj = np.sum(y * g, axis=1, keepdims=True)
            gx = (g - y * proj) * inv
            gx[zero[:, 0]] = 0.0
            a.accumulate(gx)
        tape.record(bwd)
    return out


def row_dot(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """Per-row inner product: (n, d) x (n, d) -> (n, 1)."""
    if a.shape != b.shape:
        raise ValueError(f"row_dot shape mismatch: {a.shape} vs {b.shape}")
    out = Tensor(_check(np.sum(a.data * b.data, axis=1, keepdims=True)),
                 requires_grad=_needs(a, b))
    if out.requires_grad:
        ad, bd = a.data, b.data
        def bwd():
            if out.grad is None:
                return
            if a.requires_grad:
                a.accumulate(out.grad * bd)
            if b.requires_grad:
                b.accumulate(out.grad * ad)
        tape.record(bwd)
    return out


def sum_all(tape: Tape, a: Tensor) -> Tensor:
    out = Tensor(np.array([[a.data.sum(dtype=np.float64)]]), requires_grad=a.requires_grad)
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            a.accumulate(np.full(a.shape, out.grad[0, 0], dtype=np.float64))
        tape.record(bwd)
    return out


def mean_all(tape: Tape, a: Tensor) -> Tensor:
    n = a.data.size
    out = Tensor(np.array([[a.data.sum(dtype=np.float64) / n]]), requires_grad=a.requires_grad)
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            a.accumulate(np.full(a.shape, out.grad[0, 0] / n, dtype=np.float64))
        tape.record(bwd)
    return out


def negative_energy(tape: Tape, s_hat: Tensor, pool: np.ndarray, inv_tau: float,
                    chunk_size: int) -> Tensor:
    """Per-node sum of exp(inv_tau * <s_v, s_j>) over its negative pool row.

    Evaluated in node chunks of ``chunk_size`` so no more than
    chunk_size x P x d values are ever materialized; accumulation is float64.
    Backward re-walks the same chunks, so the memory bound holds there too.
    """
    n = s_hat.shape[0]
    pool = np.asarray(pool, dtype=np.int64)
    if pool.shape[0] != n:
        raise ValueError("negative pool must have one row per node")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    energy = np.zeros((n, 1), dtype=np.float64)
    sd = s_hat.data
    for lo in range(0, n, chunk_size):
        hi = min(lo + chunk_size, n)
        rows = sd[lo:hi]                              # (c, d)
        negs = sd[pool[lo:hi]]                        # (c, P, d)
        sims = np.matmul(negs, rows[:, :, None])[:, :, 0].astype(np.float64) * inv_tau
        energy[lo:hi, 0] = np.exp(sims).sum(axis=1)
    out = Tensor(_check(energy), requires_grad=s_hat.requires_grad)
    if out.requires_grad:
        def bwd():
            if out.grad is None:
                return
            grad = np.zeros(s_hat.shape, dtype=np.float64)
            for lo in range(0, n, chunk_size):
                hi = min(lo + chunk_size, n)
                rows = sd[lo:hi]
                idx = pool[lo:hi]
                negs = sd[idx]
                negs64 = negs.astype(np.float64)
                sims = np.matmul(negs64, rows.astype(np.float64)[:, :, None])[:, :, 0] * inv_tau
                coef = np.exp(sims) * out.grad[lo:hi] * inv_tau  # (c, P)
                # float64 throughout: this is the one op whose backward walks
                # data-dependent chunks, so its result must not depend on chunking
                grad[lo:hi] += np.matmul(coef[:, None, :], negs64)[:, 0, :]
                # adjoint onto the sampled negatives: scatter coef-weighted rows
                acc = np.zeros((hi - lo, n), dtype=np.float64)
                np.add.at(acc, (np.arange(hi - lo)[:, None], idx), coef)
                grad += acc.T @ rows.astype(np.float64)
            s_hat.accumulate(grad)
        tape.record(bwd)
    return out
