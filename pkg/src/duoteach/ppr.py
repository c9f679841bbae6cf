"""Approximate personalized PageRank by forward push, plus graph enhancement.

Scores solve p = alpha * e_s + (1 - alpha) * T' p with T = D^-1 (A + I); the
self-loop keeps isolated nodes well-defined. Push at u moves alpha*r(u) into
the estimate and spreads the rest over neighbours proportional to edge weight;
it stops once every residual r(u) <= epsilon * deg(u), which bounds each entry
error by epsilon * deg(v).

The kernel is compiled with numba when available; set DUOTEACH_NO_NUMBA=1 to
force the pure-Python build (same arithmetic, same results).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sparsemat import SparseRowMatrix


@dataclass(frozen=True)
class PprConfig:
    alpha: float = 0.15
    epsilon: float = 1e-4
    top_k: int = 15
    symmetrize: bool = True

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"ppr alpha must lie in (0,1), got {self.alpha}")
        if self.epsilon <= 0.0:
            raise ConfigError(f"ppr epsilon must be positive, got {self.epsilon}")
        if self.top_k < 1:
            raise ConfigError(f"ppr top_k must be >= 1, got {self.top_k}")


def _push_all(indptr, indices, data, deg, alpha, eps):
    n = deg.shape[0]
    p = np.zeros(n)
    r = np.zeros(n)
    seen = np.zeros(n, dtype=np.bool_)
    touched = np.empty(n, dtype=np.int64)
    qcap = n + 1
    queue = np.empty(qcap, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    out_indptr = np.empty(n + 1, dtype=np.int64)
    out_indptr[0] = 0
    cap = 16 + 4 * n
    out_idx = np.empty(cap, dtype=np.int64)
    out_val = np.empty(cap, dtype=np.float64)
    nnz = 0
    for s in range(n):
        r[s] = 1.0
        seen[s] = True
        touched[0] = s
        tcount = 1
        queue[0] = s
        inq[s] = True
        head = 0
        tail = 1
        while head != tail:
            u = queue[head]
            head += 1
            if head == qcap:
                head = 0
            inq[u] = False
            ru = r[u]
            if ru <= eps * deg[u]:
                continue
            p[u] += alpha * ru
            r[u] = 0.0
            w = (1.0 - alpha) * ru / deg[u]
            for j in range(indptr[u], indptr[u + 1]):
                v = indices[j]
                rv = r[v] + w * data[j]
                r[v] = rv
                if not seen[v]:
                    seen[v] = True
                    touched[tcount] = v
                    tcount += 1
                if rv > eps * deg[v] and not inq[v]:
                    queue[tail] = v
                    tail += 1
                    if tail == qcap:
                        tail = 0
                    inq[v] = True
        row_nodes = np.sort(touched[:tcount])
        for t in range(tcount):
            v = row_nodes[t]
            if p[v] > 0.0:
                if nnz == cap:
                    cap *= 2
                    grown_idx = np.empty(cap, dtype=np.int64)
                    grown_val = np.empty(cap, dtype=np.float64)
                    grown_idx[:nnz] = out_idx[:nnz]
                    grown_val[:nnz] = out_val[:nnz]
                    out_idx = grown_idx
                    out_val = grown_val
                out_idx[nnz] = v
                out_val[nnz] = p[v]
                nnz += 1
        out_indptr[s + 1] = nnz
        for t in range(tcount):
            v = touched[t]
            p[v] = 0.0
            r[v] = 0.0
            seen[v] = False
    return out_indptr, out_idx[:nnz].copy(), out_val[:nnz].copy()


_push_all_jit = None
if os.environ.get("DUOTEACH_NO_NUMBA", "") != "1":
    try:
        from numba import njit

        _push_all_jit = njit(cache=True)(_push_all)
    except ImportError:  # pragma: no cover
        pass


def ppr_push(adjacency: SparseRowMatrix, alpha: float, epsilon: float) -> SparseRowMatrix:
    """Per-source approximate PPR over the self-looped graph; rows are sources."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"ppr alpha must lie in (0,1), got {alpha}")
    if epsilon <= 0.0:
        raise ConfigError(f"ppr epsilon must be positive, got {epsilon}")
    looped = adjacency.add(SparseRowMatrix.identity(adjacency.rows))
    deg = looped.row_sums()
    kernel = _push_all_jit if _push_all_jit is not None else _push_all
    indptr, indices, data = kernel(
        looped.indptr, looped.indices, looped.data, deg, float(alpha), float(epsilon)
    )
    return SparseRowMatrix(adjacency.rows, adjacency.cols, indptr, indices, data)


def top_k_sparsify(scores: SparseRowMatrix, k: int) -> SparseRowMatrix:
    """Keep the k largest entries per row; ties go to the lower column index."""
    if k < 1:
        raise ConfigError(f"top_k must be >= 1, got {k}")
    kept_rows = []
    counts = np.empty(scores.rows, dtype=np.int64)
    for i in range(scores.rows):
        start, end = scores.indptr[i], scores.indptr[i + 1]
        if end - start <= k:
            kept_rows.append(np.arange(start, end, dtype=np.int64))
        else:
            vals = scores.data[start:end]
            cols = scores.indices[start:end]
            order = np.lexsort((cols, -vals))[:k]
            kept_rows.append(start + np.sort(order))
        counts[i] = len(kept_rows[-1])
    keep = np.concatenate(kept_rows) if kept_rows else np.empty(0, dtype=np.int64)
    indptr = np.zeros(scores.rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return SparseRowMatrix(
        scores.rows, scores.cols, indptr, scores.indices[keep], scores.data[keep]
    )


def enhance_adjacency(a: SparseRowMatrix, appr: SparseRowMatrix,
                      symmetrize: bool = True) -> SparseRowMatrix:
    """A plus sparsified PPR scores; optional (M + M')/2 to restore symmetry."""
    if (a.rows, a.cols) != (appr.rows, appr.cols):
        raise ConfigError(
            f"shape mismatch: adjacency {a.rows}x{a.cols} vs scores {appr.rows}x{appr.cols}"
        )
    combined = a.add(appr)
    if symmetrize:
        s = combined.to_scipy()
        combined = SparseRowMatrix.from_scipy((s + s.T) * 0.5)
    return combined


def build_enhanced_adjacency(adjacency: SparseRowMatrix, cfg: PprConfig) -> SparseRowMatrix:
    """push -> top-k -> add, the whole structure-side preprocessing chain."""
    cfg.validate()
    scores = ppr_push(adjacency, cfg.alpha, cfg.epsilon)
    return enhance_adjacency(adjacency, top_k_sparsify(scores, cfg.top_k), cfg.symmetrize)


def write_weighted_edgelist(path, m: SparseRowMatrix) -> None:
    counts = np.diff(m.indptr)
    rows = np.repeat(np.arange(m.rows), counts)
    with open(path, "w") as f:
        for u, v, w in zip(rows, m.indices, m.data):
            f.write(f"{u} {v} {float(w)!r}\n")
