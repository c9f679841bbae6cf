"""Row-compressed nonnegative sparse matrices.

Canonical form: per-row column indices strictly increasing, no explicit
zeros, weights >= 0. Used for adjacency matrices, PageRank score tables and
the enhanced graph; heavy kernels delegate to scipy.sparse behind this type.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, DuoteachError


class SparseRowMatrix:
    __slots__ = ("rows", "cols", "indptr", "indices", "data", "_scipy", "_scipy_t")

    def __init__(self, rows: int, cols: int, indptr, indices, data):
        self.rows = int(rows)
        self.cols = int(cols)
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=np.float64)
        if indptr.shape != (self.rows + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise DimensionError("bad indptr for SparseRowMatrix")
        if len(indices) != len(data):
            raise DimensionError("indices and data length mismatch")
        if len(data) and data.min() < 0:
            raise DuoteachError("SparseRowMatrix weights must be nonnegative")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.cols):
            raise DimensionError("column index out of range")
        # canonicalize: drop explicit zeros, enforce strictly increasing columns
        if len(data) and (data == 0.0).any():
            keep = data != 0.0
            counts = np.diff(indptr)
            row_of = np.repeat(np.arange(self.rows), counts)[keep]
            indptr = np.zeros(self.rows + 1, dtype=np.int64)
            np.add.at(indptr, row_of + 1, 1)
            indptr = np.cumsum(indptr)
            indices = indices[keep]
            data = data[keep]
        if len(indices) > 1:
            row_start = np.zeros(len(indices), dtype=bool)
            pos = indptr[1:-1]
            row_start[pos[pos < len(indices)]] = True
            within_row = ~row_start[1:]
            if (np.diff(indices)[within_row] <= 0).any():
                raise DuoteachError("column indices not strictly increasing within a row")
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self._scipy = None
        self._scipy_t = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, row_idx, col_idx, weights) -> "SparseRowMatrix":
        """Build from triplets; duplicate coordinates are summed."""
        m = sp.coo_matrix(
            (np.asarray(weights, dtype=np.float64), (row_idx, col_idx)), shape=(rows, cols)
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        return cls(rows, cols, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, arr) -> "SparseRowMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError("from_dense expects a 2-D array")
        m = sp.csr_matrix(arr)
        m.sort_indices()
        m.eliminate_zeros()
        return cls(arr.shape[0], arr.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_scipy(cls, m) -> "SparseRowMatrix":
        m = m.tocsr().copy()
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n, weight: float = 1.0) -> "SparseRowMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.full(n, float(weight)))

    @classmethod
    def empty(cls, rows, cols) -> "SparseRowMatrix":
        return cls(rows, cols, np.zeros(rows + 1, dtype=np.int64), [], [])

    # -- views and conversions ----------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.data)

    def row(self, i) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        counts = np.diff(self.indptr)
        row_of = np.repeat(np.arange(self.rows), counts)
        out[row_of, self.indices] = self.data
        return out

    def to_scipy(self) -> sp.csr_matrix:
        if self._scipy is None:
            self._scipy = sp.csr_matrix(
                (self.data, self.indices, self.indptr), shape=(self.rows, self.cols)
            )
        return self._scipy

    def transpose_scipy(self) -> sp.csr_matrix:
        if self._scipy_t is None:
            self._scipy_t = self.to_scipy().T.tocsr()
        return self._scipy_t

    def transpose(self) -> "SparseRowMatrix":
        return SparseRowMatrix.from_scipy(self.transpose_scipy())

    # -- algebra --------------------------------------------------------------

    def add(self, other: "SparseRowMatrix") -> "SparseRowMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError("add: shape mismatch")
        return SparseRowMatrix.from_scipy(self.to_scipy() + other.to_scipy())

    def scaled(self, c: float) -> "SparseRowMatrix":
        return SparseRowMatrix(self.rows, self.cols, self.indptr, self.indices, self.data * c)

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.rows)
        np.add.at(out, np.repeat(np.arange(self.rows), np.diff(self.indptr)), self.data)
        return out

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        t = self.transpose()
        return (
            np.array_equal(self.indptr, t.indptr)
            and np.array_equal(self.indices, t.indices)
            and np.array_equal(self.data, t.data)
        )

    def __eq__(self, other):
        if not isinstance(other, SparseRowMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"SparseRowMatrix({self.rows}x{self.cols}, nnz={self.nnz})"
