"""Immutable sparse matrices over a prime field (COO storage)."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from ..fields import PrimeField


class MatrixInputError(ValueError):
    pass


@dataclass(frozen=True)
class SparseMatrix:
    """COO matrix with entries in [1, p); no duplicates, no stored zeros.

    Entries are kept sorted row-major so structurally equal matrices compare
    equal and hash identically.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    field: PrimeField

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals, field: PrimeField):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.int64) % field.p
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise MatrixInputError("rows/cols/vals must be equal-length 1d arrays")
        keep = vals != 0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise MatrixInputError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise MatrixInputError("col index out of range")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            flat = rows * n_cols + cols
            if np.any(np.diff(flat) == 0):
                raise MatrixInputError("duplicate (row, col) entry")
        for a in (rows, cols, vals):
            a.setflags(write=False)
        return cls(n_rows, n_cols, rows, cols, vals, field)

    @classmethod
    def from_entries(cls, n_rows, n_cols, entries, field: PrimeField):
        if entries:
            r, c, v = zip(*entries)
        else:
            r = c = v = ()
        return cls.from_coo(n_rows, n_cols, r, c, v, field)

    @classmethod
    def from_dense(cls, arr, field: PrimeField):
        a = np.asarray(arr, dtype=np.int64) % field.p
        r, c = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], r, c, a[r, c], field)

    @classmethod
    def identity(cls, n, field: PrimeField):
        idx = np.arange(n)
        return cls.from_coo(n, n, idx, idx, np.ones(n, dtype=np.int64), field)

    @classmethod
    def zero(cls, n_rows, n_cols, field: PrimeField):
        return cls.from_coo(n_rows, n_cols, (), (), (), field)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    @property
    def density(self) -> float:
        cells = self.n_rows * self.n_cols
        return self.nnz / cells if cells else 0.0

    def to_dense(self):
        """Dense float64 copy with reduced entries."""
        a = np.zeros((self.n_rows, self.n_cols))
        a[self.rows, self.cols] = self.vals
        return a

    def to_scipy(self):
        return sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=self.shape, dtype=np.int64
        ).tocsr()

    def transpose(self):
        return SparseMatrix.from_coo(
            self.n_cols, self.n_rows, self.cols, self.rows, self.vals, self.field
        )

    def matmul(self, other: "SparseMatrix") -> "SparseMatrix":
        """Exact product over the field (int64 accumulation cannot overflow
        at supported moduli and desk-scale inner dimensions)."""
        if self.n_cols != other.n_rows:
            raise MatrixInputError("shape mismatch in matmul")
        if self.field.p != other.field.p:
            raise MatrixInputError("field mismatch in matmul")
        prod = (self.to_scipy() @ other.to_scipy()).tocoo()
        return SparseMatrix.from_coo(
            self.n_rows, other.n_cols, prod.row, prod.col, prod.data, self.field
        )

    def is_zero(self) -> bool:
        return self.nnz == 0

    def __eq__(self, other):
        return (
            isinstance(other, SparseMatrix)
            and self.shape == other.shape
            and self.field.p == other.field.p
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
        )

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz}, {self.field})"
