"""Exact rank and kernel computation.

Rank: a sparse elimination phase (singleton cascade, then Markowitz
minimum-fill pivoting) runs until the active submatrix either densifies past
20% or offers no cheap pivot, at which point the remaining core is handed to
the blocked dense kernel.

Kernel bases: computed from the reduced row echelon form with the column
order fixed, which makes the basis canonical (the RREF of a matrix is
unique), hence byte-reproducible across runs, backends and pivot strategies.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..fields import PrimeField
from .kernels import DEFAULT_BLOCK, dense_rank, dense_rref, kernel_from_rref
from .sparsemat import MatrixInputError, SparseMatrix

# Below this many cells the dict bookkeeping costs more than it saves.
DENSE_DIRECT_CELLS = 200_000
DENSITY_SWITCH = 0.2
# If the best available Markowitz score exceeds this, fill-in is about to
# explode and the dense core is the faster finish.
SCORE_SWITCH = 128


@dataclass(frozen=True)
class RankResult:
    rank: int
    kernel: SparseMatrix  # n_cols x nullity, canonical RREF-derived basis

    @property
    def nullity(self) -> int:
        return self.kernel.n_cols

    def kernel_columns(self):
        """Kernel basis as a list of dense float64 column vectors."""
        dense = self.kernel.to_dense()
        return [dense[:, j] for j in range(self.kernel.n_cols)]


@dataclass(frozen=True)
class CrossPrimeCheck:
    agree: bool
    rank_a: int
    rank_b: int
    modulus_a: int
    modulus_b: int


def _sparse_phase(M: SparseMatrix):
    """Eliminate cheap pivots sparsely; return (pivots_done, core or None).

    core is a compacted dense float64 array of the active submatrix, or None
    when the sparse phase finished the matrix off entirely.
    """
    p = M.field.p
    rows = {}
    for r, c, v in zip(M.rows, M.cols, M.vals):
        rows.setdefault(int(r), {})[int(c)] = int(v)
    cols = {}
    for i, rw in rows.items():
        for j in rw:
            cols.setdefault(j, set()).add(i)
    nnz = M.nnz
    done = 0
    col_heap = [(len(s), j) for j, s in cols.items()]
    heapq.heapify(col_heap)

    def drop_row(i):
        nonlocal nnz
        for jj in list(rows[i]):
            s = cols[jj]
            s.discard(i)
            nnz -= 1
            if not s:
                del cols[jj]
            else:
                heapq.heappush(col_heap, (len(s), jj))
        del rows[i]

    def drop_col(j):
        nonlocal nnz
        for ii in list(cols[j]):
            del rows[ii][j]
            nnz -= 1
            if not rows[ii]:
                del rows[ii]
        del cols[j]

    while rows and cols:
        # Singleton cascade: pivots with zero Markowitz fill are pure
        # structural deletions.
        progress = True
        while progress and rows and cols:
            progress = False
            for j in [j for j, s in cols.items() if len(s) == 1]:
                if j not in cols or len(cols[j]) != 1:
                    continue
                (i,) = cols[j]
                del rows[i][j]
                cols.pop(j)
                nnz -= 1
                drop_row(i)
                done += 1
                progress = True
            for i in [i for i, rw in rows.items() if len(rw) == 1]:
                if i not in rows or len(rows[i]) != 1:
                    continue
                (j,) = rows[i]
                if len(cols[j]) == 1:
                    cols.pop(j)
                    rows.pop(i)
                    nnz -= 1
                else:
                    drop_col(j)
                done += 1
                progress = True
        if not rows or not cols:
            break

        active = len(rows) * len(cols)
        if nnz > DENSITY_SWITCH * active:
            return done, _compact(rows, cols, p)

        # Markowitz: among the lightest columns pick the entry minimizing
        # (row_count - 1) * (col_count - 1); deterministic tie-breaks.  After
        # the cascade every row count is >= 2, so a column with col_count - 1
        # beyond the current best score cannot improve on it.
        best = None
        popped = []
        while col_heap and len(popped) < 8:
            cnt, j = heapq.heappop(col_heap)
            if j not in cols or len(cols[j]) != cnt:
                continue
            popped.append((cnt, j))
            if best is not None and (cnt - 1) > best[0]:
                break
            for i in sorted(cols[j]):
                score = (len(rows[i]) - 1) * (cnt - 1)
                cand = (score, j, i)
                if best is None or cand < best:
                    best = cand
        for e in popped:
            heapq.heappush(col_heap, e)
        if best is None or best[0] > SCORE_SWITCH:
            return done, _compact(rows, cols, p)

        _, j, i = best
        inv = pow(rows[i][j], p - 2, p)
        piv_row = rows[i]
        targets = [t for t in cols[j] if t != i]
        for t in targets:
            f = (rows[t][j] * inv) % p
            rw = rows[t]
            for jj, v in piv_row.items():
                new = (rw.get(jj, 0) - f * v) % p
                if new:
                    if jj not in rw:
                        cols[jj].add(t)
                        nnz += 1
                        heapq.heappush(col_heap, (len(cols[jj]), jj))
                    rw[jj] = new
                else:
                    if jj in rw:
                        del rw[jj]
                        cols[jj].discard(t)
                        nnz -= 1
                        if not cols[jj]:
                            del cols[jj]
                        else:
                            heapq.heappush(col_heap, (len(cols[jj]), jj))
            if not rw:
                del rows[t]
        drop_row(i)
        if j in cols:
            drop_col(j)
        done += 1
    return done, None


def _compact(rows, cols, p):
    row_ids = sorted(rows)
    col_ids = sorted(cols)
    col_pos = {j: t for t, j in enumerate(col_ids)}
    a = np.zeros((len(row_ids), len(col_ids)))
    for t, i in enumerate(row_ids):
        for j, v in rows[i].items():
            a[t, col_pos[j]] = v
    return a


def rank(M: SparseMatrix, block: int = DEFAULT_BLOCK) -> int:
    """Exact rank over M's field."""
    p = M.field.p
    if M.n_rows == 0 or M.n_cols == 0 or M.nnz == 0:
        return 0
    if M.n_rows * M.n_cols <= DENSE_DIRECT_CELLS or M.density > DENSITY_SWITCH:
        return dense_rank(M.to_dense(), p, block)
    done, core = _sparse_phase(M)
    if core is None:
        return done
    return done + dense_rank(core, p, block)


def rank_kernel(M: SparseMatrix) -> RankResult:
    """Rank plus the canonical kernel basis (RREF-derived)."""
    p = M.field.p
    a = M.to_dense()
    r, pivots = dense_rref(a, p)
    K = kernel_from_rref(a, r, pivots, p)
    kernel = SparseMatrix.from_dense(K, M.field)
    return RankResult(rank=r, kernel=kernel)


def rref_with_pivots(M: SparseMatrix):
    """Reduced row echelon form of M: (rank, pivot column list, dense rref)."""
    a = M.to_dense()
    r, pivots = dense_rref(a, M.field.p)
    return r, pivots, a


def kernel_with_free(M: SparseMatrix):
    """(rank, dense canonical kernel basis, free column indices).

    Free columns carry the identity block of the basis, so coordinates of a
    kernel element in this basis are just its entries at the free rows."""
    a = M.to_dense()
    r, pivots = dense_rref(a, M.field.p)
    K = kernel_from_rref(a, r, pivots, M.field.p)
    pivset = set(pivots)
    free = np.array([j for j in range(M.n_cols) if j not in pivset], dtype=np.intp)
    return r, K, free


def cross_prime_rank(M_a: SparseMatrix, M_b: SparseMatrix) -> CrossPrimeCheck:
    """Compare ranks of the same integral construction over two primes.

    Disagreement is reported, never resolved silently.
    """
    if M_a.shape != M_b.shape:
        raise MatrixInputError(
            f"shape mismatch: {M_a.shape} vs {M_b.shape}"
        )
    ra = rank(M_a)
    rb = rank(M_b)
    return CrossPrimeCheck(
        agree=(ra == rb),
        rank_a=ra,
        rank_b=rb,
        modulus_a=M_a.field.p,
        modulus_b=M_b.field.p,
    )
