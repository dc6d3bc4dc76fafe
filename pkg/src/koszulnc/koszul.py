"""Koszul cohomology engine.

Cells K_{p,q} are dimensions of cohomology of

    wedge^{p+1} V (x) M_{q-1}  ->  wedge^p V (x) M_q  ->  wedge^{p-1} V (x) M_{q+1}

with the differential d(v_0 ^ ... ^ v_p (x) m) = sum_k (-1)^k (drop v_k) (x) v_k m
over the increasing-index ordering of wedge factors.  Subsets of V's basis
are indexed in colexicographic order with precomputed binomial tables.

Every cell reduces to two differential ranks; ranks are memoized keyed by
(system hash, p, q, prime), computed over every configured prime, and a
disagreement between primes is a hard failure.  Cell evaluations are pure,
so the engine may run many differentials concurrently; the memo table is
the only shared structure.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .fields import PrimeField
from .geometry import SectionSystem
from .linalg import SparseMatrix, rank as sparse_rank

DEFAULT_CAP = 50_000_000

# differentials whose dense form would exceed this many entries are
# serialized through a single lock to bound peak memory
_BIG_ENTRIES = 30_000_000
_BIG_LOCK = threading.Lock()


class ResourceCapExceeded(RuntimeError):
    def __init__(self, label, p, q, estimate, cap):
        super().__init__(
            f"cell ({p},{q}) of {label}: estimated {estimate} entries exceeds cap {cap}"
        )
        self.label = label
        self.p = p
        self.q = q
        self.estimate = estimate
        self.cap = cap


class CrossPrimeDisagreement(RuntimeError):
    pass


class ExteriorBasis:
    """Colex rank/unrank between p-subsets of [0, n) and positions."""

    def __init__(self, n: int, p: int):
        self.n = n
        self.p = p
        self.size = comb(n, p) if 0 <= p <= n else 0

    def rank(self, subset) -> int:
        r = 0
        for i, s in enumerate(subset):
            r += comb(s, i + 1)
        return r

    def unrank(self, r: int):
        out = [0] * self.p
        k = self.p
        n = self.n
        while k > 0:
            n -= 1
            c = comb(n, k)
            if r >= c:
                r -= c
                k -= 1
                out[k] = n
        return tuple(out)

    def subsets(self):
        """All p-subsets in colex order (matching rank)."""
        return _colex_subsets(self.n, self.p)


@lru_cache(maxsize=None)
def _colex_subsets(n: int, p: int):
    if p < 0 or p > n:
        return ()
    eb = ExteriorBasis(n, p)
    return tuple(sorted(combinations(range(n), p), key=eb.rank))


def koszul_differential(sys: SectionSystem, p: int, q: int) -> SparseMatrix:
    """Matrix of wedge^{p+1} V (x) M_q -> wedge^p V (x) M_{q+1}.

    Columns are indexed by ((p+1)-subset, M_q basis element), rows by
    (p-subset, M_{q+1} basis element), subsets in colex order.
    """
    n = sys.dim_V
    field = sys.field
    dim_src_m = sys.dim_M(q)
    dim_tgt_m = sys.dim_M(q + 1)
    eb_src = ExteriorBasis(n, p + 1)
    eb_tgt = ExteriorBasis(n, p)
    n_rows = eb_tgt.size * dim_tgt_m
    n_cols = eb_src.size * dim_src_m
    if n_rows == 0 or n_cols == 0:
        return SparseMatrix.zero(n_rows, n_cols, field)
    rows_acc, cols_acc, vals_acc = [], [], []
    pp = field.p
    for t, T in enumerate(eb_src.subsets()):
        base_col = t * dim_src_m
        for k, j in enumerate(T):
            S = T[:k] + T[k + 1:]
            s = eb_tgt.rank(S)
            rows_b, cols_b, vals_b = sys.mult_coo(j, q)
            if rows_b.size == 0:
                continue
            rows_acc.append(s * dim_tgt_m + rows_b)
            cols_acc.append(base_col + cols_b)
            vals_acc.append(vals_b if k % 2 == 0 else pp - vals_b)
    if not rows_acc:
        return SparseMatrix.zero(n_rows, n_cols, field)
    return SparseMatrix.from_coo(
        n_rows,
        n_cols,
        np.concatenate(rows_acc),
        np.concatenate(cols_acc),
        np.concatenate(vals_acc),
        field,
    )


@dataclass(frozen=True)
class KoszulCell:
    p: int
    q: int
    dim_left: int
    dim_mid: int
    dim_right: int
    rank_in: int
    rank_out: int
    primes: tuple

    @property
    def dim_K(self) -> int:
        return self.dim_mid - self.rank_in - self.rank_out

    def as_dict(self):
        return {
            "p": self.p,
            "q": self.q,
            "dims": [self.dim_left, self.dim_mid, self.dim_right],
            "rank_in": self.rank_in,
            "rank_out": self.rank_out,
            "dim_K": self.dim_K,
        }


@dataclass(eq=False)
class BettiTable:
    """Table (p, q) -> dim K_{p,q} plus the cells behind it."""

    label: str
    p_range: tuple
    q_range: tuple
    cells: dict
    gaps: list
    meta: dict

    def dim(self, p, q):
        return self.cells[(p, q)].dim_K

    def dims(self):
        return {k: c.dim_K for k, c in self.cells.items()}

    def to_text(self):
        p_lo, p_hi = self.p_range
        q_lo, q_hi = self.q_range
        widths = {}
        for p in range(p_lo, p_hi + 1):
            w = len(str(p))
            for q in range(q_lo, q_hi + 1):
                cell = self.cells.get((p, q))
                s = "?" if cell is None else (str(cell.dim_K) if cell.dim_K else ".")
                w = max(w, len(s))
            widths[p] = w
        lines = []
        header = "      " + " ".join(str(p).rjust(widths[p]) for p in range(p_lo, p_hi + 1))
        lines.append(header)
        for q in range(q_lo, q_hi + 1):
            row = []
            for p in range(p_lo, p_hi + 1):
                cell = self.cells.get((p, q))
                s = "?" if cell is None else (str(cell.dim_K) if cell.dim_K else ".")
                row.append(s.rjust(widths[p]))
            lines.append(f"q={q}".rjust(5) + " " + " ".join(row))
        return "\n".join(lines)

    def as_dict(self):
        return {
            "label": self.label,
            "p_range": list(self.p_range),
            "q_range": list(self.q_range),
            "cells": [self.cells[k].as_dict() for k in sorted(self.cells)],
            "gaps": [list(g) for g in self.gaps],
            "meta": self.meta,
        }


class MultiSystem:
    """The same integral section system reduced over every working prime."""

    def __init__(self, systems: dict):
        self.systems = systems
        hashes = {s.system_hash for s in systems.values()}
        if len(hashes) != 1:
            raise CrossPrimeDisagreement(f"system hashes differ: {hashes}")
        self.system_hash = hashes.pop()
        ref = next(iter(systems.values()))
        self.label = ref.label
        self.dim_V = ref.dim_V
        self.q_lo = ref.q_lo
        self.q_hi = ref.q_hi
        for s in systems.values():
            if s.dims != ref.dims or s.dim_V != ref.dim_V:
                raise CrossPrimeDisagreement(
                    f"section space dims differ across primes for {ref.label}: "
                    f"{[(p, s.dims) for p, s in systems.items()]}"
                )
        self._ref = ref

    @classmethod
    def build(cls, builder, primes):
        return cls({p: builder(PrimeField(p)) for p in primes})

    @property
    def primes(self):
        return tuple(sorted(self.systems))

    def dim_M(self, q):
        return self._ref.dim_M(q)

    def describe(self):
        return self._ref.describe()


class CellEngine:
    """Evaluates cells with rank memoization, cross-prime agreement,
    resource capping and optional parallelism."""

    def __init__(self, primes=None, cap=DEFAULT_CAP, threads=1, disk_cache=None):
        from .fields import DEFAULT_PRIMES

        self.primes = tuple(primes or DEFAULT_PRIMES)
        self.cap = cap
        self.threads = max(1, int(threads))
        self.disk_cache = disk_cache
        self._memo = {}
        self._memo_lock = threading.Lock()
        self.timings = {}

    # -- rank layer ---------------------------------------------------------

    def _diff_rank_one(self, sys: SectionSystem, p: int, q: int, prime: int) -> int:
        key = (sys.system_hash, p, q, prime)
        with self._memo_lock:
            if key in self._memo:
                return self._memo[key]
        if self.disk_cache is not None:
            hit = self.disk_cache.get(*key)
            if hit is not None:
                with self._memo_lock:
                    self._memo[key] = hit
                return hit
        t0 = time.perf_counter()
        mat = koszul_differential(sys, p, q)
        big = mat.n_rows * mat.n_cols > _BIG_ENTRIES
        if big:
            with _BIG_LOCK:
                r = sparse_rank(mat)
        else:
            r = sparse_rank(mat)
        dt = time.perf_counter() - t0
        with self._memo_lock:
            self._memo[key] = r
            self.timings[key] = dt
        if self.disk_cache is not None:
            self.disk_cache.put(*key, value=r, meta=sys.meta)
        return r

    def diff_rank(self, msys: MultiSystem, p: int, q: int) -> int:
        """Rank of wedge^{p+1} V (x) M_q -> wedge^p V (x) M_{q+1}, agreed
        across all configured primes."""
        if p + 1 < 0 or p < 0:
            return 0
        n = msys.dim_V
        if p + 1 > n or msys.dim_M(q) == 0 or p > n or msys.dim_M(q + 1) == 0:
            return 0
        ranks = {
            prime: self._diff_rank_one(msys.systems[prime], p, q, prime)
            for prime in self.primes
        }
        if len(set(ranks.values())) != 1:
            raise CrossPrimeDisagreement(
                f"rank of differential (p={p}, q={q}) of {msys.label} "
                f"differs across primes: {ranks}"
            )
        return next(iter(ranks.values()))

    # -- cells --------------------------------------------------------------

    def _space_dim(self, msys, p, q):
        n = msys.dim_V
        if p < 0 or p > n:
            return 0
        try:
            dm = msys.dim_M(q)
        except KeyError:
            raise
        return comb(n, p) * dm

    def estimate_entries(self, msys, p, q):
        mid = self._space_dim(msys, p, q)
        left = self._space_dim(msys, p + 1, q - 1)
        right = self._space_dim(msys, p - 1, q + 1)
        return mid * max(left, right, 1)

    def check_cap(self, msys, p, q):
        est = self.estimate_entries(msys, p, q)
        if est > self.cap:
            raise ResourceCapExceeded(msys.label, p, q, est, self.cap)

    def cell(self, msys: MultiSystem, p: int, q: int) -> KoszulCell:
        self.check_cap(msys, p, q)
        dim_left = self._space_dim(msys, p + 1, q - 1)
        dim_mid = self._space_dim(msys, p, q)
        dim_right = self._space_dim(msys, p - 1, q + 1)
        rank_in = self.diff_rank(msys, p, q - 1) if dim_left and dim_mid else 0
        rank_out = self.diff_rank(msys, p - 1, q) if dim_mid and dim_right else 0
        cell = KoszulCell(
            p, q, dim_left, dim_mid, dim_right, rank_in, rank_out, self.primes
        )
        if cell.dim_K < 0:
            raise AssertionError(f"negative cell dimension at ({p},{q}): {cell}")
        return cell

    def betti(self, msys: MultiSystem, p_range, q_range, meta=None) -> BettiTable:
        p_lo, p_hi = p_range
        q_lo, q_hi = q_range
        wanted = [(p, q) for q in range(q_lo, q_hi + 1) for p in range(p_lo, p_hi + 1)]
        gaps = []
        ok = []
        for (p, q) in wanted:
            try:
                self.check_cap(msys, p, q)
                ok.append((p, q))
            except ResourceCapExceeded as e:
                gaps.append((p, q, f"cap: estimated {e.estimate} > {e.cap}"))
        # distinct differentials behind the surviving cells, biggest first
        tasks = set()
        for (p, q) in ok:
            if self._space_dim(msys, p + 1, q - 1) and self._space_dim(msys, p, q):
                tasks.add((p, q - 1))
            if self._space_dim(msys, p, q) and self._space_dim(msys, p - 1, q + 1):
                tasks.add((p - 1, q))
        tasks = sorted(
            tasks,
            key=lambda t: self._space_dim(msys, t[0] + 1, t[1])
            * max(self._space_dim(msys, t[0], t[1] + 1), 1),
            reverse=True,
        )
        if self.threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as ex:
                list(ex.map(lambda t: self.diff_rank(msys, *t), tasks))
        else:
            for t in tasks:
                self.diff_rank(msys, *t)
        cells = {(p, q): self.cell(msys, p, q) for (p, q) in ok}
        return BettiTable(
            label=msys.label,
            p_range=tuple(p_range),
            q_range=tuple(q_range),
            cells=cells,
            gaps=gaps,
            meta={"system": msys.describe(), "primes": list(self.primes), **(meta or {})},
        )

    def koszul_of_module(self, msys: MultiSystem, l: int, q: int) -> KoszulCell:
        """''E_1-style term: K_{l-q, q} of a module system (V acting through
        restriction maps)."""
        return self.cell(msys, l - q, q)

    def d2_product_is_zero(self, msys: MultiSystem, p: int, q: int) -> bool:
        """Exact check that consecutive differentials compose to zero:
        wedge^{p+2} (x) M_{q-1} -> wedge^{p+1} (x) M_q -> wedge^p (x) M_{q+1}."""
        for prime in self.primes:
            sys = msys.systems[prime]
            try:
                a = koszul_differential(sys, p, q)
                b = koszul_differential(sys, p + 1, q - 1)
            except KeyError:
                return True
            if a.n_cols == 0 or b.n_cols == 0:
                continue
            if not a.matmul(b).is_zero():
                return False
        return True
