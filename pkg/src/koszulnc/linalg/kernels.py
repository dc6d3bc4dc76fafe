"""Dense elimination kernels over F_p.

Matrices are float64 arrays holding exact nonnegative integers.  Elimination
uses delayed reduction: an entry receives at most one fused multiply-add per
pivot, each adding less than p**2, so all intermediate values stay below
n_cols * p**2 < 2**53 for p < 2**16 and are exactly representable.  This
lets the trailing block update run through BLAS matmul.

The panel factorization is the hot inner loop.  It has two interchangeable
implementations: numba @njit kernels (default when numba imports) and a
vectorized pure-numpy fallback.  Select explicitly with

    KOSZULNC_BACKEND=numba | numpy

Both backends pick pivots identically (first nonzero row per column), so
results are bit-identical either way.
"""

from __future__ import annotations

import os

import numpy as np

DEFAULT_BLOCK = 256

# Hard guard for the delayed-reduction exactness bound (p < 2**16 assumed).
MAX_DENSE_COLS = 1_000_000


def _powmod(a, e, p):
    r = 1
    b = a % p
    while e > 0:
        if e & 1:
            r = (r * b) % p
        b = (b * b) % p
        e >>= 1
    return r


def _panel_factor_py(A, M, r, j0, j1, p):
    """Factor panel columns j0:j1 of A below row r (pure numpy).

    Eager elimination inside the panel; multipliers land in M (row i of A
    corresponds to row i - r of M).  Pivot rows are swapped up to the
    frontier.  Returns the number of pivots found.
    """
    m = A.shape[0]
    k = 0
    for j in range(j0, j1):
        fr = r + k
        if fr == m:
            break
        seg = A[fr:, j] % p
        A[fr:, j] = seg
        nz = np.nonzero(seg)[0]
        if nz.size == 0:
            continue
        piv = fr + int(nz[0])
        if piv != fr:
            A[[fr, piv], j0:] = A[[piv, fr], j0:]
            M[[fr - r, piv - r], :k] = M[[piv - r, fr - r], :k]
        A[fr, j:j1] %= p
        inv = _powmod(int(A[fr, j]), p - 2, p)
        col = A[fr + 1:, j]
        rows = np.nonzero(col)[0]
        if rows.size:
            f = (p - (col[rows].astype(np.int64) * inv) % p) % p
            ff = f.astype(np.float64)
            M[rows + (fr + 1 - r), k] = ff
            if j + 1 < j1:
                A[rows + fr + 1, j + 1:j1] += ff[:, None] * A[fr, j + 1:j1][None, :]
            A[rows + fr + 1, j] = 0.0
        k += 1
    return k


try:
    import numba

    @numba.njit(cache=True, nogil=True)
    def _powmod_nb(a, e, p):  # pragma: no cover - jitted
        r = 1
        b = a % p
        while e > 0:
            if e & 1:
                r = (r * b) % p
            b = (b * b) % p
            e >>= 1
        return r

    @numba.njit(cache=True, nogil=True)
    def _panel_factor_nb(A, M, r, j0, j1, p):  # pragma: no cover - jitted
        m, n = A.shape
        k = 0
        for j in range(j0, j1):
            fr = r + k
            if fr == m:
                break
            piv = -1
            for i in range(fr, m):
                v = A[i, j] % p
                A[i, j] = v
                if piv < 0 and v != 0.0:
                    piv = i
            if piv < 0:
                continue
            if piv != fr:
                for jj in range(j0, n):
                    t = A[piv, jj]
                    A[piv, jj] = A[fr, jj]
                    A[fr, jj] = t
                for tt in range(k):
                    t = M[piv - r, tt]
                    M[piv - r, tt] = M[fr - r, tt]
                    M[fr - r, tt] = t
            for jj in range(j, j1):
                A[fr, jj] = A[fr, jj] % p
            inv = _powmod_nb(int(A[fr, j]), p - 2, p)
            for i in range(fr + 1, m):
                a = int(A[i, j])
                if a == 0:
                    continue
                f = (p - (a * inv) % p) % p
                M[i - r, k] = float(f)
                ff = float(f)
                A[i, j] = 0.0
                for jj in range(j + 1, j1):
                    A[i, jj] += ff * A[fr, jj]
            k += 1
        return k

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    HAVE_NUMBA = False


def _pick_backend():
    env = os.environ.get("KOSZULNC_BACKEND", "").strip().lower()
    if env not in ("", "numba", "numpy"):
        raise RuntimeError(f"KOSZULNC_BACKEND must be 'numba' or 'numpy', got {env!r}")
    if env == "numba" and not HAVE_NUMBA:
        raise RuntimeError("KOSZULNC_BACKEND=numba but numba is not importable")
    if env:
        return env
    return "numba" if HAVE_NUMBA else "numpy"


_BACKEND = _pick_backend()


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> str:
    """Switch panel kernels at runtime (used by tests and benchmarks)."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(name)
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend unavailable")
    prev = _BACKEND
    _BACKEND = name
    return prev


def _panel_factor(A, M, r, j0, j1, p):
    if _BACKEND == "numba":
        return _panel_factor_nb(A, M, r, j0, j1, p)
    return _panel_factor_py(A, M, r, j0, j1, p)


# Trailing updates are chunked so the matmul temporary stays modest.
_UPDATE_CHUNK = 2048


def dense_rank(A, p, block=DEFAULT_BLOCK):
    """Rank over F_p of float64 array A (destroyed).  Blocked elimination:
    scalar panel factorization plus BLAS trailing updates."""
    m, n = A.shape
    if m == 0 or n == 0:
        return 0
    if n > MAX_DENSE_COLS:
        raise ValueError(f"matrix with {n} columns exceeds exactness bound")
    r = 0
    j0 = 0
    while j0 < n and r < m:
        j1 = min(j0 + block, n)
        M = np.zeros((m - r, j1 - j0))
        k = _panel_factor(A, M, r, j0, j1, p)
        if k and j1 < n:
            U12 = A[r:r + k, j1:]
            for t in range(k):
                if t:
                    U12[t] += M[t, :t] @ U12[:t]
                U12[t] %= p
            L21 = M[k:, :k]
            for c0 in range(j1, n, _UPDATE_CHUNK):
                c1 = min(c0 + _UPDATE_CHUNK, n)
                A[r + k:, c0:c1] += L21 @ A[r:r + k, c0:c1]
        r += k
        j0 = j1
    return r


def dense_rref(A, p):
    """In-place reduced row echelon form over F_p.  Returns (rank, pivot_cols).

    Column order is never permuted, so the result is the canonical RREF and
    everything derived from it (kernel bases, quotient complements) is
    deterministic regardless of backend or scheduling.
    """
    m, n = A.shape
    if n > MAX_DENSE_COLS:
        raise ValueError(f"matrix with {n} columns exceeds exactness bound")
    pivots = []
    r = 0
    for j in range(n):
        if r == m:
            break
        seg = A[r:, j] % p
        A[r:, j] = seg
        nz = np.nonzero(seg)[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            A[[r, i]] = A[[i, r]]
        A[r, j:] %= p
        inv = float(_powmod(int(A[r, j]), p - 2, p))
        A[r, j:] = (A[r, j:] * inv) % p
        colall = A[:, j] % p
        A[:, j] = colall
        rows = np.nonzero(colall)[0]
        rows = rows[rows != r]
        if rows.size:
            f = (p - colall[rows]) % p
            A[rows, j:] += f[:, None] * A[r, j:][None, :]
            A[rows, j] = 0.0
        pivots.append(j)
        r += 1
    A %= p
    return r, pivots


def kernel_from_rref(A, rank, pivots, p):
    """Canonical kernel basis (n_cols x nullity) from a reduced RREF array.

    Basis vector for free column j has 1 at j and p - A[i, j] at pivot
    column pivots[i]; free coordinates of the basis form an identity block.
    """
    n = A.shape[1]
    pivset = set(pivots)
    free = [j for j in range(n) if j not in pivset]
    K = np.zeros((n, len(free)))
    if free:
        K[free, np.arange(len(free))] = 1.0
        if pivots:
            K[np.array(pivots, dtype=np.intp)[:, None], np.arange(len(free))[None, :]] = (
                p - A[:rank][:, free]
            ) % p
    return K


def matmul_mod(A, B, p, block=512):
    """Exact (A @ B) % p for float64 arrays of reduced entries."""
    m, k = A.shape
    out = np.zeros((m, B.shape[1]))
    for s in range(0, k, block):
        out += A[:, s:s + block] @ B[s:s + block]
        out %= p
    return out
