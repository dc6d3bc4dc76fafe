import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koszulnc import ALTERNATE_PRIME, DEFAULT_PRIME, PrimeField
from koszulnc.fields import FieldConfigError
from koszulnc.linalg import (
    MatrixInputError,
    SparseMatrix,
    cross_prime_rank,
    dense_rank,
    matmul_mod,
    rank,
    rank_kernel,
)
from koszulnc.linalg.kernels import HAVE_NUMBA, active_backend, set_backend

F = PrimeField(DEFAULT_PRIME)
F2 = PrimeField(ALTERNATE_PRIME)


def reference_rank(dense, p):
    """Independent oracle: plain fraction-free row reduction in python ints."""
    a = [[int(x) % p for x in row] for row in dense]
    m = len(a)
    n = len(a[0]) if m else 0
    r = 0
    for j in range(n):
        piv = next((i for i in range(r, m) if a[i][j]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][j], p - 2, p)
        for i in range(m):
            if i != r and a[i][j]:
                f = a[i][j] * inv % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        r += 1
        if r == m:
            break
    return r


def random_sparse(rng, m, n, density, field):
    a = rng.integers(0, field.p, size=(m, n))
    mask = rng.random((m, n)) < density
    return SparseMatrix.from_dense(np.where(mask, a, 0), field)


def test_field_validation():
    with pytest.raises(FieldConfigError):
        PrimeField(32004)
    with pytest.raises(FieldConfigError):
        PrimeField(1)
    assert PrimeField(32003).inv(5) * 5 % 32003 == 1


def test_sparse_matrix_validation():
    with pytest.raises(MatrixInputError):
        SparseMatrix.from_entries(2, 2, [(0, 0, 1), (0, 0, 2)], F)
    with pytest.raises(MatrixInputError):
        SparseMatrix.from_entries(2, 2, [(2, 0, 1)], F)
    m = SparseMatrix.from_entries(2, 2, [(0, 0, F.p), (1, 1, 3)], F)
    assert m.nnz == 1  # stored zero dropped


def test_rank_kernel_empty_and_identity():
    empty = SparseMatrix.zero(0, 0, F)
    res = rank_kernel(empty)
    assert res.rank == 0 and res.nullity == 0
    for n in (1, 4, 9):
        res = rank_kernel(SparseMatrix.identity(n, F))
        assert res.rank == n and res.nullity == 0


def test_rank_kernel_triangle_twist1_evaluation_matrix():
    # Mayer-Vietoris matrix of the coordinate-line triangle at twist 1:
    # columns are per-line degree-1 section bases, rows evaluate differences
    # at the three pairwise intersection points.
    rows = [
        [0, -1, 0, 1, 0, 0],
        [-1, 0, 0, 0, 0, 1],
        [0, 0, -1, 0, 1, 0],
    ]
    m = SparseMatrix.from_dense(np.array(rows), F)
    res = rank_kernel(m)
    assert res.rank == 3
    assert res.nullity == 3
    # every kernel vector is annihilated exactly
    prod = m.matmul(res.kernel)
    assert prod.is_zero()


def test_rank_kernel_invariant_and_determinism():
    rng = np.random.default_rng(7)
    for _ in range(25):
        m = random_sparse(rng, rng.integers(1, 14), rng.integers(1, 14), 0.4, F)
        res1 = rank_kernel(m)
        res2 = rank_kernel(m)
        assert res1.rank + res1.nullity == m.n_cols
        assert res1.kernel == res2.kernel and res1.rank == res2.rank
        assert m.matmul(res1.kernel).is_zero()
        assert res1.rank == reference_rank(m.to_dense(), F.p)


def test_rank_transpose_property():
    rng = np.random.default_rng(11)
    for _ in range(20):
        m = random_sparse(rng, rng.integers(1, 20), rng.integers(1, 20), 0.3, F)
        assert rank(m) == rank(m.transpose())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_rank_matches_reference(m, n, seed):
    rng = np.random.default_rng(seed)
    mat = random_sparse(rng, m, n, 0.5, F)
    assert rank(mat) == reference_rank(mat.to_dense(), F.p)
    assert rank_kernel(mat).rank == rank(mat)


def test_sparse_phase_and_dense_agree_on_structured_input():
    # block structure with many singletons plus a dense core, large enough to
    # exercise the markowitz path
    rng = np.random.default_rng(3)
    eye = np.eye(300, dtype=np.int64)
    core = rng.integers(0, F.p, size=(300, 200))
    dense = np.block([[eye, np.zeros((300, 200), dtype=np.int64)], [np.zeros((200, 300), dtype=np.int64), core[:200]]])
    m = SparseMatrix.from_dense(dense, F)
    got = rank(m)
    want = 300 + reference_rank(core[:200] % F.p, F.p)
    assert got == want


def test_planted_rank_large():
    rng = np.random.default_rng(5)
    p = F.p
    b = rng.integers(0, p, size=(120, 40)).astype(np.float64)
    c = rng.integers(0, p, size=(40, 90)).astype(np.float64)
    a = matmul_mod(b, c, p)
    assert dense_rank(a.copy(), p) == 40
    m = SparseMatrix.from_dense(a, F)
    assert rank(m) == 40


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_backends_agree():
    rng = np.random.default_rng(13)
    mats = [random_sparse(rng, 40, 60, 0.3, F) for _ in range(5)]
    prev = active_backend()
    try:
        set_backend("numba")
        with_nb = [(rank(m), rank_kernel(m).kernel) for m in mats]
        set_backend("numpy")
        with_py = [(rank(m), rank_kernel(m).kernel) for m in mats]
    finally:
        set_backend(prev)
    assert with_nb == with_py


def test_cross_prime_rank():
    a = SparseMatrix.identity(5, F)
    b = SparseMatrix.identity(5, F2)
    chk = cross_prime_rank(a, b)
    assert chk.agree and chk.rank_a == chk.rank_b == 5
    z1 = SparseMatrix.zero(3, 4, F)
    z2 = SparseMatrix.zero(3, 4, F2)
    chk = cross_prime_rank(z1, z2)
    assert chk.agree and chk.rank_a == 0
    with pytest.raises(MatrixInputError):
        cross_prime_rank(SparseMatrix.zero(2, 2, F), SparseMatrix.zero(3, 2, F2))


def test_matmul_mod_exact():
    rng = np.random.default_rng(17)
    p = ALTERNATE_PRIME
    a = rng.integers(0, p, size=(30, 700)).astype(np.float64)
    b = rng.integers(0, p, size=(700, 20)).astype(np.float64)
    got = matmul_mod(a, b, p)
    want = (a.astype(np.int64) @ b.astype(np.int64)) % p
    assert np.array_equal(got, want.astype(np.float64))
