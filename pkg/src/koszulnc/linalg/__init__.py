from .elimination import (
    CrossPrimeCheck,
    RankResult,
    cross_prime_rank,
    kernel_with_free,
    rank,
    rank_kernel,
    rref_with_pivots,
)
from .kernels import active_backend, dense_rank, dense_rref, matmul_mod, set_backend
from .sparsemat import MatrixInputError, SparseMatrix

__all__ = [
    "CrossPrimeCheck",
    "MatrixInputError",
    "RankResult",
    "SparseMatrix",
    "active_backend",
    "cross_prime_rank",
    "dense_rank",
    "dense_rref",
    "kernel_with_free",
    "matmul_mod",
    "rank",
    "rank_kernel",
    "rref_with_pivots",
    "set_backend",
]
