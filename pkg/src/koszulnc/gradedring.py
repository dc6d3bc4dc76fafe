"""Graded pieces of polynomial rings and their quotients.

S is the polynomial ring in N+1 variables over a prime field.  Monomial
bases are ordered graded-lexicographically descending (x0 > x1 > ...), which
fixes every projection matrix and quotient complement deterministically.
Polynomials carry integer coefficients so the same instance reduces
consistently modulo each working prime.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, cached_property
from math import comb

import numpy as np

from .fields import PrimeField
from .linalg.kernels import dense_rref

Monomial = tuple  # exponent vector of length N+1


class RingInputError(ValueError):
    pass


@lru_cache(maxsize=None)
def _monomials(nvars: int, k: int):
    """All degree-k monomials in nvars variables, lex descending."""
    if k < 0:
        return ()
    if nvars == 1:
        return ((k,),)
    out = []
    for e in range(k, -1, -1):
        for rest in _monomials(nvars - 1, k - e):
            out.append((e,) + rest)
    return tuple(out)


@dataclass(frozen=True)
class GradedPieceBasis:
    """Canonical ordered monomial basis of S_k."""

    ambient_dim: int  # N, so N+1 variables
    degree: int
    monomials: tuple

    @cached_property
    def index(self):
        return {m: i for i, m in enumerate(self.monomials)}

    @property
    def dim(self) -> int:
        return len(self.monomials)


def monomial_basis(N: int, k: int) -> GradedPieceBasis:
    if N < 0:
        raise RingInputError("ambient dimension must be nonnegative")
    monos = _monomials(N + 1, k) if k >= 0 else ()
    basis = GradedPieceBasis(N, k, monos)
    if k >= 0:
        assert basis.dim == comb(N + k, k)
    return basis


def _mul_mono(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


@dataclass(frozen=True)
class Polynomial:
    """Homogeneous polynomial with integer coefficients.

    terms are sorted by monomial descending; coefficients are nonzero
    integers, reduced into each working field at the point of use.
    """

    nvars: int
    degree: int
    terms: tuple  # ((monomial, coeff), ...)

    @classmethod
    def make(cls, nvars, coeffs: dict):
        terms = [(m, int(c)) for m, c in coeffs.items() if int(c) != 0]
        if not terms:
            raise RingInputError("zero polynomial has no degree")
        degs = {sum(m) for m, _ in terms}
        if len(degs) > 1:
            raise RingInputError(f"inhomogeneous terms: degrees {sorted(degs)}")
        for m, _ in terms:
            if len(m) != nvars or any(e < 0 for e in m):
                raise RingInputError(f"bad monomial {m} for {nvars} variables")
        terms.sort(key=lambda t: t[0], reverse=True)
        return cls(nvars, degs.pop(), tuple(terms))

    @classmethod
    def coordinate(cls, N: int, i: int):
        e = [0] * (N + 1)
        e[i] = 1
        return cls.make(N + 1, {tuple(e): 1})

    @classmethod
    def random(cls, N: int, degree: int, rng, bound: int = 32003):
        """Dense random form; coefficients uniform in [0, bound)."""
        monos = _monomials(N + 1, degree)
        coeffs = rng.integers(0, bound, size=len(monos))
        d = {m: int(c) for m, c in zip(monos, coeffs) if c}
        if not d:  # vanishing chance, but keep it total
            d = {monos[0]: 1}
        return cls.make(N + 1, d)

    @cached_property
    def coeff_dict(self):
        return dict(self.terms)

    def multiply_monomial(self, m: Monomial) -> "Polynomial":
        return Polynomial(
            self.nvars,
            self.degree + sum(m),
            tuple((_mul_mono(mm, m), c) for mm, c in self.terms),
        )

    def vector(self, basis: GradedPieceBasis, p: int):
        v = np.zeros(basis.dim)
        idx = basis.index
        for m, c in self.terms:
            v[idx[m]] = c % p
        return v

    def canonical(self):
        """JSON-stable representation used in hashing."""
        return [[list(m), c] for m, c in self.terms]


def ideal_piece(gens, k: int, N: int, field: PrimeField):
    """Rows spanning the degree-k piece of the ideal (gens), in S_k
    coordinates.  Generators of degree above k contribute nothing."""
    basis = monomial_basis(N, k)
    rows = []
    for g in gens:
        if g.degree > k:
            continue
        for m in _monomials(N + 1, k - g.degree):
            rows.append(g.multiply_monomial(m).vector(basis, field.p))
    if not rows:
        return np.zeros((0, basis.dim))
    return np.array(rows)


def ideal_piece_dim(gens, k: int, N: int, field: PrimeField) -> int:
    a = ideal_piece(gens, k, N, field)
    r, _ = dense_rref(a, field.p)
    return r


@dataclass(frozen=True, eq=False)
class QuotientPiece:
    """Degree-k piece of S/(gens): complement basis and projection.

    The complement is the set of non-pivot monomials of the echelonized
    ideal piece, so it is canonical given the monomial order.  projection
    maps S_k coordinates onto complement coordinates and restricts to the
    identity there.
    """

    ambient_dim: int
    degree: int
    gens: tuple
    field: PrimeField
    ambient: GradedPieceBasis
    basis_monomials: tuple
    basis_positions: np.ndarray  # ambient indices of complement monomials
    projection: np.ndarray  # dim x ambient.dim, float64 reduced

    @property
    def dim(self) -> int:
        return len(self.basis_monomials)

    @cached_property
    def index(self):
        return {m: i for i, m in enumerate(self.basis_monomials)}

    def project_columns(self, ambient_indices):
        return self.projection[:, ambient_indices]

    def project_polynomial(self, poly: Polynomial):
        return (self.projection @ poly.vector(self.ambient, self.field.p)) % self.field.p

    def lift_polynomial(self, coeffs) -> Polynomial:
        """Polynomial representative of a complement-coordinate vector."""
        d = {}
        for c, m in zip(coeffs, self.basis_monomials):
            c = int(c) % self.field.p
            if c:
                d[m] = c
        if not d:
            raise RingInputError("zero class has no representative")
        return Polynomial.make(self.ambient_dim + 1, d)


_QUOTIENT_CACHE = {}


def quotient_piece(gens, k: int, N: int, field: PrimeField) -> QuotientPiece:
    gens = tuple(gens)
    key = (gens, k, N, field.p)
    hit = _QUOTIENT_CACHE.get(key)
    if hit is not None:
        return hit
    basis = monomial_basis(N, k)
    p = field.p
    if k < 0 or basis.dim == 0:
        qp = QuotientPiece(
            N, k, gens, field, basis, (), np.zeros(0, dtype=np.intp), np.zeros((0, 0))
        )
        _QUOTIENT_CACHE[key] = qp
        return qp
    a = ideal_piece(gens, k, N, field)
    if a.shape[0] == 0:
        proj = np.eye(basis.dim)
        qp = QuotientPiece(
            N, k, gens, field, basis, basis.monomials,
            np.arange(basis.dim, dtype=np.intp), proj,
        )
        _QUOTIENT_CACHE[key] = qp
        return qp
    r, pivots = dense_rref(a, p)
    pivset = set(pivots)
    free = np.array([j for j in range(basis.dim) if j not in pivset], dtype=np.intp)
    proj = np.zeros((len(free), basis.dim))
    if len(free):
        proj[np.arange(len(free)), free] = 1.0
        if pivots:
            proj[:, np.array(pivots, dtype=np.intp)] = (p - a[:r][:, free].T) % p
    monos = tuple(basis.monomials[j] for j in free)
    qp = QuotientPiece(N, k, gens, field, basis, monos, free, proj)
    _QUOTIENT_CACHE[key] = qp
    return qp


def multiplication_matrix(v_mono: Monomial, source: QuotientPiece, target: QuotientPiece):
    """Matrix of m -> v*m from source complement to target complement.

    Products are formed in the ambient ring and projected; the two pieces
    must live over the same ideal.
    """
    if source.gens != target.gens or source.ambient_dim != target.ambient_dim:
        raise RingInputError("multiplication across different quotient rings")
    if source.field.p != target.field.p:
        raise RingInputError("field mismatch")
    if sum(v_mono) + source.degree != target.degree:
        raise RingInputError("degree mismatch in multiplication")
    if source.dim == 0 or target.dim == 0:
        return np.zeros((target.dim, source.dim))
    tgt_index = target.ambient.index
    cols = [tgt_index[_mul_mono(v_mono, m)] for m in source.basis_monomials]
    return target.projection[:, cols].copy()


def multiplication_by_class(coeffs, deg_v: int, source: QuotientPiece, target: QuotientPiece):
    """Matrix of multiplication by the quotient class with the given
    complement coordinates in degree deg_v."""
    p = source.field.p
    vp = quotient_piece(source.gens, deg_v, source.ambient_dim, source.field)
    out = np.zeros((target.dim, source.dim))
    for c, mono in zip(coeffs, vp.basis_monomials):
        c = int(c) % p
        if c:
            out += c * multiplication_matrix(mono, source, target)
            out %= p
    return out


def multiplication_tensor(source: QuotientPiece, other: QuotientPiece):
    """Per-basis-element multiplication matrices source x other -> product
    degree, as listed over the basis of `source`."""
    field = source.field
    target = quotient_piece(
        source.gens, source.degree + other.degree, source.ambient_dim, field
    )
    return [multiplication_matrix(m, other, target) for m in source.basis_monomials]
