"""Varieties, normal crossing unions, and their section systems.

Components are complete intersections of hypersurfaces in P^N, so every
twisted section space is a graded quotient piece and the section space of
the union is the kernel of the first Mayer-Vietoris differential.  A
SectionSystem packages the graded spaces M_q together with the
multiplication action of V = H^0 of the embedding twist, which is all the
Koszul machinery ever sees.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from itertools import combinations

import numpy as np

from .fields import PrimeField
from .gradedring import (
    Polynomial,
    QuotientPiece,
    multiplication_by_class,
    multiplication_matrix,
    quotient_piece,
)
from .linalg import SparseMatrix, kernel_with_free, rank_kernel
from .linalg.kernels import matmul_mod


class GeometryInputError(ValueError):
    pass


class SystemRangeError(KeyError):
    """A Koszul cell was requested outside the precomputed q range."""


@dataclass(frozen=True)
class ComponentSpec:
    """One complete-intersection component of P^ambient, cut out by its
    generators (empty generators mean the ambient space itself)."""

    label: str
    ambient: int
    gens: tuple

    def canonical(self):
        return [self.label, self.ambient, [g.canonical() for g in self.gens]]


@dataclass
class UnionSpec:
    """Ordered union of components in a fixed P^N.

    Intersection loci are described by unions of generator sets; emptiness
    is decided by the Hilbert probe (dims zero at the generator-degree sum
    and one above), which is exact for coordinate configurations and a
    documented heuristic otherwise.
    """

    ambient: int
    components: tuple
    _nonempty: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.components:
            raise GeometryInputError("union needs at least one component")
        labels = [c.label for c in self.components]
        if len(set(labels)) != len(labels):
            raise GeometryInputError("component labels must be distinct")
        for c in self.components:
            if c.ambient != self.ambient:
                raise GeometryInputError("components live in a different P^N")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def locus_gens(self, indices):
        gens = []
        for i in sorted(indices):
            for g in self.components[i].gens:
                if g not in gens:
                    gens.append(g)
        return tuple(gens)

    def nonempty_locus(self, indices, field: PrimeField) -> bool:
        key = (tuple(sorted(indices)), field.p)
        hit = self._nonempty.get(key)
        if hit is None:
            gens = self.locus_gens(indices)
            probe = sum(g.degree for g in gens)
            hit = (
                quotient_piece(gens, probe, self.ambient, field).dim > 0
                or quotient_piece(gens, probe + 1, self.ambient, field).dim > 0
            )
            self._nonempty[key] = hit
        return hit

    def nonempty_subsets(self, size: int, field: PrimeField):
        """Sorted index tuples of nonempty intersections of `size` components."""
        out = []
        for idx in combinations(range(self.n_components), size):
            if self.nonempty_locus(idx, field):
                out.append(idx)
        return out

    def canonical(self):
        return {
            "ambient": self.ambient,
            "components": [c.canonical() for c in self.components],
        }


@dataclass(frozen=True)
class LineBundleSpec:
    """Twists of the hyperplane class: auxiliary O(b) and embedding O(d)."""

    b: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise GeometryInputError("embedding twist d must be >= 1")

    def twist(self, q: int) -> int:
        return self.b + q * self.d


def sections_on_locus(U: UnionSpec, indices, k: int, field: PrimeField) -> QuotientPiece:
    if not indices:
        raise GeometryInputError("locus needs a nonempty index set")
    return quotient_piece(U.locus_gens(indices), k, U.ambient, field)


def restriction_quotient_matrix(src: QuotientPiece, tgt: QuotientPiece):
    """Projection of the src complement monomials into the tgt quotient;
    the matrix of the restriction when src's ideal sits inside tgt's."""
    if src.degree != tgt.degree or src.ambient_dim != tgt.ambient_dim:
        raise GeometryInputError("restriction needs equal ambient degree")
    if tgt.dim == 0 or src.dim == 0:
        return np.zeros((tgt.dim, src.dim))
    return tgt.projection[:, src.basis_positions].copy()


@dataclass(eq=False)
class UnionSections:
    """H^0 of a twist on the union, as a kernel inside the component sum."""

    twist: int
    pieces: tuple  # per-component QuotientPiece
    offsets: tuple  # block offset per component, plus total
    kernel: np.ndarray  # (total ambient dim) x dim, canonical basis
    free_rows: np.ndarray

    @property
    def dim(self) -> int:
        return self.kernel.shape[1]

    @property
    def total(self) -> int:
        return self.offsets[-1]

    def component_block(self, i: int):
        return self.kernel[self.offsets[i]:self.offsets[i + 1], :]

    def coords_of(self, ambient_vec):
        return ambient_vec[self.free_rows]


def sections_on_union(U: UnionSpec, k: int, field: PrimeField) -> UnionSections:
    """Kernel of the first Mayer-Vietoris differential at twist k."""
    pieces = tuple(
        sections_on_locus(U, (i,), k, field) for i in range(U.n_components)
    )
    offsets = [0]
    for qp in pieces:
        offsets.append(offsets[-1] + qp.dim)
    total = offsets[-1]
    if k < 0 or total == 0:
        return UnionSections(
            k, pieces, tuple(offsets), np.zeros((total, 0)),
            np.zeros(0, dtype=np.intp),
        )
    pairs = U.nonempty_subsets(2, field)
    blocks = []
    for (i, j) in pairs:
        pair_qp = sections_on_locus(U, (i, j), k, field)
        if pair_qp.dim == 0:
            continue
        row = np.zeros((pair_qp.dim, total))
        row[:, offsets[i]:offsets[i + 1]] = (
            field.p - restriction_quotient_matrix(pieces[i], pair_qp)
        ) % field.p
        row[:, offsets[j]:offsets[j + 1]] = restriction_quotient_matrix(
            pieces[j], pair_qp
        )
        blocks.append(row)
    if blocks:
        delta = np.concatenate(blocks, axis=0)
    else:
        delta = np.zeros((0, total))
    _, kern, free = kernel_with_free(SparseMatrix.from_dense(delta, field))
    return UnionSections(k, pieces, tuple(offsets), kern, free)


@dataclass(frozen=True)
class RestrictionReport:
    matrix: np.ndarray  # dim target x dim V
    surjective: bool
    kernel_dim: int


@dataclass(eq=False)
class SectionSystem:
    """Graded spaces M_q with the multiplication action of V.

    dims and multiplication matrices are stored for the built q range;
    asking outside it raises SystemRangeError per the engine contract.
    """

    label: str
    field: PrimeField
    bundle: LineBundleSpec
    q_lo: int
    q_hi: int
    dim_V: int
    dims: dict
    mults: dict  # (j, q) -> dense (dims[q+1], dims[q]) float64
    system_hash: str
    meta: dict
    extra: dict = dc_field(default_factory=dict)

    def dim_M(self, q: int) -> int:
        if q < self.q_lo or q > self.q_hi:
            raise SystemRangeError(
                f"q={q} outside built range [{self.q_lo}, {self.q_hi}] of {self.label}"
            )
        return self.dims[q]

    def mult(self, j: int, q: int):
        if q < self.q_lo or q + 1 > self.q_hi:
            raise SystemRangeError(
                f"multiplication at q={q} outside built range of {self.label}"
            )
        return self.mults[(j, q)]

    @cached_property
    def _coo_cache(self):
        return {}

    def mult_coo(self, j: int, q: int):
        key = (j, q)
        hit = self._coo_cache.get(key)
        if hit is None:
            t = self.mult(j, q)
            rows, cols = np.nonzero(t)
            vals = t[rows, cols].astype(np.int64)
            hit = (rows.astype(np.int64), cols.astype(np.int64), vals)
            self._coo_cache[key] = hit
        return hit

    def describe(self):
        return {
            "label": self.label,
            "hash": self.system_hash,
            "dim_V": self.dim_V,
            "dims_M": {str(q): self.dims[q] for q in sorted(self.dims)},
            "bundle": {"b": self.bundle.b, "d": self.bundle.d},
        }


def _hash_meta(meta: dict) -> str:
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def quotient_system(
    N: int,
    gens,
    bundle: LineBundleSpec,
    q_range,
    field: PrimeField,
    label: str = "component",
) -> SectionSystem:
    """Section system of a single complete-intersection component."""
    gens = tuple(gens)
    q_lo, q_hi = q_range
    V = quotient_piece(gens, bundle.d, N, field)
    pieces = {q: quotient_piece(gens, bundle.twist(q), N, field) for q in range(q_lo, q_hi + 1)}
    mults = {}
    for q in range(q_lo, q_hi):
        src, tgt = pieces[q], pieces[q + 1]
        for j, mono in enumerate(V.basis_monomials):
            if src.dim and tgt.dim:
                mults[(j, q)] = multiplication_matrix(mono, src, tgt)
            else:
                mults[(j, q)] = np.zeros((tgt.dim, src.dim))
    meta = {
        "kind": "quotient",
        "ambient": N,
        "gens": [g.canonical() for g in gens],
        "b": bundle.b,
        "d": bundle.d,
        "q_range": [q_lo, q_hi],
    }
    return SectionSystem(
        label=label,
        field=field,
        bundle=bundle,
        q_lo=q_lo,
        q_hi=q_hi,
        dim_V=V.dim,
        dims={q: pieces[q].dim for q in pieces},
        mults=mults,
        system_hash=_hash_meta(meta),
        meta=meta,
        extra={"pieces": pieces, "V_piece": V, "gens": gens},
    )


def union_system(
    U: UnionSpec,
    bundle: LineBundleSpec,
    q_range,
    field: PrimeField,
    label: str = "union",
) -> SectionSystem:
    """Section system of the union; multiplication acts componentwise on
    kernel tuples and is re-expressed in the canonical kernel basis.  The
    product of kernel tuples is checked to land in the kernel, exactly."""
    q_lo, q_hi = q_range
    p = field.p
    V_sec = sections_on_union(U, bundle.d, field)
    sec = {q: sections_on_union(U, bundle.twist(q), field) for q in range(q_lo, q_hi + 1)}
    # per-component coordinates of every V basis vector
    v_coords = [
        [V_sec.component_block(i)[:, j] for i in range(U.n_components)]
        for j in range(V_sec.dim)
    ]
    mults = {}
    for q in range(q_lo, q_hi):
        src, tgt = sec[q], sec[q + 1]
        for j in range(V_sec.dim):
            if src.dim == 0 or tgt.total == 0:
                mults[(j, q)] = np.zeros((tgt.dim, src.dim))
                continue
            blocks = []
            for i in range(U.n_components):
                s_qp, t_qp = src.pieces[i], tgt.pieces[i]
                if s_qp.dim and t_qp.dim:
                    ti = multiplication_by_class(
                        v_coords[j][i], bundle.d, s_qp, t_qp
                    )
                else:
                    ti = np.zeros((t_qp.dim, s_qp.dim))
                blocks.append(ti)
            image = np.zeros((tgt.total, src.dim))
            for i in range(U.n_components):
                image[tgt.offsets[i]:tgt.offsets[i + 1], :] = matmul_mod(
                    blocks[i], src.component_block(i), p
                )
            coords = image[tgt.free_rows, :] if tgt.dim else np.zeros((0, src.dim))
            # exactness of the kernel re-expression, per basis pair
            back = matmul_mod(tgt.kernel, coords, p) if tgt.dim else np.zeros_like(image)
            if not np.array_equal(back, image):
                raise AssertionError(
                    f"product of kernel sections left the kernel at q={q} ({label})"
                )
            mults[(j, q)] = coords
    meta = {
        "kind": "union",
        "union": U.canonical(),
        "b": bundle.b,
        "d": bundle.d,
        "q_range": [q_lo, q_hi],
    }
    return SectionSystem(
        label=label,
        field=field,
        bundle=bundle,
        q_lo=q_lo,
        q_hi=q_hi,
        dim_V=V_sec.dim,
        dims={q: sec[q].dim for q in sec},
        mults=mults,
        system_hash=_hash_meta(meta),
        meta=meta,
        extra={"sections": sec, "V_sections": V_sec, "union": U},
    )


def restriction_matrix(
    U: UnionSpec, indices, field: PrimeField, V_sec: UnionSections
) -> RestrictionReport:
    """Matrix of V -> H^0(O(d)|locus) with surjectivity flag and kernel dim."""
    indices = tuple(sorted(indices))
    locus = sections_on_locus(U, indices, V_sec.twist, field)
    i0 = indices[0]
    R = matmul_mod(
        restriction_quotient_matrix(V_sec.pieces[i0], locus),
        V_sec.component_block(i0),
        field.p,
    )
    res = rank_kernel(SparseMatrix.from_dense(R, field))
    return RestrictionReport(
        matrix=R,
        surjective=(res.rank == locus.dim),
        kernel_dim=V_sec.dim - res.rank,
    )


def locus_sum_system(
    U: UnionSpec,
    bundle: LineBundleSpec,
    level: int,
    q_range,
    field: PrimeField,
    V_sec: UnionSections | None = None,
    label: str | None = None,
) -> SectionSystem:
    """Direct-sum system over all nonempty (level+1)-fold intersection loci,
    with V acting through the restriction maps."""
    q_lo, q_hi = q_range
    p = field.p
    if V_sec is None:
        V_sec = sections_on_union(U, bundle.d, field)
    loci = U.nonempty_subsets(level + 1, field)
    locus_pieces = {
        idx: {
            q: sections_on_locus(U, idx, bundle.twist(q), field)
            for q in range(q_lo, q_hi + 1)
        }
        for idx in loci
    }
    # restriction of each V basis vector to each locus, in locus coordinates
    locus_d = {idx: sections_on_locus(U, idx, bundle.d, field) for idx in loci}
    v_on_locus = {}
    for idx in loci:
        i0 = idx[0]
        rmat = matmul_mod(
            restriction_quotient_matrix(V_sec.pieces[i0], locus_d[idx]),
            V_sec.component_block(i0),
            p,
        )
        v_on_locus[idx] = rmat
    dims = {
        q: sum(locus_pieces[idx][q].dim for idx in loci) for q in range(q_lo, q_hi + 1)
    }
    mults = {}
    for q in range(q_lo, q_hi):
        for j in range(V_sec.dim):
            blocks = []
            for idx in loci:
                s_qp = locus_pieces[idx][q]
                t_qp = locus_pieces[idx][q + 1]
                if s_qp.dim and t_qp.dim:
                    blocks.append(
                        multiplication_by_class(v_on_locus[idx][:, j], bundle.d, s_qp, t_qp)
                    )
                else:
                    blocks.append(np.zeros((t_qp.dim, s_qp.dim)))
            full = np.zeros((dims[q + 1], dims[q]))
            ro = co = 0
            for blk in blocks:
                full[ro:ro + blk.shape[0], co:co + blk.shape[1]] = blk
                ro += blk.shape[0]
                co += blk.shape[1]
            mults[(j, q)] = full
    meta = {
        "kind": "locus_sum",
        "union": U.canonical(),
        "level": level,
        "b": bundle.b,
        "d": bundle.d,
        "q_range": [q_lo, q_hi],
    }
    return SectionSystem(
        label=label or f"B^{level}",
        field=field,
        bundle=bundle,
        q_lo=q_lo,
        q_hi=q_hi,
        dim_V=V_sec.dim,
        dims=dims,
        mults=mults,
        system_hash=_hash_meta(meta),
        meta=meta,
        extra={"loci": loci, "locus_pieces": locus_pieces, "union": U},
    )


def build_section_system(geom, bundle: LineBundleSpec, q_range, field: PrimeField, label=None):
    """Section system for a ComponentSpec or UnionSpec.

    q_range must already cover one step beyond every Koszul cell that will
    be requested (the engine looks at M_{q-1} and M_{q+1})."""
    if isinstance(geom, ComponentSpec):
        return quotient_system(
            geom.ambient, geom.gens, bundle, q_range, field, label or geom.label
        )
    if isinstance(geom, UnionSpec):
        if geom.n_components == 1:
            comp = geom.components[0]
            return quotient_system(
                geom.ambient, comp.gens, bundle, q_range, field, label or comp.label
            )
        return union_system(geom, bundle, q_range, field, label or "union")
    raise GeometryInputError(f"cannot build a section system from {geom!r}")


def coordinate_hyperplane_union(n: int) -> UnionSpec:
    """The n+2 coordinate hyperplanes in P^{n+1}."""
    if n < 1:
        raise GeometryInputError("need n >= 1")
    comps = tuple(
        ComponentSpec(f"H{i}", n + 1, (Polynomial.coordinate(n + 1, i),))
        for i in range(n + 2)
    )
    return UnionSpec(n + 1, comps)


def _poly_from_canonical(nvars, data) -> Polynomial:
    return Polynomial.make(nvars, {tuple(m): c for m, c in data})


def _union_from_canonical(data) -> UnionSpec:
    N = data["ambient"]
    comps = tuple(
        ComponentSpec(
            label, amb, tuple(_poly_from_canonical(amb + 1, g) for g in gens)
        )
        for label, amb, gens in data["components"]
    )
    return UnionSpec(N, comps)


def system_from_meta(meta: dict, field: PrimeField) -> SectionSystem:
    """Rebuild a section system from its stored meta block (cache verify)."""
    bundle = LineBundleSpec(meta["b"], meta["d"])
    q_range = tuple(meta["q_range"])
    kind = meta["kind"]
    if kind == "quotient":
        N = meta["ambient"]
        gens = tuple(_poly_from_canonical(N + 1, g) for g in meta["gens"])
        return quotient_system(N, gens, bundle, q_range, field)
    if kind == "union":
        return union_system(_union_from_canonical(meta["union"]), bundle, q_range, field)
    if kind == "locus_sum":
        return locus_sum_system(
            _union_from_canonical(meta["union"]), bundle, meta["level"], q_range, field
        )
    raise GeometryInputError(f"unknown system kind {kind!r}")
