import numpy as np
import pytest

from koszulnc import PrimeField
from koszulnc.gradedring import Polynomial
from koszulnc.geometry import (
    ComponentSpec,
    GeometryInputError,
    LineBundleSpec,
    SystemRangeError,
    UnionSpec,
    build_section_system,
    coordinate_hyperplane_union,
    quotient_system,
    restriction_matrix,
    sections_on_locus,
    sections_on_union,
    union_system,
)

F = PrimeField()


def triangle():
    return coordinate_hyperplane_union(1)


def quartic_pair(seed=20240):
    rng = np.random.default_rng(seed)
    g1 = Polynomial.random(3, 4, rng)
    g2 = Polynomial.random(3, 4, rng)
    return UnionSpec(3, (
        ComponentSpec("S1", 3, (g1,)),
        ComponentSpec("S2", 3, (g2,)),
    ))


def test_bundle_validation():
    with pytest.raises(GeometryInputError):
        LineBundleSpec(0, 0)
    assert LineBundleSpec(-3, 2).twist(2) == 1


def test_sections_on_locus_dims():
    U = triangle()
    assert sections_on_locus(U, (0,), 2, F).dim == 3
    assert sections_on_locus(U, (0, 1), 2, F).dim == 1
    P = quartic_pair()
    assert sections_on_locus(P, (0, 1), 2, F).dim == 10


def test_empty_locus_detection():
    U = triangle()
    assert U.nonempty_locus((0, 1), F)
    assert not U.nonempty_locus((0, 1, 2), F)
    assert U.nonempty_subsets(3, F) == []


def test_sections_on_union_triangle():
    U = triangle()
    s1 = sections_on_union(U, 1, F)
    assert s1.dim == 3
    s2 = sections_on_union(U, 2, F)
    assert s2.dim == 6
    # dim bound by the component sum
    assert s2.dim <= sum(qp.dim for qp in s2.pieces)


def test_sections_on_union_single_component_is_locus():
    f = Polynomial.random(2, 3, np.random.default_rng(1))
    U = UnionSpec(2, (ComponentSpec("X", 2, (f,)),))
    s = sections_on_union(U, 4, F)
    assert s.dim == sections_on_locus(U, (0,), 4, F).dim
    assert np.array_equal(s.kernel, np.eye(s.dim))


def test_restriction_matrix_triangle():
    U = triangle()
    V = sections_on_union(U, 1, F)
    rep = restriction_matrix(U, (0,), F, V)
    assert rep.surjective and rep.kernel_dim == 1
    rep2 = restriction_matrix(U, (0, 1), F, V)
    assert rep2.surjective and rep2.kernel_dim == 2


def test_restriction_single_hypersurface_low_twist():
    f = Polynomial.random(3, 4, np.random.default_rng(2))
    U = UnionSpec(3, (ComponentSpec("X", 3, (f,)),))
    V = sections_on_union(U, 2, F)
    rep = restriction_matrix(U, (0,), F, V)
    assert rep.surjective and rep.kernel_dim == 0


def test_build_p1_system_dims():
    sys = build_section_system(
        ComponentSpec("P1", 1, ()), LineBundleSpec(0, 3), (0, 2), F
    )
    assert sys.dim_V == 4
    assert [sys.dim_M(q) for q in (0, 1, 2)] == [1, 4, 7]
    with pytest.raises(SystemRangeError):
        sys.dim_M(3)
    with pytest.raises(SystemRangeError):
        sys.mult(0, 2)


def test_build_triangle_system_dims():
    sys = build_section_system(triangle(), LineBundleSpec(0, 2), (-1, 4), F)
    assert sys.dim_V == 6
    assert [sys.dim_M(q) for q in (0, 1, 2, 3)] == [1, 6, 12, 18]
    assert sys.dim_M(-1) == 0


def test_build_k3_system_dims():
    rng = np.random.default_rng(3)
    f = Polynomial.random(3, 4, rng)
    sys = quotient_system(3, (f,), LineBundleSpec(0, 2), (0, 2), F, "K3")
    assert sys.dim_V == 10
    assert sys.dim_M(1) == 10 and sys.dim_M(2) == 34


def test_union_multiplication_matches_componentwise_product():
    # multiply a union section by a V basis vector two ways
    U = triangle()
    sys = union_system(U, LineBundleSpec(0, 2), (0, 2), F)
    sec1 = sys.extra["sections"][1]
    sec2 = sys.extra["sections"][2]
    Vs = sys.extra["V_sections"]
    j, t = 2, 3
    coords = sys.mult(j, 1)[:, t]
    tuple_in = sec1.kernel[:, t]
    got = (sec2.kernel @ coords) % F.p
    # componentwise polynomial product, projected
    p = F.p
    for i in range(U.n_components):
        vblock = Vs.component_block(i)[:, j]
        mblock = tuple_in[sec1.offsets[i]:sec1.offsets[i + 1]]
        if not (np.any(vblock) and np.any(mblock)):
            want = np.zeros(sec2.pieces[i].dim)
        else:
            vpoly = Vs.pieces[i].lift_polynomial(vblock)
            mpoly = sec1.pieces[i].lift_polynomial(mblock)
            prod_coeffs = {}
            for mv, cv in vpoly.terms:
                for mm, cm in mpoly.terms:
                    key = tuple(a + b for a, b in zip(mv, mm))
                    prod_coeffs[key] = prod_coeffs.get(key, 0) + cv * cm
            prod = Polynomial.make(vpoly.nvars, prod_coeffs)
            want = sec2.pieces[i].project_polynomial(prod)
        assert np.array_equal(got[sec2.offsets[i]:sec2.offsets[i + 1]], want)


def test_union_dims_strictly_increase():
    sys = build_section_system(triangle(), LineBundleSpec(0, 2), (0, 4), F)
    dims = [sys.dim_M(q) for q in range(1, 5)]
    assert all(a < b for a, b in zip(dims, dims[1:]))
