import numpy as np
import pytest

from koszulnc import PrimeField
from koszulnc.gradedring import Polynomial
from koszulnc.geometry import (
    ComponentSpec,
    LineBundleSpec,
    UnionSpec,
    coordinate_hyperplane_union,
    sections_on_union,
)
from koszulnc.koszul import CellEngine
from koszulnc.mvcomplex import (
    B_cohomology,
    DualComplexError,
    SimplicialComplex,
    build_B_complex,
    dual_complex,
    hypothesis_report,
    lemma1_verify,
    simplicial_cohomology,
)

F = PrimeField()


def test_triangle_b_complex_q0():
    U = coordinate_hyperplane_union(1)
    bc = build_B_complex(U, LineBundleSpec(0, 2), 0, F)
    assert bc.space_dims == [3, 3]
    assert bc.cohomology_dims() == [1, 1]


def test_four_planes_b_complex_q0():
    U = coordinate_hyperplane_union(2)
    bc = build_B_complex(U, LineBundleSpec(0, 2), 0, F)
    assert bc.space_dims == [4, 6, 4]
    assert bc.cohomology_dims() == [1, 0, 1]


def test_single_component_concentrated():
    f = Polynomial.random(2, 3, np.random.default_rng(0))
    U = UnionSpec(2, (ComponentSpec("X", 2, (f,)),))
    bc = build_B_complex(U, LineBundleSpec(0, 2), 1, F)
    assert len(bc.space_dims) == 1 and not bc.deltas


def test_triangle_higher_vanishing_and_h0():
    U = coordinate_hyperplane_union(1)
    bundle = LineBundleSpec(0, 2)
    for q in range(4):
        dims = B_cohomology(U, bundle, q, F)
        assert dims[0] == sections_on_union(U, bundle.twist(q), F).dim
        if q >= 1:
            assert dims[1] == 0


def test_b_complex_euler_characteristic():
    U = coordinate_hyperplane_union(2)
    bundle = LineBundleSpec(0, 2)
    for q in range(3):
        bc = build_B_complex(U, bundle, q, F)
        chi_spaces = sum((-1) ** p * d for p, d in enumerate(bc.space_dims))
        chi_coh = sum((-1) ** p * d for p, d in enumerate(bc.cohomology_dims()))
        assert chi_spaces == chi_coh


def test_dual_complex_shapes():
    tri = dual_complex(coordinate_hyperplane_union(1), F)
    assert len(tri.faces[0]) == 3 and len(tri.faces[1]) == 3 and tri.dim == 1
    tetra = dual_complex(coordinate_hyperplane_union(2), F)
    assert [len(tetra.faces[k]) for k in range(3)] == [4, 6, 4]
    rng = np.random.default_rng(1)
    pair = UnionSpec(3, (
        ComponentSpec("A", 3, (Polynomial.random(3, 4, rng),)),
        ComponentSpec("B", 3, (Polynomial.random(3, 4, rng),)),
    ))
    edge = dual_complex(pair, F)
    assert edge.dim == 1 and len(edge.faces[1]) == 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_configuration_cohomology(n):
    sc = dual_complex(coordinate_hyperplane_union(n), F)
    dims = simplicial_cohomology(sc, F)
    want = [1] + [0] * (n - 1) + [1]
    assert dims == want


def test_full_simplex_contractible():
    faces = {0: ((0,), (1,), (2,)), 1: ((0, 1), (0, 2), (1, 2)), 2: ((0, 1, 2),)}
    sc = SimplicialComplex(("a", "b", "c"), faces)
    assert simplicial_cohomology(sc, F) == [1, 0, 0]


def test_three_cycle_cohomology():
    faces = {0: ((0,), (1,), (2,)), 1: ((0, 1), (0, 2), (1, 2))}
    sc = SimplicialComplex(("a", "b", "c"), faces)
    assert simplicial_cohomology(sc, F) == [1, 1]


def test_inconsistent_incidence_rejected():
    with pytest.raises(DualComplexError):
        SimplicialComplex(("a", "b", "c"), {0: ((0,), (1,)), 1: ((0, 2),)})


def test_remark2_b0_matches_dual_complex():
    for n in (1, 2):
        U = coordinate_hyperplane_union(n)
        dims_b = B_cohomology(U, LineBundleSpec(0, 2), 0, F)
        dims_s = simplicial_cohomology(dual_complex(U, F), F)
        assert dims_b == dims_s


def test_hypothesis_report_triangle():
    U = coordinate_hyperplane_union(1)
    for d in (1, 2):
        rep = hypothesis_report(U, LineBundleSpec(0, d), (0, 3), F)
        assert rep.restriction_surjective
        assert rep.negative_twists_vanish
        assert all(rep.h0_matches_union_sections.values())
        assert all(rep.higher_vanishing.values())
        assert rep.structure_cohomology_structural
        assert rep.all_hold()


def test_lemma1_triangle_q2():
    U = coordinate_hyperplane_union(1)
    eng = CellEngine()
    rep = lemma1_verify(U, LineBundleSpec(0, 2), 2, [6], eng)
    assert rep.h_total == 6
    assert rep.b0_cohomology == [1, 1]
    (entry,) = rep.entries
    assert entry["predicted"] == 1 and entry["computed"] == 1
    assert entry["status"] == "VERIFIED"
    assert rep.module_entries and all(
        e["status"] == "VERIFIED" for e in rep.module_entries
    )
    assert rep.verified()


def test_lemma1_triangle_q01():
    U = coordinate_hyperplane_union(1)
    eng = CellEngine()
    rep1 = lemma1_verify(U, LineBundleSpec(0, 2), 1, [6], eng, check_modules=False)
    assert rep1.s_q == 1
    assert rep1.admissible_l == [6]
    assert rep1.entries[0]["predicted"] == 0
    assert rep1.entries[0]["computed"] == 0
    assert rep1.entries[0]["status"] == "VERIFIED"
    rep0 = lemma1_verify(U, LineBundleSpec(0, 2), 0, [4, 5, 6], eng, check_modules=False)
    assert rep0.s_q == 0
    assert rep0.admissible_l == [6]
    statuses = {e["l"]: e["status"] for e in rep0.entries}
    assert statuses[4] == "NOT_APPLICABLE" and statuses[5] == "NOT_APPLICABLE"
    assert statuses[6] == "VERIFIED"
