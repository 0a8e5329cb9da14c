from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from floerkit.ainfty import check_ainf, identity_hom
from floerkit.coeff import GF, QQ
from floerkit.fixtures import exact_curvature_algebra, fixture_suite, obstructed_algebra, pq_algebra
from floerkit.mc import (
    TwistData, check_floer_product, check_weak_mc, deform, deform_twisted, floer_complex,
    mc_element, mc_from_json, mc_to_json, pushforward, solve_mc, twisted_mc_residual,
)
from floerkit.novikov import NovikovElem

H = Fraction(1, 2)


def hand_b(A):
    return mc_element(A, {"d": NovikovElem.monomial(A.ring, -1, H)})


@pytest.mark.parametrize("R", [QQ, GF(3), GF(2)], ids=lambda r: r.name)
def test_exact_fixture(R):
    A = exact_curvature_algebra(R)
    b = hand_b(A)
    r = check_weak_mc(A, b)
    assert r.status == "solved" and not r.PO
    sol = solve_mc(A)
    assert sol.status == "solved"
    assert sol.b.equal(b)
    cx, rep = floer_complex(A, sol.b, sol.b)
    assert rep.ok and not cx.square()
    D = deform(A, sol.b)
    assert check_ainf(D).ok


def test_wrong_b_has_defect():
    A = exact_curvature_algebra()
    b = mc_element(A, {"d": NovikovElem.monomial(QQ, 1, H)})
    r = check_weak_mc(A, b)
    assert r.status == "defect"
    assert r.defect.terms[A.module.index["y"]] == NovikovElem.monomial(QQ, 2, H)


def test_obstruction_class():
    A = obstructed_algebra()
    sol = solve_mc(A)
    assert sol.status == "obstructed"
    ob = sol.obstruction
    assert ob["level"] == "1/2" and ob["mu2"] == 0
    assert ob["cycle"] == {"y": "1", "z": "1"}
    assert ob["class"] == {"z": "1"}


@pytest.mark.parametrize("name,A", [(n, A) for n, A in fixture_suite() if A.unit is not None],
                         ids=lambda x: x if isinstance(x, str) else "")
def test_deform_by_zero_is_identity(name, A):
    assert deform(A, mc_element(A, {})).same_ops(A)


def test_trivial_twist_equals_deform():
    A = exact_curvature_algebra()
    b = hand_b(A)
    t = TwistData([QQ.one()], {(H, 0): (1,)}, b)
    assert deform_twisted(A, t).same_ops(deform(A, b))
    assert not twisted_mc_residual(A, t).terms.get(A.module.index["y"])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(-2, 2))
def test_twisted_bounding_cochain(r, cls):
    # rho rescales m_{0,1/2}; b = -rho^cls T^{1/2} d still bounds and the deformation is valid
    A = exact_curvature_algebra()
    factor = Fraction(r) ** cls
    b = mc_element(A, {"d": NovikovElem.monomial(QQ, -factor, H)})
    t = TwistData([Fraction(r)], {(H, 0): (cls,)}, b)
    assert not twisted_mc_residual(A, t).terms
    assert check_ainf(deform_twisted(A, t)).ok


def test_solved_fixtures_square_to_zero():
    for name, A in fixture_suite(rings=(QQ, GF(3))):
        if A.unit is None:
            continue
        sol = solve_mc(A)
        if sol.status != "solved":
            continue
        cx, rep = floer_complex(A, sol.b, sol.b)
        assert rep.ok, name


def test_curvature_becomes_potential():
    A = dict(fixture_suite(rings=(QQ,)))["pq+curv/Q"]
    sol = solve_mc(A)
    assert sol.status == "solved"
    assert sol.PO == NovikovElem.monomial(QQ, 1, 1, 2)


def test_json_and_pushforward():
    A = exact_curvature_algebra()
    b = hand_b(A)
    assert mc_from_json(A, mc_to_json(A, b)).equal(b)
    assert pushforward(identity_hom(A), b).equal(b)


def test_floer_product_associative():
    A = pq_algebra()
    e = A.basis(A.unit_index())
    rep = check_floer_product(A, mc_element(A, {}), [("e", e)])
    assert rep.ok


def test_b_validation():
    A = exact_curvature_algebra()
    with pytest.raises(ValueError):
        check_weak_mc(A, mc_element(A, {"d": NovikovElem.const(QQ, 1)}))
    with pytest.raises(ValueError):
        mc_element(A, {"nope": NovikovElem.const(QQ, 1)})
