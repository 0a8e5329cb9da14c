from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from floerkit.coeff import GF, QQ, ZZ, CoeffRing
from floerkit.novikov import NovikovElem, fmt_energy, parse_energy
from oracles import nov_add, nov_dict, nov_mul

RINGS = [ZZ, GF(2), GF(5), QQ]
ENERGIES = [Fraction(n, d) for n in range(0, 7) for d in (1, 2, 3)]


def coeffs(R):
    if R is QQ:
        return st.fractions(min_value=-5, max_value=5, max_denominator=4)
    return st.integers(-6, 6)


@st.composite
def elems(draw, R, max_terms=4):
    terms = draw(st.lists(st.tuples(coeffs(R), st.sampled_from(ENERGIES), st.integers(-2, 2)),
                          max_size=max_terms))
    return NovikovElem(R, terms)


def _mod(R):
    return R.p


@pytest.mark.parametrize("R", RINGS, ids=lambda r: r.name)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_ring_axioms(R, data):
    x, y, z = (data.draw(elems(R)) for _ in range(3))
    zero, one = NovikovElem.zero(R), NovikovElem.one(R)
    assert x + y == y + x
    assert (x + y) + z == x + (y + z)
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + zero == x and x * one == x and x * zero == zero
    assert x - x == zero


@pytest.mark.parametrize("R", RINGS, ids=lambda r: r.name)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_arithmetic_matches_dict_oracle(R, data):
    x, y = data.draw(elems(R)), data.draw(elems(R))
    E = data.draw(st.sampled_from(ENERGIES))
    assert nov_dict(x + y) == nov_add(nov_dict(x), nov_dict(y), _mod(R))
    assert nov_dict(x * y) == nov_mul(nov_dict(x), nov_dict(y), _mod(R))
    assert nov_dict(x.mul_trunc(y, E)) == nov_mul(nov_dict(x), nov_dict(y), _mod(R), E)


@pytest.mark.parametrize("R", RINGS, ids=lambda r: r.name)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_filtration(R, data):
    x, y = data.draw(elems(R)), data.draw(elems(R))
    E = data.draw(st.sampled_from(ENERGIES))
    assert (x + y).valuation() >= min(x.valuation(), y.valuation())
    assert (x * y).valuation() >= x.valuation() + y.valuation()
    if R.is_field and x and y:
        # leading parts are nonzero polynomials in e over a field
        assert (x * y).valuation() == x.valuation() + y.valuation()
    # truncation is a ring map modulo energies above E
    assert (x * y).truncate(E) == x.truncate(E).mul_trunc(y.truncate(E), E)
    assert (x + y).truncate(E) == x.truncate(E) + y.truncate(E)
    assert x.in_lambda0()
    assert x.shift(Fraction(1, 2)).in_lambda_plus()


@pytest.mark.parametrize("R", [GF(2), GF(5), QQ], ids=lambda r: r.name)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_invert(R, data):
    x = data.draw(elems(R))
    c = data.draw(coeffs(R).filter(lambda c: R.normalize(c) != 0))
    u = NovikovElem.const(R, c) + x.shift(Fraction(1, 3))
    E = Fraction(2)
    assert u.mul_trunc(u.invert(E), E) == NovikovElem.one(R)


def test_invert_errors():
    with pytest.raises(ValueError):
        NovikovElem.monomial(QQ, 1, 1).invert(2)
    with pytest.raises(ValueError):
        NovikovElem.const(ZZ, 2).invert(2)
    with pytest.raises(ZeroDivisionError):
        NovikovElem.zero(QQ).invert(2)
    assert NovikovElem.const(ZZ, -1).invert(3) == NovikovElem.const(ZZ, -1)


def test_terms_are_canonical():
    x = NovikovElem(GF(5), [(3, 1, 0), (2, 1, 0), (1, 0, 2)])
    assert x.terms == ((1, 0, 2),)
    assert x.degree() == 2
    assert NovikovElem(QQ, [(1, "1/2", 0), (1, 0, 2)]).valuation() == 0


def test_degree_inhomogeneous():
    with pytest.raises(ValueError):
        NovikovElem(QQ, [(1, 0, 0), (1, 1, 2)]).degree()


@pytest.mark.parametrize("R", RINGS, ids=lambda r: r.name)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_json_roundtrip(R, data):
    x = data.draw(elems(R))
    assert NovikovElem.from_json(R, x.to_json()) == x
    assert CoeffRing.from_json(R.to_json()) == R


def test_exact_energies():
    assert parse_energy("7/10") == Fraction(7, 10)
    assert fmt_energy(Fraction(7, 10)) == "7/10" and fmt_energy(2) == "2"
    with pytest.raises(TypeError):
        parse_energy(0.7)
    with pytest.raises(ValueError):
        NovikovElem.from_json(QQ, [{"c": 1, "lam": "1", "mu2": "2"}])


def test_ring_validation():
    with pytest.raises(ValueError):
        GF(4)
    with pytest.raises(ValueError):
        ZZ.normalize(Fraction(1, 2))
    assert GF(5).normalize(Fraction(1, 2)) == 3
    assert CoeffRing.from_json("Z/7") == GF(7)
    with pytest.raises(ZeroDivisionError):
        ZZ.inv(2)
    with pytest.raises(ValueError):
        NovikovElem.one(QQ) + NovikovElem.one(ZZ)
