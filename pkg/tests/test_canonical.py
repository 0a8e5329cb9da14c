import pytest

from floerkit.ainfty import FilteredAinfAlgebra, check_ainf, check_hom, check_unit
from floerkit.canonical import (
    SplittingData, canonical_model, compare_homology, identity_splitting, standard_splitting,
    verify_splitting,
)
from floerkit.coeff import QQ
from floerkit.fixtures import fixture_suite, heisenberg_algebra, m3_algebra, pq_algebra, torus_algebra
from oracles import _rank_fraction

SUITE = fixture_suite()


def betti_oracle(A):
    """Betti numbers of (C, m_{1,0}) by dense ranks over the ground field."""
    from floerkit.ainfty import ZERO
    d = A.ops.get((1, ZERO), {})
    degs = sorted({A.degree(i) for i in range(A.n)})
    by = {g: [i for i in range(A.n) if A.degree(i) == g] for g in degs}

    def rk(g):
        src, tgt = by.get(g, []), by.get(g + 1, [])
        if not src or not tgt:
            return 0
        rows = [[d.get((s,), {}).get(t, 0) for t in tgt] for s in src]
        return _rank_fraction(rows, A.ring.p)

    return {g: len(by[g]) - rk(g) - rk(g - 1) for g in degs}


def splitting_for(A):
    return standard_splitting(A) if A.ring.is_field else identity_splitting(A)


@pytest.mark.parametrize("name,A", SUITE, ids=[n for n, _ in SUITE])
def test_canonical_model(name, A):
    S = splitting_for(A)
    assert verify_splitting(A, S).ok
    B, f, rep = canonical_model(A, S)
    ra = check_ainf(B)
    assert ra.ok, ra.defects[:3]
    rh = check_hom(f)
    assert rh.ok, rh.defects[:3]
    assert compare_homology(A, B).ok
    # the summand carries one generator per homology class at energy zero
    want = betti_oracle(A)
    got = {g: sum(1 for i in range(B.n) if B.degree(i) == g) for g in want}
    assert got == want
    if B.unit is not None:
        assert check_unit(B).ok


def test_suite_size():
    assert len(SUITE) >= 20


def test_known_betti_numbers():
    assert betti_oracle(heisenberg_algebra(K=3)) == {0: 1, 1: 2, 2: 2, 3: 1}
    assert betti_oracle(pq_algebra()) == {0: 1, 1: 0}
    B, _, _ = canonical_model(pq_algebra(), standard_splitting(pq_algebra()))
    assert B.names == ["e"] and B.unit == "e"


def test_zero_differential_transfer_is_identity():
    A = torus_algebra(QQ, 2, K=3)
    B, f, _ = canonical_model(A, identity_splitting(A))
    assert B.same_ops(A)


def test_m3_survives_transfer():
    A = m3_algebra(K=4)
    B, f, _ = canonical_model(A, standard_splitting(A))
    assert B.same_ops(A)


def test_broken_splitting_rejected():
    A = pq_algebra()
    S = standard_splitting(A)
    bad = SplittingData(S.generators, S.iota, S.pi, {}, unit=S.unit)
    assert not verify_splitting(A, bad).ok
    with pytest.raises(ValueError):
        canonical_model(A, bad)


def test_splitting_json_roundtrip():
    A = heisenberg_algebra(K=3)
    S = standard_splitting(A)
    S2 = SplittingData.from_json(A, S.to_json(A))
    assert (S2.iota, S2.pi, S2.H) == (S.iota, S.pi, S.H)


def test_transferred_algebra_json():
    A = dict(SUITE)["pq+scaled/Q"]
    B, _, _ = canonical_model(A, standard_splitting(A))
    assert FilteredAinfAlgebra.from_json(B.to_json()).same_ops(B)
