import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from floerkit.stacks import (
    CoverNerve, FiniteGroup, GroupCatSheaf, SheafIso, StackBundle, abelian_cech_class, apply_iso,
    check_bundle, check_group_cocycle, coboundary_sheaf, compose_iso, derive_gamma_from_actions,
    fixed_dim, fixed_subbundle, identity_iso, inverse_iso, octahedron_nerve, random_iso, regular_rep,
    same_sheaf, sign_rep, transport_bundle, trivial_rep, wrapped_sheaf,
)
from oracles import fundamental_pairing, octahedron_orientation

NERVE = octahedron_nerve()


def trivial_sheaf(G, N=NERVE):
    return GroupCatSheaf(G, N, {q: G.identity_aut() for q in N.pairs}, {t: G.identity for t in N.triples})


def s3_sheaf(seed):
    G = FiniteGroup.symmetric(3)
    rng = random.Random(seed)
    c = {q: rng.randrange(G.n) for q in NERVE.pairs}
    gamma = {(i, j, k): G.prod(c[(i, j)], c[(j, k)], G.inv(c[(i, k)])) for (i, j, k) in NERVE.triples}
    return GroupCatSheaf(G, NERVE, {q: G.ad(c[q]) for q in NERVE.pairs}, gamma)


# -- groups ----------------------------------------------------------------------


def test_group_axioms_rejected():
    with pytest.raises(ValueError):
        FiniteGroup([[0, 1], [1, 1]])
    with pytest.raises(ValueError):
        FiniteGroup([[0, 1, 2], [1, 0, 2], [2, 2, 0]])


@pytest.mark.parametrize("G, count", [
    (FiniteGroup.cyclic(5), 4), (FiniteGroup.cyclic(6), 2), (FiniteGroup.symmetric(3), 6),
    (FiniteGroup.abelian([2, 2]), 6), (FiniteGroup.cyclic(8), 4),
])
def test_automorphism_counts(G, count):
    auts = G.automorphisms()
    assert len(auts) == count
    assert all(G.is_automorphism(a) for a in auts)


def test_symmetric_group_basics():
    G = FiniteGroup.symmetric(3)
    assert G.n == 6 and not G.is_abelian()
    assert sorted(G.order(g) for g in range(6)) == [1, 2, 2, 2, 3, 3]


# -- nerves ------------------------------------------------------------------------


def test_octahedron_sizes():
    assert len(NERVE.simplices[0]) == 6
    assert (len(NERVE.pairs), len(NERVE.triples), len(NERVE.quadruples)) == (30, 126, 462)


def test_nerve_downward_closure_enforced():
    with pytest.raises(ValueError):
        CoverNerve(["a", "b"], {0: [("a",), ("b",)], 1: [("a", "b")], 2: [("a", "b", "b")]})


def test_nerve_json_roundtrip():
    N = CoverNerve.from_json(NERVE.to_json())
    assert N.simplices == NERVE.simplices


# -- cocycle checks --------------------------------------------------------------


def test_trivial_sheaf_passes():
    assert check_group_cocycle(trivial_sheaf(FiniteGroup.cyclic(4))).ok


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_wrapped_sheaf_passes(p):
    rep = check_group_cocycle(wrapped_sheaf(p))
    assert rep.ok and rep.stats["quadruples"] == 462


def brute_force_failing_quadruples(S):
    G = S.group
    out = set()
    for (i, j, k, l) in S.nerve.quadruples:
        if G.mul(S.gamma[(i, j, k)], S.gamma[(i, k, l)]) != G.mul(S.h[(i, j)][S.gamma[(j, k, l)]], S.gamma[(i, j, l)]):
            out.add((i, j, k, l))
    return out


@pytest.mark.parametrize("seed", range(5))
def test_corrupted_gamma_flagged_at_the_right_quadruples(seed):
    rng = random.Random(seed)
    S = wrapped_sheaf(5)
    t = rng.choice(S.nerve.triples)
    S.gamma[t] = (S.gamma[t] + rng.randrange(1, 5)) % 5
    rep = check_group_cocycle(S)
    flagged = {tuple(d["simplex"]) for d in rep.defects if d["kind"] == "quadruple"}
    expected = brute_force_failing_quadruples(S)
    assert flagged == expected and expected
    assert all(t in [q[:j] + q[j + 1:] for j in range(4)] for q in flagged)


def test_corrupted_h_flagged_on_triples():
    S = s3_sheaf(1)
    q = S.nerve.pairs[3]
    S.h[q] = S.group.ad(1) if S.h[q] != S.group.ad(1) else S.group.ad(2)
    rep = check_group_cocycle(S)
    assert not rep.ok
    assert all(q[0] in d["simplex"] and q[1] in d["simplex"] for d in rep.defects if d["kind"] == "triple")


def test_nonabelian_translation_sheaf_passes():
    for seed in range(3):
        assert check_group_cocycle(s3_sheaf(seed)).ok


# -- isomorphisms ------------------------------------------------------------------


def test_identity_iso_fixes_sheaf():
    S = s3_sheaf(0)
    assert same_sheaf(apply_iso(S, identity_iso(S.group, NERVE)), S)


@pytest.mark.parametrize("seed", range(10))
def test_iso_preserves_cocycle_and_inverts(seed):
    rng = random.Random(seed)
    S = s3_sheaf(seed)
    G = S.group
    t = random_iso(G, NERVE, rng)
    S2 = apply_iso(S, t)
    assert check_group_cocycle(S2).ok
    assert same_sheaf(apply_iso(S2, inverse_iso(G, t)), S)
    assert same_sheaf(apply_iso(S, compose_iso(G, inverse_iso(G, t), t)), S)


@pytest.mark.parametrize("seed", range(10))
def test_composition_acts_like_successive_application(seed):
    rng = random.Random(100 + seed)
    S = s3_sheaf(seed)
    G = S.group
    t1, t2 = random_iso(G, NERVE, rng), random_iso(G, NERVE, rng)
    assert same_sheaf(apply_iso(apply_iso(S, t1), t2), apply_iso(S, compose_iso(G, t2, t1)))


def test_compose_iso_is_associative():
    rng = random.Random(7)
    G = FiniteGroup.symmetric(3)
    a, b, c = (random_iso(G, NERVE, rng) for _ in range(3))
    lhs = compose_iso(G, compose_iso(G, c, b), a)
    rhs = compose_iso(G, c, compose_iso(G, b, a))
    assert lhs.mu == rhs.mu and lhs.psi == rhs.psi


def test_pure_mu_isos_multiply_pointwise():
    rng = random.Random(3)
    G = FiniteGroup.symmetric(3)
    one = {i: G.identity_aut() for i in NERVE.index}
    m1 = {q: rng.randrange(6) for q in NERVE.pairs}
    m2 = {q: rng.randrange(6) for q in NERVE.pairs}
    comp = compose_iso(G, SheafIso(m1, one), SheafIso(m2, one))
    assert comp.mu == {q: G.mul(m1[q], m2[q]) for q in NERVE.pairs}
    assert comp.psi == one


def test_psi_after_mu_rule():
    rng = random.Random(4)
    G = FiniteGroup.symmetric(3)
    auts = G.automorphisms()
    psi = {i: rng.choice(auts) for i in NERVE.index}
    mu = {q: rng.randrange(6) for q in NERVE.pairs}
    one_mu = {q: G.identity for q in NERVE.pairs}
    one_psi = {i: G.identity_aut() for i in NERVE.index}
    comp = compose_iso(G, SheafIso(one_mu, psi), SheafIso(mu, one_psi))
    assert comp.mu == {q: psi[q[0]][mu[q]] for q in NERVE.pairs}
    assert comp.psi == psi


def test_iso_shape_mismatch():
    S = wrapped_sheaf(3)
    with pytest.raises(ValueError):
        apply_iso(S, SheafIso({}, {}))


# -- Cech classes ----------------------------------------------------------------


@pytest.mark.parametrize("p", [2, 3, 5])
def test_wrapped_class_generates(p):
    S = wrapped_sheaf(p)
    cls = abelian_cech_class(S)
    assert cls["invariants"] == [p]
    assert cls["generates"] and not cls["zero"] and cls["order"] == p
    pairing = fundamental_pairing(S, octahedron_orientation(NERVE.index))
    assert pairing != 0


@pytest.mark.parametrize("p, twist", [(5, 2), (6, 2), (6, 3), (4, 2), (7, 0)])
def test_class_order_matches_fundamental_pairing(p, twist):
    S = wrapped_sheaf(p, twist=twist)
    cls = abelian_cech_class(S)
    pairing = fundamental_pairing(S, octahedron_orientation(NERVE.index))
    order = FiniteGroup.cyclic(p).order(pairing)
    assert cls["order"] == order
    assert cls["zero"] == (pairing == 0)


@pytest.mark.parametrize("orders", [[2], [3], [5], [4], [2, 2], [2, 3]])
def test_coboundaries_are_zero(orders):
    G = FiniteGroup.abelian(orders)
    rng = random.Random(sum(orders))
    mu = {q: rng.randrange(G.n) for q in NERVE.pairs}
    S = coboundary_sheaf(G, NERVE, mu)
    assert check_group_cocycle(S).ok
    cls = abelian_cech_class(S)
    assert cls["zero"]
    # H^2(S^2; G) is G itself for a trivial local system
    size = 1
    for d in cls["invariants"]:
        size *= d
    assert size == G.n


def test_trivial_local_system_on_klein_four():
    G = FiniteGroup.abelian([2, 2])
    S = trivial_sheaf(G)
    base = wrapped_sheaf(2)
    # embed the Z/2 cocycle on the first factor
    e1 = G.names.index("(1,0)")
    S.gamma = {t: (e1 if base.gamma[t] else G.identity) for t in NERVE.triples}
    assert check_group_cocycle(S).ok
    cls = abelian_cech_class(S)
    assert cls["invariants"] == [2, 2] and cls["order"] == 2 and not cls["generates"]


@pytest.mark.parametrize("p", [3, 5])
def test_twisted_local_system_is_supported(p):
    S = wrapped_sheaf(p)
    rng = random.Random(p)
    t = random_iso(S.group, NERVE, rng)
    S2 = apply_iso(S, t)
    assert check_group_cocycle(S2).ok
    assert abelian_cech_class(S2)["order"] == p


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(0, 10 ** 6))
def test_class_is_iso_invariant(p, seed):
    S = wrapped_sheaf(p)
    G = S.group
    rng = random.Random(seed)
    t = random_iso(G, NERVE, rng)
    back = apply_iso(apply_iso(S, t), SheafIso({q: 0 for q in NERVE.pairs},
                                               {i: G.aut_inverse(t.psi[i]) for i in NERVE.index}))
    assert back.h == S.h
    assert abelian_cech_class(back) == abelian_cech_class(S)


def test_nonabelian_class_rejected():
    with pytest.raises(ValueError):
        abelian_cech_class(s3_sheaf(0))


def test_non_local_system_rejected():
    S = wrapped_sheaf(5)
    q = NERVE.pairs[0]
    S.h[q] = FiniteGroup.cyclic(5).automorphisms()[1]
    with pytest.raises(ValueError):
        abelian_cech_class(S)


# -- bundles ----------------------------------------------------------------------


def test_trivial_bundle_passes():
    S = wrapped_sheaf(3)
    B = StackBundle(S, {i: trivial_rep(S.group, 2) for i in NERVE.index}, {q: sympy.eye(2) for q in NERVE.pairs})
    assert check_bundle(B).ok


def regular_bundle(p, seed):
    G = FiniteGroup.cyclic(p)
    rng = random.Random(seed)
    mu = {q: rng.randrange(p) for q in NERVE.pairs}
    S = coboundary_sheaf(G, NERVE, mu)
    R = regular_rep(G)
    return StackBundle(S, {i: R for i in NERVE.index}, {q: R[mu[q]] for q in NERVE.pairs})


def test_regular_bundle_over_coboundary_sheaf_passes():
    assert check_bundle(regular_bundle(3, 0)).ok


def test_regular_bundle_cannot_use_identity_gluing_over_wrapped_sheaf():
    # with constant gluing maps the class of gamma obstructs a faithful bundle
    S = wrapped_sheaf(3)
    R = regular_rep(S.group)
    B = StackBundle(S, {i: R for i in NERVE.index}, {q: sympy.eye(3) for q in NERVE.pairs})
    rep = check_bundle(B)
    assert not rep.ok and all(d["kind"] == "cocycle" for d in rep.defects)


def test_bundle_detects_non_equivariant_map():
    B = regular_bundle(3, 1)
    q = NERVE.pairs[0]
    B.g[q] = sympy.Matrix([[1, 0, 0], [0, 0, 1], [0, 1, 0]])
    kinds = {d["kind"] for d in check_bundle(B).defects}
    assert "not_equivariant" in kinds


def test_bundle_dimension_mismatch():
    B = regular_bundle(3, 1)
    B.g[NERVE.pairs[0]] = sympy.eye(2)
    with pytest.raises(ValueError):
        check_bundle(B)


@pytest.mark.parametrize("seed", range(20))
def test_transport_preserves_bundles(seed):
    rng = random.Random(seed)
    B = regular_bundle(3, seed)
    G = B.sheaf.group
    t = random_iso(G, NERVE, rng)
    phi = {}
    for i in NERVE.index:
        while True:
            M = sympy.Matrix(3, 3, lambda a, b: rng.randint(-2, 2))
            if M.det() != 0:
                break
        phi[i] = M
    B2 = transport_bundle(B, t, phi)
    assert same_sheaf(B2.sheaf, apply_iso(B.sheaf, t))
    assert check_bundle(B2).ok


def test_transport_with_explicit_target_reps():
    B = regular_bundle(3, 2)
    G = B.sheaf.group
    rng = random.Random(2)
    t = random_iso(G, NERVE, rng, twist=False)
    phi = {i: sympy.eye(3) for i in NERVE.index}
    B2 = transport_bundle(B, t, phi, new_reps=B.reps)
    assert check_bundle(B2).ok
    with pytest.raises(ValueError):
        bad = {i: {x: sympy.eye(3) for x in range(3)} for i in NERVE.index}
        transport_bundle(B, t, phi, new_reps=bad)


def test_fixed_subbundle_untwisted_cocycle():
    rng = random.Random(5)
    B = regular_bundle(3, 5)
    t = random_iso(B.sheaf.group, NERVE, rng)
    phi = {i: sympy.eye(3) + sympy.Matrix([[0, 1, 1], [0, 0, 1], [0, 0, 0]]) for i in NERVE.index}
    B2 = transport_bundle(B, t, phi)
    bases, gf, rep = fixed_subbundle(B2)
    assert rep.ok
    assert all(b.cols == 1 for b in bases.values())


def test_fixed_dim_examples():
    assert fixed_dim(regular_rep(FiniteGroup.cyclic(4))) == 1
    Z2 = FiniteGroup.cyclic(2)
    assert fixed_dim(sign_rep(Z2, 3, lambda g: (-1) ** g)) == 0
    # block sum of a trivial 2-dim block and a sign block
    mixed = {g: sympy.diag(sympy.eye(2), (-1) ** g * sympy.eye(1)) for g in range(2)}
    avg = (mixed[0] + mixed[1]) / 2
    assert fixed_dim(mixed) == avg.rank() == 2


@given(st.integers(2, 6))
@settings(max_examples=5, deadline=None)
def test_fixed_dim_of_regular_rep_is_one(m):
    assert fixed_dim(regular_rep(FiniteGroup.cyclic(m))) == 1


# -- deriving gamma from actions ---------------------------------------------------


def test_derive_gamma_left_translation():
    G = FiniteGroup.symmetric(3)
    rng = random.Random(0)
    c = {q: rng.randrange(6) for q in NERVE.pairs}
    acts = {i: [[G.mul(x, y) for y in range(6)] for x in range(6)] for i in NERVE.index}
    phi = {q: [G.mul(c[q], y) for y in range(6)] for q in NERVE.pairs}
    S = derive_gamma_from_actions(G, NERVE, acts, phi, {q: G.ad(c[q]) for q in NERVE.pairs})
    assert check_group_cocycle(S).ok
    for (i, j, k) in NERVE.triples:
        assert S.gamma[(i, j, k)] == G.prod(c[(i, j)], c[(j, k)], G.inv(c[(i, k)]))


def test_derive_gamma_identity_maps():
    G = FiniteGroup.cyclic(3)
    # Y_i = two free orbits, identity maps
    acts = {i: [[(y // 3) * 3 + (y + x) % 3 for y in range(6)] for x in range(3)] for i in NERVE.index}
    phi = {q: list(range(6)) for q in NERVE.pairs}
    S = derive_gamma_from_actions(G, NERVE, acts, phi, {q: G.identity_aut() for q in NERVE.pairs})
    assert all(g == G.identity for g in S.gamma.values())


def test_derive_gamma_errors():
    G = FiniteGroup.cyclic(3)
    trivial = {i: [[0], [0], [0]] for i in NERVE.index}
    with pytest.raises(ValueError, match="trivial isotropy"):
        derive_gamma_from_actions(G, NERVE, trivial, {q: [0] for q in NERVE.pairs},
                                  {q: G.identity_aut() for q in NERVE.pairs})
    acts = {i: [[(y + x) % 3 for y in range(3)] for x in range(3)] for i in NERVE.index}
    # a reflection does not commute with the action
    phi = {q: [0, 2, 1] if q == NERVE.pairs[0] else [0, 1, 2] for q in NERVE.pairs}
    with pytest.raises(ValueError):
        derive_gamma_from_actions(G, NERVE, acts, phi, {q: G.identity_aut() for q in NERVE.pairs})


def test_derive_gamma_inconsistent_maps():
    # Y = Z/2 x {0,1} with the action on the first factor only; phi swaps the
    # second factor on one triple, which no group element can undo
    G = FiniteGroup.cyclic(2)
    N = CoverNerve.from_faces(["a", "b", "c"], [{"a", "b", "c"}], max_dim=2)
    acts = {i: [[0, 1, 2, 3], [1, 0, 3, 2]] for i in N.index}
    swap = [2, 3, 0, 1]
    phi = {q: (swap if q == ("a", "b") else [0, 1, 2, 3]) for q in N.pairs}
    with pytest.raises(ValueError, match="no group element"):
        derive_gamma_from_actions(G, N, acts, phi, {q: G.identity_aut() for q in N.pairs})


def test_sheaf_json_roundtrip():
    S = s3_sheaf(2)
    T = GroupCatSheaf.from_json(S.to_json())
    assert same_sheaf(S, T)
