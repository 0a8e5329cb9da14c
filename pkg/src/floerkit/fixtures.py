"""Small hand-checkable algebras used by tests, demos and the CLI.

A differential graded algebra ``(d, .)`` becomes an A-infinity algebra
through ``m_1(x) = d x`` and ``m_2(x, y) = (-1)^{deg x} x y``.
"""

from fractions import Fraction
from itertools import combinations

from .ainfty import ZERO, FilteredAinfAlgebra
from .coeff import QQ, GF, ZZ

__all__ = [
    "dga", "exterior_algebra", "pq_algebra", "heisenberg_algebra", "torus_algebra",
    "m3_algebra", "exact_curvature_algebra", "obstructed_algebra", "with_curvature", "with_scaled_product", "fixture_suite",
]


def dga(ring, generators, d, mult, E, K=4, unit=None, extra=None, dim_L=None):
    """A-infinity algebra from a differential and a product table.

    ``d``: {name: {name: coeff}};  ``mult``: {(name, name): {name: coeff}}.
    ``extra``: additional ``{(k, beta): {name tuple: {name: coeff}}}``.
    """
    idx = {n: i for i, (n, _) in enumerate(generators)}
    deg = {n: g for n, g in generators}
    ops = {}
    for x, row in d.items():
        ops.setdefault((1, ZERO), {})[(idx[x],)] = {idx[y]: c for y, c in row.items()}
    for (x, y), row in mult.items():
        s = ring.sign(deg[x])
        ops.setdefault((2, ZERO), {})[(idx[x], idx[y])] = {idx[z]: ring.mul(s, ring.normalize(c)) for z, c in row.items()}
    for (k, beta), entries in (extra or {}).items():
        for tup, row in entries.items():
            ops.setdefault((k, beta), {})[tuple(idx[t] for t in tup)] = {idx[z]: c for z, c in row.items()}
    return FilteredAinfAlgebra(ring, generators, ops, E, K, unit=unit, dim_L=dim_L, closed=True)


def _wedge(a, b):
    """Sign and sorted union of two increasing index tuples, or None."""
    if set(a) & set(b):
        return None
    seq = list(a) + list(b)
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1) ** inv, tuple(sorted(seq))


def _ext_basis(letters):
    basis = []
    for r in range(len(letters) + 1):
        basis.extend(combinations(range(len(letters)), r))
    return basis


def _ext_name(letters, s):
    return "1" if not s else "".join(letters[i] for i in s)


def exterior_algebra(ring, letters, d_letters=None, E=2, K=4):
    """Exterior algebra on degree-one letters with a derivation differential.

    ``d_letters`` maps a letter to ``{(i, j): coeff}``, a combination of
    two-letter wedges ``letters[i] letters[j]`` with ``i < j``.
    """
    basis = _ext_basis(letters)
    gens = [(_ext_name(letters, s), len(s)) for s in basis]
    mult = {}
    for a in basis:
        for b in basis:
            w = _wedge(a, b)
            if w is not None:
                mult[(_ext_name(letters, a), _ext_name(letters, b))] = {_ext_name(letters, w[1]): w[0]}
    d = {}
    d_letters = d_letters or {}
    for s in basis:
        # Leibniz: d(l_1 .. l_r) = sum (-1)^{t} l_1 .. d(l_t) .. l_r
        acc = {}
        for t, li in enumerate(s):
            for (i, j), c in d_letters.get(letters[li], {}).items():
                pre, post = s[:t], s[t + 1:]
                w1 = _wedge(pre, (i, j))
                if w1 is None:
                    continue
                w2 = _wedge(w1[1], post)
                if w2 is None:
                    continue
                coeff = (-1) ** t * w1[0] * w2[0] * c
                name = _ext_name(letters, w2[1])
                acc[name] = acc.get(name, 0) + coeff
        acc = {k: v for k, v in acc.items() if ring.normalize(v) != 0}
        if acc:
            d[_ext_name(letters, s)] = acc
    return dga(ring, gens, d, mult, E, K, unit="1", dim_L=len(letters))


def pq_algebra(ring=QQ, E=2, K=4):
    """Unital acyclic-plus-unit dga: e, p in degree 0, q in degree 1, dp = q."""
    gens = [("e", 0), ("p", 0), ("q", 1)]
    mult = {("e", x): {x: 1} for x in "epq"}
    mult.update({(x, "e"): {x: 1} for x in "pq"})
    mult[("p", "p")] = {"p": 1}
    mult[("p", "q")] = {"q": 1}
    return dga(ring, gens, {"p": {"q": 1}}, mult, E, K, unit="e")


def heisenberg_algebra(ring=QQ, E=2, K=4):
    """Chevalley-Eilenberg algebra of the Heisenberg Lie algebra: dc = ab."""
    return exterior_algebra(ring, "abc", {"c": {(0, 1): 1}}, E, K)


def torus_algebra(ring=QQ, dim=2, E=2, K=4):
    """Cohomology of the torus of the given dimension, zero differential."""
    return exterior_algebra(ring, "abcdef"[:dim], None, E, K)


def m3_algebra(ring=QQ, E=2, K=5):
    """Unit e, degree-one x, y, z and w of degree 2 with ``m_3(x, y, z) = w``.

    Apart from the unit products this is the only operation; the quadratic
    relations hold because no operation other than the unit accepts w.
    """
    gens = [("e", 0), ("x", 1), ("y", 1), ("z", 1), ("w", 2)]
    ops = {(3, ZERO): {(1, 2, 3): {4: 1}}, (2, ZERO): {}}
    for i, (_, dg) in enumerate(gens):
        ops[(2, ZERO)][(0, i)] = {i: 1}
        if i:
            ops[(2, ZERO)][(i, 0)] = {i: ring.sign(dg)}
    return FilteredAinfAlgebra(ring, gens, ops, E, K, unit="e", closed=True)


def with_curvature(A, coeff=1, lam=Fraction(1), mu2=2):
    """Add m_{0,beta}() = coeff * e with beta = (lam, mu2)."""
    if A.unit is None:
        raise ValueError("curvature term needs a unit")
    lam = Fraction(lam)
    ops = {key: dict(v) for key, v in A.ops.items()}
    ops[(0, (lam, mu2))] = {(): {A.unit_index(): A.ring.normalize(coeff)}}
    return A.with_ops(ops, E=max(A.E, lam))


def with_scaled_product(A, lam=Fraction(1, 2), coeff=1):
    """Add coeff * m_{2,0} at label (lam, 0) on pairs of non-unit generators.

    The relations survive when m_2 is associative and no product of two
    non-unit generators has a unit component; the unit stays strict.
    """
    lam = Fraction(lam)
    u = A.unit_index()
    ops = {key: dict(v) for key, v in A.ops.items()}
    scaled = {}
    for t, row in A.ops.get((2, ZERO), {}).items():
        if u in t:
            continue
        if u is not None and u in row:
            raise ValueError("a product of non-unit generators has a unit component")
        scaled[t] = {o: A.ring.mul(A.ring.normalize(coeff), c) for o, c in row.items()}
    ops[(2, (lam, 0))] = scaled
    return A.with_ops(ops)


def exact_curvature_algebra(ring=QQ, lam=Fraction(1, 2), E=2, K=4):
    """Unit e, d in degree 1, y = m_1(d) in degree 2 and m_{0,(lam,0)} = y.

    The curvature is exact, so a bounding cochain starts with ``-T^lam d``.
    """
    gens = [("e", 0), ("d", 1), ("y", 2)]
    mult = {("e", x): {x: 1} for x in "edy"}
    mult.update({(x, "e"): {x: 1} for x in "dy"})
    return dga(ring, gens, {"d": {"y": 1}}, mult, E, K, unit="e",
               extra={(0, (Fraction(lam), 0)): {(): {"y": 1}}})


def obstructed_algebra(ring=QQ, lam=Fraction(1, 2), E=2, K=4):
    """Like the exact case plus a closed, non-bounding z of degree 2 in the curvature.

    ``m_{0,(lam,0)} = y + z``; the class of z obstructs at energy lam.
    """
    gens = [("e", 0), ("d", 1), ("y", 2), ("z", 2)]
    mult = {("e", x): {x: 1} for x in "edyz"}
    mult.update({(x, "e"): {x: 1} for x in "dyz"})
    return dga(ring, gens, {"d": {"y": 1}}, mult, E, K, unit="e",
               extra={(0, (Fraction(lam), 0)): {(): {"y": 1, "z": 1}}})


def fixture_suite(rings=(QQ, GF(2), GF(3), GF(5)), E=2):
    """Named A-infinity-valid algebras over several coefficient rings."""
    out = []
    for R in rings:
        tag = R.name
        base = [
            ("pq", pq_algebra(R, E)),
            ("heisenberg", heisenberg_algebra(R, E, K=3)),
            ("circle", torus_algebra(R, 1, E)),
            ("torus2", torus_algebra(R, 2, E, K=3)),
            ("m3", m3_algebra(R, E)),
        ]
        for name, A in base:
            out.append((f"{name}/{tag}", A))
        out.append((f"pq+curv/{tag}", with_curvature(pq_algebra(R, E), lam=1)))
        out.append((f"pq+scaled/{tag}", with_scaled_product(pq_algebra(R, E))))
        out.append((f"heisenberg+curv/{tag}",
                    with_curvature(heisenberg_algebra(R, E, K=3), lam=Fraction(1, 2))))
    out.append(("torus2/Z", torus_algebra(ZZ, 2, E, K=3)))
    return out
