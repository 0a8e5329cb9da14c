"""Homotopy transfer of a filtered A-infinity structure to a summand.

Given a splitting ``(iota, pi, H)`` of the energy-zero complex
``(C, m_{1,0})`` with

    pi iota = id,   iota pi - id = m_{1,0} H + H m_{1,0},
    H H = 0,   H iota = 0,   pi H = 0,

the transferred operations and the comparison map are computed by the
recursive tree sum

    F_k = [k = 1] iota + H(S_k),
    S_k = sum over block decompositions of m*_l(F(block_1), .., F(block_l)),
    m'_k = pi(S_k) + [k = 1] pi m_{1,0} iota,

where ``m*_1`` omits the energy-zero label and empty blocks carry ``F_0``.
Self-references through positive-energy terms are resolved by iterating to
a fixed point, which terminates because every pass raises the energy.
"""

from dataclasses import dataclass, field

from .ainfty import (ZERO, NVec, FilteredAinfAlgebra, FilteredAinfHom, _decompose,
                     block_decompositions, m1_complex,
                     _max_empty)
from .filtered import FreeModule, homology_decomposition
from .novikov import fmt_energy, parse_energy
from .report import Report
from . import linalg

__all__ = [
    "SplittingData", "verify_splitting", "identity_splitting", "standard_splitting",
    "canonical_model", "compare_homology",
]


@dataclass
class SplittingData:
    """Coefficient-level splitting data.

    ``iota``: {D index: {C index: coeff}}; ``pi``: {C index: {D index: coeff}};
    ``H``: {C index: {C index: coeff}}; ``generators``: list of (name, degree) of D.
    """

    generators: list
    iota: dict
    pi: dict
    H: dict
    unit: str = None
    notes: list = field(default_factory=list)

    def module(self):
        return FreeModule(self.generators)

    def to_json(self, A):
        cn = A.names
        dn = [n for n, _ in self.generators]
        R = A.ring

        def mat(table, src, tgt):
            return {src[i]: {tgt[j]: R.fmt(c) for j, c in sorted(row.items())}
                    for i, row in sorted(table.items()) if row}
        return {
            "generators": [{"name": n, "degree": d} for n, d in self.generators],
            "iota": mat(self.iota, dn, cn),
            "pi": mat(self.pi, cn, dn),
            "H": mat(self.H, cn, cn),
            "unit": self.unit,
        }

    @classmethod
    def from_json(cls, A, obj):
        R = A.ring
        gens = [(g["name"], g["degree"]) for g in obj["generators"]]
        didx = {n: i for i, (n, _) in enumerate(gens)}
        cidx = A.module.index

        def mat(table, src, tgt, label):
            out = {}
            for s, row in table.items():
                if s not in src:
                    raise ValueError(f"{label}: unknown generator {s!r}")
                for t, c in row.items():
                    if t not in tgt:
                        raise ValueError(f"{label}: unknown generator {t!r}")
                    out.setdefault(src[s], {})[tgt[t]] = R.parse(c)
            return out
        return cls(gens, mat(obj.get("iota", {}), didx, cidx, "iota"),
                   mat(obj.get("pi", {}), cidx, didx, "pi"),
                   mat(obj.get("H", {}), cidx, cidx, "H"), unit=obj.get("unit"))


def _m10(A):
    """Energy-zero differential as a coefficient table {i: {j: c}}."""
    return {t[0]: dict(outs) for t, outs in A.ops.get((1, ZERO), {}).items()}


def _compose(f, g, ring):
    """Table of f after g: (f g)(i) = f(g(i))."""
    out = {}
    for i, row in g.items():
        acc = {}
        for j, c in row.items():
            for k, d in f.get(j, {}).items():
                acc[k] = ring.add(acc.get(k, ring.zero()), ring.mul(c, d))
        acc = {k: v for k, v in acc.items() if v != 0}
        if acc:
            out[i] = acc
    return out


def _add(f, g, ring, sign=1):
    out = {i: dict(r) for i, r in f.items()}
    s = ring.normalize(sign)
    for i, row in g.items():
        dst = out.setdefault(i, {})
        for j, c in row.items():
            dst[j] = ring.add(dst.get(j, ring.zero()), ring.mul(s, c))
    return {i: {j: c for j, c in r.items() if c != 0} for i, r in out.items() if any(c != 0 for c in r.values())}


def _identity(n, ring):
    return {i: {i: ring.one()} for i in range(n)}


def verify_splitting(A, S):
    """Exact check of the splitting identities; returns a Report."""
    R = A.ring
    rep = Report("splitting", "pi iota = id, iota pi - id = dH + Hd, HH = 0, H iota = 0, pi H = 0")
    D = S.module()
    nC, nD = A.n, len(D)
    d = _m10(A)
    # degrees
    for i, row in S.iota.items():
        for j in row:
            if A.degree(j) != D.degree(i):
                rep.add_defect(identity="iota preserves degree", at=D.names()[i])
    for i, row in S.pi.items():
        for j in row:
            if D.degree(j) != A.degree(i):
                rep.add_defect(identity="pi preserves degree", at=A.names[i])
    for i, row in S.H.items():
        for j in row:
            if A.degree(j) != A.degree(i) - 1:
                rep.add_defect(identity="H lowers degree by one", at=A.names[i])
    checks = [
        ("pi iota = id", _compose(S.pi, S.iota, R), _identity(nD, R)),
        ("iota pi - id = dH + Hd",
         _add(_compose(S.iota, S.pi, R), _identity(nC, R), R, -1),
         _add(_compose(d, S.H, R), _compose(S.H, d, R), R)),
        ("HH = 0", _compose(S.H, S.H, R), {}),
        ("H iota = 0", _compose(S.H, S.iota, R), {}),
        ("pi H = 0", _compose(S.pi, S.H, R), {}),
    ]
    for name, lhs, rhs in checks:
        if lhs != rhs:
            rep.add_defect(identity=name)
    if S.unit is not None and S.unit not in D.index:
        rep.add_defect(identity="unit is a generator of the summand")
    rep.stats["rank_C"] = nC
    rep.stats["rank_D"] = nD
    return rep


def identity_splitting(A):
    """D = C, iota = pi = id, H = 0; valid when m_{1,0} vanishes."""
    R = A.ring
    return SplittingData(list(A.module.generators), _identity(A.n, R), _identity(A.n, R), {},
                         unit=A.unit)


def standard_splitting(A):
    """Splitting onto a homology complement of (C, m_{1,0}) over a field.

    Per degree, pick a complement of the boundaries inside the cycles
    (standard basis vectors first, the unit before anything else) and a
    complement W of the cycles; H inverts m_{1,0} from the boundaries
    into W, with a sign making ``iota pi - id = dH + Hd``.
    """
    R = A.ring
    d = _m10(A)
    if not any(d.values()):
        return identity_splitting(A)
    if not R.is_field:
        raise ValueError("a nonzero differential needs field coefficients to split")
    degs = sorted({A.degree(i) for i in range(A.n)})
    by_deg = {g: [i for i in range(A.n) if A.degree(i) == g] for g in degs}
    u = A.unit_index()

    def mat(g):
        # rows = sources in degree g, columns = targets in degree g+1
        src, tgt = by_deg.get(g, []), by_deg.get(g + 1, [])
        return [[d.get(s, {}).get(t, R.zero()) for t in tgt] for s in src]

    def unitvec(n, j):
        return [R.one() if k == j else R.zero() for k in range(n)]

    Z, B, Hc, W = {}, {}, {}, {}
    for g in degs:
        src = by_deg[g]
        n = len(src)
        M = mat(g)
        # kernel of x -> x M (row vectors)
        cols = linalg.transpose(M, n) if M and M[0] else []
        Z[g] = linalg.nullspace(cols, n, R) if cols else [unitvec(n, j) for j in range(n)]
        prev = by_deg.get(g - 1, [])
        Mp = mat(g - 1)
        B[g] = linalg.span_basis(Mp, n, R) if prev and Mp and any(any(c != 0 for c in r) for r in Mp) else []
    for g in degs:
        src = by_deg[g]
        n = len(src)
        zset = Z[g]
        cand = []
        if u is not None and u in src:
            cand.append(unitvec(n, src.index(u)))
        zrank = linalg.rank(zset, n, R) if zset else 0
        for j in range(n):
            v = unitvec(n, j)
            if zset and linalg.rank(zset + [v], n, R) == zrank:
                cand.append(v)
        cand += zset
        Hc[g] = linalg.extend_basis(B[g], cand, n, R)
        W[g] = linalg.extend_basis(zset, [unitvec(n, j) for j in range(n)], n, R)

    gens, iota, pi, H = [], {}, {}, {}
    names = A.names
    unit_name = None
    for g in degs:
        src = by_deg[g]
        n = len(src)
        basis = B[g] + Hc[g] + W[g]
        if len(basis) != n:
            raise ArithmeticError("splitting bases do not span")
        start = len(gens)
        for t, v in enumerate(Hc[g]):
            nz = [j for j, c in enumerate(v) if c != 0]
            if len(nz) == 1 and v[nz[0]] == R.one():
                name = names[src[nz[0]]]
                if src[nz[0]] == u:
                    unit_name = name
            else:
                name = f"h{g}_{t}"
            gens.append((name, g))
            iota[start + t] = {src[j]: c for j, c in enumerate(v) if c != 0}
        # coordinates of each basis vector e_j in (B, Hc, W)
        bt = linalg.transpose(basis, n)
        for j in range(n):
            coords = linalg.solve(bt, n, unitvec(n, j), R)
            hc = coords[len(B[g]):len(B[g]) + len(Hc[g])]
            row = {start + t: c for t, c in enumerate(hc) if c != 0}
            if row:
                pi[src[j]] = row
            # H on e_j: the boundary part b = sum c_t B_t, mapped to -(d|W)^{-1} b
            bpart = coords[:len(B[g])]
            if any(c != 0 for c in bpart):
                target = [R.zero()] * n
                for c, bv in zip(bpart, B[g]):
                    for k in range(n):
                        target[k] = R.add(target[k], R.mul(c, bv[k]))
                lower = by_deg[g - 1]
                Mp = mat(g - 1)
                Wl = W[g - 1]
                # find w = sum a_s W_s with w M = target
                rows = [linalg.matvec(linalg.transpose(Mp, n), w, R) for w in Wl]
                a = linalg.solve(linalg.transpose(rows, n), len(Wl), target, R)
                if a is None:
                    raise ArithmeticError("boundary has no preimage in the complement")
                pre = [R.zero()] * len(lower)
                for coef, w in zip(a, Wl):
                    for k in range(len(lower)):
                        pre[k] = R.add(pre[k], R.mul(coef, w[k]))
                hrow = {lower[k]: R.neg(c) for k, c in enumerate(pre) if c != 0}
                if hrow:
                    H[src[j]] = hrow
    S = SplittingData(gens, iota, pi, H, unit=unit_name)
    rep = verify_splitting(A, S)
    if not rep.ok:
        raise ArithmeticError(f"internal splitting failed: {rep.defects}")
    return S


def _unit_respected(A, S):
    if A.unit is None or S.unit is None:
        return False
    R = A.ring
    u = S.module().index[S.unit]
    e = A.unit_index()
    return (S.iota.get(u) == {e: R.one()} and S.pi.get(e) == {u: R.one()}
            and not S.H.get(e))


def canonical_model(A, S, K=None, E=None, max_iter=None):
    """Transfer A to the summand of S.

    Returns ``(B, f, report)`` with B the transferred algebra on D and f the
    A-infinity map B -> A with ``f_{1,0} = iota``.  Arities above ``K``
    (default A.K) are not computed; B records that as unknown.
    """
    rep0 = verify_splitting(A, S)
    if not rep0.ok:
        raise ValueError(f"splitting identities fail: {rep0.defects}")
    R = A.ring
    E = A.E if E is None else parse_energy(E)
    if E > A.E:
        raise ValueError("requested energy exceeds the algebra's truncation energy")
    K = A.K if K is None else int(K)
    D = S.module()
    nD = len(D)
    positive = [b[0] for b in A.labels() if b[0] > 0]
    step = min(positive) if positive else None
    if max_iter is None:
        max_iter = (int(E / step) + 2) if step else 2

    def Hm(v):
        return v.linear_map(S.H, R).normalized(E)

    def Pm(v):
        return v.linear_map(S.pi, R).normalized(E)

    def iota_vec(x):
        return NVec({c: _const(R, v) for c, v in S.iota.get(x, {}).items()})

    # arity zero: F0 = H(sum_l m*_l(F0, .., F0))
    F0 = NVec()
    for _ in range(max_iter + 1):
        S0 = _sum_powers(A, F0, E)
        new = Hm(S0)
        if new.equal(F0):
            break
        F0 = new
    else:
        raise ArithmeticError("arity-zero transfer did not stabilize")
    S0 = _sum_powers(A, F0, E)
    results_m = {(0, ()): Pm(S0)}
    results_f = {(0, ()): F0}
    dD = _compose(S.pi, _compose(_m10(A), S.iota, R), R)
    F = {}
    from itertools import product as iproduct
    for k in range(1, K + 1):
        max_empty = _max_empty(F0, E)
        decs = block_decompositions(k, max_empty)
        for tup in iproduct(range(nD), repeat=k):
            base = iota_vec(tup[0]) if k == 1 else NVec()
            cur = base
            for _ in range(max_iter + 1):
                Sk = NVec()
                for dec in decs:
                    vals = []
                    for a, b in dec:
                        if a == b:
                            vals.append(F0)
                        elif (a, b) == (0, k):
                            vals.append(cur)
                        else:
                            vals.append(F[tup[a:b]])
                    if any(v.is_zero() for v in vals):
                        continue
                    Sk = Sk.add(A.apply(len(vals), vals, E, skip_zero_label=(len(vals) == 1)))
                Sk = Sk.normalized(E)
                new = base.add(Hm(Sk)).normalized(E)
                if new.equal(cur):
                    break
                cur = new
            else:
                raise ArithmeticError(f"transfer did not stabilize on {tup}")
            F[tup] = cur
            mk = Pm(Sk)
            if k == 1:
                mk = mk.add(NVec({j: _const(R, c) for j, c in dD.get(tup[0], {}).items()})).normalized(E)
            results_m[(k, tup)] = mk
            results_f[(k, tup)] = cur
    ops, horizon_m = _decompose(results_m, K)
    comps, horizon_f = _decompose(results_f, K)
    closed = A.closed and not any(S.H.values())
    unit = S.unit if _unit_respected(A, S) else None
    B = FilteredAinfAlgebra(R, D, ops, E, K, unit=unit, dim_L=A.dim_L, closed=closed,
                            horizon=horizon_m)
    f = FilteredAinfHom(B, A, comps, K=K, closed=closed, horizon=horizon_f)
    rep = Report("canonical-model", "transferred operations by tree summation with H on internal edges")
    rep.stats.update({"rank_C": A.n, "rank_D": nD, "K": K, "E": fmt_energy(E)})
    if A.unit is not None and unit is None:
        rep.notes.append("unitality unverified: the splitting does not respect the unit")
    return B, f, rep


def _const(R, c):
    from .novikov import NovikovElem
    return NovikovElem.const(R, c)


def _sum_powers(A, F0, E):
    """sum_l m*_l(F0^l), the energy-zero part of m_1 omitted."""
    total = A.apply(0, [], E)
    if F0.is_zero():
        return total
    v = F0.eff_val()
    l = 1
    while l * v <= E:
        total = total.add(A.apply(l, [F0] * l, E, skip_zero_label=(l == 1)))
        l += 1
    return total.normalized(E)


def compare_homology(A, B, levels=None):
    """Compare Betti numbers and torsion exponents of (A, m_1) and (B, m_1).

    ``levels`` are truncation energies (default: positive monoid energies
    up to E, and E itself).  Needs field coefficients unless both
    differentials vanish.
    """
    rep = Report("homology-comparison", "H(C, m_1) and H(D, m'_1) agree degree by degree")
    E = min(A.E, B.E)
    if levels is None:
        levels = sorted({b[0] for b in A.monoid.elements(E)} | {E})
    levels = [parse_energy(x) for x in levels if parse_energy(x) > 0]
    degs = sorted({A.degree(i) for i in range(A.n)} | {B.degree(i) for i in range(B.n)})
    for lv in levels:
        try:
            ca, cb = m1_complex(A, lv), m1_complex(B, lv)
        except ValueError as exc:
            rep.notes.append(f"level {fmt_energy(lv)}: {exc}")
            continue
        if ca.square():
            rep.notes.append(f"level {fmt_energy(lv)}: m_1 does not square to zero")
            continue
        if cb.square():
            rep.add_defect(level=fmt_energy(lv), issue="transferred m_1 does not square to zero")
            continue
        if not A.ring.is_field:
            if ca.diff or cb.diff:
                rep.notes.append("non-field coefficients: comparison skipped")
                return rep
            for g in degs:
                ba = sum(1 for i in range(A.n) if A.degree(i) == g)
                bb = sum(1 for i in range(B.n) if B.degree(i) == g)
                if ba != bb:
                    rep.add_defect(level=fmt_energy(lv), degree=g, betti=[ba, bb])
            rep.stats["levels"] = rep.stats.get("levels", 0) + 1
            continue
        if ca.graded_by != cb.graded_by:
            rep.add_defect(level=fmt_energy(lv), issue="gradings differ")
            continue
        seen = set()
        for g in degs:
            c = ca.degree_class(g)
            if c in seen:
                continue
            seen.add(c)
            da = homology_decomposition(ca, g)
            db = homology_decomposition(cb, g)
            key_a = (da.betti, sorted(da.torsion_exponents), da.censored)
            key_b = (db.betti, sorted(db.torsion_exponents), db.censored)
            if key_a != key_b:
                rep.add_defect(level=fmt_energy(lv), degree=g,
                               before=da.to_json(), after=db.to_json())
        rep.stats["levels"] = rep.stats.get("levels", 0) + 1
    return rep
