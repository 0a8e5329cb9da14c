"""Maurer-Cartan elements, deformations and Floer cohomology.

A weak bounding cochain ``b`` (degree one, positive valuation) solves

    sum_k m_k(b, .., b) = PO(b) * e

modulo energies above E; the deformed operations are

    m^b_k(x_1..x_k) = sum m_{k+l}(b^{l_0}, x_1, b^{l_1}, .., x_k, b^{l_k}).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

from .ainfty import ZERO, NVec, FilteredAinfAlgebra, _decompose, fmt_label
from .canonical import standard_splitting, verify_splitting, _m10, _compose
from .filtered import FilteredComplex
from .novikov import NovikovElem, fmt_energy, parse_energy, INF
from .report import Report

__all__ = [
    "mc_element", "mc_to_json", "mc_from_json", "WeakMCResult", "check_weak_mc", "deform",
    "TwistData", "deform_twisted", "twisted_mc_residual", "MCSolveResult", "solve_mc",
    "floer_complex", "check_floer_product", "pushforward", "mc_sum",
]


def mc_element(A, terms):
    """NVec from ``{generator name: NovikovElem}``."""
    out = {}
    for name, val in terms.items():
        if name not in A.module.index:
            raise ValueError(f"unknown generator {name!r}")
        if not isinstance(val, NovikovElem):
            raise TypeError("MC coefficients must be Novikov elements")
        if val:
            out[A.module.index[name]] = val
    return NVec(out)


def mc_to_json(A, b):
    return {"b": [{"gen": A.names[i], "value": b.terms[i].to_json()} for i in sorted(b.terms)]}


def mc_from_json(A, obj):
    terms = {}
    for ent in obj.get("b", []):
        if ent["gen"] not in A.module.index:
            raise ValueError(f"b: unknown generator {ent['gen']!r}")
        val = NovikovElem.from_json(A.ring, ent["value"])
        terms[ent["gen"]] = terms[ent["gen"]] + val if ent["gen"] in terms else val
    return mc_element(A, terms)


def mc_sum(b, c):
    return b.add(c)


def _validate_b(A, b):
    for i, a in b.terms.items():
        if a.ring != A.ring:
            raise ValueError("b has coefficients in a different ring")
        for _, lam, mu2 in a.terms:
            if lam <= 0:
                raise ValueError(f"b has a term of energy {fmt_energy(lam)} on {A.names[i]}; "
                                 "bounding cochains need positive valuation")
            if A.degree(i) + mu2 != 1:
                raise ValueError(f"b has a term of total degree {A.degree(i) + mu2} on {A.names[i]}; "
                                 "expected 1")


def _insertions(A, xs, bs, E):
    """sum over l_0..l_k of m_{k+sum l}(b_0^{l_0}, x_1, b_1^{l_1}, .., x_k, b_k^{l_k}).

    ``bs`` has len(xs) + 1 cochains (NVecs, possibly zero).
    """
    k = len(xs)
    vals = [b.eff_val() if not b.is_zero() else INF for b in bs]
    base_val = sum((x.eff_val() for x in xs), Fraction(0))
    if base_val > E:
        return NVec()
    vmin = min(vals) if vals else INF
    Lmax = 0 if vmin == INF else int((E - base_val) / vmin)
    total = NVec()
    for L in range(0, Lmax + 1):
        for dist in _compositions(L, k + 1):
            if any(dist[i] and bs[i].is_zero() for i in range(k + 1)):
                continue
            e = base_val + sum((dist[i] * vals[i] for i in range(k + 1) if dist[i]), Fraction(0))
            if e > E:
                continue
            args = []
            for i in range(k + 1):
                args.extend([bs[i]] * dist[i])
                if i < k:
                    args.append(xs[i])
            total = total.add(A.apply(len(args), args, E))
    return total.normalized(E)


def _compositions(L, parts):
    if parts == 1:
        yield (L,)
        return
    for first in range(L + 1):
        for rest in _compositions(L - first, parts - 1):
            yield (first,) + rest


@dataclass
class WeakMCResult:
    status: str
    PO: NovikovElem
    defect: NVec
    determined_below: Fraction = None
    residual: NVec = None

    def to_json(self, A):
        return {
            "status": self.status,
            "PO": self.PO.to_json(),
            "defect": self.defect.to_json(A.names),
            "determined_below": None if self.determined_below is None else fmt_energy(self.determined_below),
        }


def mc_residual(A, b, E=None):
    """sum_k m_k(b^k) as an NVec."""
    E = A.E if E is None else E
    return _insertions(A, [], [b], E)


def check_weak_mc(A, b, E=None):
    """Decide whether b solves the weak Maurer-Cartan equation."""
    if A.unit is None:
        raise ValueError("the weak Maurer-Cartan equation needs a unit")
    _validate_b(A, b)
    E = A.E if E is None else parse_energy(E)
    res = mc_residual(A, b, E)
    u = A.unit_index()
    po = res.terms.get(u, NovikovElem.zero(A.ring))
    defect = NVec({i: a for i, a in res.terms.items() if i != u})
    status = "solved" if not defect.terms else "defect"
    return WeakMCResult(status, po, defect, res.floor, res)


def deform(A, b, K=None):
    """The deformed algebra m^b, to the same arity window as A."""
    _validate_b(A, b)
    E = A.E
    K = A.K if K is None else int(K)
    results = {}
    for k in range(0, K + 1):
        for tup in iproduct(range(A.n), repeat=k):
            xs = [A.basis(i) for i in tup]
            v = _insertions(A, xs, [b] * (k + 1), E)
            if v.terms or v.floor is not None:
                results[(k, tup)] = v
    ops, horizon = _decompose(results, K)
    if (0, ZERO) in ops:
        raise ArithmeticError("deformation produced an energy-zero curvature term")
    return FilteredAinfAlgebra(A.ring, A.module, ops, E, K, unit=A.unit, dim_L=A.dim_L,
                               closed=A.closed, horizon=horizon)


# ---------------------------------------------------------------------------
# representation twists

@dataclass
class TwistData:
    """Line twist: rho on a basis of first homology and boundary vectors of labels.

    ``rho``: list of ring units; ``boundary``: {beta: tuple of ints};
    ``b_plus``: NVec cochain of positive valuation.
    """

    rho: list
    boundary: dict
    b_plus: NVec = field(default_factory=NVec)

    def factor(self, ring, beta):
        if beta == ZERO and beta not in self.boundary:
            return ring.one()
        if beta not in self.boundary:
            raise ValueError(f"no boundary class recorded for label {fmt_label(beta)}")
        vec = self.boundary[beta]
        if len(vec) != len(self.rho):
            raise ValueError("boundary vector length differs from the homology basis")
        out = ring.one()
        for r, v in zip(self.rho, vec):
            r = ring.normalize(r)
            if not ring.is_unit(r):
                raise ValueError(f"rho value {ring.fmt(r)} is not a unit")
            base = r if v >= 0 else ring.inv(r)
            for _ in range(abs(v)):
                out = ring.mul(out, base)
        return out

    def to_json(self, A):
        return {
            "rho": [A.ring.fmt(r) for r in self.rho],
            "boundary": [{"beta": fmt_label(b), "class": list(v)} for b, v in sorted(self.boundary.items())],
            "b_plus": mc_to_json(A, self.b_plus)["b"],
        }

    @classmethod
    def from_json(cls, A, obj):
        from .ainfty import parse_label
        rho = [A.ring.parse(r) for r in obj["rho"]]
        boundary = {parse_label(e["beta"]): tuple(int(v) for v in e["class"]) for e in obj.get("boundary", [])}
        b = mc_from_json(A, {"b": obj.get("b_plus", [])})
        return cls(rho, boundary, b)


def _twisted_ops(A, twist):
    R = A.ring
    ops = {}
    for (k, beta), entries in A.ops.items():
        c = twist.factor(R, beta)
        ops[(k, beta)] = {t: {o: R.mul(c, v) for o, v in row.items()} for t, row in entries.items()}
    return ops


def deform_twisted(A, twist, K=None):
    """Scale each m_{k,beta} by rho(boundary beta), then deform by b_plus."""
    At = A.with_ops(_twisted_ops(A, twist), monoid=A.monoid, level=A.level)
    return deform(At, twist.b_plus, K=K)


def twisted_mc_residual(A, twist, E=None):
    """sum_{k,beta} T^beta rho(boundary beta) m_{k,beta}(b_plus^k), label by label."""
    R = A.ring
    E = A.E if E is None else parse_energy(E)
    b = twist.b_plus
    _validate_b(A, b)
    support = sorted(b.terms.items())
    vb = b.valuation()
    out = {}
    for (k, beta), entries in sorted(A.ops.items()):
        if k and (vb == INF or beta[0] + k * vb > E):
            continue
        c = twist.factor(R, beta)
        for combo in iproduct(support, repeat=k):
            tup = tuple(g for g, _ in combo)
            row = entries.get(tup)
            if not row:
                continue
            prod = NovikovElem.monomial(R, c, beta[0], beta[1])
            for _, a in combo:
                prod = prod.mul_trunc(a, E)
            prod = prod.truncate(E)
            for o, v in row.items():
                term = prod.scale(v)
                out[o] = out[o] + term if o in out else term
    floor = None
    if not A.closed and vb != INF:
        floor = (A.K + 1) * vb
        if floor > E:
            floor = None
    return NVec({o: v for o, v in out.items() if v}, floor).normalized(E)


# ---------------------------------------------------------------------------
# order-by-order solving

@dataclass
class MCSolveResult:
    status: str
    b: NVec
    PO: NovikovElem = None
    obstruction: dict = None
    levels: list = field(default_factory=list)

    def to_json(self, A, D_names=None):
        obj = {"status": self.status, "b": mc_to_json(A, self.b)["b"],
               "PO": None if self.PO is None else self.PO.to_json(),
               "levels": [fmt_energy(x) for x in self.levels]}
        if self.obstruction is not None:
            obj["obstruction"] = self.obstruction
        return obj


def solve_mc(A, S=None):
    """Solve the weak Maurer-Cartan equation energy level by energy level.

    At each level the non-unit part z of the residual is an m_{1,0}-cycle;
    it is killed by ``c = iota w - H z`` where ``pi z = d_D w``, extending b
    by ``-c``.  If pi z is not a boundary in D, the level, z and the class
    of pi z are returned as the obstruction.
    """
    if A.unit is None:
        raise ValueError("solving needs a unital algebra")
    R = A.ring
    if S is None:
        S = standard_splitting(A)
    rep = verify_splitting(A, S)
    if not rep.ok:
        raise ValueError(f"splitting identities fail: {rep.defects}")
    d = _m10(A)
    dD = _compose(S.pi, _compose(d, S.iota, R), R)
    if any(dD.values()) and not R.is_field:
        raise ValueError("over the integers the summand must carry the zero differential")
    u = A.unit_index()
    Dnames = [n for n, _ in S.generators]
    levels = sorted({x[0] for x in A.monoid.elements(A.E) if x[0] > 0})
    b = NVec()
    done = []
    for lam in levels:
        res = mc_residual(A, b)
        if res.floor is not None and res.floor <= lam:
            return MCSolveResult("undetermined", b, None,
                                 {"level": fmt_energy(lam),
                                  "reason": f"operations unknown from energy {fmt_energy(res.floor)}"},
                                 done)
        comps = {}
        for i, a in res.terms.items():
            if i == u:
                continue
            for c, l, mu2 in a.terms:
                if l < lam:
                    raise ArithmeticError("residual below the current level did not vanish")
                if l == lam:
                    comps.setdefault(mu2, {})[i] = c
        for mu2, z in sorted(comps.items()):
            dz = _apply_table(d, z, R)
            if dz:
                raise ArithmeticError("residual is not a cycle; the algebra fails its relations")
            pz = _apply_table(S.pi, z, R)
            if pz:
                w = _solve_boundary(dD, pz, len(Dnames), R)
                if w is None:
                    return MCSolveResult(
                        "obstructed", b, None,
                        {"level": fmt_energy(lam), "mu2": mu2,
                         "cycle": {A.names[i]: R.fmt(c) for i, c in sorted(z.items())},
                         "class": {Dnames[j]: R.fmt(c) for j, c in sorted(pz.items())}},
                        done)
                iw = _apply_table(S.iota, w, R)
            else:
                iw = {}
            hz = _apply_table(S.H, z, R)
            c = dict(iw)
            for i, v in hz.items():
                c[i] = R.sub(c.get(i, R.zero()), v)
            terms = {}
            for i, v in c.items():
                if v != 0:
                    terms[i] = NovikovElem.monomial(R, R.neg(v), lam, mu2)
            b = b.add(NVec(terms)).normalized(A.E)
        done.append(lam)
    final = check_weak_mc(A, b)
    if final.status != "solved":
        raise ArithmeticError("order-by-order solution failed to verify")
    return MCSolveResult("solved", b, final.PO, None, done)


def _apply_table(table, vec, R):
    out = {}
    for i, c in vec.items():
        for j, v in table.get(i, {}).items():
            out[j] = R.add(out.get(j, R.zero()), R.mul(c, v))
    return {j: v for j, v in out.items() if v != 0}


def _solve_boundary(dD, target, n, R):
    """w with d_D w = target, or None."""
    from . import linalg
    if not R.is_field:
        return None
    cols = [[dD.get(j, {}).get(i, R.zero()) for j in range(n)] for i in range(n)]
    rhs = [target.get(i, R.zero()) for i in range(n)]
    sol = linalg.solve(cols, n, rhs, R)
    if sol is None:
        return None
    return {j: v for j, v in enumerate(sol) if v != 0}


# ---------------------------------------------------------------------------
# Floer cohomology

def floer_complex(A, b1, b0, E=None):
    """The complex with d(x) = sum m(b1^k, x, b0^l).

    Returns ``(complex, report)``; the report records the square-zero check.
    """
    E = A.E if E is None else parse_energy(E)
    r1, r0 = check_weak_mc(A, b1, E), check_weak_mc(A, b0, E)
    for name, r in (("b1", r1), ("b0", r0)):
        if r.status != "solved":
            raise ValueError(f"{name} does not solve the weak Maurer-Cartan equation")
    if r1.PO != r0.PO:
        raise ValueError(f"potentials differ: {r1.PO} vs {r0.PO}")
    diff = {}
    floor = None
    for i in range(A.n):
        v = _insertions(A, [A.basis(i)], [b1, b0], E)
        if v.floor is not None:
            floor = v.floor if floor is None else min(floor, v.floor)
        if v.terms:
            diff[i] = v.terms
    rep = Report("floer-differential", "d(x) = sum m(b1..b1, x, b0..b0) squares to zero")
    if floor is not None:
        levels = [x[0] for x in A.monoid.elements(E) if 0 < x[0] < floor]
        if not levels:
            raise ValueError("the differential is not determined at any positive energy")
        E = max(levels)
        diff = {i: {j: a.truncate(E) for j, a in row.items() if a.truncate(E)} for i, row in diff.items()}
        rep.notes.append(f"energy lowered to {fmt_energy(E)}: operations unknown from {fmt_energy(floor)}")
    cx = FilteredComplex(A.ring, A.module, diff, E)
    sq = cx.square()
    for s, row in sq.items():
        for t, a in row.items():
            rep.add_defect(source=A.names[s], target=A.names[t], value=a.to_json())
    rep.stats["E"] = fmt_energy(E)
    return cx, rep


def check_floer_product(A, b, cocycles):
    """Associativity of the deformed product on cocycles, up to an explicit boundary.

    For m^b_1-cocycles x, y, z the deformed k = 3 relation reads
    ``m2(m2(x,y),z) + (-1)^{deg' x} m2(x, m2(y,z)) = -m1(m3(x,y,z))``;
    the report lists the triples where it fails.
    """
    Ab = deform(A, b)
    R = A.ring
    rep = Report("floer-product", "deformed m_2 is associative on cohomology")
    names = A.names
    cyc = []
    for label, x in cocycles:
        dx = Ab.apply(1, [x])
        if dx.terms:
            raise ValueError(f"{label} is not closed under the deformed differential")
        cyc.append((label, x))
    for (lx, x), (ly, y), (lz, z) in iproduct(cyc, repeat=3):
        degx = _total_degree(A, x)
        if degx is None:
            continue
        a1 = Ab.apply(2, [Ab.apply(2, [x, y]), z])
        a2 = Ab.apply(2, [x, Ab.apply(2, [y, z])])
        bd = Ab.apply(1, [Ab.apply(3, [x, y, z])])
        tot = a1.add(a2, R.sign(degx + 1)).add(bd).normalized(A.E)
        if tot.terms:
            rep.add_defect(triple=[lx, ly, lz], residual=tot.to_json(names))
        elif tot.floor is not None:
            rep.out_of_window.append({"triple": [lx, ly, lz], "unknown_from": fmt_energy(tot.floor)})
    rep.stats["cocycles"] = len(cyc)
    return rep


def _total_degree(A, x):
    degs = {A.degree(i) + mu2 for i, a in x.terms.items() for _, _, mu2 in a.terms}
    if len(degs) != 1:
        return None
    return degs.pop()


def pushforward(f, b):
    """f_*(b) = sum_k f_k(b^k) in the target algebra."""
    E = f.E
    total = f.apply(0, [], E)
    if not b.is_zero():
        v = b.eff_val()
        k = 1
        while k * v <= E:
            total = total.add(f.apply(k, [b] * k, E))
            k += 1
    return total.normalized(E)
