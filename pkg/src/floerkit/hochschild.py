"""Hochschild complex of a filtered A-infinity algebra and p'-contracts.

Chains are Novikov combinations of basis tensors ``x_0 (x) .. (x) x_k``.
The differential has four families of terms:

1. ``x_0..x_{i-1} (x) m(x_i..x_{j-1}) (x) x_j..x_k`` for ``0 < i <= j <= k``,
   sign ``(-1)^{deg' x_0 + .. + deg' x_{i-1}}``;
2. ``x_0..x_i (x) m(x_{i+1}..x_k)`` for ``0 <= i <= k``, sign as above with
   the sum running to ``x_i``;
3. ``m(x_{j+1}..x_k, x_0..x_i) (x) x_{i+1}..x_j`` for ``0 <= i <= j < k``,
   sign ``(-1)^{(deg' x_0 + .. + deg' x_j)(deg' x_{j+1} + .. + deg' x_k)}``;
4. ``m(x_0..x_i) (x) x_{i+1}..x_k`` for ``0 <= i <= k``, no sign.

Family 3 includes the full rotations ``i = j`` (a single output slot);
``full_rotations=False`` restricts it to ``i < j`` for comparison.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

from .ainfty import ZERO, NVec, _Multilinear, parse_label, fmt_label, _min
from .filtered import FreeModule
from .mc import _validate_b, check_weak_mc, deform
from .novikov import NovikovElem, fmt_energy, parse_energy
from .report import Report

__all__ = [
    "HochChain", "hoch_terms", "hoch_diff", "check_hoch_squared", "sign_audit",
    "PContractData", "check_p_contract",
]


@dataclass
class HochChain:
    """``{tensor: NovikovElem}`` with an unknown-from energy."""

    terms: dict = field(default_factory=dict)
    floor: Fraction = None

    @classmethod
    def basis(cls, ring, tensor):
        return cls({tuple(tensor): NovikovElem.one(ring)})

    def add_term(self, tensor, val):
        if val:
            cur = self.terms.get(tensor)
            self.terms[tensor] = cur + val if cur is not None else val

    def normalized(self, E):
        fl = self.floor if self.floor is not None and self.floor <= E else None
        out = {}
        for t, a in self.terms.items():
            a = a.truncate(E)
            if fl is not None:
                a = NovikovElem._raw(a.ring, tuple(x for x in a.terms if x[1] < fl))
            if a:
                out[t] = a
        return HochChain(out, fl)

    def is_zero(self):
        return not self.terms and self.floor is None

    def to_json(self, names):
        return {
            "terms": [{"tensor": [names[i] for i in t], "value": self.terms[t].to_json()}
                      for t in sorted(self.terms)],
            "unknown_from": None if self.floor is None else fmt_energy(self.floor),
        }


def _prefix(A, tensor):
    p = [0]
    for x in tensor:
        p.append(p[-1] + A.degree(x) + 1)
    return p


def hoch_terms(A, tensor, full_rotations=True):
    """The individual terms of the differential on a basis tensor.

    Yields dicts with the family number, indices, sign exponent, the
    operation's input tuple and how to reassemble the output tensor.
    """
    t = tuple(tensor)
    k = len(t) - 1
    P = _prefix(A, t)
    for i in range(1, k + 1):
        for j in range(i, k + 1):
            yield {"family": 1, "i": i, "j": j, "sign": P[i], "inputs": t[i:j],
                   "before": t[:i], "after": t[j:]}
    for i in range(0, k + 1):
        yield {"family": 2, "i": i, "j": None, "sign": P[i + 1], "inputs": t[i + 1:],
               "before": t[:i + 1], "after": ()}
    for i in range(0, k):
        for j in range(i if full_rotations else i + 1, k):
            s = P[j + 1] * (P[k + 1] - P[j + 1])
            yield {"family": 3, "i": i, "j": j, "sign": s, "inputs": t[j + 1:] + t[:i + 1],
                   "before": (), "after": t[i + 1:j + 1]}
    for i in range(0, k + 1):
        yield {"family": 4, "i": i, "j": None, "sign": 0, "inputs": t[:i + 1],
               "before": (), "after": t[i + 1:]}


def sign_audit(A, tensor, full_rotations=True):
    """Rows (family, i, j, sign exponent parity, inputs) for one tensor."""
    names = A.names
    return [{"family": term["family"], "i": term["i"], "j": term["j"],
             "sign": "-" if term["sign"] % 2 else "+",
             "inputs": [names[x] for x in term["inputs"]],
             "output": [names[x] for x in term["before"]] + ["m(...)"] + [names[x] for x in term["after"]]}
            for term in hoch_terms(A, tensor, full_rotations)]


class _DiffCache:
    def __init__(self, A, E, full_rotations):
        self.A, self.E, self.full = A, E, full_rotations
        self.cache = {}
        self.op_cache = {}

    def op(self, inputs):
        if inputs not in self.op_cache:
            self.op_cache[inputs] = self.A.apply(len(inputs), [self.A.basis(x) for x in inputs], self.E)
        return self.op_cache[inputs]

    def basis_diff(self, tensor):
        if tensor in self.cache:
            return self.cache[tensor]
        A, R = self.A, self.A.ring
        out = HochChain()
        for term in hoch_terms(A, tensor, self.full):
            v = self.op(term["inputs"])
            if v.is_zero():
                continue
            if v.floor is not None:
                out.floor = _min(out.floor, v.floor)
            sgn = R.sign(term["sign"])
            for g, a in v.terms.items():
                out.add_term(term["before"] + (g,) + term["after"], a.scale(sgn))
        out = out.normalized(self.E)
        self.cache[tensor] = out
        return out

    def diff(self, chain):
        out = HochChain(floor=chain.floor)
        E = self.E
        for t, c in chain.terms.items():
            d = self.basis_diff(t)
            v = c.valuation()
            if d.floor is not None:
                out.floor = _min(out.floor, d.floor + v)
            for s, a in d.terms.items():
                out.add_term(s, a.mul_trunc(c, E))
        return out.normalized(E)


def hoch_diff(A, chain, E=None, full_rotations=True):
    """Apply the Hochschild differential to a HochChain."""
    E = A.E if E is None else parse_energy(E)
    return _DiffCache(A, E, full_rotations).diff(chain)


def check_hoch_squared(A, max_length=3, E=None, full_rotations=True):
    """delta^H o delta^H = 0 on every basis tensor of length <= max_length."""
    E = A.E if E is None else parse_energy(E)
    rep = Report("hochschild-squared", "delta^H delta^H = 0 on basis tensors")
    dc = _DiffCache(A, E, full_rotations)
    names = A.names
    count = 0
    for length in range(1, max_length + 1):
        for t in iproduct(range(A.n), repeat=length):
            sq = dc.diff(dc.basis_diff(t))
            count += 1
            if sq.floor is not None:
                rep.out_of_window.append({"tensor": [names[x] for x in t],
                                          "unknown_from": fmt_energy(sq.floor)})
            if sq.terms:
                rep.add_defect(tensor=[names[x] for x in t], residual=sq.to_json(names)["terms"])
    rep.stats.update({"tensors": count, "max_length": max_length, "E": fmt_energy(E)})
    if not full_rotations:
        rep.notes.append("full rotations omitted from the third family")
    return rep


# ---------------------------------------------------------------------------
# p'-contracts

class PContractData(_Multilinear):
    """Maps p'_{k,beta} from k-tensors of A to an ambient complex (M, delta_M).

    ``p``: {(k, beta): {input tuple: {ambient index: coeff}}};
    ``delta_M``: {ambient index: {ambient index: NovikovElem}};
    ``i_shriek``: optional designated {A index: {ambient index: coeff}}
    that must equal the (1, 0) component; ``PD_L``: optional
    {ambient index: NovikovElem} that must equal p'_1(e).
    """

    def __init__(self, A, ambient, delta_M, p, K, closed=True, i_shriek=None, PD_L=None, E=None):
        self.algebra = A
        self.ring = A.ring
        self.ambient = ambient if isinstance(ambient, FreeModule) else FreeModule(ambient)
        self.delta_M = delta_M
        self.E = A.E if E is None else parse_energy(E)
        self.K = int(K)
        self.closed = closed
        self.horizon = {}
        self.i_shriek = i_shriek
        self.PD_L = PD_L
        self._build_table({(int(k), parse_label(b)): v for (k, b), v in p.items()})

    def to_json(self):
        A = self.algebra
        an = self.ambient.names()
        R = self.ring
        comps = []
        for (k, beta) in sorted(self.ops):
            for tup in sorted(self.ops[(k, beta)]):
                outs = self.ops[(k, beta)][tup]
                comps.append({"k": k, "beta": fmt_label(beta), "in": [A.names[i] for i in tup],
                              "out": [{"gen": an[o], "coeff": R.fmt(c)} for o, c in sorted(outs.items())]})
        obj = {
            "ambient": [{"name": n, "degree": d} for n, d in self.ambient.generators],
            "delta_M": [{"from": an[s], "to": an[t], "value": v.to_json()}
                        for s in sorted(self.delta_M) for t, v in sorted(self.delta_M[s].items())],
            "p": comps, "K": self.K, "closed": self.closed,
        }
        if self.i_shriek is not None:
            obj["i_shriek"] = {A.names[i]: {an[j]: R.fmt(c) for j, c in sorted(row.items())}
                               for i, row in sorted(self.i_shriek.items())}
        if self.PD_L is not None:
            obj["PD_L"] = {an[j]: v.to_json() for j, v in sorted(self.PD_L.items())}
        return obj

    @classmethod
    def from_json(cls, A, obj):
        R = A.ring
        amb = FreeModule([(g["name"], g["degree"]) for g in obj["ambient"]])
        aidx = amb.index
        delta = {}
        for ent in obj.get("delta_M", []):
            s, t = aidx[ent["from"]], aidx[ent["to"]]
            row = delta.setdefault(s, {})
            v = NovikovElem.from_json(R, ent["value"])
            row[t] = row[t] + v if t in row else v
        p = {}
        for ent in obj.get("p", []):
            tup = tuple(A.module.index[x] for x in ent["in"])
            dst = p.setdefault((int(ent["k"]), parse_label(ent["beta"])), {}).setdefault(tup, {})
            for o in ent["out"]:
                j = aidx[o["gen"]]
                dst[j] = R.add(dst.get(j, R.zero()), R.parse(o["coeff"]))
        ish = None
        if obj.get("i_shriek") is not None:
            ish = {A.module.index[x]: {aidx[y]: R.parse(c) for y, c in row.items()}
                   for x, row in obj["i_shriek"].items()}
        pd = None
        if obj.get("PD_L") is not None:
            pd = {aidx[y]: NovikovElem.from_json(R, v) for y, v in obj["PD_L"].items()}
        return cls(A, amb, delta, p, obj.get("K", 1), obj.get("closed", True), ish, pd)

    def apply_chain(self, chain, E):
        """p' on a HochChain: a tensor of length k goes through p'_k."""
        out = NVec()
        for t, c in chain.terms.items():
            v = self.apply(len(t), [self.algebra.basis(x) for x in t], E)
            out = out.add(v.scale_nov(c, E))
        if chain.floor is not None:
            out.floor = _min(out.floor, chain.floor)
        return out.normalized(E)

    def delta(self, vec, E):
        out = NVec(floor=vec.floor)
        for i, a in vec.terms.items():
            for j, d in self.delta_M.get(i, {}).items():
                v = a.mul_trunc(d, E)
                if v:
                    out.terms[j] = out.terms[j] + v if j in out.terms else v
        return out.normalized(E)

    def p_b(self, vec, b, E):
        """p'_b(x) = sum_l p'_{l+1}(x, b, .., b)."""
        out = self.apply(1, [vec], E)
        if not b.is_zero():
            v = b.eff_val()
            l = 1
            while l * v <= E:
                out = out.add(self.apply(l + 1, [vec] + [b] * l, E))
                l += 1
        return out.normalized(E)


def check_p_contract(P, A=None, b=None, max_length=3, E=None, full_rotations=True):
    """Verify the chain-map identity, unit vanishing, PD[L] and the b-twisted identities."""
    A = P.algebra if A is None else A
    E = P.E if E is None else parse_energy(E)
    R = A.ring
    an = P.ambient.names()
    rep = Report("p-contract", "delta_M p' + p' delta^H = 0; p'_k(..e..) = 0 for k != 1; "
                               "p'_b = i_! mod positive energy; p'_b m^b_1 + delta_M p'_b = 0")
    dc = _DiffCache(A, E, full_rotations)
    count = 0
    for length in range(1, max_length + 1):
        for t in iproduct(range(A.n), repeat=length):
            lhs = P.delta(P.apply(length, [A.basis(x) for x in t], E), E)
            rhs = P.apply_chain(dc.basis_diff(t), E)
            tot = lhs.add(rhs).normalized(E)
            count += 1
            label = [A.names[x] for x in t]
            if tot.floor is not None:
                rep.out_of_window.append({"identity": "chain map", "tensor": label,
                                          "unknown_from": fmt_energy(tot.floor)})
            if tot.terms:
                rep.add_defect(identity="chain map", tensor=label, residual=tot.to_json(an)["terms"])
    rep.stats["tensors"] = count
    if A.unit is None:
        raise ValueError("unit vanishing needs a unital algebra")
    u = A.unit_index()
    for (k, beta), entries in sorted(P.ops.items()):
        if k == 1:
            continue
        for tup, outs in sorted(entries.items()):
            if u in tup:
                rep.add_defect(identity="unit vanishing", k=k, beta=fmt_label(beta),
                               tensor=[A.names[x] for x in tup])
    if P.PD_L is not None:
        got = P.apply(1, [A.basis(u)], E)
        want = NVec(dict(P.PD_L)).normalized(E)
        if not got.equal(want):
            rep.add_defect(identity="p'_1(e) = PD[L]", got=got.to_json(an), want=want.to_json(an))
    zero_part = {t[0]: outs for t, outs in P.ops.get((1, ZERO), {}).items()}
    if P.i_shriek is not None:
        ish = {i: {j: c for j, c in row.items() if R.normalize(c) != 0} for i, row in P.i_shriek.items()}
        ish = {i: row for i, row in ish.items() if row}
        if ish != zero_part:
            rep.add_defect(identity="p'_{1,0} = i_!")
    bb = NVec() if b is None else b
    if b is not None:
        _validate_b(A, b)
        if check_weak_mc(A, b, E).status != "solved":
            raise ValueError("b does not solve the weak Maurer-Cartan equation")
    ref = P.i_shriek if P.i_shriek is not None else zero_part
    Ab = deform(A, bb) if not bb.is_zero() else A
    for x in range(A.n):
        pbx = P.p_b(A.basis(x), bb, E)
        lead = {j: a.coeff(0, 0) for j, a in pbx.terms.items() if a.valuation() == 0}
        lead = {j: c for j, c in lead.items() if c != 0}
        if any(m != 0 for a in pbx.terms.values() for c, l, m in a.terms if l == 0):
            rep.add_defect(identity="p'_b = i_! mod positive energy", at=A.names[x], issue="energy-zero term of nonzero degree shift")
        want = {j: R.normalize(c) for j, c in ref.get(x, {}).items() if R.normalize(c) != 0}
        if lead != want:
            rep.add_defect(identity="p'_b = i_! mod positive energy", at=A.names[x])
        m1b = Ab.apply(1, [A.basis(x)], E)
        tot = P.p_b(m1b, bb, E).add(P.delta(pbx, E)).normalized(E)
        if tot.terms:
            rep.add_defect(identity="p'_b m^b_1 + delta_M p'_b = 0", at=A.names[x],
                           residual=tot.to_json(an)["terms"])
        elif tot.floor is not None:
            rep.out_of_window.append({"identity": "p'_b m^b_1 + delta_M p'_b = 0", "at": A.names[x],
                                      "unknown_from": fmt_energy(tot.floor)})
    return rep


def classical_contract(A):
    """Ambient copy of C with delta_M = -m_{1,0} and p' = identity in slot (1, 0)."""
    R = A.ring
    delta = {}
    for (tup,), outs in [(t, o) for t, o in A.ops.get((1, ZERO), {}).items()]:
        delta[tup] = {j: NovikovElem.const(R, R.neg(c)) for j, c in outs.items()}
    ident = {i: {i: R.one()} for i in range(A.n)}
    p = {(1, ZERO): {(i,): {i: R.one()} for i in range(A.n)}}
    pd = {A.unit_index(): NovikovElem.one(R)} if A.unit is not None else None
    return PContractData(A, A.module, delta, p, K=1, closed=True, i_shriek=ident, PD_L=pd)


__all__.append("classical_contract")
