"""Filtered A-infinity algebras, homomorphisms and bimodules.

Conventions
-----------
* Operations ``m_{k,beta}`` are stored on basis tuples with coefficients in
  the ground ring; the label ``beta = (omega, mu2)`` carries the implicit
  Novikov factor ``T**omega e**(mu2/2)``.
* Degrees: ``deg m_{k,beta}(x_1..x_k) = sum deg x_i + 2 - k - mu2``.
* The A-infinity relation is
  ``sum (-1)^{deg' x_1 + ... + deg' x_i} m(x_1..x_i, m(x_{i+1}..), ..) = 0``
  with ``deg' x = deg x + 1``; signs vanish in characteristic 2.
* A strict unit ``e`` satisfies ``m_2(e, x) = x``,
  ``m_2(x, e) = (-1)^{deg x} x`` and kills every other operation.

Evaluation happens on ``NVec`` vectors (generator -> Novikov element).  An
``NVec`` carries an optional *floor*: an energy from which its value is not
determined by the finite data (operations beyond the stored arity window or
beyond a computed horizon).  Relations whose residual reaches the floor are
listed as out-of-window instead of being judged.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct

from .coeff import CoeffRing
from .filtered import FilteredComplex, FreeModule
from .novikov import NovikovElem, parse_energy, fmt_energy, INF
from .report import Report

__all__ = [
    "ZERO", "GapMonoid", "gap_norm", "NVec", "FilteredAinfAlgebra",
    "FilteredAinfHom", "FilteredAinfBimodule", "AnkLevel", "check_ainf",
    "check_unit", "check_hom", "compose_hom", "identity_hom", "check_bimodule",
    "truncate_ank", "bimodule_from_algebra", "m1_complex", "block_decompositions",
    "parse_label", "fmt_label",
]

ZERO = (Fraction(0), 0)


def parse_label(b):
    if isinstance(b, dict):
        return (parse_energy(b["omega"]), int(b["mu2"]))
    om, mu2 = b
    if isinstance(mu2, bool) or not isinstance(mu2, int):
        raise ValueError(f"label Maslov component must be an integer, got {mu2!r}")
    return (parse_energy(om), mu2)


def fmt_label(b):
    return [fmt_energy(b[0]), b[1]]


def _min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# ---------------------------------------------------------------------------
# gap monoid

class GapMonoid:
    """Submonoid of Q>=0 x Z generated by labels of positive energy."""

    def __init__(self, generators):
        gens = sorted({parse_label(g) for g in generators})
        for g in gens:
            if g[0] <= 0:
                raise ValueError("monoid generators must have positive energy")
        self.generators = tuple(gens)

    def __repr__(self):
        return f"GapMonoid({[fmt_label(g) for g in self.generators]})"

    def elements(self, E):
        """All monoid elements of energy <= E, sorted."""
        E = parse_energy(E)
        seen = {ZERO}
        frontier = [ZERO]
        while frontier:
            nxt = []
            for b in frontier:
                for g in self.generators:
                    c = (b[0] + g[0], b[1] + g[1])
                    if c[0] <= E and c not in seen:
                        seen.add(c)
                        nxt.append(c)
            frontier = nxt
        return sorted(seen)

    def norm(self, beta):
        return gap_norm(beta, self)

    def contains(self, beta):
        return self._norm(tuple(parse_label(beta))) is not None

    def _norm(self, beta):
        return _norm_cached(self.generators, beta)


@lru_cache(maxsize=None)
def _norm_cached(gens, beta):
    if beta == ZERO:
        return 0
    best = None
    for g in gens:
        rest = (beta[0] - g[0], beta[1] - g[1])
        if rest[0] < 0:
            continue
        r = _norm_cached(gens, rest)
        if r is not None and (best is None or r + 1 > best):
            best = r + 1
    return best


def gap_norm(beta, monoid):
    """Largest n with beta a sum of n nonzero monoid elements."""
    beta = parse_label(beta)
    n = monoid._norm(beta)
    if n is None:
        raise ValueError(f"{fmt_label(beta)} is not in the monoid")
    return n


class AnkLevel:
    """Level (n, K) ordered by n+K, then by n."""

    def __init__(self, n, K):
        if n < 0 or K < 0:
            raise ValueError("levels are nonnegative")
        self.n, self.K = int(n), int(K)

    def key(self):
        return (self.n + self.K, self.n)

    def __lt__(self, other):
        return self.key() < other.key()

    def __le__(self, other):
        return self.key() <= other.key()

    def __eq__(self, other):
        return isinstance(other, AnkLevel) and (self.n, self.K) == (other.n, other.K)

    def __hash__(self):
        return hash((self.n, self.K))

    def __repr__(self):
        return f"AnkLevel({self.n}, {self.K})"


# ---------------------------------------------------------------------------
# Novikov-valued vectors

class NVec:
    """Sparse vector ``{generator index: NovikovElem}`` with an unknown floor."""

    __slots__ = ("terms", "floor")

    def __init__(self, terms=None, floor=None):
        self.terms = terms if terms is not None else {}
        self.floor = floor

    @classmethod
    def basis(cls, ring, i):
        return cls({i: NovikovElem.one(ring)})

    def is_zero(self):
        return not self.terms and self.floor is None

    def valuation(self):
        v = INF
        for a in self.terms.values():
            v = min(v, a.valuation())
        return v

    def eff_val(self):
        v = self.valuation()
        if self.floor is not None:
            v = min(v, self.floor)
        return v

    def normalized(self, E):
        """Drop zero terms, terms above E and terms at or above the floor."""
        fl = self.floor
        if fl is not None and fl > E:
            fl = None
        out = {}
        for i, a in self.terms.items():
            a = a.truncate(E)
            if fl is not None:
                a = NovikovElem._raw(a.ring, tuple(t for t in a.terms if t[1] < fl))
            if a:
                out[i] = a
        return NVec(out, fl)

    def add(self, other, coeff=None):
        """self + coeff * other (coeff a ring element or None for 1)."""
        terms = dict(self.terms)
        for i, a in other.terms.items():
            if coeff is not None:
                a = a.scale(coeff)
            terms[i] = terms[i] + a if i in terms else a
        return NVec(terms, _min(self.floor, other.floor))

    def scale_nov(self, x, E):
        return NVec({i: a.mul_trunc(x, E) for i, a in self.terms.items()},
                    None if self.floor is None else self.floor + x.valuation())

    def linear_map(self, table, ring):
        """Apply a coefficient-level linear map ``{i: {j: c}}``."""
        out = {}
        for i, a in self.terms.items():
            for j, c in table.get(i, {}).items():
                v = a.scale(c)
                out[j] = out[j] + v if j in out else v
        return NVec({j: v for j, v in out.items() if v}, self.floor)

    def equal(self, other):
        a = {i: v for i, v in self.terms.items() if v}
        b = {i: v for i, v in other.terms.items() if v}
        return a == b and self.floor == other.floor

    def by_label(self):
        """Split into ``{(lam, mu2): {gen: coeff}}``."""
        out = {}
        for i, a in self.terms.items():
            for c, lam, mu2 in a.terms:
                out.setdefault((lam, mu2), {})[i] = c
        return out

    def to_json(self, names):
        return {
            "terms": [{"gen": names[i], "value": self.terms[i].to_json()} for i in sorted(self.terms)],
            "unknown_from": None if self.floor is None else fmt_energy(self.floor),
        }


class _Multilinear:
    """Shared storage and evaluation for families of multilinear maps."""

    def _build_table(self, ops):
        table = {}
        clean = {}
        for (k, beta), entries in ops.items():
            for tup, outs in entries.items():
                outs = {o: self.ring.normalize(c) for o, c in outs.items()}
                outs = {o: c for o, c in outs.items() if c != 0}
                if not outs:
                    continue
                clean.setdefault((k, beta), {})[tuple(tup)] = outs
                table.setdefault(k, {}).setdefault(tuple(tup), []).append(
                    (beta, sorted(outs.items())))
        for k in table:
            for tup in table[k]:
                table[k][tup].sort()
        self.ops = clean
        self._table = table

    def unknown_floor(self, k):
        if k > self.K:
            return None if self.closed else Fraction(0)
        return self.horizon.get(k)

    def labels(self):
        return sorted({beta for (_, beta) in self.ops})

    def arities(self):
        return sorted({k for (k, _) in self.ops})

    def apply(self, k, vecs, E=None, skip_zero_label=False):
        """Evaluate the full k-ary operation on NVec inputs, truncated at E."""
        E = self.E if E is None else E
        ring = self.ring
        vals = []
        for v in vecs:
            if v.is_zero():
                return NVec()
            vals.append(v.eff_val())
        total = sum(vals, Fraction(0))
        floor = None
        for i, v in enumerate(vecs):
            if v.floor is not None:
                floor = _min(floor, v.floor + (total - vals[i]))
        uf = self.unknown_floor(k)
        if uf is not None:
            floor = _min(floor, uf + total)
        if floor is not None and floor > E:
            floor = None
        out = {}
        table = self._table.get(k)
        if table and total <= E:
            supports = [sorted(v.terms.items(), key=lambda t: t[0]) for v in vecs]
            for combo in iproduct(*supports):
                idxs = tuple(g for g, _ in combo)
                entries = table.get(idxs)
                if not entries:
                    continue
                lam0 = sum((a.valuation() for _, a in combo), Fraction(0))
                if lam0 > E:
                    continue
                prod = NovikovElem.one(ring)
                for _, a in combo:
                    prod = prod.mul_trunc(a, E)
                    if not prod:
                        break
                if not prod:
                    continue
                for beta, outs in entries:
                    if skip_zero_label and beta == ZERO:
                        continue
                    if beta[0] + lam0 > E:
                        continue
                    shifted = prod.shift(beta[0], beta[1]).truncate(E)
                    if not shifted:
                        continue
                    for o, c in outs:
                        v = shifted.scale(c)
                        out[o] = out[o] + v if o in out else v
        return NVec(out, floor).normalized(E)


def _decompose(vec_by_tuple, K):
    """Split per-tuple NVec results into labelled ops plus a horizon."""
    ops = {}
    horizon = {}
    for (k, tup), vec in vec_by_tuple.items():
        if vec.floor is not None:
            horizon[k] = _min(horizon.get(k), vec.floor)
        for beta, outs in vec.by_label().items():
            ops.setdefault((k, beta), {})[tup] = outs
    # values at or above a horizon are not trusted anywhere in that arity
    for (k, beta) in list(ops):
        if k in horizon and beta[0] >= horizon[k]:
            del ops[(k, beta)]
    return ops, horizon


# ---------------------------------------------------------------------------
# algebras

class FilteredAinfAlgebra(_Multilinear):
    """Free graded module with labelled multilinear operations.

    Parameters
    ----------
    ring : CoeffRing
    generators : list of (name, degree)
    ops : dict ``(k, beta) -> {input index tuple: {output index: coeff}}``
    E : truncation energy
    K : largest stored arity
    unit : optional generator name of a strict unit
    monoid : optional GapMonoid; by default generated by the nonzero labels
    dim_L : optional integer attribute n (used by ``m_{1,0} = (-1)^n d``)
    closed : if True, operations of arity above K are zero
    horizon : ``{k: energy}``; labels of arity k at or above it are unknown
    """

    def __init__(self, ring, generators, ops, E, K, unit=None, monoid=None,
                 dim_L=None, closed=False, horizon=None, level=None, validate=True):
        if not isinstance(ring, CoeffRing):
            raise TypeError("ring must be a CoeffRing")
        self.ring = ring
        self.module = generators if isinstance(generators, FreeModule) else FreeModule(generators)
        self.E = parse_energy(E)
        if self.E <= 0:
            raise ValueError("truncation energy must be positive")
        self.K = int(K)
        if self.K < 0:
            raise ValueError("max arity must be nonnegative")
        self.dim_L = dim_L
        self.closed = bool(closed)
        self.horizon = {int(k): parse_energy(v) for k, v in (horizon or {}).items()}
        self.level = level
        self._build_table({(int(k), parse_label(b)): v for (k, b), v in ops.items()})
        if unit is not None and unit not in self.module.index:
            raise ValueError(f"unit {unit!r} is not a generator")
        self.unit = unit
        if monoid is None:
            monoid = GapMonoid([b for b in self.labels() if b != ZERO])
        self.monoid = monoid
        if validate:
            self.validate()

    @property
    def names(self):
        return self.module.names()

    @property
    def n(self):
        return len(self.module)

    def degree(self, i):
        return self.module.degree(i)

    def unit_index(self):
        return None if self.unit is None else self.module.index[self.unit]

    def validate(self):
        odd_ok = self.ring.char == 2
        for (k, beta), entries in self.ops.items():
            if k == 0 and beta == ZERO:
                raise ValueError("m_{0,0} must vanish")
            if k > self.K:
                raise ValueError(f"operation of arity {k} exceeds the max arity {self.K}")
            if beta[0] < 0:
                raise ValueError("labels must have nonnegative energy")
            if beta[0] > self.E:
                raise ValueError(f"label {fmt_label(beta)} exceeds the truncation energy")
            if beta[1] % 2 and not odd_ok:
                raise ValueError("odd Maslov labels need characteristic 2")
            if beta != ZERO and not self.monoid.contains(beta):
                raise ValueError(f"label {fmt_label(beta)} is not in the monoid")
            for tup, outs in entries.items():
                if len(tup) != k:
                    raise ValueError(f"input tuple {tup} does not have arity {k}")
                want = sum(self.degree(i) for i in tup) + 2 - k - beta[1]
                for o in outs:
                    if self.degree(o) != want:
                        raise ValueError(
                            f"m_{{{k},{fmt_label(beta)}}}({','.join(self.names[i] for i in tup)}) "
                            f"lands in degree {self.degree(o)}, expected {want}")

    def basis(self, i):
        return NVec.basis(self.ring, i)

    def with_ops(self, ops, **kw):
        args = dict(ring=self.ring, generators=self.module, ops=ops, E=self.E, K=self.K,
                    unit=self.unit, monoid=None, dim_L=self.dim_L, closed=self.closed,
                    horizon=self.horizon, level=None)
        args.update(kw)
        return FilteredAinfAlgebra(**args)

    def same_ops(self, other):
        return (self.ring == other.ring and self.module.generators == other.module.generators
                and self.ops == other.ops)

    @classmethod
    def from_boundary(cls, ring, generators, boundary, dim_L, E, K=1, **kw):
        """Algebra with ``m_{1,0} = (-1)^n * boundary`` only."""
        sign = ring.sign(dim_L)
        ops = {(1, ZERO): {(s,): {t: ring.mul(sign, ring.normalize(c)) for t, c in row.items()}
                           for s, row in boundary.items()}}
        return cls(ring, generators, ops, E, K, dim_L=dim_L, **kw)

    # -- serialization ---------------------------------------------------
    def to_json(self):
        names = self.names
        ops = []
        for (k, beta) in sorted(self.ops):
            for tup in sorted(self.ops[(k, beta)]):
                outs = self.ops[(k, beta)][tup]
                ops.append({
                    "k": k, "beta": fmt_label(beta), "in": [names[i] for i in tup],
                    "out": [{"gen": names[o], "coeff": self.ring.fmt(c)} for o, c in sorted(outs.items())],
                })
        obj = {
            "ring": self.ring.to_json(),
            "generators": [{"name": n, "degree": d} for n, d in self.module.generators],
            "monoid": [fmt_label(g) for g in self.monoid.generators],
            "ops": ops,
            "unit": self.unit,
            "E": fmt_energy(self.E),
            "K": self.K,
            "dim_L": self.dim_L,
            "closed": self.closed,
        }
        if self.horizon:
            obj["horizon"] = {str(k): fmt_energy(v) for k, v in sorted(self.horizon.items())}
        return obj

    @classmethod
    def from_json(cls, obj):
        ring = CoeffRing.from_json(obj["ring"])
        gens = [(g["name"], g["degree"]) for g in obj["generators"]]
        module = FreeModule(gens)
        ops = {}
        for n_, ent in enumerate(obj.get("ops", [])):
            for key in ("k", "beta", "in", "out"):
                if key not in ent:
                    raise ValueError(f"ops[{n_}] missing field {key!r}")
            k = int(ent["k"])
            beta = parse_label(ent["beta"])
            try:
                tup = tuple(module.index[x] for x in ent["in"])
            except KeyError as exc:
                raise ValueError(f"ops[{n_}].in: unknown generator {exc.args[0]!r}") from None
            dst = ops.setdefault((k, beta), {}).setdefault(tup, {})
            for o in ent["out"]:
                if o["gen"] not in module.index:
                    raise ValueError(f"ops[{n_}].out: unknown generator {o['gen']!r}")
                j = module.index[o["gen"]]
                c = ring.parse(o["coeff"])
                dst[j] = ring.add(dst.get(j, ring.zero()), c)
        monoid = GapMonoid(obj["monoid"]) if obj.get("monoid") else None
        return cls(ring, module, ops, obj["E"], obj["K"], unit=obj.get("unit"),
                   monoid=monoid, dim_L=obj.get("dim_L"), closed=obj.get("closed", False),
                   horizon=obj.get("horizon"))


def _signs_prefix(A, tup):
    """Prefix sums of shifted degrees: s[i] = sum_{j<i} deg' x_j (mod 2)."""
    s = [0]
    for i in tup:
        s.append((s[-1] + A.degree(i) + 1) % 2)
    return s


def _residual_report(report, k, tup, res, names, A, level_ok=None):
    """Record the defects of one residual vector."""
    if res.floor is not None:
        report.out_of_window.append({"k": k, "inputs": [names[i] for i in tup],
                                     "unknown_from": fmt_energy(res.floor)})
    for beta, outs in sorted(res.by_label().items()):
        if level_ok is not None and not level_ok(k, beta):
            report.stats["outside_level"] = report.stats.get("outside_level", 0) + 1
            continue
        report.add_defect(k=k, beta=fmt_label(beta), inputs=[names[i] for i in tup],
                          residual=[{"gen": names[o], "coeff": A.ring.fmt(c)}
                                    for o, c in sorted(outs.items())])


def relation_residual(A, tup, cache=None):
    """Residual NVec of the A-infinity relation on a basis tuple."""
    ring = A.ring
    k = len(tup)
    sgn = _signs_prefix(A, tup)
    res = NVec()
    if cache is None:
        cache = {}
    for k2 in range(0, k + 1):
        for i in range(0, k - k2 + 1):
            sub = tup[i:i + k2]
            key = (k2, sub)
            if key not in cache:
                cache[key] = A.apply(k2, [A.basis(j) for j in sub])
            inner = cache[key]
            if inner.is_zero():
                continue
            args = [A.basis(j) for j in tup[:i]] + [inner] + [A.basis(j) for j in tup[i + k2:]]
            val = A.apply(k - k2 + 1, args)
            res = res.add(val, ring.sign(sgn[i]))
    return res.normalized(A.E)


def _retained_index(A, k, beta):
    lv = A.level
    if k > lv.K:
        return False
    return AnkLevel(A.monoid._norm(beta) or 0, k) <= lv if A.monoid._norm(beta) is not None else False


def _retained_relation(A):
    lv = A.level
    elems = A.monoid.elements(A.E)
    eset = set(elems)

    @lru_cache(maxsize=None)
    def ok(k, beta):
        for b1 in elems:
            b2 = (beta[0] - b1[0], beta[1] - b1[1])
            if b2 not in eset:
                continue
            for k2 in range(0, k + 1):
                k1 = k + 1 - k2
                if k1 == 0:
                    continue
                if k2 == 0 and b1 == ZERO:
                    continue  # m_{0,0} is zero by definition
                if not (_retained_index(A, k1, beta_sub(beta, b1)) and _retained_index(A, k2, b1)):
                    return False
        return True
    return ok


def beta_sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def check_ainf(A, max_arity=None):
    """Check the signed A-infinity relations on every basis tuple of arity <= K."""
    K = A.K if max_arity is None else min(A.K, max_arity)
    rep = Report("check-ainf", "sum over splits of (-1)^{deg' prefix} m(.., m(..), ..) = 0")
    names = A.names
    level_ok = _retained_relation(A) if A.level is not None else None
    cache = {}
    count = 0
    for k in range(0, K + 1):
        for tup in iproduct(range(A.n), repeat=k):
            res = relation_residual(A, tup, cache)
            count += 1
            if res.terms or res.floor is not None:
                _residual_report(rep, k, tup, res, names, A, level_ok)
    rep.stats["tuples"] = count
    rep.stats["max_arity"] = K
    rep.stats["E"] = fmt_energy(A.E)
    if A.level is not None:
        rep.notes.append(f"restricted to relations retained at level ({A.level.n}, {A.level.K})")
    return rep


def check_unit(A):
    """Strict unit identities on every basis element and stored operation."""
    if A.unit is None:
        raise ValueError("algebra has no designated unit")
    rep = Report("check-unit", "m2(e,x) = x, m2(x,e) = (-1)^{deg x} x, other m_k(..e..) = 0")
    u = A.unit_index()
    names = A.names
    ring = A.ring
    for x in range(A.n):
        left = A.ops.get((2, ZERO), {}).get((u, x), {})
        right = A.ops.get((2, ZERO), {}).get((x, u), {})
        if left != {x: ring.one()}:
            rep.add_defect(k=2, beta=fmt_label(ZERO), inputs=[names[u], names[x]],
                           got=_fmt_outs(left, names, ring), want=names[x])
        want = {x: ring.sign(A.degree(x))}
        if right != want:
            rep.add_defect(k=2, beta=fmt_label(ZERO), inputs=[names[x], names[u]],
                           got=_fmt_outs(right, names, ring),
                           want=("-" if A.degree(x) % 2 and ring.char != 2 else "") + names[x])
    for (k, beta), entries in sorted(A.ops.items()):
        if k == 2 and beta == ZERO:
            continue
        for tup, outs in sorted(entries.items()):
            if u in tup:
                rep.add_defect(k=k, beta=fmt_label(beta), inputs=[names[i] for i in tup],
                               got=_fmt_outs(outs, names, ring), want="0")
    unknown = [k for k in range(A.K + 1) if A.unknown_floor(k) is not None]
    if unknown or not A.closed:
        rep.notes.append("verified on stored operations; arities above the window are not determined")
    return rep


def _fmt_outs(outs, names, ring):
    return [{"gen": names[o], "coeff": ring.fmt(c)} for o, c in sorted(outs.items())]


def truncate_ank(A, level):
    """Keep m_{k,beta} with k <= K and (||beta||, k) <= (n, K)."""
    if not isinstance(level, AnkLevel):
        level = AnkLevel(*level)
    ops = {}
    for (k, beta), entries in A.ops.items():
        nb = A.monoid._norm(beta)
        if k <= level.K and nb is not None and AnkLevel(nb, k) <= level:
            ops[(k, beta)] = entries
    lv = level if A.level is None or level <= A.level else A.level
    return FilteredAinfAlgebra(A.ring, A.module, ops, A.E, min(A.K, level.K), unit=A.unit,
                               monoid=A.monoid, dim_L=A.dim_L, closed=False,
                               horizon=A.horizon, level=lv)


def m1_complex(A, E=None):
    """The complex (C (x) Lambda_0, m_1) when m_1 squares to zero."""
    E = A.E if E is None else parse_energy(E)
    diff = {}
    for i in range(A.n):
        v = A.apply(1, [A.basis(i)], E)
        if v.floor is not None:
            raise ValueError("m_1 is not determined to the requested energy")
        if v.terms:
            diff[i] = v.terms
    return FilteredComplex(A.ring, A.module, diff, E)


# ---------------------------------------------------------------------------
# block decompositions shared by homomorphisms and transfer

def block_decompositions(n, max_empty):
    """Sequences of consecutive blocks covering range(n).

    Each block is ``(start, end)``; empty blocks (start == end) are allowed,
    at most ``max_empty`` of them in total.
    """
    def rec(pos, e_left):
        if pos == n:
            yield ()
        if e_left > 0:
            for rest in rec(pos, e_left - 1):
                yield ((pos, pos),) + rest
        for end in range(pos + 1, n + 1):
            for rest in rec(end, e_left):
                yield ((pos, end),) + rest
    return list(rec(0, max_empty))


def _max_empty(zero_vec, E):
    if zero_vec.is_zero():
        return 0
    v = zero_vec.eff_val()
    if v <= 0:
        raise ValueError("arity-zero components must have positive energy")
    return int(E / v)


# ---------------------------------------------------------------------------
# homomorphisms

class FilteredAinfHom(_Multilinear):
    """Components f_{k,beta} from ``source`` to ``target`` (shifted degree 0)."""

    def __init__(self, source, target, comps, K=None, closed=False, horizon=None, validate=True):
        if source.ring != target.ring:
            raise ValueError("algebras over different coefficient rings")
        self.source = source
        self.target = target
        self.ring = source.ring
        self.E = min(source.E, target.E)
        self.K = source.K if K is None else int(K)
        self.closed = bool(closed)
        self.horizon = {int(k): parse_energy(v) for k, v in (horizon or {}).items()}
        self._build_table({(int(k), parse_label(b)): v for (k, b), v in comps.items()})
        if validate:
            self.validate()

    def validate(self):
        for (k, beta), entries in self.ops.items():
            if k == 0 and beta == ZERO:
                raise ValueError("f_{0,0} must vanish")
            for tup, outs in entries.items():
                want = sum(self.source.degree(i) for i in tup) + 1 - k - beta[1]
                for o in outs:
                    if self.target.degree(o) != want:
                        raise ValueError(f"f_{{{k},{fmt_label(beta)}}} has the wrong degree")

    def to_json(self):
        sn, tn = self.source.names, self.target.names
        comps = []
        for (k, beta) in sorted(self.ops):
            for tup in sorted(self.ops[(k, beta)]):
                outs = self.ops[(k, beta)][tup]
                comps.append({"k": k, "beta": fmt_label(beta), "in": [sn[i] for i in tup],
                              "out": [{"gen": tn[o], "coeff": self.ring.fmt(c)} for o, c in sorted(outs.items())]})
        obj = {"K": self.K, "closed": self.closed, "components": comps}
        if self.horizon:
            obj["horizon"] = {str(k): fmt_energy(v) for k, v in sorted(self.horizon.items())}
        return obj

    @classmethod
    def from_json(cls, source, target, obj):
        ring = source.ring
        comps = {}
        for ent in obj.get("components", []):
            tup = tuple(source.module.index[x] for x in ent["in"])
            dst = comps.setdefault((int(ent["k"]), parse_label(ent["beta"])), {}).setdefault(tup, {})
            for o in ent["out"]:
                j = target.module.index[o["gen"]]
                dst[j] = ring.add(dst.get(j, ring.zero()), ring.parse(o["coeff"]))
        return cls(source, target, comps, K=obj.get("K"), closed=obj.get("closed", False),
                   horizon=obj.get("horizon"))

    def blocks_apply(self, vecs, target_apply=True):
        """sum over block decompositions of m'_l(f(block_1), .., f(block_l)).

        With ``target_apply=False`` returns the list of (decomposition, values).
        """
        E = self.E
        n = len(vecs)
        f0 = self.apply(0, [], E)
        cache = {}

        def fval(a, b):
            if (a, b) not in cache:
                cache[(a, b)] = f0 if a == b else self.apply(b - a, vecs[a:b], E)
            return cache[(a, b)]

        total = NVec()
        for dec in block_decompositions(n, _max_empty(f0, E)):
            vals = [fval(a, b) for a, b in dec]
            if any(v.is_zero() for v in vals):
                continue
            total = total.add(self.target.apply(len(vals), vals, E))
        return total.normalized(E)


def identity_hom(A):
    one = A.ring.one()
    return FilteredAinfHom(A, A, {(1, ZERO): {(i,): {i: one} for i in range(A.n)}},
                           K=A.K, closed=True)


def hom_residual(f, tup):
    A, B = f.source, f.target
    ring = A.ring
    vecs = [A.basis(i) for i in tup]
    lhs = f.blocks_apply(vecs)
    k = len(tup)
    sgn = _signs_prefix(A, tup)
    rhs = NVec()
    for k2 in range(0, k + 1):
        for i in range(0, k - k2 + 1):
            inner = A.apply(k2, vecs[i:i + k2], f.E)
            if inner.is_zero():
                continue
            args = vecs[:i] + [inner] + vecs[i + k2:]
            rhs = rhs.add(f.apply(k - k2 + 1, args, f.E), ring.sign(sgn[i]))
    return lhs.add(rhs, ring.neg(ring.one())).normalized(f.E)


def check_hom(f, max_arity=None):
    """Check sum m'(f..f) = sum +- f(.., m(..), ..) on basis tuples."""
    if f.source.ring != f.target.ring:
        raise ValueError("algebras over different coefficient rings")
    K = f.K if max_arity is None else min(f.K, max_arity)
    rep = Report("check-hom", "sum m'(f(..),..,f(..)) = sum (-1)^{deg' prefix} f(.., m(..), ..)")
    A = f.source
    count = 0
    for k in range(0, K + 1):
        for tup in iproduct(range(A.n), repeat=k):
            res = hom_residual(f, tup)
            count += 1
            if res.terms or res.floor is not None:
                _residual_report(rep, k, tup, res, A.names, f.target)
    rep.stats["tuples"] = count
    rep.stats["max_arity"] = K
    return rep


def compose_hom(f, g):
    """(f o g)_k = sum f_l(g(block_1), .., g(block_l)); g: A -> B, f: B -> C."""
    if g.target is not f.source and not (
            g.target.module.generators == f.source.module.generators and g.target.ring == f.source.ring):
        raise ValueError("codomain of the first map is not the domain of the second")
    A = g.source
    E = min(f.E, g.E)
    K = min(f.K, g.K)
    results = {}
    for k in range(0, K + 1):
        for tup in iproduct(range(A.n), repeat=k):
            vecs = [A.basis(i) for i in tup]
            g0 = g.apply(0, [], E)
            cache = {}

            def gval(a, b):
                if (a, b) not in cache:
                    cache[(a, b)] = g0 if a == b else g.apply(b - a, vecs[a:b], E)
                return cache[(a, b)]

            total = NVec()
            for dec in block_decompositions(k, _max_empty(g0, E)):
                vals = [gval(a, b) for a, b in dec]
                if any(v.is_zero() for v in vals):
                    continue
                total = total.add(f.apply(len(vals), vals, E))
            total = total.normalized(E)
            if total.terms or total.floor is not None:
                results[(k, tup)] = total
    comps, horizon = _decompose(results, K)
    comps.pop((0, ZERO), None)
    return FilteredAinfHom(A, f.target, comps, K=K, closed=f.closed and g.closed, horizon=horizon)


def same_hom(f, g):
    return f.ops == g.ops


# ---------------------------------------------------------------------------
# bimodules

class FilteredAinfBimodule:
    """Operations n_{k1,k2,beta}(a_1..a_k1, x, b_1..b_k2) -> module.

    ``ops`` maps ``(k1, k2, beta)`` to ``{(left tuple, x, right tuple): {out: coeff}}``.
    The relation treats (a.., x, b..) as one sequence: blocks inside the
    left part use the left algebra, blocks containing x use n, blocks inside
    the right part use the right algebra; empty blocks before x use the left
    curvature and after x the right curvature.  The sign is
    ``(-1)^{sum of deg' before the block}``.
    """

    def __init__(self, left, right, generators, ops, E=None, K=None, closed=False, validate=True):
        if left.ring != right.ring:
            raise ValueError("left and right algebras over different rings")
        self.left, self.right = left, right
        self.ring = left.ring
        self.module = generators if isinstance(generators, FreeModule) else FreeModule(generators)
        self.E = min(left.E, right.E) if E is None else parse_energy(E)
        self.K = max([k1 + k2 for (k1, k2, _) in ops] + [0]) if K is None else int(K)
        self.closed = closed
        table = {}
        clean = {}
        for (k1, k2, beta), entries in ops.items():
            beta = parse_label(beta)
            for (lt, x, rt), outs in entries.items():
                outs = {o: self.ring.normalize(c) for o, c in outs.items()}
                outs = {o: c for o, c in outs.items() if c != 0}
                if not outs:
                    continue
                clean.setdefault((k1, k2, beta), {})[(tuple(lt), x, tuple(rt))] = outs
                table.setdefault((k1, k2), {}).setdefault((tuple(lt), x, tuple(rt)), []).append(
                    (beta, sorted(outs.items())))
        self.ops = clean
        self._table = table
        if validate:
            for (k1, k2, beta), entries in self.ops.items():
                for (lt, x, rt), outs in entries.items():
                    want = (sum(left.degree(i) for i in lt) + self.module.degree(x)
                            + sum(right.degree(i) for i in rt) + 2 - (k1 + k2 + 1) - beta[1])
                    for o in outs:
                        if self.module.degree(o) != want:
                            raise ValueError(f"n_{{{k1},{k2}}} has the wrong degree")

    @property
    def names(self):
        return self.module.names()

    def to_json(self):
        ln, rn, mn = self.left.names, self.right.names, self.names
        ops = []
        for (k1, k2, beta) in sorted(self.ops):
            for (lt, x, rt) in sorted(self.ops[(k1, k2, beta)]):
                outs = self.ops[(k1, k2, beta)][(lt, x, rt)]
                ops.append({"k1": k1, "k2": k2, "beta": fmt_label(beta),
                            "left": [ln[i] for i in lt], "x": mn[x], "right": [rn[i] for i in rt],
                            "out": [{"gen": mn[o], "coeff": self.ring.fmt(c)} for o, c in sorted(outs.items())]})
        return {"generators": [{"name": n, "degree": d} for n, d in self.module.generators],
                "ops": ops, "E": fmt_energy(self.E), "K": self.K, "closed": self.closed}

    @classmethod
    def from_json(cls, left, right, obj):
        module = FreeModule([(g["name"], g["degree"]) for g in obj["generators"]])
        ring = left.ring
        ops = {}
        for n_, ent in enumerate(obj.get("ops", [])):
            try:
                lt = tuple(left.module.index[a] for a in ent["left"])
                rt = tuple(right.module.index[a] for a in ent["right"])
                x = module.index[ent["x"]]
                dst = ops.setdefault((int(ent["k1"]), int(ent["k2"]), parse_label(ent["beta"])), {})
                row = dst.setdefault((lt, x, rt), {})
                for o in ent["out"]:
                    j = module.index[o["gen"]]
                    row[j] = ring.add(row.get(j, ring.zero()), ring.parse(o["coeff"]))
            except KeyError as exc:
                raise ValueError(f"ops[{n_}]: unknown field or generator {exc.args[0]!r}") from None
        return cls(left, right, module, ops, E=obj.get("E"), K=obj.get("K"), closed=obj.get("closed", False))

    def apply(self, lvecs, mvec, rvecs):
        E = self.E
        ring = self.ring
        vecs = list(lvecs) + [mvec] + list(rvecs)
        vals = []
        for v in vecs:
            if v.is_zero():
                return NVec()
            vals.append(v.eff_val())
        total = sum(vals, Fraction(0))
        floor = None
        for i, v in enumerate(vecs):
            if v.floor is not None:
                floor = _min(floor, v.floor + total - vals[i])
        k1, k2 = len(lvecs), len(rvecs)
        if k1 + k2 > self.K and not self.closed:
            floor = _min(floor, total)
        out = {}
        table = self._table.get((k1, k2))
        if table and total <= E:
            supports = [sorted(v.terms.items(), key=lambda t: t[0]) for v in vecs]
            for combo in iproduct(*supports):
                idx = tuple(g for g, _ in combo)
                key = (idx[:k1], idx[k1], idx[k1 + 1:])
                entries = table.get(key)
                if not entries:
                    continue
                prod = NovikovElem.one(ring)
                for _, a in combo:
                    prod = prod.mul_trunc(a, E)
                if not prod:
                    continue
                for beta, outs in entries:
                    shifted = prod.shift(beta[0], beta[1]).truncate(E)
                    for o, c in outs:
                        v = shifted.scale(c)
                        out[o] = out[o] + v if o in out else v
        if floor is not None and floor > E:
            floor = None
        return NVec(out, floor).normalized(E)


def bimodule_from_algebra(A):
    """A as a bimodule over itself: n_{k1,k2} = m_{k1+k2+1}."""
    ops = {}
    for (k, beta), entries in A.ops.items():
        if k == 0:
            continue
        for tup, outs in entries.items():
            for pos in range(k):
                key = (pos, k - 1 - pos, beta)
                ops.setdefault(key, {})[(tup[:pos], tup[pos], tup[pos + 1:])] = outs
    return FilteredAinfBimodule(A, A, A.module, ops, E=A.E, K=A.K - 1, closed=A.closed)


def bimodule_residual(M, lt, x, rt):
    L, R = M.left, M.right
    ring = M.ring
    E = M.E
    k1, k2 = len(lt), len(rt)
    degs = [L.degree(i) for i in lt] + [M.module.degree(x)] + [R.degree(i) for i in rt]
    pref = [0]
    for d in degs:
        pref.append((pref[-1] + d + 1) % 2)
    lv = [L.basis(i) for i in lt]
    rv = [R.basis(i) for i in rt]
    xv = NVec.basis(ring, x)
    res = NVec()
    n = k1 + 1 + k2
    for a in range(n + 1):
        for b in range(a, n + 1):
            sign = ring.sign(pref[a])
            if b <= k1 and not (a == b == k1 + 1):
                # block inside the left part (empty block before x allowed)
                inner = L.apply(b - a, lv[a:b], E)
                if inner.is_zero():
                    continue
                new_l = lv[:a] + [inner] + lv[b:]
                val = M.apply(new_l, xv, rv)
            elif a >= k1 + 1:
                # block inside the right part (empty block right after x allowed)
                ra, rb = a - k1 - 1, b - k1 - 1
                inner = R.apply(rb - ra, rv[ra:rb], E)
                if inner.is_zero():
                    continue
                new_r = rv[:ra] + [inner] + rv[rb:]
                val = M.apply(lv, xv, new_r)
            elif a <= k1 < b:
                inner = M.apply(lv[a:], xv, rv[:b - k1 - 1])
                if inner.is_zero():
                    continue
                val = M.apply(lv[:a], inner, rv[b - k1 - 1:])
            else:
                continue
            res = res.add(val, sign)
    return res.normalized(E)


def check_bimodule(M, max_arity=None):
    """Check the bimodule relations on every basis triple of total arity <= K."""
    K = M.K if max_arity is None else min(M.K, max_arity)
    rep = Report("check-bimodule",
                 "sum over blocks of (-1)^{deg' prefix} n(.., m^L(..) or n(..) or m^R(..), ..) = 0")
    names = M.names
    count = 0
    for tot in range(0, K + 1):
        for k1 in range(0, tot + 1):
            k2 = tot - k1
            for lt in iproduct(range(M.left.n), repeat=k1):
                for x in range(len(M.module)):
                    for rt in iproduct(range(M.right.n), repeat=k2):
                        res = bimodule_residual(M, lt, x, rt)
                        count += 1
                        label = [M.left.names[i] for i in lt] + ["|" + names[x] + "|"] + [M.right.names[i] for i in rt]
                        if res.floor is not None:
                            rep.out_of_window.append({"k1": k1, "k2": k2, "inputs": label,
                                                      "unknown_from": fmt_energy(res.floor)})
                        for beta, outs in sorted(res.by_label().items()):
                            rep.add_defect(k1=k1, k2=k2, beta=fmt_label(beta), inputs=label,
                                           residual=_fmt_outs(outs, names, M.ring))
    rep.stats["tuples"] = count
    return rep
