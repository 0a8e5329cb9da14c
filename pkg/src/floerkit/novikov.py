"""Truncated universal Novikov ring arithmetic.

An element is a finite sum of terms ``c * T**lam * e**(mu2/2)`` with exact
rational energies ``lam`` and integer ``mu2`` (twice the e-exponent, which is
also the degree of the monomial).  Terms are kept sorted by ``(lam, mu2)``
with no zero coefficients, so structural equality is ring equality.
"""

from fractions import Fraction
import math

from .coeff import CoeffRing

__all__ = ["NovikovElem", "parse_energy", "fmt_energy", "INF", "random_elem", "check_ring_axioms"]

INF = math.inf


def parse_energy(v):
    """Exact rational from an int, Fraction or string like ``"7/10"``."""
    if isinstance(v, float):
        raise TypeError("energies must be exact; use a string such as '7/10'")
    if isinstance(v, str):
        return Fraction(v.strip())
    return Fraction(v)


def fmt_energy(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class NovikovElem:
    """Immutable element of the Novikov ring over a coefficient ring."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring, terms=()):
        if not isinstance(ring, CoeffRing):
            raise TypeError("ring must be a CoeffRing")
        acc = {}
        for c, lam, mu2 in terms:
            key = (Fraction(lam), int(mu2))
            c = ring.normalize(c)
            acc[key] = ring.add(acc[key], c) if key in acc else c
        self.ring = ring
        self.terms = tuple((c, lam, mu2) for (lam, mu2), c in sorted(acc.items()) if c != 0)
        self._hash = None

    @classmethod
    def _raw(cls, ring, terms):
        # terms already canonical
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.terms = terms
        obj._hash = None
        return obj

    # -- constructors --------------------------------------------------
    @classmethod
    def zero(cls, ring):
        return cls._raw(ring, ())

    @classmethod
    def one(cls, ring):
        return cls._raw(ring, ((ring.one(), Fraction(0), 0),))

    @classmethod
    def const(cls, ring, c):
        return cls(ring, [(c, 0, 0)])

    @classmethod
    def monomial(cls, ring, c, lam=0, mu2=0):
        return cls(ring, [(c, lam, mu2)])

    # -- predicates and invariants -------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def valuation(self):
        """Minimal energy, or +inf for zero."""
        return self.terms[0][1] if self.terms else INF

    def in_lambda0(self):
        return all(lam >= 0 for _, lam, _ in self.terms)

    def in_lambda_plus(self):
        return all(lam > 0 for _, lam, _ in self.terms)

    def degrees(self):
        """Set of monomial degrees (the mu2 values)."""
        return {mu2 for _, _, mu2 in self.terms}

    def degree(self):
        """Degree of a homogeneous element; None for zero."""
        ds = self.degrees()
        if not ds:
            return None
        if len(ds) > 1:
            raise ValueError("element is not degree-homogeneous")
        return ds.pop()

    def leading_part(self):
        """Terms at the minimal energy."""
        if not self.terms:
            return self
        v = self.terms[0][1]
        return NovikovElem._raw(self.ring, tuple(t for t in self.terms if t[1] == v))

    def coeff(self, lam, mu2=0):
        lam = Fraction(lam)
        for c, l, m in self.terms:
            if l == lam and m == mu2:
                return c
        return self.ring.zero()

    # -- arithmetic ----------------------------------------------------
    def _check(self, other):
        if not isinstance(other, NovikovElem):
            return NovikovElem.const(self.ring, other)
        if other.ring != self.ring:
            raise ValueError(f"mismatched coefficient rings {self.ring} and {other.ring}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        return NovikovElem(self.ring, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        R = self.ring
        return NovikovElem._raw(R, tuple((R.neg(c), l, m) for c, l, m in self.terms))

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        return self.mul_trunc(other, None)

    __rmul__ = __mul__

    def mul_trunc(self, other, E):
        """Product, dropping terms of energy above ``E`` (None: keep all)."""
        R = self.ring
        if not self.terms or not other.terms:
            return NovikovElem._raw(R, ())
        out = []
        for c1, l1, m1 in self.terms:
            for c2, l2, m2 in other.terms:
                lam = l1 + l2
                if E is not None and lam > E:
                    break
                out.append((R.mul(c1, c2), lam, m1 + m2))
        return NovikovElem(R, out)

    def scale(self, c):
        R = self.ring
        c = R.normalize(c)
        if c == 0:
            return NovikovElem._raw(R, ())
        return NovikovElem(R, [(R.mul(c, a), l, m) for a, l, m in self.terms])

    def shift(self, lam, mu2=0):
        """Multiply by ``T**lam e**(mu2/2)``."""
        lam = Fraction(lam)
        return NovikovElem._raw(self.ring, tuple((c, l + lam, m + mu2) for c, l, m in self.terms))

    def truncate(self, E):
        """Drop terms with energy strictly above ``E``."""
        E = Fraction(E)
        if E < 0:
            raise ValueError("truncation energy must be nonnegative")
        return NovikovElem._raw(self.ring, tuple(t for t in self.terms if t[1] <= E))

    def invert(self, E):
        """Inverse modulo energies above ``E`` (geometric series)."""
        E = Fraction(E)
        if E < 0:
            raise ValueError("truncation energy must be nonnegative")
        R = self.ring
        if not self.terms:
            raise ZeroDivisionError("zero is not invertible")
        if self.valuation() != 0:
            raise ValueError("only elements of valuation 0 can be inverted")
        lead = self.leading_part()
        if len(lead.terms) != 1:
            raise ValueError("the energy-0 part is not a single homogeneous term")
        c0, _, m0 = lead.terms[0]
        if not R.is_unit(c0):
            raise ValueError(f"leading coefficient {c0} is not a unit in {R.name}")
        u0 = NovikovElem._raw(R, ((R.inv(c0), Fraction(0), -m0),))
        # self = lead * (1 - x) with x of positive valuation
        x = -(self.mul_trunc(u0, E) - NovikovElem.one(R))
        result = NovikovElem.one(R)
        power = NovikovElem.one(R)
        if x:
            v = x.valuation()
            for _ in range(int(E / v) + 1):
                power = power.mul_trunc(x, E)
                if not power:
                    break
                result = result + power
        return result.mul_trunc(u0, E)

    # -- comparison ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, NovikovElem):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, int) and other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, self.terms))
        return self._hash

    def __repr__(self):
        return f"NovikovElem({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for c, lam, mu2 in self.terms:
            s = str(self.ring.fmt(c))
            if lam:
                s += f"*T^{fmt_energy(lam)}"
            if mu2:
                s += f"*e^{Fraction(mu2, 2)}"
            parts.append(s)
        return " + ".join(parts)

    # -- serialization -------------------------------------------------
    def to_json(self):
        return [
            {"c": self.ring.fmt(c), "lam": fmt_energy(lam), "mu2": mu2}
            for c, lam, mu2 in self.terms
        ]

    @classmethod
    def from_json(cls, ring, obj):
        """Accept a term list, a single term dict or a bare coefficient."""
        if isinstance(obj, (int, str)) and not isinstance(obj, bool):
            return cls.const(ring, ring.parse(obj))
        if isinstance(obj, dict):
            obj = [obj]
        terms = []
        for t in obj:
            if not isinstance(t, dict) or "c" not in t:
                raise ValueError(f"bad Novikov term {t!r}")
            unknown = set(t) - {"c", "lam", "mu2"}
            if unknown:
                raise ValueError(f"unknown Novikov term fields {sorted(unknown)}")
            mu2 = t.get("mu2", 0)
            if isinstance(mu2, bool) or not isinstance(mu2, int):
                raise ValueError(f"mu2 must be an integer, got {mu2!r}")
            terms.append((ring.parse(t["c"]), parse_energy(t.get("lam", 0)), mu2))
        return cls(ring, terms)


# -- randomized self-check ---------------------------------------------------------


def random_elem(ring, rng, max_terms=4, max_lam=8):
    """Random element with small coefficients, energies in (1/6)Z and |mu2| <= 2."""
    terms = []
    for _ in range(rng.randint(0, max_terms)):
        if ring.kind == "Rationals":
            c = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        else:
            c = rng.randint(-6, 6)
        terms.append((c, Fraction(rng.randint(0, max_lam), rng.choice((1, 2, 3))), rng.randint(-2, 2)))
    return NovikovElem(ring, terms)


def check_ring_axioms(ring, trials, rng):
    """Ring axioms and filtration properties on random triples; returns a Report."""
    from .report import Report
    rep = Report("ring-axioms", "commutative ring axioms; val(x+y) >= min, val(xy) >= val x + val y "
                                "(equality over a field); truncation is multiplicative")
    zero, one = NovikovElem.zero(ring), NovikovElem.one(ring)
    for n in range(trials):
        x, y, z = (random_elem(ring, rng) for _ in range(3))
        E = Fraction(rng.randint(0, 8), 2)
        checks = {
            "add_commutative": x + y == y + x,
            "add_associative": (x + y) + z == x + (y + z),
            "mul_commutative": x * y == y * x,
            "mul_associative": (x * y) * z == x * (y * z),
            "distributive": x * (y + z) == x * y + x * z,
            "identities": x + zero == x and x * one == x and x - x == zero,
            "valuation_sum": (x + y).valuation() >= min(x.valuation(), y.valuation()),
            "valuation_product": (x * y).valuation() >= x.valuation() + y.valuation(),
            "valuation_field": not (ring.is_field and x and y)
                               or (x * y).valuation() == x.valuation() + y.valuation(),
            "truncation": (x * y).truncate(E) == x.truncate(E).mul_trunc(y.truncate(E), E),
        }
        for name, ok in checks.items():
            if not ok:
                rep.add_defect(trial=n, property=name, x=x.to_json(), y=y.to_json(), z=z.to_json())
    rep.stats.update({"ring": ring.name, "trials": trials})
    return rep
