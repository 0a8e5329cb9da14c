"""Exact coefficient rings: the integers, prime fields and the rationals.

Ring elements are plain Python values (``int`` for the integers and for
prime fields, ``Fraction`` for the rationals).  A ``CoeffRing`` instance
knows how to normalize, combine and print them.
"""

from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime

__all__ = ["CoeffRing", "ZZ", "QQ", "GF"]


@dataclass(frozen=True)
class CoeffRing:
    """One of ``Integers``, ``PrimeField(p)`` or ``Rationals``."""

    kind: str
    p: int = 0

    def __post_init__(self):
        if self.kind not in ("Integers", "PrimeField", "Rationals"):
            raise ValueError(f"unknown coefficient ring kind {self.kind!r}")
        if self.kind == "PrimeField":
            if not isinstance(self.p, int) or not isprime(self.p):
                raise ValueError(f"PrimeField needs a prime, got {self.p!r}")
        elif self.p != 0:
            raise ValueError(f"{self.kind} takes no modulus")

    # -- structure -----------------------------------------------------
    @property
    def char(self):
        return self.p if self.kind == "PrimeField" else 0

    @property
    def is_field(self):
        return self.kind != "Integers"

    @property
    def name(self):
        if self.kind == "PrimeField":
            return f"Z/{self.p}"
        return {"Integers": "Z", "Rationals": "Q"}[self.kind]

    def __repr__(self):
        return f"CoeffRing({self.name})"

    # -- elements ------------------------------------------------------
    def __call__(self, x):
        return self.normalize(x)

    def normalize(self, x):
        if self.kind == "Integers":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"{x} is not an integer")
                return x.numerator
            if isinstance(x, bool) or not isinstance(x, int):
                raise TypeError(f"expected an integer, got {x!r}")
            return x
        if self.kind == "PrimeField":
            if isinstance(x, Fraction):
                return (x.numerator * pow(x.denominator, -1, self.p)) % self.p
            if isinstance(x, bool) or not isinstance(x, int):
                raise TypeError(f"expected an integer, got {x!r}")
            return x % self.p
        return Fraction(x)

    def zero(self):
        return self.normalize(0)

    def one(self):
        return self.normalize(1)

    def add(self, a, b):
        s = a + b
        return s % self.p if self.p else s

    def sub(self, a, b):
        s = a - b
        return s % self.p if self.p else s

    def mul(self, a, b):
        s = a * b
        return s % self.p if self.p else s

    def neg(self, a):
        return (-a) % self.p if self.p else -a

    def sign(self, e):
        """(-1)**e as a ring element."""
        return self.one() if e % 2 == 0 else self.neg(self.one())

    def is_zero(self, a):
        return a == 0

    def is_unit(self, a):
        if self.kind == "Integers":
            return a in (1, -1)
        return a != 0

    def inv(self, a):
        if not self.is_unit(a):
            raise ZeroDivisionError(f"{a} is not a unit in {self.name}")
        if self.kind == "Integers":
            return a
        if self.kind == "PrimeField":
            return pow(a, -1, self.p)
        return 1 / a

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e):
        if e < 0:
            return pow(self.inv(a), -e) % self.p if self.p else self.inv(a) ** -e
        r = a ** e
        return r % self.p if self.p else r

    # -- text ----------------------------------------------------------
    def parse(self, v):
        """Accept ints, Fractions and strings like ``"3"`` or ``"-2/7"``."""
        if isinstance(v, str):
            v = Fraction(v.strip())
            if v.denominator == 1:
                v = v.numerator
        elif isinstance(v, float):
            raise TypeError("floating point coefficients are not accepted")
        return self.normalize(v)

    def fmt(self, a):
        """JSON-friendly form: ints stay ints, rationals become strings."""
        if isinstance(a, Fraction):
            return str(a.numerator) if a.denominator == 1 else str(a)
        return a

    def to_json(self):
        if self.kind == "PrimeField":
            return {"kind": "PrimeField", "p": self.p}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            s = obj.strip()
            if s in ("Z", "Integers"):
                return ZZ
            if s in ("Q", "Rationals"):
                return QQ
            for prefix in ("Z/", "GF", "F", "Z_"):
                if s.startswith(prefix):
                    return GF(int(s[len(prefix):].strip("()")))
            raise ValueError(f"cannot parse coefficient ring {obj!r}")
        kind = obj.get("kind")
        if kind == "PrimeField":
            return GF(int(obj["p"]))
        return cls(kind)


ZZ = CoeffRing("Integers")
QQ = CoeffRing("Rationals")


def GF(p):
    return CoeffRing("PrimeField", p)
