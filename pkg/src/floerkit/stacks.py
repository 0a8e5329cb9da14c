"""Sheaves of group-categories on a finite cover nerve.

A sheaf assigns an automorphism ``h_ij`` of a finite group ``G`` to each
ordered pair of overlapping opens and an element ``gamma_ijk`` to each
ordered triple, subject to

* ``h_ij . h_jk = ad(gamma_ijk) . h_ik`` on triples, and
* ``gamma_ijk gamma_ikl = h_ij(gamma_jkl) gamma_ijl`` on quadruples.

Simplices are ordered tuples with repetitions allowed; nothing is assumed
about ``h_ii`` or about reversing the order.
"""

from dataclasses import dataclass
from itertools import product
from math import lcm

import numpy as np
import sympy

from .report import Report
from .zmod import cokernel_mod, kernel_mod

__all__ = [
    "FiniteGroup", "CoverNerve", "octahedron_nerve", "GroupCatSheaf", "SheafIso", "StackBundle",
    "check_group_cocycle", "apply_iso", "compose_iso", "inverse_iso", "identity_iso", "same_sheaf",
    "check_bundle", "transport_bundle", "fixed_subbundle", "fixed_dim", "abelian_cech_class",
    "wrapped_sheaf", "coboundary_sheaf", "derive_gamma_from_actions", "random_iso", "regular_rep",
    "trivial_rep", "sign_rep",
]


# -- groups --------------------------------------------------------------------


class FiniteGroup:
    """Finite group on elements ``0..n-1`` given by a multiplication table.

    Automorphisms are tuples ``a`` with ``a[g]`` the image of ``g``.
    """

    def __init__(self, table, names=None, name="G"):
        self.table = [list(r) for r in table]
        self.n = len(self.table)
        self.names = list(names) if names else [str(i) for i in range(self.n)]
        self.name = name
        self._check()
        self.identity = next(e for e in range(self.n) if all(self.table[e][g] == g for g in range(self.n)))
        self._inv = [next(h for h in range(self.n) if self.table[g][h] == self.identity) for g in range(self.n)]

    def _check(self):
        n, T = self.n, self.table
        if any(len(r) != n or any(not 0 <= x < n for x in r) for r in T):
            raise ValueError("multiplication table must be square with entries in range")
        ids = [e for e in range(n) if all(T[e][g] == g and T[g][e] == g for g in range(n))]
        if not ids:
            raise ValueError("no identity element")
        e = ids[0]
        for g in range(n):
            if not any(T[g][h] == e and T[h][g] == e for h in range(n)):
                raise ValueError(f"element {g} has no inverse")
        for a, b, c in product(range(n), repeat=3):
            if T[T[a][b]][c] != T[a][T[b][c]]:
                raise ValueError("multiplication is not associative")

    def mul(self, a, b):
        return self.table[a][b]

    def prod(self, *xs):
        out = self.identity
        for x in xs:
            out = self.table[out][x]
        return out

    def inv(self, a):
        return self._inv[a]

    def is_abelian(self):
        return all(self.table[a][b] == self.table[b][a] for a in range(self.n) for b in range(self.n))

    def order(self, g):
        k, x = 1, g
        while x != self.identity:
            x, k = self.table[x][g], k + 1
        return k

    # automorphisms
    def identity_aut(self):
        return tuple(range(self.n))

    def ad(self, g):
        gi = self.inv(g)
        return tuple(self.prod(g, x, gi) for x in range(self.n))

    def compose(self, a, b):
        """``a . b`` (apply b first)."""
        return tuple(a[b[x]] for x in range(self.n))

    def aut_inverse(self, a):
        out = [0] * self.n
        for x, y in enumerate(a):
            out[y] = x
        return tuple(out)

    def is_automorphism(self, a):
        if sorted(a) != list(range(self.n)):
            return False
        return all(a[self.table[x][y]] == self.table[a[x]][a[y]] for x in range(self.n) for y in range(self.n))

    def generators(self):
        """A small generating set, chosen greedily."""
        gens, span = [], {self.identity}
        while len(span) < self.n:
            g = min((x for x in range(self.n) if x not in span), key=lambda x: (-self.order(x), x))
            gens.append(g)
            span = self._closure(gens)
        return gens

    def _closure(self, gens):
        span, frontier = {self.identity}, [self.identity]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = self.table[x][g]
                if y not in span:
                    span.add(y)
                    frontier.append(y)
        return span

    def automorphisms(self):
        """All automorphisms, by trying every image of a generating set."""
        gens = self.generators()
        out = []
        for imgs in product(range(self.n), repeat=len(gens)):
            a = self._extend(gens, imgs)
            if a is not None and self.is_automorphism(a):
                out.append(a)
        return sorted(set(out))

    def _extend(self, gens, imgs):
        img = {self.identity: self.identity}
        frontier = [self.identity]
        while frontier:
            x = frontier.pop()
            for g, gi in zip(gens, imgs):
                y, fy = self.table[x][g], self.table[img[x]][gi]
                if y in img:
                    if img[y] != fy:
                        return None
                else:
                    img[y] = fy
                    frontier.append(y)
        return tuple(img[x] for x in range(self.n))

    def to_json(self):
        return {"name": self.name, "names": self.names, "table": self.table}

    @classmethod
    def from_json(cls, obj):
        if "cyclic" in obj:
            return cls.cyclic(obj["cyclic"])
        if "abelian" in obj:
            return cls.abelian(obj["abelian"])
        if "permutations" in obj:
            return cls.from_permutations(obj["permutations"], obj.get("name", "G"))
        return cls(obj["table"], obj.get("names"), obj.get("name", "G"))

    @classmethod
    def cyclic(cls, n):
        return cls([[(a + b) % n for b in range(n)] for a in range(n)], name=f"Z{n}")

    @classmethod
    def abelian(cls, orders):
        elems = list(product(*[range(k) for k in orders]))
        idx = {e: i for i, e in enumerate(elems)}
        table = [[idx[tuple((x + y) % k for x, y, k in zip(a, b, orders))] for b in elems] for a in elems]
        return cls(table, ["(" + ",".join(map(str, e)) + ")" for e in elems], "x".join(f"Z{k}" for k in orders))

    @classmethod
    def from_permutations(cls, gens, name="G"):
        """Group generated by permutations given as image lists."""
        gens = [tuple(g) for g in gens]
        k = len(gens[0])
        e = tuple(range(k))
        elems, frontier = {e}, [e]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = tuple(g[x[i]] for i in range(k))
                if y not in elems:
                    elems.add(y)
                    frontier.append(y)
        elems = sorted(elems)
        idx = {p: i for i, p in enumerate(elems)}
        # (a b)(i) = a(b(i)): apply b first
        table = [[idx[tuple(a[b[i]] for i in range(k))] for b in elems] for a in elems]
        return cls(table, ["".join(map(str, p)) for p in elems], name)

    @classmethod
    def symmetric(cls, k):
        if k < 2:
            return cls([[0]], name="S1")
        gens = [tuple([1, 0] + list(range(2, k))), tuple(list(range(1, k)) + [0])]
        return cls.from_permutations(gens, f"S{k}")


_STRUCTURE_CACHE = {}


def _abelian_structure(G):
    """Cyclic decomposition of an abelian group: ``(orders, to_vec, from_vec)``."""
    key = tuple(map(tuple, G.table))
    if key not in _STRUCTURE_CACHE:
        _STRUCTURE_CACHE[key] = _decompose(G)
    return _STRUCTURE_CACHE[key]


def _decompose(G):
    if not G.is_abelian():
        raise ValueError("group is not abelian")
    N = lcm(*(G.order(g) for g in range(G.n))) if G.n > 1 else 1
    if N == 1:
        return [], (lambda g: ()), (lambda v: G.identity)
    # presentation: generators e_g, relations e_g + e_h - e_{gh}
    cols = []
    for g in range(G.n):
        for h in range(g, G.n):
            c = [0] * G.n
            c[g] += 1
            c[h] += 1
            c[G.mul(g, h)] -= 1
            cols.append(c)
    R = np.array(cols, dtype=np.int64).T % N
    P, inv = cokernel_mod(R, N)
    keep = [i for i, d in enumerate(inv) if d != 1]
    orders = [inv[i] for i in keep]
    vecs = {}
    for g in range(G.n):
        w = P[:, g] % N
        vecs[g] = tuple(int(w[i]) % inv[i] for i in keep)
    back = {v: g for g, v in vecs.items()}
    if len(back) != G.n:
        raise AssertionError("cyclic decomposition is not injective")
    return orders, vecs.__getitem__, back.__getitem__


# -- nerves --------------------------------------------------------------------


@dataclass
class CoverNerve:
    """Ordered simplices of a cover nerve: ``simplices[q]`` lists (q+1)-tuples."""

    index: list
    simplices: dict

    def __post_init__(self):
        self.simplices = {int(q): [tuple(s) for s in v] for q, v in self.simplices.items()}
        for q in range(4):
            self.simplices.setdefault(q, [])
        self._sets = {q: set(v) for q, v in self.simplices.items()}
        self.check()

    def check(self):
        for q in range(1, 4):
            for s in self.simplices[q]:
                for j in range(q + 1):
                    face = s[:j] + s[j + 1:]
                    if face not in self._sets[q - 1]:
                        raise ValueError(f"face {face} of {s} is not listed")
        return self

    def has(self, s):
        return tuple(s) in self._sets[len(s) - 1]

    @property
    def pairs(self):
        return self.simplices[1]

    @property
    def triples(self):
        return self.simplices[2]

    @property
    def quadruples(self):
        return self.simplices[3]

    def to_json(self):
        return {"index": list(self.index), "simplices": {str(q): [list(s) for s in v] for q, v in self.simplices.items()}}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["index"], obj["simplices"])

    @classmethod
    def from_faces(cls, index, faces, max_dim=3):
        """Nerve whose ordered simplices are tuples with underlying set inside a face."""
        faces = [frozenset(f) for f in faces]
        simp = {}
        for q in range(max_dim + 1):
            simp[q] = [t for t in product(index, repeat=q + 1) if any(set(t) <= f for f in faces)]
        return cls(list(index), simp)


OCTAHEDRON_VERTICES = ["+x", "-x", "+y", "-y", "+z", "-z"]


def octahedron_nerve():
    """Nerve of the cover of S^2 by open stars of the octahedron vertices."""
    faces = [frozenset(f) for f in product(["+x", "-x"], ["+y", "-y"], ["+z", "-z"])]
    return CoverNerve.from_faces(OCTAHEDRON_VERTICES, faces)


# -- sheaves and isomorphisms ---------------------------------------------------


@dataclass
class GroupCatSheaf:
    """``h``: {pair: automorphism tuple}; ``gamma``: {triple: element}."""

    group: FiniteGroup
    nerve: CoverNerve
    h: dict
    gamma: dict

    def __post_init__(self):
        self.h = {tuple(k): tuple(v) for k, v in self.h.items()}
        self.gamma = {tuple(k): v for k, v in self.gamma.items()}
        if set(self.h) != set(self.nerve.pairs) or set(self.gamma) != set(self.nerve.triples):
            raise ValueError("sheaf data must be given on exactly the pairs and triples of the nerve")

    def to_json(self):
        G = self.group
        return {
            "group": G.to_json(),
            "nerve": self.nerve.to_json(),
            "h": [[list(k), list(v)] for k, v in sorted(self.h.items())],
            "gamma": [[list(k), v] for k, v in sorted(self.gamma.items())],
        }

    @classmethod
    def from_json(cls, obj, group=None, nerve=None):
        G = group or FiniteGroup.from_json(obj["group"])
        if nerve is None:
            nerve = octahedron_nerve() if obj.get("nerve") == "octahedron" else CoverNerve.from_json(obj["nerve"])
        h = {tuple(k): tuple(v) for k, v in obj["h"]} if "h" in obj else {p: G.identity_aut() for p in nerve.pairs}
        return cls(G, nerve, h, {tuple(k): v for k, v in obj["gamma"]})


def check_group_cocycle(S):
    """Verify the triple and quadruple compatibilities on every listed simplex."""
    G = S.group
    rep = Report("group_cocycle", "h_ij h_jk = ad(gamma_ijk) h_ik on triples; "
                 "gamma_ijk gamma_ikl = h_ij(gamma_jkl) gamma_ijl on quadruples")
    for p, a in S.h.items():
        if not G.is_automorphism(a):
            rep.add_defect(kind="not_automorphism", simplex=list(p))
    for (i, j, k) in S.nerve.triples:
        lhs = G.compose(S.h[(i, j)], S.h[(j, k)])
        rhs = G.compose(G.ad(S.gamma[(i, j, k)]), S.h[(i, k)])
        if lhs != rhs:
            rep.add_defect(kind="triple", simplex=[i, j, k])
    for (i, j, k, l) in S.nerve.quadruples:
        lhs = G.mul(S.gamma[(i, j, k)], S.gamma[(i, k, l)])
        rhs = G.mul(S.h[(i, j)][S.gamma[(j, k, l)]], S.gamma[(i, j, l)])
        if lhs != rhs:
            rep.add_defect(kind="quadruple", simplex=[i, j, k, l])
    rep.stats = {"pairs": len(S.nerve.pairs), "triples": len(S.nerve.triples), "quadruples": len(S.nerve.quadruples)}
    return rep


@dataclass
class SheafIso:
    """``mu``: {pair: element}; ``psi``: {index: automorphism}."""

    mu: dict
    psi: dict

    def __post_init__(self):
        self.mu = {tuple(k): v for k, v in self.mu.items()}
        self.psi = {k: tuple(v) for k, v in self.psi.items()}

    def to_json(self):
        return {"mu": [[list(k), v] for k, v in sorted(self.mu.items())],
                "psi": [[k, list(v)] for k, v in sorted(self.psi.items())]}

    @classmethod
    def from_json(cls, obj):
        return cls({tuple(k): v for k, v in obj["mu"]}, {k: tuple(v) for k, v in obj["psi"]})


def identity_iso(G, nerve):
    return SheafIso({p: G.identity for p in nerve.pairs}, {i: G.identity_aut() for i in nerve.index})


def _check_iso_shape(S, t):
    if set(t.mu) != set(S.nerve.pairs) or set(t.psi) != set(S.nerve.index):
        raise ValueError("isomorphism data must cover the pairs and indices of the nerve")


def apply_iso(S, t):
    """Push ``S`` forward along ``t``: first twist by ``psi``, then by ``mu``."""
    _check_iso_shape(S, t)
    G = S.group
    psi_inv = {i: G.aut_inverse(a) for i, a in t.psi.items()}
    h2 = {(i, j): G.compose(t.psi[i], G.compose(a, psi_inv[j])) for (i, j), a in S.h.items()}
    g2 = {(i, j, k): t.psi[i][g] for (i, j, k), g in S.gamma.items()}
    h3 = {(i, j): G.compose(G.ad(t.mu[(i, j)]), a) for (i, j), a in h2.items()}
    g3 = {}
    for (i, j, k), g in g2.items():
        g3[(i, j, k)] = G.prod(t.mu[(i, j)], h2[(i, j)][t.mu[(j, k)]], g, G.inv(t.mu[(i, k)]))
    return GroupCatSheaf(G, S.nerve, h3, g3)


def compose_iso(G, t2, t1):
    """The isomorphism ``t2 . t1`` (apply ``t1`` first)."""
    mu = {p: G.mul(t2.mu[p], t2.psi[p[0]][m]) for p, m in t1.mu.items()}
    psi = {i: G.compose(t2.psi[i], a) for i, a in t1.psi.items()}
    return SheafIso(mu, psi)


def inverse_iso(G, t):
    psi = {i: G.aut_inverse(a) for i, a in t.psi.items()}
    mu = {p: psi[p[0]][G.inv(m)] for p, m in t.mu.items()}
    return SheafIso(mu, psi)


def same_sheaf(S, T):
    return S.h == T.h and S.gamma == T.gamma


def random_iso(G, nerve, rng, auts=None, twist=True):
    """Random isomorphism; ``twist=False`` keeps every ``psi_i`` trivial."""
    auts = auts or G.automorphisms()
    mu = {p: rng.randrange(G.n) for p in nerve.pairs}
    psi = {i: (rng.choice(auts) if twist else G.identity_aut()) for i in nerve.index}
    return SheafIso(mu, psi)


def coboundary_sheaf(G, nerve, mu):
    """Image of the trivial sheaf under ``(mu, 1)``: ``h = ad(mu)``, ``gamma = delta mu``."""
    trivial = GroupCatSheaf(G, nerve, {p: G.identity_aut() for p in nerve.pairs}, {t: G.identity for t in nerve.triples})
    return apply_iso(trivial, SheafIso(mu, {i: G.identity_aut() for i in nerve.index}))


def wrapped_sheaf(p, nerve=None, face=("-y", "+x", "-z"), twist=1):
    """Z/p sheaf on the octahedron cover whose class winds ``twist`` times.

    The gluing of two discs by a rotation that turns once through Z/p as
    one goes around the equator concentrates, on this cover, into a single
    oriented face: ``gamma`` is ``twist`` on the even orderings of ``face``,
    ``-twist`` on the odd ones and zero elsewhere.  ``h`` is the identity.
    """
    G = FiniteGroup.cyclic(p)
    nerve = nerve or octahedron_nerve()
    base = tuple(face)
    gamma = {}
    for t in nerve.triples:
        val = 0
        if len(set(t)) == 3 and set(t) == set(base):
            perm = [base.index(x) for x in t]
            inversions = sum(1 for a in range(3) for b in range(a + 1, 3) if perm[a] > perm[b])
            val = twist if inversions % 2 == 0 else -twist
        gamma[t] = val % p
    return GroupCatSheaf(G, nerve, {q: G.identity_aut() for q in nerve.pairs}, gamma)


# -- abelian classification ------------------------------------------------------


def _aut_matrix(G, a, orders, to_vec, from_vec):
    r = len(orders)
    M = np.zeros((r, r), dtype=np.int64)
    for k in range(r):
        e = [0] * r
        e[k] = 1
        M[:, k] = to_vec(a[from_vec(tuple(e))])
    return M


def _cech_matrix(S, q, orders, to_vec, from_vec, N):
    """Matrix of the Cech differential from q-cochains to (q+1)-cochains."""
    G, nerve = S.group, S.nerve
    r = len(orders)
    src = {s: n for n, s in enumerate(nerve.simplices[q])}
    tgt = nerve.simplices[q + 1]
    D = np.zeros((len(tgt) * r, len(src) * r), dtype=np.int64)
    mats = {}
    eye = np.eye(r, dtype=np.int64)
    for row, s in enumerate(tgt):
        for j in range(q + 2):
            face = s[:j] + s[j + 1:]
            col = src[face]
            if j == 0:
                pair = (s[0], s[1])
                if pair not in mats:
                    mats[pair] = _aut_matrix(G, S.h[pair], orders, to_vec, from_vec)
                D[row * r:(row + 1) * r, col * r:(col + 1) * r] += mats[pair]
            else:
                D[row * r:(row + 1) * r, col * r:(col + 1) * r] += (-1) ** j * eye
    return D % N


_CLASS_CACHE = {}


def abelian_cech_class(S):
    """Cech 2-class of ``gamma`` with coefficients in the local system ``h``.

    Returns a dict with the invariant factors of H^2, the coordinates of the
    class, its order, and whether it is zero or generates H^2.
    """
    G = S.group
    if not G.is_abelian():
        raise ValueError("the Cech class needs an abelian group")
    for (i, j, k) in S.nerve.triples:
        if G.compose(S.h[(i, j)], S.h[(j, k)]) != S.h[(i, k)]:
            raise ValueError(f"h is not a local system on {(i, j, k)}")
    orders, to_vec, from_vec = _abelian_structure(G)
    r = len(orders)
    if r == 0:
        return {"invariants": [], "class": [], "order": 1, "zero": True, "generates": True}
    N = lcm(*orders)
    key = (id(S.nerve), tuple(orders), tuple(sorted(S.h.items())), G.n, tuple(map(tuple, G.table)))
    if key not in _CLASS_CACHE:
        D1 = _cech_matrix(S, 1, orders, to_vec, from_vec, N)
        D2 = _cech_matrix(S, 2, orders, to_vec, from_vec, N)
        W = np.tile(np.array([N // n for n in orders], dtype=np.int64), len(S.nerve.quadruples))
        Qinv, kord = kernel_mod((W[:, None] * D2) % N, N)
        t = np.array([N // o for o in kord], dtype=np.int64)
        m2 = D2.shape[1]
        rel2 = np.zeros((m2, m2), dtype=np.int64)
        for c in range(m2):
            rel2[c, c] = orders[c % r]
        gens = np.concatenate([D1, rel2], axis=1)
        Y = (Qinv @ gens) % N
        if np.any(Y % t[:, None]):
            raise AssertionError("boundaries are not cocycles")
        Z = (Y // t[:, None]) % np.array(kord, dtype=np.int64)[:, None]
        R = np.concatenate([np.diag(np.array(kord, dtype=np.int64)) % N, Z], axis=1)
        P2, inv = cokernel_mod(R, N)
        _CLASS_CACHE[key] = (Qinv, t, kord, P2, inv)
        if len(_CLASS_CACHE) > 256:
            _CLASS_CACHE.pop(next(iter(_CLASS_CACHE)))
    Qinv, t, kord, P2, inv = _CLASS_CACHE[key]
    x = np.array([c for tr in S.nerve.triples for c in to_vec(S.gamma[tr])], dtype=np.int64)
    y = (Qinv @ x) % N
    if np.any(y % t):
        raise ValueError("gamma is not a cocycle")
    z = (y // t) % np.array(kord, dtype=np.int64)
    w = (P2 @ z) % N
    keep = [i for i, d in enumerate(inv) if d != 1]
    invariants = [int(inv[i]) for i in keep]
    coords = [int(w[i] % inv[i]) for i in keep]
    order = 1
    for c, d in zip(coords, invariants):
        order = lcm(order, d // np.gcd(c, d) if c else 1)
    size = 1
    for d in invariants:
        size *= d
    return {"invariants": invariants, "class": coords, "order": int(order),
            "zero": order == 1, "generates": order == size}


# -- bundles ---------------------------------------------------------------------


def _mat(m):
    return m if isinstance(m, sympy.Matrix) else sympy.Matrix(m)


def trivial_rep(G, dim=1):
    return {g: sympy.eye(dim) for g in range(G.n)}


def regular_rep(G):
    """Left regular representation by permutation matrices."""
    reps = {}
    for g in range(G.n):
        M = sympy.zeros(G.n, G.n)
        for x in range(G.n):
            M[G.mul(g, x), x] = 1
        reps[g] = M
    return reps


def sign_rep(G, dim, sign_of):
    """``dim`` copies of a one-dimensional representation with values ``sign_of(g)``."""
    return {g: sign_of(g) * sympy.eye(dim) for g in range(G.n)}


@dataclass
class StackBundle:
    """``reps``: {index: {element: matrix}}; ``g``: {pair: matrix F_j -> F_i}."""

    sheaf: GroupCatSheaf
    reps: dict
    g: dict

    def __post_init__(self):
        self.reps = {i: {x: _mat(m) for x, m in r.items()} for i, r in self.reps.items()}
        self.g = {tuple(p): _mat(m) for p, m in self.g.items()}

    def dim(self, i):
        return self.reps[i][self.sheaf.group.identity].shape[0]

    def to_json(self):
        def mj(M):
            return [[str(x) for x in M.row(r)] for r in range(M.rows)]
        return {"reps": {str(i): {str(x): mj(m) for x, m in r.items()} for i, r in self.reps.items()},
                "g": [[list(p), mj(m)] for p, m in sorted(self.g.items())]}


def check_bundle(B):
    """Representations, equivariance of every ``g_ij`` and ``g_ij g_jk = gamma_ijk g_ik``."""
    S, G = B.sheaf, B.sheaf.group
    rep = Report("stack_bundle", "g_ij rho_j(x) = rho_i(h_ij x) g_ij; g_ij g_jk = rho_i(gamma_ijk) g_ik")
    for i in S.nerve.index:
        r = B.reps[i]
        d = B.dim(i)
        if r[G.identity] != sympy.eye(d):
            rep.add_defect(kind="identity_not_identity", index=i)
        for a, b in product(range(G.n), repeat=2):
            if r[a] * r[b] != r[G.mul(a, b)]:
                rep.add_defect(kind="not_a_representation", index=i, elements=[a, b])
                break
    for (i, j), M in B.g.items():
        if M.shape != (B.dim(i), B.dim(j)):
            raise ValueError(f"g{(i, j)} has shape {M.shape}, expected {(B.dim(i), B.dim(j))}")
        if M.rank() != M.rows or M.rows != M.cols:
            rep.add_defect(kind="not_invertible", simplex=[i, j])
        h = S.h[(i, j)]
        for x in G.generators():
            if M * B.reps[j][x] != B.reps[i][h[x]] * M:
                rep.add_defect(kind="not_equivariant", simplex=[i, j], element=x)
    for (i, j, k) in S.nerve.triples:
        if B.g[(i, j)] * B.g[(j, k)] != B.reps[i][S.gamma[(i, j, k)]] * B.g[(i, k)]:
            rep.add_defect(kind="cocycle", simplex=[i, j, k])
    return rep


def transport_bundle(B, t, phi, new_reps=None):
    """Bundle over ``apply_iso(sheaf, t)`` with ``g'_ij phi_j = mu_ij . (phi_i g_ij)``.

    ``phi[i]`` must be invertible.  Without ``new_reps`` the target action
    is ``rho'_i(x) = phi_i rho_i(psi_i^{-1} x) phi_i^{-1}``, which makes
    each ``phi_i`` equivariant along ``psi_i``.
    """
    S, G = B.sheaf, B.sheaf.group
    S2 = apply_iso(S, t)
    phi = {i: _mat(m) for i, m in phi.items()}
    if new_reps is None:
        new_reps = {}
        for i in S.nerve.index:
            pinv = G.aut_inverse(t.psi[i])
            Pi = phi[i].inv()
            new_reps[i] = {x: phi[i] * B.reps[i][pinv[x]] * Pi for x in range(G.n)}
    else:
        new_reps = {i: {x: _mat(m) for x, m in r.items()} for i, r in new_reps.items()}
        for i in S.nerve.index:
            for x in range(G.n):
                if phi[i] * B.reps[i][x] != new_reps[i][t.psi[i][x]] * phi[i]:
                    raise ValueError(f"phi[{i}] is not equivariant along psi[{i}]")
    g2 = {(i, j): new_reps[i][t.mu[(i, j)]] * phi[i] * M * phi[j].inv() for (i, j), M in B.g.items()}
    return StackBundle(S2, new_reps, g2)


def _fixed_basis(rep, G):
    d = rep[G.identity].shape[0]
    stacked = sympy.Matrix.vstack(*[rep[x] - sympy.eye(d) for x in G.generators()]) if G.n > 1 else sympy.zeros(1, d)
    return stacked.nullspace()


def fixed_subbundle(B):
    """Invariant subspaces ``F_i^G`` glued by the restricted ``g_ij``.

    Returns ``(bases, g_fixed, report)``; the report checks the untwisted
    cocycle identity ``g_ij g_jk = g_ik`` on the restrictions.
    """
    S, G = B.sheaf, B.sheaf.group
    bases = {}
    for i in S.nerve.index:
        vecs = _fixed_basis(B.reps[i], G)
        bases[i] = sympy.Matrix.hstack(*vecs) if vecs else sympy.zeros(B.dim(i), 0)
    gf = {}
    for (i, j), M in B.g.items():
        Bi, Bj = bases[i], bases[j]
        if Bj.cols == 0 or Bi.cols == 0:
            gf[(i, j)] = sympy.zeros(Bi.cols, Bj.cols)
            continue
        img = M * Bj
        # coordinates of the image in the basis of F_i^G
        sol = (Bi.T * Bi).inv() * Bi.T * img
        if Bi * sol != img:
            raise AssertionError(f"g{(i, j)} does not preserve invariants")
        gf[(i, j)] = sol
    rep = Report("fixed_subbundle", "g^G_ij g^G_jk = g^G_ik")
    for (i, j, k) in S.nerve.triples:
        if gf[(i, j)] * gf[(j, k)] != gf[(i, k)]:
            rep.add_defect(simplex=[i, j, k])
    rep.stats = {"dims": {str(i): bases[i].cols for i in sorted(bases)}}
    return bases, gf, rep


def fixed_dim(reps):
    """Dimension of the invariant subspace: rank of the averaging projector over Q."""
    mats = [_mat(m) for m in (reps.values() if isinstance(reps, dict) else reps)]
    total = mats[0] * 0
    for m in mats:
        total += m
    return (total / len(mats)).rank()


# -- deriving gamma from actions -------------------------------------------------


def derive_gamma_from_actions(G, nerve, actions, phi, h):
    """Solve ``phi_ij . phi_jk = gamma_ijk . phi_ik`` for every triple.

    ``actions[i][x][y]`` is the action of ``x`` on point ``y`` of ``Y_i``;
    ``phi[(i, j)]`` maps points of ``Y_j`` into ``Y_i``; ``h[(i, j)]`` is an
    automorphism.  Returns the resulting :class:`GroupCatSheaf`.
    """
    free = {}
    for i in nerve.index:
        act = actions[i]
        npts = len(act[G.identity])
        for x in range(G.n):
            if sorted(act[x]) != list(range(npts)):
                raise ValueError(f"action of {x} on Y_{i} is not a permutation")
            for y in range(G.n):
                comp = [act[x][act[y][p]] for p in range(npts)]
                if comp != list(act[G.mul(x, y)]):
                    raise ValueError(f"Y_{i} does not carry an action")
        pts = [p for p in range(npts) if all(act[x][p] != p for x in range(G.n) if x != G.identity)]
        if not pts:
            raise ValueError(f"Y_{i} has no point with trivial isotropy")
        free[i] = pts[0]
    for (i, j), f in phi.items():
        if len(set(f)) != len(f):
            raise ValueError(f"phi{(i, j)} is not injective")
        for x in range(G.n):
            for y in range(len(f)):
                if f[actions[j][x][y]] != actions[i][h[(i, j)][x]][f[y]]:
                    raise ValueError(f"phi{(i, j)} is not equivariant along h{(i, j)}")
    gamma = {}
    for (i, j, k) in nerve.triples:
        y = free[k]
        target = phi[(i, j)][phi[(j, k)][y]]
        base = phi[(i, k)][y]
        cands = [x for x in range(G.n) if actions[i][x][base] == target]
        if len(cands) != 1:
            raise ValueError(f"no group element relates the maps on {(i, j, k)}")
        x = cands[0]
        for y2 in range(len(actions[k][G.identity])):
            if phi[(i, j)][phi[(j, k)][y2]] != actions[i][x][phi[(i, k)][y2]]:
                raise ValueError(f"the maps on {(i, j, k)} differ by more than one group element")
        gamma[(i, j, k)] = x
    return GroupCatSheaf(G, nerve, dict(h), gamma)
