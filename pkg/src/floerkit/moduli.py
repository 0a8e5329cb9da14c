"""Dimension bookkeeping for bordered genus-0 stable maps with cyclic symmetry.

A :class:`CombType` is the dual tree of a stable map: disc and sphere
components joined by nodes, rooted at the disc carrying the output mark
``z0``.  A :class:`SymmetryData` records, per sphere, the order ``m`` of
the cyclic isotropy group, what sits at its second fixed point ``q`` and
how the remaining children are grouped into orbits of size ``m``.

Two independent routes compute the dimension of the symmetric stratum:
:func:`equivariant_dim_sides` evaluates the invariant index plus the equivariant
deformation count on the original tree, and the reduced-model route
quotients every sphere and adds marks at free fixed points.
"""

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from itertools import chain

__all__ = [
    "Vertex", "CombType", "SphereSymmetry", "SymmetryData", "Bounds",
    "virtual_dim", "top_virtual_dim", "equivariant_index", "reduced_model", "marked_reduced_model",
    "equivariant_dim_sides", "dim_gap", "spherically_positive", "gap_report", "enumerate_types",
    "sweep", "multiple_cover_family", "single_disc",
]

Q_KINDS = ("none", "node", "mark", "free")


@dataclass
class Vertex:
    """One component.  ``parent`` is None only for the root disc."""

    kind: str
    parent: int | None = None
    bmarks: int = 0
    imarks: int = 0
    mu: int = 0
    c1: int = 0
    omega: int = 0
    nonconstant: bool = True


@dataclass
class CombType:
    """Dual tree of a stable map.

    ``n`` is half the real dimension of the target.  ``bmarks`` counts
    boundary marks other than ``z0``; ``deg_sum`` is the total codimension
    of the input chains.
    """

    n: int
    vertices: list
    deg_sum: int = 0
    _children: list = field(default=None, init=False, repr=False, compare=False)
    _special: list = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = [v if isinstance(v, Vertex) else Vertex(**v) for v in self.vertices]
        verts = self.vertices
        self._children = [[] for _ in verts]
        # per vertex: (boundary specials, interior specials)
        special = [[v.bmarks + 1 if v.kind == "disc" else 0, v.imarks + (v.kind == "sphere")] for v in verts]
        for i, v in enumerate(verts):
            if v.parent is not None:
                if not 0 <= v.parent < len(verts):
                    raise ValueError(f"vertex {i}: parent {v.parent} out of range")
                self._children[v.parent].append(i)
                special[v.parent][0 if v.kind == "disc" else 1] += 1
        self._special = special

    def children(self, i):
        return self._children[i]

    def discs(self):
        return [i for i, v in enumerate(self.vertices) if v.kind == "disc"]

    def spheres(self):
        return [i for i, v in enumerate(self.vertices) if v.kind == "sphere"]

    def boundary_specials(self, i):
        """Boundary marks and boundary nodes of a disc, including z0 or the parent node."""
        return self._special[i][0]

    def interior_specials(self, i):
        """Interior marks and interior nodes on a component."""
        return self._special[i][1]

    def two_k(self, i):
        """Twice the weighted special-point count: 2 per interior, 1 per boundary point."""
        b, n = self._special[i]
        return 2 * n + b

    def validate(self, stable=True):
        """Raise ValueError unless this is a genus-0 bordered tree; optionally check stability."""
        if not self.vertices:
            raise ValueError("empty type")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        root = self.vertices[0]
        if root.kind != "disc" or root.parent is not None:
            raise ValueError("vertex 0 must be the root disc")
        for i, v in enumerate(self.vertices):
            if v.kind not in ("disc", "sphere"):
                raise ValueError(f"vertex {i}: unknown kind {v.kind!r}")
            if i and (v.parent is None or v.parent >= i):
                raise ValueError(f"vertex {i}: parents must precede children")
            if v.bmarks < 0 or v.imarks < 0 or v.omega < 0:
                raise ValueError(f"vertex {i}: negative count or energy")
            if v.kind == "disc":
                if v.parent is not None and self.vertices[v.parent].kind != "disc":
                    raise ValueError(f"vertex {i}: a disc cannot hang off a sphere")
                if v.c1:
                    raise ValueError(f"vertex {i}: discs carry a Maslov index, not c1")
                if v.omega == 0:
                    if v.mu:
                        raise ValueError(f"vertex {i}: constant disc with nonzero Maslov index")
                    if stable and self.two_k(i) < 3:
                        raise ValueError(f"vertex {i}: unstable constant disc")
            else:
                if v.bmarks or v.mu:
                    raise ValueError(f"vertex {i}: spheres carry no boundary marks or Maslov index")
                if not v.nonconstant:
                    if v.c1 or v.omega:
                        raise ValueError(f"vertex {i}: constant sphere with nonzero c1 or energy")
                    if stable and self.interior_specials(i) < 3:
                        raise ValueError(f"vertex {i}: constant sphere with fewer than 3 special points")
                elif v.omega <= 0:
                    raise ValueError(f"vertex {i}: nonconstant sphere needs positive energy")
        return self

    def totals(self):
        """Maslov total, interior marks, boundary marks and energy of the glued class."""
        mu = sum(v.mu if v.kind == "disc" else 2 * v.c1 for v in self.vertices)
        return {
            "mu": mu,
            "interior_marks": sum(v.imarks for v in self.vertices),
            "boundary_marks": sum(v.bmarks for v in self.vertices),
            "omega": sum(v.omega for v in self.vertices),
        }

    def to_json(self):
        verts = []
        for v in self.vertices:
            d = asdict(v)
            if v.kind == "disc":
                del d["c1"], d["nonconstant"]
            else:
                del d["bmarks"], d["mu"]
            verts.append(d)
        return {"n": self.n, "deg_sum": self.deg_sum, "vertices": verts}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["n"], [Vertex(**v) for v in obj["vertices"]], obj.get("deg_sum", 0))


def single_disc(n, mu, bmarks=0, imarks=0, deg_sum=0, omega=None):
    """A smooth disc type, the top stratum."""
    if omega is None:
        omega = 1 if mu else 0
    return CombType(n, [Vertex("disc", None, bmarks, imarks, mu, 0, omega)], deg_sum)


def virtual_dim(t, check=True):
    """Real dimension of the stratum of type ``t``.

    Sum over components of ``eps n + c + 2k - s`` minus ``2n`` per interior
    node, ``n`` per boundary node and the input codimensions.
    """
    if check:
        t.validate()
    total = 0
    for i, v in enumerate(t.vertices):
        if v.kind == "disc":
            total += t.n + v.mu + t.two_k(i) - 3
        else:
            total += 2 * t.n + 2 * v.c1 + t.two_k(i) - 6
    sphere_nodes = len(t.spheres())
    disc_nodes = len(t.discs()) - 1
    return total - 2 * t.n * sphere_nodes - t.n * disc_nodes - t.deg_sum


def top_virtual_dim(t):
    """Dimension of the smooth-disc stratum with the same totals as ``t``."""
    tot = t.totals()
    return t.n + tot["mu"] + 2 * tot["interior_marks"] + tot["boundary_marks"] - 2 - t.deg_sum


def equivariant_index(m, c1, n):
    """Decompose the index of an ``m``-fold cyclic cover of a sphere ``u``.

    ``c1`` is evaluated on ``u``.  Returns ``(reg_mult, triv_extra)`` with
    the index equal to ``reg_mult`` copies of the regular representation of
    Z/m plus ``triv_extra`` copies of the trivial one.  The real dimension
    is ``triv_extra + m reg_mult`` and the invariant part has dimension
    ``reg_mult + triv_extra``.
    """
    if m < 1:
        raise ValueError("cover order must be at least 1")
    return 2 * c1, 2 * n


# -- symmetry data ----------------------------------------------------------


@dataclass
class SphereSymmetry:
    """Cyclic isotropy of one sphere.

    ``q`` is ``'none'`` when ``m = 1``; otherwise ``'node'`` (a child sits at
    the second fixed point, index ``q_child``), ``'mark'`` or ``'free'``.
    ``orbits`` partitions the remaining children into groups of size ``m``.
    """

    m: int = 1
    q: str = "none"
    q_child: int | None = None
    orbits: list = field(default_factory=list)

    def to_json(self):
        return {"m": self.m, "q": self.q, "q_child": self.q_child, "orbits": [list(o) for o in self.orbits]}


@dataclass
class SymmetryData:
    """Per-sphere cyclic isotropy, keyed by vertex index."""

    spheres: dict

    @classmethod
    def trivial(cls, t):
        return cls({i: SphereSymmetry(1, "none", None, [[c] for c in t.children(i)]) for i in t.spheres()})

    def of(self, i):
        return self.spheres[i]

    def is_trivial(self):
        return all(s.m == 1 for s in self.spheres.values())

    def to_json(self):
        return {str(i): s.to_json() for i, s in sorted(self.spheres.items())}

    @classmethod
    def from_json(cls, obj):
        return cls({int(i): SphereSymmetry(d["m"], d["q"], d.get("q_child"), [list(o) for o in d.get("orbits", [])])
                    for i, d in obj.items()})


def subtree_key(t, s, i):
    """Canonical string of the subtree at ``i`` with its symmetry data."""
    v = t.vertices[i]
    kids = t.children(i)
    if v.kind == "disc":
        inner = ",".join(sorted(subtree_key(t, s, c) for c in kids))
        return f"D({v.bmarks},{v.imarks},{v.mu},{v.omega}|{inner})"
    sym = s.of(i)
    qk = subtree_key(t, s, sym.q_child) if sym.q == "node" else ""
    orbit_keys = sorted(subtree_key(t, s, o[0]) for o in sym.orbits)
    return f"S({int(v.nonconstant)},{v.c1},{v.omega},{v.imarks},{sym.m},{sym.q}|{qk}|{','.join(orbit_keys)})"


def check_symmetry(t, s):
    """Raise ValueError unless ``s`` is a consistent symmetry for ``t``."""
    t.validate()
    if set(s.spheres) != set(t.spheres()):
        raise ValueError("symmetry data must cover exactly the sphere vertices")
    for i in t.spheres():
        v, sym = t.vertices[i], s.of(i)
        kids = t.children(i)
        if sym.m < 1:
            raise ValueError(f"sphere {i}: order must be at least 1")
        if sym.q not in Q_KINDS:
            raise ValueError(f"sphere {i}: unknown fixed-point kind {sym.q!r}")
        if sym.m == 1:
            if sym.q != "none" or sym.q_child is not None:
                raise ValueError(f"sphere {i}: trivial isotropy has no distinguished fixed point")
        else:
            if sym.q == "none":
                raise ValueError(f"sphere {i}: nontrivial isotropy needs a second fixed point kind")
            # marks are fixed by automorphisms, so at most one, sitting at q
            if v.imarks != (1 if sym.q == "mark" else 0):
                raise ValueError(f"sphere {i}: marks must sit at the second fixed point")
            if v.nonconstant and (v.c1 % sym.m or v.omega % sym.m):
                raise ValueError(f"sphere {i}: c1 and energy must be divisible by the cover order {sym.m}")
        if (sym.q == "node") != (sym.q_child is not None):
            raise ValueError(f"sphere {i}: q_child must be given exactly when q is a node")
        if sym.q_child is not None and sym.q_child not in kids:
            raise ValueError(f"sphere {i}: q_child is not a child")
        rest = sorted(c for c in kids if c != sym.q_child)
        listed = sorted(chain.from_iterable(sym.orbits))
        if listed != rest:
            raise ValueError(f"sphere {i}: orbits must partition the non-fixed children")
        for orb in sym.orbits:
            if len(orb) != sym.m:
                raise ValueError(f"sphere {i}: orbit {orb} has size {len(orb)}, expected {sym.m}")
            keys = {subtree_key(t, s, c) for c in orb}
            if len(keys) != 1:
                raise ValueError(f"sphere {i}: orbit {orb} mixes non-isomorphic subtrees")
    return s


def orbit_representatives(t, s):
    """Vertices chosen as one representative per orbit, root first, in tree order."""
    reps = [0]
    stack = [0]
    while stack:
        i = stack.pop()
        if t.vertices[i].kind == "disc":
            nxt = list(t.children(i))
        else:
            sym = s.of(i)
            nxt = ([sym.q_child] if sym.q_child is not None else []) + [o[0] for o in sym.orbits]
        for c in sorted(nxt):
            reps.append(c)
            stack.append(c)
    return sorted(reps)


def _reduce(t, s, marked, check=True):
    if check:
        check_symmetry(t, s)
    reps = orbit_representatives(t, s)
    new = {old: k for k, old in enumerate(reps)}
    verts = []
    for old in reps:
        v = t.vertices[old]
        parent = None if v.parent is None else new[v.parent]
        if v.kind == "disc":
            verts.append(Vertex("disc", parent, v.bmarks, v.imarks, v.mu, 0, v.omega))
        else:
            sym = s.of(old)
            imarks = v.imarks + (1 if marked and sym.q == "free" else 0)
            verts.append(Vertex("sphere", parent, 0, imarks, 0, v.c1 // sym.m, v.omega // sym.m, v.nonconstant))
    return CombType(t.n, verts, t.deg_sum), reps


def reduced_model(t, s):
    """Quotient of every sphere by its isotropy; may be unstable."""
    return _reduce(t, s, False)[0]


def marked_reduced_model(t, s):
    """Reduced model with one extra interior mark per orbit of free fixed points."""
    return _reduce(t, s, True)[0]


def free_fixed_orbits(t, s):
    """Number of orbits of free fixed points: one per representative sphere with q free."""
    return sum(1 for i in orbit_representatives(t, s) if t.vertices[i].kind == "sphere" and s.of(i).q == "free")


# -- the two sides of the equivariant dimension identity ---------------------


def _disc_rho(t, i):
    # dimension of the disc configuration space, or minus its automorphisms
    return t.boundary_specials(i) + 2 * t.interior_specials(i) - 3


def _sphere_rho(specials_besides_o):
    """Configurations of a sphere with ``n`` points besides ``o``, minus automorphisms."""
    n = specials_besides_o
    if n == 0:
        return -4   # affine maps fixing o
    if n == 1:
        return -2   # C* fixing two points
    return 2 * (n + 1) - 6


def _sphere_rho_equivariant(t, s, i):
    """Equivariant deformations of a sphere minus its equivariant automorphisms."""
    sym = s.of(i)
    n_a = t.interior_specials(i) - 1
    if sym.m == 1:
        return _sphere_rho(n_a)
    if n_a + 1 < 3:
        return -2   # automorphisms commuting with the rotation fixing o: C*
    # each moving orbit contributes one complex parameter, modulo C*
    moving = len(sym.orbits)
    return 2 * moving - 2


def equivariant_dim_sides(t, s, check=True):
    """Return ``(lhs, rhs)`` of the equivariant dimension identity.

    ``lhs``: invariant index over orbit representatives plus equivariant
    deformations of the components.  ``rhs``: index and deformation count
    of the reduced model plus two per orbit of free fixed points.
    """
    if check:
        check_symmetry(t, s)
    n = t.n
    reps = orbit_representatives(t, s)
    index = -t.deg_sum
    rho = 0
    sphere_orbits = 0
    disc_nodes = 0
    for i in reps:
        v = t.vertices[i]
        if v.kind == "disc":
            index += n + v.mu
            rho += _disc_rho(t, i)
            disc_nodes += v.parent is not None
        else:
            m = s.of(i).m
            reg, triv = equivariant_index(m, v.c1 // m, n)
            index += reg + triv
            rho += _sphere_rho_equivariant(t, s, i)
            sphere_orbits += 1
    lhs = index - 2 * n * sphere_orbits - n * disc_nodes + rho

    r = _reduce(t, s, False, check=False)[0]
    r_index = -r.deg_sum
    r_rho = 0
    for i, v in enumerate(r.vertices):
        if v.kind == "disc":
            r_index += n + v.mu
            r_rho += _disc_rho(r, i)
        else:
            r_index += 2 * n + 2 * v.c1
            r_rho += _sphere_rho(r.interior_specials(i) - 1)
    r_index -= 2 * n * len(r.spheres()) + n * (len(r.discs()) - 1)
    free = sum(1 for i in reps if t.vertices[i].kind == "sphere" and s.of(i).q == "free")
    rhs = r_index + r_rho + 2 * free
    return lhs, rhs


def spherically_positive(t):
    """Every nonconstant sphere has c1 >= 1."""
    return all(v.c1 >= 1 for v in t.vertices if v.kind == "sphere" and v.nonconstant)


def dim_gap(t, s):
    """Top-stratum dimension minus the marked reduced stratum dimension."""
    return top_virtual_dim(t) - virtual_dim(marked_reduced_model(t, s), check=False)


def gap_report(t, s, check=True, _reduced=None):
    """Gap plus the per-sphere inequalities the gap argument relies on.

    ``sphere_floor`` lists spheres violating ``c + 2k - 6 >= -2``;
    ``quotient_excess`` lists representatives whose quotient term exceeds the
    term of the covering sphere.  Both are expected empty under spherical
    positivity.  ``violation`` is set when the symmetry is nontrivial and
    the gap is below 2.
    """
    marked, reps = _reduced or _reduce(t, s, True, check)
    floor_fail = []
    for i in t.spheres():
        v = t.vertices[i]
        term = 2 * v.c1 + t.two_k(i) - 6
        if term < -2:
            floor_fail.append({"vertex": i, "term": term})
    excess = []
    for b, a in enumerate(reps):
        if t.vertices[a].kind != "sphere":
            continue
        above = 2 * t.vertices[a].c1 + t.two_k(a) - 6
        below = 2 * marked.vertices[b].c1 + marked.two_k(b) - 6
        if below > above:
            excess.append({"vertex": a, "reduced": below, "cover": above})
    gap = top_virtual_dim(t) - virtual_dim(marked, check=False)
    positive = spherically_positive(t)
    nontrivial = not s.is_trivial()
    return {
        "gap": gap,
        "spherically_positive": positive,
        "nontrivial": nontrivial,
        "sphere_floor": floor_fail,
        "quotient_excess": excess,
        "violation": nontrivial and gap < 2,
    }


# -- enumeration -------------------------------------------------------------


@dataclass(frozen=True)
class Bounds:
    """Search box for :func:`enumerate_types`.

    ``max_marks`` bounds the total number of marks other than z0 and
    ``max_c1`` bounds the sum of ``|c1|`` over all spheres.
    """

    max_vertices: int = 2
    max_marks: int = 2
    max_c1: int = 2
    max_m: int = 3
    n: int = 2
    maslov: tuple = (0, 2)
    deg_sum: int = 0

    def to_json(self):
        d = asdict(self)
        d["maslov"] = list(self.maslov)
        return d


@dataclass(frozen=True)
class _Tree:
    """Recursive type used only during enumeration."""

    key: str
    size: int
    marks: int
    kind: str
    chern: int           # sum of |c1| over spheres in the subtree
    label: tuple         # disc: (bmarks, imarks, mu, omega); sphere: (nonconst, c1, omega, imarks)
    m: int = 1
    q: str = "none"
    q_child: object = None
    kids: tuple = ()     # children not at q, sorted by key


def _multisets(pool, size, marks, chern, start=0):
    """Sorted multisets from ``pool`` with total size ``size`` and mark and |c1| budgets."""
    if size == 0:
        yield ()
        return
    for j in range(start, len(pool)):
        tr = pool[j]
        if tr.size > size or tr.marks > marks or tr.chern > chern:
            continue
        for rest in _multisets(pool, size - tr.size, marks - tr.marks, chern - tr.chern, j):
            yield (tr,) + rest


def _sphere_key(nc, c1, om, im, m, q, qc, kids):
    qk = qc.key if qc is not None else ""
    return f"S({int(nc)},{c1},{om},{im},{m},{q}|{qk}|{','.join(k.key for k in kids)})"


def _sphere_trees(b):
    """All sphere subtrees with at most max_vertices - 1 vertices, grouped by size."""
    by_size = {}
    for size in range(1, b.max_vertices):
        smaller = sorted(chain.from_iterable(by_size.get(k, []) for k in range(1, size)), key=lambda x: x.key)
        out = []
        for kids in _multisets(smaller, size - 1, b.max_marks, b.max_c1):
            kid_marks = sum(k.marks for k in kids)
            room = b.max_c1 - sum(k.chern for k in kids)
            for im in range(b.max_marks - kid_marks + 1):
                labels = [(False, 0)] if 1 + im + len(kids) >= 3 else []
                labels += [(True, c) for c in range(-room, room + 1)]
                for nc, c1 in labels:
                    for m in range(1, b.max_m + 1):
                        if nc and c1 % m:
                            continue
                        om = m if nc else 0
                        for q, qc, rest in _sphere_layouts(kids, im, m):
                            key = _sphere_key(nc, c1, om, im, m, q, qc, rest)
                            chern = b.max_c1 - room + abs(c1)
                            out.append(_Tree(key, size, kid_marks + im, "sphere", chern, (nc, c1, om, im), m, q, qc, rest))
        by_size[size] = sorted(out, key=lambda x: x.key)
    return by_size


def _sphere_layouts(kids, im, m):
    """Ways to place ``kids`` on a sphere with isotropy of order ``m``."""
    if m == 1:
        yield "none", None, kids
        return
    if im > 1:
        return
    counts = Counter(k.key for k in kids)

    def orbit_ok(cnt):
        return all(c % m == 0 for c in cnt.values())

    if im == 1:
        if orbit_ok(counts):
            yield "mark", None, kids
        return
    if orbit_ok(counts):
        yield "free", None, kids
    seen = set()
    for j, k in enumerate(kids):
        if k.key in seen:
            continue
        seen.add(k.key)
        cnt = counts.copy()
        cnt[k.key] -= 1
        if orbit_ok(+cnt):
            yield "node", k, kids[:j] + kids[j + 1:]


def _disc_level(b, size, pool):
    """Disc subtrees with exactly ``size`` vertices, children drawn from ``pool``."""
    for kids in _multisets(pool, size - 1, b.max_marks, b.max_c1):
        kid_marks = sum(k.marks for k in kids)
        chern = sum(k.chern for k in kids)
        n_disc = sum(1 for k in kids if k.kind == "disc")
        n_sph = len(kids) - n_disc
        inner = ",".join(k.key for k in kids)
        for bm in range(b.max_marks - kid_marks + 1):
            for im in range(b.max_marks - kid_marks - bm + 1):
                labels = []
                if (bm + n_disc + 1) + 2 * (im + n_sph) >= 3:
                    labels.append((0, 0))
                labels += [(mu, 1) for mu in b.maslov]
                for mu, om in labels:
                    key = f"D({bm},{im},{mu},{om}|{inner})"
                    yield _Tree(key, size, kid_marks + bm + im, "disc", chern, (bm, im, mu, om), kids=kids)


def _disc_trees(b, spheres):
    """Yield disc trees by increasing size; only sizes usable as children are kept."""
    by_size = {}
    sphere_pool = list(chain.from_iterable(spheres.values()))
    for size in range(1, b.max_vertices + 1):
        disc_pool = chain.from_iterable(by_size.get(k, []) for k in range(1, size))
        pool = sorted(chain(disc_pool, (s for s in sphere_pool if s.size < size)), key=lambda x: x.key)
        if size < b.max_vertices:
            by_size[size] = sorted(_disc_level(b, size, pool), key=lambda x: x.key)
            yield from by_size[size]
        else:
            yield from _disc_level(b, size, pool)


def _flatten(tree, b):
    verts, syms = [], {}

    def visit(tr, parent):
        i = len(verts)
        if tr.kind == "disc":
            bm, im, mu, om = tr.label
            verts.append(Vertex("disc", parent, bm, im, mu, 0, om))
            for k in tr.kids:
                visit(k, i)
            return i
        nc, c1, om, im = tr.label
        verts.append(Vertex("sphere", parent, 0, im, 0, c1, om, nc))
        qc = visit(tr.q_child, i) if tr.q_child is not None else None
        ids = [visit(k, i) for k in tr.kids]
        if tr.m == 1:
            orbits = [[c] for c in ids]
        else:
            orbits = [ids[j:j + tr.m] for j in range(0, len(ids), tr.m)]
        syms[i] = SphereSymmetry(tr.m, tr.q, qc, orbits)
        return i

    visit(tree, None)
    return CombType(b.n, verts, b.deg_sum), SymmetryData(syms)


def enumerate_types(bounds):
    """Yield every ``(CombType, SymmetryData)`` in the box, once per isomorphism class.

    Children are unordered: boundary marks and nodes on a disc are
    counted, not cyclically ordered.  The order is deterministic: by
    vertex count, then by canonical key below the largest size.
    """
    for tr in _disc_trees(bounds, _sphere_trees(bounds)):
        yield _flatten(tr, bounds)


def _batched(it, size):
    batch = []
    for x in it:
        batch.append(x)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def _check_batch(pairs):
    return [_check_instance(p) for p in pairs]


def _check_instance(pair):
    t, s = pair
    check_symmetry(t, s)
    lhs, rhs = equivariant_dim_sides(t, s, check=False)
    marked, reps = _reduce(t, s, True, check=False)
    rep = gap_report(t, s, check=False, _reduced=(marked, reps))
    added = sum(v.imarks for v in marked.vertices) - sum(t.vertices[i].imarks for i in reps)
    free = sum(1 for i in reps if t.vertices[i].kind == "sphere" and s.of(i).q == "free")
    return {
        "lhs": lhs, "rhs": rhs, "marked_dim": virtual_dim(marked, check=False),
        "added_marks": added, "free_orbits": free, **rep,
    }


def sweep(bounds, workers=1, keep=20):
    """Check the dimension identity and the gap over every enumerated instance.

    Returns a JSON-ready summary.  ``keep`` caps the number of example
    instances stored per failure category.
    """
    pairs = enumerate_types(bounds)
    if workers > 1:
        ex = ProcessPoolExecutor(max_workers=workers)
        batches = _batched(pairs, 2048)
        # keep a bounded window of batches in flight; order is preserved
        window = []

        def results_iter():
            for batch in batches:
                window.append((batch, ex.submit(_check_batch, batch)))
                if len(window) >= 2 * workers:
                    b0, fut = window.pop(0)
                    yield from zip(b0, fut.result())
            while window:
                b0, fut = window.pop(0)
                yield from zip(b0, fut.result())
        stream = results_iter()
    else:
        ex = None
        stream = ((p, _check_instance(p)) for p in pairs)
    summary = {
        "bounds": bounds.to_json(),
        "instances": 0,
        "nontrivial": 0,
        "positive_nontrivial": 0,
        "identity_failures": [],
        "marked_dim_failures": [],
        "mark_count_failures": [],
        "positive_gap_violations": [],
        "audit_failures": [],
        "flagged": [],
        "flagged_count": 0,
        "min_positive_gap": None,
    }

    counts = Counter()

    def note(cat, t, s, extra):
        counts[cat] += 1
        if len(summary[cat]) < keep:
            summary[cat].append({"type": t.to_json(), "symmetry": s.to_json(), **extra})

    for (t, s), r in stream:
        summary["instances"] += 1
        if r["lhs"] != r["rhs"]:
            note("identity_failures", t, s, {"lhs": r["lhs"], "rhs": r["rhs"]})
        if r["rhs"] != r["marked_dim"]:
            note("marked_dim_failures", t, s, {"rhs": r["rhs"], "marked_dim": r["marked_dim"]})
        if r["added_marks"] != r["free_orbits"]:
            note("mark_count_failures", t, s, {"added": r["added_marks"], "free_orbits": r["free_orbits"]})
        if not r["nontrivial"]:
            continue
        summary["nontrivial"] += 1
        if r["spherically_positive"]:
            summary["positive_nontrivial"] += 1
            g = summary["min_positive_gap"]
            summary["min_positive_gap"] = r["gap"] if g is None else min(g, r["gap"])
            if r["gap"] < 2:
                note("positive_gap_violations", t, s, {"gap": r["gap"]})
            if r["sphere_floor"] or r["quotient_excess"]:
                note("audit_failures", t, s, {"sphere_floor": r["sphere_floor"], "quotient_excess": r["quotient_excess"]})
        elif r["violation"]:
            note("flagged", t, s, {"gap": r["gap"]})
            if all(v.c1 >= 0 for v in t.vertices if v.kind == "sphere"):
                counts["flagged_zero_c1"] += 1
    if ex is not None:
        ex.shutdown()
    summary["flagged_count"] = counts.pop("flagged", 0)
    summary["flagged_zero_c1"] = counts.pop("flagged_zero_c1", 0)
    summary["failure_counts"] = dict(sorted(counts.items()))
    summary["ok"] = not any(summary[k] for k in (
        "identity_failures", "marked_dim_failures", "mark_count_failures", "positive_gap_violations", "audit_failures"))
    return summary


def multiple_cover_family(n=2, orders=(2, 3, 4), mu=0, bmarks=1):
    """Disc plus an m-fold covered sphere with c1 = 0 and a free fixed point.

    Not spherically positive; the marked reduced stratum has the same
    dimension as the top stratum, so the gap is 0.
    """
    out = []
    for m in orders:
        t = CombType(n, [
            Vertex("disc", None, bmarks, 0, mu, 0, 1),
            Vertex("sphere", 0, 0, 0, 0, 0, m, True),
        ])
        s = SymmetryData({1: SphereSymmetry(m, "free", None, [])})
        out.append((t, s))
    return out
