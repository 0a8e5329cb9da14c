"""Named inputs in their JSON form, shared by the CLI and the demos.

Every entry is a zero-argument function returning a JSON-ready dict that
the matching CLI subcommand accepts as its input file.
"""

import random
from fractions import Fraction

import sympy

from .coeff import QQ, GF
from .fixtures import (
    exact_curvature_algebra, fixture_suite, heisenberg_algebra, m3_algebra,
    obstructed_algebra, pq_algebra, torus_algebra,
)
from .moduli import CombType, SymmetryData, Vertex, multiple_cover_family, single_disc
from .stacks import (
    FiniteGroup, GroupCatSheaf, coboundary_sheaf, octahedron_nerve, regular_rep, wrapped_sheaf,
)

__all__ = ["CATALOG", "get", "names"]


def _alg(A):
    return {"algebra": A.to_json()}


def _suite():
    return {"algebras": {name: A.to_json() for name, A in fixture_suite()}}


def _qq_suite():
    return {"algebras": {name: A.to_json() for name, A in fixture_suite(rings=(QQ,))}}


def _nov(c, lam, mu2=0):
    return [{"c": str(c), "lam": str(Fraction(lam)), "mu2": mu2}]


def _complex(gens, entries, E=2, ring=None):
    ring = ring or QQ
    return {"complex": {
        "ring": ring.to_json(),
        "generators": [{"name": n, "degree": d} for n, d in gens],
        "differential": [{"from": s, "to": t, "value": v} for s, t, v in entries],
        "E": str(E),
    }}


def _hf_torsion():
    out = _complex([("x", 0), ("y", 1)], [("x", "y", _nov(1, "7/10"))])
    out["thresholds"] = ["1/10", "1/2", "7/10", "4/5", "3/2"]
    return out


def _hf_mixed():
    gens = [("a", 0), ("b", 0), ("c", 1), ("d", 1), ("e", 1), ("f", 2)]
    entries = [("a", "c", _nov(1, 0)), ("b", "d", _nov(1, "1/4")), ("e", "f", _nov(2, "5/4"))]
    out = _complex(gens, entries, E=2)
    out["thresholds"] = ["1/8", "1/4", "1/2", "1", "5/4", "2"]
    return out


def _spectral():
    out = _hf_mixed()
    out["step"] = "1/4"
    out["r_max"] = 8
    return out


def _mc_exact():
    A = exact_curvature_algebra()
    return {"algebra": A.to_json(),
            "b": [{"gen": "d", "value": _nov(-1, "1/2", 0)}]}


def _deform_twisted():
    A = exact_curvature_algebra()
    return {"algebra": A.to_json(),
            "twist": {"rho": ["1"], "boundary": [{"beta": ["1/2", 0], "class": [1]}],
                      "b_plus": [{"gen": "d", "value": _nov(-1, "1/2", 0)}]}}


def _hom_identity():
    A = pq_algebra()
    return {"source": A.to_json(), "target": A.to_json(), "map": "identity"}


def _moduli_disc():
    return {"type": single_disc(2, 2, 2, 1).to_json()}


def _moduli_tree():
    t = CombType(2, [
        Vertex("disc", None, 1, 0, 2, 0, 1),
        Vertex("sphere", 0, 0, 1, 0, 1, 1, True),
        Vertex("disc", 0, 1, 0, 0, 0, 1),
    ])
    return {"type": t.to_json(), "symmetry": SymmetryData.trivial(t).to_json()}


def _moduli_cover():
    return {"instances": [{"type": t.to_json(), "symmetry": s.to_json()} for t, s in multiple_cover_family()]}


def _sheaf(S):
    return {"sheaf": S.to_json()}


def _wrapped(p):
    return lambda: {"sheaf": wrapped_sheaf(p).to_json()}


def _coboundary(p, seed=0):
    def build():
        G, N = FiniteGroup.cyclic(p), octahedron_nerve()
        rng = random.Random(seed)
        mu = {q: rng.randrange(p) for q in N.pairs}
        return {"sheaf": coboundary_sheaf(G, N, mu).to_json()}
    return build


def _bundle_json(reps, g):
    def mj(M):
        return [[str(x) for x in M.row(r)] for r in range(M.rows)]
    return {"reps": {str(i): {str(x): mj(m) for x, m in r.items()} for i, r in reps.items()},
            "g": [[list(p), mj(m)] for p, m in sorted(g.items())]}


def _stack_regular(p=3, seed=0):
    G, N = FiniteGroup.cyclic(p), octahedron_nerve()
    rng = random.Random(seed)
    mu = {q: rng.randrange(p) for q in N.pairs}
    S = coboundary_sheaf(G, N, mu)
    R = regular_rep(G)
    return {"sheaf": S.to_json(), "bundle": _bundle_json({i: R for i in N.index}, {q: R[mu[q]] for q in N.pairs})}


def _stack_trivial_bundle(p=3):
    S = wrapped_sheaf(p)
    G, N = S.group, S.nerve
    reps = {i: {x: sympy.eye(2) for x in range(G.n)} for i in N.index}
    return {"sheaf": S.to_json(), "bundle": _bundle_json(reps, {q: sympy.eye(2) for q in N.pairs})}


def _stack_s3(seed=0):
    """Nonabelian sheaf built from left translations of S_3."""
    G, N = FiniteGroup.symmetric(3), octahedron_nerve()
    rng = random.Random(seed)
    c = {q: rng.randrange(G.n) for q in N.pairs}
    h = {q: G.ad(c[q]) for q in N.pairs}
    gamma = {(i, j, k): G.prod(c[(i, j)], c[(j, k)], G.inv(c[(i, k)])) for (i, j, k) in N.triples}
    return {"sheaf": GroupCatSheaf(G, N, h, gamma).to_json()}


CATALOG = {
    "check-ainf": {"suite": _suite, "pq": lambda: _alg(pq_algebra()), "m3": lambda: _alg(m3_algebra()),
                   "heisenberg": lambda: _alg(heisenberg_algebra(K=3)),
                   "torus2-z5": lambda: _alg(torus_algebra(GF(5), 2, K=3))},
    "check-hom": {"identity-pq": _hom_identity},
    "check-bimodule": {"pq": lambda: _alg(pq_algebra(K=3)), "m3": lambda: _alg(m3_algebra(K=4))},
    "canonical-model": {"suite": _suite, "pq": lambda: _alg(pq_algebra()),
                        "heisenberg": lambda: _alg(heisenberg_algebra(K=3))},
    "mc-check": {"exact": _mc_exact},
    "mc-solve": {"exact": lambda: _alg(exact_curvature_algebra()),
                 "obstructed": lambda: _alg(obstructed_algebra())},
    "deform": {"exact": _mc_exact},
    "deform-twisted": {"exact": _deform_twisted},
    "hf": {"torsion": _hf_torsion, "mixed": _hf_mixed},
    "spectral": {"mixed": _spectral},
    "hochschild-check": {"suite": _qq_suite, "pq": lambda: _alg(pq_algebra(K=4)),
                         "m3": lambda: _alg(m3_algebra(K=5))},
    "p-contract": {"pq-noncyclic": lambda: _alg(pq_algebra()), "torus2": lambda: _alg(torus_algebra(QQ, 2, K=3))},
    "moduli-dim": {"disc": _moduli_disc, "tree": _moduli_tree, "multiple-cover": _moduli_cover},
    "moduli-sweep": {},
    "stack-check": {"wrapped-2": _wrapped(2), "wrapped-3": _wrapped(3), "wrapped-5": _wrapped(5),
                    "coboundary-3": _coboundary(3), "s3-translations": _stack_s3,
                    "regular-bundle": _stack_regular, "trivial-bundle": _stack_trivial_bundle},
    "cech-class": {"wrapped-2": _wrapped(2), "wrapped-3": _wrapped(3), "wrapped-5": _wrapped(5),
                   "coboundary-2": _coboundary(2), "coboundary-3": _coboundary(3), "coboundary-5": _coboundary(5)},
}


def names(command):
    return sorted(CATALOG.get(command, {}))


def get(command, name):
    table = CATALOG.get(command, {})
    if name not in table:
        raise KeyError(f"no built-in input {name!r} for {command}; choose from {', '.join(sorted(table)) or 'none'}")
    return table[name]()
