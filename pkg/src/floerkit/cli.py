"""Command-line front end: JSON inputs in, deterministic reports out.

Exit status is 0 when every check passes, 2 when a check reports defects
and 1 on input errors.
"""

import argparse
import json
import os
import random
import sys
from fractions import Fraction

from . import catalog
from .ainfty import (
    FilteredAinfAlgebra, FilteredAinfBimodule, FilteredAinfHom, bimodule_from_algebra,
    check_ainf, check_bimodule, check_hom, check_unit, fmt_label, identity_hom, m1_complex,
)
from .canonical import SplittingData, canonical_model, compare_homology, standard_splitting
from .filtered import FilteredComplex, homology_decomposition, spectral_sequence, torsion_count
from .hochschild import PContractData, check_hoch_squared, check_p_contract, classical_contract
from .mc import (
    TwistData, check_weak_mc, deform, deform_twisted, floer_complex, mc_from_json, solve_mc,
)
from .moduli import (
    Bounds, CombType, SymmetryData, equivariant_index, gap_report, equivariant_dim_sides, sweep,
    top_virtual_dim, virtual_dim,
)
from .coeff import CoeffRing, GF, QQ, ZZ
from .novikov import check_ring_axioms, fmt_energy, parse_energy
from .report import SCHEMA_VERSION, Report
from .stacks import (
    GroupCatSheaf, SheafIso, StackBundle, abelian_cech_class, apply_iso, check_bundle,
    check_group_cocycle, fixed_subbundle, random_iso,
)

__all__ = ["main", "run", "COMMANDS"]


class InputError(Exception):
    """Malformed or inconsistent input."""


def _need(obj, key, where):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    if key not in obj:
        raise InputError(f"{where}: missing field {key!r}")
    return obj[key]


# -- input helpers --------------------------------------------------------------


def _retruncate(A, E):
    """The same algebra with truncation energy lowered to ``E``."""
    if E is None:
        return A
    E = parse_energy(E)
    if E <= 0:
        raise InputError("--energy must be positive")
    if E >= A.E:
        return A
    ops = {key: v for key, v in A.ops.items() if key[1][0] <= E}
    horizon = {k: min(v, E) for k, v in A.horizon.items()} if A.horizon else None
    return A.with_ops(ops, E=E, horizon=horizon)


def _algebra(obj, where, args):
    try:
        A = FilteredAinfAlgebra.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{where}: missing or malformed field {exc}") from None
    return _retruncate(A, args.energy)


def _algebras(obj, args):
    """``{name: algebra}`` from either an ``algebra`` or an ``algebras`` field."""
    if "algebras" in obj:
        return [(name, _algebra(a, f"algebras.{name}", args)) for name, a in sorted(obj["algebras"].items())]
    return [("algebra", _algebra(_need(obj, "algebra", "input"), "algebra", args))]


def _complex(obj, args):
    if "complex" in obj:
        try:
            cx = FilteredComplex.from_json(obj["complex"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"complex: missing or malformed field {exc}") from None
        if args.energy is not None and parse_energy(args.energy) < cx.E:
            cx = FilteredComplex(cx.ring, cx.module, cx.diff, parse_energy(args.energy))
        return cx
    A = _algebra(_need(obj, "algebra", "input"), "algebra", args)
    if "b1" in obj or "b0" in obj:
        b1 = mc_from_json(A, {"b": obj.get("b1", [])})
        b0 = mc_from_json(A, {"b": obj.get("b0", [])})
        cx, rep = floer_complex(A, b1, b0)
        if not rep.ok:
            raise InputError("the deformed differential does not square to zero")
        return cx
    return m1_complex(A)


def _sheaf(obj):
    try:
        return GroupCatSheaf.from_json(_need(obj, "sheaf", "input"))
    except (KeyError, TypeError) as exc:
        raise InputError(f"sheaf: missing or malformed field {exc}") from None


def _bundle(S, obj):
    G = S.group
    reps = {}
    for i in S.nerve.index:
        table = _need(obj["reps"], str(i), "bundle.reps")
        reps[i] = {x: table[str(x)] for x in range(G.n)}
    g = {tuple(p): m for p, m in obj["g"]}
    return StackBundle(S, reps, g)


# -- commands -----------------------------------------------------------------


def _negative_control(A, max_arity):
    """Perturb one stored coefficient at a time until the relations break."""
    R = A.ring
    tried = []
    for (k, beta) in sorted(A.ops):
        for tup in sorted(A.ops[(k, beta)]):
            for o in sorted(A.ops[(k, beta)][tup]):
                ops = {key: {t: dict(outs) for t, outs in v.items()} for key, v in A.ops.items()}
                ops[(k, beta)][tup][o] = R.add(ops[(k, beta)][tup][o], R.one())
                bad = A.with_ops(ops, monoid=A.monoid)
                rep = check_ainf(bad, max_arity)
                locus = {"k": k, "beta": fmt_label(beta), "inputs": [A.names[i] for i in tup],
                         "output": A.names[o]}
                if not rep.ok:
                    out = Report("negative-control", "a perturbed coefficient breaks the relations")
                    out.stats = {"candidates_preserving_relations": len(tried), "defects": len(rep.defects)}
                    out.notes.append({"perturbed": locus, "first_defect": rep.defects[0]})
                    return out
                tried.append(locus)
                if len(tried) >= 25:
                    break
    out = Report("negative-control", "a perturbed coefficient breaks the relations")
    out.add_defect(issue="no perturbation was detected", tried=tried)
    return out


def cmd_check_ainf(obj, args):
    reports, result = [], {}
    for name, A in _algebras(obj, args):
        rep = check_ainf(A, args.max_arity)
        rep.stats["name"] = name
        reports.append(rep)
        if A.unit is not None:
            u = check_unit(A)
            u.stats["name"] = name
            reports.append(u)
        if args.negative_control:
            nc = _negative_control(A, args.max_arity)
            nc.stats["name"] = name
            reports.append(nc)
        result[name] = {"ok": rep.ok, "defects": len(rep.defects)}
    return reports, result


def cmd_check_hom(obj, args):
    A = _algebra(_need(obj, "source", "input"), "source", args)
    B = _algebra(_need(obj, "target", "input"), "target", args)
    map_obj = _need(obj, "map", "input")
    if map_obj == "identity":
        if not A.same_ops(B):
            raise InputError("the identity map needs equal source and target")
        f = identity_hom(A)
    else:
        f = FilteredAinfHom.from_json(A, B, map_obj)
    rep = check_hom(f, args.max_arity)
    return [rep], {"components": len(f.ops)}


def cmd_check_bimodule(obj, args):
    if "module" in obj:
        L = _algebra(_need(obj, "left", "input"), "left", args)
        R = _algebra(_need(obj, "right", "input"), "right", args)
        M = FilteredAinfBimodule.from_json(L, R, obj["module"])
    else:
        M = bimodule_from_algebra(_algebra(_need(obj, "algebra", "input"), "algebra", args))
    rep = check_bimodule(M, args.max_arity)
    return [rep], {"generators": M.names}


def cmd_canonical_model(obj, args):
    reports, result = [], {}
    algs = _algebras(obj, args)
    for name, A in algs:
        S = SplittingData.from_json(A, obj["splitting"]) if "splitting" in obj else standard_splitting(A)
        B, f, rep = canonical_model(A, S, K=args.max_arity)
        ra, rh, rc = check_ainf(B), check_hom(f), compare_homology(A, B)
        for r in (rep, ra, rh, rc):
            r.stats["name"] = name
            reports.append(r)
        entry = {"rank_C": A.n, "rank_D": B.n}
        if len(algs) == 1:
            entry.update({"model": B.to_json(), "map": f.to_json()})
        result[name] = entry
    return reports, result


def cmd_mc_check(obj, args):
    A = _algebra(_need(obj, "algebra", "input"), "algebra", args)
    b = mc_from_json(A, {"b": _need(obj, "b", "input")})
    res = check_weak_mc(A, b)
    rep = Report("mc-check", "sum_k m_k(b, .., b) is a multiple of the unit")
    if res.status != "solved":
        rep.add_defect(defect=res.defect.to_json(A.names))
    if res.determined_below is not None:
        rep.out_of_window.append({"unknown_from": fmt_energy(res.determined_below)})
    return [rep], res.to_json(A)


def cmd_mc_solve(obj, args):
    A = _algebra(_need(obj, "algebra", "input"), "algebra", args)
    S = SplittingData.from_json(A, obj["splitting"]) if "splitting" in obj else None
    res = solve_mc(A, S)
    rep = Report("mc-solve", "level-by-level solution of the weak Maurer-Cartan equation")
    rep.stats["status"] = res.status
    if res.status == "solved":
        chk = check_weak_mc(A, res.b)
        if chk.status != "solved":
            rep.add_defect(issue="returned b does not solve the equation")
    return [rep], res.to_json(A)


def cmd_deform(obj, args):
    A = _algebra(_need(obj, "algebra", "input"), "algebra", args)
    b = mc_from_json(A, {"b": _need(obj, "b", "input")})
    B = deform(A, b, K=args.max_arity)
    rep = check_ainf(B)
    rep.check = "deformed-check-ainf"
    return [rep], {"algebra": B.to_json()}


def cmd_deform_twisted(obj, args):
    A = _algebra(_need(obj, "algebra", "input"), "algebra", args)
    tw = TwistData.from_json(A, _need(obj, "twist", "input"))
    B = deform_twisted(A, tw, K=args.max_arity)
    reports = [check_ainf(B)]
    reports[0].check = "twisted-check-ainf"
    if all(A.ring.normalize(r) == A.ring.one() for r in tw.rho):
        cmp = Report("trivial-twist", "the twisted deformation with trivial rho equals the plain deformation")
        if not B.same_ops(deform(A, tw.b_plus, K=args.max_arity)):
            cmp.add_defect(issue="operations differ")
        reports.append(cmp)
    return reports, {"algebra": B.to_json()}


def cmd_hf(obj, args):
    cx = _complex(obj, args)
    thresholds = obj.get("thresholds", [])
    out = []
    rep = Report("hf", "H = Lambda_0^a + sum Lambda_0 / T^{lambda_i} in each degree class")
    for c in cx.classes():
        d = next(deg for _, deg in cx.module.generators if cx.degree_class(deg) == c)
        dec = homology_decomposition(cx, d)
        entry = dec.to_json()
        entry["class"] = c
        entry["torsion_count"] = {str(t): torsion_count(dec, t) for t in thresholds}
        out.append(entry)
    rep.stats["classes"] = len(out)
    return [rep], {"graded_by": cx.graded_by, "E": fmt_energy(cx.E), "homology": out}


def cmd_spectral(obj, args):
    cx = _complex(obj, args)
    pages = spectral_sequence(cx, _need(obj, "step", "input"), int(obj.get("r_max", 10)))
    rep = Report("spectral", "E_infinity agrees with the homology decomposition")
    for name, ok in sorted(pages.checks.items()):
        if ok is False:
            rep.add_defect(check=name)
    return [rep], pages.to_json()


def cmd_hochschild_check(obj, args):
    reports = []
    L = args.max_length
    for name, A in _algebras(obj, args):
        rep = check_hoch_squared(A, max_length=L)
        rep.stats["name"] = name
        reports.append(rep)
    return reports, {}


def cmd_p_contract(obj, args):
    A = _algebra(_need(obj, "algebra", "input"), "algebra", args)
    P = PContractData.from_json(A, obj["contract"]) if "contract" in obj else classical_contract(A)
    b = mc_from_json(A, {"b": obj["b"]}) if "b" in obj else None
    rep = check_p_contract(P, A, b, max_length=args.max_length)
    return [rep], {"ambient": P.ambient.names()}


def _moduli_one(obj, n):
    t = CombType.from_json(_need(obj, "type", f"instances[{n}]"))
    t.validate()
    s = SymmetryData.from_json(obj["symmetry"]) if "symmetry" in obj else SymmetryData.trivial(t)
    lhs, rhs = equivariant_dim_sides(t, s)
    gap = gap_report(t, s)
    out = {"vdim": virtual_dim(t), "top_vdim": top_virtual_dim(t), "lhs": lhs, "rhs": rhs, **gap}
    out["equivariant_index"] = {str(i): list(equivariant_index(s.of(i).m, t.vertices[i].c1, t.n))
                                for i in t.spheres()}
    return out


def cmd_moduli_dim(obj, args):
    items = obj["instances"] if "instances" in obj else [obj]
    rep = Report("moduli-dim", "index plus rho agrees between the stratum and its reduced model")
    out = []
    for n, it in enumerate(items):
        r = _moduli_one(it, n)
        if r["lhs"] != r["rhs"]:
            rep.add_defect(instance=n, lhs=r["lhs"], rhs=r["rhs"])
        if r["violation"]:
            rep.notes.append(f"instance {n}: nontrivial symmetry with gap {r['gap']}"
                             + ("" if r["spherically_positive"] else " (not spherically positive)"))
        out.append(r)
    return [rep], {"instances": out}


def _parse_bounds(text):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 4 or not all(p.isdigit() for p in parts):
        raise InputError("--bounds takes four integers: vertices,marks,c1,m")
    v, mk, c, m = map(int, parts)
    return Bounds(v, mk, c, m)


def cmd_moduli_sweep(obj, args):
    if args.bounds:
        b = _parse_bounds(args.bounds)
    elif obj and "bounds" in obj:
        d = dict(obj["bounds"])
        if "maslov" in d:
            d["maslov"] = tuple(d["maslov"])
        b = Bounds(**d)
    else:
        b = Bounds()
    workers = int(os.environ.get("WORKBENCH_THREADS", "1") or 1)
    summary = sweep(b, workers=max(1, workers))
    rep = Report("moduli-sweep", "identity holds everywhere; spherically positive nontrivial strata have gap >= 2")
    for key, count in sorted(summary.get("failure_counts", {}).items()):
        if count:
            rep.add_defect(category=key, count=count)
    rep.stats["instances"] = summary["instances"]
    return [rep], summary


def cmd_stack_check(obj, args):
    S = _sheaf(obj)
    reports = [check_group_cocycle(S)]
    result = {"group_order": S.group.n, "pairs": len(S.nerve.pairs), "triples": len(S.nerve.triples)}
    if "iso" in obj:
        S2 = apply_iso(S, SheafIso.from_json(obj["iso"]))
        r = check_group_cocycle(S2)
        r.check = "transported-group-cocycle"
        reports.append(r)
        result["transported"] = S2.to_json()
    if "bundle" in obj:
        B = _bundle(S, obj["bundle"])
        reports.append(check_bundle(B))
        _, _, fr = fixed_subbundle(B)
        reports.append(fr)
        result["fixed_dims"] = fr.stats["dims"]
    return reports, result


def cmd_cech_class(obj, args):
    S = _sheaf(obj)
    cls = abelian_cech_class(S)
    reports = [check_group_cocycle(S)]
    if args.iso_trials:
        rep = Report("cech-iso-invariance", "the class is unchanged by isomorphisms that restore h")
        rng = random.Random(args.seed)
        G, N = S.group, S.nerve
        auts = G.automorphisms()
        for n in range(args.iso_trials):
            t = random_iso(G, N, rng, auts)
            S2 = apply_iso(S, t)
            undo = SheafIso({q: G.identity for q in N.pairs}, {i: G.aut_inverse(t.psi[i]) for i in N.index})
            back = apply_iso(S2, undo)
            if back.h != S.h:
                rep.add_defect(trial=n, issue="automorphism part not undone")
            elif abelian_cech_class(back) != cls:
                rep.add_defect(trial=n, issue="class changed")
            elif abelian_cech_class(S2)["order"] != cls["order"]:
                rep.add_defect(trial=n, issue="order changed under the twisted local system")
        rep.stats["trials"] = args.iso_trials
        reports.append(rep)
    return reports, cls


def cmd_ring_axioms(obj, args):
    rings = [CoeffRing.from_json(r) for r in obj.get("rings", [])] or [ZZ, GF(2), GF(5), QQ]
    trials = args.trials if args.trials is not None else int(obj.get("trials", 1000))
    if trials < 1:
        raise InputError("trials must be positive")
    rng = random.Random(args.seed)
    reports = [check_ring_axioms(R, trials, rng) for R in rings]
    return reports, {"rings": [R.name for R in rings], "trials": trials, "seed": args.seed}


COMMANDS = {
    "ring-axioms": (cmd_ring_axioms, "randomized Novikov ring axioms and filtration checks"),
    "check-ainf": (cmd_check_ainf, "verify the filtered A-infinity relations"),
    "check-hom": (cmd_check_hom, "verify an A-infinity homomorphism"),
    "check-bimodule": (cmd_check_bimodule, "verify the bimodule relations"),
    "canonical-model": (cmd_canonical_model, "transfer to a canonical model and verify it"),
    "mc-check": (cmd_mc_check, "decide whether b solves the weak Maurer-Cartan equation"),
    "mc-solve": (cmd_mc_solve, "solve the weak Maurer-Cartan equation or report the obstruction"),
    "deform": (cmd_deform, "deform by a bounding cochain and verify the result"),
    "deform-twisted": (cmd_deform_twisted, "deform with a local-system twist"),
    "hf": (cmd_hf, "Betti numbers and torsion exponents"),
    "spectral": (cmd_spectral, "energy spectral sequence"),
    "hochschild-check": (cmd_hochschild_check, "verify that the Hochschild differential squares to zero"),
    "p-contract": (cmd_p_contract, "verify p'-contract identities"),
    "moduli-dim": (cmd_moduli_dim, "dimensions and the equivariant identity for given strata"),
    "moduli-sweep": (cmd_moduli_sweep, "enumerate strata and check the identity and the gap"),
    "stack-check": (cmd_stack_check, "verify sheaf cocycles, transported sheaves and bundles"),
    "cech-class": (cmd_cech_class, "Cech class of an abelian sheaf"),
}


# -- driver -----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="floerkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("input", nargs="?", help="input JSON file ('-' for stdin)")
        sp.add_argument("--builtin", help="use a named built-in input instead of a file")
        sp.add_argument("--energy", help="truncation energy E (lowers the input's E)")
        sp.add_argument("--max-arity", type=int, default=None, help="largest arity to check")
        sp.add_argument("--max-length", type=int, default=3, help="largest tensor length (Hochschild)")
        sp.add_argument("--bounds", help="sweep bounds: vertices,marks,c1,m")
        sp.add_argument("--trials", type=int, default=None, help="random trials (ring axioms)")
        sp.add_argument("--iso-trials", type=int, default=0, help="random isomorphisms to test")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized trials")
        sp.add_argument("--negative-control", action="store_true",
                        help="also check that a perturbed input is rejected")
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")
    return p


def _load(args):
    if args.builtin:
        try:
            return catalog.get(args.command, args.builtin)
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    if not args.input:
        if args.command in ("moduli-sweep", "ring-axioms"):
            return {}
        raise InputError("an input file or --builtin is required")
    try:
        text = sys.stdin.read() if args.input == "-" else open(args.input, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.input}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _jsonable(x):
    if isinstance(x, Fraction):
        return fmt_energy(x)
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    return str(x)


def run(argv):
    """Run one command; returns ``(exit code, document)``."""
    args = build_parser().parse_args(argv)
    if args.energy is not None:
        try:
            parse_energy(args.energy)
        except (ValueError, TypeError):
            return 1, {"schema": SCHEMA_VERSION, "command": args.command, "error": f"bad --energy {args.energy!r}"}
    handler = COMMANDS[args.command][0]
    try:
        obj = _load(args)
        reports, result = handler(obj, args)
    except (InputError, ValueError, KeyError, TypeError, ArithmeticError) as exc:
        msg = exc.args[0] if exc.args else type(exc).__name__
        return 1, {"schema": SCHEMA_VERSION, "command": args.command, "error": str(msg)}
    ok = all(r.ok for r in reports)
    doc = {"schema": SCHEMA_VERSION, "command": args.command, "ok": ok,
           "reports": [r.to_json() for r in reports], "result": result}
    return (0 if ok else 2), doc, reports, args


def _render(doc, reports, fmt):
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"
    lines = [r.summary() for r in reports]
    lines.append(("OK" if doc["ok"] else "DEFECTS") + f" {doc['command']}")
    return "\n".join(lines) + "\n"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    out = run(argv)
    code, doc = out[0], out[1]
    if code == 1:
        sys.stderr.write(f"floerkit {doc['command']}: input error: {doc['error']}\n")
        return 1
    _, _, reports, args = out
    text = _render(doc, reports, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
