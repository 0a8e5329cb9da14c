"""A short tour of the library API on small hand-checkable inputs."""

from fractions import Fraction

from floerkit.ainfty import check_ainf, check_hom
from floerkit.canonical import canonical_model, standard_splitting
from floerkit.coeff import QQ
from floerkit.filtered import FilteredComplex, FreeModule, homology_decomposition, torsion_count
from floerkit.fixtures import exact_curvature_algebra, heisenberg_algebra, obstructed_algebra
from floerkit.mc import deform, solve_mc
from floerkit.moduli import dim_gap, multiple_cover_family
from floerkit.novikov import NovikovElem
from floerkit.stacks import abelian_cech_class, wrapped_sheaf


def torsion():
    d = NovikovElem.monomial(QQ, 1, Fraction(7, 10))
    cx = FilteredComplex(QQ, FreeModule([("x", 0), ("y", 1)]), {0: {1: d}}, 2)
    h = homology_decomposition(cx, 1)
    print("H^1 for d = T^(7/10):", h.to_json())
    print("  torsion_count at 1/2, 4/5:", torsion_count(h, "1/2"), torsion_count(h, "4/5"))


def transfer():
    A = heisenberg_algebra(K=3)
    B, f, _ = canonical_model(A, standard_splitting(A))
    print("Heisenberg canonical model on", B.names,
          "| relations:", check_ainf(B).ok, "| comparison map:", check_hom(f).ok)


def bounding_cochains():
    A = exact_curvature_algebra()
    sol = solve_mc(A)
    print("exact curvature:", sol.status, sol.b.to_json(A.names))
    print("  deformed algebra satisfies the relations:", check_ainf(deform(A, sol.b)).ok)
    print("obstructed:", solve_mc(obstructed_algebra()).obstruction)


def moduli():
    for t, s in multiple_cover_family():
        print(f"m = {s.of(1).m}: gap {dim_gap(t, s)}")


def stacks():
    for p in (2, 3, 5):
        print(f"wrapped sheaf over Z/{p}:", abelian_cech_class(wrapped_sheaf(p)))


if __name__ == "__main__":
    torsion()
    transfer()
    bounding_cochains()
    moduli()
    stacks()
