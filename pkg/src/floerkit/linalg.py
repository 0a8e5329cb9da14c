"""Exact linear algebra over Q and prime fields.

Thin wrappers around sympy's ``DomainMatrix`` that take and return plain
lists of coefficient-ring elements.  Vectors are lists, matrices are lists
of rows.
"""

from fractions import Fraction

from sympy import GF as _SymGF, QQ as _SymQQ
from sympy.polys.matrices import DomainMatrix

__all__ = [
    "rank", "nullspace", "rref", "solve", "span_basis", "extend_basis",
    "matmul", "matvec", "identity", "transpose",
]


def _domain(ring):
    if ring.kind == "Rationals":
        return _SymQQ
    if ring.kind == "PrimeField":
        return _SymGF(ring.p)
    raise ValueError(f"field linear algebra needs a field, got {ring.name}")


def _to_dm(rows, ncols, ring):
    K = _domain(ring)
    if ring.kind == "Rationals":
        data = [[K(x.numerator, x.denominator) for x in r] for r in rows]
    else:
        data = [[K(int(x)) for x in r] for r in rows]
    return DomainMatrix(data, (len(rows), ncols), K)


def _from_dm(M, ring):
    out = []
    for r in M.to_list():
        if ring.kind == "Rationals":
            out.append([Fraction(int(x.numerator), int(x.denominator)) for x in r])
        else:
            out.append([int(x) % ring.p for x in r])
    return out


def rank(rows, ncols, ring):
    if not rows or ncols == 0:
        return 0
    return _to_dm(rows, ncols, ring).rank()


def rref(rows, ncols, ring):
    """Reduced row echelon form: (nonzero rows, pivot columns)."""
    if not rows or ncols == 0:
        return [], ()
    R, piv = _to_dm(rows, ncols, ring).rref()
    R = _from_dm(R, ring)
    return R[:len(piv)], tuple(piv)


def nullspace(rows, ncols, ring):
    """Basis of {x : rows @ x = 0} as a list of vectors."""
    if ncols == 0:
        return []
    if not rows:
        one = ring.one()
        return [[one if i == j else ring.zero() for i in range(ncols)] for j in range(ncols)]
    N = _to_dm(rows, ncols, ring).nullspace()
    if N.shape[0] == 0:
        return []
    return _from_dm(N, ring)


def span_basis(vectors, dim, ring):
    """Row-reduced basis of the span of ``vectors``."""
    R, _ = rref(list(vectors), dim, ring)
    return R


def extend_basis(sub, vectors, dim, ring):
    """Pick vectors from ``vectors`` completing ``sub`` to a basis of the joint span.

    Returns the chosen vectors, in the order they appear.
    """
    chosen = []
    cur = list(sub)
    r = rank(cur, dim, ring) if cur else 0
    for v in vectors:
        r2 = rank(cur + [v], dim, ring)
        if r2 > r:
            chosen.append(v)
            cur.append(v)
            r = r2
    return chosen


def solve(A_rows, ncols, b, ring):
    """One solution x of A x = b, or None.  Free variables are set to zero."""
    m = len(A_rows)
    if m == 0:
        return [ring.zero()] * ncols if all(x == 0 for x in b) else None
    aug = [list(A_rows[i]) + [b[i]] for i in range(m)]
    R, piv = rref(aug, ncols + 1, ring)
    if ncols in piv:
        return None
    x = [ring.zero()] * ncols
    for row, c in zip(R, piv):
        x[c] = row[ncols]
    return x


def matmul(A, B, ring, inner=None):
    if not A:
        return []
    n = len(B[0]) if B else 0
    k = len(B) if inner is None else inner
    out = []
    for row in A:
        acc = [ring.zero()] * n
        for t in range(k):
            a = row[t]
            if a == 0:
                continue
            Bt = B[t]
            for j in range(n):
                if Bt[j] != 0:
                    acc[j] = ring.add(acc[j], ring.mul(a, Bt[j]))
        out.append(acc)
    return out


def matvec(A, v, ring):
    out = []
    for row in A:
        acc = ring.zero()
        for a, x in zip(row, v):
            if a != 0 and x != 0:
                acc = ring.add(acc, ring.mul(a, x))
        out.append(acc)
    return out


def identity(n, ring):
    return [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)]


def transpose(A, ncols=None):
    if not A:
        return [[] for _ in range(ncols or 0)]
    return [list(c) for c in zip(*A)]
