"""Diagonal reduction of integer matrices modulo N.

Every matrix over Z/N can be brought to diagonal form by invertible row
and column operations.  The diagonal need not form a divisibility chain;
kernels and cokernels only depend on ``gcd(d_i, N)``.  Entries are kept in
``[0, N)`` as int64, so ``N`` must stay below ``2**26`` to keep row sums of products in range.
"""

from math import gcd

import numpy as np

__all__ = ["diagonalize_mod", "kernel_mod", "cokernel_mod", "unit_part"]


def _ext_gcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def unit_part(a, N):
    """Return ``(d, u)`` with ``d = gcd(a, N)``, ``u`` a unit and ``a = d u (mod N)``."""
    a %= N
    d = gcd(a, N)
    if a == 0:
        return N, 1
    a1, n1 = a // d, N // d
    # find a unit u = a1 + t n1 mod N; such t exists by the Chinese remainder theorem
    u = a1
    while gcd(u, N) != 1:
        u += n1
    return d, u % N


class _Track:
    """Accumulates row operations applied to an identity matrix."""

    def __init__(self, n, N, on):
        self.on = on
        self.M = np.eye(n, dtype=np.int64) if on else None
        self.N = N

    def combine(self, i, j, a, b, c, d):
        # rows (i, j) <- [[a, b], [c, d]] (rows i, j)
        if self.on:
            ri, rj = self.M[i].copy(), self.M[j].copy()
            self.M[i] = (a * ri + b * rj) % self.N
            self.M[j] = (c * ri + d * rj) % self.N

    def swap(self, i, j):
        if self.on and i != j:
            self.M[[i, j]] = self.M[[j, i]]


def diagonalize_mod(A, N, want_rows=False, want_col_inverse=False):
    """Diagonalize ``A`` over Z/N.

    Returns ``(D, P, Qinv)`` with ``P A Q = D`` for some invertible ``Q``.
    ``P`` is returned when ``want_rows``; ``Qinv`` (so that ``y = Qinv x``
    are the coordinates in which ``A`` is diagonal) when
    ``want_col_inverse``.  ``D`` is the list of diagonal entries.
    """
    A = np.array(A, dtype=np.int64) % N
    m, n = A.shape
    P = _Track(m, N, want_rows)
    Qi = _Track(n, N, want_col_inverse)   # rows of Qinv change inversely to columns of A
    diag = []
    for t in range(min(m, n)):
        # a unit in the current column is always an optimal pivot
        units = np.nonzero(np.gcd(A[t:, t], N) == 1)[0]
        if units.size:
            i, j = int(units[0]) + t, t
        else:
            sub = A[t:, t:]
            nz = np.argwhere(sub != 0)
            if nz.size == 0:
                break
            g = np.gcd(sub[nz[:, 0], nz[:, 1]], N)
            i, j = nz[int(np.argmin(g))] + t
        if i != t:
            A[[t, i]] = A[[i, t]]
            P.swap(t, i)
        if j != t:
            A[:, [t, j]] = A[:, [j, t]]
            Qi.swap(t, j)
        while True:
            _clear_column(A, t, N, P)
            if not _clear_row(A, t, N, Qi):
                break
        diag.append(int(A[t, t]))
    return diag, (P.M if want_rows else None), (Qi.M if want_col_inverse else None)


def _clear_column(A, t, N, P):
    """Zero A[t+1:, t] with row operations."""
    d, u = unit_part(int(A[t, t]), N)
    uinv = pow(u, -1, N)
    col = A[t + 1:, t]
    rows = np.nonzero(col)[0] + t + 1
    vals = A[rows, t]
    easy = rows[vals % d == 0]
    if easy.size:
        c = ((A[easy, t] // d) * uinv) % N
        A[easy] = (A[easy] - np.outer(c, A[t])) % N
        if P.on:
            P.M[easy] = (P.M[easy] - np.outer(c, P.M[t])) % N
    for r in rows[vals % d != 0]:
        b = int(A[r, t])
        if b == 0:
            continue
        a = int(A[t, t])
        g, x, y = _ext_gcd(a, b)
        ra, rb = A[t].copy(), A[r].copy()
        A[t] = (x * ra + y * rb) % N
        A[r] = ((-(b // g)) * ra + (a // g) * rb) % N
        P.combine(t, r, x % N, y % N, (-(b // g)) % N, (a // g) % N)


def _clear_row(A, t, N, Qi):
    """Zero A[t, t+1:] with column operations; report whether the column got dirty."""
    d, u = unit_part(int(A[t, t]), N)
    uinv = pow(u, -1, N)
    cols = np.nonzero(A[t, t + 1:])[0] + t + 1
    dirty = False
    vals = A[t, cols]
    easy = cols[vals % d == 0]
    if easy.size:
        c = ((A[t, easy] // d) * uinv) % N
        A[:, easy] = (A[:, easy] - np.outer(A[:, t], c)) % N
        # column ops col_j -= c_j col_t; the coordinate change adds c_j row_j to row t
        if Qi.on:
            Qi.M[t] = (Qi.M[t] + c @ Qi.M[easy]) % N
    for c_ in cols[vals % d != 0]:
        b = int(A[t, c_])
        if b == 0:
            continue
        a = int(A[t, t])
        g, x, y = _ext_gcd(a, b)
        ca, cb = A[:, t].copy(), A[:, c_].copy()
        A[:, t] = (x * ca + y * cb) % N
        A[:, c_] = ((-(b // g)) * ca + (a // g) * cb) % N
        # column transform E = [[x, -b/g], [y, a/g]]; its inverse is [[a/g, b/g], [-y, x]]
        # and the coordinate rows transform by E^{-1}
        Qi.combine(t, c_, (a // g) % N, (b // g) % N, (-y) % N, x % N)
        dirty = True
    if dirty and np.any(A[t + 1:, t] != 0):
        return True
    return False


def kernel_mod(A, N):
    """Kernel of ``A`` over Z/N as ``(Qinv, orders)``.

    In coordinates ``y = Qinv x`` the kernel is ``{y : y_i in (N / orders_i) Z/N}``;
    equivalently it is the direct sum of cyclic groups of the given orders.
    """
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[1]
    diag, _, Qinv = diagonalize_mod(A, N, want_col_inverse=True)
    orders = []
    for i in range(n):
        s = diag[i] if i < len(diag) else 0
        orders.append(gcd(s, N) if s % N else N)
    return Qinv, orders


def cokernel_mod(R, N):
    """Cokernel of ``R`` over Z/N: ``(P, invariants)`` with ``w = P z`` reduced mod invariants."""
    R = np.asarray(R, dtype=np.int64)
    m = R.shape[0]
    diag, P, _ = diagonalize_mod(R, N, want_rows=True)
    inv = []
    for i in range(m):
        s = diag[i] if i < len(diag) else 0
        inv.append(gcd(s, N) if s % N else N)
    return P, inv
