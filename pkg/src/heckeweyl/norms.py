"""Group norms over local fields and the apartment metric.

Log-scale convention: ``group_norm`` returns log ||g|| = |xi|_W where xi is
the Cartan datum of g (Smith valuations at a non-archimedean place, log
singular values of the det-normalised matrix at the archimedean place).
The archimedean absolute value |z|_C is the square of the usual modulus,
and the extension degree e(C/R) = 2 enters the stated Iwasawa bounds.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import SingularMatrix
from .hecke import PAdicMatrix, PrimeContext, cartan_decompose, val_p
from .rootdata import weyl_norm


def group_norm(g, venue: str = "nonarch", p: int | None = None) -> float:
    """log ||g||: Weyl norm of the Cartan datum of g.

    venue "nonarch": g is a PAdicMatrix (or p must be given for raw rows).
    venue "arch": g is a complex matrix, det-normalised internally.
    """
    if venue == "nonarch":
        if not isinstance(g, PAdicMatrix):
            g = PAdicMatrix.from_rows(g, PrimeContext(p))
        return float(weyl_norm(cartan_decompose(g)))
    if venue == "arch":
        g = np.asarray(g, dtype=complex)
        det = np.linalg.det(g)
        if abs(det) < 1e-300:
            raise SingularMatrix("matrix must be invertible")
        n = g.shape[0]
        g1 = g / abs(det) ** (1.0 / n)
        sv = np.linalg.svd(g1, compute_uv=False)
        return float(weyl_norm(np.log(sv)))
    raise ValueError("venue must be 'nonarch' or 'arch'")


def sup_norm(u, p: int) -> Fraction:
    """max_{i,j} |u_{ij}|_F for unit upper-triangular u; always >= 1."""
    n = len(u)
    for i in range(n):
        if Fraction(u[i][i]) != 1:
            raise ValueError("u must be unit upper triangular")
        for j in range(i):
            if Fraction(u[i][j]) != 0:
                raise ValueError("u must be unit upper triangular")
    best = 0  # = -max |.| exponent; |x|_F = p^{-val}
    for row in u:
        for x in row:
            v = val_p(Fraction(x), p)
            if v is not None:
                best = min(best, v)
    return Fraction(p) ** (-best)


def apartment_distance(x, y) -> float:
    """Metric on the principal apartment induced by the Weyl norm."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(weyl_norm(x - y))


def torus_translation(t_diag, p: int) -> np.ndarray:
    """H_F(t) = (log_q |t_i|_F)_i; the torus acts by X -> X - H_F(t)."""
    return np.array([-val_p(Fraction(t), p) for t in t_diag], dtype=float)


def extension_rescale(lognorm: float, ramification_index: int) -> float:
    """log ||g||_{G(E)} = e(E/F) * log ||g||_{G(F)}."""
    if ramification_index < 1:
        raise ValueError("ramification index must be >= 1")
    return ramification_index * lognorm


def iwasawa_nonarch(g: PAdicMatrix):
    """Exact Iwasawa decomposition g = u t k over Q_p.

    Column reduction pivots on the minimal-valuation entry of each row
    (bottom-up), so all multipliers are p-integral and k lands in K
    (integral entries, unit determinant).  Returns (u, t, k) with u unit
    upper triangular, t diagonal.
    """
    n = g.n
    p = g.context.p
    work = [list(row) for row in g.entries]
    ops = _identity_rows(n)
    for i in range(n - 1, -1, -1):
        piv_col, piv_val = None, None
        for j in range(i + 1):
            v = val_p(work[i][j], p)
            if v is not None and (piv_val is None or v < piv_val):
                piv_col, piv_val = j, v
        if piv_col is None:
            raise SingularMatrix("matrix is singular")
        if piv_col != i:
            _col_swap(work, ops, piv_col, i)
        for j in range(i):
            if work[i][j] != 0:
                f = work[i][j] / work[i][i]
                _col_addmul(work, ops, src=i, dst=j, factor=-f)
    t = tuple(work[i][i] for i in range(n))
    u_rows = tuple(
        tuple(work[i][j] / work[j][j] for j in range(n)) for i in range(n)
    )
    k_mat = PAdicMatrix(tuple(tuple(r) for r in ops), g.context).inverse()
    u = PAdicMatrix(u_rows, g.context)
    t_mat = PAdicMatrix(
        tuple(
            tuple(t[i] if i == j else Fraction(0) for j in range(n))
            for i in range(n)
        ),
        g.context,
    )
    if not k_mat.is_integral() or val_p(k_mat.det(), p) != 0:
        raise SingularMatrix("column reduction failed to certify k in K")
    return u, t_mat, k_mat


def _identity_rows(n):
    return [
        [Fraction(1) if i == j else Fraction(0) for j in range(n)]
        for i in range(n)
    ]


def _col_swap(work, ops, a, b):
    for row in work:
        row[a], row[b] = row[b], row[a]
    for row in ops:
        row[a], row[b] = row[b], row[a]


def _col_addmul(work, ops, src, dst, factor):
    for row in work:
        row[dst] += factor * row[src]
    for row in ops:
        row[dst] += factor * row[src]


def iwasawa_arch(g: np.ndarray):
    """g = u a k over C via the RQ factorisation (see spherical module)."""
    from .spherical import iwasawa_uak

    return iwasawa_uak(g)
