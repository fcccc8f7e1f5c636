"""Exact unramified Hecke algebra of GL_n(Q_p).

Everything here is integer/rational arithmetic; no p-adic floats.  The
measure normalisation is vol(K) = 1 (K = GL_n(Z_p)); the ramified scale
factor N(D)^{-(n^2+n)/2} of the global measure comparison is documented as
``RAMIFIED_VOLUME_NOTE`` and never applied.

Double cosets K pi^xi K are enumerated through row Hermite normal forms:
upper-triangular matrices with diagonal p^{a_j} and the entry in column j
reduced mod p^{a_j} (the column modulus), filtered by Smith type.  Left
transversals {r K} used by convolution are the transposes.

Satake normalisation (fixed by the homomorphism constraint, see tests):

    S(tau_xi) = sum_mu N_mu(xi) q^{rho . mu} e^mu,

where N_mu(xi) counts Hermite representatives with diagonal valuation mu
and rho . mu uses the plain coordinate pairing (half-integers).  The
leading coefficient at the dominant mu = xi is q^{rho . xi}.  Coefficients
are stored exactly in the twisted form t_mu := coefficient * q^{-rho.mu},
which multiplies as a plain group-algebra convolution.  Evaluating
S(tau_xi) at z_i = q^{(n+1-2i)/2} returns deg tau_xi exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    DivisibilityViolation,
    ScaleExceeded,
    SingularMatrix,
    Unstable,
)
from .rootdata import dominance_leq, dominant_sort, is_dominant, weyl_norm

RAMIFIED_VOLUME_NOTE = (
    "At a place ramified in the quadratic field the maximal compact has "
    "volume N(D)^{-(n^2+n)/2} with respect to the group measure; this "
    "module works at unramified places of Q_p where the factor is 1."
)

_MAX_NORM = 4
_MAX_P = 7
_MAX_N = 3
_CANDIDATE_CAP = 30_000_000


def val_p(x: Fraction | int, p: int) -> int | None:
    """p-adic valuation of a rational number; None encodes +infinity."""
    x = Fraction(x)
    if x == 0:
        return None
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@dataclass(frozen=True)
class PrimeContext:
    p: int
    m: int = 1

    def __post_init__(self):
        if self.p < 2 or any(self.p % d == 0 for d in range(2, int(self.p ** 0.5) + 1)):
            raise ValueError("p must be prime")
        if self.m < 1:
            raise ValueError("truncation level m must be >= 1")


@dataclass(frozen=True)
class PAdicMatrix:
    """Invertible square matrix of exact rationals viewed at a prime."""

    entries: tuple[tuple[Fraction, ...], ...]
    context: PrimeContext

    @staticmethod
    def from_rows(rows, ctx: PrimeContext) -> "PAdicMatrix":
        ent = tuple(tuple(Fraction(x) for x in row) for row in rows)
        mat = PAdicMatrix(ent, ctx)
        if mat.det() == 0:
            raise SingularMatrix("matrix must be invertible")
        return mat

    @property
    def n(self) -> int:
        return len(self.entries)

    def det(self) -> Fraction:
        return _det_fraction([list(r) for r in self.entries])

    def __matmul__(self, other: "PAdicMatrix") -> "PAdicMatrix":
        n = self.n
        rows = [
            [
                sum(self.entries[i][k] * other.entries[k][j] for k in range(n))
                for j in range(n)
            ]
            for i in range(n)
        ]
        return PAdicMatrix(tuple(tuple(r) for r in rows), self.context)

    def inverse(self) -> "PAdicMatrix":
        n = self.n
        aug = [
            list(self.entries[i]) + [Fraction(int(i == j)) for j in range(n)]
            for i in range(n)
        ]
        for col in range(n):
            piv = next(
                (r for r in range(col, n) if aug[r][col] != 0), None
            )
            if piv is None:
                raise SingularMatrix("matrix must be invertible")
            aug[col], aug[piv] = aug[piv], aug[col]
            inv = 1 / aug[col][col]
            aug[col] = [x * inv for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        rows = tuple(tuple(aug[i][n:]) for i in range(n))
        return PAdicMatrix(rows, self.context)

    def is_integral(self) -> bool:
        p = self.context.p
        return all(
            (v := val_p(x, p)) is None or v >= 0
            for row in self.entries
            for x in row
        )


def _det_fraction(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    if n == 1:
        return Fraction(rows[0][0])
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if n == 3:
        a, b, c = rows[0]
        d, e, f = rows[1]
        g, h, i = rows[2]
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    total = Fraction(0)
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * _det_fraction(minor)
    return total


def smith_valuations(entries, p: int) -> list[int]:
    """Valuations of the local Smith normal form, ascending.

    Pivots on a minimal-valuation entry; row/column multipliers are then
    local integers, so the diagonal valuations are the elementary divisors.
    """
    A = [[Fraction(x) for x in row] for row in entries]
    n = len(A)
    vals: list[int] = []
    for top in range(n):
        best, bi, bj = None, -1, -1
        for i in range(top, n):
            for j in range(top, n):
                v = val_p(A[i][j], p)
                if v is not None and (best is None or v < best):
                    best, bi, bj = v, i, j
        if best is None:
            raise SingularMatrix("matrix is singular at this prime")
        A[top], A[bi] = A[bi], A[top]
        for row in A:
            row[top], row[bj] = row[bj], row[top]
        piv = A[top][top]
        for i in range(top + 1, n):
            if A[i][top] != 0:
                f = A[i][top] / piv
                A[i] = [x - f * y for x, y in zip(A[i], A[top])]
        for j in range(top + 1, n):
            if A[top][j] != 0:
                f = A[top][j] / piv
                for i in range(top, n):
                    A[i][j] -= f * A[i][top]
        vals.append(best)
    return sorted(vals)


def cartan_decompose(A: PAdicMatrix) -> tuple[int, ...]:
    """The unique dominant xi with A in K pi^xi K (Smith valuations)."""
    p = A.context.p
    vals = smith_valuations(A.entries, p)
    xi = tuple(sorted(vals, reverse=True))
    dv = val_p(A.det(), p)
    if dv != sum(xi):
        raise DivisibilityViolation("valuation bookkeeping failed")
    return xi


def _int_matrix_type(mat: np.ndarray, p: int) -> tuple[int, ...]:
    """Smith type of a nonsingular integer matrix, dominant order."""
    n = mat.shape[0]
    flat = [int(x) for x in mat.ravel() if x != 0]
    if not flat:
        raise SingularMatrix("zero matrix")
    d1 = min(_int_val(x, p) for x in flat)
    if n == 1:
        return (d1,)
    det = int(round(np.linalg.det(mat.astype(float))))
    det = _exact_int_det(mat)
    if det == 0:
        raise SingularMatrix("singular product")
    if n == 2:
        dv = _int_val(det, p)
        return (dv - d1, d1)
    minors = []
    idx = [(0, 1), (0, 2), (1, 2)]
    m = mat.tolist()
    for r1, r2 in idx:
        for c1, c2 in idx:
            mm = m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
            if mm:
                minors.append(mm)
    d2 = min(_int_val(x, p) for x in minors)
    dv = _int_val(det, p)
    return (dv - d2, d2 - d1, d1)


def _exact_int_det(mat: np.ndarray) -> int:
    m = mat.tolist()
    n = len(m)
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )
    return int(round(np.linalg.det(mat.astype(float))))


def _int_val(x: int, p: int) -> int:
    v = 0
    x = abs(x)
    while x % p == 0:
        x //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# Hermite-form enumeration of K pi^xi K / K


def _check_scale(xi, ctx: PrimeContext, n: int):
    if n > _MAX_N or ctx.p > _MAX_P or weyl_norm(xi) > _MAX_NORM:
        raise ScaleExceeded(
            f"desk scale is n <= {_MAX_N}, p <= {_MAX_P}, |xi|_W <= {_MAX_NORM}"
        )


def _hermite_stream(xi: tuple[int, ...], p: int, chunk: int = 200_000):
    """Yield integer Hermite matrices of Smith type xi (xi_n = 0 required).

    Row HNF: diagonal p^{a_j}, above-diagonal entries of column j run over
    residues mod p^{a_j}.  Candidates are generated per diagonal composition
    and filtered by Smith type with vectorised minor valuations.
    """
    n = len(xi)
    total = sum(xi)
    amax = xi[0]
    pows = [p ** k for k in range(amax + total + 2)]
    for diag in itertools.product(range(amax + 1), repeat=n):
        if sum(diag) != total:
            continue
        radices = []
        cells = []
        for j in range(n):
            for i in range(j):
                cells.append((i, j))
                radices.append(pows[diag[j]])
        count = math.prod(radices) if radices else 1
        if count > _CANDIDATE_CAP:
            raise ScaleExceeded(f"{count} Hermite candidates for diag {diag}")
        for lo in range(0, count, chunk):
            hi = min(lo + chunk, count)
            block = _decode_mixed_radix(np.arange(lo, hi, dtype=np.int64), radices)
            mats = np.zeros((hi - lo, n, n), dtype=np.int64)
            for j in range(n):
                mats[:, j, j] = pows[diag[j]]
            for k, (i, j) in enumerate(cells):
                mats[:, i, j] = block[:, k]
            keep = _smith_type_mask(mats, xi, p)
            if keep.any():
                yield mats[keep]


def _decode_mixed_radix(indices: np.ndarray, radices: list[int]) -> np.ndarray:
    out = np.empty((len(indices), len(radices)), dtype=np.int64)
    rem = indices.copy()
    for k in range(len(radices) - 1, -1, -1):
        out[:, k] = rem % radices[k]
        rem //= radices[k]
    return out


def _vec_val(arr: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Elementwise p-valuation of a nonnegative int64 array, capped."""
    vals = np.zeros(arr.shape, dtype=np.int64)
    work = np.abs(arr)
    alive = work > 0
    vals[~alive] = cap
    for _ in range(cap):
        div = alive & (work % p == 0)
        if not div.any():
            break
        vals[div] += 1
        work[div] //= p
        alive = div
    return vals


def _smith_type_mask(mats: np.ndarray, xi: tuple[int, ...], p: int) -> np.ndarray:
    n = len(xi)
    cap = sum(xi) + 1
    ent = mats.reshape(len(mats), -1)
    d1 = _vec_val(ent, p, cap).min(axis=1)
    keep = d1 == xi[-1]
    if n == 2:
        return keep
    # n == 3: second determinantal divisor from the nine 2x2 minors
    pairs = [(0, 1), (0, 2), (1, 2)]
    minor_vals = np.full((len(mats), 9), cap, dtype=np.int64)
    k = 0
    for r1, r2 in pairs:
        for c1, c2 in pairs:
            mm = (
                mats[:, r1, c1] * mats[:, r2, c2]
                - mats[:, r1, c2] * mats[:, r2, c1]
            )
            minor_vals[:, k] = _vec_val(mm, p, cap)
            k += 1
    d2 = minor_vals.min(axis=1)
    return keep & (d2 == xi[-1] + xi[-2])


def _normalize_central(xi) -> tuple[tuple[int, ...], int]:
    xi = dominant_sort(xi)
    c = xi[-1]
    return tuple(x - c for x in xi), c


def coset_reps(xi, ctx: PrimeContext) -> list[PAdicMatrix]:
    """Representatives of K pi^xi K / K as Hermite forms (xi_n >= 0)."""
    xi = tuple(int(x) for x in xi)
    if not is_dominant(xi):
        raise ValueError("xi must be dominant")
    if xi[-1] < 0:
        raise ValueError("coset_reps requires xi_n >= 0")
    n = len(xi)
    _check_scale(xi, ctx, n)
    xi0, c = _normalize_central(xi)
    scale = Fraction(ctx.p) ** c
    out = []
    for block in _hermite_stream(xi0, ctx.p):
        for mat in block:
            rows = tuple(
                tuple(scale * int(x) for x in row) for row in mat
            )
            out.append(PAdicMatrix(rows, ctx))
    return out


@lru_cache(maxsize=4096)
def _coset_statistics(xi: tuple[int, ...], p: int) -> dict[tuple[int, ...], int]:
    """Histogram {diagonal valuation vector: count} over the Hermite
    representatives for central-normalised xi (xi_n = 0)."""
    n = len(xi)
    hist: dict[tuple[int, ...], int] = {}
    for block in _hermite_stream(xi, p):
        diags = np.stack([block[:, j, j] for j in range(n)], axis=1)
        vals = _vec_val(diags, p, sum(xi) + 1)
        uniq, counts = np.unique(vals, axis=0, return_counts=True)
        for row, cnt in zip(uniq, counts):
            key = tuple(int(x) for x in row)
            hist[key] = hist.get(key, 0) + int(cnt)
    return hist


def degree(xi, ctx: PrimeContext) -> int:
    """deg tau_xi = #(K pi^xi K / K); central-shift and W invariant."""
    xi0, _ = _normalize_central(xi)
    _check_scale(xi0, ctx, len(xi0))
    return sum(_coset_statistics(xi0, ctx.p).values())


def _left_transversal(xi, ctx: PrimeContext):
    """Left-coset transversal of K pi^xi K = sqcup r K (transposed HNFs),
    as integer arrays with a common central p-power shift."""
    xi0, c = _normalize_central(xi)
    _check_scale(xi0, ctx, len(xi0))
    mats = []
    for block in _hermite_stream(xi0, ctx.p):
        mats.append(np.transpose(block, (0, 2, 1)))
    if mats:
        arr = np.concatenate(mats, axis=0)
    else:
        arr = np.zeros((0, len(xi0), len(xi0)), dtype=np.int64)
    return arr, c


@dataclass(frozen=True)
class HeckeElement:
    """Finite rational combination of basis functions tau_xi."""

    coeffs: tuple[tuple[tuple[int, ...], Fraction], ...]

    @staticmethod
    def from_dict(d: dict) -> "HeckeElement":
        items = tuple(
            sorted(
                (tuple(k), Fraction(v)) for k, v in d.items() if v != 0
            )
        )
        for key, _ in items:
            if not is_dominant(key):
                raise ValueError("HeckeElement keys must be dominant")
        return HeckeElement(items)

    @staticmethod
    def basis(xi) -> "HeckeElement":
        return HeckeElement.from_dict({dominant_sort(xi): Fraction(1)})

    def as_dict(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self.coeffs)

    def __add__(self, other: "HeckeElement") -> "HeckeElement":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, Fraction(0)) + v
        return HeckeElement.from_dict(d)

    def scale(self, a) -> "HeckeElement":
        return HeckeElement.from_dict(
            {k: Fraction(a) * v for k, v in self.coeffs}
        )

    def support_norm(self) -> int:
        return max((int(weyl_norm(k)) for k, _ in self.coeffs), default=0)


@lru_cache(maxsize=4096)
def _basis_convolution(
    xi: tuple[int, ...], zeta: tuple[int, ...], p: int
) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Structure constants: tau_xi * tau_zeta = sum n_nu tau_nu with
    n_nu = #{(r, s) : type(r s) = nu} / deg tau_nu, all exact."""
    ctx = PrimeContext(p)
    reps_a, ca = _left_transversal(xi, ctx)
    reps_b, cb = _left_transversal(zeta, ctx)
    shift = ca + cb
    paircount: dict[tuple[int, ...], int] = {}
    for r in reps_a:
        prods = np.einsum("ij,mjk->mik", r, reps_b)
        for mat in prods:
            nu0 = _int_matrix_type(mat, p)
            nu = tuple(x + shift for x in nu0)
            paircount[nu] = paircount.get(nu, 0) + 1
    out = []
    for nu, cnt in sorted(paircount.items()):
        d = degree(nu, ctx)
        if cnt % d != 0:
            raise DivisibilityViolation(
                f"pair count {cnt} not divisible by deg {d} at nu={nu}"
            )
        out.append((nu, cnt // d))
    return tuple(out)


def convolve(xi, zeta, ctx: PrimeContext) -> HeckeElement:
    """tau_xi * tau_zeta expanded in the tau basis, exact integers."""
    xi = dominant_sort(xi)
    zeta = dominant_sort(zeta)
    table = _basis_convolution(xi, zeta, ctx.p)
    total = xi[0] - xi[-1] + zeta[0] - zeta[-1]
    if total > 2 * _MAX_NORM:
        raise ScaleExceeded("combined support too large")
    target = tuple(x + z for x, z in zip(xi, zeta))
    out: dict[tuple[int, ...], Fraction] = {}
    for nu, cnt in table:
        if not dominance_leq(nu, target):
            raise DivisibilityViolation(
                f"support violation: nu={nu} not <= xi+zeta={target}"
            )
        out[nu] = Fraction(cnt)
    return HeckeElement.from_dict(out)


def convolve_elements(
    f: HeckeElement, g: HeckeElement, ctx: PrimeContext
) -> HeckeElement:
    acc: dict[tuple[int, ...], Fraction] = {}
    for xi, a in f.coeffs:
        for zeta, b in g.coeffs:
            for nu, cnt in _basis_convolution(xi, zeta, ctx.p):
                acc[nu] = acc.get(nu, Fraction(0)) + a * b * cnt
    return HeckeElement.from_dict(acc)


# ---------------------------------------------------------------------------
# Satake transform


@dataclass(frozen=True)
class SatakePolynomial:
    """W-invariant element of C[X_*(T_0)] with exact twisted coefficients.

    ``twisted`` maps mu to t_mu; the actual coefficient of e^mu is
    t_mu * q^{rho . mu}.  Twisted coefficients multiply as a plain
    convolution because the q-twist is additive in mu.
    """

    p: int
    n: int
    twisted: tuple[tuple[tuple[int, ...], Fraction], ...]

    @staticmethod
    def from_dict(p: int, n: int, d: dict) -> "SatakePolynomial":
        items = tuple(sorted((tuple(k), Fraction(v)) for k, v in d.items() if v))
        return SatakePolynomial(p, n, items)

    def as_dict(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self.twisted)

    def coefficient(self, mu) -> "QHalf":
        """Full coefficient of e^mu as an exact c * q^{k/2}."""
        mu = tuple(mu)
        t = self.as_dict().get(mu, Fraction(0))
        # rho . mu = sum (n+1-2i)/2 mu_i; store doubled exponent
        k = sum((self.n + 1 - 2 * (i + 1)) * m for i, m in enumerate(mu))
        return QHalf(t, k)

    def __mul__(self, other: "SatakePolynomial") -> "SatakePolynomial":
        if (self.p, self.n) != (other.p, other.n):
            raise ValueError("mismatched Satake rings")
        acc: dict[tuple[int, ...], Fraction] = {}
        for mu1, t1 in self.twisted:
            for mu2, t2 in other.twisted:
                mu = tuple(a + b for a, b in zip(mu1, mu2))
                acc[mu] = acc.get(mu, Fraction(0)) + t1 * t2
        return SatakePolynomial.from_dict(self.p, self.n, acc)

    def __add__(self, other: "SatakePolynomial") -> "SatakePolynomial":
        acc = dict(self.twisted)
        for mu, t in other.twisted:
            acc[mu] = acc.get(mu, Fraction(0)) + t
        return SatakePolynomial.from_dict(self.p, self.n, acc)

    def scale(self, a) -> "SatakePolynomial":
        return SatakePolynomial.from_dict(
            self.p, self.n, {k: Fraction(a) * v for k, v in self.twisted}
        )

    def is_weyl_invariant(self) -> bool:
        """Full coefficients agree along W-orbits: t_{w mu} q^{rho.w mu}
        equals t_mu q^{rho.mu}, checked exactly."""
        d = self.as_dict()
        for mu, t in d.items():
            for w_mu in itertools.permutations(mu):
                twist = sum(
                    (self.n + 1 - 2 * (i + 1)) * (mu[i] - w_mu[i])
                    for i in range(self.n)
                )
                if twist % 2 != 0:
                    return False
                expected = t * Fraction(self.p) ** (twist // 2)
                if d.get(tuple(w_mu), Fraction(0)) != expected:
                    return False
        return True

    def degree_evaluation(self) -> Fraction:
        """Value at z_i = q^{(n+1-2i)/2}: sum_mu t_mu q^{2 rho.mu}."""
        total = Fraction(0)
        for mu, t in self.twisted:
            k = sum((self.n + 1 - 2 * (i + 1)) * m for i, m in enumerate(mu))
            total += t * Fraction(self.p) ** k
        return total


@dataclass(frozen=True)
class QHalf:
    """Exact value c * q^{k/2} (k may be odd); q is carried by context."""

    coef: Fraction
    half_exponent: int

    def value(self, q: int) -> float:
        return float(self.coef) * q ** (self.half_exponent / 2.0)

    def __mul__(self, other: "QHalf") -> "QHalf":
        return QHalf(self.coef * other.coef, self.half_exponent + other.half_exponent)

    def is_zero(self) -> bool:
        return self.coef == 0

    def as_fraction(self, q: int) -> Fraction:
        if self.coef == 0:
            return Fraction(0)
        if self.half_exponent % 2 != 0:
            raise ValueError("odd power of q^{1/2} is irrational")
        return self.coef * Fraction(q) ** (self.half_exponent // 2)

    def normalized(self) -> "QHalf":
        return QHalf(Fraction(0), 0) if self.coef == 0 else self


def satake_basis(xi, ctx: PrimeContext) -> SatakePolynomial:
    """S(tau_xi) from the Iwasawa counting formula (diagonal valuations of
    the Hermite representatives, twisted by q^{rho . mu})."""
    xi0, c = _normalize_central(xi)
    _check_scale(xi0, ctx, len(xi0))
    hist = _coset_statistics(xi0, ctx.p)
    n = len(xi0)
    d = {
        tuple(m + c for m in mu): Fraction(cnt)
        for mu, cnt in hist.items()
    }
    poly = SatakePolynomial.from_dict(ctx.p, n, d)
    if not poly.is_weyl_invariant():
        raise DivisibilityViolation("Satake image failed W-invariance")
    return poly


def satake(f: HeckeElement, ctx: PrimeContext) -> SatakePolynomial:
    """Algebra homomorphism H(K) -> C[X_*(T_0)]^W, exact."""
    first = None
    for xi, a in f.coeffs:
        term = satake_basis(xi, ctx).scale(a)
        first = term if first is None else first + term
    if first is None:
        n = 1
        return SatakePolynomial.from_dict(ctx.p, n, {})
    return first


# ---------------------------------------------------------------------------
# constant term along a standard parabolic


def _across_block_coords(blocks: tuple[int, ...]) -> list[tuple[int, int]]:
    n = sum(blocks)
    owner = []
    for b, size in enumerate(blocks):
        owner.extend([b] * size)
    return [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if owner[i] != owner[j]
    ]


def _block_dominant(zeta, blocks) -> bool:
    pos = 0
    for size in blocks:
        seg = zeta[pos:pos + size]
        if any(seg[i] < seg[i + 1] for i in range(len(seg) - 1)):
            return False
        pos += size
    return True


def constant_term_coefficient(
    xi, zeta, blocks, ctx: PrimeContext, level: int | None = None
) -> QHalf:
    """c_P(xi, zeta): coefficient of tau^M_zeta in the constant term of
    tau_xi along the standard parabolic with the given Levi blocks.

    c_P(xi, zeta) = delta_P(pi^zeta)^{1/2} * vol{u in U : pi^zeta u in
    supp tau_xi}; the volume is counted exactly on residue cells at level
    m >= 2 |xi|_W + 1 and verified stable against level m + 1.
    """
    xi = dominant_sort(xi)
    zeta = tuple(int(z) for z in zeta)
    blocks = tuple(blocks)
    n = sum(blocks)
    if len(xi) != n or len(zeta) != n:
        raise ValueError("dimension mismatch")
    if not _block_dominant(zeta, blocks):
        raise ValueError("zeta must be dominant within each Levi block")
    if sum(zeta) != sum(xi):
        return QHalf(Fraction(0), 0)
    _check_scale(xi, ctx, n)
    kappa = int(weyl_norm(xi))
    m = level if level is not None else 2 * kappa + 1
    v1 = _constant_term_volume(xi, zeta, blocks, ctx.p, m)
    v2 = _constant_term_volume(xi, zeta, blocks, ctx.p, m + 1)
    if v1 != v2:
        raise Unstable(f"constant-term count changed from level {m} to {m + 1}")
    coords = _across_block_coords(blocks)
    s = sum(zeta[i] - zeta[j] for i, j in coords)
    # delta_P^{1/2}(pi^zeta) = q^{-s/2}
    return QHalf(v1, -s).normalized()


def _constant_term_volume(xi, zeta, blocks, p: int, m: int) -> Fraction:
    coords = _across_block_coords(blocks)
    n = sum(blocks)
    lows = [xi[-1] - zeta[i] for i, _ in coords]
    sizes = [p ** (m - lo) for lo in lows]
    count_total = math.prod(sizes) if sizes else 1
    if count_total > 10_000_000:
        raise ScaleExceeded(f"{count_total} residue cells in constant term")
    vol_cell = Fraction(1, p ** m) ** len(coords)
    matched = 0
    base = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        base[i][i] = Fraction(p) ** zeta[i]
    for tpl in itertools.product(*[range(s) for s in sizes]):
        mat = [row[:] for row in base]
        for (idx, (i, j)), t in zip(enumerate(coords), tpl):
            u_ij = Fraction(p) ** lows[idx] * t
            mat[i][j] = Fraction(p) ** zeta[i] * u_ij
        try:
            typ = cartan_decompose(
                PAdicMatrix(tuple(tuple(r) for r in mat), PrimeContext(p))
            )
        except SingularMatrix:
            continue
        if typ == xi:
            matched += 1
    return matched * vol_cell


def constant_term(
    xi, blocks, ctx: PrimeContext, extra_norm: int = 0
) -> dict[tuple[int, ...], QHalf]:
    """Full constant term of tau_xi along the parabolic with given blocks.

    Returns {zeta: c_P(xi, zeta)} over block-dominant zeta with
    |zeta|_W <= |xi|_W + extra_norm (coefficients vanish beyond |xi|_W;
    extra_norm lets tests witness the vanishing).
    """
    xi = dominant_sort(xi)
    n = sum(blocks)
    kappa = int(weyl_norm(xi)) + extra_norm
    out: dict[tuple[int, ...], QHalf] = {}
    rng = range(-kappa, kappa + 1)
    for zeta in itertools.product(rng, repeat=n):
        if sum(zeta) != sum(xi):
            continue
        if not _block_dominant(zeta, blocks):
            continue
        c = constant_term_coefficient(xi, zeta, blocks, ctx)
        if not c.is_zero():
            out[tuple(zeta)] = c
    return out
