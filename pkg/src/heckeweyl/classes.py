"""Equivalence classes of GL_n(F) by characteristic polynomial.

A class is a monic degree-n polynomial over O_F (F imaginary quadratic).
Root multiplicities are decided exactly by gcd computations in F[x] before
any floating comparison; numeric roots only ever separate points already
known to be distinct.  |z|_C denotes the norm-normalised absolute value,
i.e. the square of the usual complex modulus.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadPlace, RootPrecisionLoss, ScaleExceeded
from .quadfield import (
    IdealRep,
    OFElem,
    QuadField,
    elements_of_norm_up_to,
    ideal_valuation,
    kronecker_symbol,
    split_prime,
)

# ---------------------------------------------------------------------------
# exact arithmetic in F and F[x]


@dataclass(frozen=True)
class FElem:
    """Element x + y*omega of F with rational x, y."""

    field: QuadField
    x: Fraction
    y: Fraction

    @staticmethod
    def of(z: OFElem) -> "FElem":
        return FElem(z.field, Fraction(z.a), Fraction(z.b))

    @staticmethod
    def rational(F: QuadField, q) -> "FElem":
        return FElem(F, Fraction(q), Fraction(0))

    def __add__(self, o):
        return FElem(self.field, self.x + o.x, self.y + o.y)

    def __sub__(self, o):
        return FElem(self.field, self.x - o.x, self.y - o.y)

    def __neg__(self):
        return FElem(self.field, -self.x, -self.y)

    def __mul__(self, o):
        F = self.field
        return FElem(
            F,
            self.x * o.x + self.y * o.y * F.r,
            self.x * o.y + self.y * o.x + self.y * o.y * F.s,
        )

    def conj(self) -> "FElem":
        return FElem(self.field, self.x + self.y * self.field.s, -self.y)

    def norm(self) -> Fraction:
        F = self.field
        return self.x * self.x + self.x * self.y * F.s - self.y * self.y * F.r

    def inverse(self) -> "FElem":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("zero element of F")
        c = self.conj()
        return FElem(self.field, c.x / n, c.y / n)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def embed(self) -> complex:
        return float(self.x) + float(self.y) * self.field.omega_complex

    def is_integral(self) -> bool:
        return self.x.denominator == 1 and self.y.denominator == 1

    def to_ofelem(self) -> OFElem:
        if not self.is_integral():
            raise ValueError("not integral")
        return OFElem(self.field, int(self.x), int(self.y))


def _poly_trim(c: list[FElem]) -> list[FElem]:
    while c and c[-1].is_zero():
        c.pop()
    return c


def poly_mul(a, b, F):
    out = [FElem.rational(F, 0)] * (len(a) + len(b) - 1) if a and b else []
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] = out[i + j] + ai * bj
    return _poly_trim(out)


def poly_sub(a, b, F):
    m = max(len(a), len(b))
    zero = FElem.rational(F, 0)
    out = [
        (a[i] if i < len(a) else zero) - (b[i] if i < len(b) else zero)
        for i in range(m)
    ]
    return _poly_trim(out)


def poly_divmod(a, b, F):
    """Division in F[x]; b need not be monic (leading coeff inverted)."""
    a = list(a)
    if not b:
        raise ZeroDivisionError
    inv_lead = b[-1].inverse()
    q = [FElem.rational(F, 0)] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        f = a[-1] * inv_lead
        shift = len(a) - len(b)
        q[shift] = q[shift] + f
        for i, bi in enumerate(b):
            a[shift + i] = a[shift + i] - f * bi
        a = _poly_trim(a)
    return _poly_trim(q), a


def poly_gcd(a, b, F):
    a, b = _poly_trim(list(a)), _poly_trim(list(b))
    while b:
        _, r = poly_divmod(a, b, F)
        a, b = b, r
    if a:
        inv = a[-1].inverse()
        a = [c * inv for c in a]
    return a


def poly_derivative(a, F):
    return _poly_trim(
        [a[i] * FElem.rational(F, i) for i in range(1, len(a))]
    )


def squarefree_decomposition(a, F):
    """Yun's algorithm: returns [(s_1, 1), (s_2, 2), ...] with a = prod s_j^j."""
    out = []
    d = poly_derivative(a, F)
    g = poly_gcd(a, d, F)
    w, _ = poly_divmod(a, g, F)
    y, _ = poly_divmod(d, g, F)
    j = 1
    while len(w) > 1:
        z = poly_sub(y, poly_derivative(w, F), F)
        s = poly_gcd(w, z, F)
        if len(s) > 1:
            out.append((s, j))
        w, _ = poly_divmod(w, s, F)
        y, _ = poly_divmod(z, s, F)
        j += 1
    return out


# ---------------------------------------------------------------------------
# characteristic polynomial classes


@dataclass(frozen=True)
class CharPolyClass:
    """Monic x^n + a_{n-1} x^{n-1} + ... + a_0 with a_i in O_F."""

    field: QuadField
    coeffs: tuple[OFElem, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def monic_list(self) -> list[FElem]:
        F = self.field
        return [FElem.of(c) for c in self.coeffs] + [FElem.rational(F, 1)]

    def eval_complex(self, z: complex) -> complex:
        out = 1.0 + 0.0j
        for c in reversed(self.coeffs):
            out = out * z + c.embed()
        return out

    def det_norm(self) -> int:
        """|det sigma|_C = N((-1)^n a_0)."""
        return self.coeffs[0].norm()

    def distinct_roots(self) -> list[tuple[complex, int]]:
        """(root, multiplicity) pairs; multiplicities exact via Yun."""
        F = self.field
        pairs = squarefree_decomposition(self.monic_list(), F)
        if not pairs:
            raise RootPrecisionLoss("degenerate polynomial")
        out = []
        for s, mult in pairs:
            roots = _refined_roots(s)
            out.extend((z, mult) for z in roots)
        total = sum(m for _, m in out)
        if total != self.degree:
            raise RootPrecisionLoss("multiplicity bookkeeping failed")
        self._verify_roots(out)
        return out

    def _verify_roots(self, pairs):
        prod_const = 1.0 + 0.0j
        for z, m in pairs:
            prod_const *= (-z) ** m
        target = self.coeffs[0].embed()
        scale = max(abs(target), 1.0)
        if abs(prod_const - target) > 1e-8 * scale:
            raise RootPrecisionLoss(
                f"roots reproduce a_0 to {abs(prod_const - target):.2e} only"
            )

    def __repr__(self):
        return f"CharPoly({self.coeffs})"


def _refined_roots(s, newton_steps: int = 3) -> list[complex]:
    """Roots of an exactly-squarefree polynomial, Newton-polished."""
    cs = np.array([c.embed() for c in s], dtype=complex)
    if len(cs) == 2:
        return [complex(-cs[0] / cs[1])]
    monic = cs / cs[-1]
    roots = np.roots(monic[::-1])
    der = np.polyder(np.poly1d(monic[::-1]))
    pol = np.poly1d(monic[::-1])
    for _ in range(newton_steps):
        dv = der(roots)
        dv[np.abs(dv) < 1e-300] = 1.0
        roots = roots - pol(roots) / dv
    if len(roots) > 1:
        gap = min(
            abs(roots[i] - roots[j])
            for i in range(len(roots))
            for j in range(i + 1, len(roots))
        )
        scale = max(1.0, np.abs(roots).max())
        if gap < 1e-7 * scale:
            raise RootPrecisionLoss(
                "root cluster ambiguous after exact multiplicity split"
            )
    return [complex(z) for z in roots]


def enumerate_classes(
    n: int,
    F: QuadField,
    pi_kappa: int,
    c_r: float = 1.0,
    include_singular: bool = False,
):
    """All monic degree-n polynomials over O_F with N(a_i) <= c_r * pi_kappa.

    Classes with a_0 = 0 are rejected unless include_singular (they are not
    invertible semisimple classes).  Yields CharPolyClass.
    """
    bound = int(math.floor(c_r * pi_kappa))
    if bound > 10 ** 4:
        raise ScaleExceeded("bound C_R * Pi_kappa <= 1e4")
    cands = elements_of_norm_up_to(F, bound)
    for combo in itertools.product(cands, repeat=n):
        if not include_singular and combo[0].is_zero():
            continue
        yield CharPolyClass(F, tuple(combo))


def count_classes(n: int, F: QuadField, bound: int) -> int:
    cands = len(elements_of_norm_up_to(F, bound))
    return (cands - 1) * cands ** (n - 1)


# ---------------------------------------------------------------------------
# invariants of a class


def _ratio_pairs(chi: CharPolyClass):
    pairs = chi.distinct_roots()
    for (zu, mu), (zv, mv) in itertools.permutations(pairs, 2):
        yield zu, zv, mu * mv


def weyl_discriminant(chi: CharPolyClass) -> float:
    """|det(1 - Ad(sigma); g/g_sigma)|_C: product of |1 - z_u/z_v|_C over
    ordered pairs of distinct eigenvalues, with multiplicity exponents."""
    out = 1.0
    for zu, zv, e in _ratio_pairs(chi):
        out *= abs(1 - zu / zv) ** (2 * e)
    return out


def delta_minus(chi: CharPolyClass) -> float:
    """prod max{1, |1 - z_u/z_v|_C^{-1}} over ordered pairs of distinct
    eigenvalues (symmetrised over both orders, hence relabeling-invariant)."""
    out = 1.0
    for zu, zv, e in _ratio_pairs(chi):
        out *= max(1.0, abs(1 - zu / zv) ** (-2)) ** e
    return out


def eigenvalue_abs_values(chi: CharPolyClass) -> list[float]:
    """|z_i|_C with multiplicity."""
    out = []
    for z, m in chi.distinct_roots():
        out.extend([abs(z) ** 2] * m)
    return out


def is_almost_unipotent(chi: CharPolyClass, tol: float = 1e-9) -> bool:
    """True iff all eigenvalues share one absolute value (within tol*scale)."""
    vals = eigenvalue_abs_values(chi)
    scale = max(max(vals), 1.0)
    return max(vals) - min(vals) <= tol * scale


def is_almost_unipotent_robust(chi: CharPolyClass) -> bool:
    """Integer-gap classification: the extremal Galois orbit's product
    prod (|z|_C^n - |det|_C) is a rational integer, so it is either 0
    (almost unipotent) or at least 1 in absolute value."""
    n = chi.degree
    det_c = chi.det_norm()
    vals = eigenvalue_abs_values(chi)
    prods = []
    for factor, mult in factor_over_field(chi):
        emb = [z for z, _ in _factor_roots(factor, chi.field)]
        prods.append(np.prod([abs(z) ** (2 * n) - det_c for z in emb]))
    top = max(vals)
    for prod, (factor, _) in zip(prods, factor_over_field(chi)):
        emb = [abs(z) ** 2 for z, _ in _factor_roots(factor, chi.field)]
        if any(abs(v - top) <= 1e-6 * max(top, 1.0) for v in emb):
            return bool(abs(prod) < 0.5)
    raise RootPrecisionLoss("no orbit carries the extremal eigenvalue")


@dataclass(frozen=True)
class SpacingReport:
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def ok(self) -> bool:
        return self.margin >= -1e-12


def spacing_lower_bound_check(chi: CharPolyClass) -> SpacingReport:
    """|det|_C^{-1/2n} sqrt(sum |z_i|_C / n) >= 1 + |z_max|_C^{-2n-4}/(8 n^2).

    Precondition: integral coefficients and two eigenvalues of distinct
    absolute value (i.e. not almost unipotent).
    """
    n = chi.degree
    vals = eigenvalue_abs_values(chi)
    if is_almost_unipotent(chi):
        raise ValueError("class is almost unipotent; lower bound not claimed")
    det_c = chi.det_norm()
    lhs = det_c ** (-1.0 / (2 * n)) * math.sqrt(sum(vals) / n)
    rhs = 1.0 + max(vals) ** (-(2 * n + 4) / 2.0 * 2 / 2) / (8 * n * n)
    rhs = 1.0 + (1.0 / (8 * n * n)) * max(vals) ** (-(n + 2))
    return SpacingReport(lhs, rhs)


# ---------------------------------------------------------------------------
# exact factorisation over F and based root data


def _nearest_integral(F: QuadField, z: complex) -> OFElem:
    w = F.omega_complex
    b = round(z.imag / w.imag)
    a = round(z.real - b * w.real)
    return OFElem(F, int(a), int(b))


def _factor_roots(factor: tuple[OFElem, ...], F: QuadField):
    chi = CharPolyClass(F, factor)
    return chi.distinct_roots()


def factor_over_field(chi: CharPolyClass) -> list[tuple[tuple[OFElem, ...], int]]:
    """Irreducible monic factors over F with multiplicities.

    Factors of each squarefree part are found by rounding elementary
    symmetric functions of root subsets to O_F and verifying the division
    exactly; monic factors of monic integral polynomials are integral, so
    the rounding target is the full coefficient lattice.
    """
    F = chi.field
    if chi.degree > 4:
        raise ScaleExceeded("global factorisation implemented for n <= 4")
    out: list[tuple[tuple[OFElem, ...], int]] = []
    for s, mult in squarefree_decomposition(chi.monic_list(), F):
        for factor in _factor_squarefree(s, F):
            out.append((factor, mult))
    return out


def _factor_squarefree(s, F: QuadField) -> list[tuple[OFElem, ...]]:
    deg = len(s) - 1
    if deg == 0:
        return []
    roots = _refined_roots(s)
    for d in range(1, deg):
        for subset in itertools.combinations(roots, d):
            cand = _round_poly_from_roots(subset, F)
            if cand is None:
                continue
            cand_poly = [FElem.of(c) for c in cand] + [FElem.rational(F, 1)]
            q, r = poly_divmod(s, cand_poly, F)
            if not r and all(c.is_integral() for c in q):
                rest = tuple(c.to_ofelem() for c in q[:-1])
                return [tuple(cand)] + _factor_squarefree(
                    [FElem.of(c) for c in rest] + [FElem.rational(F, 1)], F
                )
    return [tuple(_round_exact_coeffs(s))]


def _round_poly_from_roots(subset, F: QuadField):
    coeffs = np.poly(np.array(subset))[::-1][:-1]  # a_0 .. a_{d-1}
    out = []
    for c in coeffs:
        cand = _nearest_integral(F, complex(c))
        if abs(cand.embed() - c) > 1e-6 * max(1.0, abs(c)):
            return None
        out.append(cand)
    return out


def _round_exact_coeffs(s) -> list[OFElem]:
    out = []
    for c in s[:-1]:
        if not c.is_integral():
            raise RootPrecisionLoss("irreducible factor not integral")
        out.append(c.to_ofelem())
    return out


@dataclass(frozen=True)
class BasedRootDatumClass:
    """Multiset of (field-factor degree, multiplicity, conjugacy tag)."""

    factors: tuple[tuple[int, int, tuple], ...]

    @staticmethod
    def of(items) -> "BasedRootDatumClass":
        return BasedRootDatumClass(tuple(sorted(items)))

    @property
    def dimension(self) -> int:
        return sum(d * m for d, m, _ in self.factors)

    def degree_multiset(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted((d, m) for d, m, _ in self.factors))


def _poly_disc_norm(factor: tuple[OFElem, ...], F: QuadField) -> int:
    """|disc|_C of the monic integral polynomial (conjugacy-invariant tag)."""
    chi = CharPolyClass(F, factor)
    roots = []
    for z, m in chi.distinct_roots():
        roots.extend([z] * m)
    disc = 1.0 + 0.0j
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            disc *= (roots[i] - roots[j]) ** 2
    return int(round(abs(disc) ** 2)) if roots else 1


def omega_brd(
    chi: CharPolyClass, completion: int | None = None, place: int = 0
) -> BasedRootDatumClass:
    """Based-root-datum class of the centraliser of a semisimple element.

    Global (completion None): factor chi over F; each irreducible factor
    chi_i of degree d_i with multiplicity m_i contributes (d_i, m_i).
    Local (completion = p, unramified good prime): each chi_i is factored
    over the residue field of F at the chosen place above p; every local
    factor of degree f contributes (f, m_i).
    """
    F = chi.field
    if chi.degree > 4:
        raise ScaleExceeded("n <= 4")
    factors = factor_over_field(chi)
    if completion is None:
        items = []
        for fac, m in factors:
            d = len(fac)
            tag = ("global", d, _poly_disc_norm(fac, F))
            items.append((d, m, tag))
        return BasedRootDatumClass.of(items)
    p = completion
    _check_good_place(chi, factors, p)
    field_desc = _residue_field(F, p, place)
    items = []
    seen = []
    for fac, m in factors:
        red = _reduce_poly(fac, field_desc)
        for other in seen:
            if _gf_poly_gcd(red, other, field_desc)[1:]:
                raise BadPlace("factors collide modulo the chosen place")
        seen.append(red)
        for f, count in _distinct_degree_profile(red, field_desc):
            for _ in range(count):
                items.append((f, m, ("unram", f)))
    return BasedRootDatumClass.of(items)


def _check_good_place(chi: CharPolyClass, factors, p: int):
    F = chi.field
    if kronecker_symbol(F.D, p) == 0:
        raise BadPlace(f"p={p} ramifies in F")
    for fac, _ in factors:
        if len(fac) >= 2:
            dn = _poly_disc_norm(fac, F)
            if dn % p == 0:
                raise BadPlace(f"p={p} divides disc of a factor")


# residue fields: q = p (split/deg-1 residue) or q = p^2 (inert), elements
# are ints mod p or pairs mod the minimal polynomial of omega


def _residue_field(F: QuadField, p: int, place: int = 0):
    chi = kronecker_symbol(F.D, p)
    if chi == -1:
        return ("inert", p, F.s % p, F.r % p)
    roots = sorted(
        r for r in range(p) if (r * r - F.s * r - F.r) % p == 0
    )
    return ("split", p, roots[min(place, len(roots) - 1)])


def _reduce_elem(z: OFElem, desc):
    if desc[0] == "split":
        _, p, r = desc
        return (z.a + z.b * r) % p
    _, p, _, _ = desc
    return (z.a % p, z.b % p)


def _gf_zero(desc):
    return 0 if desc[0] == "split" else (0, 0)


def _gf_one(desc):
    return 1 if desc[0] == "split" else (1, 0)


def _gf_add(a, b, desc):
    if desc[0] == "split":
        return (a + b) % desc[1]
    p = desc[1]
    return ((a[0] + b[0]) % p, (a[1] + b[1]) % p)


def _gf_neg(a, desc):
    if desc[0] == "split":
        return (-a) % desc[1]
    p = desc[1]
    return ((-a[0]) % p, (-a[1]) % p)


def _gf_mul(a, b, desc):
    if desc[0] == "split":
        return (a * b) % desc[1]
    _, p, s, r = desc
    # (a0 + a1 w)(b0 + b1 w) with w^2 = s w + r
    c0 = a[0] * b[0] + a[1] * b[1] * r
    c1 = a[0] * b[1] + a[1] * b[0] + a[1] * b[1] * s
    return (c0 % p, c1 % p)


def _gf_inv(a, desc):
    if desc[0] == "split":
        return pow(a, desc[1] - 2, desc[1])
    _, p, s, r = desc
    # conj(a) = a0 + a1 s - a1 w ; N(a) = a conj(a) in F_p
    conj = ((a[0] + a[1] * s) % p, (-a[1]) % p)
    nrm = (a[0] * conj[0] + a[1] * conj[1] * r) % p
    ninv = pow(nrm, p - 2, p)
    return ((conj[0] * ninv) % p, (conj[1] * ninv) % p)


def _gf_is_zero(a, desc):
    return a == _gf_zero(desc)


def _reduce_poly(fac: tuple[OFElem, ...], desc):
    F = fac[0].field if fac else None
    coeffs = [_reduce_elem(c, desc) for c in fac] + [_gf_one(desc)]
    return coeffs


def _gf_poly_trim(a, desc):
    while a and _gf_is_zero(a[-1], desc):
        a.pop()
    return a


def _gf_poly_divmod(a, b, desc):
    a = list(a)
    inv = _gf_inv(b[-1], desc)
    while len(a) >= len(b) and a:
        f = _gf_mul(a[-1], inv, desc)
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = _gf_add(
                a[shift + i], _gf_neg(_gf_mul(f, bi, desc), desc), desc
            )
        a = _gf_poly_trim(a, desc)
    return a


def _gf_poly_gcd(a, b, desc):
    a = _gf_poly_trim(list(a), desc)
    b = _gf_poly_trim(list(b), desc)
    while b:
        r = _gf_poly_divmod(a, b, desc)
        a, b = b, r
    if a:
        inv = _gf_inv(a[-1], desc)
        a = [_gf_mul(c, inv, desc) for c in a]
    return a


def _gf_poly_mulmod(a, b, mod, desc):
    out = [_gf_zero(desc)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if _gf_is_zero(ai, desc):
            continue
        for j, bj in enumerate(b):
            out[i + j] = _gf_add(out[i + j], _gf_mul(ai, bj, desc), desc)
    out = _gf_poly_trim(out, desc)
    if len(out) >= len(mod):
        q = _gf_poly_divmod(out, mod, desc)
        out = q
    return out


def _gf_frobenius_power(mod, q: int, desc):
    """x^q mod the given polynomial by square-and-multiply."""
    result = [_gf_zero(desc), _gf_one(desc)]  # x
    out = [_gf_one(desc)]
    base = result
    e = q
    while e:
        if e & 1:
            out = _gf_poly_mulmod(out, base, mod, desc)
        base = _gf_poly_mulmod(base, base, mod, desc)
        e >>= 1
    return out


def _distinct_degree_profile(poly, desc) -> list[tuple[int, int]]:
    """[(degree, count)] of irreducible factors of a squarefree polynomial."""
    q = desc[1] if desc[0] == "split" else desc[1] ** 2
    work = list(poly)
    out = []
    d = 1
    frob = [_gf_zero(desc), _gf_one(desc)]  # will hold x^{q^d} mod work
    while len(work) - 1 >= 1:
        if d > len(work) - 1:
            raise RootPrecisionLoss("distinct-degree loop overran")
        frob = _gf_frobenius_power_iterate(work, q, d, desc)
        diff = _gf_poly_sub(frob, [_gf_zero(desc), _gf_one(desc)], desc)
        g = _gf_poly_gcd(work, diff, desc)
        if len(g) > 1:
            deg = len(g) - 1
            if deg % d != 0:
                raise RootPrecisionLoss("inconsistent distinct-degree split")
            out.append((d, deg // d))
            work = _gf_poly_quotient(work, g, desc)
        d += 1
    return out


def _gf_poly_sub(a, b, desc):
    m = max(len(a), len(b))
    zero = _gf_zero(desc)
    out = []
    for i in range(m):
        ai = a[i] if i < len(a) else zero
        bi = b[i] if i < len(b) else zero
        out.append(_gf_add(ai, _gf_neg(bi, desc), desc))
    return _gf_poly_trim(out, desc)


def _gf_poly_quotient(a, b, desc):
    a = list(a)
    inv = _gf_inv(b[-1], desc)
    q = [_gf_zero(desc)] * (len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        f = _gf_mul(a[-1], inv, desc)
        shift = len(a) - len(b)
        q[shift] = f
        for i, bi in enumerate(b):
            a[shift + i] = _gf_add(
                a[shift + i], _gf_neg(_gf_mul(f, bi, desc), desc), desc
            )
        a = _gf_poly_trim(a, desc)
    return q


def _gf_frobenius_power_iterate(mod, q: int, d: int, desc):
    out = [_gf_zero(desc), _gf_one(desc)]
    for _ in range(d):
        out = _gf_power_q(out, mod, q, desc)
    return out


def _gf_power_q(poly, mod, q: int, desc):
    out = [_gf_one(desc)]
    base = list(poly)
    e = q
    while e:
        if e & 1:
            out = _gf_poly_mulmod(out, base, mod, desc)
        base = _gf_poly_mulmod(base, base, mod, desc)
        e >>= 1
    return out


def local_factorization_profile(chi: CharPolyClass, p: int, place: int = 0):
    """Independent route: degrees-with-multiplicity of chi mod the place.

    Multiplicities are recovered by repeated gcd-removal, so this route
    never consults the global factorisation (functorial-square oracle).
    """
    F = chi.field
    if kronecker_symbol(F.D, p) == 0:
        raise BadPlace(f"p={p} ramifies in F")
    desc = _residue_field(F, p, place)
    red = [_reduce_elem(c, desc) for c in chi.coeffs] + [_gf_one(desc)]
    red = _gf_poly_trim(list(red), desc)
    if len(red) - 1 != chi.degree:
        raise BadPlace("leading coefficient degenerates")
    items = []
    mult = 1
    work = red
    while len(work) > 1:
        deriv = _gf_poly_derivative(work, desc)
        if not deriv:
            raise BadPlace("inseparable reduction")
        sqfree = _gf_poly_quotient(work, _gf_poly_gcd(work, deriv, desc), desc)
        for f, count in _distinct_degree_profile(sqfree, desc):
            for _ in range(count):
                items.append((f, mult, ("unram", f)))
        work = _gf_poly_quotient_full(work, sqfree, desc)
        mult += 1
    # merge equal factors appearing at several multiplicity layers:
    # each irreducible factor of multiplicity m was recorded once per layer
    # 1..m; keep only the top layer per (degree, residue count) bookkeeping.
    return _merge_multiplicity_layers(items)


def _gf_poly_derivative(a, desc):
    p = desc[1]
    out = []
    for i in range(1, len(a)):
        k = i % p
        scal = k if desc[0] == "split" else (k, 0)
        out.append(_gf_mul(a[i], scal, desc))
    return _gf_poly_trim(out, desc)


def _gf_poly_quotient_full(a, b, desc):
    q = _gf_poly_quotient(list(a), b, desc)
    return _gf_poly_trim(q, desc)


def _merge_multiplicity_layers(items):
    """Layered squarefree output lists a factor of multiplicity m once per
    layer j <= m; the true multiset keeps the maximal layer count."""
    by_degree: dict[int, list[int]] = {}
    for d, layer, _ in items:
        by_degree.setdefault(d, []).append(layer)
    out = []
    for d, layers in by_degree.items():
        layers.sort(reverse=True)
        consumed: list[int] = []
        for m in layers:
            matched = False
            for k in range(len(consumed)):
                pass
            if not matched:
                consumed.append(m)
        # count how many factors of each multiplicity: a factor with
        # multiplicity m contributes layers 1..m, so reading sorted layers
        # greedily reconstructs the multiset
        counts: dict[int, int] = {}
        remaining: dict[int, int] = {}
        for m in layers:
            remaining[m] = remaining.get(m, 0) + 1
        for m in sorted(remaining, reverse=True):
            while remaining.get(m, 0) > 0:
                counts[m] = counts.get(m, 0) + 1
                for j in range(1, m + 1):
                    remaining[j] = remaining.get(j, 0) - 1
        for m, cnt in counts.items():
            for _ in range(cnt):
                out.append((d, m, ("unram", d)))
    return BasedRootDatumClass.of(out)


# ---------------------------------------------------------------------------
# Newton polygons at a finite place


def element_valuation(z: OFElem, P: IdealRep) -> int:
    if z.is_zero():
        raise ValueError("valuation of zero")
    return ideal_valuation(
        IdealRep.from_generators([z], z.field), P
    )


def newton_valuations(chi: CharPolyClass, p: int, place: int = 0):
    """Root valuations at the place above p from the Newton polygon."""
    F = chi.field
    P = split_prime(F, p)[0 if place == 0 else -1][0]
    pts = []
    for i, c in enumerate(chi.coeffs):
        if not c.is_zero():
            pts.append((i, element_valuation(c, P)))
    pts.append((chi.degree, 0))
    hull = _lower_hull(pts)
    out = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y2 - y1, x2 - x1)
        out.extend([-slope] * (x2 - x1))
    return out


def _lower_hull(pts):
    pts = sorted(pts)
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def valuation_range_check(chi: CharPolyClass, p: int) -> bool:
    """Newton slopes lie in the window [-kappa, kappa] with kappa the
    valuation of a_0 (the integral-class analogue of the norm bound)."""
    F = chi.field
    if kronecker_symbol(F.D, p) == 0:
        return True
    P = split_prime(F, p)[0][0]
    kappa = element_valuation(chi.coeffs[0], P) if not chi.coeffs[0].is_zero() else 0
    vals = newton_valuations(chi, p)
    return all(-kappa <= v <= kappa for v in vals)


def class_record(chi: CharPolyClass, bound: int) -> dict:
    """JSON-lines record for the enumeration stream."""
    brd = omega_brd(chi)
    return {
        "coeffs": [[c.a, c.b] for c in chi.coeffs],
        "bound": bound,
        "weyl_disc": weyl_discriminant(chi),
        "delta_minus": delta_minus(chi),
        "almost_unipotent": is_almost_unipotent(chi),
        "brd": sorted((d, m) for d, m, _ in brd.factors),
    }
