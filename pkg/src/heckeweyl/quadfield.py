"""Exact arithmetic in an imaginary quadratic field F = Q(sqrt(D)).

Only fundamental discriminants D < 0 are accepted (the maximal order).
Integers are a + b*omega with omega = (s + sqrt(D))/2, where s = D mod 2,
so omega^2 = s*omega + r with r = (D - s)/4.  The archimedean absolute
value |z|_C is the rational norm N(z) = a^2 + a b s - b^2 r.

The class group is realised on reduced binary quadratic forms; composition
goes through exact ideal multiplication, which is less error-prone than
coefficient-level Gaussian composition and doubles as its own oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.special

from .errors import FactorizationTooLarge, ScaleExceeded


def _squarefree(m: int) -> bool:
    m = abs(m)
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        while m % d == 0:
            m //= d
        d += 1
    return True


def is_fundamental_discriminant(D: int) -> bool:
    if D >= 0:
        return False
    if D % 4 == 1:
        return _squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


@dataclass(frozen=True)
class QuadField:
    D: int

    def __post_init__(self):
        if not is_fundamental_discriminant(self.D):
            raise ValueError(f"{self.D} is not a fundamental discriminant < 0")

    @property
    def s(self) -> int:
        return self.D % 2

    @property
    def r(self) -> int:
        return (self.D - self.s) // 4

    @property
    def omega_complex(self) -> complex:
        return (self.s + 1j * math.sqrt(abs(self.D))) / 2.0

    def element(self, a: int, b: int = 0) -> "OFElem":
        return OFElem(self, int(a), int(b))


@dataclass(frozen=True)
class OFElem:
    """a + b*omega in the ring of integers of F."""

    field: QuadField
    a: int
    b: int

    def __add__(self, other: "OFElem") -> "OFElem":
        return OFElem(self.field, self.a + other.a, self.b + other.b)

    def __sub__(self, other: "OFElem") -> "OFElem":
        return OFElem(self.field, self.a - other.a, self.b - other.b)

    def __neg__(self) -> "OFElem":
        return OFElem(self.field, -self.a, -self.b)

    def __mul__(self, other: "OFElem") -> "OFElem":
        F = self.field
        a, b, c, d = self.a, self.b, other.a, other.b
        return OFElem(F, a * c + b * d * F.r, a * d + b * c + b * d * F.s)

    def conj(self) -> "OFElem":
        return OFElem(self.field, self.a + self.b * self.field.s, -self.b)

    def norm(self) -> int:
        F = self.field
        return self.a * self.a + self.a * self.b * F.s - self.b * self.b * F.r

    def trace(self) -> int:
        return 2 * self.a + self.b * self.field.s

    def embed(self) -> complex:
        return self.a + self.b * self.field.omega_complex

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __repr__(self):
        return f"({self.a}+{self.b}w)"


def unit_count(F: QuadField) -> int:
    """nu_F: 4 for Q(i), 6 for Q(sqrt(-3)), else 2."""
    if F.D == -4:
        return 4
    if F.D == -3:
        return 6
    return 2


def elements_of_norm_up_to(F: QuadField, bound: int) -> list[OFElem]:
    """All integers with N(z) <= bound (lattice points in a disk)."""
    out = []
    if bound < 0:
        return out
    w_im = abs(F.omega_complex.imag)
    bmax = int(math.isqrt(int(bound / (w_im ** 2))) + 2)
    for b in range(-bmax, bmax + 1):
        # N = (a + b s/2)^2 + b^2 |D|/4 : solve for a range
        rad = bound - b * b * abs(F.D) / 4.0
        if rad < 0:
            continue
        centre = -b * F.s / 2.0
        lo = math.ceil(centre - math.sqrt(rad) - 1e-9)
        hi = math.floor(centre + math.sqrt(rad) + 1e-9)
        for a in range(lo, hi + 1):
            z = F.element(a, b)
            if z.norm() <= bound:
                out.append(z)
    return out


# ---------------------------------------------------------------------------
# binary quadratic forms


@dataclass(frozen=True)
class BinaryForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def reduced(self) -> "BinaryForm":
        a, b, c = self.a, self.b, self.c
        while True:
            if c < a:
                a, b, c = c, -b, a
                continue
            if b > a or b <= -a:
                # normalise b into (-a, a]
                t = (a - b) // (2 * a)
                b2 = b + 2 * t * a
                c2 = (b2 * b2 - self.disc) // (4 * a)
                b, c = b2, c2
                continue
            break
        if a == c and b < 0:
            b = -b
        return BinaryForm(a, b, c)


def principal_form(D: int) -> BinaryForm:
    k = D & 1
    return BinaryForm(1, k, (k * k - D) // 4)


def class_group(F: QuadField) -> list[BinaryForm]:
    """All reduced forms of discriminant D; the class number is the count."""
    D = F.D
    if abs(D) > 10 ** 6:
        raise ScaleExceeded("|D| <= 1e6 at desk scale")
    out = []
    bmax = math.isqrt(abs(D) // 3)
    for b in range(-bmax, bmax + 1):
        if (b - D) % 2 != 0:
            continue
        m = b * b - D
        if m % 4 != 0:
            continue
        ac = m // 4
        a = max(abs(b), 1)
        while a * a <= ac:
            if a >= 1 and ac % a == 0:
                c = ac // a
                f = BinaryForm(a, b, c)
                if abs(b) <= a <= c and not (b < 0 and (abs(b) == a or a == c)):
                    out.append(f)
            a += 1
    return sorted(out, key=lambda f: (f.a, f.b, f.c))


def class_number(F: QuadField) -> int:
    return len(class_group(F))


# ---------------------------------------------------------------------------
# ideals


@dataclass(frozen=True)
class IdealRep:
    """Nonzero ideal as a 2x2 Hermite basis over Z in the basis (1, omega):
    columns (a, 0) and (b, d) with d | a, 0 <= b < a."""

    field: QuadField
    a: int
    b: int
    d: int

    @staticmethod
    def from_generators(gens, F: QuadField | None = None) -> "IdealRep":
        gens = list(gens)
        if F is None:
            F = gens[0].field
        omega = F.element(0, 1)
        vecs = []
        for g in gens:
            if isinstance(g, int):
                g = F.element(g)
            if not g.is_zero():
                vecs.append((g.a, g.b))
                go = g * omega
                vecs.append((go.a, go.b))
        if not vecs:
            raise ValueError("zero ideal")
        a, b, d = _hnf_2d(vecs)
        return IdealRep(F, a, b, d)

    @staticmethod
    def unit_ideal(F: QuadField) -> "IdealRep":
        return IdealRep(F, 1, 0, 1)

    def norm(self) -> int:
        return self.a * self.d

    def gens(self) -> tuple[OFElem, OFElem]:
        F = self.field
        return F.element(self.a, 0), F.element(self.b, self.d)

    def contains(self, z: OFElem) -> bool:
        if z.b % self.d != 0:
            return False
        return (z.a - (z.b // self.d) * self.b) % self.a == 0

    def subset_of(self, other: "IdealRep") -> bool:
        g1, g2 = self.gens()
        return other.contains(g1) and other.contains(g2)

    def __mul__(self, other: "IdealRep") -> "IdealRep":
        g1, g2 = self.gens()
        h1, h2 = other.gens()
        return IdealRep.from_generators(
            [g1 * h1, g1 * h2, g2 * h1, g2 * h2], self.field
        )

    def power(self, k: int) -> "IdealRep":
        out = IdealRep.unit_ideal(self.field)
        base = self
        while k > 0:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def to_form(self) -> BinaryForm:
        """Norm form N(x*alpha + y*beta)/N(I); discriminant D, reduced."""
        alpha, beta = self.gens()
        nrm = self.norm()
        A = alpha.norm() // nrm
        C = beta.norm() // nrm
        tr = (alpha * beta.conj()).trace()
        if tr % nrm != 0:
            raise ArithmeticError("ideal form is not integral")
        B = tr // nrm
        f = BinaryForm(A, B, C)
        if f.disc != self.field.D:
            raise ArithmeticError("ideal form has wrong discriminant")
        return f.reduced()

    def is_principal(self) -> bool:
        return self.to_form() == principal_form(self.field.D)

    def form_class(self) -> BinaryForm:
        return self.to_form()


def _hnf_2d(vecs) -> tuple[int, int, int]:
    """Hermite form of the Z-module generated by (x, y) pairs."""
    d = 0
    carrier = None
    for x, y in vecs:
        if y == 0:
            continue
        if carrier is None:
            carrier = (x, y) if y > 0 else (-x, -y)
            d = carrier[1]
            continue
        g, u, v = _xgcd(carrier[1], y)
        carrier = (u * carrier[0] + v * x, g)
        d = g
    xs = []
    for x, y in vecs:
        if d:
            x = x - (y // d) * carrier[0] if y % d == 0 else x
            if y % d != 0:
                raise ArithmeticError("HNF bookkeeping failed")
        xs.append(x)
    a = 0
    for x in xs:
        a = math.gcd(a, x)
    if a == 0 or d == 0:
        raise ValueError("module has rank < 2, not an ideal")
    b = carrier[0] % a
    return a, b, d


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def compose(f1: BinaryForm, f2: BinaryForm, F: QuadField) -> BinaryForm:
    """Class-group law through ideal multiplication."""
    return (_form_to_ideal(f1, F) * _form_to_ideal(f2, F)).to_form()


def _form_to_ideal(f: BinaryForm, F: QuadField) -> IdealRep:
    # (a, b, c) <-> [a, (-b + sqrt(D))/2] = [a, (-b - s)/2 + omega]
    x = (-f.b - F.s) // 2
    return IdealRep.from_generators([F.element(f.a, 0), F.element(x, 1)], F)


# ---------------------------------------------------------------------------
# prime splitting and the n-th power indicator


def kronecker_symbol(D: int, p: int) -> int:
    if p == 2:
        if D % 2 == 0:
            return 0
        return 1 if D % 8 == 1 else -1
    if D % p == 0:
        return 0
    t = pow(D % p, (p - 1) // 2, p)
    return 1 if t == 1 else -1


def split_prime(F: QuadField, p: int) -> list[tuple[IdealRep, int]]:
    """Prime ideals above p as (ideal, residue degree f) pairs."""
    chi = kronecker_symbol(F.D, p)
    if chi == -1:
        return [(IdealRep.from_generators([F.element(p)], F), 2)]
    roots = [
        r for r in range(p)
        if (r * r - F.s * r - F.r) % p == 0
    ]
    if chi == 0:
        r = roots[0]
        P = IdealRep.from_generators([F.element(p), F.element(-r, 1)], F)
        return [(P, 1)]
    out = []
    for r in roots:
        P = IdealRep.from_generators([F.element(p), F.element(-r, 1)], F)
        out.append((P, 1))
    if len(out) == 1:
        raise ArithmeticError("split prime must have two roots")
    return out


def ideal_valuation(I: IdealRep, P: IdealRep) -> int:
    v = 0
    Pk = P
    while I.subset_of(Pk):
        v += 1
        Pk = Pk * P
        if v > 64:
            raise ArithmeticError("runaway valuation")
    return v


def factor_ideal(I: IdealRep) -> list[tuple[IdealRep, int]]:
    """Prime-ideal factorisation via the norm (trial division)."""
    F = I.field
    n = I.norm()
    out = []
    for p in _trial_factor(n):
        for P, f in split_prime(F, p):
            v = ideal_valuation(I, P)
            if v:
                out.append((P, v))
    return out


def _trial_factor(n: int) -> list[int]:
    if n > 10 ** 12:
        raise FactorizationTooLarge("ideal norm exceeds trial-division range")
    ps = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            ps.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        ps.append(n)
    return ps


def delta_n(a: IdealRep, n: int, F: QuadField) -> int:
    """1 iff a = b^n for a principal ideal b, else 0."""
    if a.norm() == 1:
        return 1
    fac = factor_ideal(a)
    check = IdealRep.unit_ideal(F)
    root = IdealRep.unit_ideal(F)
    for P, v in fac:
        if v % n != 0:
            return 0
        root = root * P.power(v // n)
        check = check * P.power(v)
    if (check.a, check.b, check.d) != (a.a, a.b, a.d):
        raise ArithmeticError("factorisation failed to reproduce the ideal")
    return 1 if root.is_principal() else 0


# ---------------------------------------------------------------------------
# zeta data and the Tamagawa-style volume


@lru_cache(maxsize=64)
def _l_series(D: int, k: int, tol: float = 1e-12) -> float:
    """L(k, chi_D) by direct series over full periods of the character."""
    period = abs(D)
    chi = np.array([kronecker_symbol(D, 1) for _ in range(0)])
    chars = np.array([_chi_value(D, m) for m in range(1, period + 1)], dtype=float)
    total = 0.0
    stable = 0
    block = 0
    while stable < 2 and block < 5000:
        ms = np.arange(block * period + 1, (block + 1) * period + 1, dtype=float)
        contrib = float(np.sum(chars / ms ** k))
        total += contrib
        if abs(contrib) < tol * max(abs(total), 1e-3):
            stable += 1
        else:
            stable = 0
        block += 1
    return total


def _chi_value(D: int, m: int) -> int:
    """chi_D(m) as a completely multiplicative function of m."""
    out = 1
    for p in _trial_factor(m) if m > 1 else []:
        mm = m
        e = 0
        while mm % p == 0:
            mm //= p
            e += 1
        out *= kronecker_symbol(D, p) ** e
    return out


def zeta_data(F: QuadField, kmax: int) -> tuple[float, list[float]]:
    """(residue of zeta_F at 1, [zeta_F(2), ..., zeta_F(kmax)]).

    residue = 2 pi h / (w sqrt(|D|)); zeta_F(k) = zeta(k) L(k, chi_D).
    """
    if kmax > 6:
        raise ScaleExceeded("kmax <= 6")
    h = class_number(F)
    w = unit_count(F)
    residue = 2 * math.pi * h / (w * math.sqrt(abs(F.D)))
    values = [
        float(scipy.special.zeta(k, 1)) * _l_series(F.D, k)
        for k in range(2, kmax + 1)
    ]
    return residue, values


def vol_GFGA1(n: int, F: QuadField) -> float:
    """vol(G(F)\\G(A)^1) = |D|^{n(n-1)/4} res_{s=1} zeta_F * prod_{k=2}^n zeta_F(k)."""
    if n > 4:
        raise ScaleExceeded("n <= 4")
    residue, values = zeta_data(F, max(n, 2))
    out = abs(F.D) ** (n * (n - 1) / 4.0) * residue
    for k in range(2, n + 1):
        out *= values[k - 2]
    return out
