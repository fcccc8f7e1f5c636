"""Type A_{n-1} root-system and Weyl-group combinatorics.

Conventions: the (co)weight spaces are identified with R^n coordinate-wise.
Characters act on cocharacters by the plain coordinate pairing
``lam(X) = sum(lam_i * X_i)``; the Killing-normalised inner product carries
the extra factor 2n and is only used where it is written explicitly.
The Weyl group is S_n acting by coordinate permutations and is never
materialised as matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


@dataclass(frozen=True)
class RootSystem:
    """The A_{n-1} root data for GL_n."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("rank parameter n must be >= 1")

    @property
    def positive_roots(self) -> list[tuple[int, int]]:
        """Index pairs (i, j), i < j, encoding alpha = e_i - e_j."""
        n = self.n
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    @property
    def simple_roots(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(self.n - 1)]

    @property
    def rho(self) -> tuple[Fraction, ...]:
        """Half-sum of positive roots: ((n-1)/2, (n-3)/2, ..., -(n-1)/2)."""
        n = self.n
        return tuple(Fraction(n - 1 - 2 * i, 2) for i in range(n))

    def weyl_order(self) -> int:
        out = 1
        for k in range(2, self.n + 1):
            out *= k
        return out


def inner(X: Sequence, Y: Sequence):
    """Killing-form inner product <X, Y> = 2n (X_1 Y_1 + ... + X_n Y_n)."""
    if len(X) != len(Y):
        raise ValueError(f"length mismatch: {len(X)} vs {len(Y)}")
    n = len(X)
    return 2 * n * sum(x * y for x, y in zip(X, Y))


def weyl_norm(xi: Sequence) -> float:
    """W-invariant sup norm; since W = S_n this is max_i |xi_i|."""
    return max((abs(x) for x in xi), default=0)


def is_dominant(xi: Sequence) -> bool:
    return all(xi[i] >= xi[i + 1] for i in range(len(xi) - 1))


def dominant_sort(xi: Sequence) -> tuple:
    return tuple(sorted(xi, reverse=True))


def dominance_leq(xi: Sequence[int], zeta: Sequence[int]) -> bool:
    """Partial order: xi <= zeta iff zeta - xi is a non-negative combination
    of positive coroots after centering, and the total sum is non-negative.

    Concretely, with delta = zeta - xi and s = sum(delta): require s >= 0 and
    sum(delta_1..delta_k) >= k*s/n for every k < n.  Exact over rationals.
    """
    if len(xi) != len(zeta):
        raise ValueError("length mismatch")
    n = len(xi)
    delta = [Fraction(z) - Fraction(x) for x, z in zip(xi, zeta)]
    s = sum(delta)
    if s < 0:
        return False
    run = Fraction(0)
    for k in range(n - 1):
        run += delta[k]
        if run < Fraction((k + 1) * s, n):
            return False
    return True


def weyl_orbit(xi: Sequence) -> set[tuple]:
    """All distinct coordinate permutations of xi."""
    return set(itertools.permutations(xi))


def weyl_group(n: int) -> list[tuple[tuple[int, ...], int]]:
    """All permutations of range(n) with their signs."""
    out = []
    for p in itertools.permutations(range(n)):
        inv = sum(
            1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j]
        )
        out.append((p, -1 if inv % 2 else 1))
    return out


def apply_perm(p: Sequence[int], v: Sequence) -> tuple:
    """The vector whose i-th coordinate is v[p[i]].

    Summing over all of S_n, this parametrisation runs through the whole
    orbit, which is all any alternant below ever needs.
    """
    return tuple(v[p[i]] for i in range(len(v)))


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing positive integers."""

    parts: tuple[int, ...]

    def __post_init__(self):
        if any(p <= 0 for p in self.parts):
            raise ValueError("parts must be positive")
        if any(
            self.parts[i] < self.parts[i + 1]
            for i in range(len(self.parts) - 1)
        ):
            raise ValueError("parts must be weakly decreasing")

    @property
    def size(self) -> int:
        return sum(self.parts)

    def transpose(self) -> "Partition":
        if not self.parts:
            return Partition(())
        cols = tuple(
            sum(1 for p in self.parts if p > i) for i in range(self.parts[0])
        )
        return Partition(cols)


def richardson_levi(tau: Partition | Iterable[int]) -> tuple[int, ...]:
    """Levi block sizes of the standard parabolic inducing the unipotent
    class of Jordan type tau from the trivial class: the transpose partition.
    """
    if not isinstance(tau, Partition):
        tau = Partition(tuple(tau))
    return tau.transpose().parts
