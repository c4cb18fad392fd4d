"""Rational approximation and modular arithmetic.

Reduced fractions a/q, distance to the nearest integer, continued-fraction
convergents, Dirichlet approximation, modular inverses, residue norms and
Farey grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

# Continued-fraction extraction of a float stops once the remainder drops
# below this; deeper partial quotients are artifacts of the binary expansion.
CF_REMAINDER_FLOOR = Fraction(1, 2**40)


class NotInvertibleError(ValueError):
    """Raised when a residue has no inverse modulo q."""


@dataclass(frozen=True, order=False)
class ReducedFraction:
    """a/q with gcd(a, q) = 1 and 0 <= a < q."""

    a: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"denominator must be positive, got {self.q}")
        if not 0 <= self.a < self.q:
            raise ValueError(f"numerator must lie in [0, q), got {self.a}/{self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError(f"{self.a}/{self.q} is not reduced")

    @classmethod
    def reduce(cls, a: int, q: int) -> "ReducedFraction":
        """Reduce an arbitrary a/q modulo 1 and to lowest terms."""
        if q < 1:
            raise ValueError(f"denominator must be positive, got {q}")
        a %= q
        g = math.gcd(a, q)
        return cls(a // g, q // g)

    @classmethod
    def parse(cls, text: str) -> "ReducedFraction":
        """Parse the literal ``"a/q"``; the fraction must already be reduced."""
        try:
            a_str, q_str = text.strip().split("/")
            a, q = int(a_str), int(q_str)
        except ValueError:
            raise ValueError(f"expected 'a/q', got {text!r}") from None
        return cls(a, q)

    def as_fraction(self) -> Fraction:
        return Fraction(self.a, self.q)

    def __float__(self) -> float:
        return self.a / self.q

    def __str__(self) -> str:
        return f"{self.a}/{self.q}"


@dataclass(frozen=True)
class ApproxWitness:
    """A rational a/q certifying that alpha lies within 1/q^2 of it."""

    fraction: ReducedFraction
    alpha: float
    error: float
    bound: float

    @property
    def admissible(self) -> bool:
        return self.error <= self.bound


def dist_to_nearest_int(x: Union[int, float, Fraction]):
    """||x||: distance from x to the nearest integer.

    Exact for ``Fraction`` (and ``int``) input, float otherwise.
    """
    if isinstance(x, int):
        return 0
    if isinstance(x, Fraction):
        f = x - math.floor(x)
        return min(f, 1 - f)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")
    f = x - math.floor(x)
    return min(f, 1.0 - f)


def _as_exact(alpha) -> Fraction:
    if isinstance(alpha, ReducedFraction):
        return alpha.as_fraction()
    if isinstance(alpha, (Fraction, int)):
        return Fraction(alpha)
    return Fraction(float(alpha))


def _partial_quotients(x: Fraction, exact: bool):
    while True:
        a = math.floor(x)
        yield a
        rem = x - a
        if rem == 0 or (not exact and rem < CF_REMAINDER_FLOOR):
            return
        x = 1 / rem


def convergents(alpha, max_q: int) -> list[ReducedFraction]:
    """Continued-fraction convergents of alpha with denominator <= max_q.

    Convergents are reduced modulo 1, so 1/1 folds onto 0/1; the result is
    strictly increasing in q.  A rational alpha terminates at itself.
    """
    if max_q < 1:
        raise ValueError(f"max_q must be >= 1, got {max_q}")
    exact = isinstance(alpha, (ReducedFraction, Fraction, int))
    x = _as_exact(alpha)
    if not 0 <= x < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")

    out: list[ReducedFraction] = []
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    first = True
    for a in _partial_quotients(x, exact):
        if first:
            p, q = a, 1
            first = False
        else:
            p, q, p_prev, q_prev = a * p + p_prev, a * q + q_prev, p, q
        if q > max_q:
            break
        frac = ReducedFraction.reduce(p, q)
        if out and out[-1].q == frac.q:
            continue
        out.append(frac)
    return out


def dirichlet_approx(alpha: float, Q: int) -> ApproxWitness:
    """Find a/q with q <= Q and ||alpha - a/q|| <= 1/(q(Q+1)).

    Uses the last convergent with denominator <= Q.  The error is measured
    modulo 1, which only matters for the q = 1 witness 1/1 == 0/1.
    """
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    conv = convergents(alpha, Q)
    best = conv[-1]
    x = _as_exact(alpha)
    error = dist_to_nearest_int(x - best.as_fraction())
    return ApproxWitness(
        fraction=best,
        alpha=float(x),
        error=float(error),
        bound=1.0 / best.q**2,
    )


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b)."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_x, x = x, old_x - quot * x
        old_y, y = y, old_y - quot * y
    return old_r, old_x, old_y


def mod_inverse(a: int, q: int) -> int:
    if q < 2:
        raise ValueError(f"modulus must be >= 2, got {q}")
    g, x, _ = extended_gcd(a % q, q)
    if g != 1:
        raise NotInvertibleError(f"{a} is not invertible modulo {q} (gcd = {g})")
    return x % q


def residue_norm(t: int, frac: ReducedFraction) -> int:
    """r in [0, q/2] with ||t a / q|| = r / q.

    t is congruent to +r*inv(a) or -r*inv(a) modulo q; the tie r = q/2
    counts once.
    """
    if frac.q < 2:
        raise ValueError("residue_norm needs q >= 2")
    s = (t * frac.a) % frac.q
    return min(s, frac.q - s)


def residue_classes(X: int, frac: ReducedFraction) -> dict[int, list[int]]:
    """Group 1 <= t < X by residue_norm(t, frac); every t lands in one class."""
    classes: dict[int, list[int]] = {}
    for t in range(1, X):
        classes.setdefault(residue_norm(t, frac), []).append(t)
    return classes


def farey_grid(Q: int) -> list[ReducedFraction]:
    """Reduced fractions a/q in (0, 1) with 2 <= q <= Q, sorted by value."""
    if Q < 2:
        raise ValueError(f"Q must be >= 2, got {Q}")
    out = []
    a, b, c, d = 0, 1, 1, Q
    while c < d:
        out.append(ReducedFraction(c, d))
        k = (Q + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
    return out
