"""Exact divisor-type functions on windows (N, 2N].

Provides the segmented sieve for d_k, the divisor function localized on a box
of intervals, and Hooley's concentration function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Optional, Sequence

import numpy as np
from sympy import factorint

DIVISOR_CAP = 2**62
# int64 sieve arrays hold every element of the range and its cofactor.
RANGE_CAP = 2**62


@dataclass(frozen=True)
class Interval:
    """Closed integer interval [lo, hi]; ``hi=None`` means unbounded above."""

    lo: int = 1
    hi: Optional[int] = None

    def __post_init__(self):
        if self.lo < 1:
            raise ValueError(f"interval lower end must be >= 1, got {self.lo}")
        if self.hi is not None and self.hi < self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def unbounded(self) -> bool:
        return self.hi is None

    def __contains__(self, n: int) -> bool:
        return n >= self.lo and (self.hi is None or n <= self.hi)

    def clip(self, upper: int) -> tuple[int, int]:
        """Bounds of the interval intersected with [1, upper] (may be empty)."""
        hi = upper if self.hi is None else min(self.hi, upper)
        return self.lo, hi

    def __str__(self) -> str:
        if self.hi is None:
            return "*" if self.lo == 1 else f"{self.lo}:"
        return f"{self.lo}:{self.hi}"

    @classmethod
    def parse(cls, text: str) -> "Interval":
        text = text.strip()
        if text == "*":
            return cls()
        lo_s, sep, hi_s = text.partition(":")
        if not sep:
            raise ValueError(f"expected 'lo:hi' or '*', got {text!r}")
        return cls(int(lo_s), int(hi_s) if hi_s else None)


UNBOUNDED = Interval()


@dataclass(frozen=True)
class IntervalBox:
    """The box I_1 x ... x I_{k-1} localizing the divisors of order k."""

    k: int
    intervals: tuple[Interval, ...]

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if len(self.intervals) != self.k - 1:
            raise ValueError(
                f"a box of order k={self.k} needs {self.k - 1} intervals, "
                f"got {len(self.intervals)}"
            )

    @classmethod
    def full(cls, k: int) -> "IntervalBox":
        return cls(k, (UNBOUNDED,) * (k - 1))

    @classmethod
    def parse(cls, text: str, k: Optional[int] = None) -> "IntervalBox":
        """Parse ``"lo:hi,lo:hi,..."``; a bare ``"*"`` with k given is the full box."""
        parts = [p for p in text.split(",") if p.strip()]
        if k is not None and len(parts) == 1 and parts[0].strip() == "*":
            return cls.full(k)
        box = cls(len(parts) + 1, tuple(Interval.parse(p) for p in parts))
        if k is not None and box.k != k:
            raise ValueError(f"box {text!r} has order {box.k}, expected {k}")
        return box

    @property
    def is_full(self) -> bool:
        return all(iv == UNBOUNDED for iv in self.intervals)

    def __contains__(self, tup: Sequence[int]) -> bool:
        return all(n in iv for n, iv in zip(tup, self.intervals))

    def __str__(self) -> str:
        return ",".join(str(iv) for iv in self.intervals)


@dataclass(frozen=True)
class WeightedWindow:
    """Nonnegative integer weights on (N, 2N]; ``weights[i]`` belongs to N+1+i."""

    N: int
    weights: np.ndarray = field(repr=False)
    k: Optional[int] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        w = np.asarray(self.weights, dtype=np.int64)
        if w.shape != (self.N,):
            raise ValueError(f"expected {self.N} weights, got shape {w.shape}")
        if w.size and w.min() < 0:
            raise ValueError("weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def elements(self) -> np.ndarray:
        return np.arange(self.N + 1, 2 * self.N + 1, dtype=np.int64)

    def __getitem__(self, n: int) -> int:
        if not self.N < n <= 2 * self.N:
            raise KeyError(n)
        return int(self.weights[n - self.N - 1])

    def total(self) -> int:
        return int(self.weights.sum())

    def as_dict(self) -> dict[int, int]:
        return {self.N + 1 + i: int(w) for i, w in enumerate(self.weights)}

    def to_csv(self) -> str:
        lines = ["n,weight"]
        lines.extend(f"{self.N + 1 + i},{int(w)}" for i, w in enumerate(self.weights))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "k": self.k, "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "WeightedWindow":
        obj = json.loads(text)
        return cls(obj["N"], np.array(obj["weights"], dtype=np.int64), obj.get("k"))


def divisor_list(n: int) -> list[int]:
    """Sorted divisors of n."""
    if n < 1:
        raise ValueError(f"divisor_list needs n >= 1, got {n}")
    if n > DIVISOR_CAP:
        raise OverflowError(f"n exceeds the divisor cap 2^62: {n}")
    divs = [1]
    for p, e in factorint(n).items():
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def primes_upto(n: int) -> np.ndarray:
    """Primes <= n by the sieve of Eratosthenes."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def _check_dk_range(hi: int, k: int) -> None:
    if hi >= RANGE_CAP:
        raise OverflowError(f"range end {hi} exceeds 2^62")
    # d_k(n) <= k^Omega(n) <= k^floor(log2 n)
    if k > 1 and hi.bit_length() * math.log2(k) >= 63:
        raise OverflowError(f"d_{k} may overflow 64-bit weights below {hi}")


def dk_segment(lo: int, hi: int, k: int) -> np.ndarray:
    """d_k(n) for n in (lo, hi], by a segmented multiplicative sieve.

    Every prime p <= sqrt(hi) is divided out of the segment via strided
    slices over its powers; d_k(p^e) = C(e+k-1, k-1) multiplies in, and a
    leftover cofactor > 1 is a prime contributing d_k(p) = k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if lo < 0 or hi < lo:
        raise ValueError(f"bad segment ({lo}, {hi}]")
    size = hi - lo
    if k == 1:
        return np.ones(size, dtype=np.int64)
    _check_dk_range(hi, k)
    weights = np.ones(size, dtype=np.int64)
    rest = np.arange(lo + 1, hi + 1, dtype=np.int64)
    max_e = max(hi.bit_length(), 1)
    table = np.array([math.comb(e + k - 1, k - 1) for e in range(max_e + 1)], dtype=np.int64)

    for p in primes_upto(math.isqrt(hi)).tolist():
        first = (lo // p + 1) * p
        if first > hi:
            continue
        start = first - lo - 1
        count = (hi - first) // p + 1
        exps = np.ones(count, dtype=np.int64)
        pe = p * p
        while pe <= hi:
            first_pe = (lo // pe + 1) * pe
            if first_pe > hi:
                break
            exps[(first_pe - first) // p :: pe // p] += 1
            pe *= p
        sl = slice(start, start + count * p, p)
        weights[sl] *= table[exps]
        rest[sl] //= np.power(p, exps)
    weights[rest > 1] *= k
    return weights


def sieve_dk(N: int, k: int) -> WeightedWindow:
    """d_k(n) on the window (N, 2N]."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return WeightedWindow(N, dk_segment(N, 2 * N, k), k)


def restricted_convolve(counts: np.ndarray, iv: Interval, top: int) -> np.ndarray:
    """Extend tuple counts by one coordinate drawn from ``iv``.

    ``counts[P]`` is the number of tuples with product P (index 0 unused);
    the result counts tuples with one more coordinate, products <= top.
    """
    out = np.zeros(top + 1, dtype=np.int64)
    lo, hi = iv.clip(top)
    nz = np.flatnonzero(counts[1:]) + 1
    if nz.size == 0 or lo > hi:
        return out
    smallest = int(nz[0])
    n_hi = min(hi, top // smallest)
    if nz.size < n_hi - lo + 1:
        # loop over the sparser side: each product m spreads along m*[lo, hi]
        for m in nz.tolist():
            top_n = min(n_hi, top // m)
            if top_n >= lo:
                out[m * lo : m * top_n + 1 : m] += counts[m]
        return out
    for n in range(lo, n_hi + 1):
        m_top = top // n
        out[n * smallest : n * m_top + 1 : n] += counts[smallest : m_top + 1]
    return out


def box_product_counts(intervals: Sequence[Interval], top: int) -> np.ndarray:
    """Number of tuples in the product of ``intervals`` with each product P <= top."""
    counts = np.zeros(top + 1, dtype=np.int64)
    if top >= 1:
        counts[1] = 1
    for iv in intervals:
        counts = restricted_convolve(counts, iv, top)
    return counts


def sieve_localized(N: int, box: IntervalBox) -> WeightedWindow:
    """Delta_J(n) = #{tuples in the box whose product divides n} on (N, 2N].

    Tuples are aggregated by product P <= 2N (coordinate-by-coordinate
    convolution with product pruning), then every multiple of P in the
    window receives the tuple count of P.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    top = 2 * N
    counts = box_product_counts(box.intervals, top)
    weights = np.zeros(N, dtype=np.int64)
    weights += counts[N + 1 :]
    for P in (np.flatnonzero(counts[1 : N + 1]) + 1).tolist():
        first = (N // P + 1) * P
        weights[first - N - 1 :: P] += counts[P]
    return WeightedWindow(N, weights, box.k)


_E_FLOAT = math.e


def _below_e_times(d_hi: int, d_lo: int) -> bool:
    """Decide d_hi < e * d_lo; equality is impossible for integers."""
    prod = _E_FLOAT * d_lo
    if abs(prod - d_hi) >= 1e-9 * d_hi:
        return d_hi < prod
    with localcontext() as ctx:
        ctx.prec = 50
        return Decimal(d_hi).ln() - Decimal(d_lo).ln() < 1


def hooley_delta(n: int) -> int:
    """Hooley's Delta(n): most divisors of n in any window (x, e*x]."""
    divs = divisor_list(n)
    best = 1
    i = 0
    for j in range(len(divs)):
        while not _below_e_times(divs[j], divs[i]):
            i += 1
        best = max(best, j - i + 1)
    return best
