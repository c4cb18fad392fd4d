"""Exponential sums S_k(alpha, N) of localized divisor functions.

Three routes to the same number: direct weighted summation over the window,
closed-form geometric sums, and the k-way split at N_k = floor(N^(1/k)) that
turns S_k into O(N^(1-1/k+o(1))) geometric sums.  ``chain_bound`` evaluates
the majorant k * sum_{t < 2N/N_k} d_{k-1}(t) min(N/t, 1/||t alpha||).

Phases are never formed as floating products n*alpha.  Every phase is an
integer multiple M*alpha reduced modulo 2 first: in integers for rational
alpha, through an error-free two-product for real alpha.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .arith import (
    UNBOUNDED,
    Interval,
    IntervalBox,
    WeightedWindow,
    box_product_counts,
    dk_segment,
    sieve_dk,
    sieve_localized,
)
from .diophantine import ReducedFraction

EPS = np.finfo(np.float64).eps
TABLE_MAX_Q = 10**6
# Below this ||t alpha|| the closed form is replaced by explicit summation.
NEAR_SINGULAR = 1e-12
_SPLIT = 134217729.0  # 2^27 + 1, Veltkamp splitter


@dataclass(frozen=True)
class RealAlpha:
    """A real phase carried at double precision, reduced into [0, 1)."""

    x: float

    def __post_init__(self):
        x = float(self.x)
        if not math.isfinite(x):
            raise ValueError(f"alpha must be finite, got {x}")
        x %= 1.0
        if x == 1.0:
            x = 0.0
        object.__setattr__(self, "x", x)

    def __float__(self) -> float:
        return self.x

    def __str__(self) -> str:
        return repr(self.x)


AlphaValue = Union[ReducedFraction, RealAlpha]


def parse_alpha(text: str) -> AlphaValue:
    """``"a/q"`` gives the exact rational path, a decimal literal the real one."""
    text = text.strip()
    if "/" in text:
        a_s, q_s = text.split("/")
        return ReducedFraction.reduce(int(a_s), int(q_s))
    return RealAlpha(float(text))


def conjugate_alpha(alpha: AlphaValue) -> AlphaValue:
    """1 - alpha, reduced into [0, 1)."""
    if isinstance(alpha, ReducedFraction):
        return ReducedFraction.reduce(alpha.q - alpha.a, alpha.q)
    return RealAlpha(1.0 - alpha.x)


def alpha_to_json(alpha: AlphaValue):
    return str(alpha) if isinstance(alpha, ReducedFraction) else alpha.x


@dataclass(frozen=True)
class ExpSumResult:
    value: complex
    method: str
    terms: int
    alpha: AlphaValue
    evaluations: int = 0
    error_budget: float = 0.0

    def __post_init__(self):
        if self.method not in ("direct", "decomposed"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.terms < 0:
            raise ValueError("terms must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "method": self.method,
            "terms": self.terms,
            "alpha": alpha_to_json(self.alpha),
            "evaluations": self.evaluations,
            "error_budget": self.error_budget,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# -- phase arithmetic -------------------------------------------------------


def _two_product(a: np.ndarray, b: float) -> tuple[np.ndarray, np.ndarray]:
    """p + e == a * b exactly (Dekker), for |a|, |b| well inside float range."""
    p = a * b
    c = _SPLIT * a
    a_hi = c - (c - a)
    a_lo = a - a_hi
    c = _SPLIT * b
    b_hi = c - (c - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def half_turns(M: np.ndarray, alpha: AlphaValue) -> tuple[np.ndarray, np.ndarray]:
    """Split M*alpha modulo 2 as parity + f with parity in {0, 1}, |f| <= 1/2.

    f is the signed distance of M*alpha to the nearest integer, so
    ||M alpha|| = |f| and e(M alpha) = exp(2 pi i f).  For rational alpha,
    f == 0 exactly iff q divides M*a.
    """
    M = np.asarray(M, dtype=np.int64)
    if isinstance(alpha, ReducedFraction):
        a, q = alpha.a, alpha.q
        two_q = 2 * q
        if two_q * two_q < 2**62:
            r = (M % two_q) * a % two_q
        else:
            r = np.array([(int(m) * a) % two_q for m in M.ravel()], dtype=object).reshape(M.shape)
        n = (2 * r + q) // two_q
        f = ((r - n * q) / q).astype(np.float64)
        return (n % 2).astype(np.int64), f
    if M.size and int(np.abs(M).max()) >= 2**53:
        raise OverflowError("integer multiplier exceeds 2^53 on the real-alpha path")
    p, e = _two_product(M.astype(np.float64), alpha.x)
    pm = np.fmod(p, 2.0)
    n = np.rint(pm)
    f = (pm - n) + e
    over = f > 0.5
    under = f < -0.5
    n = n + over - under
    f = f - over + under
    return (n.astype(np.int64) % 2), f


def _unit(f: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * f)


def compensated_sum(x: np.ndarray) -> float:
    """Pairwise sum with every addition corrected by TwoSum.

    The rounding errors of all levels are collected and added back at the
    end, so the result is accurate to about eps*|sum| + log2(n) eps^2 sum|x|.
    The pairing tree depends only on len(x): results are bit-reproducible.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size <= 1:
        return float(x.sum())
    errors = []
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        a, b = x[0::2], x[1::2]
        s = a + b
        bv = s - a
        errors.append((a - (s - bv)) + (b - bv))
        x = s
    return float(x[0] + np.concatenate(errors).sum())


def _csum(z: np.ndarray) -> complex:
    return complex(compensated_sum(z.real), compensated_sum(z.imag))


def _rational_tables(alpha: ReducedFraction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indexed by r = M*a mod 2q: sin(pi M alpha), e(M alpha / 2), ||M alpha||."""
    q = alpha.q
    r = np.arange(2 * q, dtype=np.int64)
    n = (2 * r + q) // (2 * q)
    f = (r - n * q) / q
    sign = np.where(n % 2 == 1, -1.0, 1.0)
    return sign * np.sin(np.pi * f), sign * np.exp(1j * np.pi * f), np.abs(f)


class _ResidueCache:
    """Integer multipliers reduced mod 2q, kept per q for reuse across numerators."""

    def __init__(self, *arrays: np.ndarray, limit: int = 512):
        self.arrays = arrays
        self.limit = limit
        self._cache: dict[int, tuple[np.ndarray, ...]] = {}

    def get(self, q: int) -> tuple[np.ndarray, ...]:
        hit = self._cache.get(q)
        if hit is None:
            if len(self._cache) >= self.limit:
                self._cache.clear()
            hit = self._cache[q] = tuple(m % (2 * q) for m in self.arrays)
        return hit


def _geometric(t: np.ndarray, A: np.ndarray, B: np.ndarray, alpha: AlphaValue) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sum_{A < m <= B} e(alpha t m) and the norms ||t alpha||.

    Uses sum = e(t alpha (A+B+1)/2) sin(pi t alpha L) / sin(pi t alpha), with
    L = B - A and every product reduced modulo 2 from its integer multiplier.
    """
    t = np.asarray(t, dtype=np.int64)
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    L = B - A
    n1, f1 = half_turns(t, alpha)
    nL, fL = half_turns(t * L, alpha)
    nP, fP = half_turns(t * (A + B + 1), alpha)
    out = L.astype(np.complex128)
    live = (f1 != 0) & (L > 0)
    if live.any():
        sign = np.where((n1 + nL + nP) % 2 == 1, -1.0, 1.0)
        ratio = np.sin(np.pi * fL[live]) / np.sin(np.pi * f1[live])
        out[live] = sign[live] * np.exp(1j * np.pi * fP[live]) * ratio
    if isinstance(alpha, RealAlpha):
        for i in np.flatnonzero((f1 != 0) & (np.abs(f1) < NEAR_SINGULAR) & (L > 0)).tolist():
            m = np.arange(A[i] + 1, B[i] + 1, dtype=np.int64)
            out[i] = _csum(_unit(half_turns(t[i] * m, alpha)[1]))
    return out, np.abs(f1)


def geometric_interval_sum(t: int, alpha: AlphaValue, A: int, B: int) -> complex:
    """sum_{A < m <= B} e(alpha t m) in O(1)."""
    if A > B:
        raise ValueError(f"need A <= B, got A={A}, B={B}")
    if A == B:
        return 0j
    vals, _ = _geometric(np.array([t]), np.array([A]), np.array([B]), alpha)
    return complex(vals[0])


# -- direct summation -------------------------------------------------------


def roots_of_unity(q: int) -> np.ndarray:
    """e(j/q) for 0 <= j < q, from the signed offset of j/q to the nearest integer."""
    j = np.arange(q, dtype=np.int64)
    f = (j - q * ((2 * j + q) // (2 * q))) / q
    return _unit(f)


def _residue_weights(window: WeightedWindow, q: int) -> np.ndarray:
    n = window.elements
    return np.bincount(n % q, weights=window.weights.astype(np.float64), minlength=q)


def _direct_from_residues(res: np.ndarray, alpha: ReducedFraction) -> complex:
    q = alpha.q
    idx = np.arange(q, dtype=np.int64) * alpha.a % q
    return _csum(res * roots_of_unity(q)[idx])


def exp_sum_direct(w: WeightedWindow, alpha: AlphaValue) -> ExpSumResult:
    """sum_{N < n <= 2N} w(n) e(n alpha), compensated, in fixed index order.

    Rational alpha with q <= 10^6 goes through the q-th roots of unity indexed
    by n*a mod q; the weights are first binned by residue (exact in float64).
    """
    terms = w.total()
    if isinstance(alpha, ReducedFraction) and alpha.q <= TABLE_MAX_Q:
        value = _direct_from_residues(_residue_weights(w, alpha.q), alpha)
    else:
        _, f = half_turns(w.elements, alpha)
        value = _csum(w.weights * _unit(f))
    return ExpSumResult(value, "direct", terms, alpha, error_budget=4 * EPS * terms)


class DirectEvaluator:
    """Direct sums on one window for many alphas, caching residue weights per q."""

    def __init__(self, window: WeightedWindow):
        self.window = window
        self.terms = window.total()
        self._residues: dict[int, np.ndarray] = {}

    def evaluate(self, alpha: AlphaValue) -> ExpSumResult:
        if isinstance(alpha, ReducedFraction) and alpha.q <= TABLE_MAX_Q:
            res = self._residues.get(alpha.q)
            if res is None:
                res = self._residues[alpha.q] = _residue_weights(self.window, alpha.q)
            value = _direct_from_residues(res, alpha)
            return ExpSumResult(value, "direct", self.terms, alpha, error_budget=4 * EPS * self.terms)
        return exp_sum_direct(self.window, alpha)


# -- the k-way decomposition ------------------------------------------------


def iroot(n: int, k: int) -> int:
    """floor(n^(1/k)) by binary search on x^k <= n."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0, k >= 1")
    lo, hi = 0, 1
    while hi**k <= n:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid**k <= n:
            lo = mid
        else:
            hi = mid
    return lo


def _capped(iv: Interval, cap: int):
    if iv.lo > cap:
        return None
    return Interval(iv.lo, cap if iv.hi is None else min(iv.hi, cap))


@dataclass
class Branch:
    """Branch j: n_1..n_{j-1} <= N_k < n_j; the outer tuples grouped by product t."""

    j: int
    t: np.ndarray
    count: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @property
    def tuples(self) -> int:
        return int((self.count * (self.B - self.A)).sum())


@dataclass
class DecompositionPlan:
    """The alpha-independent part of the decomposition for one (N, box)."""

    N: int
    box: IntervalBox
    Nk: int
    tmax: int
    branches: list[Branch] = field(repr=False)

    def __post_init__(self):
        self._t = np.concatenate([b.t for b in self.branches])
        self._c = np.concatenate([b.count for b in self.branches]).astype(np.float64)
        self._A = np.concatenate([b.A for b in self.branches])
        self._B = np.concatenate([b.B for b in self.branches])
        self._L = self._B - self._A
        self.terms = sum(b.tuples for b in self.branches)
        self._mods = _ResidueCache(self._t, self._t * self._L, self._t * (self._A + self._B + 1))

    @property
    def evaluations(self) -> int:
        return int(self._t.size)

    def _rational(self, alpha: ReducedFraction) -> tuple[np.ndarray, np.ndarray]:
        sines, halves, norms = _rational_tables(alpha)
        two_q = 2 * alpha.q
        m1, mL, mP = self._mods.get(alpha.q)
        r1 = m1 * alpha.a % two_q
        G = self._L.astype(np.complex128)
        live = (r1 != 0) & (r1 != alpha.q)
        G[live] = halves[mP[live] * alpha.a % two_q] * (sines[mL[live] * alpha.a % two_q] / sines[r1[live]])
        return G, norms[r1]

    def evaluate(self, alpha: AlphaValue) -> ExpSumResult:
        if isinstance(alpha, ReducedFraction) and alpha.q <= TABLE_MAX_Q:
            G, norms = self._rational(alpha)
        else:
            G, norms = _geometric(self._t, self._A, self._B, alpha)
        value = _csum(self._c * G)
        L = self._L.astype(np.float64)
        with np.errstate(divide="ignore", over="ignore"):
            bound = np.minimum(L, 0.5 / norms)
        budget = 16 * EPS * float(self._c @ (bound + 1.0))
        return ExpSumResult(value, "decomposed", self.terms, alpha, self.evaluations, budget)


def plan_decomposition(N: int, box: IntervalBox) -> DecompositionPlan:
    """Group every k-tuple with product in (N, 2N] by branch and outer product.

    Branch j fixes n_1..n_{j-1} <= N_k < n_j; the other k-1 coordinates
    (coordinate k free, the first k-1 intersected with the box) have product
    t < 2N/N_k, and n_j runs over I_j intersected with (max(N_k, N/t), 2N/t].
    """
    k = box.k
    if N < 1:
        raise ValueError(f"decomposition needs N >= 1, got N={N}")
    Nk = iroot(N, k)
    tmax = (2 * N - 1) // Nk
    coords = list(box.intervals) + [UNBOUNDED]
    branches = []
    empty = np.zeros(0, dtype=np.int64)
    for j in range(1, k + 1):
        others = []
        for i, iv in enumerate(coords, start=1):
            if i < j:
                others.append(_capped(iv, Nk))
            elif i > j:
                others.append(iv)
        if any(iv is None for iv in others):
            branches.append(Branch(j, empty, empty, empty, empty))
            continue
        counts = box_product_counts(others, tmax)
        t = np.flatnonzero(counts[1:]).astype(np.int64) + 1
        inner = coords[j - 1]
        A = np.maximum(np.maximum(N // t, Nk), inner.lo - 1)
        B = (2 * N) // t
        if inner.hi is not None:
            B = np.minimum(B, inner.hi)
        keep = A < B
        branches.append(Branch(j, t[keep], counts[t[keep]], A[keep], B[keep]))
    return DecompositionPlan(N, box, Nk, tmax, branches)


def exp_sum_decomposed(N: int, box: IntervalBox, alpha: AlphaValue) -> ExpSumResult:
    """S_k(alpha, N) through the k-way split, one geometric sum per (branch, t)."""
    return plan_decomposition(N, box).evaluate(alpha)


# -- the majorant -----------------------------------------------------------


class ChainEvaluator:
    """k sum_{t < 2N/N_k} d_{k-1}(t) min(N/t, 1/||t alpha||) for many alphas.

    A zero norm counts as min(N/t, 1/0) = N/t.
    """

    def __init__(self, N: int, k: int):
        if k < 2:
            raise ValueError(f"k must be >= 2, got {k}")
        if N < 1:
            raise ValueError(f"chain bound needs N >= 1, got N={N}")
        self.N, self.k = N, k
        tmax = (2 * N - 1) // iroot(N, k)
        self.t = np.arange(1, tmax + 1, dtype=np.int64)
        self.d = dk_segment(0, tmax, k - 1).astype(np.float64)
        self.trivial = N / self.t
        self._mods = _ResidueCache(self.t)

    def norms(self, alpha: AlphaValue) -> np.ndarray:
        if isinstance(alpha, ReducedFraction) and alpha.q <= TABLE_MAX_Q:
            (m,) = self._mods.get(alpha.q)
            return _rational_tables(alpha)[2][m * alpha.a % (2 * alpha.q)]
        return np.abs(half_turns(self.t, alpha)[1])

    def evaluate(self, alpha: AlphaValue) -> float:
        with np.errstate(divide="ignore", over="ignore"):
            inv = 1.0 / self.norms(alpha)
        return self.k * compensated_sum(self.d * np.minimum(self.trivial, inv))


def chain_bound(N: int, k: int, alpha: AlphaValue) -> float:
    return ChainEvaluator(N, k).evaluate(alpha)


def window_for(N: int, box: IntervalBox) -> WeightedWindow:
    """Weights of S_k: d_k for the full box, Delta_J otherwise."""
    return sieve_dk(N, box.k) if box.is_full else sieve_localized(N, box)
