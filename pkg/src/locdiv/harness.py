"""Grid scans, proof-chain verification and envelope-constant reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .arith import Interval, IntervalBox
from .diophantine import ApproxWitness, ReducedFraction, dirichlet_approx, farey_grid
from .expsum import (
    AlphaValue,
    ChainEvaluator,
    DirectEvaluator,
    RealAlpha,
    plan_decomposition,
    window_for,
)

log = logging.getLogger(__name__)

CHAIN_SLACK = 1e-6
METHOD_TOL = 1e-8
DEFAULT_DIRECT_CAP = 10**5
DEFAULT_NS = {
    2: tuple(2**e for e in range(10, 23, 2)),
    3: (2**12, 2**15, 2**18),
    4: (2**12, 2**16),
}

CSV_COLUMNS = (
    "k", "N", "a", "q", "alpha", "box_id", "S_re", "S_im", "S_abs", "chain",
    "envelope_core", "ratio_chain", "ratio_envelope", "in_regime", "eval_ms",
)


@dataclass(frozen=True)
class EnvelopeParams:
    epsilon: float = 0.1
    C: float = 1.0

    def __post_init__(self):
        if not 0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 1/2), got {self.epsilon}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")


def envelope_core(N: int, q: int, k: int) -> float:
    """N/q + q + N^(1-1/k)."""
    return N / q + q + math.exp((1.0 - 1.0 / k) * math.log(N))


def envelope(N: int, q: int, k: int, params: EnvelopeParams) -> float:
    """C (Nq)^eps (N/q + q + N^(1-1/k))."""
    if N < 1 or q < 2 or k < 2:
        raise ValueError(f"envelope needs N >= 1, q >= 2, k >= 2; got N={N}, q={q}, k={k}")
    return params.C * (N * q) ** params.epsilon * envelope_core(N, q, k)


def in_regime(N: int, q: int, k: int) -> bool:
    """N^(1/k) <= q <= N^(1-1/k), decided in integers."""
    return q**k >= N and q**k <= N ** (k - 1)


@dataclass
class ScanRecord:
    k: int
    N: int
    a: int
    q: int
    alpha: float
    box_id: str
    S: complex
    chain: float
    envelope_core: float
    ratio_envelope: float
    in_regime: bool
    witness: Optional[ApproxWitness] = None
    eval_ms: float = 0.0
    direct_error: Optional[float] = None
    weight_total: int = 0

    @property
    def S_abs(self) -> float:
        return abs(self.S)

    @property
    def ratio_chain(self) -> float:
        return self.S_abs / self.chain

    @property
    def perturbed(self) -> bool:
        return self.witness is not None

    def describe(self) -> str:
        alpha = f"{self.a}/{self.q}" if self.witness is None else f"{self.alpha!r} (near {self.a}/{self.q})"
        return (
            f"k={self.k} N={self.N} alpha={alpha} box={self.box_id} "
            f"|S|={self.S_abs!r} chain={self.chain!r} ratio_chain={self.ratio_chain!r}"
        )

    def csv_row(self, timings: bool = False) -> list[str]:
        return [
            str(self.k), str(self.N), str(self.a), str(self.q), repr(self.alpha), self.box_id,
            repr(self.S.real), repr(self.S.imag), repr(self.S_abs), repr(self.chain),
            repr(self.envelope_core), repr(self.ratio_chain), repr(self.ratio_envelope),
            "1" if self.in_regime else "0",
            f"{self.eval_ms:.3f}" if timings else "",
        ]


@dataclass
class GridSpec:
    """What to scan.  ``Ns`` maps k to its N values; ``q_max=None`` means min(64, isqrt(N))."""

    Ns: dict[int, tuple[int, ...]] = field(default_factory=lambda: dict(DEFAULT_NS))
    q_max: Optional[int] = None
    fractions: Optional[tuple[ReducedFraction, ...]] = None
    reals: tuple[float, ...] = ()
    boxes: Optional[tuple[str, ...]] = None
    random_boxes: int = 3
    perturb: bool = True
    corollary_pairs: int = 20
    epsilon: float = 0.1
    seed: int = 0
    direct_cap: int = DEFAULT_DIRECT_CAP

    def to_dict(self) -> dict:
        d = asdict(self)
        d["Ns"] = {str(k): list(v) for k, v in self.Ns.items()}
        if self.fractions is not None:
            d["fractions"] = [str(f) for f in self.fractions]
        d["reals"] = list(self.reals)
        if self.boxes is not None:
            d["boxes"] = list(self.boxes)
        return d


def random_box(k: int, N: int, rng: np.random.Generator) -> IntervalBox:
    """A box other than the full one; intervals are unbounded, one-sided, or log-uniform [lo, hi]."""
    top = max(2.0, (2.0 * N) ** (1.0 / (k - 1)))
    while True:
        box = _draw_box(k, top, rng)
        if not box.is_full:
            return box


def _draw_box(k: int, top: float, rng: np.random.Generator) -> IntervalBox:
    ivs = []
    for _ in range(k - 1):
        u = rng.random()
        lo = int(math.exp(rng.uniform(0.0, math.log(top))))
        if u < 0.2:
            ivs.append(Interval())
        elif u < 0.4:
            ivs.append(Interval(lo))
        else:
            span = int(math.exp(rng.uniform(0.0, math.log(top))))
            ivs.append(Interval(lo, lo + span - 1))
    return IntervalBox(k, tuple(ivs))


def perturbations(frac: ReducedFraction, rng: np.random.Generator) -> list[ApproxWitness]:
    """Five admissible alphas near a/q: +-1/q^2, +-1/(2q^2), one uniform draw."""
    centre = frac.as_fraction()
    bound = Fraction(1, frac.q**2)
    deltas = [bound, -bound, bound / 2, -bound / 2, Fraction(float(rng.uniform(-1.0, 1.0))) * bound]
    out = []
    for delta in deltas:
        x = float(centre + delta)
        # rounding may push x a hair outside the admissible interval
        while abs(Fraction(x) - centre) > bound:
            x = math.nextafter(x, float(centre))
        err = abs(Fraction(x) - centre)
        out.append(ApproxWitness(frac, x, float(err), float(bound)))
    return out


@dataclass
class _Point:
    k: int
    N: int
    box: IntervalBox
    fractions: list[ReducedFraction]
    perturbed: list[ReducedFraction]
    witnesses: list[ApproxWitness] = field(default_factory=list)


def corollary_sample(fracs: Sequence[ReducedFraction], count: int, seed: int, k: int, N: int) -> list[ReducedFraction]:
    """A seeded subset of ``count`` fractions (all of them if fewer), in grid order."""
    if count >= len(fracs):
        return list(fracs)
    rng = np.random.default_rng([seed, k, N, 1])
    idx = np.sort(rng.choice(len(fracs), size=count, replace=False))
    return [fracs[i] for i in idx.tolist()]


def _grid_points(spec: GridSpec) -> list[_Point]:
    points = []
    for k in sorted(spec.Ns):
        for N in spec.Ns[k]:
            if N < 2**k:
                log.warning("skipping k=%d N=%d: need N >= 2^k", k, N)
                continue
            Q = spec.q_max if spec.q_max is not None else min(64, math.isqrt(N))
            witnesses = []
            for x in spec.reals:
                wit = dirichlet_approx(x, max(Q, 1))
                if wit.fraction.q < 2:
                    log.warning("skipping alpha=%r at k=%d N=%d: witness %s has q = 1", x, k, N, wit.fraction)
                else:
                    witnesses.append(wit)
            if spec.fractions is not None or spec.reals:
                fracs = []
                for f in spec.fractions or ():
                    if f.q < 2:
                        log.warning("skipping %s at k=%d N=%d: q must exceed 1", f, k, N)
                    else:
                        fracs.append(f)
            else:
                if Q < 2:
                    log.warning("skipping k=%d N=%d: q_max=%d leaves no q > 1", k, N, Q)
                    continue
                fracs = farey_grid(Q)
            if spec.boxes is not None:
                boxes = [IntervalBox.parse(b, k) for b in spec.boxes]
            else:
                rng = np.random.default_rng([spec.seed, k, N])
                boxes = [IntervalBox.full(k)]
                boxes += [random_box(k, N, rng) for _ in range(spec.random_boxes)]
            sample = corollary_sample(fracs, spec.corollary_pairs, spec.seed, k, N) if spec.perturb else []
            for box in boxes:
                points.append(_Point(k, N, box, fracs, sample if box.is_full else [], witnesses))
    return points


def _make_record(k, N, box_id, alpha: AlphaValue, frac, witness, res, chain, direct, params, seconds):
    core = envelope_core(N, frac.q, k)
    s_abs = abs(res.value)
    ratio_env = s_abs / ((N * frac.q) ** params.epsilon * core)
    direct_error = None if direct is None else abs(direct.value - res.value)
    return ScanRecord(
        k=k, N=N, a=frac.a, q=frac.q, alpha=float(alpha), box_id=box_id, S=res.value,
        chain=chain, envelope_core=core, ratio_envelope=ratio_env,
        in_regime=in_regime(N, frac.q, k), witness=witness, eval_ms=seconds * 1e3,
        direct_error=direct_error, weight_total=res.terms,
    )


class _ChainMemo:
    """Chain values depend on (k, N, alpha) only, not on the box."""

    def __init__(self, N: int, k: int):
        self.evaluator = ChainEvaluator(N, k)
        self.values: dict = {}

    def evaluate(self, alpha: AlphaValue) -> float:
        v = self.values.get(alpha)
        if v is None:
            v = self.values[alpha] = self.evaluator.evaluate(alpha)
        return v


def _scan_point(point: _Point, spec: GridSpec, chains: dict) -> list[ScanRecord]:
    k, N, box = point.k, point.N, point.box
    params = EnvelopeParams(spec.epsilon)
    plan = plan_decomposition(N, box)
    chain_eval = chains[(k, N)]
    direct = DirectEvaluator(window_for(N, box)) if N <= spec.direct_cap else None
    box_id = str(box)

    def one(alpha, frac, witness):
        t0 = time.perf_counter()
        res = plan.evaluate(alpha)
        chain = chain_eval.evaluate(alpha)
        seconds = time.perf_counter() - t0
        dres = direct.evaluate(alpha) if direct is not None else None
        return _make_record(k, N, box_id, alpha, frac, witness, res, chain, dres, params, seconds)

    records = [one(frac, frac, None) for frac in point.fractions]
    for frac in point.perturbed:
        rng = np.random.default_rng([spec.seed, k, N, frac.a, frac.q])
        for wit in perturbations(frac, rng):
            records.append(one(RealAlpha(wit.alpha), frac, wit))
    for wit in point.witnesses:
        records.append(one(RealAlpha(wit.alpha), wit.fraction, wit))
    return records


def scan(spec: GridSpec, threads: int = 1) -> list[ScanRecord]:
    """Evaluate every grid point; records come back in grid order."""
    points = _grid_points(spec)
    chains = {}
    for p in points:
        if (p.k, p.N) not in chains:
            chains[(p.k, p.N)] = _ChainMemo(p.N, p.k)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda p: _scan_point(p, spec, chains), points))
    else:
        chunks = [_scan_point(p, spec, chains) for p in points]
    return [r for chunk in chunks for r in chunk]


class ChainViolation(AssertionError):
    """|S| exceeded the chain bound at some grid point."""

    def __init__(self, records: Sequence[ScanRecord]):
        self.records = list(records)
        lines = "\n".join("  " + r.describe() for r in self.records)
        super().__init__(f"{len(self.records)} chain violation(s):\n{lines}")


@dataclass
class ChainVerdict:
    checked: int
    max_ratio: float
    worst: ScanRecord

    def summary(self) -> str:
        return (
            f"chain verified on {self.checked} records; "
            f"max |S|/chain = {self.max_ratio:.12g} at {self.worst.describe()}"
        )


def verify_chain(records: Sequence[ScanRecord]) -> ChainVerdict:
    """Check |S| <= chain + 1e-6 everywhere; raise ChainViolation otherwise."""
    if not records:
        raise ValueError("verify_chain needs at least one record")
    bad = [r for r in records if not r.S_abs <= r.chain + CHAIN_SLACK]
    if bad:
        raise ChainViolation(bad)
    worst = max(records, key=lambda r: r.ratio_chain)
    return ChainVerdict(len(records), worst.ratio_chain, worst)


def method_mismatches(records: Sequence[ScanRecord], tol: float = METHOD_TOL) -> list[ScanRecord]:
    """Records whose direct cross-check disagrees beyond tol * (1 + sum of weights)."""
    return [
        r for r in records
        if r.direct_error is not None and r.direct_error > tol * (1 + r.weight_total)
    ]


@dataclass
class KSummary:
    k: int
    N_min: int
    N_max: int
    records: int
    max_ratio: float
    max_ratio_regime: Optional[float]
    ratio_at_min: float
    ratio_at_max: float

    @property
    def growth(self) -> Optional[float]:
        """g(k); None when both maxima vanish or the smaller one does."""
        if self.ratio_at_min == 0:
            return None
        return self.ratio_at_max / self.ratio_at_min

    @property
    def growth_text(self) -> str:
        g = self.growth
        return "degenerate" if g is None else f"{g:.12g}"


@dataclass
class ConstantReport:
    epsilon: float
    rows: list[KSummary]

    def by_k(self, k: int) -> KSummary:
        for row in self.rows:
            if row.k == k:
                return row
        raise KeyError(k)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "N_min", "N_max", "records", "max_ratio", "max_ratio_regime",
                    "ratio_at_N_min", "ratio_at_N_max", "g"])
        for r in self.rows:
            w.writerow([r.k, r.N_min, r.N_max, r.records, repr(r.max_ratio),
                        "" if r.max_ratio_regime is None else repr(r.max_ratio_regime),
                        repr(r.ratio_at_min), repr(r.ratio_at_max),
                        "degenerate" if r.growth is None else repr(r.growth)])
        return buf.getvalue()

    def to_table(self) -> str:
        head = f"{'k':>2} {'N_min':>9} {'N_max':>9} {'records':>8} {'max ratio':>14} {'in regime':>14} {'g(k)':>14}"
        lines = [f"envelope ratios at epsilon = {self.epsilon:.12g}", head]
        for r in self.rows:
            regime = "-" if r.max_ratio_regime is None else f"{r.max_ratio_regime:.12g}"
            lines.append(
                f"{r.k:>2} {r.N_min:>9} {r.N_max:>9} {r.records:>8} "
                f"{r.max_ratio:>14.12g} {regime:>14} {r.growth_text:>14}"
            )
        return "\n".join(lines) + "\n"


def _ratio(r: ScanRecord, params: EnvelopeParams) -> float:
    return r.S_abs / ((r.N * r.q) ** params.epsilon * r.envelope_core)


def constant_report(records: Sequence[ScanRecord], params: EnvelopeParams) -> ConstantReport:
    """Max envelope ratios per k and the growth g(k) from smallest to largest N."""
    groups: dict[int, list[ScanRecord]] = defaultdict(list)
    for r in records:
        groups[r.k].append(r)
    if not groups:
        raise ValueError("constant_report needs records")
    rows = []
    for k in sorted(groups):
        recs = groups[k]
        Ns = sorted({r.N for r in recs})
        if len(Ns) < 2:
            raise ValueError(f"k={k}: records cover a single N ({Ns[0]}); need at least two N levels")
        ratios = [_ratio(r, params) for r in recs]
        regime = [x for x, r in zip(ratios, recs) if r.in_regime]
        rows.append(KSummary(
            k=k, N_min=Ns[0], N_max=Ns[-1], records=len(recs),
            max_ratio=max(ratios),
            max_ratio_regime=max(regime) if regime else None,
            ratio_at_min=max(x for x, r in zip(ratios, recs) if r.N == Ns[0]),
            ratio_at_max=max(x for x, r in zip(ratios, recs) if r.N == Ns[-1]),
        ))
    return ConstantReport(params.epsilon, rows)


@dataclass
class CorollaryRow:
    k: int
    N: int
    exact_max: float
    perturbed_max: float
    perturbed: int

    @property
    def ok(self) -> bool:
        return math.isfinite(self.perturbed_max) and self.perturbed_max <= 4 * self.exact_max


def corollary_check(records: Sequence[ScanRecord]) -> list[CorollaryRow]:
    """Compare perturbed-alpha envelope ratios against exact rationals per (k, N)."""
    exact: dict[tuple, list[float]] = defaultdict(list)
    pert: dict[tuple, list[float]] = defaultdict(list)
    for r in records:
        (pert if r.perturbed else exact)[(r.k, r.N)].append(r.ratio_envelope)
    rows = []
    for key in sorted(pert):
        if key not in exact:
            log.warning("no exact-rational records for k=%d N=%d", *key)
            continue
        rows.append(CorollaryRow(key[0], key[1], max(exact[key]), max(pert[key]), len(pert[key])))
    return rows


def records_to_csv(records: Sequence[ScanRecord], timings: bool = False) -> str:
    """Stable CSV; eval_ms stays empty unless ``timings`` so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row(timings))
    return buf.getvalue()


def records_from_csv(text: str) -> list[ScanRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        q = int(row["q"])
        a = int(row["a"])
        alpha = float(row["alpha"])
        witness = None
        if alpha != a / q:
            err = abs(Fraction(alpha) - Fraction(a, q))
            witness = ApproxWitness(ReducedFraction(a, q), alpha, float(err), 1.0 / q**2)
        out.append(ScanRecord(
            k=int(row["k"]), N=int(row["N"]), a=a, q=q, alpha=alpha, box_id=row["box_id"],
            S=complex(float(row["S_re"]), float(row["S_im"])), chain=float(row["chain"]),
            envelope_core=float(row["envelope_core"]), ratio_envelope=float(row["ratio_envelope"]),
            in_regime=row["in_regime"] == "1", witness=witness,
            eval_ms=float(row["eval_ms"]) if row["eval_ms"] else 0.0,
        ))
    return out


def manifest(spec: GridSpec) -> str:
    return json.dumps(
        {"grid": spec.to_dict(), "seed": spec.seed, "epsilon": spec.epsilon, "version": __version__},
        sort_keys=True,
    )
