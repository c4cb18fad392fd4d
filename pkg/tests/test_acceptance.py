"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from locdiv.arith import IntervalBox, dk_segment, hooley_delta, sieve_dk, sieve_localized
from locdiv.diophantine import (
    NotInvertibleError,
    ReducedFraction,
    dirichlet_approx,
    farey_grid,
    mod_inverse,
    residue_norm,
)
from locdiv.expsum import RealAlpha, exp_sum_decomposed, exp_sum_direct, window_for
from locdiv.harness import (
    EnvelopeParams,
    GridSpec,
    constant_report,
    corollary_check,
    method_mismatches,
    random_box,
    records_to_csv,
    scan,
    verify_chain,
)

from oracles import hooley_all_pairs, localized_by_tuples, ordered_tuples

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail, elapsed=None):
        took = "" if elapsed is None else f" [{elapsed:.1f}s]"
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}{took}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def default_scan():
    t0 = time.perf_counter()
    records = scan(GridSpec())
    return records, time.perf_counter() - t0


def test_criterion_1_sieves(verdict):
    t0 = time.perf_counter()
    dk_ok = all(
        [int(x) for x in sieve_dk(5000, k).weights] == [ordered_tuples(n, k) for n in range(5001, 10001)]
        and [int(x) for x in dk_segment(0, 5000, k)] == [ordered_tuples(n, k) for n in range(1, 5001)]
        for k in (1, 2, 3, 4)
    )
    rng = np.random.default_rng(20240)
    bad = []
    for i in range(100):
        k = 2 + i % 3
        N = 1000 if i % 2 == 0 else int(rng.integers(1, 1001))
        box = random_box(k, N, rng)
        ivs = [(iv.lo, iv.hi) for iv in box.intervals]
        if sieve_localized(N, box).as_dict() != localized_by_tuples(N, ivs):
            bad.append((N, str(box)))
    elapsed = time.perf_counter() - t0
    ok = dk_ok and not bad and elapsed < 30
    verdict(1, ok, f"d_k exact for n <= 10^4, k=1..4: {dk_ok}; localized mismatches over 100 boxes: {bad}", elapsed)


def test_criterion_2_hooley(verdict):
    t0 = time.perf_counter()
    bad = [n for n in range(1, 10**4 + 1) if hooley_delta(n) != hooley_all_pairs(n)]
    examples = [hooley_delta(n) for n in (1, 2, 3, 12)]
    elapsed = time.perf_counter() - t0
    ok = not bad and examples == [1, 2, 1, 3] and elapsed < 10
    verdict(2, ok, f"mismatches for n <= 10^4: {bad[:5]}; Delta(1,2,3,12) = {examples}", elapsed)


def _alphas(rng, count=50):
    out = []
    fracs = farey_grid(64)
    for i in range(count):
        if i % 2 == 0:
            out.append(fracs[int(rng.integers(len(fracs)))])
        else:
            out.append(RealAlpha(float(rng.random())))
    return out


def test_criterion_3_method_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    cases = [(k, N) for k in (2, 3, 4) for N in (2**8, 2**12, 2**16)] + [(2, 2**20)]
    worst = 0.0
    checked = 0
    for k, N in cases:
        boxes = [IntervalBox.full(k)] + [random_box(k, N, rng) for _ in range(2)]
        alphas = _alphas(rng)
        for box in boxes:
            w = window_for(N, box)
            scale = 1 + w.total()
            for alpha in alphas:
                diff = abs(exp_sum_direct(w, alpha).value - exp_sum_decomposed(N, box, alpha).value)
                worst = max(worst, diff / scale)
                checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 300
    verdict(3, ok, f"{checked} comparisons, max |diff|/(1+sum w) = {worst:.3g}", elapsed)


def test_criterion_4_chain_dominance(verdict, default_scan):
    records, elapsed = default_scan
    try:
        v = verify_chain(records)
        ok, detail = True, v.summary()
    except AssertionError as exc:
        ok, detail = False, str(exc)[:500]
    mism = method_mismatches(records)
    verdict(4, ok and not mism, f"{detail}; direct cross-check mismatches: {len(mism)}", elapsed)


def test_criterion_5_envelope_growth(verdict, default_scan):
    records, _ = default_scan
    params = EnvelopeParams(epsilon=0.1)
    fracs = {(f.a, f.q) for f in farey_grid(64)}
    chosen = [
        r for r in records
        if (r.k == 2 and r.N in (2**12, 2**20)) or (r.k == 3 and r.N in (2**12, 2**18))
        if (r.a, r.q) in fracs
    ]
    report = constant_report(chosen, params)
    g2, g3 = report.by_k(2).growth, report.by_k(3).growth
    ok = g2 is not None and g3 is not None and g2 <= 2 and g3 <= 2
    verdict(5, ok, f"g(2) = {report.by_k(2).growth_text} (2^12 -> 2^20), g(3) = {report.by_k(3).growth_text} (2^12 -> 2^18)")


def test_criterion_6_corollary(verdict, default_scan):
    records, _ = default_scan
    rows = corollary_check(records)
    per_level = {(r.k, r.N): r.perturbed for r in rows}
    complete = all(n == 20 * 5 for n in per_level.values())
    worst = max(r.perturbed_max / r.exact_max for r in rows)
    ok = rows and complete and all(r.ok for r in rows)
    verdict(6, bool(ok), f"{len(rows)} (k, N) levels, 20 pairs x 5 perturbations each: {complete}; "
                         f"max perturbed/exact ratio = {worst:.3g}")


def test_criterion_7_diophantine(verdict):
    t0 = time.perf_counter()
    rnd = random.Random(7)
    dirichlet_bad = 0
    for _ in range(10**4):
        x = rnd.random()
        Q = rnd.randint(1, 10**6)
        w = dirichlet_approx(x, Q)
        err = abs(Fraction(x) - w.fraction.as_fraction())
        err = min(err % 1, 1 - err % 1)
        dirichlet_bad += not (w.fraction.q <= Q and err <= Fraction(1, w.fraction.q**2))
    norm_bad = 0
    for q in range(2, 201):
        for a in range(1, q):
            if math.gcd(a, q) != 1:
                continue
            frac = ReducedFraction(a, q)
            for t in range(1, q + 1):
                x = Fraction(t * a, q)
                dist = abs(x - round(x))
                norm_bad += Fraction(residue_norm(t, frac), q) != dist
    inv_bad = 0
    for q in range(2, 1001):
        for a in range(q):
            if math.gcd(a, q) == 1:
                inv_bad += mod_inverse(a, q) * a % q != 1
            else:
                try:
                    mod_inverse(a, q)
                    inv_bad += 1
                except NotInvertibleError:
                    pass
    elapsed = time.perf_counter() - t0
    ok = dirichlet_bad == norm_bad == inv_bad == 0
    verdict(7, ok, f"failures: dirichlet {dirichlet_bad}/10^4, residue_norm {norm_bad}, mod_inverse {inv_bad}", elapsed)


def test_criterion_8_performance(verdict):
    N = 2**24
    box = IntervalBox.full(2)
    w = sieve_dk(N, 2)
    alphas = [ReducedFraction(1, 3), ReducedFraction(17, 64), ReducedFraction(22, 61)]

    def best(fn):
        times = []
        for _ in range(3):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    t_dec = sum(best(lambda: exp_sum_decomposed(N, box, a)) for a in alphas)
    t_dir = sum(best(lambda: exp_sum_direct(w, a)) for a in alphas)
    diff = max(abs(exp_sum_decomposed(N, box, a).value - exp_sum_direct(w, a).value) for a in alphas)
    ok = t_dec < t_dir / 10 and diff <= 1e-8 * (1 + w.total())
    verdict(8, ok, f"N=2^24: decomposed {t_dec:.3f}s vs direct {t_dir:.3f}s "
                   f"(ratio {t_dir / t_dec:.1f}x), max diff {diff:.3g}")


def test_criterion_9_determinism(verdict, default_scan):
    records, _ = default_scan
    t0 = time.perf_counter()
    first = records_to_csv(records)
    second = records_to_csv(scan(GridSpec()))
    elapsed = time.perf_counter() - t0
    verdict(9, first == second, f"two default scans, {len(records)} rows, byte-identical CSV: {first == second}", elapsed)
