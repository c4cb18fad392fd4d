"""Command-line front end.

Exit codes: 0 success, 1 precondition/domain error or malformed flags,
2 verification failure (chain violation or method mismatch in a scan).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .arith import IntervalBox, hooley_delta, sieve_dk, sieve_localized
from .diophantine import NotInvertibleError, ReducedFraction, convergents, dirichlet_approx
from .expsum import (
    RealAlpha,
    chain_bound,
    exp_sum_decomposed,
    exp_sum_direct,
    parse_alpha,
    window_for,
)
from .harness import (
    ChainViolation,
    EnvelopeParams,
    GridSpec,
    constant_report,
    manifest,
    method_mismatches,
    records_from_csv,
    records_to_csv,
    scan,
    verify_chain,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def fmt(x: float) -> str:
    """Fixed 12-significant-digit rendering for tables."""
    return f"{x:.12g}"


def fmt_complex(z: complex) -> str:
    return f"{fmt(z.real)} {'-' if z.imag < 0 else '+'} {fmt(abs(z.imag))}i"


def _int_list(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _box(args, k: int) -> IntervalBox:
    return IntervalBox.parse(args.box, k) if args.box else IntervalBox.full(k)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _window_output(args, w) -> str:
    if args.format == "json":
        return w.to_json() + "\n"
    if args.format == "csv":
        return w.to_csv()
    return "".join(f"{n:>12} {v}\n" for n, v in w.as_dict().items())


def cmd_sieve(args) -> int:
    _emit(args, _window_output(args, sieve_dk(args.N, args.k)))
    return 0


def cmd_localized(args) -> int:
    if not args.box:
        raise ValueError("localized needs --box")
    box = IntervalBox.parse(args.box, args.k)
    _emit(args, _window_output(args, sieve_localized(args.N, box)))
    return 0


def cmd_hooley(args) -> int:
    _emit(args, f"{hooley_delta(args.n)}\n")
    return 0


def cmd_expsum(args) -> int:
    alpha = parse_alpha(args.alpha)
    box = _box(args, args.k)
    results = []
    if args.method in ("direct", "both"):
        results.append(exp_sum_direct(window_for(args.N, box), alpha))
    if args.method in ("decomposed", "both"):
        results.append(exp_sum_decomposed(args.N, box, alpha))
    diff = abs(results[0].value - results[-1].value) if len(results) == 2 else None
    if args.format == "json":
        obj = {"results": [r.to_dict() for r in results]}
        if diff is not None:
            obj["difference"] = diff
        _emit(args, json.dumps(obj) + "\n")
        return 0
    lines = [
        f"{r.method:<10} {fmt_complex(r.value)}  |S|={fmt(abs(r.value))}  terms={r.terms}"
        + (f"  geometric_sums={r.evaluations}" if r.method == "decomposed" else "")
        for r in results
    ]
    if diff is not None:
        lines.append(f"difference {fmt(diff)}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_chain(args) -> int:
    value = chain_bound(args.N, args.k, parse_alpha(args.alpha))
    _emit(args, (json.dumps({"chain": value}) if args.format == "json" else fmt(value)) + "\n")
    return 0


def cmd_approx(args) -> int:
    alpha = parse_alpha(args.alpha)
    exact = alpha if isinstance(alpha, ReducedFraction) else alpha.x
    Q = args.Qmax or 1000
    wit = dirichlet_approx(exact, Q)
    convs = [str(c) for c in convergents(exact, Q)]
    if args.format == "json":
        obj = {"alpha": wit.alpha, "fraction": str(wit.fraction), "error": wit.error,
               "bound": wit.bound, "convergents": convs}
        _emit(args, json.dumps(obj) + "\n")
    else:
        _emit(args, (
            f"alpha       {fmt(wit.alpha)}\n"
            f"fraction    {wit.fraction}\n"
            f"error       {fmt(wit.error)}\n"
            f"1/q^2       {fmt(wit.bound)}\n"
            f"convergents {' '.join(convs)}\n"
        ))
    return 0


def _grid_from_args(args) -> GridSpec:
    if args.Qmax is not None and args.Qmax < 2:
        raise ValueError("q must exceed 1 (got --Qmax %d)" % args.Qmax)
    if not args.k or not args.N:
        raise ValueError("scan needs --k and --N")
    ks = _int_list(args.k)
    Ns = _int_list(args.N)
    fractions, reals = None, ()
    if args.alpha:
        alphas = [parse_alpha(s) for s in args.alpha.split(",")]
        fractions = tuple(a for a in alphas if isinstance(a, ReducedFraction))
        reals = tuple(a.x for a in alphas if isinstance(a, RealAlpha))
        if any(f.q < 2 for f in fractions):
            raise ValueError("q must exceed 1")
    boxes = None
    if args.box:
        boxes = tuple(b for b in args.box.split(";") if b)
    EnvelopeParams(args.epsilon)
    return GridSpec(
        Ns={k: tuple(Ns) for k in ks},
        q_max=args.Qmax,
        fractions=fractions,
        reals=reals,
        boxes=boxes,
        random_boxes=args.random_boxes,
        perturb=not args.no_perturb,
        epsilon=args.epsilon,
        seed=args.seed,
        direct_cap=args.direct_cap,
    )


def _records_output(args, records) -> str:
    if args.format == "json":
        return json.dumps([dict(zip(("k", "N", "a", "q", "alpha", "box_id", "S_abs", "chain", "ratio_chain",
                                     "ratio_envelope", "in_regime"),
                                    (r.k, r.N, r.a, r.q, r.alpha, r.box_id, r.S_abs, r.chain, r.ratio_chain,
                                     r.ratio_envelope, r.in_regime))) for r in records]) + "\n"
    if args.format == "table":
        head = f"{'k':>2} {'N':>9} {'a/q':>7} {'alpha':>18} {'box':>12} {'|S|':>18} {'chain':>18} {'S/chain':>14} {'S/env':>14}"
        lines = [head]
        for r in records:
            lines.append(
                f"{r.k:>2} {r.N:>9} {f'{r.a}/{r.q}':>7} {fmt(r.alpha):>18} {r.box_id:>12} "
                f"{fmt(r.S_abs):>18} {fmt(r.chain):>18} {fmt(r.ratio_chain):>14} {fmt(r.ratio_envelope):>14}"
            )
        return "\n".join(lines) + "\n"
    return records_to_csv(records, timings=args.timings)


def cmd_scan(args) -> int:
    spec = _grid_from_args(args)
    records = scan(spec, threads=args.threads)
    if args.out:
        Path(args.out).write_text(_records_output(args, records))
        Path(args.out).with_suffix(".manifest.json").write_text(manifest(spec) + "\n")
    else:
        sys.stdout.write(_records_output(args, records))
    if not records:
        return 0
    try:
        verdict = verify_chain(records)
    except ChainViolation as exc:
        print(str(exc), file=sys.stderr)
        return 2
    bad = method_mismatches(records)
    if bad:
        print(f"{len(bad)} direct/decomposed mismatch(es), first: {bad[0].describe()}", file=sys.stderr)
        return 2
    print(verdict.summary(), file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    if args.source:
        records = records_from_csv(Path(args.source).read_text())
    else:
        records = scan(_grid_from_args(args), threads=args.threads)
    report = constant_report(records, EnvelopeParams(args.epsilon))
    if args.format == "csv":
        _emit(args, report.to_csv())
    elif args.format == "json":
        rows = [
            {"k": r.k, "N_min": r.N_min, "N_max": r.N_max, "records": r.records, "max_ratio": r.max_ratio,
             "max_ratio_regime": r.max_ratio_regime, "g": r.growth if r.growth is not None else "degenerate"}
            for r in report.rows
        ]
        _emit(args, json.dumps({"epsilon": report.epsilon, "rows": rows}) + "\n")
    else:
        _emit(args, report.to_table())
    return 0


COMMANDS = {
    "sieve": cmd_sieve,
    "localized": cmd_localized,
    "hooley": cmd_hooley,
    "expsum": cmd_expsum,
    "chain": cmd_chain,
    "approx": cmd_approx,
    "scan": cmd_scan,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="locdiv", description="Exponential sums of localized divisor functions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt_default="table"):
        p.add_argument("--out", help="write output to this path instead of stdout")
        p.add_argument("--format", choices=("csv", "json", "table"), default=fmt_default)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("sieve", help="d_k on (N, 2N]")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    common(p, "csv")

    p = sub.add_parser("localized", help="Delta_J on (N, 2N]")
    p.add_argument("--k", type=int)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--box", help="'lo:hi,lo:hi,...', '*' for an unbounded interval")
    common(p, "csv")

    p = sub.add_parser("hooley", help="Hooley's Delta(n)")
    p.add_argument("--n", type=int, required=True)
    common(p)

    p = sub.add_parser("expsum", help="S_k(alpha, N)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alpha", required=True, help="'a/q' or a decimal")
    p.add_argument("--box")
    p.add_argument("--method", choices=("direct", "decomposed", "both"), default="decomposed")
    common(p)

    p = sub.add_parser("chain", help="the majorant k sum d_{k-1}(t) min(N/t, 1/||t alpha||)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alpha", required=True)
    common(p)

    p = sub.add_parser("approx", help="Dirichlet approximation and convergents")
    p.add_argument("--alpha", required=True)
    p.add_argument("--Qmax", type=int)
    common(p)

    for name in ("scan", "report"):
        p = sub.add_parser(name, help="grid scan" if name == "scan" else "envelope-constant report")
        p.add_argument("--k", help="comma-separated k values")
        p.add_argument("--N", help="comma-separated N values")
        p.add_argument("--alpha", help="comma-separated 'a/q' or decimals (default: Farey grid)")
        p.add_argument("--Qmax", type=int)
        p.add_argument("--box", help="boxes separated by ';' (default: full plus random)")
        p.add_argument("--random-boxes", type=int, default=3)
        p.add_argument("--no-perturb", action="store_true")
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--direct-cap", type=int, default=10**5)
        p.add_argument("--timings", action="store_true", help="fill eval_ms (breaks byte-identity)")
        if name == "report":
            p.add_argument("--from", dest="source", help="read records from a scan CSV")
        common(p, "csv" if name == "scan" else "table")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OverflowError, NotInvertibleError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
