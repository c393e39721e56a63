"""Command line entry point; every subcommand writes CSV to standard output."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

from .counting import count_near, count_on_curve
from .curves import get_curve, get_planar
from .harness import DeltaRule, ScanConfig, fit_exponent, read_csv, scan, verify_theorem, write_csv
from .linearize import block_params, sandwich_check
from .planar_sums import error_term, lemma3_count, lemma4_sum
from .selberg import selberg_coeffs
from .sublevel import classify, measure_sublevel, prop_sum


def _g(v: float) -> str:
    # shortest string that round-trips
    return repr(float(v))


def _pair(text: str) -> tuple[float, float]:
    a, b = (float(v) for v in text.split(","))
    return a, b


def _qlist(text: str) -> tuple[int, ...]:
    return tuple(int(float(v)) for v in text.split(","))


def cmd_count(args, out) -> int:
    curve = get_curve(args.curve)
    exact = True if args.exact else (False if args.float else None)
    res = count_near(curve, args.q, args.delta, exact=exact, workers=args.workers)
    if args.header:
        out.writerow(["curve", "q", "delta", "count_lo", "count_hi", "uncertain", "exact", "elapsed_ms"])
    out.writerow([curve.id, res.q, _g(res.delta), res.count_lo, res.count_hi, res.uncertain,
                  int(res.exact), f"{res.elapsed:.3f}"])
    return 0


def cmd_oncurve(args, out) -> int:
    curve = get_curve(args.curve)
    out.writerow(["curve", "q", "on_curve"])
    out.writerow([curve.id, args.q, count_on_curve(curve, args.q)])
    return 0


def cmd_sandwich(args, out) -> int:
    rep = sandwich_check(get_curve(args.curve), args.q, args.delta)
    out.writerow(["q", "delta", "B2_half", "A_lo", "A_hi", "B1_threehalf", "holds"])
    out.writerow([args.q, _g(args.delta), rep.b2_half, rep.a_mid.count_lo, rep.a_mid.count_hi,
                  rep.b1_threehalf, int(rep.holds)])
    return 0 if rep.holds else 1


def cmd_selberg(args, out) -> int:
    sys_ = selberg_coeffs(args.alpha, args.beta, args.J)
    out.writerow(["j", "re_plus", "im_plus", "re_minus", "im_minus"])
    for j in range(-args.J, args.J + 1):
        bp, bm = sys_.coeff(j, "+"), sys_.coeff(j, "-")
        out.writerow([j, _g(bp.real), _g(bp.imag), _g(bm.real), _g(bm.imag)])
    return 0


def cmd_prop5(args, out) -> int:
    res = prop_sum(get_planar(args.curve_planar), args.J, args.lam, workers=args.workers)
    out.writerow(["J", "lambda", "sum", "bound", "ratio"])
    out.writerow([args.J, _g(args.lam), _g(res.sum), _g(res.bound), _g(res.bound_ratio)])
    return 0


def cmd_measure(args, out) -> int:
    query = classify(get_planar(args.curve_planar), args.j1, args.j2, args.lam)
    rep = measure_sublevel(query)
    out.writerow(["j1", "j2", "lambda", "p", "measure"])
    for p, m in sorted(rep.per_p.items()):
        out.writerow([args.j1, args.j2, _g(args.lam), p, _g(m)])
    out.writerow([args.j1, args.j2, _g(args.lam), "total", _g(rep.total)])
    return 0


def cmd_lemma(args, out) -> int:
    phi = get_planar(args.phi)
    if args.command == "lemma3":
        rep = lemma3_count(phi, args.K, args.delta, args.U, epsilon=args.epsilon)
    else:
        rep = lemma4_sum(phi, args.K, args.delta, args.Lambda, args.U)
    out.writerow(["U", "delta", "value", "bound", "ratio", "pairs"])
    out.writerow([_g(rep.U), _g(rep.delta), _g(rep.count_or_sum), _g(rep.bound), _g(rep.ratio), rep.pairs])
    return 0


def cmd_eterm(args, out) -> int:
    curve = get_curve(args.curve)
    bp = block_params(args.q, args.delta, curve.c4)
    E = error_term(curve, args.q, args.delta)
    out.writerow(["q", "delta", "q0", "r", "J", "E"])
    out.writerow([args.q, _g(args.delta), bp.q0, bp.r, math.floor(1 / args.delta), _g(E)])
    return 0


def _sandwich_failures(records) -> int:
    return sum(1 for r in records if r.sandwich_ok is False)


def cmd_scan(args, out) -> int:
    cfg = ScanConfig.from_file(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    records = scan(cfg)
    target = args.output or cfg.output
    if target:
        write_csv(records, target)
    else:
        write_csv(records, sys.stdout)
    bad = _sandwich_failures(records)
    if bad:
        logging.error("%d record(s) violate the block sandwich", bad)
    return 1 if bad else 0


def cmd_fit(args, out) -> int:
    fit = fit_exponent(read_csv(args.input), args.x, args.y)
    out.writerow(["slope", "intercept", "r_squared", "n_points"])
    out.writerow([_g(fit.slope), _g(fit.intercept), _g(fit.r_squared), fit.n_points])
    return 0


def cmd_verify(args, out) -> int:
    cfg = ScanConfig(curves=[args.curve], delta_rule=DeltaRule.parse(args.rule), q_list=args.q,
                     workers=args.workers)
    rep = verify_theorem(args.curve, cfg, max_spread=args.max_spread)
    out.writerow(["q", "delta", "A_lo", "A_hi", "main", "secondary", "upper_ratio", "lower_ratio",
                  "dominant", "sandwich"])
    for c in rep.cells:
        sw = "" if c.sandwich_ok is None else int(c.sandwich_ok)
        out.writerow([c.q, _g(c.delta), c.A_lo, c.A_hi, _g(c.main), _g(c.secondary), _g(c.upper_ratio),
                      _g(c.lower_ratio), c.dominant, sw])
    print(f"# upper_spread={rep.upper_spread:.6g} lower_min={rep.lower_min:.6g} "
          f"bounded={rep.bounded} cells={len(rep.cells)}", file=sys.stderr)
    return 0 if rep.sandwich_ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nearcurve", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="A(q, delta) with its certainty interval")
    p.add_argument("--curve", required=True, help="built-in id or curve file")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="force exact rational arithmetic")
    mode.add_argument("--float", action="store_true", help="force the guard-banded float path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--header", action="store_true", help="emit a header row first")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("oncurve", help="points lying exactly on the dilated curve")
    p.add_argument("--curve", required=True)
    p.add_argument("--q", type=int, required=True)
    p.set_defaults(func=cmd_oncurve)

    p = sub.add_parser("sandwich", help="B2(q, delta/2) <= A(q, delta) <= B1(q, 3 delta/2)")
    p.add_argument("--curve", required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_sandwich)

    p = sub.add_parser("selberg", help="majorant/minorant coefficients for (alpha, beta)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--J", type=int, required=True)
    p.set_defaults(func=cmd_selberg)

    p = sub.add_parser("prop5", help="sum of sublevel measures over |j1|, |j2| <= J")
    p.add_argument("--curve-planar", default="x2")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_prop5)

    p = sub.add_parser("measure", help="per-p measures of {x: ||j1 x + j2 f(x)|| < lambda}")
    p.add_argument("--curve-planar", default="x2")
    p.add_argument("--j1", type=int, required=True)
    p.add_argument("--j2", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_measure)

    for name, text in (("lemma3", "count rational points t/u within delta of a planar curve"),
                       ("lemma4", "sum of ||u phi(t/u)||^-Lambda over points at least delta away")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--phi", default="x2")
        p.add_argument("--K", type=_pair, required=True, help="a,b")
        p.add_argument("--U", type=float, required=True)
        p.add_argument("--delta", type=float, required=True)
        p.add_argument("--Lambda", type=float, default=0.5)
        p.add_argument("--epsilon", type=float, default=0.1)
        p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("eterm", help="exponential-sum error term E(q, delta)")
    p.add_argument("--curve", required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_eterm)

    p = sub.add_parser("scan", help="grid scan from a key-value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None, help="CSV path (default: config value or stdout)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fit", help="log-log slope of two scan columns")
    p.add_argument("--input", required=True)
    p.add_argument("--x", default="q")
    p.add_argument("--y", default="A_lo")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="normalized upper/lower ratios across q")
    p.add_argument("--curve", required=True)
    p.add_argument("--rule", required=True, help="fixed:x | power:c:theta | theorem:c")
    p.add_argument("--q", type=_qlist, default=(10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7))
    p.add_argument("--max-spread", type=float, default=3.0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = csv.writer(sys.stdout, lineterminator="\n")
    try:
        return args.func(args, out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
