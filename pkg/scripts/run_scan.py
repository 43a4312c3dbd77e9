"""Dyadic-shell L^p scan of the kernel with slope fits and verdicts.

    python3 scripts/run_scan.py --samples 20000 --out scan.csv
    python3 scripts/run_scan.py --mode region --E 128 --m-min 11 --m-max 14
"""
import argparse
import sys
from fractions import Fraction

from brkl import make_variety
from brkl.cli import SCAN_COLUMNS, to_csv
from brkl.errors import InsufficientSamples, PoorFit
from brkl.lpscan import SamplerConfig, convergence_verdict, exponent_fit, scan, theory_slope


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--L", type=int, default=2)
    ap.add_argument("--d", type=int, nargs="+", default=[2])
    ap.add_argument("--alpha", type=Fraction, default=Fraction(1, 4))
    ap.add_argument("--p", type=float, nargs="+", default=[0.9, 1.3])
    ap.add_argument("--m-min", type=int, default=8)
    ap.add_argument("--m-max", type=int, default=14)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--mode", choices=("uniform", "region"), default="uniform")
    ap.add_argument("--E", type=float, default=128.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", default="auto")
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    v = make_variety(args.n, args.L, args.d)
    threads = args.threads if args.threads == "auto" else int(args.threads)
    sampler = SamplerConfig(args.mode, E=args.E, samples=args.samples)
    by_p = scan(v, args.alpha, args.p, (args.m_min, args.m_max), sampler, args.seed, threads)
    rows = [{"m": e.m, "p": e.p, "mass": e.mass, "stderr": e.stderr, "samples": e.samples}
            for p in by_p for e in by_p[p]]
    for p, ests in by_p.items():
        th = theory_slope(v, args.alpha, p)
        try:
            fit = exponent_fit(ests, v, args.alpha)
            label = convergence_verdict(fit, v, args.alpha).label
            slope = fit.slope
        except (PoorFit, InsufficientSamples) as exc:
            print(f"p={p}: {exc}", file=sys.stderr)
            slope, label = None, "Inconclusive"
        rows.append({"m": "fit", "p": p, "slope": slope, "theory_slope": th, "verdict": label})
        print(f"p={p}: slope={slope} theory={th:.4f} {label}", file=sys.stderr)
    payload = to_csv(SCAN_COLUMNS, rows)
    if args.out:
        open(args.out, "wb").write(payload)
    else:
        sys.stdout.buffer.write(payload)


if __name__ == "__main__":
    main()
