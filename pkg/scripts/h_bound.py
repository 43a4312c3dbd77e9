"""Minimum of H(x, y) / |y|^{1/d_max} per decade of |y| (with |x| <= |y|).

    python3 scripts/h_bound.py --d 2 4 --samples 10000
"""
import argparse

from brkl import make_variety
from brkl.cli import h_ratio_decade


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--d", type=int, nargs="+", default=[2])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--decades", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    v = make_variety(args.n, len(args.d), args.d)
    print("decade,min_ratio,median_ratio")
    for dec in args.decades:
        r = h_ratio_decade(v, dec, args.samples, args.seed)
        print(f"{dec},{r.min():.6f},{sorted(r)[len(r) // 2]:.6f}")


if __name__ == "__main__":
    main()
