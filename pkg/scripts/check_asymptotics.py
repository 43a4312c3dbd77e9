"""Region-R ray: |k| against the stationary-phase term and the scaled error
terms of the decomposition.

    python3 scripts/check_asymptotics.py --n 2 --x-min 100 --x-max 1000
"""
import argparse

import numpy as np

from brkl import make_variety
from brkl.asymptotics import RegionR, decomposition_check, loglog_slope, stationary_phase_main


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--d", type=int, nargs="+", default=[2])
    ap.add_argument("--delta1", type=float, default=0.05)
    ap.add_argument("--x-min", type=float, default=100.0)
    ap.add_argument("--x-max", type=float, default=1000.0)
    ap.add_argument("--points", type=int, default=7)
    args = ap.parse_args(argv)

    v = make_variety(args.n, len(args.d), args.d)
    region = RegionR(args.delta1, 1.0)
    xs = np.geomspace(args.x_min, args.x_max, args.points)
    print("x_norm,lambda,abs_k,ratio_to_M,E1_scaled,E2_scaled,E3_scaled,sum_diff,err_est")
    ks = []
    for x in xs:
        y = region.ray_point(v, x)
        dec, ref, err = decomposition_check(v, x, y, max_evals=10**9)
        st = stationary_phase_main(v, x, y)
        sc = dec.scaled(v.n)
        ks.append(abs(ref))
        print(f"{x:.6g},{st.lam:.6g},{abs(ref):.6e},{abs(ref) / abs(st.value):.8f},"
              f"{sc['E1']:.6e},{sc['E2']:.6e},{sc['E3']:.6e},{abs(dec.total - ref):.3e},{dec.err_est + err:.3e}")
    print(f"# slope of |k| along the ray: {loglog_slope(xs, ks):.4f} (expected {-v.n / 2})")


if __name__ == "__main__":
    main()
