"""Ratios |integral| / van der Corput bound for the Fresnel family and a
random family of radial monomial phases.

    python3 scripts/vdc_suite.py --random 100
"""
import argparse

import numpy as np

from brkl.asymptotics import fresnel_suite, random_radial_suite, vdc_check


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--lambdas", type=int, default=31)
    ap.add_argument("--random", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args(argv)

    for name, cases in (("fresnel", fresnel_suite(np.geomspace(10, 1e4, args.lambdas))),
                        ("random", random_radial_suite(args.random, args.seed))):
        stats = vdc_check(cases, args.threads)
        print(f"{name}: max={stats.max:.4f} median={stats.median:.4f}")
        for dec in sorted(k for k in stats.per_decade if k is not None):
            print(f"  kappa in [1e{dec}, 1e{dec + 1}): max ratio {stats.per_decade[dec]:.4f}")


if __name__ == "__main__":
    main()
