"""Analytic vs finite-difference gradients over several seeds, one line per seed.

    python scripts/gradcheck.py --seeds 0 1 2 3 4 --instances 20
"""

import argparse

from nlvar.experiments import GRADCHECK_TOL, gradient_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    ap.add_argument("--instances", type=int, default=20)
    args = ap.parse_args()
    for seed in args.seeds:
        worst = gradient_check(seed, args.instances)
        flag = "ok" if max(worst.values()) < GRADCHECK_TOL else "FAIL"
        print(f"seed {seed}: " + " ".join(f"{k}={v:.2e}" for k, v in worst.items()) + f" {flag}")


if __name__ == "__main__":
    main()
