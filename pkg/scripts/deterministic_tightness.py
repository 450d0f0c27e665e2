"""Exhaustive deterministic worst case for each rule and size, with timings."""

import argparse
import time

from tournament_manip.manipulation import alpha_worst_case


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rules", default="rdm,rseb,rkoth")
    ap.add_argument("--max-n", type=int, default=5)
    args = ap.parse_args(argv)

    print("rule,n,max_gain,argmax,instances,seconds")
    for rule in args.rules.split(","):
        for n in range(3, args.max_n + 1):
            t0 = time.perf_counter()
            res = alpha_worst_case(rule, n, 0.5)
            dt = time.perf_counter() - t0
            print(f"{rule},{n},{res.max_gain:.12f},{res.argmax_code},{res.instances_checked},{dt:.2f}")


if __name__ == "__main__":
    main()
