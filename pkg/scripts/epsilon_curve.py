"""Worst-case two-team gain against the closed-form curve over a grid of epsilon."""

import argparse
import sys

from tournament_manip.cli import parse_grid
from tournament_manip.manipulation import epsilon_sweep, sweep_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rules", default="rdm,rseb,rkoth")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--grid", default="0:0.5:0.05")
    ap.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    ap.add_argument("--budget", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rows = []
    for rule in args.rules.split(","):
        rows += epsilon_sweep(rule, args.n, parse_grid(args.grid), args.mode, args.budget, args.seed)
    sys.stdout.write(sweep_csv(rows, {"n": args.n, "grid": args.grid, "seed": args.seed}))
    worst = min((r for r in rows if not r.exploratory), key=lambda r: r.slack, default=None)
    if worst is not None:
        print(f"# smallest slack {worst.slack:.3e} ({worst.rule.value}, eps={worst.epsilon})", file=sys.stderr)


if __name__ == "__main__":
    main()
