"""Monte Carlo winner estimates against the exact engine on random instances."""

import argparse

import numpy as np

from tournament_manip.rules import exact_winner_distribution, mc_winner_distribution
from tournament_manip.tournament import sample_weak


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rules", default="rdm,rseb,rkoth")
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print("rule,instance,max_abs_err,max_z")
    for rule in args.rules.split(","):
        for k in range(args.instances):
            T = sample_weak(args.n, args.epsilon, rng)
            mc, se = mc_winner_distribution(rule, T, args.trials, seed=args.seed + k, threads=args.threads)
            diff = np.abs(mc.probs - exact_winner_distribution(rule, T).probs)
            z = np.divide(diff, se, out=np.zeros_like(diff), where=se > 0)
            print(f"{rule},{k},{diff.max():.3e},{z.max():.2f}")


if __name__ == "__main__":
    main()
