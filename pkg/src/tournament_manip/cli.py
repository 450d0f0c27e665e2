"""Command-line front end: ``tournament-manip {winners,alpha,sweep,verify,gauntlet}``.

Artifacts go to stdout (or ``--output``), logs to stderr.  Exit status is 0 on
success, 1 when a checked property fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .errors import NotMatchingRule, TournamentError, ViolationFound
from .gauntlet import (
    conditional_bad_gain,
    event_probabilities,
    gauntlet_distribution,
    gauntlet_independence_check,
    recursion_terms,
)
from .manipulation import alpha_pair, alpha_worst_case, epsilon_sweep, sweep_csv, three_cycle
from .rules import Rule, exact_winner_distribution, mc_winner_distribution
from .tournament import (
    ProbTournament,
    check_coalition,
    det_cycle,
    edges,
    sample_strict,
    sample_weak,
    transitive,
)
from .verify import SUITES, results_csv, run_suite

log = logging.getLogger("tournament_manip")
THREADS_ENV = "TOURNAMENT_MANIP_THREADS"


class UsageError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """Inclusive ``start:stop:step`` grid, or a comma-separated list."""
    if ":" not in text:
        return [float(x) for x in text.split(",") if x.strip()]
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected start:stop:step") from None
    if step <= 0 or b < a:
        raise UsageError(f"bad grid {text!r}; need step > 0 and stop >= start")
    count = int(round((b - a) / step))
    if a + count * step > b + 1e-9:
        count -= 1
    return [round(a + k * step, 12) for k in range(count + 1)]


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def build_tournament(args) -> ProbTournament:
    chosen = [name for name in ("three_cycle", "det_cycle", "transitive", "uniform", "strict_random",
                                "weak_random", "tournament") if getattr(args, name, None) not in (None, False)]
    if len(chosen) != 1:
        raise UsageError("give exactly one tournament source (a generator flag or --tournament FILE)")
    src = chosen[0]
    eps = args.epsilon
    if src in ("three_cycle", "strict_random", "weak_random") and eps is None:
        raise UsageError(f"--{src.replace('_', '-')} needs --epsilon")
    if src == "three_cycle":
        return three_cycle(eps)
    if src == "det_cycle":
        return det_cycle(args.det_cycle)
    if src == "transitive":
        return transitive(args.transitive)
    if src == "uniform":
        return ProbTournament.uniform(args.uniform)
    if src == "strict_random":
        return sample_strict(args.strict_random, eps, args.seed)
    if src == "weak_random":
        return sample_weak(args.weak_random, eps, args.seed)
    return ProbTournament.load(args.tournament)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _envelope(args, result) -> dict:
    return {"version": __version__, "config": _config(args), "seed": args.seed, "result": result}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


def _meta(args) -> dict:
    return {"version": __version__, "config": json.dumps(_config(args), sort_keys=True, default=str),
            "seed": args.seed}


def cmd_winners(args) -> tuple[str, int]:
    T = build_tournament(args)
    if args.mode == "exact":
        dist = exact_winner_distribution(args.rule, T)
    else:
        dist, _ = mc_winner_distribution(args.rule, T, args.trials, args.seed, args.threads)
    out = dist.to_dict()
    out["tournament"] = T.to_dict()
    return _dump(_envelope(args, out)), 0


def cmd_alpha(args) -> tuple[str, int]:
    if args.exhaustive or args.sampled:
        if args.n is None or args.epsilon is None:
            raise UsageError("--exhaustive/--sampled need --n and --epsilon")
        mode = "exhaustive" if args.exhaustive else "sampled"
        res = alpha_worst_case(args.rule, args.n, args.epsilon, mode, args.budget, args.seed)
        out = res.to_dict()
        out["gain"] = res.max_gain
        return _dump(_envelope(args, out)), 0
    T = build_tournament(args)
    pairs = [tuple(args.pair)] if args.pair else edges(T.n)
    reports = [alpha_pair(args.rule, T, S, args.mode, args.trials, args.seed) for S in pairs]
    best = max(reports, key=lambda r: r.gain)  # first pair wins ties
    out = best.to_dict()
    out["instances_checked"] = len(reports)
    out["argmax_pair"] = list(best.coalition)
    if len(reports) > 1:
        out["per_pair"] = [{"pair": list(r.coalition), "gain": r.gain} for r in reports]
    return _dump(_envelope(args, out)), 0


def cmd_sweep(args) -> tuple[str, int]:
    mode = "sampled" if args.sampled else "exhaustive"
    if args.n is None:
        raise UsageError("sweep needs --n")
    rows = epsilon_sweep(args.rule, args.n, parse_grid(args.eps_grid), mode, args.budget, args.seed)
    if args.format == "json":
        body = [dict(zip(("rule", "n", "epsilon", "mode", "max_gain", "formula", "slack", "argmax_code",
                          "instances"), [r.rule.value, r.n, r.epsilon, r.as_csv_row()[3], r.max_gain,
                                         r.formula, r.slack, r.argmax_code, r.instances])) for r in rows]
        return _dump(_envelope(args, body)), 0
    return sweep_csv(rows, _meta(args)), 0


def cmd_verify(args) -> tuple[str, int]:
    results = run_suite(args.suite, args.threads)
    failed = [r for r in results if not r.passed]
    code = 1 if failed else 0
    if args.format == "json":
        body = [{"property": r.prop, "rule": r.rule, "n": r.n, "epsilon": r.epsilon, "instances": r.instances,
                 "max_violation": r.max_violation, "pass": r.passed, "counterexample": r.counterexample}
                for r in results]
        return _dump(_envelope(args, body)), code
    text = results_csv(results, _meta(args))
    for r in failed:
        text += f"# counterexample {r.prop} {r.rule} n={r.n}: {json.dumps(r.counterexample, sort_keys=True)}\n"
    return text, code


def cmd_gauntlet(args) -> tuple[str, int]:
    T = build_tournament(args)
    rule = Rule.parse(args.rule)
    if args.team is not None:
        (u,) = check_coalition((args.team,), T.n)
        out = {"gauntlet": gauntlet_distribution(rule, T, u).to_dict()}
        if rule.is_matching:
            tvs = {v: gauntlet_independence_check(rule, T, u, v)[1] for v in range(T.n) if v != u}
            out["independence"] = {"status": "checked", "max_tv": max(tvs.values(), default=0.0),
                                   "per_partner": {str(v): tv for v, tv in tvs.items()}}
        else:
            out["independence"] = {"status": "refused",
                                   "reason": f"{rule.value} is not a matching rule"}
        return _dump(_envelope(args, out)), 0
    if not args.pair:
        raise UsageError("gauntlet needs --team U or --pair U V")
    u, v = check_coalition(tuple(args.pair), T.n)
    if len({u, v}) != 2:
        raise UsageError("--pair needs two distinct teams")
    out: dict = {}
    if args.events:
        out["events"] = event_probabilities(rule, T, (u, v), args.basis).to_dict()
        try:
            out["conditional_bad_gain"] = conditional_bad_gain(rule, T, (u, v))
            out["recursion"] = recursion_terms(rule, T, (u, v)).to_dict()
        except NotMatchingRule as exc:
            out["conditional_bad_gain"] = {"status": "refused", "reason": str(exc)}
    else:
        try:
            dists, tv = gauntlet_independence_check(rule, T, u, v)
            out["independence"] = {"status": "checked", "max_tv": tv,
                                   "gauntlets": {str(w): d.to_dict() for w, d in dists.items()}}
        except NotMatchingRule as exc:
            out["independence"] = {"status": "refused", "reason": str(exc)}
    return _dump(_envelope(args, out)), 0


def _add_tournament_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tournament source")
    g.add_argument("--three-cycle", action="store_true", help="3-team cycle with favourites at 1/2 + eps")
    g.add_argument("--det-cycle", type=int, metavar="K", help="deterministic rotational tournament on K teams")
    g.add_argument("--transitive", type=int, metavar="K", help="team i beats team j whenever i < j")
    g.add_argument("--uniform", type=int, metavar="K", help="every match a coin flip")
    g.add_argument("--strict-random", type=int, metavar="N", help="random strictly eps-bounded tournament")
    g.add_argument("--weak-random", type=int, metavar="N", help="random weakly eps-bounded tournament")
    g.add_argument("--tournament", metavar="FILE", help="JSON file with keys n and p")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rule", required=True, choices=[r.value for r in Rule])
    common.add_argument("--epsilon", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default from ${THREADS_ENV} or 1)")
    common.add_argument("--output", metavar="PATH", help="write the artifact here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tournament-manip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("winners", parents=[common], help="winner distribution of one tournament")
    _add_tournament_flags(w)
    w.add_argument("--mode", choices=["exact", "mc"], default="exact")
    w.add_argument("--trials", type=int, default=100_000)
    w.set_defaults(func=cmd_winners)

    a = sub.add_parser("alpha", parents=[common], help="two-team manipulation gain")
    _add_tournament_flags(a)
    a.add_argument("--pair", type=int, nargs=2, metavar=("U", "V"))
    a.add_argument("--mode", choices=["exact", "mc"], default="exact")
    a.add_argument("--trials", type=int, default=200_000)
    search = a.add_mutually_exclusive_group()
    search.add_argument("--exhaustive", action="store_true", help="worst case over all strict tournaments")
    search.add_argument("--sampled", action="store_true", help="worst case over --budget random strict ones")
    a.add_argument("--n", type=int)
    a.add_argument("--budget", type=int)
    a.set_defaults(func=cmd_alpha)

    s = sub.add_parser("sweep", parents=[common], help="worst-case gain across an epsilon grid (CSV)")
    s.add_argument("--n", type=int)
    s.add_argument("--eps-grid", required=True, metavar="A:B:STEP")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", help="enumerate every strict tournament (default)")
    mode.add_argument("--sampled", action="store_true")
    s.add_argument("--budget", type=int)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_sweep)

    verify_common = argparse.ArgumentParser(add_help=False)
    for action in common._actions:
        if action.dest != "rule":
            verify_common._add_action(action)
    v = sub.add_parser("verify", parents=[verify_common], help="run property suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--format", choices=["csv", "json"], default="csv")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gauntlet", parents=[common], help="gauntlets, independence and event probabilities")
    _add_tournament_flags(g)
    g.add_argument("--team", type=int)
    g.add_argument("--pair", type=int, nargs=2, metavar=("U", "V"))
    g.add_argument("--events", action="store_true", help="report bad/good/recursive probabilities for --pair")
    g.add_argument("--basis", choices=["sufficient", "exact"], default="sufficient")
    g.set_defaults(func=cmd_gauntlet)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        log.info("running %s", args.command)
        text, code = args.func(args)
    except ViolationFound as exc:
        cex = exc.counterexample.to_dict() if hasattr(exc.counterexample, "to_dict") else exc.counterexample
        sys.stdout.write(_dump({"error": "ViolationFound", "message": str(exc), "counterexample": cex}))
        return 1
    except (TournamentError, UsageError, ValueError, OSError) as exc:
        sys.stdout.write(_dump({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        log.info("wrote %s", args.output)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
