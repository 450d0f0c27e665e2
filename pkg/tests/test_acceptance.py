"""End-to-end acceptance gate: one test per criterion, each at its stated tolerance."""

import itertools
import math
import time

import numpy as np

from tournament_manip import NotMatchingRule, ProbTournament
from tournament_manip.gauntlet import (
    calcs_lhs,
    conditional_bad_batch,
    event_batch,
    framework_bound,
    independence_batch,
    subcase_3b_probability,
)
from tournament_manip.manipulation import (
    _strict_batches,
    alpha_pair,
    alpha_worst_case,
    coalition_gain_sum_check,
    convexity_check,
    lower_bound_formula,
    three_cycle,
)
from tournament_manip.rules import (
    exact_winner_distribution,
    mc_winner_distribution,
    padded_size,
    winner_probs,
)
from tournament_manip.tournament import (
    edges,
    enumerate_strict_batches,
    l_values_batch,
    sample_weak,
    strict_decomposition_samples,
)

GRID = [round(0.05 * k, 10) for k in range(11)]


def exhaustive(n, eps):
    return _strict_batches(n, eps, "exhaustive", None, 0)


def test_criterion_01_deterministic_tightness(acceptance):
    start = time.perf_counter()
    got = {(r, n): alpha_worst_case(r, n, 0.5).max_gain
           for r, n in [("rdm", 3), ("rdm", 4), ("rdm", 5), ("rseb", 3), ("rseb", 4)]}
    elapsed = time.perf_counter() - start
    err = max(abs(g - 1 / 3) for g in got.values())
    ok = err <= 1e-9 and elapsed < 300
    acceptance(1, ok, f"max |gain - 1/3| = {err:.2e} over {sorted(got)}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_epsilon_curve(acceptance):
    cyc = max(abs(alpha_pair(r, three_cycle(e), (0, 1)).gain - lower_bound_formula(e))
              for r in ("rdm", "rseb") for e in GRID)
    over = max(alpha_worst_case(r, 4, e).max_gain - lower_bound_formula(e) for r in ("rdm", "rseb") for e in GRID)
    ok = cyc <= 1e-9 and over <= 1e-9
    acceptance(2, ok, f"3-cycle max error {cyc:.2e}; n=4 exhaustive max overshoot {over:.2e}")
    assert ok


def test_criterion_03_lower_bound_sum(acceptance):
    err = max(abs(coalition_gain_sum_check(r, e)[1] - 2 * e * (0.5 + e)) for r in ("rdm", "rseb") for e in GRID)
    ok = err <= 1e-9
    acceptance(3, ok, f"max |sum - 2e(1/2+e)| = {err:.2e}")
    assert ok


def test_criterion_04_framework_constants(acceptance):
    bad_err = 0.0
    for n in range(2, 9):
        p = sample_weak(n, 0.5, n).p
        for u, v in edges(n):
            bad_err = max(bad_err, abs(float(event_batch("rdm", p, u, v)[0]) - 1 / math.comb(n, 2)))
            bad_err = max(bad_err, abs(float(event_batch("rseb", p, u, v)[0]) - 1 / (padded_size(n) - 1)))
    shortfall, checked = -np.inf, 0
    for rule, nmax in (("rdm", 5), ("rseb", 4)):
        for n in range(3, nmax + 1):
            for e in GRID[1:]:
                for p in exhaustive(n, e):
                    for u, v in edges(n):
                        b, g, _ = event_batch(rule, p, u, v)
                        lu, lv = l_values_batch(p, u, v, e)
                        keep = (lu + lv) >= 1
                        checked += int(keep.sum())
                        if keep.any():
                            shortfall = max(shortfall, float((2 * b - g)[keep].max()))
    fb = max(abs(framework_bound(1 / math.comb(n, 2), 2 / math.comb(n, 2), 1.0) - 1 / 3) for n in range(2, 13))
    fb = max(fb, max(abs(framework_bound(1 / (padded_size(n) - 1), 2 / (padded_size(n) - 1), 2 * e * (0.5 + e))
                         - lower_bound_formula(e)) for n in range(2, 13) for e in GRID))
    ok = bad_err <= 1e-12 and shortfall <= 1e-9 and fb <= 1e-12
    acceptance(4, ok, f"pr_bad error {bad_err:.2e}; max (2 pr_bad - pr_good) {shortfall:.2e} over {checked} "
                      f"instance-pairs; framework_bound error {fb:.2e}")
    assert ok


def test_criterion_05_conditional_bad_gain(acceptance):
    worst = -np.inf
    for rule in ("rdm", "rseb"):
        for n in (3, 4):
            for e in GRID:
                for p in exhaustive(n, e):
                    for u, v in edges(n):
                        worst = max(worst, float((conditional_bad_batch(rule, p, u, v) - 2 * e * (0.5 + e)).max()))
    ok = worst <= 1e-9
    acceptance(5, ok, f"max (conditional gain - 2e(1/2+e)) = {worst:.2e}")
    assert ok


def test_criterion_06_gauntlet_independence(acceptance):
    worst = 0.0
    for rule, nmax in (("rdm", 5), ("rseb", 4)):
        for n in range(2, nmax + 1):
            for e in GRID:
                for p in exhaustive(n, e):
                    for u, v in edges(n):
                        worst = max(worst, float(independence_batch(rule, p, u, v)[0].max()))
    try:
        independence_batch("rkoth", ProbTournament.uniform(4).p, 0, 1)
        refused = False
    except NotMatchingRule:
        refused = True
    ok = worst <= 1e-9 and refused
    acceptance(6, ok, f"max TV {worst:.2e}; rkoth refused: {refused}")
    assert ok


def test_criterion_07_calcs(acceptance):
    over = max(calcs_lhs(n, i, j, e) - 2 * e for e in GRID for n in range(21)
               for i in range(n + 1) for j in range(n + 1))
    eq = max(abs(calcs_lhs(1, 1, 0, e) - 2 * e) for e in GRID)
    ok = over <= 1e-12 and eq <= 1e-12
    acceptance(7, ok, f"max (lhs - 2e) = {over:.2e}; equality gap at (1,1,0) {eq:.2e}")
    assert ok


def test_criterion_08_subcase(acceptance):
    err = max(abs(subcase_3b_probability(e) - (27 / 70 - 2 * e * e / 35)) for e in GRID)
    ok = err <= 1e-9
    acceptance(8, ok, f"max |pr - (27/70 - 2e^2/35)| = {err:.2e}")
    assert ok


def test_criterion_09_convexity(acceptance):
    worst = -np.inf
    for rule in ("rdm", "rseb", "rkoth"):
        for e in (0.1, 0.25, 0.5):
            rep = convexity_check(rule, 4, e, 200, seed=int(1000 * e))
            worst = max(worst, rep.weak_max - rep.strict_max)
    zmax = 0.0
    iu = np.triu_indices(4, 1)
    for k, e in enumerate((0.1, 0.25, 0.5)):
        T = sample_weak(4, e, 100 + k)
        x = strict_decomposition_samples(T, e, 100_000, seed=200 + k)[:, iu[0], iu[1]]
        se = x.std(axis=0, ddof=1) / math.sqrt(len(x))
        zmax = max(zmax, float((np.abs(x.mean(axis=0) - T.p[iu]) / se).max()))
    ok = worst <= 1e-9 and zmax <= 4
    acceptance(9, ok, f"max (weak - strict max) = {worst:.2e}; decomposition max |z| = {zmax:.2f}")
    assert ok


def test_criterion_10_engine_consistency(acceptance):
    rng = np.random.default_rng(2024)
    zmax = 0.0
    for rule in ("rdm", "rseb", "rkoth"):
        for _ in range(20):
            T = sample_weak(5, 0.5, rng)
            mc, se = mc_winner_distribution(rule, T, 1_000_000, seed=int(rng.integers(1 << 31)))
            exact = exact_winner_distribution(rule, T).probs
            diff = np.abs(mc.probs - exact)
            z = np.where(se > 0, diff / np.where(se > 0, se, 1), np.where(diff > 0, np.inf, 0.0))
            zmax = max(zmax, float(z.max()))
    condorcet = 0.0
    for rule in ("rdm", "rseb", "rkoth"):
        for n in range(2, 6):
            for _, mats in enumerate_strict_batches(n, 0.5):
                beats_all = np.all((mats == 1.0) | np.eye(n, dtype=bool), axis=2)
                has = beats_all.any(axis=1)
                if has.any():
                    probs = winner_probs(rule, mats)
                    c = beats_all.argmax(axis=1)
                    condorcet = max(condorcet, float(np.abs(probs[has, c[has]] - 1).max()))
    anon = 0.0
    for rule in ("rdm", "rseb", "rkoth"):
        for n in (3, 4, 5):
            p = sample_weak(n, 0.5, rng).p
            base = winner_probs(rule, p)
            for perm in itertools.permutations(range(n)):
                s = np.array(perm)
                q = np.empty_like(p)
                q[np.ix_(s, s)] = p
                anon = max(anon, float(np.abs(winner_probs(rule, q)[s] - base).max()))
    ok = zmax <= 4 and condorcet <= 1e-12 and anon <= 1e-12
    acceptance(10, ok, f"MC max |z| = {zmax:.2f} over 60 instances; Condorcet error {condorcet:.2e}; "
                       f"anonymity error {anon:.2e}")
    assert ok
