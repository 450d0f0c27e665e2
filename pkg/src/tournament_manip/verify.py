"""Property suites run by ``tournament-manip verify``.

Every check yields one :class:`PropertyResult`; ``max_violation`` is the
largest amount by which a checked quantity misses its target (absolute error
for equalities, overshoot for upper bounds, shortfall for lower bounds) and a
check passes when it is at most the check's tolerance.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import NotMatchingRule, ViolationFound
from .gauntlet import (
    calcs_lhs,
    conditional_bad_batch,
    event_batch,
    framework_bound,
    gauntlet_batch,
    independence_batch,
    recursion_batch,
    subcase_3b_probability,
)
from .manipulation import (
    _strict_batches,
    alpha_pair,
    alpha_worst_case,
    coalition_gain_sum_check,
    convexity_check,
    lower_bound_formula,
    three_cycle,
)
from .rules import padded_size, winner_probs
from .tournament import (
    ProbTournament,
    edges,
    l_values_batch,
    sample_weak,
    strict_decomposition_samples,
)

EPS_GRID = tuple(round(0.05 * k, 10) for k in range(11))
EPS_COARSE = (0.1, 0.25, 0.5)
GRID_LABEL = "0:0.5:0.05"
VERIFY_HEADER = ["property", "rule", "n", "epsilon", "instances", "max_violation", "pass"]
SUITES = ("deterministic", "epsilon", "gauntlet", "framework")


@dataclass
class PropertyResult:
    prop: str
    rule: str
    n: int | str
    epsilon: float | str
    instances: int
    max_violation: float
    tol: float
    counterexample: dict | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return bool(self.max_violation <= self.tol)

    def as_csv_row(self) -> list:
        return [self.prop, self.rule, self.n, self.epsilon, self.instances,
                repr(float(self.max_violation)), "pass" if self.passed else "FAIL"]


class _Worst:
    """Running maximum of a violation array with the matrix that attains it."""

    def __init__(self):
        self.value = -np.inf
        self.count = 0
        self.where = None

    def add(self, viol: np.ndarray, p: np.ndarray | None = None, extra=None, count: int | None = None):
        viol = np.atleast_1d(np.asarray(viol, dtype=float))
        self.count += viol.size if count is None else count
        if viol.size == 0:
            return
        k = int(np.argmax(viol))
        if viol[k] > self.value:
            self.value = float(viol[k])
            if p is not None:
                mat = p if p.ndim == 2 else p[np.unravel_index(k, viol.shape)[0]]
                self.where = {"tournament": ProbTournament(mat).to_dict(), "detail": extra}

    def result(self, prop, rule, n, eps, tol) -> PropertyResult:
        value = self.value if self.count else 0.0
        r = PropertyResult(prop, rule, n, eps, self.count, value, tol)
        if not r.passed:
            r.counterexample = self.where
        return r


def _exhaustive(n, eps):
    return _strict_batches(n, eps, "exhaustive", None, 0)


# deterministic -------------------------------------------------------------

def _det_max_gain(rule: str, n: int) -> PropertyResult:
    res = alpha_worst_case(rule, n, 0.5, "exhaustive")
    r = PropertyResult("max_gain_eq_one_third", rule, n, 0.5, res.instances_checked,
                       abs(res.max_gain - 1 / 3), 1e-9)
    if not r.passed:
        r.counterexample = res.to_dict()
    return r


def _condorcet(rule: str) -> PropertyResult:
    rng = np.random.default_rng(11)
    w = _Worst()
    for n in range(2, 8):
        for _ in range(10):
            p = (rng.random((n, n)) < 0.5).astype(float)
            p = np.triu(p, 1)
            p = p + np.tril(1.0 - p.T, -1)
            np.fill_diagonal(p, 0.0)
            c = int(rng.integers(n))
            p[c, :], p[:, c], p[c, c] = 1.0, 0.0, 0.0
            w.add(abs(winner_probs(rule, p)[c] - 1.0), p, {"winner": c})
    return w.result("condorcet_consistency", rule, "2-7", "det", 1e-12)


def _deterministic_checks():
    checks = [lambda r=r, n=n: _det_max_gain(r, n) for r, n in
              (("rdm", 3), ("rdm", 4), ("rdm", 5), ("rseb", 3), ("rseb", 4))]
    checks += [lambda r=r: _condorcet(r) for r in ("rdm", "rseb", "rkoth")]
    return checks


# epsilon --------------------------------------------------------------------

def _three_cycle(rule: str) -> PropertyResult:
    w = _Worst()
    for eps in EPS_GRID:
        T = three_cycle(eps)
        w.add(abs(alpha_pair(rule, T, (0, 1)).gain - lower_bound_formula(eps)), T.p, {"epsilon": eps})
    return w.result("three_cycle_gain_eq_formula", rule, 3, GRID_LABEL, 1e-9)


def _exhaustive_formula(rule: str, n: int) -> PropertyResult:
    w = _Worst()
    for eps in EPS_GRID:
        res = alpha_worst_case(rule, n, eps, "exhaustive")
        w.add(res.max_gain - lower_bound_formula(eps), res.argmax[0].p,
              {"epsilon": eps, "pair": list(res.argmax[1])}, count=res.instances_checked)
    return w.result("exhaustive_gain_le_formula", rule, n, GRID_LABEL, 1e-9)


def _sum_check(rule: str) -> PropertyResult:
    w = _Worst()
    for eps in EPS_GRID:
        _, total = coalition_gain_sum_check(rule, eps)
        w.add(abs(total - 2 * eps * (0.5 + eps)), three_cycle(eps).p, {"epsilon": eps})
    return w.result("gain_sum_eq_closed_form", rule, 3, GRID_LABEL, 1e-9)


def _convexity(rule: str, eps: float) -> PropertyResult:
    try:
        rep = convexity_check(rule, 4, eps, 200, seed=int(eps * 1000))
    except ViolationFound as exc:
        r = PropertyResult("weak_gain_le_strict_max", rule, 4, eps, 200, np.inf, 1e-9)
        r.counterexample = {"message": str(exc), "tournament": exc.counterexample.to_dict()}
        return r
    return PropertyResult("weak_gain_le_strict_max", rule, 4, eps, 200, rep.weak_max - rep.strict_max, 1e-9)


def _decomposition(eps: float, samples: int = 100_000) -> PropertyResult:
    T = sample_weak(4, eps, 5)
    draws = strict_decomposition_samples(T, eps, samples, seed=6)
    iu = np.triu_indices(4, 1)
    mean = draws[:, iu[0], iu[1]].mean(axis=0)
    se = draws[:, iu[0], iu[1]].std(axis=0, ddof=1) / np.sqrt(samples)
    z = np.abs(mean - T.p[iu]) / np.where(se > 0, se, np.inf)
    z = np.where((se == 0) & (np.abs(mean - T.p[iu]) > 1e-12), np.inf, z)
    r = PropertyResult("decomposition_mean_within_4se", "-", 4, eps, samples, float(z.max()), 4.0)
    if not r.passed:
        r.counterexample = {"tournament": T.to_dict()}
    return r


def _epsilon_checks():
    checks = [lambda r=r: _three_cycle(r) for r in ("rdm", "rseb", "rkoth")]
    checks += [lambda r=r, n=n: _exhaustive_formula(r, n) for r, n in (("rdm", 4), ("rdm", 5), ("rseb", 4))]
    checks += [lambda r=r: _sum_check(r) for r in ("rdm", "rseb")]
    checks += [lambda r=r, e=e: _convexity(r, e) for r in ("rdm", "rseb", "rkoth") for e in EPS_COARSE]
    checks += [lambda e=e: _decomposition(e) for e in EPS_COARSE]
    return checks


# gauntlet -------------------------------------------------------------------

def _gauntlet_norm(rule: str, n: int) -> PropertyResult:
    w = _Worst()
    for p in _exhaustive(n, 0.25):
        for u in range(n):
            g = gauntlet_batch(rule, p, u)
            total = sum(g.values())
            bad_keys = [s for s in g if u in s or any(t < 0 for t in s)]
            w.add(np.abs(total - 1.0) + (np.inf if bad_keys else 0.0), p, {"focal": u})
    return w.result("gauntlet_normalized", rule, n, 0.25, 1e-9)


def _independence(rule: str, n: int) -> PropertyResult:
    w = _Worst()
    for eps in EPS_COARSE:
        for p in _exhaustive(n, eps):
            for u, v in edges(n):
                tv, _, _ = independence_batch(rule, p, u, v)
                w.add(tv, p, {"pair": [u, v], "epsilon": eps})
    return w.result("gauntlet_independence_tv", rule, n, "0.1,0.25,0.5", 1e-9)


def _refused() -> PropertyResult:
    try:
        independence_batch("rkoth", ProbTournament.uniform(4).p, 0, 1)
    except NotMatchingRule:
        return PropertyResult("independence_refused", "rkoth", 4, 0.0, 1, 0.0, 0.0)
    return PropertyResult("independence_refused", "rkoth", 4, 0.0, 1, 1.0, 0.0)


def _calcs() -> list[PropertyResult]:
    w = _Worst()
    for eps in EPS_GRID:
        for n in range(21):
            for i in range(n + 1):
                for j in range(n + 1):
                    w.add(calcs_lhs(n, i, j, eps) - 2 * eps, None)
    eq = max(abs(calcs_lhs(1, 1, 0, e) - 2 * e) for e in EPS_GRID)
    return [w.result("calcs_lhs_le_2eps", "-", "0-20", GRID_LABEL, 1e-12),
            PropertyResult("calcs_equality_n1_i1_j0", "-", 1, GRID_LABEL, len(EPS_GRID), eq, 1e-12)]


def _conditional(rule: str, n: int) -> PropertyResult:
    w = _Worst()
    for eps in EPS_GRID:
        cap = 2 * eps * (0.5 + eps)
        for p in _exhaustive(n, eps):
            for u, v in edges(n):
                w.add(conditional_bad_batch(rule, p, u, v) - cap, p, {"pair": [u, v], "epsilon": eps})
    return w.result("conditional_bad_gain_le_cap", rule, n, GRID_LABEL, 1e-9)


def _gauntlet_checks():
    checks = [lambda r=r, n=n: _gauntlet_norm(r, n) for r in ("rdm", "rseb", "rkoth") for n in (2, 3, 4)]
    checks += [lambda r=r, n=n: _independence(r, n) for r, n in
               (("rdm", 3), ("rdm", 4), ("rdm", 5), ("rseb", 3), ("rseb", 4))]
    checks += [_refused, _calcs]
    checks += [lambda r=r, n=n: _conditional(r, n) for r in ("rdm", "rseb") for n in (3, 4)]
    return checks


# framework ------------------------------------------------------------------

def _pr_bad(rule: str) -> PropertyResult:
    w = _Worst()
    rng = np.random.default_rng(3)
    for n in range(2, 9):
        expect = 1 / comb(n, 2) if rule == "rdm" else 1 / (padded_size(n) - 1)
        p = sample_weak(n, 0.5, rng).p
        for u, v in edges(n):
            b, _, _ = event_batch(rule, p, u, v)
            w.add(abs(b - expect), p, {"pair": [u, v]})
    return w.result("pr_bad_closed_form", rule, "2-8", "weak 0.5", 1e-12)


def _pr_good(rule: str, n: int) -> PropertyResult:
    w = _Worst()
    for eps in EPS_GRID[1:]:
        for p in _exhaustive(n, eps):
            for u, v in edges(n):
                b, g, _ = event_batch(rule, p, u, v)
                lu, lv = l_values_batch(p, u, v, eps)
                keep = (lu + lv) >= 1
                w.add((2 * b - g)[keep], p[keep], {"pair": [u, v], "epsilon": eps})
    return w.result("pr_good_ge_twice_pr_bad", rule, n, "0.05:0.5:0.05", 1e-9)


def _basis_order(rule: str, n: int) -> PropertyResult:
    w = _Worst()
    for eps in EPS_COARSE:
        for p in _exhaustive(n, eps):
            for u, v in edges(n):
                _, g_suf, _ = event_batch(rule, p, u, v, "sufficient")
                _, g_ex, _ = event_batch(rule, p, u, v, "exact")
                w.add(g_suf - g_ex, p, {"pair": [u, v], "epsilon": eps})
    return w.result("sufficient_pr_good_le_exact", rule, n, "0.1,0.25,0.5", 1e-9)


def _framework_triples() -> list[PropertyResult]:
    one_third = max(abs(framework_bound(1 / comb(n, 2), 2 / comb(n, 2), 1.0) - 1 / 3) for n in range(2, 13))
    curve = 0.0
    for eps in EPS_GRID:
        for n in range(2, 13):
            k = padded_size(n) - 1
            got = framework_bound(1 / k, 2 / k, 2 * eps * (0.5 + eps))
            curve = max(curve, abs(got - lower_bound_formula(eps)))
    return [PropertyResult("framework_bound_one_third", "rdm", "2-12", 0.5, 11, one_third, 1e-12),
            PropertyResult("framework_bound_formula", "rseb", "2-12", GRID_LABEL, 11 * len(EPS_GRID), curve, 1e-12)]


def _subcase() -> list[PropertyResult]:
    vals = [subcase_3b_probability(e) for e in EPS_GRID]
    err = max(abs(x - (27 / 70 - 2 * e * e / 35)) for x, e in zip(vals, EPS_GRID))
    gap = max(2 / 7 - x for x in vals)
    return [PropertyResult("subcase_3b_closed_form", "rseb", 5, GRID_LABEL, len(vals), err, 1e-9),
            PropertyResult("subcase_3b_gt_two_sevenths", "rseb", 5, GRID_LABEL, len(vals), gap, 0.0)]


def _recursion(rule: str, n: int) -> list[PropertyResult]:
    split, step = _Worst(), _Worst()
    for eps in EPS_COARSE:
        cap, f = 2 * eps * (0.5 + eps), lower_bound_formula(eps)
        for p in _exhaustive(n, eps):
            for u, v in edges(n):
                gain, bad, rec, b, g = recursion_batch(rule, p, u, v)
                info = {"pair": [u, v], "epsilon": eps}
                split.add(gain - bad - rec, p, info)
                step.add(gain - (b * cap + (1 - b - g) * f), p, info)
    return [split.result("gain_le_bad_plus_recursive", rule, n, "0.1,0.25,0.5", 1e-9),
            step.result("gain_le_inductive_step", rule, n, "0.1,0.25,0.5", 1e-9)]


def _framework_checks():
    checks = [lambda r=r: _pr_bad(r) for r in ("rdm", "rseb")]
    checks += [lambda r=r, n=n: _pr_good(r, n) for r, n in
               (("rdm", 3), ("rdm", 4), ("rdm", 5), ("rseb", 3), ("rseb", 4))]
    checks += [lambda r=r, n=n: _basis_order(r, n) for r in ("rdm", "rseb", "rkoth") for n in (3, 4)]
    checks += [_framework_triples, _subcase]
    checks += [lambda r=r, n=n: _recursion(r, n) for r, n in
               (("rdm", 3), ("rdm", 4), ("rdm", 5), ("rseb", 3), ("rseb", 4))]
    return checks


_SUITE_CHECKS = {
    "deterministic": _deterministic_checks,
    "epsilon": _epsilon_checks,
    "gauntlet": _gauntlet_checks,
    "framework": _framework_checks,
}


def run_suite(suite: str, threads: int = 1) -> list[PropertyResult]:
    """Run one suite (or ``all``); result order does not depend on ``threads``."""
    names = SUITES if suite == "all" else (suite,)
    for name in names:
        if name not in _SUITE_CHECKS:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    checks = [c for name in names for c in _SUITE_CHECKS[name]()]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            outs = list(pool.map(lambda c: c(), checks))
    else:
        outs = [c() for c in checks]
    results = []
    for o in outs:
        results.extend(o if isinstance(o, list) else [o])
    return results


def results_csv(results, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta:
        for key in sorted(meta):
            buf.write(f"# {key}: {meta[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VERIFY_HEADER)
    for r in results:
        w.writerow(r.as_csv_row())
    return buf.getvalue()
