"""Coalition gains, worst-case searches over bounded classes, and the 3-cycle witness."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import BadCoalition, TooLarge, ViolationFound
from .rules import ExactSolver, Rule, check_exact_cap, coalition_win_prob
from .tournament import (
    MAX_ENUM_BITS,
    ProbTournament,
    _rng,
    check_coalition,
    check_epsilon,
    edges,
    sample_weak,
    strict_code,
    strict_matrices,
)

GAIN_TOL = 1e-9
SWEEP_HEADER = ["rule", "n", "epsilon", "mode", "max_gain", "formula", "slack", "argmax_code", "instances"]


def lower_bound_formula(eps: float) -> float:
    eps = check_epsilon(eps)
    return eps / 3 + 2 * eps**2 / 3


def three_cycle(eps: float) -> ProbTournament:
    """Teams 0 -> 1 -> 2 -> 0, each favourite winning with probability 1/2 + eps."""
    eps = check_epsilon(eps)
    p = np.zeros((3, 3))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        p[a, b] = 0.5 + eps
        p[b, a] = 0.5 - eps
    return ProbTournament(p)


def with_match(p: np.ndarray, u: int, v: int, value: float) -> np.ndarray:
    """Copy of a (batched) matrix with ``p[u, v]`` set to ``value``."""
    q = np.array(p, dtype=float)
    q[..., u, v] = value
    q[..., v, u] = 1.0 - value
    return q


def pair_values(solver: ExactSolver, u: int, v: int, alive: int | None = None):
    """Coalition win probability for ``{u, v}`` on T and on its two extremes.

    Returns ``(baseline, at_zero, at_one)`` arrays over the solver's batch.
    """
    S = (u, v)
    solver.dist(alive)
    low = solver.derive(with_match(solver.p, u, v, 0.0), u, v)
    high = solver.derive(with_match(solver.p, u, v, 1.0), u, v)
    return solver.coalition(alive, S), low.coalition(alive, S), high.coalition(alive, S)


def batch_pair_gains(rule, p: np.ndarray) -> np.ndarray:
    """Gain of every unordered pair for a batch of tournaments, shape ``(B, C(n, 2))``."""
    solver = ExactSolver(rule, p)
    solver.dist()
    cols = []
    for u, v in edges(p.shape[-1]):
        base, low, high = pair_values(solver, u, v)
        cols.append(np.maximum(np.maximum(low, high), base) - base)
    return np.stack(cols, axis=-1)


@dataclass
class ManipulationReport:
    rule: Rule
    tournament: ProbTournament
    coalition: tuple[int, int]
    baseline: float
    best_manipulated: float
    gain: float
    best_direction: float  # value of p'[u][v] at the maximising extreme

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.value,
            "coalition": list(self.coalition),
            "baseline": self.baseline,
            "best_manipulated": self.best_manipulated,
            "gain": self.gain,
            "best_direction": self.best_direction,
            "tournament": self.tournament.to_dict(),
        }


def alpha_pair(rule, T: ProbTournament, S, mode: str = "exact", trials: int = 200_000, seed: int = 0) -> ManipulationReport:
    """Best gain for the pair ``S`` from fixing their own match in advance.

    Coalition win probability is affine in ``p[u][v]``, so only the two
    extremes need evaluating.  In ``mc`` mode all three estimates share a seed.
    """
    rule = Rule.parse(rule)
    if len(set(S)) != 2:
        raise BadCoalition(f"alpha_pair needs a two-team coalition, got {S!r}")
    u, v = check_coalition(S, T.n)
    if mode == "exact":
        solver = ExactSolver(rule, T.p)
        base, low, high = (float(x) for x in pair_values(solver, u, v))
    elif mode == "mc":
        base = coalition_win_prob(rule, T, (u, v), "mc", trials, seed)
        low = coalition_win_prob(rule, T.with_entry(u, v, 0.0), (u, v), "mc", trials, seed)
        high = coalition_win_prob(rule, T.with_entry(u, v, 1.0), (u, v), "mc", trials, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    best, direction = (high, 1.0) if high > low else (low, 0.0)
    best = max(best, base)
    return ManipulationReport(rule, T, (u, v), base, best, best - base, direction)


@dataclass
class WorstCaseResult:
    rule: Rule
    n: int
    epsilon: float
    mode: str
    max_gain: float
    argmax: tuple[ProbTournament, tuple[int, int]]
    argmax_code: str
    instances_checked: int

    def to_dict(self) -> dict:
        T, pair = self.argmax
        return {
            "rule": self.rule.value,
            "n": self.n,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "max_gain": self.max_gain,
            "argmax_code": self.argmax_code,
            "argmax_pair": list(pair),
            "argmax_tournament": T.to_dict(),
            "instances_checked": self.instances_checked,
        }


def _chunk_size(n: int) -> int:
    return int(max(1, min(2048, 2**22 // ((1 << n) * n))))


def _strict_batches(n: int, eps: float, mode: str, budget: int | None, seed):
    """Yield ``(batch, codes)`` covering the requested strict tournaments in order."""
    m = n * (n - 1) // 2
    chunk = _chunk_size(n)
    if mode == "exhaustive":
        if m > MAX_ENUM_BITS:
            raise TooLarge(f"{m} edge bits for n={n} exceeds the cap of {MAX_ENUM_BITS}")
        for start in range(0, 1 << m, chunk):
            codes = np.arange(start, min(start + chunk, 1 << m))
            yield strict_matrices(n, eps, codes)
    elif mode == "sampled":
        if not budget or budget < 1:
            raise ValueError("sampled mode needs a positive budget")
        rng = _rng(seed)
        iu = np.triu_indices(n, 1)
        for start in range(0, budget, chunk):
            size = min(chunk, budget - start)
            bits = rng.integers(0, 2, size=(size, m))
            p = np.zeros((size, n, n))
            upper = np.where(bits == 1, 0.5 + eps, 0.5 - eps)
            p[:, iu[0], iu[1]] = upper
            p[:, iu[1], iu[0]] = 1.0 - upper
            yield p
    else:
        raise ValueError(f"unknown mode {mode!r}")


def alpha_worst_case(rule, n: int, eps: float, mode: str = "exhaustive", budget: int | None = None, seed=0) -> WorstCaseResult:
    """Largest two-team gain over strictly eps-bounded tournaments on ``n`` teams.

    Ties go to the lowest enumeration index, then the lowest pair.
    """
    rule = Rule.parse(rule)
    eps = check_epsilon(eps)
    check_exact_cap(rule, n)
    if n < 2:
        raise BadCoalition("need at least two teams for a coalition")
    pairs = edges(n)
    best, best_p, best_pair, checked = -np.inf, None, None, 0
    for batch in _strict_batches(n, eps, mode, budget, seed):
        gains = batch_pair_gains(rule, batch)
        k = int(np.argmax(gains))
        if gains.flat[k] > best:
            b, j = divmod(k, len(pairs))
            best, best_p, best_pair = float(gains.flat[k]), batch[b], pairs[j]
        checked += gains.size
    T = ProbTournament(best_p)
    code = f"{strict_code(T.p)}:{best_pair[0]}-{best_pair[1]}"
    return WorstCaseResult(rule, n, eps, mode, best, (T, best_pair), code, checked)


def coalition_gain_sum_check(rule, eps: float):
    """Gains on the 3-cycle when each favourite throws to its victim, and their sum.

    Team 0 throws to 1, 1 to 2 and 2 to 0.  For any Condorcet-consistent rule
    the sum is ``2 eps (1/2 + eps)``.
    """
    rule = Rule.parse(rule)
    T = three_cycle(eps)
    solver = ExactSolver(rule, T.p)
    gains = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        thrown = solver.derive(with_match(T.p, a, b, 0.0), a, b)
        gains.append(float(thrown.coalition(None, (a, b)) - solver.coalition(None, (a, b))))
    return tuple(gains), float(sum(gains))


@dataclass
class ConvexityReport:
    rule: Rule
    n: int
    epsilon: float
    strict_max: float
    weak_max: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {k: (v.value if isinstance(v, Rule) else v) for k, v in self.__dict__.items()}


def convexity_check(rule, n: int, eps: float, samples: int, seed=0) -> ConvexityReport:
    """Check sampled weakly bounded gains never exceed the exhaustive strict maximum."""
    rule = Rule.parse(rule)
    eps = check_epsilon(eps)
    strict = alpha_worst_case(rule, n, eps, "exhaustive").max_gain
    rng = _rng(seed)
    weak = np.stack([sample_weak(n, eps, rng).p for _ in range(samples)])
    gains = batch_pair_gains(rule, weak)
    per = gains.max(axis=1)
    worst = int(np.argmax(per))
    if per[worst] > strict + GAIN_TOL:
        raise ViolationFound(
            f"weak gain {per[worst]} exceeds strict maximum {strict}",
            counterexample=ProbTournament(weak[worst]),
        )
    return ConvexityReport(rule, n, eps, strict, float(per[worst]), samples, seed if isinstance(seed, int) else -1)


@dataclass
class SweepRow:
    rule: Rule
    n: int
    epsilon: float
    mode: str
    max_gain: float
    formula: float
    slack: float
    argmax_code: str
    instances: int
    exploratory: bool

    def as_csv_row(self) -> list:
        mode = self.mode + "+exploratory" if self.exploratory else self.mode
        return [self.rule.value, self.n, repr(self.epsilon), mode, repr(self.max_gain),
                repr(self.formula), repr(self.slack), self.argmax_code, self.instances]


def epsilon_sweep(rule, n: int, grid, mode: str = "exhaustive", budget: int | None = None, seed=0) -> list[SweepRow]:
    """One worst-case row per epsilon; RKotH rows are marked exploratory."""
    rule = Rule.parse(rule)
    rows = []
    for eps in grid:
        res = alpha_worst_case(rule, n, eps, mode, budget, seed)
        f = lower_bound_formula(eps)
        rows.append(SweepRow(rule, n, float(eps), mode, res.max_gain, f, f - res.max_gain,
                             res.argmax_code, res.instances_checked, rule is Rule.RKOTH))
    return rows


def sweep_csv(rows, meta: dict | None = None) -> str:
    """Render sweep rows; ``meta`` goes into leading ``#`` comment lines."""
    buf = io.StringIO()
    if meta:
        for key in sorted(meta):
            buf.write(f"# {key}: {meta[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow(r.as_csv_row())
    return buf.getvalue()
