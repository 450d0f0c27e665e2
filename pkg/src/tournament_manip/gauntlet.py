"""Gauntlets, terminal-event classification and the recursive-framework bound.

Internally everything is batched over a leading axis of probability matrices,
the same way :class:`~tournament_manip.rules.ExactSolver` is; the public
functions take a single :class:`ProbTournament` and return plain floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputs, ExactModeTooLarge, NotMatchingRule
from .manipulation import pair_values, with_match
from .rules import (
    ExactSolver,
    MatchSet,
    Rule,
    apply_round,
    check_exact_cap,
    full_mask,
    members,
    outcome_probs,
    rseb_matchsets,
    transitions,
)
from .tournament import TOL, ProbTournament, _pair, check_coalition, check_epsilon

GAUNTLET_CAP = 8
BASE_CASE_TOL = 1e-9


class EventClass(str, enum.Enum):
    BAD = "bad"
    GOOD_TERMINAL = "good_terminal"
    RECURSIVE = "recursive"


@dataclass
class GauntletDistribution:
    """Distribution over the ordered opponents the focal team meets on its way to winning.

    Every sequence the rule can produce is listed, including ones whose
    probability is zero for this particular matrix.
    """

    focal: int
    entries: dict[tuple[int, ...], float]

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def as_sets(self) -> dict[frozenset, float]:
        out: dict[frozenset, float] = {}
        for seq, pr in self.entries.items():
            key = frozenset(seq)
            out[key] = out.get(key, 0.0) + pr
        return out

    def max_length(self) -> int:
        return max((len(s) for s in self.entries), default=0)

    def to_dict(self) -> dict:
        return {
            "focal": self.focal,
            "entries": [{"sequence": list(seq), "prob": pr} for seq, pr in sorted(self.entries.items())],
        }


@dataclass
class EventProbabilities:
    pr_bad: float
    pr_good: float
    pr_recursive: float
    basis: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def focal_condorcet(p: np.ndarray, u: int) -> np.ndarray:
    """Copy of ``p`` where ``u`` beats everyone surely; other matches untouched."""
    q = np.array(p, dtype=float)
    q[..., u, :] = 1.0
    q[..., :, u] = 0.0
    q[..., u, u] = 0.0
    return q


def _check_gauntlet_cap(rule: Rule, n: int) -> None:
    check_exact_cap(rule, n)
    if n > GAUNTLET_CAP:
        raise ExactModeTooLarge(f"gauntlet enumeration supports at most {GAUNTLET_CAP} teams, got {n}")


def _gauntlet(rule: Rule, p: np.ndarray, alive: int, focal: int, memo: dict) -> dict:
    """Opponent-sequence probabilities from ``alive`` on a matrix where ``focal`` never loses."""
    if alive in memo:
        return memo[alive]
    if alive == 1 << focal:
        return {(): np.ones(p.shape[:-2])}
    acc: dict[tuple, np.ndarray] = {}
    for br in transitions(rule, alive):
        opp = tuple(sorted(b if a == focal else a for a, b in br.matches if focal in (a, b)))
        probs = outcome_probs(p, br)
        for o, s in enumerate(br.succ):
            s = int(s)
            if not s >> focal & 1:
                continue  # focal lost: probability zero here
            w = br.weight * probs[..., o]
            for seq, val in _gauntlet(rule, p, s, focal, memo).items():
                key = opp + seq
                acc[key] = acc.get(key, 0.0) + w * val
    memo[alive] = acc
    return acc


def gauntlet_batch(rule, p: np.ndarray, u: int, alive: int | None = None) -> dict:
    rule = Rule.parse(rule)
    n = p.shape[-1]
    _check_gauntlet_cap(rule, n)
    alive = full_mask(n) if alive is None else alive
    return _gauntlet(rule, focal_condorcet(p, u), alive, u, {})


def gauntlet_distribution(rule, T: ProbTournament, u: int, alive: int | None = None) -> GauntletDistribution:
    """Gauntlet of ``u``: run the rule with ``u`` forced to win every match and record whom it plays."""
    check_coalition((u,), T.n)
    raw = gauntlet_batch(rule, T.p, u, alive)
    return GauntletDistribution(u, {seq: float(pr) for seq, pr in raw.items()})


def _tv(a: dict, b: dict, shape) -> np.ndarray:
    zero = np.zeros(shape)
    return 0.5 * sum(np.abs(a.get(k, zero) - b.get(k, zero)) for k in set(a) | set(b))


def _with_uv(rule: Rule, u: int, v: int, alive: int):
    key = (min(u, v), max(u, v))
    for br in transitions(rule, alive):
        if key in br.matches:
            yield br


def independence_batch(rule, p: np.ndarray, u: int, v: int):
    """Max TV distance between the winner's gauntlets, conditioned on (u, v) being played.

    Returns ``(max_tv, mixture_u, mixture_v)``; the mixtures average over every
    first-round match set containing (u, v).
    """
    rule = Rule.parse(rule)
    if not rule.is_matching:
        raise NotMatchingRule(f"{rule.value} is not a matching rule; the winner's field depends on who won")
    n = p.shape[-1]
    _check_gauntlet_cap(rule, n)
    shape = p.shape[:-2]
    full = full_mask(n)
    key = (min(u, v), max(u, v))
    forced = {w: focal_condorcet(p, w) for w in (u, v)}
    memos = {u: {}, v: {}}
    worst = np.zeros(shape)
    mix = {u: {}, v: {}}
    pr_b = 0.0
    for br in _with_uv(rule, u, v, full):
        pr_b += br.weight
        others = [k for k, m in enumerate(br.matches) if m != key]
        # outcome of the (u, v) match is fixed by selecting rows where u wins
        k_uv = br.matches.index(key)
        u_first = br.a[k_uv] == u
        rows = np.flatnonzero(br.bits[:, k_uv] == u_first)
        sub_a, sub_b = br.a[others], br.b[others]
        probs = np.ones(shape + (len(rows),))
        for col, k in enumerate(others):
            first = br.bits[rows, k]
            probs = probs * np.where(first, p[..., sub_a[col], sub_b[col]][..., None],
                                     p[..., sub_b[col], sub_a[col]][..., None])
        per = {u: {}, v: {}}
        for j, o in enumerate(rows):
            s_u = int(br.succ[o])  # u beat v here
            alive_for = {u: s_u, v: (s_u & ~(1 << u)) | (1 << v)}
            for w in (u, v):
                g = _gauntlet(rule, forced[w], alive_for[w], w, memos[w])
                for seq, val in g.items():
                    per[w][seq] = per[w].get(seq, 0.0) + probs[..., j] * val
        worst = np.maximum(worst, _tv(per[u], per[v], shape))
        for w in (u, v):
            for seq, val in per[w].items():
                mix[w][seq] = mix[w].get(seq, 0.0) + br.weight * val
    for w in (u, v):
        mix[w] = {seq: val / pr_b for seq, val in mix[w].items()}
    return worst, mix[u], mix[v]


def gauntlet_independence_check(rule, T: ProbTournament, u: int, v: int):
    """Return ``({u: G_u, v: G_v}, max_tv)`` for the winner of a first-round (u, v) match."""
    u, v = check_coalition((u, v), T.n)
    worst, mu, mv = independence_batch(rule, T.p, u, v)
    dists = {
        u: GauntletDistribution(u, {s: float(x) for s, x in mu.items()}),
        v: GauntletDistribution(v, {s: float(x) for s, x in mv.items()}),
    }
    return dists, float(worst)


class _GoodTest:
    """Decides whether an alive set is a base case for the pair, batched over tournaments."""

    def __init__(self, rule: Rule, p: np.ndarray, u: int, v: int, basis: str):
        if basis not in ("sufficient", "exact"):
            raise ValueError(f"unknown basis {basis!r}")
        self.rule, self.p, self.u, self.v, self.basis = rule, p, u, v, basis
        self._cache: dict[int, np.ndarray] = {}
        self._solver = ExactSolver(rule, p) if basis == "exact" else None

    def __call__(self, alive: int) -> np.ndarray:
        if alive not in self._cache:
            self._cache[alive] = self._compute(alive)
        return self._cache[alive]

    def _compute(self, alive: int) -> np.ndarray:
        u, v, p = self.u, self.v, self.p
        shape = p.shape[:-2]
        if not (alive >> u & 1 and alive >> v & 1):
            return np.ones(shape, dtype=bool)
        if self.basis == "sufficient":
            rest = [w for w in members(alive) if w not in (u, v)]
            if not rest:
                return np.ones(shape, dtype=bool)
            return np.all(np.abs(p[..., u, rest] - p[..., v, rest]) <= TOL, axis=-1)
        base, low, high = pair_values(self._solver, u, v, alive)
        return np.maximum(low, high) - base <= BASE_CASE_TOL


def event_batch(rule, p: np.ndarray, u: int, v: int, basis: str = "sufficient", alive: int | None = None):
    """Arrays ``(pr_bad, pr_good, pr_recursive)`` for the first round from ``alive``."""
    rule = Rule.parse(rule)
    n = p.shape[-1]
    check_exact_cap(rule, n)
    alive = full_mask(n) if alive is None else alive
    shape = p.shape[:-2]
    good_test = _GoodTest(rule, p, u, v, basis)
    key = (min(u, v), max(u, v))
    bad = 0.0
    good = np.zeros(shape)
    for br in transitions(rule, alive):
        if key in br.matches:
            bad += br.weight
            continue
        probs = outcome_probs(p, br)
        for o, s in enumerate(br.succ):
            good = good + br.weight * probs[..., o] * good_test(int(s))
    bad = np.full(shape, bad)
    return bad, good, 1.0 - bad - good


def classify_event(rule, T: ProbTournament, S, M: MatchSet, outcome, basis: str = "sufficient",
                   alive: int | None = None) -> EventClass:
    """Classify one drawn match set and its outcome for the pair ``S``.

    ``outcome`` lists the winner of each of ``M.real_matches`` in order.
    """
    rule = Rule.parse(rule)
    u, v = _pair(S)
    if M.contains(u, v):
        return EventClass.BAD
    alive = full_mask(T.n) if alive is None else alive
    losers = 0
    for (a, b), w in zip(M.real_matches, outcome, strict=True):
        if w not in (a, b):
            raise ValueError(f"winner {w} did not play in match {(a, b)}")
        losers |= 1 << (b if w == a else a)
    good = _GoodTest(rule, T.p, u, v, basis)(alive & ~losers)
    return EventClass.GOOD_TERMINAL if bool(good) else EventClass.RECURSIVE


def event_probabilities(rule, T: ProbTournament, S, basis: str = "sufficient") -> EventProbabilities:
    u, v = _pair(S)
    check_coalition((u, v), T.n)
    bad, good, rec = event_batch(rule, T.p, u, v, basis)
    return EventProbabilities(float(bad), float(good), float(rec), basis)


def conditional_bad_batch(rule, p: np.ndarray, u: int, v: int) -> np.ndarray:
    rule = Rule.parse(rule)
    if not rule.is_matching:
        raise NotMatchingRule(f"{rule.value} is not a matching rule")
    n = p.shape[-1]
    solver = ExactSolver(rule, p)
    solver.dist()
    variants = [solver.derive(with_match(p, u, v, x), u, v) for x in (0.0, 1.0)]
    pr_b = 0.0
    acc = [np.zeros(p.shape[:-2]) for _ in variants]
    for br in _with_uv(rule, u, v, full_mask(n)):
        pr_b += br.weight
        base = _continuation(solver, br, u, v)
        for k, var in enumerate(variants):
            acc[k] = acc[k] + br.weight * (_continuation(var, br, u, v) - base)
    return np.maximum(acc[0], acc[1]) / pr_b


def _continuation(solver: ExactSolver, br, u: int, v: int) -> np.ndarray:
    probs = outcome_probs(solver.p, br)
    vals = np.stack([solver.coalition(int(s), (u, v)) for s in br.succ], axis=-1)
    return (probs * vals).sum(axis=-1)


def conditional_bad_gain(rule, T: ProbTournament, S) -> float:
    """Best expected coalition gain given that (u, v) meet in the first round."""
    u, v = _pair(S)
    check_coalition((u, v), T.n)
    return float(conditional_bad_batch(rule, T.p, u, v))


def calcs_lhs(n: int, i: int, j: int, eps: float) -> float:
    eps = check_epsilon(eps)
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValueError(f"need 0 <= i, j <= n, got n={n}, i={i}, j={j}")
    hi, lo = 0.5 + eps, 0.5 - eps
    return hi**i * lo ** (n - i) - hi**j * lo ** (n - j)


def framework_bound(b: float, g: float, c: float) -> float:
    """Manipulability bound ``b c / (b + g)`` from bad/good event rates and bad-event gain."""
    if min(b, g, c) < 0 or b + g <= 0:
        raise DegenerateInputs(f"need b, g, c >= 0 and b + g > 0, got b={b}, g={g}, c={c}")
    return b * c / (b + g)


def subcase_3b_tournament(eps: float) -> ProbTournament:
    """Five teams: 0 and 1 collude, 2 and 3 are favoured only against 0, 4 only against 1.

    Matches not involving the coalition are set to 1/2 + eps for the lower index.
    """
    eps = check_epsilon(eps)
    hi, lo = 0.5 + eps, 0.5 - eps
    p = np.zeros((5, 5))

    def put(i, j, x):
        p[i, j], p[j, i] = x, 1.0 - x

    put(0, 1, hi)
    for w in (2, 3):
        put(w, 0, hi)
        put(w, 1, lo)
    put(4, 1, hi)
    put(4, 0, lo)
    put(2, 3, hi)
    put(2, 4, hi)
    put(3, 4, hi)
    return ProbTournament(p)


def subcase_3b_probability(eps: float) -> float:
    """Probability that team 0 or 1 falls in round one of the 8-slot bracket without meeting the other."""
    T = subcase_3b_tournament(eps)
    full = full_mask(5)
    total = 0.0
    for M in rseb_matchsets(full):
        if M.contains(0, 1):
            continue
        for succ, prob in apply_round(T, full, M):
            if not (succ & 1 and succ & 2):
                total += M.prob * prob
    return total


@dataclass
class RecursionTerms:
    """One-round split of a pair's gain into the bad-event and recursive-event parts."""

    gain: float
    bad_term: float
    recursive_term: float
    pr_bad: float
    pr_good: float
    pr_recursive: float

    def slack(self) -> float:
        return self.bad_term + self.recursive_term - self.gain

    def to_dict(self) -> dict:
        return {**self.__dict__, "slack": self.slack()}


def recursion_batch(rule, p: np.ndarray, u: int, v: int):
    """Arrays ``(gain, bad_term, recursive_term, pr_bad, pr_good)`` for every tournament in the batch.

    ``bad_term`` is ``pr_bad`` times the conditional bad gain and
    ``recursive_term`` sums, over recursive outcomes (sufficient basis), the
    outcome probability times the exact gain from the surviving set.  Good
    outcomes contribute nothing, so ``gain <= bad_term + recursive_term``.
    """
    rule = Rule.parse(rule)
    n = p.shape[-1]
    full = full_mask(n)
    solver = ExactSolver(rule, p)
    base, low, high = pair_values(solver, u, v)
    gain = np.maximum(np.maximum(low, high), base) - base
    low_s = solver.derive(with_match(p, u, v, 0.0), u, v)
    high_s = solver.derive(with_match(p, u, v, 1.0), u, v)
    good_test = _GoodTest(rule, p, u, v, "sufficient")
    key = (min(u, v), max(u, v))
    shape = p.shape[:-2]
    bad_acc = [np.zeros(shape), np.zeros(shape)]
    rec = np.zeros(shape)
    pr_b = 0.0
    pr_g = np.zeros(shape)
    for br in transitions(rule, full):
        if key in br.matches:
            pr_b += br.weight
            ref = _continuation(solver, br, u, v)
            for k, var in enumerate((low_s, high_s)):
                bad_acc[k] = bad_acc[k] + br.weight * (_continuation(var, br, u, v) - ref)
            continue
        probs = outcome_probs(p, br)
        for o, s in enumerate(br.succ):
            s = int(s)
            good = good_test(s)
            w = br.weight * probs[..., o]
            pr_g = pr_g + w * good
            if not good.all():
                b0, l0, h0 = solver.coalition(s, key), low_s.coalition(s, key), high_s.coalition(s, key)
                alpha = np.maximum(np.maximum(l0, h0), b0) - b0
                rec = rec + np.where(good, 0.0, w * alpha)
    bad_term = np.maximum(bad_acc[0], bad_acc[1])
    return gain, bad_term, rec, np.full(shape, pr_b), pr_g


def recursion_terms(rule, T: ProbTournament, S) -> RecursionTerms:
    u, v = _pair(S)
    check_coalition((u, v), T.n)
    gain, bad, rec, b, g = recursion_batch(rule, T.p, u, v)
    b, g = float(b), float(g)
    return RecursionTerms(float(gain), float(bad), float(rec), b, g, 1.0 - b - g)
