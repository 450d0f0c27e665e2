"""Recursive elimination rules and their two evaluation backends.

Alive teams are tracked as integer bitmasks.  The exact backend is a memoised
recursion over alive subsets; it accepts a batch of probability matrices of
shape ``(..., n, n)`` so exhaustive sweeps evaluate thousands of tournaments
per subset step.  The Monte Carlo backend simulates the rule trial by trial,
vectorised across trials.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ExactModeTooLarge, TooFewTeams
from .tournament import ProbTournament, check_coalition

NORM_TOL = 1e-9
MC_BLOCK = 1 << 16


class Rule(str, enum.Enum):
    RDM = "rdm"
    RSEB = "rseb"
    RKOTH = "rkoth"

    @property
    def is_matching(self) -> bool:
        return self is not Rule.RKOTH

    @classmethod
    def parse(cls, value) -> "Rule":
        if isinstance(value, Rule):
            return value
        return cls(str(value).lower())


EXACT_CAPS = {Rule.RDM: 12, Rule.RKOTH: 12, Rule.RSEB: 8}


def check_exact_cap(rule, n: int) -> None:
    cap = EXACT_CAPS[Rule.parse(rule)]
    if n > cap:
        raise ExactModeTooLarge(
            f"exact mode for {Rule.parse(rule).value} supports at most {cap} teams, got {n}; use mode='mc'"
        )


def full_mask(n: int) -> int:
    return (1 << n) - 1


def members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def to_mask(teams) -> int:
    m = 0
    for t in teams:
        m |= 1 << int(t)
    return m


def padded_size(k: int) -> int:
    """Smallest power of two that is >= k."""
    return 1 << (k - 1).bit_length()


@dataclass(frozen=True)
class MatchSet:
    """One round's matches.  Negative ids are RSEB dummy slots."""

    matches: tuple[tuple[int, int], ...]
    prob: float
    is_matching: bool
    pivot: int | None = None

    @property
    def real_matches(self) -> tuple[tuple[int, int], ...]:
        return tuple(m for m in self.matches if m[0] >= 0 and m[1] >= 0)

    def contains(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in {(min(m), max(m)) for m in self.real_matches}


def _require_two(alive: int) -> list[int]:
    teams = members(alive)
    if len(teams) < 2:
        raise TooFewTeams(f"need at least two alive teams, got {teams}")
    return teams


def rdm_matchsets(alive: int) -> list[MatchSet]:
    teams = _require_two(alive)
    pairs = list(itertools.combinations(teams, 2))
    w = 1.0 / len(pairs)
    return [MatchSet(((a, b),), w, True) for a, b in pairs]


@lru_cache(maxsize=None)
def _perfect_matchings(m: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All perfect matchings of ``range(m)`` as tuples of position pairs."""

    def rec(items):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for i, other in enumerate(rest):
            for tail in rec(rest[:i] + rest[i + 1:]):
                yield ((first, other),) + tail

    return tuple(rec(tuple(range(m))))


def double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def rseb_matchsets(alive: int) -> list[MatchSet]:
    teams = _require_two(alive)
    size = padded_size(len(teams))
    slots = teams + [-(d + 1) for d in range(size - len(teams))]
    patterns = _perfect_matchings(size)
    w = 1.0 / len(patterns)
    out = []
    for pat in patterns:
        matches = tuple(tuple(sorted((slots[a], slots[b]), reverse=True)) for a, b in pat)
        out.append(MatchSet(matches, w, True))
    return out


def rkoth_matchsets(alive: int) -> list[MatchSet]:
    teams = _require_two(alive)
    w = 1.0 / len(teams)
    return [
        MatchSet(tuple((i, j) for j in teams if j != i), w, len(teams) == 2, pivot=i)
        for i in teams
    ]


_GENERATORS = {Rule.RDM: rdm_matchsets, Rule.RSEB: rseb_matchsets, Rule.RKOTH: rkoth_matchsets}


def matchsets(rule, alive: int) -> list[MatchSet]:
    return _GENERATORS[Rule.parse(rule)](alive)


def _outcomes(p: np.ndarray, alive: int, M: MatchSet):
    """Yield ``(winners, prob, successor)`` for every joint outcome of M's real matches."""
    real = M.real_matches
    for winners in itertools.product(*real):
        prob = 1.0
        losers = 0
        for (a, b), w in zip(real, winners):
            loser = b if w == a else a
            prob *= p[w, loser]
            losers |= 1 << loser
        yield winners, prob, alive & ~losers


def apply_round(T: ProbTournament, alive: int, M: MatchSet) -> list[tuple[int, float]]:
    """Distribution over successor alive sets after playing ``M``.

    Every loser is eliminated; a real team facing a dummy always advances and
    dummy-vs-dummy matches touch no real team.
    """
    acc: dict[int, float] = {}
    for _, prob, succ in _outcomes(T.p, alive, M):
        if prob > 0.0:
            acc[succ] = acc.get(succ, 0.0) + prob
    return sorted(acc.items())


class Branch(NamedTuple):
    """Tournament-independent view of one distinct set of real matches."""

    weight: float
    matches: tuple[tuple[int, int], ...]
    a: np.ndarray
    b: np.ndarray
    bits: np.ndarray  # (outcomes, r): True where the first team wins
    succ: np.ndarray  # (outcomes,) successor alive masks


@lru_cache(maxsize=1 << 17)
def transitions(rule: Rule, alive: int) -> tuple[Branch, ...]:
    grouped: dict[tuple, float] = {}
    for M in matchsets(rule, alive):
        key = tuple(sorted(tuple(sorted(m)) for m in M.real_matches))
        grouped[key] = grouped.get(key, 0.0) + M.prob
    out = []
    for key, weight in grouped.items():
        r = len(key)
        a = np.array([m[0] for m in key], dtype=np.intp)
        b = np.array([m[1] for m in key], dtype=np.intp)
        bits = ((np.arange(1 << r)[:, None] >> np.arange(r)) & 1).astype(bool)
        losers = np.zeros(1 << r, dtype=np.int64)
        for k in range(r):
            losers |= np.where(bits[:, k], 1 << int(b[k]), 1 << int(a[k]))
        succ = alive & ~losers
        for arr in (a, b, bits, succ):
            arr.setflags(write=False)
        out.append(Branch(weight, key, a, b, bits, succ))
    return tuple(out)


def outcome_probs(p: np.ndarray, br: Branch) -> np.ndarray:
    """Per-outcome probabilities for a branch, shape ``(..., outcomes)``."""
    if len(br.a) == 0:
        return np.ones(p.shape[:-2] + (1,))
    win = p[..., br.a, br.b]
    lose = p[..., br.b, br.a]
    return np.where(br.bits, win[..., None, :], lose[..., None, :]).prod(axis=-1)


class ExactSolver:
    """Winner distributions from every reachable alive set of one (batched) tournament.

    The memo lives on the instance, so each query owns its cache.
    """

    def __init__(self, rule, p):
        self.rule = Rule.parse(rule)
        self.p = np.asarray(p, dtype=float)
        self.n = self.p.shape[-1]
        check_exact_cap(self.rule, self.n)
        self.batch = self.p.shape[:-2]
        self._dist = np.zeros(self.batch + (1 << self.n, self.n))
        self._done = np.zeros(1 << self.n, dtype=bool)

    def derive(self, p_new, u: int, v: int) -> "ExactSolver":
        """Solver for ``p_new``, which may differ from this one only on the (u, v) match.

        Memo entries for alive sets lacking ``u`` or ``v`` carry over unchanged.
        """
        other = ExactSolver(self.rule, p_new)
        if other.batch != self.batch:
            raise ValueError("batch shapes differ")
        keep = np.array([not (m >> u & 1 and m >> v & 1) for m in range(1 << self.n)])
        keep &= self._done
        other._dist[..., keep, :] = self._dist[..., keep, :]
        other._done[keep] = True
        return other

    def dist(self, alive: int | None = None) -> np.ndarray:
        alive = full_mask(self.n) if alive is None else int(alive)
        if alive == 0:
            raise TooFewTeams("alive set is empty")
        self._ensure(alive)
        return self._dist[..., alive, :]

    def coalition(self, alive: int | None, S) -> np.ndarray:
        return self.dist(alive)[..., list(S)].sum(axis=-1)

    def _ensure(self, alive: int) -> None:
        if self._done[alive]:
            return
        if alive & (alive - 1) == 0:
            self._dist[..., alive, alive.bit_length() - 1] = 1.0
            self._done[alive] = True
            return
        acc = np.zeros(self.batch + (self.n,))
        for br in transitions(self.rule, alive):
            for s in np.unique(br.succ[~self._done[br.succ]]):
                self._ensure(int(s))
            probs = outcome_probs(self.p, br)
            acc += br.weight * np.einsum("...o,...on->...n", probs, self._dist[..., br.succ, :])
        self._dist[..., alive, :] = acc
        self._done[alive] = True


def winner_probs(rule, p: np.ndarray, alive: int | None = None) -> np.ndarray:
    """Batched exact winner probabilities, shape ``(..., n)``."""
    return ExactSolver(rule, p).dist(alive)


@dataclass
class WinnerDistribution:
    rule: Rule
    probs: np.ndarray
    mode: str = "exact"
    trials: int | None = None
    seed: int | None = None
    stderr: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.probs)

    def coalition(self, S) -> float:
        return float(sum(self.probs[i] for i in S))

    def to_dict(self) -> dict:
        d = {"rule": self.rule.value, "n": self.n, "probs": [float(x) for x in self.probs], "mode": self.mode}
        if self.mode == "mc":
            d["trials"] = self.trials
            d["seed"] = self.seed
            d["stderr"] = [float(x) for x in self.stderr]
        return d


def exact_winner_distribution(rule, T: ProbTournament) -> WinnerDistribution:
    rule = Rule.parse(rule)
    probs = winner_probs(rule, T.p)
    total = probs.sum()
    if abs(total - 1.0) > NORM_TOL or np.any(probs < -NORM_TOL):
        raise ArithmeticError(f"winner distribution is not normalised (sum={total})")
    return WinnerDistribution(rule, np.clip(probs, 0.0, 1.0))


def _rdm_step(alive, idx, p, rng):
    m, n = len(idx), p.shape[0]
    keys = rng.random((m, n))
    keys[~alive[idx]] = 2.0
    pair = np.argpartition(keys, 1, axis=1)[:, :2]
    i, j = pair[:, 0], pair[:, 1]
    i_wins = rng.random(m) < p[i, j]
    alive[idx, np.where(i_wins, j, i)] = False


def _rkoth_step(alive, idx, p, rng):
    m, n = len(idx), p.shape[0]
    keys = rng.random((m, n))
    keys[~alive[idx]] = 2.0
    pivot = keys.argmin(axis=1)
    rows = np.arange(m)
    # only draws against alive challengers are used
    challengers = (rng.random((m, n)) < p[:, pivot].T) & alive[idx]
    challengers[rows, pivot] = False
    king = ~challengers.any(axis=1)
    challengers[rows[king], pivot[king]] = True
    alive[idx] = challengers


def _rseb_step(alive, idx, p, rng):
    counts = alive[idx].sum(axis=1)
    for k in np.unique(counts):
        sub = idx[counts == k]
        g, k = len(sub), int(k)
        size = padded_size(k)
        slots = np.full((g, size), -1, dtype=np.intp)
        slots[:, :k] = np.argsort(~alive[sub], axis=1, kind="stable")[:, :k]
        slots = np.take_along_axis(slots, np.argsort(rng.random((g, size)), axis=1), axis=1)
        a, b = slots[:, 0::2], slots[:, 1::2]
        real = (a >= 0) & (b >= 0)
        a_wins = rng.random(a.shape) < p[np.maximum(a, 0), np.maximum(b, 0)]
        loser = np.where(real, np.where(a_wins, b, a), -1)
        rows = np.broadcast_to(sub[:, None], loser.shape)
        hit = loser >= 0
        alive[rows[hit], loser[hit]] = False


_STEPS = {Rule.RDM: _rdm_step, Rule.RSEB: _rseb_step, Rule.RKOTH: _rkoth_step}


def simulate_winners(rule, p: np.ndarray, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Winner index of each of ``trials`` independent runs of the rule."""
    rule = Rule.parse(rule)
    n = p.shape[0]
    alive = np.ones((trials, n), dtype=bool)
    step = _STEPS[rule]
    while True:
        idx = np.flatnonzero(alive.sum(axis=1) > 1)
        if idx.size == 0:
            break
        step(alive, idx, p, rng)
    return alive.argmax(axis=1)


def mc_winner_distribution(rule, T: ProbTournament, trials: int, seed: int = 0, threads: int = 1):
    """Monte Carlo winner frequencies and their binomial standard errors.

    Trials run in fixed-size blocks seeded by ``SeedSequence(seed).spawn``;
    counts are integers, so results do not depend on ``threads``.
    """
    rule = Rule.parse(rule)
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [MC_BLOCK] * (trials // MC_BLOCK)
    if trials % MC_BLOCK:
        sizes.append(trials % MC_BLOCK)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(job):
        size, child = job
        winners = simulate_winners(rule, T.p, size, np.random.default_rng(child))
        return np.bincount(winners, minlength=T.n)

    jobs = list(zip(sizes, children))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            counts = list(ex.map(run, jobs))
    else:
        counts = [run(j) for j in jobs]
    total = np.sum(counts, axis=0)
    freq = total / trials
    stderr = np.sqrt(freq * (1 - freq) / trials)
    dist = WinnerDistribution(rule, freq, mode="mc", trials=trials, seed=seed, stderr=stderr)
    return dist, stderr


def coalition_win_prob(rule, T: ProbTournament, S, mode: str = "exact", trials: int = 100_000, seed: int = 0) -> float:
    S = check_coalition(S, T.n)
    if mode == "exact":
        return float(winner_probs(rule, T.p)[list(S)].sum())
    if mode == "mc":
        dist, _ = mc_winner_distribution(rule, T, trials, seed)
        return dist.coalition(S)
    raise ValueError(f"unknown mode {mode!r}")
