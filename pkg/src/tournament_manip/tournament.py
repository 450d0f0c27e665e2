"""Deterministic and independent probabilistic tournaments.

A probabilistic tournament on ``n`` teams is stored as an ``n x n`` matrix
``p`` with ``p[i, j]`` the probability that ``i`` beats ``j``.  Only the upper
triangle is authoritative: the lower triangle is rebuilt as ``1 - p[i, j]`` at
construction and the diagonal is zero.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadCoalition,
    InvalidProbability,
    NotComplementary,
    NotStrict,
    TooLarge,
    ZeroEpsilon,
)

TOL = 1e-12
MAX_ENUM_BITS = 28


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_epsilon(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 0.5:
        raise InvalidProbability(f"epsilon must lie in [0, 1/2], got {eps}")
    return eps


def edges(n: int) -> list[tuple[int, int]]:
    """Edges ``(i, j)`` with ``i < j`` in enumeration-bit order."""
    return list(itertools.combinations(range(n), 2))


def validate(T) -> None:
    """Raise unless ``T`` (a ProbTournament or square array) is a valid tournament."""
    p = T.p if isinstance(T, ProbTournament) else np.asarray(T, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
        raise InvalidProbability(f"expected a non-empty square matrix, got shape {p.shape}")
    n = p.shape[0]
    off = ~np.eye(n, dtype=bool)
    vals = p[off]
    if not np.all(np.isfinite(vals)) or np.any(vals < -TOL) or np.any(vals > 1 + TOL):
        i, j = np.argwhere(off & ~((p >= -TOL) & (p <= 1 + TOL)))[0]
        raise InvalidProbability(f"p[{i}][{j}] = {p[i, j]} is not a probability")
    s = p + p.T
    bad = off & (np.abs(s - 1.0) > TOL)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NotComplementary(f"p[{i}][{j}] + p[{j}][{i}] = {s[i, j]} != 1")


def _complete(p: np.ndarray) -> np.ndarray:
    """Rebuild lower triangle and diagonal from the upper triangle (batched)."""
    p = np.array(p, dtype=float)
    n = p.shape[-1]
    iu = np.triu_indices(n, 1)
    upper = np.clip(p[..., iu[0], iu[1]], 0.0, 1.0)
    out = np.zeros_like(p)
    out[..., iu[0], iu[1]] = upper
    out[..., iu[1], iu[0]] = 1.0 - upper
    return out


@dataclass(frozen=True, eq=False)
class ProbTournament:
    """Independent probabilistic tournament; immutable after construction."""

    p: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.p, dtype=float)
        validate(raw)
        p = _complete(raw)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def _trusted(cls, p: np.ndarray) -> "ProbTournament":
        # skips validation; only for matrices built complete by this module
        obj = object.__new__(cls)
        q = np.array(p, dtype=float)
        q.setflags(write=False)
        object.__setattr__(obj, "p", q)
        return obj

    @classmethod
    def uniform(cls, n: int) -> "ProbTournament":
        return cls(np.full((n, n), 0.5))

    @classmethod
    def from_upper(cls, n: int, values) -> "ProbTournament":
        """Build from the upper-triangle values listed in :func:`edges` order."""
        p = np.zeros((n, n))
        for (i, j), x in zip(edges(n), values, strict=True):
            p[i, j] = x
            p[j, i] = 1.0 - x
        return cls(p)

    def with_entry(self, i: int, j: int, value: float) -> "ProbTournament":
        p = self.p.copy()
        p[i, j] = value
        p[j, i] = 1.0 - value
        return ProbTournament(p)

    def is_deterministic(self) -> bool:
        off = ~np.eye(self.n, dtype=bool)
        return bool(np.all((np.abs(self.p[off]) <= TOL) | (np.abs(self.p[off] - 1) <= TOL)))

    def __eq__(self, other):
        if not isinstance(other, ProbTournament):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.p, other.p))

    def __hash__(self):
        return hash(self.p.tobytes())

    def __repr__(self):
        return f"ProbTournament(n={self.n}, p={self.p.tolist()!r})"

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ProbTournament":
        p = np.asarray(data["p"], dtype=float)
        if p.shape != (data["n"], data["n"]):
            raise InvalidProbability(f"matrix shape {p.shape} does not match n={data['n']}")
        return cls(p)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "ProbTournament":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "ProbTournament":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class DetTournament:
    """Complete, antisymmetric orientation: ``beats[i, j]`` iff ``i`` beats ``j``."""

    beats: np.ndarray

    def __post_init__(self):
        b = np.array(self.beats, dtype=bool)
        n = b.shape[0]
        if b.shape != (n, n):
            raise InvalidProbability(f"expected a square matrix, got shape {b.shape}")
        off = ~np.eye(n, dtype=bool)
        if np.any(b[off] == b.T[off]) or np.any(np.diag(b)):
            raise NotComplementary("orientation must be complete and antisymmetric")
        b.setflags(write=False)
        object.__setattr__(self, "beats", b)

    @property
    def n(self) -> int:
        return self.beats.shape[0]

    def to_prob(self) -> ProbTournament:
        return ProbTournament(self.beats.astype(float))

    def condorcet_winner(self) -> int | None:
        wins = self.beats.sum(axis=1)
        top = np.flatnonzero(wins == self.n - 1)
        return int(top[0]) if top.size else None

    def __eq__(self, other):
        if not isinstance(other, DetTournament):
            return NotImplemented
        return bool(np.array_equal(self.beats, other.beats))

    def __hash__(self):
        return hash(self.beats.tobytes())


def is_weakly_bounded(T: ProbTournament, eps: float) -> bool:
    eps = check_epsilon(eps)
    off = ~np.eye(T.n, dtype=bool)
    dev = np.abs(T.p[off] - 0.5)
    return bool(np.all(dev <= eps + TOL))


def is_strictly_bounded(T: ProbTournament, eps: float) -> bool:
    eps = check_epsilon(eps)
    off = ~np.eye(T.n, dtype=bool)
    dev = np.abs(T.p[off] - 0.5)
    return bool(np.all(np.abs(dev - eps) <= TOL))


def strict_matrices(n: int, eps: float, codes) -> np.ndarray:
    """Batch of strictly bounded matrices, one per integer edge code.

    Bit ``k`` of a code refers to the ``k``-th edge of :func:`edges`; a set bit
    means the lower-indexed team wins that match with probability 1/2 + eps.
    """
    eps = check_epsilon(eps)
    codes = np.asarray(codes, dtype=np.int64)
    iu = np.triu_indices(n, 1)
    bits = (codes[:, None] >> np.arange(len(iu[0]))) & 1
    p = np.zeros((len(codes), n, n))
    upper = np.where(bits == 1, 0.5 + eps, 0.5 - eps)
    p[:, iu[0], iu[1]] = upper
    p[:, iu[1], iu[0]] = 1.0 - upper
    return p


def strict_code(p: np.ndarray) -> int:
    """Inverse of :func:`strict_matrices` for one matrix (upper entry >= 1/2 sets the bit)."""
    n = p.shape[-1]
    code = 0
    for k, (i, j) in enumerate(edges(n)):
        if p[i, j] >= 0.5 - TOL:
            code |= 1 << k
    return code


def _check_enum(n: int, max_bits: int) -> int:
    bits = n * (n - 1) // 2
    if bits > max_bits:
        raise TooLarge(f"{bits} edge bits for n={n} exceeds the cap of {max_bits}")
    return bits


def enumerate_strict_batches(n: int, eps: float, max_bits: int = MAX_ENUM_BITS, chunk: int = 4096):
    """Yield ``(codes, matrices)`` chunks covering every strict tournament in code order."""
    if n < 1:
        raise TooLarge("need at least one team")
    bits = _check_enum(n, max_bits)
    eps = check_epsilon(eps)
    for start in range(0, 1 << bits, chunk):
        codes = np.arange(start, min(start + chunk, 1 << bits))
        yield codes, strict_matrices(n, eps, codes)


def enumerate_strict(n: int, eps: float, max_bits: int = MAX_ENUM_BITS):
    """Yield every strictly eps-bounded tournament on ``n`` teams exactly once."""
    for _, batch in enumerate_strict_batches(n, eps, max_bits):
        for p in batch:
            yield ProbTournament._trusted(p)


def sample_strict(n: int, eps: float, seed=None) -> ProbTournament:
    eps = check_epsilon(eps)
    rng = _rng(seed)
    m = n * (n - 1) // 2
    signs = rng.integers(0, 2, size=m)
    return ProbTournament.from_upper(n, np.where(signs == 1, 0.5 + eps, 0.5 - eps))


def sample_weak(n: int, eps: float, seed=None) -> ProbTournament:
    eps = check_epsilon(eps)
    rng = _rng(seed)
    m = n * (n - 1) // 2
    return ProbTournament.from_upper(n, rng.uniform(0.5 - eps, 0.5 + eps, size=m))


def sample_outcome(T: ProbTournament, seed=None) -> DetTournament:
    rng = _rng(seed)
    n = T.n
    beats = np.zeros((n, n), dtype=bool)
    for i, j in edges(n):
        if rng.random() < T.p[i, j]:
            beats[i, j] = True
        else:
            beats[j, i] = True
    return DetTournament(beats)


def _pair(S) -> tuple[int, int]:
    members = tuple(sorted(set(int(x) for x in S)))
    if len(members) != 2:
        raise BadCoalition(f"coalition must have exactly two distinct members, got {S!r}")
    return members


def check_coalition(S, n: int) -> tuple[int, ...]:
    members = tuple(sorted(set(int(x) for x in S)))
    if not members or len(members) != len(tuple(S)):
        raise BadCoalition(f"coalition members must be distinct and nonempty: {S!r}")
    if members[0] < 0 or members[-1] >= n:
        raise BadCoalition(f"coalition {S!r} out of range for n={n}")
    return members


def adjacent_extremes(T: ProbTournament, S) -> list[ProbTournament]:
    """The two S-adjacent tournaments with the internal match fixed to 0 and to 1."""
    u, v = _pair(S)
    check_coalition((u, v), T.n)
    return [T.with_entry(u, v, 0.0), T.with_entry(u, v, 1.0)]


def condorcet_winner(T: ProbTournament) -> int | None:
    """Team that beats every other team almost surely, if any."""
    n = T.n
    for i in range(n):
        if all(abs(T.p[i, j] - 1.0) <= TOL for j in range(n) if j != i):
            return i
    return None


def strict_decomposition_sample(T: ProbTournament, eps: float, seed=None) -> ProbTournament:
    """Draw a strictly eps-bounded tournament whose expectation is ``T``.

    Each edge is set to 1/2 + eps with probability
    ``q = (p - (1/2 - eps)) / (2 eps)`` and to 1/2 - eps otherwise.
    """
    eps = check_epsilon(eps)
    n = T.n
    upper = np.array([T.p[i, j] for i, j in edges(n)])
    if eps == 0.0:
        if np.all(np.abs(upper - 0.5) <= TOL):
            return T
        raise ZeroEpsilon("epsilon = 0 admits only the uniform tournament")
    if not is_weakly_bounded(T, eps):
        raise InvalidProbability(f"tournament is not weakly {eps}-bounded")
    q = np.clip((upper - (0.5 - eps)) / (2 * eps), 0.0, 1.0)
    rng = _rng(seed)
    hit = rng.random(len(q)) < q
    return ProbTournament.from_upper(n, np.where(hit, 0.5 + eps, 0.5 - eps))


def l_values(T: ProbTournament, u: int, v: int, eps: float) -> tuple[int, int]:
    """Count teams that are favoured against exactly one of ``u``, ``v``.

    Returns ``(l_u, l_v)`` where ``l_u`` counts teams beating ``u`` with
    probability 1/2 + eps and ``v`` with probability 1/2 - eps.
    """
    eps = check_epsilon(eps)
    if u == v:
        raise BadCoalition("u and v must differ")
    if not is_strictly_bounded(T, eps):
        raise NotStrict(f"tournament is not strictly {eps}-bounded")
    if eps == 0.0:
        return 0, 0
    hi, lo = 0.5 + eps, 0.5 - eps
    lu = lv = 0
    for w in range(T.n):
        if w in (u, v):
            continue
        a, b = T.p[w, u], T.p[w, v]
        if abs(a - hi) <= TOL and abs(b - lo) <= TOL:
            lu += 1
        elif abs(b - hi) <= TOL and abs(a - lo) <= TOL:
            lv += 1
    return lu, lv


def l_values_batch(p: np.ndarray, u: int, v: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`l_values` over a batch of strict matrices (no validation)."""
    if eps == 0.0:
        z = np.zeros(p.shape[:-2], dtype=int)
        return z, z.copy()
    hi, lo = 0.5 + eps, 0.5 - eps
    others = [w for w in range(p.shape[-1]) if w not in (u, v)]
    a, b = p[..., others, u], p[..., others, v]
    lu = ((np.abs(a - hi) <= TOL) & (np.abs(b - lo) <= TOL)).sum(-1)
    lv = ((np.abs(b - hi) <= TOL) & (np.abs(a - lo) <= TOL)).sum(-1)
    return lu, lv


def transitive(n: int) -> ProbTournament:
    """Team ``i`` beats team ``j`` whenever ``i < j``."""
    return ProbTournament(np.triu(np.ones((n, n)), 1))


def det_cycle(k: int) -> ProbTournament:
    """Rotational tournament: ``i`` beats the next ``floor((k-1)/2)`` teams mod ``k``.

    For even ``k`` the diametrically opposite match goes to the lower index.
    """
    p = np.zeros((k, k))
    for i, j in edges(k):
        d = (j - i) % k
        if d <= (k - 1) // 2 or (2 * d == k):
            p[i, j] = 1.0
        p[j, i] = 1.0 - p[i, j]
    return ProbTournament(p)


def strict_decomposition_samples(T: ProbTournament, eps: float, count: int, seed=None) -> np.ndarray:
    """``count`` draws of :func:`strict_decomposition_sample` as an array ``(count, n, n)``."""
    eps = check_epsilon(eps)
    iu = np.triu_indices(T.n, 1)
    upper = T.p[iu]
    if eps == 0.0:
        if np.all(np.abs(upper - 0.5) <= TOL):
            return np.broadcast_to(T.p, (count, T.n, T.n)).copy()
        raise ZeroEpsilon("epsilon = 0 admits only the uniform tournament")
    if not is_weakly_bounded(T, eps):
        raise InvalidProbability(f"tournament is not weakly {eps}-bounded")
    q = np.clip((upper - (0.5 - eps)) / (2 * eps), 0.0, 1.0)
    hit = _rng(seed).random((count, len(q))) < q
    out = np.zeros((count, T.n, T.n))
    vals = np.where(hit, 0.5 + eps, 0.5 - eps)
    out[:, iu[0], iu[1]] = vals
    out[:, iu[1], iu[0]] = 1.0 - vals
    return out
