"""Slow brute-force references that share no code with the package.

RDM and RKotH enumerate every deterministic realization of the matches and
then every sequence of random rule choices.  RSEB seeds a fixed bracket once,
averages over all slot arrangements, and plays each bracket with the
textbook subtree recursion.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def realizations(p):
    """Yield ``(prob, beats)`` for every deterministic outcome of ``p``."""
    n = len(p)
    pairs = _pairs(n)
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        prob = 1.0
        beats = [[False] * n for _ in range(n)]
        for (i, j), b in zip(pairs, bits):
            if b:
                prob *= p[i][j]
                beats[i][j] = True
            else:
                prob *= p[j][i]
                beats[j][i] = True
        if prob > 0:
            yield prob, beats


def det_winners(rule, beats):
    """Winner distribution of RDM or RKotH on a deterministic tournament."""
    n = len(beats)
    key = tuple(tuple(r) for r in beats)

    @lru_cache(maxsize=None)
    def go(alive):
        if len(alive) == 1:
            return {alive[0]: 1.0}
        out = {}
        if rule == "rdm":
            options = [(1.0 / (len(alive) * (len(alive) - 1) / 2), [(a, b)]) for a, b in itertools.combinations(alive, 2)]
        elif rule == "rkoth":
            options = [(1.0 / len(alive), [(i, j) for j in alive if j != i]) for i in alive]
        else:
            raise ValueError(rule)
        for w, matches in options:
            losers = {b if key[a][b] else a for a, b in matches}
            rest = tuple(t for t in alive if t not in losers)
            for t, q in go(rest).items():
                out[t] = out.get(t, 0.0) + w * q
        return out

    return go(tuple(range(n)))


def _bracket_dist(p, slots):
    """Winner distribution of one fixed bracket; ``None`` slots are dummies."""
    level = [{s: 1.0} for s in slots]
    while len(level) > 1:
        nxt = []
        for A, B in zip(level[::2], level[1::2]):
            out = {}
            for a, pa in A.items():
                for b, pb in B.items():
                    if a is None and b is None:
                        out[None] = out.get(None, 0.0) + pa * pb
                    elif b is None:
                        out[a] = out.get(a, 0.0) + pa * pb
                    elif a is None:
                        out[b] = out.get(b, 0.0) + pa * pb
                    else:
                        out[a] = out.get(a, 0.0) + pa * pb * p[a][b]
                        out[b] = out.get(b, 0.0) + pa * pb * p[b][a]
            nxt.append(out)
        level = nxt
    return level[0]


def padded(n):
    m = 1
    while m < n:
        m *= 2
    return m


def arrangements(n):
    slots = list(range(n)) + [None] * (padded(n) - n)
    return sorted(set(itertools.permutations(slots)), key=lambda s: tuple(-1 if x is None else x for x in s))


def winner_probs(rule, p):
    p = np.asarray(p, dtype=float).tolist()
    n = len(p)
    probs = np.zeros(n)
    if rule == "rseb":
        arr = arrangements(n)
        for slots in arr:
            for t, q in _bracket_dist(p, slots).items():
                probs[t] += q / len(arr)
        return probs
    for w, beats in realizations(p):
        for t, q in det_winners(rule, beats).items():
            probs[t] += w * q
    return probs


def pair_gain(rule, p, u, v, grid=(0.0, 0.25, 0.5, 0.75, 1.0)):
    """Best coalition gain over a grid of values for ``p[u][v]`` (grid includes both extremes)."""
    base = winner_probs(rule, p)[[u, v]].sum()
    best = base
    for x in grid:
        q = np.array(p, dtype=float)
        q[u, v], q[v, u] = x, 1.0 - x
        best = max(best, winner_probs(rule, q)[[u, v]].sum())
    return best - base


def gauntlet(rule, p, u):
    """Opponent-sequence distribution for ``u`` when it is made to win everything."""
    q = np.array(p, dtype=float)
    q[u, :], q[:, u], q[u, u] = 1.0, 0.0, 0.0
    q = q.tolist()
    n = len(q)
    out = {}
    if rule == "rseb":
        arr = arrangements(n)
        for slots in arr:
            for seq, pr in _bracket_gauntlet(q, list(slots), u).items():
                out[seq] = out.get(seq, 0.0) + pr / len(arr)
        return out

    def go(alive, w, seq):
        if len(alive) == 1:
            out[seq] = out.get(seq, 0.0) + w
            return
        if rule == "rdm":
            k = len(alive) * (len(alive) - 1) / 2
            options = [(1.0 / k, [(a, b)]) for a, b in itertools.combinations(alive, 2)]
        else:
            options = [(1.0 / len(alive), [(i, j) for j in alive if j != i]) for i in alive]
        for wt, matches in options:
            opp = tuple(sorted(b if a == u else a for a, b in matches if u in (a, b)))
            for bits in itertools.product((0, 1), repeat=len(matches)):
                pr = wt
                losers = set()
                for (a, b), first in zip(matches, bits):
                    pr *= q[a][b] if first else q[b][a]
                    losers.add(b if first else a)
                if pr == 0 or u in losers:
                    continue
                go(tuple(t for t in alive if t not in losers), w * pr, seq + opp)

    go(tuple(range(n)), 1.0, ())
    return out


def _bracket_gauntlet(q, slots, u):
    """Opponent sequence of ``u`` in a fixed bracket where ``u`` always wins."""
    # u's opponent at each level is the winner of the sibling subtree
    size, pos, seqs = 1, slots.index(u), {(): 1.0}
    while size < len(slots):
        start = (pos // size) ^ 1
        sib = _bracket_dist(q, slots[start * size:(start + 1) * size])
        nxt = {}
        for seq, pr in seqs.items():
            for t, pt in sib.items():
                key = seq if t is None else seq + (t,)
                nxt[key] = nxt.get(key, 0.0) + pr * pt
        seqs = nxt
        size *= 2
    return seqs
