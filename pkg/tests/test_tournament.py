import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import strict_tournaments, tournaments
from tournament_manip import (
    BadCoalition,
    InvalidProbability,
    NotComplementary,
    NotStrict,
    ProbTournament,
    TooLarge,
    ZeroEpsilon,
)
from tournament_manip.manipulation import three_cycle
from tournament_manip.gauntlet import subcase_3b_tournament
from tournament_manip.tournament import (
    DetTournament,
    adjacent_extremes,
    condorcet_winner,
    det_cycle,
    enumerate_strict,
    enumerate_strict_batches,
    is_strictly_bounded,
    is_weakly_bounded,
    l_values,
    sample_outcome,
    sample_strict,
    sample_weak,
    strict_code,
    strict_decomposition_sample,
    strict_decomposition_samples,
    transitive,
    validate,
)


def test_validate_accepts_complementary_pair():
    validate(np.array([[0, 0.7], [0.3, 0]]))


def test_validate_rejects_non_complementary():
    with pytest.raises(NotComplementary):
        validate(np.array([[0, 0.7], [0.4, 0]]))


def test_validate_rejects_out_of_range():
    p = np.zeros((3, 3))
    p[0, 1], p[1, 0] = 1.2, -0.2
    with pytest.raises(InvalidProbability):
        ProbTournament(p)


def test_lower_triangle_is_derived_from_upper():
    T = ProbTournament.from_upper(3, [0.2, 0.9, 0.6])
    assert T.p[1, 0] == pytest.approx(0.8)
    assert T.p[2, 0] == pytest.approx(0.1)
    assert np.all(np.diag(T.p) == 0)


def test_json_round_trip(tmp_path):
    T = ProbTournament.from_upper(4, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    assert ProbTournament.loads(T.dumps()) == T
    path = tmp_path / "t.json"
    T.save(path)
    assert ProbTournament.load(path) == T
    assert json.loads(path.read_text())["n"] == 4


def test_det_tournament_must_be_antisymmetric():
    with pytest.raises(NotComplementary):
        DetTournament(np.array([[0, 1], [1, 0]], dtype=bool))


@pytest.mark.parametrize("eps, expect", [(0.0, True), (0.1, True)])
def test_uniform_is_bounded(eps, expect):
    assert is_weakly_bounded(ProbTournament.uniform(4), eps) is expect
    assert is_strictly_bounded(ProbTournament.uniform(4), 0.0)


def test_deterministic_is_half_bounded():
    assert is_weakly_bounded(transitive(5), 0.5)
    assert is_strictly_bounded(transitive(5), 0.5)


def test_weak_bound_rejects_wide_entry():
    T = ProbTournament.from_upper(2, [0.7])
    assert not is_weakly_bounded(T, 0.1)


def test_strict_class_examples():
    assert is_strictly_bounded(three_cycle(0.2), 0.2)
    T = ProbTournament.from_upper(3, [0.5, 0.7, 0.7])
    assert not is_strictly_bounded(T, 0.2)


@pytest.mark.parametrize("n", range(1, 6))
def test_enumerate_strict_counts_distinct(n):
    items = list(enumerate_strict(n, 0.2))
    assert len({T.p.tobytes() for T in items}) == len(items) == 2 ** math.comb(n, 2)
    assert all(is_strictly_bounded(T, 0.2) for T in items)


@pytest.mark.parametrize("n", [6, 7])
def test_enumerate_strict_batches_distinct(n):
    iu = np.triu_indices(n, 1)
    total, seen = 0, set()
    for codes, mats in enumerate_strict_batches(n, 0.2):
        bits = mats[:, iu[0], iu[1]] > 0.5
        packed = (bits * (1 << np.arange(bits.shape[1]))).sum(axis=1)
        assert np.array_equal(packed, codes)
        seen.update(packed.tolist())
        total += len(codes)
    assert total == len(seen) == 2 ** math.comb(n, 2)


def test_enumerate_strict_order_and_cap():
    first = list(enumerate_strict(3, 0.5))
    # bit 0 is edge (0, 1): code 1 means 0 beats 1
    assert first[0].p[0, 1] == 0.0 and first[1].p[0, 1] == 1.0
    assert [strict_code(T.p) for T in first] == list(range(8))
    with pytest.raises(TooLarge):
        next(enumerate_strict(9, 0.2))


def test_enumerate_strict_half_gives_all_deterministic():
    mats = list(enumerate_strict(3, 0.5))
    assert len(mats) == 8
    assert all(T.is_deterministic() for T in mats)


@given(st.integers(1, 7), st.sampled_from([0.0, 0.1, 0.3, 0.5]), st.integers(0, 2**31))
def test_samplers_land_in_their_class(n, eps, seed):
    assert is_strictly_bounded(sample_strict(n, eps, seed), eps)
    assert is_weakly_bounded(sample_weak(n, eps, seed), eps)
    assert sample_strict(n, eps, seed) == sample_strict(n, eps, seed)


def test_sample_weak_zero_is_uniform():
    assert sample_weak(4, 0.0, 3) == ProbTournament.uniform(4)


def test_sample_outcome_deterministic_input():
    assert sample_outcome(transitive(4), 1).to_prob() == transitive(4)


def test_sample_outcome_uniform_frequency(rng):
    T = ProbTournament.uniform(3)
    hits = np.array([sample_outcome(T, rng).beats[0, 1] for _ in range(20000)], dtype=float)
    se = hits.std(ddof=1) / math.sqrt(hits.size)
    assert abs(hits.mean() - 0.5) <= 4 * se


def test_three_cycle_condorcet_frequency(rng):
    eps = 0.2
    T = three_cycle(eps)
    hits = np.array([sample_outcome(T, rng).condorcet_winner() is not None for _ in range(20000)], dtype=float)
    expect = 3 * (0.5 + eps) * (0.5 - eps)
    se = math.sqrt(expect * (1 - expect) / hits.size)
    assert abs(hits.mean() - expect) <= 4 * se


@given(tournaments(), st.data())
def test_adjacent_extremes_touch_only_the_pair(T, data):
    u, v = data.draw(st.sampled_from([(i, j) for i in range(T.n) for j in range(i + 1, T.n)]))
    lo, hi = adjacent_extremes(T, (v, u))
    assert lo.p[u, v] == 0.0 and hi.p[u, v] == 1.0
    for X in (lo, hi):
        diff = np.argwhere(X.p != T.p)
        assert all({int(a), int(b)} == {u, v} for a, b in diff)


def test_adjacent_extremes_includes_extreme_input():
    T = ProbTournament.from_upper(3, [1.0, 0.4, 0.3])
    assert T in adjacent_extremes(T, (0, 1))
    with pytest.raises(BadCoalition):
        adjacent_extremes(T, (0, 1, 2))


def test_condorcet_winner_examples():
    assert condorcet_winner(transitive(3)) == 0
    assert condorcet_winner(det_cycle(3)) is None
    assert condorcet_winner(three_cycle(0.2)) is None


def test_decomposition_of_strict_is_identity():
    T = three_cycle(0.3)
    assert all(strict_decomposition_sample(T, 0.3, s) == T for s in range(5))


def test_decomposition_uniform_half_split():
    draws = strict_decomposition_samples(ProbTournament.uniform(3), 0.3, 40000, seed=2)
    hi = np.isclose(draws[:, 0, 1], 0.8)
    assert np.all(hi | np.isclose(draws[:, 0, 1], 0.2))
    assert abs(hi.mean() - 0.5) <= 4 * 0.5 / math.sqrt(hi.size)


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5])
def test_decomposition_mean_matches(eps):
    T = sample_weak(5, eps, 9)
    draws = strict_decomposition_samples(T, eps, 100_000, seed=10)
    iu = np.triu_indices(5, 1)
    x = draws[:, iu[0], iu[1]]
    se = x.std(axis=0, ddof=1) / math.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0) - T.p[iu]) <= 4 * se)


def test_decomposition_single_draw_matches_batch_law():
    T = sample_weak(4, 0.25, 1)
    U = strict_decomposition_sample(T, 0.25, 4)
    assert is_strictly_bounded(U, 0.25)


def test_decomposition_zero_epsilon():
    assert strict_decomposition_sample(ProbTournament.uniform(3), 0.0, 1) == ProbTournament.uniform(3)
    with pytest.raises(ZeroEpsilon):
        strict_decomposition_sample(ProbTournament.from_upper(2, [0.6]), 0.0, 1)


def test_l_values_examples():
    assert l_values(three_cycle(0.2), 0, 1, 0.2) == (1, 0)
    same = ProbTournament.from_upper(3, [0.7, 0.3, 0.3])
    assert l_values(same, 0, 1, 0.2) == (0, 0)
    assert l_values(subcase_3b_tournament(0.5), 0, 1, 0.5) == (2, 1)
    assert l_values(ProbTournament.uniform(4), 0, 1, 0.0) == (0, 0)
    with pytest.raises(NotStrict):
        l_values(ProbTournament.from_upper(3, [0.6, 0.6, 0.55]), 0, 1, 0.1)


@given(strict_tournaments(min_n=3))
def test_l_values_swap_symmetry(Te):
    T, eps = Te
    for u in range(T.n):
        for v in range(T.n):
            if u != v:
                lu, lv = l_values(T, u, v, eps)
                assert l_values(T, v, u, eps) == (lv, lu)
