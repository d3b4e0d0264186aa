from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epartition.calib import grid_harmonic_calibrate, harmonic, simes, su_calibrate, su_multiplier
from epartition.oracle import all_masks
from epartition.suites import (
    EValueVector,
    PValueVector,
    by_suite,
    clique_feasibility,
    mean_e_suite,
    pairwise_labels,
    su_suite,
    with_feasibility,
)

ALPHA = 0.05


def test_evalue_vector_validation():
    with pytest.raises(ValueError):
        EValueVector.from_values([1.0, -0.1])
    with pytest.raises(ValueError):
        EValueVector.from_values([1.0, np.nan])
    with pytest.raises(ValueError):
        EValueVector.from_values([1.0, np.inf])
    with pytest.raises(ValueError):
        PValueVector.from_values([0.5, 1.2])


def test_sort_permutation_breaks_ties_by_id():
    v = EValueVector.from_values([5, 7, 5, 7], ids=["d", "c", "b", "a"])
    assert [v.ids[i] for i in v.perm] == ["a", "c", "b", "d"]
    p = PValueVector.from_values([0.2, 0.1, 0.2], ids=[3, 1, 2])
    assert [p.ids[i] for i in p.perm] == [1, 2, 3]


def test_mean_e_examples():
    s = mean_e_suite([30, 10])
    assert s.evaluate([0, 1]) == 20.0
    assert s.evaluate([1]) == 10.0
    assert mean_e_suite([35, 25, 15, 5]).evaluate([2, 3]) == 10.0
    assert s.alpha_free and not s.monotone_in_p
    with pytest.raises(ValueError):
        s.evaluate([])


@settings(max_examples=100, deadline=None)
@given(
    e=st.lists(st.floats(0, 1e4), min_size=1, max_size=8),
    data=st.data(),
)
def test_mean_e_between_min_and_max_and_monotone(e, data):
    s = mean_e_suite(e)
    m = len(e)
    S = data.draw(st.sets(st.integers(0, m - 1), min_size=1))
    val = s.evaluate(S)
    vals = [e[i] for i in S]
    assert min(vals) - 1e-9 <= val <= max(vals) + 1e-9
    i = data.draw(st.integers(0, m - 1))
    bumped = list(e)
    bumped[i] += 1.0
    s2 = mean_e_suite(bumped)
    if i in S:
        assert s2.evaluate(S) >= val
    else:
        assert s2.evaluate(S) == val


def test_by_examples():
    assert by_suite([0.03], ALPHA).evaluate([0]) == pytest.approx(20.0)
    assert by_suite([0.5, 0.9, 0.07], ALPHA).evaluate([0, 1, 2]) == 0.0
    # h_2 = 1.5: first term 1/(0.05 * ceil(1.2)) = 10, second term zero
    assert by_suite([0.02, 0.06], ALPHA).evaluate([0, 1]) == pytest.approx(10.0)
    s = by_suite([0.02, 0.06], ALPHA)
    assert s.monotone_in_p and not s.alpha_free and s.alpha == ALPHA


def test_by_matches_calibrator_average():
    rng = np.random.default_rng(3)
    p = rng.uniform(0, 0.1, 7)
    s = by_suite(p, ALPHA)
    for r in range(1, 8):
        for S in combinations(range(7), r):
            direct = np.mean([grid_harmonic_calibrate(p[i], r, ALPHA) for i in S])
            assert s.evaluate(S) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_su_examples():
    l = su_multiplier(ALPHA).l_alpha
    m = 5
    c = m * l * ALPHA / (m - 1)
    p = [l * ALPHA / m] + [c] * (m - 1)
    s = su_suite(p, ALPHA)
    for r in range(1, m + 1):
        for S in combinations(range(m), r):
            want = 1 / ALPHA if 0 in S else (m - 1) / (m * ALPHA)
            assert s.evaluate(S) == pytest.approx(want, rel=1e-12)
    assert su_suite([0.3, 1.0], ALPHA).evaluate([1]) == pytest.approx(l)


def test_su_matches_calibrated_simes():
    rng = np.random.default_rng(4)
    p = rng.beta(0.3, 1, 6)
    s = su_suite(p, 0.1)
    for r in range(1, 7):
        for S in combinations(range(6), r):
            assert s.evaluate(S) == pytest.approx(su_calibrate(simes(p[list(S)]), 0.1), rel=1e-12)


@pytest.mark.parametrize("build", ["mean", "by", "su"])
def test_evaluate_many_matches_evaluate(build):
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = int(rng.integers(1, 8))
        if build == "mean":
            s = mean_e_suite(rng.pareto(1.2, m) * 10)
        elif build == "by":
            s = by_suite(rng.beta(0.3, 1, m), 0.1)
        else:
            s = su_suite(rng.beta(0.3, 1, m), 0.1)
        masks = all_masks(m)
        many = s.evaluate_many(masks)
        one = [s.evaluate(np.flatnonzero(row)) for row in masks]
        np.testing.assert_allclose(many, one, rtol=1e-12, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    p=st.lists(st.floats(0, 1), min_size=2, max_size=7),
    alpha=st.sampled_from([0.01, 0.05, 0.2]),
    data=st.data(),
)
def test_p_suites_decrease_in_p_and_bounded(p, alpha, data):
    m = len(p)
    S = sorted(data.draw(st.sets(st.integers(0, m - 1), min_size=1)))
    i = data.draw(st.sampled_from(S))
    bump = data.draw(st.floats(0, 1))
    q = list(p)
    q[i] = min(1.0, q[i] + bump)
    for make, cap in ((by_suite, len(S) / alpha), (su_suite, 1 / alpha)):
        before, after = make(p, alpha).evaluate(S), make(q, alpha).evaluate(S)
        assert after <= before + 1e-12
        assert before <= cap * (1 + 1e-12)


def test_suites_are_e_values_under_uniform_nulls():
    rng = np.random.default_rng(11)
    n, m = 10 ** 5, 6
    P = rng.uniform(size=(n, m))
    # mean-e fed with calibrated uniforms
    E = su_calibrate(P, 0.05)
    for _ in range(3):
        S = np.flatnonzero(rng.random(m) < 0.5)
        if S.size == 0:
            S = np.array([0])
        masks = np.zeros((1, m), dtype=bool)
        masks[0, S] = True
        draws = {
            "mean": E[:, S].mean(axis=1),
            "by": np.array([by_suite(P[j], 0.05).evaluate_many(masks)[0] for j in range(20000)]),
            "su": np.array([su_suite(P[j], 0.05).evaluate_many(masks)[0] for j in range(20000)]),
        }
        for name, x in draws.items():
            se = x.std(ddof=1) / np.sqrt(x.size)
            assert x.mean() <= 1 + 3 * se, name


def test_feasibility_wrapper():
    f = clique_feasibility(4)
    s = with_feasibility(mean_e_suite([80, 20, 20, 0, 0, 0]), f)
    assert s.evaluate([0, 1]) == np.inf  # theta1=theta2=theta3 forces theta2=theta3
    assert s.evaluate([1]) == 20.0
    assert s.alpha_free and not s.monotone_in_p


def test_clique_feasibility_examples():
    f = clique_feasibility(4)
    labels = pairwise_labels(4)
    assert labels == [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
    assert f([labels.index((1, 2))])
    assert not f([labels.index((1, 2)), labels.index((1, 3))])
    assert f([labels.index(pr) for pr in [(1, 2), (1, 3), (2, 3)]])
    with pytest.raises(ValueError):
        f([6])


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for j in range(len(part)):
            yield part[:j] + [[first] + part[j]] + part[j + 1 :]
        yield [[first]] + part


@pytest.mark.parametrize("k", [3, 4, 5])
def test_clique_feasible_count_matches_set_partitions(k):
    # each feasible S is the equality pattern of a partition; drop the all-distinct one
    f = clique_feasibility(k)
    m = k * (k - 1) // 2
    count = sum(f(S) for r in range(1, m + 1) for S in combinations(range(m), r))
    n_partitions = sum(1 for _ in _set_partitions(list(range(k))))
    assert count == n_partitions - 1
    if k == 4:
        assert count == 14


def test_feasible_sets_are_transitively_closed():
    f = clique_feasibility(4)
    labels = pairwise_labels(4)
    for r in range(1, 7):
        for S in combinations(range(6), r):
            if not f(S):
                continue
            edges = {labels[t] for t in S}
            for (a, b) in edges:
                for (c, d) in edges:
                    shared = {a, b} & {c, d}
                    if len(shared) == 1 and (a, b) != (c, d):
                        x, y = sorted(({a, b} | {c, d}) - shared)
                        assert (x, y) in edges
