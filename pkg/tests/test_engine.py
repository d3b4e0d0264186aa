from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epartition.engine import (
    CapacityError,
    StrategyError,
    check_membership,
    critical_alpha,
    largest_prefix,
    mean_e_membership,
    monotone_membership,
    prefix_g,
    prefix_sums,
    singleton_rejections,
)
from epartition.oracle import (
    brute_collection,
    brute_critical_alpha,
    brute_membership,
    random_evalues,
    random_pvalues,
)
from epartition.stepup import by, ebh, su
from epartition.suites import (
    by_suite,
    clique_feasibility,
    mean_e_suite,
    su_suite,
    with_feasibility,
)

ALPHA = 0.05


def collection(e, alpha=ALPHA):
    return set(brute_collection(mean_e_suite(e), alpha))


# -- worked examples --------------------------------------------------------


def test_two_hypothesis_examples():
    assert collection([36, 0]) == {()}
    assert collection([36, 4]) == {(), (0,)}
    assert collection([30, 10]) == {(), (0,), (0, 1)}


def test_ebh_plus_beats_ebh():
    e = [35, 25, 15, 5]
    assert ebh(e, ALPHA).r == 0
    assert largest_prefix(e, ALPHA).r == 4
    assert largest_prefix(mean_e_suite(e), ALPHA, "brute").r == 4


def test_prefix_g_not_convex_in_a():
    f = prefix_sums([100, 1, 1, 1])
    vals = [prefix_g(f, a, 4, 4, ALPHA) for a in range(4)]
    np.testing.assert_allclose(vals, [23, -42, -18, -4], atol=1e-9)
    assert not largest_prefix([100, 1, 1, 1], ALPHA).r == 4


def test_witness_is_a_genuine_violation():
    res = check_membership(mean_e_suite([30, 10]), [1], ALPHA)
    assert not res
    S = res.witness.S
    s = mean_e_suite([30, 10])
    assert ALPHA * s.evaluate(S) < len(set(S) & {1}) / 1
    assert res.witness.e_S == pytest.approx(s.evaluate(S))


def test_feasibility_changes_membership():
    e = [80, 20, 20, 0, 0, 0]
    plain = mean_e_suite(e)
    res = check_membership(plain, [0, 1, 2], ALPHA)
    assert not res
    assert res.witness.S == (1, 3, 4, 5)
    assert not brute_membership(plain, [0, 1, 2], ALPHA)
    feas = with_feasibility(plain, clique_feasibility(4))
    assert check_membership(feas, [0, 1, 2], ALPHA)
    assert not check_membership(plain, [0, 1, 2], ALPHA, "mean_e_fast")


def test_empty_set_always_member():
    for s in (mean_e_suite([0, 0]), by_suite([1, 1], ALPHA), su_suite([1.0], ALPHA)):
        assert check_membership(s, [], ALPHA)


# -- strategy equivalence against the oracle --------------------------------


def _suites(rng, m):
    alpha = float(rng.choice([0.01, 0.05, 0.1, 0.2]))
    yield "mean", mean_e_suite(random_evalues(rng, m)), alpha
    p = random_pvalues(rng, m)
    yield "by", by_suite(p, alpha), alpha
    yield "su", su_suite(p, alpha), alpha


def _candidate_sets(rng, m, suite):
    for r in range(m + 1):
        yield suite.prefix(r)
    for _ in range(6):
        yield np.flatnonzero(rng.random(m) < rng.uniform(0.1, 0.9))


def test_fast_paths_match_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(150):
        m = int(rng.integers(1, 10))
        for name, suite, alpha in _suites(rng, m):
            fast = "mean_e_fast" if name == "mean" else "monotone"
            for R in _candidate_sets(rng, m, suite):
                a = check_membership(suite, R, alpha, fast)
                b = brute_membership(suite, R, alpha)
                assert a.member == b.member, (name, suite.evidence.values, R, alpha)
                if not a.member:
                    S = list(a.witness.S)
                    frac = len(set(S) & set(int(i) for i in R)) / len(R)
                    assert alpha * suite.evaluate(S) - frac < 0
            assert largest_prefix(suite, alpha, fast).r == largest_prefix(suite, alpha, "brute").r
            assert singleton_rejections(suite, alpha, fast) == singleton_rejections(suite, alpha, "brute")


def test_largest_prefix_matches_full_enumeration():
    rng = np.random.default_rng(9)
    for _ in range(60):
        m = int(rng.integers(1, 8))
        e = random_evalues(rng, m)
        s = mean_e_suite(e)
        members = set(brute_collection(s, ALPHA))
        order = list(s.order)
        want = max(r for r in range(m + 1) if tuple(sorted(order[:r])) in members)
        assert largest_prefix(s, ALPHA).r == want


def test_plus_procedures_contain_baselines():
    rng = np.random.default_rng(12)
    for _ in range(200):
        m = int(rng.integers(1, 12))
        alpha = float(rng.choice([0.01, 0.05, 0.1]))
        e = random_evalues(rng, m)
        p = random_pvalues(rng, m)
        pairs = [
            (ebh(e, alpha), mean_e_suite(e)),
            (by(p, alpha), by_suite(p, alpha)),
            (su(p, alpha), su_suite(p, alpha)),
        ]
        for base, suite in pairs:
            assert check_membership(suite, base.indices, alpha)
            assert largest_prefix(suite, alpha).r >= base.r


def test_mean_e_membership_is_scale_free_in_outside_zeros():
    # appending zero e-values can only shrink the collection
    rng = np.random.default_rng(1)
    for _ in range(100):
        m = int(rng.integers(1, 8))
        e = random_evalues(rng, m)
        R = np.flatnonzero(rng.random(m) < 0.5)
        grown = np.concatenate([e, np.zeros(3)])
        if not mean_e_membership(e, R, ALPHA):
            assert not mean_e_membership(grown, R, ALPHA)


@settings(max_examples=150, deadline=None)
@given(
    e=st.lists(st.floats(0, 200), min_size=2, max_size=9),
    alpha=st.sampled_from([0.01, 0.05, 0.1, 0.2]),
    data=st.data(),
)
def test_mean_e_fast_agrees_with_brute_hypothesis(e, alpha, data):
    m = len(e)
    R = sorted(data.draw(st.sets(st.integers(0, m - 1))))
    s = mean_e_suite(e)
    assert mean_e_membership(s, R, alpha).member == brute_membership(s, R, alpha).member


@settings(max_examples=150, deadline=None)
@given(
    p=st.lists(st.floats(0, 1), min_size=2, max_size=8),
    alpha=st.sampled_from([0.01, 0.05, 0.1]),
    data=st.data(),
)
def test_monotone_agrees_with_brute_hypothesis(p, alpha, data):
    m = len(p)
    R = sorted(data.draw(st.sets(st.integers(0, m - 1))))
    for s in (by_suite(p, alpha), su_suite(p, alpha)):
        assert monotone_membership(s, R, alpha).member == brute_membership(s, R, alpha).member


# -- singletons and critical alpha ------------------------------------------


def test_singletons_examples():
    assert singleton_rejections(mean_e_suite([30, 10]), ALPHA) == (0,)
    assert singleton_rejections(mean_e_suite([36, 0]), ALPHA) == ()
    assert singleton_rejections(mean_e_suite([36, 4]), ALPHA) == (0,)


def test_singletons_control_a_union():
    rng = np.random.default_rng(31)
    for _ in range(100):
        m = int(rng.integers(1, 9))
        s = mean_e_suite(random_evalues(rng, m))
        members = set(brute_collection(s, ALPHA))
        single = singleton_rejections(s, ALPHA)
        assert set(single) == {R[0] for R in members if len(R) == 1}


def test_critical_alpha_examples():
    assert critical_alpha(mean_e_suite([30, 10]), [0]) == pytest.approx(0.05)
    assert critical_alpha(mean_e_suite([30, 0]), [0]) == pytest.approx(1 / 15)
    assert critical_alpha(mean_e_suite([30, 10]), [0, 1]) == pytest.approx(0.05)
    assert critical_alpha(mean_e_suite([30, 10]), [1]) == pytest.approx(0.1)
    assert critical_alpha(mean_e_suite([0, 5]), [0]) == np.inf


def test_critical_alpha_is_the_membership_boundary():
    rng = np.random.default_rng(77)
    grid = np.linspace(0.005, 1.0, 200)
    for _ in range(150):
        m = int(rng.integers(1, 9))
        s = mean_e_suite(random_evalues(rng, m))
        R = np.flatnonzero(rng.random(m) < 0.5)
        if R.size == 0:
            continue
        fast = critical_alpha(s, R)
        slow = brute_critical_alpha(s, R)
        if np.isinf(slow):
            assert np.isinf(fast)
            continue
        assert fast == pytest.approx(slow, rel=1e-12)
        if fast <= 1.0:
            assert check_membership(s, R, fast)
            assert not check_membership(s, R, fast * (1 - 1e-9))
        for a in grid:
            if abs(a - fast) > 1e-9 * max(fast, 1):
                assert check_membership(s, R, a).member == (a > fast)


def test_critical_alpha_feasible_suite_uses_brute():
    feas = with_feasibility(mean_e_suite([80, 20, 20, 0, 0, 0]), clique_feasibility(4))
    val = critical_alpha(feas, [0, 1, 2])
    assert val == pytest.approx(brute_critical_alpha(feas, [0, 1, 2]))
    assert val <= ALPHA


# -- errors -----------------------------------------------------------------


def test_strategy_errors():
    bys = by_suite([0.01, 0.2], ALPHA)
    with pytest.raises(StrategyError):
        critical_alpha(bys, [0])
    with pytest.raises(StrategyError):
        check_membership(bys, [0], ALPHA, "mean_e_fast")
    with pytest.raises(StrategyError):
        check_membership(mean_e_suite([1, 2]), [0], ALPHA, "monotone")
    with pytest.raises(StrategyError):
        check_membership(bys, [0], 0.1)
    with pytest.raises(StrategyError):
        check_membership(bys, [0], ALPHA, "magic")
    with pytest.raises(ValueError):
        check_membership(mean_e_suite([1, 2]), [0], 0.0)
    with pytest.raises(ValueError):
        check_membership(mean_e_suite([1, 2]), [5], ALPHA)
    with pytest.raises(ValueError):
        critical_alpha(mean_e_suite([1, 2]), [])


def test_capacity_error_for_brute_force():
    s = mean_e_suite(np.ones(25))
    with pytest.raises(CapacityError):
        check_membership(s, [0], ALPHA, "brute")
    with pytest.raises(CapacityError):
        brute_collection(mean_e_suite(np.ones(16)), ALPHA)
    # the fast path has no such cap
    assert check_membership(mean_e_suite(np.full(25, 100.0)), [0], ALPHA)


def test_large_mean_e_scales():
    rng = np.random.default_rng(0)
    e = rng.pareto(1.5, 5000) * 10
    r = largest_prefix(e, ALPHA).r
    assert r >= ebh(e, ALPHA).r
    assert check_membership(mean_e_suite(e), mean_e_suite(e).prefix(r), ALPHA)


def test_prefix_slack_convex_in_b():
    rng = np.random.default_rng(21)
    for _ in range(300):
        m = int(rng.integers(3, 15))
        f = prefix_sums(random_evalues(rng, m))
        alpha = float(rng.choice([0.01, 0.05, 0.2]))
        r = int(rng.integers(1, m))
        a = int(rng.integers(0, r))
        g = np.array([prefix_g(f, a, r, b, alpha) for b in range(r, m + 1)])
        if g.size >= 3:
            assert np.all(np.diff(g, 2) >= -1e-9 * max(1.0, np.abs(g).max()))
