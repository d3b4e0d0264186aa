"""Rejection-collection queries for e-partitioning procedures.

A set ``R`` belongs to the rejection collection at level ``alpha`` when
``alpha * e_S >= |R & S| / max(|R|, 1)`` for every non-empty ``S``. The
functions here answer that question without enumerating all ``S`` when the
suite has exploitable structure:

* mean-e suites: only the sets made of the ``k`` smallest e-values inside
  ``R`` and the ``l`` smallest outside can bind, and for fixed ``k`` the
  slack is convex in ``l``;
* suites that are weakly decreasing in every p-value: only the sets made of
  the ``a`` largest p-values inside ``R`` and ``b`` largest outside can bind.

Everything else falls back to brute force (see :mod:`epartition.oracle`).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .stepup import PrefixRejection
from .suites import EValueVector, MeanESuite, Suite, as_index_set, mean_e_suite

__all__ = [
    "TOL",
    "StrategyError",
    "CapacityError",
    "Witness",
    "MembershipResult",
    "prefix_sums",
    "prefix_g",
    "check_membership",
    "mean_e_membership",
    "monotone_membership",
    "largest_prefix",
    "singleton_rejections",
    "critical_alpha",
]

# Absolute slack on alpha*e_S - |R&S|/|R|, resolved in favour of membership.
TOL = 1e-12

STRATEGIES = ("auto", "brute", "monotone", "mean_e_fast")


class StrategyError(ValueError):
    """Query strategy does not fit the suite, or alpha does not match it."""


class CapacityError(ValueError):
    """Instance too large for an exponential-time route."""


@dataclass(frozen=True)
class Witness:
    S: tuple
    e_S: float
    fdp_bound: float


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.member


MEMBER = MembershipResult(True)


def _check_alpha(suite, alpha):
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if suite.alpha is not None and not math.isclose(suite.alpha, alpha, rel_tol=1e-12):
        raise StrategyError(
            f"suite was built for alpha={suite.alpha}, queried at alpha={alpha}"
        )


def _resolve(suite, strategy):
    if strategy not in STRATEGIES:
        raise StrategyError(f"unknown strategy {strategy!r}")
    if strategy == "auto":
        if isinstance(suite, MeanESuite):
            return "mean_e_fast"
        if suite.monotone_in_p:
            return "monotone"
        return "brute"
    if strategy == "mean_e_fast" and not isinstance(suite, MeanESuite):
        raise StrategyError("mean_e_fast needs a mean-e suite")
    if strategy == "monotone" and not suite.monotone_in_p:
        raise StrategyError("monotone shortcut needs a suite decreasing in p")
    return strategy


def check_membership(suite: Suite, R, alpha, strategy="auto") -> MembershipResult:
    """Is ``R`` in the rejection collection of ``suite`` at level ``alpha``?"""
    _check_alpha(suite, alpha)
    how = _resolve(suite, strategy)
    if how == "mean_e_fast":
        return mean_e_membership(suite, R, alpha)
    if how == "monotone":
        return monotone_membership(suite, R, alpha)
    from .oracle import brute_membership

    return brute_membership(suite, R, alpha)


# -- mean-e fast path -------------------------------------------------------


def prefix_sums(e):
    """``f_k`` = sum of the ``k`` largest e-values, ``f_0 = 0``."""
    d = as_sorted_desc(e)
    return np.concatenate([[0.0], np.cumsum(d)])


def as_sorted_desc(e):
    if isinstance(e, MeanESuite):
        return e.evidence.sorted
    if isinstance(e, EValueVector):
        return e.sorted
    return np.sort(np.asarray(e, dtype=float))[::-1]


def prefix_g(f, a, r, b, alpha):
    """Slack of the prefix ``[r]`` against ``S = {a+1..r} | {b+1..m}``.

    ``g = f_m - f_b + f_r - f_a - (m - b + r - a)(r - a) / (r alpha)``; the
    prefix is a member iff ``g >= 0`` for all ``0 <= a < r <= b <= m``.
    """
    m = len(f) - 1
    return f[m] - f[b] + f[r] - f[a] - (m - b + r - a) * (r - a) / (r * alpha)


def _min_slack(inside, outside, n, alpha):
    """Worst normalised slack over ``k = 1..|inside|``.

    ``inside``/``outside`` are ascending. Returns ``(slack, k, l)`` arrays,
    where ``slack[k-1] = alpha * mean(S_kl) - k/n`` at the minimising ``l``.
    """
    k = np.arange(1, inside.size + 1)
    in_cum = np.cumsum(inside)
    out_cum = np.concatenate([[0.0], np.cumsum(outside)])
    # an outside value lowers the slack iff alpha * v < k/n (convexity in l)
    l = np.searchsorted(alpha * outside, k / n, side="left")
    total = in_cum + out_cum[l]
    slack = alpha * total / (k + l) - k / n
    return slack, k, l


def mean_e_membership(e, R, alpha) -> MembershipResult:
    """Membership for the mean-e suite in ``O(m log m)``."""
    suite = e if isinstance(e, MeanESuite) else mean_e_suite(e)
    _check_alpha(suite, alpha)
    v = suite.values
    idx = as_index_set(R, suite.m)
    n = idx.size
    if n == 0:
        return MEMBER
    inside_mask = np.zeros(suite.m, dtype=bool)
    inside_mask[idx] = True
    in_pos = idx[np.argsort(v[idx], kind="stable")]
    out_idx = np.flatnonzero(~inside_mask)
    out_pos = out_idx[np.argsort(v[out_idx], kind="stable")]
    slack, k, l = _min_slack(v[in_pos], v[out_pos], n, alpha)
    bad = np.flatnonzero(slack < -TOL)
    if bad.size == 0:
        return MEMBER
    j = bad[0]
    S = np.sort(np.concatenate([in_pos[: k[j]], out_pos[: l[j]]]))
    e_S = float(v[S].mean())
    return MembershipResult(False, Witness(tuple(int(s) for s in S), e_S, float(k[j] / n)))


def _mean_e_prefix_member(d, r, alpha):
    # d sorted descending; R = top r, inside ascending = d[r-1::-1]
    inside = d[:r][::-1]
    outside = d[r:][::-1]
    slack, _, _ = _min_slack(inside, outside, r, alpha)
    return bool(np.all(slack >= -TOL))


# -- monotone shortcut ------------------------------------------------------


def monotone_membership(suite: Suite, R, alpha) -> MembershipResult:
    """Membership for suites weakly decreasing in each p-value.

    Checks the ``O(m^2)`` sets made of the ``a`` largest p-values in ``R``
    and the ``b`` largest outside, batching over ``b``.
    """
    if not suite.monotone_in_p:
        raise StrategyError("monotone shortcut needs a suite decreasing in p")
    _check_alpha(suite, alpha)
    p = suite.evidence.values
    m = suite.m
    idx = as_index_set(R, m)
    n = idx.size
    if n == 0:
        return MEMBER
    inside_mask = np.zeros(m, dtype=bool)
    inside_mask[idx] = True
    # largest p first; ties broken by position for reproducibility
    in_pos = idx[np.argsort(-p[idx], kind="stable")]
    out_idx = np.flatnonzero(~inside_mask)
    out_pos = out_idx[np.argsort(-p[out_idx], kind="stable")]
    nb = out_pos.size + 1
    out_masks = np.zeros((nb, m), dtype=bool)
    for b in range(1, nb):
        out_masks[b] = out_masks[b - 1]
        out_masks[b, out_pos[b - 1]] = True
    masks = out_masks.copy()
    for a in range(1, n + 1):
        masks[:, in_pos[a - 1]] = True
        vals = suite.evaluate_many(masks)
        frac = a / n
        bad = np.flatnonzero(alpha * vals - frac < -TOL)
        if bad.size:
            b = bad[0]
            S = np.flatnonzero(masks[b])
            return MembershipResult(False, Witness(tuple(int(s) for s in S), float(vals[b]), float(frac)))
    return MEMBER


# -- derived queries --------------------------------------------------------


def _evidence_ids(suite):
    ev = getattr(suite, "evidence", None)
    if ev is None and hasattr(suite, "base"):
        ev = getattr(suite.base, "evidence", None)
    return ev


def _prefix_rejection(suite, r):
    ev = _evidence_ids(suite)
    top = suite.order[:r]
    ids = tuple(ev.ids[i] for i in top) if ev is not None else tuple(int(i) + 1 for i in top)
    return PrefixRejection(int(r), tuple(int(i) for i in top), ids)


def largest_prefix(suite, alpha, strategy="auto") -> PrefixRejection:
    """Largest ``r`` such that the ``r`` top-ranked hypotheses form a member.

    ``suite`` may also be a plain e-value vector, meaning the mean-e suite.
    Candidates are tried from ``r = m`` downwards.
    """
    if not isinstance(suite, Suite):
        suite = mean_e_suite(suite)
    _check_alpha(suite, alpha)
    how = _resolve(suite, strategy)
    if how == "mean_e_fast":
        d = suite.evidence.sorted
        for r in range(suite.m, 0, -1):
            if _mean_e_prefix_member(d, r, alpha):
                return _prefix_rejection(suite, r)
        return _prefix_rejection(suite, 0)
    for r in range(suite.m, 0, -1):
        if check_membership(suite, suite.prefix(r), alpha, how).member:
            return _prefix_rejection(suite, r)
    return _prefix_rejection(suite, 0)


def singleton_rejections(suite: Suite, alpha, strategy="auto"):
    """Positions ``i`` with ``{i}`` in the collection (an FWER-controlling set)."""
    if not isinstance(suite, Suite):
        suite = mean_e_suite(suite)
    _check_alpha(suite, alpha)
    how = _resolve(suite, strategy)
    if how == "mean_e_fast":
        v = suite.values
        # worst S containing i adds every other e-value below 1/alpha
        low = alpha * v < 1.0
        cnt = low.sum() - low
        tot = np.where(low, v, 0.0).sum() - np.where(low, v, 0.0)
        slack = alpha * (v + tot) / (1 + cnt) - 1.0
        return tuple(int(i) for i in np.flatnonzero(slack >= -TOL))
    return tuple(
        i for i in range(suite.m) if check_membership(suite, [i], alpha, how).member
    )


def _mean_e_critical_alpha(v, idx):
    n = idx.size
    inside_mask = np.zeros(v.size, dtype=bool)
    inside_mask[idx] = True
    inside = np.sort(v[idx])
    outside = np.sort(v[~inside_mask])
    k = np.arange(1, n + 1)
    in_cum = np.cumsum(inside)
    out_cum = np.concatenate([[0.0], np.cumsum(outside)])
    L = outside.size

    def lowers(l):
        # does adding outside[l] decrease the mean of (k smallest in, l smallest out)?
        ok = l < L
        nxt = outside[np.minimum(l, max(L - 1, 0))] if L else np.zeros_like(l, dtype=float)
        return ok & (nxt * (k + l) < in_cum + out_cum[l])

    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, L, dtype=np.int64)
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        t = lowers(mid)
        active = lo < hi
        lo = np.where(active & t, mid + 1, lo)
        hi = np.where(active & ~t, mid, hi)
    total = in_cum + out_cum[lo]
    with np.errstate(divide="ignore"):
        ratio = np.where(total > 0, (k / n) * (k + lo) / np.where(total > 0, total, 1.0), np.inf)
    return float(ratio.max())


def critical_alpha(suite: Suite, R, strategy="auto"):
    """Smallest level at which ``R`` is a member: ``max_S (|R&S|/|R|) / e_S``.

    Only meaningful as a post hoc level when the suite does not depend on
    alpha. Returns ``inf`` when some ``S`` meeting ``R`` has ``e_S = 0``.
    """
    if not isinstance(suite, Suite):
        suite = mean_e_suite(suite)
    if not suite.alpha_free:
        raise StrategyError("critical alpha needs a suite that does not depend on alpha")
    idx = as_index_set(R, suite.m)
    if idx.size == 0:
        raise ValueError("critical alpha is undefined for the empty set")
    if strategy not in STRATEGIES or strategy == "monotone":
        raise StrategyError(f"strategy {strategy!r} not available for critical alpha")
    if strategy in ("auto", "mean_e_fast") and isinstance(suite, MeanESuite):
        return _mean_e_critical_alpha(suite.values, idx)
    if strategy == "mean_e_fast":
        raise StrategyError("mean_e_fast needs a mean-e suite")
    from .oracle import brute_critical_alpha

    return brute_critical_alpha(suite, idx)
