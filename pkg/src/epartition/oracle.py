"""Exponential-time reference implementations.

These routines enumerate every non-empty ``S`` (as bitmasks in increasing
order) and apply the membership inequality literally. They are the ground
truth the fast paths in :mod:`epartition.engine` are checked against, and
also power the small-``m`` Monte Carlo FDR estimates.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .engine import TOL, CapacityError, MembershipResult, Witness
from .suites import FunctionSuite, Suite, as_index_set

__all__ = [
    "MAX_BRUTE_M",
    "MAX_ENUM_M",
    "TruthAssignment",
    "RejectionCollectionTable",
    "all_masks",
    "brute_membership",
    "brute_critical_alpha",
    "brute_membership_many",
    "brute_critical_alpha_many",
    "brute_collection",
    "induced_suite",
    "fdp",
    "simultaneous_fdp",
    "mc_fdr",
    "random_evalues",
    "random_pvalues",
]

MAX_BRUTE_M = 20
MAX_ENUM_M = 15


@dataclass(frozen=True)
class TruthAssignment:
    """Positions of the true null hypotheses."""

    nulls: frozenset

    @classmethod
    def of(cls, nulls):
        return cls(frozenset(int(i) for i in nulls))


@dataclass(frozen=True)
class RejectionCollectionTable:
    """Every member of the rejection collection, in bitmask order."""

    m: int
    alpha: float
    members: tuple

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, R):
        return tuple(sorted(int(i) for i in R)) in set(self.members)


@lru_cache(maxsize=8)
def all_masks(m):
    """Boolean matrix whose row ``j`` is the bitmask ``j + 1`` (bit i = position i)."""
    if m > MAX_BRUTE_M:
        raise CapacityError(f"brute force is capped at m={MAX_BRUTE_M}, got {m}")
    codes = np.arange(1, 2 ** m, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    masks.setflags(write=False)
    return masks


def _as_set(idx):
    return tuple(int(i) for i in np.flatnonzero(idx))


def brute_membership(suite: Suite, R, alpha) -> MembershipResult:
    """Check every non-empty ``S``; report the first violation in mask order."""
    m = suite.m
    if m > MAX_BRUTE_M:
        raise CapacityError(f"brute force is capped at m={MAX_BRUTE_M}, got {m}")
    idx = as_index_set(R, m)
    if idx.size == 0:
        return MembershipResult(True)
    masks = all_masks(m)
    e = suite.evaluate_many(masks)
    frac = masks[:, idx].sum(axis=1) / idx.size
    bad = np.flatnonzero(alpha * e - frac < -TOL)
    if bad.size == 0:
        return MembershipResult(True)
    j = bad[0]
    return MembershipResult(False, Witness(_as_set(masks[j]), float(e[j]), float(frac[j])))


def brute_critical_alpha(suite: Suite, R):
    m = suite.m
    if m > MAX_BRUTE_M:
        raise CapacityError(f"brute force is capped at m={MAX_BRUTE_M}, got {m}")
    idx = as_index_set(R, m)
    masks = all_masks(m)
    e = suite.evaluate_many(masks)
    frac = masks[:, idx].sum(axis=1) / idx.size
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(frac > 0, frac / e, 0.0)
    ratio = np.where((frac > 0) & (e == 0), np.inf, ratio)
    return float(ratio.max())


def _set_matrix(sets, m):
    cmat = np.zeros((len(sets), m), dtype=bool)
    for j, R in enumerate(sets):
        cmat[j, as_index_set(R, m)] = True
    return cmat


def _fractions(m, sets):
    masks = all_masks(m)
    cmat = _set_matrix(sets, m)
    inter = masks.astype(np.int32) @ cmat.T.astype(np.int32)
    return masks, inter / np.maximum(cmat.sum(axis=1), 1)[None, :], cmat.sum(axis=1)


def brute_membership_many(suite: Suite, sets, alpha):
    """Boolean membership of each set in ``sets``, evaluating the suite once."""
    if suite.m > MAX_BRUTE_M:
        raise CapacityError(f"brute force is capped at m={MAX_BRUTE_M}, got {suite.m}")
    masks, frac, _ = _fractions(suite.m, sets)
    e = suite.evaluate_many(masks)
    return np.all(alpha * e[:, None] - frac >= -TOL, axis=0)


def brute_critical_alpha_many(suite: Suite, sets):
    """:func:`brute_critical_alpha` for each (non-empty) set in ``sets``."""
    if suite.m > MAX_BRUTE_M:
        raise CapacityError(f"brute force is capped at m={MAX_BRUTE_M}, got {suite.m}")
    masks, frac, size = _fractions(suite.m, sets)
    if np.any(size == 0):
        raise ValueError("critical alpha is undefined for the empty set")
    e = suite.evaluate_many(masks)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(frac > 0, frac / e, 0.0)
    ratio = np.where((frac > 0) & (e == 0), np.inf, ratio)
    return ratio.max(axis=0)


def brute_collection(suite: Suite, alpha, chunk=512) -> RejectionCollectionTable:
    """All members ``R`` (including the empty set), in increasing bitmask order."""
    m = suite.m
    if m > MAX_ENUM_M:
        raise CapacityError(f"enumeration is capped at m={MAX_ENUM_M}, got {m}")
    masks = all_masks(m)
    lhs = alpha * suite.evaluate_many(masks)
    mi = masks.astype(np.int32)
    members = [()]
    for start in range(1, 2 ** m, chunk):
        rows = masks[start - 1 : min(start - 1 + chunk, 2 ** m - 1)]
        inter = mi @ rows.T.astype(np.int32)
        size = rows.sum(axis=1)
        ok = np.all(lhs[:, None] - inter / size[None, :] >= -TOL, axis=0)
        members.extend(_as_set(r) for r in rows[ok])
    return RejectionCollectionTable(m, float(alpha), tuple(members))


def induced_suite(table, alpha) -> Suite:
    """Suite ``e_S = max_R |R&S| / (alpha max(|R|, 1))`` implied by a collection."""
    members = list(table)
    if not members:
        raise ValueError("collection must be non-empty")
    m = table.m
    rmat = np.zeros((len(members), m), dtype=bool)
    for j, R in enumerate(members):
        rmat[j, list(R)] = True
    sizes = np.maximum(rmat.sum(axis=1), 1)

    def func(idx):
        return float(np.max(rmat[:, idx].sum(axis=1) / sizes) / alpha)

    suite = FunctionSuite(func, m, alpha=alpha)

    def many(masks):
        inter = np.asarray(masks, dtype=np.int32) @ rmat.T.astype(np.int32)
        return (inter / sizes[None, :]).max(axis=1) / alpha

    suite.evaluate_many = many
    return suite


def fdp(R, nulls):
    R = set(int(i) for i in R)
    if not R:
        return 0.0
    return len(R & set(nulls)) / len(R)


def simultaneous_fdp(collection, truth):
    """Largest false discovery proportion over the sets in ``collection``."""
    nulls = truth.nulls if isinstance(truth, TruthAssignment) else frozenset(truth)
    sets = list(collection)
    if not sets:
        raise ValueError("collection must be non-empty")
    return max(fdp(R, nulls) for R in sets)


def mc_fdr(generator, procedure, reps, seed):
    """Monte Carlo estimate of (simultaneous) FDR.

    ``generator(rng)`` returns ``(data, truth)``; ``procedure(data)`` returns
    either a single rejection set or a collection of them (a list of sets).
    Replication ``i`` draws from ``numpy.random.default_rng([seed, i])``.
    Returns ``(mean FDP, standard error)``.
    """
    if reps < 100:
        raise ValueError("use at least 100 replications")
    vals = np.empty(reps)
    for i in range(reps):
        rng = np.random.default_rng([seed, i])
        data, truth = generator(rng)
        out = procedure(data)
        sets = list(out)
        if sets and not isinstance(sets[0], (tuple, list, set, frozenset, np.ndarray)):
            sets = [sets]
        vals[i] = simultaneous_fdp(sets or [()], truth)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(reps))


def random_evalues(rng, m):
    """Fuzz e-values: a mix of exact zeros, uniform and heavy-tailed draws."""
    kind = rng.integers(3, size=m)
    scale = 1.0 / rng.choice([0.01, 0.05, 0.1, 0.2])
    e = np.where(
        kind == 0,
        0.0,
        np.where(kind == 1, rng.uniform(0, 2 * scale, m), scale * rng.pareto(1.5, m)),
    )
    if rng.random() < 0.2:
        # coarse grid values make ties and exact boundaries likely
        e = np.round(e / scale * 4) * scale / 4
    return e


def random_pvalues(rng, m):
    """Fuzz p-values: uniform nulls mixed with Beta(0.1..0.5, 1) signals."""
    signal = rng.random(m) < rng.uniform(0, 1)
    p = np.where(signal, rng.beta(rng.uniform(0.1, 0.5), 1.0, m), rng.uniform(0, 1, m))
    if rng.random() < 0.1:
        p[rng.integers(m)] = 1.0
    return p
