"""Evidence vectors and compound e-value suites.

A suite maps a non-empty index set ``S`` (positions into the evidence
vector, 0-based) to the compound e-value ``e_S``. Suites are evaluators, not
tables; ``evaluate_many`` takes a boolean mask matrix with one row per set
and is what the brute-force routines use.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

from .calib import GRID_SNAP, _snap_ceil, harmonic_table, su_multiplier

__all__ = [
    "EValueVector",
    "PValueVector",
    "Suite",
    "MeanESuite",
    "BYSuite",
    "SuSuite",
    "FeasibleSuite",
    "FunctionSuite",
    "FeasibilityPredicate",
    "as_evalues",
    "as_pvalues",
    "as_index_set",
    "mean_e_suite",
    "by_suite",
    "su_suite",
    "with_feasibility",
    "clique_feasibility",
    "pairwise_labels",
]


def _sort_perm(values, ids, descending):
    # stable lexsort: primary key value, ties by ascending external id
    try:
        id_rank = np.argsort(np.asarray(ids), kind="stable")
        tie = np.empty(len(ids), dtype=np.int64)
        tie[id_rank] = np.arange(len(ids))
    except TypeError:
        tie = np.arange(len(ids))
    key = -values if descending else values
    return np.lexsort((tie, key))


@dataclass(frozen=True)
class EValueVector:
    """Per-hypothesis e-values with their descending sort permutation.

    ``perm[0]`` is the position of the largest e-value; ties are broken by
    ascending external id.
    """

    values: np.ndarray
    ids: tuple
    perm: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, values, ids=None):
        v = np.array(values, dtype=float).ravel()
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("e-values must be finite and non-negative")
        ids = tuple(range(1, v.size + 1)) if ids is None else tuple(ids)
        if len(ids) != v.size:
            raise ValueError("ids and values differ in length")
        if len(set(ids)) != len(ids):
            raise ValueError("external ids must be distinct")
        v.setflags(write=False)
        perm = _sort_perm(v, ids, descending=True)
        perm.setflags(write=False)
        return cls(v, ids, perm)

    @property
    def m(self):
        return self.values.size

    @property
    def sorted(self):
        return self.values[self.perm]


@dataclass(frozen=True)
class PValueVector:
    """Per-hypothesis p-values with their ascending sort permutation."""

    values: np.ndarray
    ids: tuple
    perm: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, values, ids=None):
        v = np.array(values, dtype=float).ravel()
        if np.any(np.isnan(v)) or np.any((v < 0) | (v > 1)):
            raise ValueError("p-values must lie in [0, 1]")
        ids = tuple(range(1, v.size + 1)) if ids is None else tuple(ids)
        if len(ids) != v.size:
            raise ValueError("ids and values differ in length")
        if len(set(ids)) != len(ids):
            raise ValueError("external ids must be distinct")
        v.setflags(write=False)
        perm = _sort_perm(v, ids, descending=False)
        perm.setflags(write=False)
        return cls(v, ids, perm)

    @property
    def m(self):
        return self.values.size

    @property
    def sorted(self):
        return self.values[self.perm]


def as_evalues(e):
    return e if isinstance(e, EValueVector) else EValueVector.from_values(e)


def as_pvalues(p):
    return p if isinstance(p, PValueVector) else PValueVector.from_values(p)


def as_index_set(R, m):
    """Normalise an iterable of 0-based positions into a sorted int array."""
    idx = np.unique(np.asarray(list(R), dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= m):
        raise ValueError(f"index set {idx.tolist()} out of range for m={m}")
    return idx


class Suite:
    """Base class for compound e-value suites.

    Subclasses implement ``_evaluate(idx)`` for a sorted int array and may
    override ``evaluate_many`` with a vectorised version.
    """

    alpha_free = False
    monotone_in_p = False

    def __init__(self, m, alpha=None, order=None):
        self.m = int(m)
        self.alpha = None if alpha is None else float(alpha)
        # rank -> position; used for prefix sets [r]
        self.order = np.arange(self.m) if order is None else np.asarray(order)

    def evaluate(self, S):
        idx = as_index_set(S, self.m)
        if idx.size == 0:
            raise ValueError("e_S is only defined for non-empty S")
        return float(self._evaluate(idx))

    def _evaluate(self, idx):
        raise NotImplementedError

    def evaluate_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        return np.array([self._evaluate(np.flatnonzero(row)) for row in masks])

    def prefix(self, r):
        """Positions of the ``r`` top-ranked hypotheses."""
        return np.sort(self.order[:r])

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m}, alpha={self.alpha})"


class MeanESuite(Suite):
    """``e_S`` is the plain average of the e-values in ``S``."""

    alpha_free = True

    def __init__(self, e: EValueVector):
        super().__init__(e.m, None, e.perm)
        self.evidence = e
        self.values = e.values

    def _evaluate(self, idx):
        return self.values[idx].sum() / idx.size

    def evaluate_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        return masks @ self.values / masks.sum(axis=1)


class BYSuite(Suite):
    """Average of grid-harmonic calibrated p-values with ``k = |S|``."""

    monotone_in_p = True

    def __init__(self, p: PValueVector, alpha):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        super().__init__(p.m, alpha, p.perm)
        self.evidence = p
        self.values = p.values
        self._h = harmonic_table(max(p.m, 1))

    def _terms(self, p, k):
        a = self.alpha
        h = self._h[k - 1]
        hit = h * p <= a * (1.0 + GRID_SNAP)
        c = np.maximum(_snap_ceil(k * h * p / a), 1.0)
        return np.where(hit, 1.0 / (a * c), 0.0)

    def _evaluate(self, idx):
        return self._terms(self.values[idx], idx.size).sum()

    def evaluate_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        k = masks.sum(axis=1)
        terms = self._terms(self.values[None, :], k[:, None])
        return np.where(masks, terms, 0.0).sum(axis=1)


class SuSuite(Suite):
    """Simes p-value of ``S`` passed through ``min(l_alpha/p, 1/alpha)``."""

    monotone_in_p = True

    def __init__(self, p: PValueVector, alpha):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        super().__init__(p.m, alpha, p.perm)
        self.evidence = p
        self.values = p.values
        self.l_alpha = su_multiplier(alpha).l_alpha

    def _calibrate(self, ps):
        with np.errstate(divide="ignore", over="ignore"):
            return np.minimum(self.l_alpha / ps, 1.0 / self.alpha)

    def _evaluate(self, idx):
        p = np.sort(self.values[idx])
        ps = np.min(p.size * p / np.arange(1, p.size + 1))
        return self._calibrate(min(ps, 1.0))

    def evaluate_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        order = self.evidence.perm
        mk = masks[:, order]
        ps = self.values[order]
        k = mk.sum(axis=1, keepdims=True)
        rank = np.cumsum(mk, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(mk, k * ps[None, :] / np.maximum(rank, 1), np.inf)
        return self._calibrate(np.minimum(ratio.min(axis=1), 1.0))


class FunctionSuite(Suite):
    """Suite backed by an arbitrary callable on sorted index arrays."""

    def __init__(self, func, m, alpha=None, alpha_free=False, order=None):
        super().__init__(m, alpha, order)
        self._func = func
        self.alpha_free = alpha_free

    def _evaluate(self, idx):
        return self._func(idx)


@dataclass(frozen=True)
class FeasibilityPredicate:
    """Which partitioning hypotheses ``H_S`` can be non-empty."""

    m: int
    is_feasible: Callable[[Sequence[int]], bool]

    def __call__(self, S):
        return bool(self.is_feasible(as_index_set(S, self.m)))


class FeasibleSuite(Suite):
    """Suite that returns ``+inf`` on logically impossible ``S``."""

    monotone_in_p = False

    def __init__(self, base: Suite, feasibility: FeasibilityPredicate):
        if feasibility.m != base.m:
            raise ValueError("suite and feasibility predicate disagree on m")
        super().__init__(base.m, base.alpha, base.order)
        self.base = base
        self.feasibility = feasibility
        self.alpha_free = base.alpha_free

    def _evaluate(self, idx):
        if not self.feasibility.is_feasible(idx):
            return np.inf
        return self.base._evaluate(idx)

    def evaluate_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        out = self.base.evaluate_many(masks)
        ok = np.array([self.feasibility.is_feasible(np.flatnonzero(r)) for r in masks])
        return np.where(ok, out, np.inf)


def mean_e_suite(e):
    return MeanESuite(as_evalues(e))


def by_suite(p, alpha):
    return BYSuite(as_pvalues(p), alpha)


def su_suite(p, alpha):
    return SuSuite(as_pvalues(p), alpha)


def with_feasibility(suite, feasibility):
    return FeasibleSuite(suite, feasibility)


def pairwise_labels(num_params):
    """Parameter pairs ``(i, j)`` (1-based, i < j) in lexicographic order."""
    return list(combinations(range(1, num_params + 1), 2))


def clique_feasibility(num_params) -> FeasibilityPredicate:
    """Feasibility for all pairwise equality hypotheses among parameters.

    Hypothesis ``t`` states ``theta_i == theta_j`` for the ``t``-th pair in
    lexicographic order. A set ``S`` of true equalities is possible only if
    it is transitively closed, i.e. its graph is a disjoint union of cliques.
    """
    if num_params < 2:
        raise ValueError("need at least two parameters")
    pairs = pairwise_labels(num_params)
    m = len(pairs)
    lookup = {pr: t for t, pr in enumerate(pairs)}

    def is_feasible(S):
        S = [int(t) for t in S]
        if any(t < 0 or t >= m for t in S):
            raise ValueError(f"pair index out of range for m={m}")
        parent = list(range(num_params + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t in S:
            i, j = pairs[t]
            parent[find(i)] = find(j)
        present = set(S)
        for (i, j), t in lookup.items():
            if find(i) == find(j) and t not in present:
                return False
        return True

    return FeasibilityPredicate(m, is_feasible)
