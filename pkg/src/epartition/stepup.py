"""Classical step-up procedures: eBH, BY and Su."""

from dataclasses import dataclass

import numpy as np

from .calib import harmonic, su_multiplier
from .suites import as_evalues, as_pvalues

__all__ = ["PrefixRejection", "ebh", "by", "su", "bh"]

# Relative slack so that thresholds hit exactly by construction still qualify.
STEP_TOL = 1e-12


@dataclass(frozen=True)
class PrefixRejection:
    """The ``r`` top-ranked hypotheses.

    ``indices`` are 0-based positions in input order (ranked order), and
    ``rejected_ids`` the matching external ids.
    """

    r: int
    indices: tuple
    rejected_ids: tuple

    @classmethod
    def from_vector(cls, vec, r):
        top = vec.perm[:r]
        return cls(int(r), tuple(int(i) for i in top), tuple(vec.ids[i] for i in top))

    def __len__(self):
        return self.r


def _largest_qualifying(ok):
    hits = np.flatnonzero(ok)
    return int(hits[-1]) + 1 if hits.size else 0


def ebh(e, alpha):
    """e-BH: largest ``r`` with ``r * e_(r) >= m / alpha`` (descending e)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    vec = as_evalues(e)
    m = vec.m
    ranks = np.arange(1, m + 1)
    ok = alpha * ranks * vec.sorted >= m * (1.0 - STEP_TOL)
    return PrefixRejection.from_vector(vec, _largest_qualifying(ok))


def bh(p, level):
    """Benjamini-Hochberg step-up at an arbitrary level."""
    vec = as_pvalues(p)
    m = vec.m
    ranks = np.arange(1, m + 1)
    ok = m * vec.sorted <= ranks * level * (1.0 + STEP_TOL)
    return PrefixRejection.from_vector(vec, _largest_qualifying(ok))


def by(p, alpha):
    """Benjamini-Yekutieli: largest ``r`` with ``m h_m p_(r) <= r alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    vec = as_pvalues(p)
    m = vec.m
    ranks = np.arange(1, m + 1)
    ok = m * harmonic(m) * vec.sorted <= ranks * alpha * (1.0 + STEP_TOL)
    return PrefixRejection.from_vector(vec, _largest_qualifying(ok))


def su(p, alpha):
    """BH at level ``alpha * l_alpha``, valid when null p-values are PRDN."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    vec = as_pvalues(p)
    m = vec.m
    level = su_multiplier(alpha).level
    ranks = np.arange(1, m + 1)
    ok = m * vec.sorted <= ranks * level * (1.0 + STEP_TOL)
    return PrefixRejection.from_vector(vec, _largest_qualifying(ok))
