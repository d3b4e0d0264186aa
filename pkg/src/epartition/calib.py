"""Special functions and p-to-e calibrators."""

import math
import threading
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SuMultiplier",
    "harmonic",
    "harmonic_table",
    "lambert_w_minus1",
    "su_multiplier",
    "grid_harmonic_calibrate",
    "su_calibrate",
    "simes",
]

# Relative slack used when snapping k*h_k*p/alpha onto an integer grid point.
GRID_SNAP = 1e-12

_harmonic_cache = np.array([1.0])
_harmonic_lock = threading.Lock()


def harmonic_table(k):
    """Return ``[h_1, ..., h_k]`` as a float array.

    Entries are accumulated by forward summation in ascending index order
    and cached, so repeated calls return bit-identical values.
    """
    global _harmonic_cache
    if k < 1:
        raise ValueError(f"harmonic numbers need k >= 1, got {k}")
    cache = _harmonic_cache
    if k > cache.size:
        with _harmonic_lock:
            cache = _harmonic_cache
            if k > cache.size:
                # extend from the last stored entry; keeps old entries untouched
                n0 = cache.size
                tail = np.empty(max(k, 2 * n0) - n0)
                acc = cache[-1]
                for j in range(tail.size):
                    acc += 1.0 / (n0 + j + 1)
                    tail[j] = acc
                cache = np.concatenate([cache, tail])
                cache.setflags(write=False)
                _harmonic_cache = cache
    return cache[:k]


def harmonic(k):
    """The k-th harmonic number ``1 + 1/2 + ... + 1/k``."""
    k = int(k)
    if k < 1:
        raise ValueError(f"harmonic numbers need k >= 1, got {k}")
    return float(harmonic_table(k)[k - 1])


def _w_minus1_bracket(x):
    # Chatzigeorgiou (2013) bounds on the -1 branch, u = -1 - ln(-x)
    u = -1.0 - math.log(-x)
    s = math.sqrt(2.0 * u)
    return -1.0 - s - u, -1.0 - s - 2.0 * u / 3.0


def _w_minus1_guess(x):
    if x < -0.25:
        # branch-point series in p = -sqrt(2(1 + e x))
        p = -math.sqrt(max(2.0 * (1.0 + math.e * x), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    l1 = math.log(-x)
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def lambert_w_minus1(x, tol=1e-15, maxiter=100):
    """Lower real branch ``W_{-1}`` of the Lambert W function.

    Solves ``w * exp(w) = x`` for ``w <= -1`` on ``-1/e <= x < 0``. A starting
    point from the branch-point or asymptotic series is refined by Halley
    steps, falling back to bisection whenever a step leaves the bracket.
    """
    x = float(x)
    branch = -math.exp(-1.0)
    if not (x < 0.0) or x < branch * (1.0 + 1e-15):
        raise ValueError(f"W_-1 is real only on [-1/e, 0), got {x!r}")
    if x <= branch:
        return -1.0

    lo, hi = _w_minus1_bracket(x)
    w = min(max(_w_minus1_guess(x), lo), hi)
    for _ in range(maxiter):
        ew = math.exp(w)
        f = w * ew - x
        # f is decreasing in w on (-inf, -1]
        if f > 0:
            lo = w
        else:
            hi = w
        if f == 0.0:
            return w
        wp1 = w + 1.0
        fp = ew * wp1
        step = f / (fp - (w + 2.0) * f / (2.0 * wp1)) if wp1 != 0.0 else 0.0
        w_new = w - step
        if not (lo < w_new < hi) or step == 0.0:
            w_new = 0.5 * (lo + hi)
        if abs(w_new - w) <= tol * abs(w):
            w = w_new
            break
        w = w_new
    return w


@dataclass(frozen=True)
class SuMultiplier:
    """Level multiplier for running BH under PRDN.

    ``l_alpha = -1 / W_{-1}(-alpha/e)``; with ``q = alpha * l_alpha`` one has
    ``alpha = q - q log q``.
    """

    alpha: float
    l_alpha: float
    w: float

    @property
    def level(self):
        return self.alpha * self.l_alpha


def su_multiplier(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    w = lambert_w_minus1(-alpha / math.e)
    return SuMultiplier(alpha=alpha, l_alpha=-1.0 / w, w=w)


def _snap_ceil(x):
    # ceil that treats values within GRID_SNAP (relative) of an integer as that integer
    x = np.asarray(x, dtype=float)
    r = np.rint(x)
    near = np.abs(x - r) <= GRID_SNAP * np.maximum(r, 1.0)
    return np.where(near, r, np.ceil(x))


def grid_harmonic_calibrate(p, k, alpha):
    """Grid-harmonic p-to-e calibrator.

    ``e(p) = k 1{h_k p <= alpha} / (alpha * ceil(k h_k p / alpha))``, with the
    ceiling floored at 1 so that ``p = 0`` maps to ``k / alpha``. Accepts
    scalar or array ``p``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    k = int(k)
    h = harmonic(k)
    parr = np.asarray(p, dtype=float)
    if np.any((parr < 0) | (parr > 1)) or np.any(np.isnan(parr)):
        raise ValueError("p-values must lie in [0, 1]")
    hit = h * parr <= alpha * (1.0 + GRID_SNAP)
    c = np.maximum(_snap_ceil(k * h * parr / alpha), 1.0)
    out = np.where(hit, k / (alpha * c), 0.0)
    return float(out) if out.ndim == 0 else out


def su_calibrate(p, alpha, l_alpha=None):
    """``min(l_alpha / p, 1 / alpha)``, with ``p = 0`` mapped to ``1 / alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if l_alpha is None:
        l_alpha = su_multiplier(alpha).l_alpha
    parr = np.asarray(p, dtype=float)
    if np.any((parr < 0) | (parr > 1)) or np.any(np.isnan(parr)):
        raise ValueError("p-values must lie in [0, 1]")
    with np.errstate(divide="ignore", over="ignore"):
        out = np.minimum(l_alpha / parr, 1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def simes(p_values):
    """Simes combination ``min_i |S| p_(i) / i``, clipped to [0, 1]."""
    p = np.sort(np.asarray(p_values, dtype=float).ravel())
    if p.size == 0:
        raise ValueError("simes needs at least one p-value")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    val = np.min(p.size * p / np.arange(1, p.size + 1))
    return float(min(max(val, 0.0), 1.0))
