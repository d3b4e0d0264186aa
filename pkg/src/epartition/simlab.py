"""Power and FDR simulations on correlated Gaussian z-statistics.

Each replication draws ``n_obs`` i.i.d. rows ``Z ~ N(mu, Sigma)`` in ``R^m``
with ``mu = (A, ..., A, 0, ..., 0)``; hypothesis ``j`` gets the likelihood
ratio e-value ``exp(a_j T_j - n_obs a_j^2 / 2)`` where ``T_j`` is the column
sum, and the one-sided p-value ``1 - Phi(T_j / sqrt(n_obs))``.
"""

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from . import stepup
from .engine import largest_prefix
from .suites import by_suite, mean_e_suite, su_suite

__all__ = [
    "COV_KINDS",
    "METHODS",
    "SimConfig",
    "SimResult",
    "make_covariance",
    "cholesky",
    "simulate_statistics",
    "simulate_replication",
    "replication_pvalues",
    "simulate_evidence",
    "apply_method",
    "figure_grid",
    "run_experiment",
]

COV_KINDS = ("ar1", "neg_equicorr", "identity")
METHODS = ("ebh", "ebh_plus", "by", "by_plus", "su", "su_plus")
CSV_COLUMNS = ("cov_kind", "A", "method", "power", "power_se", "fdr", "fdr_se", "reps", "seed")


def make_covariance(kind, m, rho=None):
    """Unit-diagonal covariance for the three dependence settings.

    ``ar1``: ``rho ** |i - j|`` (default 0.8); ``neg_equicorr``: constant
    off-diagonal ``rho`` (default ``-0.8 / (m - 1)``); ``identity``.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    if kind == "identity":
        return np.eye(m)
    if kind == "ar1":
        rho = 0.8 if rho is None else float(rho)
        if not -1.0 < rho < 1.0:
            raise ValueError(f"AR(1) needs |rho| < 1, got {rho}")
        i = np.arange(m)
        return rho ** np.abs(i[:, None] - i[None, :])
    if kind == "neg_equicorr":
        rho = -0.8 / (m - 1) if rho is None else float(rho)
        # eigenvalues 1 + (m-1) rho (once) and 1 - rho
        if 1.0 + (m - 1) * rho < 0 or 1.0 - rho < 0:
            raise ValueError(f"equicorrelation {rho} is not PSD for m={m}")
        sigma = np.full((m, m), rho)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    raise ValueError(f"unknown covariance kind {kind!r}")


def cholesky(sigma, tol=1e-12):
    """Lower Cholesky factor of a symmetric PSD matrix.

    Pivots down to ``-tol`` are clamped to zero so singular PSD matrices
    factor; anything more negative is reported as indefinite.
    """
    a = np.asarray(sigma, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        piv = a[j, j] - L[j, :j] @ L[j, :j]
        if piv < -tol:
            raise ValueError(f"matrix is not positive semidefinite (pivot {piv:.3g})")
        d = np.sqrt(max(piv, 0.0))
        L[j, j] = d
        if d > 0:
            L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / d
    return L


@dataclass(frozen=True)
class SimConfig:
    A: float = 0.5
    m: int = 8
    pi0: float = 0.25
    cov_kind: str = "ar1"
    rho: Optional[float] = None
    n_obs: int = 100
    a_coeffs: Optional[tuple] = None
    alpha: float = 0.05
    reps: int = 1000
    seed: int = 0
    _chol: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        n0 = self.pi0 * self.m
        if not 0.0 <= self.pi0 <= 1.0 or abs(n0 - round(n0)) > 1e-9:
            raise ValueError(f"pi0 * m must be a whole number of nulls, got {n0}")
        if self.cov_kind not in COV_KINDS:
            raise ValueError(f"unknown covariance kind {self.cov_kind!r}")
        if self.n_obs < 1 or self.reps < 1:
            raise ValueError("n_obs and reps must be positive")
        if self.a_coeffs is not None and len(self.a_coeffs) != self.m:
            raise ValueError("need one coefficient per hypothesis")
        object.__setattr__(self, "_chol", cholesky(self.covariance))

    @property
    def n_nulls(self):
        return int(round(self.pi0 * self.m))

    @property
    def nulls(self):
        # non-nulls come first, nulls fill the tail
        return frozenset(range(self.m - self.n_nulls, self.m))

    @property
    def means(self):
        mu = np.zeros(self.m)
        mu[: self.m - self.n_nulls] = self.A
        return mu

    @property
    def covariance(self):
        return make_covariance(self.cov_kind, self.m, self.rho)

    @property
    def coeffs(self):
        if self.a_coeffs is None:
            return np.full(self.m, float(self.A))
        return np.asarray(self.a_coeffs, dtype=float)


def _rng(config, rep_index):
    return np.random.default_rng([config.seed, rep_index])


def simulate_statistics(config, rep_index):
    """Column sums ``T`` of ``n_obs`` Gaussian rows, and the true nulls."""
    rng = _rng(config, rep_index)
    z = rng.standard_normal((config.n_obs, config.m))
    rows = config.means + z @ config._chol.T
    return rows.sum(axis=0), config.nulls


def simulate_replication(config, rep_index):
    """Likelihood-ratio e-values for one replication, and the true nulls."""
    T, nulls = simulate_statistics(config, rep_index)
    a = config.coeffs
    return np.exp(a * T - config.n_obs * a ** 2 / 2.0), nulls


def replication_pvalues(config, rep_index):
    """One-sided z-test p-values for the same draw as :func:`simulate_replication`."""
    T, nulls = simulate_statistics(config, rep_index)
    return norm.sf(T / np.sqrt(config.n_obs)), nulls


def _evidence(config, T):
    a = config.coeffs
    e = np.exp(a * T - config.n_obs * a ** 2 / 2.0)
    p = norm.sf(T / np.sqrt(config.n_obs))
    return e, p


def simulate_evidence(config, rep_index):
    """E-values, p-values and true nulls from a single draw."""
    T, nulls = simulate_statistics(config, rep_index)
    e, p = _evidence(config, T)
    return e, p, nulls


def apply_method(method, e, p, alpha):
    """Rejected positions (the method's largest prefix set)."""
    if method == "ebh":
        return stepup.ebh(e, alpha).indices
    if method == "ebh_plus":
        return largest_prefix(mean_e_suite(e), alpha).indices
    if method == "by":
        return stepup.by(p, alpha).indices
    if method == "by_plus":
        return largest_prefix(by_suite(p, alpha), alpha).indices
    if method == "su":
        return stepup.su(p, alpha).indices
    if method == "su_plus":
        return largest_prefix(su_suite(p, alpha), alpha).indices
    raise ValueError(f"unknown method {method!r}")


def _threads():
    try:
        return max(1, int(os.environ.get("FDRP_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SimResult:
    """One record per (cell, method)."""

    records: list

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in self.records:
            w.writerow([rec[c] if isinstance(rec[c], str) else repr(rec[c]) for c in CSV_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def lookup(self, cov_kind, A, method):
        for rec in self.records:
            if rec["cov_kind"] == cov_kind and rec["A"] == A and rec["method"] == method:
                return rec
        raise KeyError((cov_kind, A, method))


def figure_grid(A_values=(0.125, 0.25, 0.375, 0.5), cov_kinds=("ar1", "neg_equicorr"), **kwargs):
    """Configurations for the two-panel power figure."""
    return [SimConfig(A=A, cov_kind=kind, **kwargs) for kind in cov_kinds for A in A_values]


def run_cell(config, methods=("ebh", "ebh_plus")):
    """Per-replication (power, fdp) arrays for each method on one cell."""
    nonnull = np.ones(config.m, dtype=bool)
    nonnull[list(config.nulls)] = False
    n1 = nonnull.sum()

    def one(rep):
        T, _ = simulate_statistics(config, rep)
        e, p = _evidence(config, T)
        out = []
        for meth in methods:
            R = list(apply_method(meth, e, p, config.alpha))
            true_hits = nonnull[R].sum() if R else 0
            power = true_hits / n1 if n1 else 0.0
            fdp = (len(R) - true_hits) / len(R) if R else 0.0
            out.append((power, fdp))
        return out

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, range(config.reps)))
    else:
        rows = [one(r) for r in range(config.reps)]
    arr = np.array(rows, dtype=float).reshape(config.reps, len(methods), 2)
    return {meth: (arr[:, i, 0], arr[:, i, 1]) for i, meth in enumerate(methods)}


def _se(x):
    return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def run_experiment(configs, methods=("ebh", "ebh_plus")):
    """Estimate power and FDR for every configuration and method.

    All methods in a cell see the same replications, so comparisons between
    methods are paired.
    """
    for meth in methods:
        if meth not in METHODS:
            raise ValueError(f"unknown method {meth!r}")
    records = []
    for cfg in configs:
        cell = run_cell(cfg, methods)
        for meth in methods:
            power, fdp = cell[meth]
            records.append(
                dict(
                    cov_kind=cfg.cov_kind,
                    A=float(cfg.A),
                    method=meth,
                    power=float(power.mean()),
                    power_se=_se(power),
                    fdr=float(fdp.mean()),
                    fdr_se=_se(fdp),
                    reps=int(cfg.reps),
                    seed=int(cfg.seed),
                )
            )
    return SimResult(records)
