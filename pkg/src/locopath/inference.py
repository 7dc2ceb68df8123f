"""Residual-bootstrap tests based on path distances, and permutation intervals."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cv import CV_RULES, AdaptiveFit, adaptive_lasso, least_squares_fit
from .metric import NormSpec, loco_statistics, null_statistic, path_distance
from .path import Dataset, Hypothesis, lasso_path

INITIAL_FITS = ("adaptive", "ols")


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 500
    alpha: float = 0.05
    seed: int | np.random.SeedSequence | None = 0
    folds: int = 10
    center_residuals: bool = True
    initial: str = "adaptive"
    # one-standard-error CV keeps the initial fit from absorbing noise, which
    # would shrink the residuals and inflate the size of the test
    cv_rule: str = "1se"
    keep_replicates: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"B must be at least 1, got {self.B}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.initial not in INITIAL_FITS:
            raise ValueError(f"initial must be one of {INITIAL_FITS}, got {self.initial!r}")
        if self.cv_rule not in CV_RULES:
            raise ValueError(f"cv_rule must be one of {CV_RULES}, got {self.cv_rule!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")


@dataclass(frozen=True, eq=False)
class TestOutcome:
    statistic: float
    pvalue: float
    critical: float
    reject: bool
    replicates: np.ndarray | None = None

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class PermutationInterval:
    j: int
    level: float
    M: int
    lo: float
    hi: float


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def residuals_from_initial(data: Dataset, fit: AdaptiveFit, center: bool = True) -> np.ndarray:
    """``y - X beta_tilde``, optionally mean-centered."""
    if fit.beta_tilde.shape[0] != data.p:
        raise ValueError(f"fit has {fit.beta_tilde.shape[0]} coefficients, data has p={data.p}")
    resid = data.y - data.X @ fit.beta_tilde
    if center:
        resid = resid - resid.mean()
    return resid


def bootstrap_replicate(
    data: Dataset,
    fit: AdaptiveFit,
    residuals: np.ndarray,
    h: Hypothesis,
    spec: NormSpec,
    rng: np.random.Generator,
) -> float:
    """One draw of the bootstrapped null statistic.

    Resampled errors are added to the initial fit and the fitted contribution
    of the constrained block is removed, giving ``y0 = y* - X_A beta_tilde_A``.
    The constrained path is traced on ``y0`` and the unconstrained path on
    ``y0 + X_A beta0``, a resampled response for which the null holds
    exactly. This mirrors how the observed statistic compares ``y`` with
    ``y - X_A beta0``; with ``beta0 = 0`` both paths share one response.
    """
    n = data.n
    draw = residuals[rng.integers(0, n, size=n)]
    y_star = data.X @ fit.beta_tilde + draw
    idx = h.index
    null_resp = y_star - data.X[:, idx] @ fit.beta_tilde[idx]
    full_resp = null_resp + data.X[:, idx] @ h.beta0
    return path_distance(
        lasso_path(data.with_response(full_resp)), lasso_path(data.with_response(null_resp), h.constrained), spec
    )


def initial_fit(data: Dataset, cfg: BootstrapConfig, seed=None) -> AdaptiveFit:
    if cfg.initial == "ols":
        return least_squares_fit(data)
    return adaptive_lasso(data, cfg.folds, seed=seed, rule=cfg.cv_rule)


def _order_stat(replicates: np.ndarray, alpha: float) -> float:
    B = replicates.shape[0]
    r = math.floor(B * (1 - alpha))
    if r < 1:
        return -math.inf
    return float(np.sort(replicates)[r - 1])


def bootstrap_test(
    data: Dataset,
    h: Hypothesis,
    spec: NormSpec = NormSpec(),
    cfg: BootstrapConfig = BootstrapConfig(),
) -> TestOutcome:
    """Bootstrap-calibrated test of ``h`` with the path-distance statistic.

    The master seed is split into ``B + 1`` streams: the first drives the
    cross-validation folds of the initial fit, the rest one replicate each.
    Rejection uses the ``floor(B (1 - alpha))``-th order statistic.
    """
    h.check(data.p)
    observed = null_statistic(data, h, spec)
    streams = seed_sequence(cfg.seed).spawn(cfg.B + 1)
    fit = initial_fit(data, cfg, seed=streams[0])
    resid = residuals_from_initial(data, fit, cfg.center_residuals)

    def one(ss):
        return bootstrap_replicate(data, fit, resid, h, spec, np.random.default_rng(ss))

    if cfg.jobs == 1:
        reps = np.array([one(ss) for ss in streams[1:]])
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            reps = np.array(list(pool.map(one, streams[1:])))
    critical = _order_stat(reps, cfg.alpha)
    pvalue = float(np.count_nonzero(reps > observed)) / cfg.B
    return TestOutcome(
        statistic=observed,
        pvalue=pvalue,
        critical=critical,
        reject=bool(observed > critical),
        replicates=reps if cfg.keep_replicates else None,
    )


def single_coefficient_test(
    data: Dataset, j: int, spec: NormSpec = NormSpec(), cfg: BootstrapConfig = BootstrapConfig()
) -> TestOutcome:
    """Test ``beta_j = 0``."""
    if not 0 <= j < data.p:
        raise IndexError(f"covariate index {j} out of range for p={data.p}")
    return bootstrap_test(data, Hypothesis((j,), (0.0,)), spec, cfg)


def permutation_interval(
    data: Dataset,
    j: int,
    spec: NormSpec = NormSpec(),
    M: int = 100,
    level: float = 0.95,
    seed=None,
    *,
    total: float | None = None,
) -> PermutationInterval:
    """Empirical interval for the normalized importance of covariate ``j``.

    Each of the ``M`` draws permutes column ``j`` and measures how far the
    refitted path moves from the original one. Values are divided by
    ``total`` (the sum of all LOCO statistics, computed when not given).
    """
    if not 0 <= j < data.p:
        raise IndexError(f"covariate index {j} out of range for p={data.p}")
    if M < 2:
        raise ValueError("need at least 2 permutations")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if total is None:
        total = float(loco_statistics(data, spec).sum())
    rng = np.random.default_rng(seed)
    full = lasso_path(data)
    X = np.array(data.X, order="F")
    col = data.X[:, j]
    stats = np.empty(M)
    for m in range(M):
        X[:, j] = col[rng.permutation(data.n)]
        stats[m] = path_distance(full, lasso_path(Dataset(X, data.y, data.names)), spec)
    scaled = stats / total if total > 0 else np.zeros(M)
    lo, hi = np.quantile(scaled, [(1 - level) / 2, (1 + level) / 2])
    return PermutationInterval(j=j, level=level, M=M, lo=float(lo), hi=float(hi))


def importance_intervals(
    data: Dataset, spec: NormSpec = NormSpec(), M: int = 100, level: float = 0.95, seed=None, raw=None
) -> np.ndarray:
    """Permutation intervals for every covariate, one seed stream each."""
    if raw is None:
        raw = loco_statistics(data, spec)
    total = float(np.sum(raw))
    streams = seed_sequence(seed).spawn(data.p)
    out = np.empty((data.p, 2))
    for j in range(data.p):
        iv = permutation_interval(data, j, spec, M, level, streams[j], total=total)
        out[j] = iv.lo, iv.hi
    return out

