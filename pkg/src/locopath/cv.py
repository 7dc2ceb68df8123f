"""Cross-validated lasso and the adaptive lasso used as the bootstrap initial fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .path import Dataset, lasso_path

GRID_SIZE = 100
GRID_RATIO = 1e-3
CV_RULES = ("min", "1se")


@dataclass(frozen=True, eq=False)
class AdaptiveFit:
    """Initial estimate ``beta_tilde`` with the penalties and weights that produced it.

    ``weights[j]`` is ``inf`` for coefficients removed at the first stage.
    """

    beta_tilde: np.ndarray
    lambda_cv: float
    gamma_cv: float
    weights: np.ndarray

    def __post_init__(self):
        bt = np.asarray(self.beta_tilde, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if bt.shape != w.shape:
            raise ValueError("beta_tilde and weights must have the same length")
        if not np.all(np.isfinite(bt)):
            raise ValueError("beta_tilde must be finite")
        if np.any(bt[np.isinf(w)] != 0):
            raise ValueError("coefficients with infinite weight must be zero")
        object.__setattr__(self, "beta_tilde", bt)
        object.__setattr__(self, "weights", w)


def fold_ids(n: int, folds: int, seed) -> np.ndarray:
    """Seeded shuffle, then round-robin assignment to ``folds`` groups."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ValueError(f"cannot split n={n} observations into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=np.int64)
    ids[perm] = np.arange(n) % folds
    return ids


def lambda_grid(lam_max: float, size: int = GRID_SIZE, ratio: float = GRID_RATIO) -> np.ndarray:
    if lam_max <= 0:
        return np.zeros(size)
    return np.geomspace(lam_max, lam_max * ratio, size)


def cv_lasso(data: Dataset, folds: int = 10, grid_size: int = GRID_SIZE, seed=None, rule: str = "min"):
    """K-fold cross-validated lasso.

    The grid lives on the full-data penalty scale; each training fold of size
    ``m`` is evaluated at ``lam * m / n`` so the per-observation penalty matches.
    ``rule="1se"`` takes the largest penalty whose CV error is within one
    standard error (across folds) of the minimum.

    Returns
    -------
    lambda_cv : float
        Grid value with the smallest mean held-out squared error (largest
        penalty among ties), or the one-standard-error choice.
    beta : ndarray
        Full-data lasso coefficients at ``lambda_cv``.
    """
    if rule not in CV_RULES:
        raise ValueError(f"rule must be one of {CV_RULES}, got {rule!r}")
    n = data.n
    ids = fold_ids(n, folds, seed)
    lam_max = float(np.max(np.abs(data.X.T @ data.y)))
    grid = lambda_grid(lam_max, grid_size)
    if lam_max == 0.0:
        return 0.0, np.zeros(data.p)

    sse = np.zeros((folds, grid_size))
    sizes = np.zeros(folds)
    for f in range(folds):
        test = ids == f
        train = ~test
        m = int(train.sum())
        path = lasso_path(Dataset(data.X[train], data.y[train], data.names))
        coefs = path.at(grid * (m / n))
        resid = data.y[test][:, None] - data.X[test] @ coefs
        sse[f] = np.sum(resid**2, axis=0)
        sizes[f] = test.sum()
    err = sse.sum(axis=0) / n
    best = int(np.argmin(err))
    if rule == "1se":
        fold_mse = sse[:, best] / sizes
        bound = err[best] + fold_mse.std(ddof=1) / np.sqrt(folds)
        best = int(np.flatnonzero(err <= bound)[0])
    lam_cv = float(grid[best])
    beta = lasso_path(data).at([lam_cv])[:, 0]
    return lam_cv, beta


def adaptive_lasso(data: Dataset, folds: int = 10, seed=None, rule: str = "min") -> AdaptiveFit:
    """Two-stage adaptive lasso with weights ``1 / |beta_L|`` from :func:`cv_lasso`.

    Both stages share one fold assignment and the CV ``rule``. Columns with a
    zero first-stage coefficient get infinite weight and stay at zero.
    """
    lam_cv, beta_l = cv_lasso(data, folds, seed=seed, rule=rule)
    keep = beta_l != 0
    weights = np.full(data.p, np.inf)
    weights[keep] = 1.0 / np.abs(beta_l[keep])
    beta_tilde = np.zeros(data.p)
    if not np.any(keep):
        return AdaptiveFit(beta_tilde, lam_cv, 0.0, weights)

    scale = np.abs(beta_l[keep])
    names = tuple(data.names[j] for j in np.flatnonzero(keep))
    reduced = Dataset(data.X[:, keep] * scale, data.y, names)
    gamma_cv, coef = cv_lasso(reduced, folds, seed=seed, rule=rule)
    beta_tilde[keep] = coef * scale
    return AdaptiveFit(beta_tilde, lam_cv, gamma_cv, weights)


def least_squares_fit(data: Dataset) -> AdaptiveFit:
    """Unpenalized least squares in the :class:`AdaptiveFit` container (p < n only)."""
    if data.p >= data.n:
        raise ValueError("least squares initial fit requires p < n")
    beta, _, rank, _ = np.linalg.lstsq(data.X, data.y, rcond=None)
    if rank < data.p:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    return AdaptiveFit(beta, 0.0, 0.0, np.ones(data.p))
