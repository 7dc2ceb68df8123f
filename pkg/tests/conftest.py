"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, optimize

from locopath import Dataset


def random_data(rng, n, p, k=3, sigma=1.0) -> Dataset:
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[: min(k, p)] = rng.uniform(0.5, 2.0, min(k, p)) * rng.choice([-1, 1], min(k, p))
    y = X @ beta + sigma * rng.standard_normal(n)
    return Dataset(X, y)


def orthonormal_data(rng, n, p, beta=None, sigma=1.0) -> Dataset:
    """Design with ``X^T X = I_p`` exactly (up to rounding)."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    beta = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
    y = Q @ beta + sigma * rng.standard_normal(n)
    return Dataset(Q, y)


def cd_lasso(X, y, lam, excluded=()):
    """Coordinate-descent reference on the same objective ``0.5 ||y - Xb||^2 + lam ||b||_1``.

    scikit-learn minimizes ``(1 / 2n) ||y - Xb||^2 + alpha ||b||_1``, so
    ``alpha = lam / n``.
    """
    from sklearn.linear_model import Lasso

    n, p = X.shape
    keep = np.setdiff1d(np.arange(p), np.asarray(list(excluded), dtype=int))
    out = np.zeros(p)
    if lam <= 0 or keep.size == 0:
        raise ValueError("reference solver needs lam > 0")
    model = Lasso(alpha=lam / n, fit_intercept=False, tol=1e-14, max_iter=1_000_000, selection="cyclic")
    model.fit(X[:, keep], y)
    out[keep] = model.coef_
    return out


def interp_path(path, lams):
    """Independent evaluator: ``np.interp`` on ascending knots, zero above ``lam_1``, constant below ``lam_K``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    knots = np.asarray(path.knots)[::-1]
    coefs = np.asarray(path.coefs)[:, ::-1]
    return np.array([np.interp(lams, knots, c, left=c[0], right=0.0) for c in coefs])


def _simpson_pieces(brk, top, points):
    """Grid with an even number of Simpson intervals on each piece between breakpoints."""
    widths = np.diff(brk)
    m = 2 * np.maximum(1, np.round(widths / top * (points - 1) / 2)).astype(int)
    pieces = [np.linspace(lo, hi, k + 1)[:-1] for lo, hi, k in zip(brk[:-1], brk[1:], m)]
    return np.append(np.concatenate(pieces), brk[-1]), np.cumsum(np.r_[0, m])


def _coord(path, k):
    return lambda lam: interp_path(path, [lam])[k, 0]


def quadrature_distance(p1, p2, s, t, points=10_001, aligned=True):
    """Numeric ``||p1 - p2||_{s,t}`` by composite Simpson with about ``points`` abscissae.

    With ``aligned`` the knots of both paths, and for ``s = 1`` the sign
    changes of each coordinate difference (located with ``brentq``), are
    breakpoints of the rule; otherwise a uniform grid is used. For
    ``s = inf`` the grid maximum of each coordinate is polished by a bounded
    scalar search on the neighbouring grid cells.
    """
    top = max(p1.lambda_max, p2.lambda_max)
    if top <= 0:
        return 0.0
    if aligned:
        brk = np.unique(np.concatenate([p1.knots, p2.knots, [0.0]]))
    else:
        brk = np.array([0.0, top])
    grid, cuts = _simpson_pieces(brk, top, points)
    diff = interp_path(p1, grid) - interp_path(p2, grid)

    def simpson(f, x, cuts):
        return sum(integrate.simpson(f[..., a : b + 1], x=x[a : b + 1], axis=-1) for a, b in zip(cuts[:-1], cuts[1:]))

    p = diff.shape[0]
    if s == 2:
        inner = np.sqrt(simpson(diff * diff, grid, cuts))
    elif s == 1:
        inner = np.empty(p)
        for k in range(p):
            d = diff[k]
            roots = []
            if aligned:
                at = interp_path(p1, brk)[k] - interp_path(p2, brk)[k]
                for i in np.flatnonzero(at[:-1] * at[1:] < 0):
                    f1, f2 = _coord(p1, k), _coord(p2, k)
                    roots.append(optimize.brentq(lambda x: f1(x) - f2(x), brk[i], brk[i + 1], xtol=1e-15 * top))
            if roots:
                g, c = _simpson_pieces(np.unique(np.r_[brk, roots]), top, points)
                d = interp_path(p1, g)[k] - interp_path(p2, g)[k]
                inner[k] = simpson(np.abs(d), g, c)
            else:
                inner[k] = simpson(np.abs(d), grid, cuts)
    else:
        npts = grid.size
        inner = np.empty(p)
        for k in range(p):
            m = int(np.argmax(np.abs(diff[k])))
            best = abs(diff[k, m])
            lo, hi = grid[max(m - 1, 0)], grid[min(m + 1, npts - 1)]
            f1, f2 = _coord(p1, k), _coord(p2, k)
            if hi > lo:
                res = optimize.minimize_scalar(
                    lambda x: -abs(f1(x) - f2(x)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13 * top}
                )
                best = max(best, -res.fun)
            inner[k] = best
    if t == 1:
        return float(inner.sum())
    if t == 2:
        return float(math.sqrt(np.sum(inner * inner)))
    return float(inner.max())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, str] = {}


def report(number: int, ok: bool, detail: str) -> bool:
    """Record the one-line verdict for an acceptance criterion."""
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
