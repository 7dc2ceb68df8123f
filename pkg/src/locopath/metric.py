"""Exact ``||.||_{s,t}`` distances between piecewise-linear lasso paths.

For a path difference ``f = (f_1, ..., f_p)`` the inner norm integrates each
coordinate over the penalty axis, the outer norm combines coordinates::

    ||f||_{s,t} = || (||f_1||_s, ..., ||f_p||_s) ||_t

Both paths are affine on every interval of the merged knot set, so the
integrals are sums of closed-form segment terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .path import Dataset, Hypothesis, SolutionPath, lasso_path

INF = float("inf")
_EXPONENTS = (1.0, 2.0, INF)


def _exponent(value) -> float:
    if isinstance(value, str):
        value = value.strip().lower()
        value = INF if value in ("inf", "infinity", "oo") else float(value)
    value = float(value)
    if value not in _EXPONENTS:
        raise ValueError(f"unsupported exponent {value!r}; choose from 1, 2, inf")
    return value


@dataclass(frozen=True)
class NormSpec:
    """Inner (penalty axis) exponent ``s`` and outer (coordinate) exponent ``t``."""

    s: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "s", _exponent(self.s))
        object.__setattr__(self, "t", _exponent(self.t))

    def __str__(self) -> str:
        def fmt(v):
            return "inf" if v == INF else str(int(v))

        return f"({fmt(self.s)},{fmt(self.t)})"


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    raw: np.ndarray
    normalized: np.ndarray
    degenerate: bool = False
    intervals: np.ndarray | None = None  # shape (p, 2): lo, hi

    def order(self) -> np.ndarray:
        """Indices by decreasing importance, ties by ascending index."""
        return np.lexsort((np.arange(self.raw.size), -self.raw))


def merged_knots(p1: SolutionPath, p2: SolutionPath) -> np.ndarray:
    """Descending union of both knot sets."""
    if p1.p != p2.p:
        raise ValueError(f"paths have different dimensions: {p1.p} vs {p2.p}")
    return np.unique(np.concatenate([p1.knots, p2.knots]))[::-1].copy()


def segment_abs_power_integral(a: float, b: float, lo: float, hi: float, q: int) -> float:
    """Exact ``int_lo^hi |a + b*lam|^q dlam`` for ``q`` in {1, 2}."""
    if lo > hi:
        raise ValueError("need lo <= hi")
    d_lo, d_hi = np.float64(a + b * lo), np.float64(a + b * hi)
    if q == 2:
        return float(_sq_integral(d_lo, d_hi, hi - lo))
    if q != 1:
        raise ValueError("q must be 1 or 2")
    return float(_abs_integral(d_lo, d_hi, hi - lo))


def _abs_integral(d_lo, d_hi, h):
    """Integral of |affine| over a segment of width h given its endpoint values."""
    alo, ahi = np.abs(d_lo), np.abs(d_hi)
    same = d_lo * d_hi >= 0
    tot = alo + ahi
    with np.errstate(invalid="ignore", divide="ignore"):
        cross = np.where(tot > 0, (d_lo * d_lo + d_hi * d_hi) / (2.0 * tot), 0.0)
    return h * np.where(same, 0.5 * tot, cross)


def _sq_integral(d_lo, d_hi, h):
    return h * (d_lo * d_lo + d_lo * d_hi + d_hi * d_hi) / 3.0


@njit(cache=True, nogil=True)
def _locate(knots, grid):
    """Bracketing column and interpolation weight of each grid point.

    Value at grid[m] is ``(1 - w) * coefs[:, idx - 1] + w * coefs[:, idx]``
    with column -1 standing for the zero vector above the first knot.
    """
    K = knots.shape[0]
    M = grid.shape[0]
    idx = np.empty(M, dtype=np.int64)
    w = np.empty(M)
    a = 0
    for m in range(M):
        lam = grid[m]
        while a < K and knots[a] > lam:
            a += 1
        if a == 0:
            # at or above the first knot: zero (column 0 is the zero vector)
            idx[m] = 0
            w[m] = 1.0 if lam == knots[0] else 0.0
        elif a >= K:
            idx[m] = K - 1
            w[m] = 1.0
        else:
            idx[m] = a
            w[m] = 1.0 if lam == knots[a] else (knots[a - 1] - lam) / (knots[a - 1] - knots[a])
    return idx, w


@njit(cache=True, nogil=True)
def _value(coefs, k, idx, w):
    right = coefs[k, idx]
    if w == 1.0:
        return right
    left = coefs[k, idx - 1] if idx > 0 else 0.0
    return left * (1.0 - w) + right * w


@njit(cache=True, nogil=True)
def _merged_grid(k1, k2):
    out = np.empty(k1.shape[0] + k2.shape[0] + 1)
    i = 0
    j = 0
    m = 0
    while i < k1.shape[0] or j < k2.shape[0]:
        if j >= k2.shape[0] or (i < k1.shape[0] and k1[i] > k2[j]):
            v = k1[i]
            i += 1
        elif i >= k1.shape[0] or k2[j] > k1[i]:
            v = k2[j]
            j += 1
        else:
            v = k1[i]
            i += 1
            j += 1
        out[m] = v
        m += 1
    if out[m - 1] > 0.0:
        out[m] = 0.0
        m += 1
    return out[:m]


@njit(cache=True, nogil=True)
def _coordinate_norms(k1, c1, k2, c2, s_code):
    grid = _merged_grid(k1, k2)
    M = grid.shape[0]
    p = c1.shape[0]
    i1, w1 = _locate(k1, grid)
    i2, w2 = _locate(k2, grid)
    out = np.zeros(p)
    for k in range(p):
        prev = _value(c1, k, i1[0], w1[0]) - _value(c2, k, i2[0], w2[0])
        acc = abs(prev) if s_code == 0 else 0.0
        for m in range(1, M):
            cur = _value(c1, k, i1[m], w1[m]) - _value(c2, k, i2[m], w2[m])
            h = grid[m - 1] - grid[m]
            if s_code == 0:
                if abs(cur) > acc:
                    acc = abs(cur)
            elif s_code == 1:
                tot = abs(prev) + abs(cur)
                if prev * cur >= 0.0:
                    acc += 0.5 * h * tot
                elif tot > 0.0:
                    acc += h * (prev * prev + cur * cur) / (2.0 * tot)
            else:
                acc += h * (prev * prev + prev * cur + cur * cur) / 3.0
            prev = cur
        out[k] = np.sqrt(acc) if s_code == 2 else acc
    return out


def coordinate_norms(p1: SolutionPath, p2: SolutionPath, s: float) -> np.ndarray:
    """Per-coordinate ``||beta1_k - beta2_k||_s`` over the penalty axis."""
    if p1.p != p2.p:
        raise ValueError(f"paths have different dimensions: {p1.p} vs {p2.p}")
    s_code = 0 if s == INF else int(s)
    return _coordinate_norms(p1.knots, p1.coefs, p2.knots, p2.coefs, s_code)


def _outer(values: np.ndarray, t: float) -> float:
    if t == INF:
        return float(np.max(values)) if values.size else 0.0
    if t == 1.0:
        return float(np.sum(values))
    return float(np.sqrt(np.sum(values * values)))


def path_distance(p1: SolutionPath, p2: SolutionPath, spec: NormSpec = NormSpec()) -> float:
    """``||p1 - p2||_{s,t}`` integrated over ``[0, max lambda_max]``."""
    if p1 is p2:
        return 0.0
    return _outer(coordinate_norms(p1, p2, spec.s), spec.t)


def loco_statistic(data: Dataset, j: int, spec: NormSpec = NormSpec(), full: SolutionPath | None = None) -> float:
    """Distance between the full path and the path with covariate ``j`` left out."""
    if not 0 <= j < data.p:
        raise IndexError(f"covariate index {j} out of range for p={data.p}")
    if full is None:
        full = lasso_path(data)
    return path_distance(full, lasso_path(data, (j,)), spec)


def loco_statistics(data: Dataset, spec: NormSpec = NormSpec(), jobs: int = 1) -> np.ndarray:
    """All ``T_j`` with the full path computed once."""
    full = lasso_path(data)

    def one(j):
        return path_distance(full, lasso_path(data, (j,)), spec)

    if jobs == 1:
        return np.array([one(j) for j in range(data.p)])
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return np.array(list(pool.map(one, range(data.p))))


def null_path(data: Dataset, h: Hypothesis) -> SolutionPath:
    """Path with the constrained block removed and its hypothesized fit offset."""
    h.check(data.p)
    offset = data.X[:, h.index] @ h.beta0
    return lasso_path(data, h.constrained, offset)


def null_statistic(data: Dataset, h: Hypothesis, spec: NormSpec = NormSpec()) -> float:
    return path_distance(lasso_path(data), null_path(data, h), spec)


def normalize(raw: Sequence[float]) -> tuple[np.ndarray, bool]:
    raw = np.asarray(raw, dtype=np.float64)
    total = raw.sum()
    if total > 0:
        return raw / total, False
    return np.zeros_like(raw), True


def normalized_importance(data: Dataset, spec: NormSpec = NormSpec(), jobs: int = 1) -> ImportanceReport:
    """LOCO statistics rescaled to sum to one.

    An all-zero statistic vector yields all-zero importances with
    ``degenerate=True``.
    """
    raw = loco_statistics(data, spec, jobs)
    norm, degenerate = normalize(raw)
    return ImportanceReport(raw, norm, degenerate)
