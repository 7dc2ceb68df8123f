"""Exact lasso solution paths and the data containers they operate on."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._lars import STATUS_COMPLETE, lars_lasso

TIE_TOL = 1e-12
COLLINEAR_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``X`` (n x p), response ``y`` and column labels."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, order="F")
        y = np.array(self.y, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        n, p = X.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise ValueError(f"y has length {y.shape[0]} but X has {n} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        names = tuple(self.names) if self.names else tuple(f"X{j + 1}" for j in range(p))
        if len(names) != p:
            raise ValueError(f"got {len(names)} names for {p} columns")
        if len(set(names)) != p:
            raise ValueError("column names must be unique")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_response(self, y: np.ndarray) -> "Dataset":
        return Dataset(self.X, y, self.names)

    def centered(self) -> "Dataset":
        return Dataset(self.X - self.X.mean(axis=0), self.y - self.y.mean(), self.names)

    def standardized(self) -> "Dataset":
        """Scale columns to unit sample standard deviation (zero columns untouched)."""
        sd = self.X.std(axis=0, ddof=1)
        sd[sd == 0] = 1.0
        return Dataset(self.X / sd, self.y, self.names)


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """Null ``beta_j = values[i]`` for every ``j = constrained[i]`` (0-based indices)."""

    constrained: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        idx = tuple(int(j) for j in self.constrained)
        vals = tuple(float(v) for v in self.values)
        if not idx:
            raise ValueError("hypothesis must constrain at least one coefficient")
        if len(set(idx)) != len(idx):
            raise ValueError("constrained indices must be distinct")
        if len(vals) != len(idx):
            raise ValueError("need one hypothesized value per constrained index")
        if min(idx) < 0:
            raise ValueError("constrained indices must be nonnegative")
        if not all(np.isfinite(vals)):
            raise ValueError("hypothesized values must be finite")
        object.__setattr__(self, "constrained", idx)
        object.__setattr__(self, "values", vals)

    def check(self, p: int) -> None:
        if max(self.constrained) >= p:
            raise IndexError(f"hypothesis index {max(self.constrained)} out of range for p={p}")

    @property
    def index(self) -> np.ndarray:
        return np.asarray(self.constrained, dtype=np.int64)

    @property
    def beta0(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """Piecewise-linear path: ``coefs[:, k]`` is the solution at ``knots[k]``.

    Above the first knot the solution is zero; below the last knot it is
    held constant.
    """

    knots: np.ndarray
    coefs: np.ndarray
    excluded: frozenset = field(default_factory=frozenset)
    terminated_early: bool = False

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        coefs = np.asarray(self.coefs, dtype=np.float64)
        if coefs.ndim != 2 or coefs.shape[1] != knots.shape[0]:
            raise ValueError("coefs must be p x K with K = len(knots)")
        if knots.size > 1 and np.any(np.diff(knots) >= 0):
            raise ValueError("knots must be strictly decreasing")
        object.__setattr__(self, "knots", _frozen(knots))
        object.__setattr__(self, "coefs", _frozen(coefs))
        object.__setattr__(self, "excluded", frozenset(self.excluded))

    @property
    def p(self) -> int:
        return self.coefs.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.knots[0])

    def __call__(self, lam: float) -> np.ndarray:
        return eval_path(self, lam)

    def at(self, lams: Sequence[float] | np.ndarray) -> np.ndarray:
        """Evaluate at many penalties; returns a p x len(lams) matrix."""
        return evaluate_many(self, lams)

    def scaled(self, factor: float) -> "SolutionPath":
        """Same coefficient sequence on a rescaled penalty axis."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return SolutionPath(self.knots * factor, self.coefs, self.excluded, self.terminated_early)


def soft_threshold(x, lam):
    """``sign(x) * max(|x| - lam, 0)``; works elementwise on arrays."""
    if np.any(np.asarray(lam) < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def lasso_path(
    data: Dataset,
    excluded: Iterable[int] = (),
    offset: np.ndarray | None = None,
    *,
    max_steps: int | None = None,
) -> SolutionPath:
    """Exact lasso homotopy path of ``y - offset`` with ``excluded`` held at zero.

    The penalty is on the scale where the active correlations satisfy
    ``X_A^T (y - offset - X beta) = lam * sign(beta_A)``.
    """
    excluded = frozenset(int(j) for j in excluded)
    p = data.p
    if excluded and (min(excluded) < 0 or max(excluded) >= p):
        raise IndexError(f"excluded index out of range for p={p}")
    response = data.y
    if offset is not None:
        offset = np.asarray(offset, dtype=np.float64).ravel()
        if offset.shape[0] != data.n:
            raise ValueError(f"offset has length {offset.shape[0]}, expected {data.n}")
        if not np.all(np.isfinite(offset)):
            raise ValueError("offset must be finite")
        response = response - offset
    return _path(data.X, np.ascontiguousarray(response), excluded, max_steps)


def _path(X: np.ndarray, response: np.ndarray, excluded: frozenset, max_steps=None) -> SolutionPath:
    n, p = X.shape
    allowed = np.ones(p, dtype=np.bool_)
    for j in excluded:
        allowed[j] = False
    if max_steps is None:
        max_steps = 100 * min(n, p) + 1000
    knots, coefs, status, _ = lars_lasso(
        np.asfortranarray(X), response, allowed, TIE_TOL, COLLINEAR_TOL, max_steps
    )
    return SolutionPath(knots, coefs, excluded, terminated_early=status != STATUS_COMPLETE)


def eval_path(path: SolutionPath, lam: float) -> np.ndarray:
    """Coefficient vector at penalty ``lam`` (linear interpolation between knots)."""
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"penalty must be finite and nonnegative, got {lam}")
    return evaluate_many(path, np.array([lam]))[:, 0].copy()


def evaluate_many(path: SolutionPath, lams) -> np.ndarray:
    lams = np.asarray(lams, dtype=np.float64).ravel()
    knots, coefs = path.knots, path.coefs
    K = knots.shape[0]
    out = np.empty((path.p, lams.shape[0]))
    above = lams >= knots[0]
    below = lams <= knots[-1]
    out[:, above] = 0.0
    out[:, below & ~above] = coefs[:, [K - 1]]
    inner = ~(above | below)
    if np.any(inner):
        lv = lams[inner]
        # ascending view of the knots: -knots; segment k spans knots[k] > lam > knots[k+1]
        k = np.searchsorted(-knots, -lv, side="right") - 1
        hi, lo = knots[k], knots[k + 1]
        w = (hi - lv) / (hi - lo)
        out[:, inner] = coefs[:, k] * (1.0 - w) + coefs[:, k + 1] * w
    return out
