"""Simulation designs, classical baselines and Monte-Carlo experiments.

Every replicate draws its data from ``SeedSequence(design.seed, spawn_key=(rep,))``
and its bootstrap from a sibling stream, so a cell's result does not depend
on the order in which replicates or cells are evaluated, and cells that differ
only in ``beta`` share their covariates and noise.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .inference import BootstrapConfig, bootstrap_test
from .metric import NormSpec
from .path import Dataset, Hypothesis
from .screening import TopK, Threshold, screen

COVARIANCES = ("identity", "ar1", "equicorr")

_DATA_STREAM = 0
_BOOT_STREAM = 1


@dataclass(frozen=True)
class SimDesign:
    n: int
    p: int
    beta: tuple[float, ...]
    sigma: float = 1.0
    cov: str = "identity"
    rho: float = 0.0
    reps: int = 200
    seed: int = 0

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        object.__setattr__(self, "beta", beta)
        if self.n < 1 or self.p < 1 or self.reps < 1:
            raise ValueError("n, p and reps must be positive")
        if len(beta) != self.p:
            raise ValueError(f"beta has length {len(beta)}, expected p={self.p}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.cov not in COVARIANCES:
            raise ValueError(f"cov must be one of {COVARIANCES}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")

    @classmethod
    def sparse(cls, n: int, p: int, coefs: dict[int, float], **kw) -> "SimDesign":
        """Design whose coefficient vector is zero except at the 0-based keys of ``coefs``."""
        beta = np.zeros(p)
        for j, v in coefs.items():
            beta[j] = v
        return cls(n=n, p=p, beta=tuple(beta), **kw)

    def with_coef(self, j: int, value: float) -> "SimDesign":
        beta = list(self.beta)
        beta[j] = value
        return replace(self, beta=tuple(beta))

    def describe(self) -> dict:
        nz = {str(j + 1): b for j, b in enumerate(self.beta) if b != 0}
        return {
            "n": self.n,
            "p": self.p,
            "beta_nonzero": nz,
            "sigma": self.sigma,
            "cov": self.cov,
            "rho": self.rho,
            "reps": self.reps,
            "seed": self.seed,
        }


@dataclass
class SimResult:
    """Aggregated cells plus optional per-replicate records."""

    cells: list[dict] = field(default_factory=list)
    records: list[dict] = field(default_factory=list)

    def rate(self, method: str, **match) -> float:
        for c in self.cells:
            if c["method"] == method and all(c.get(k) == v for k, v in match.items()):
                return c["rate"]
        raise KeyError(f"no cell for method={method!r} {match}")

    def to_json(self) -> str:
        return json.dumps({"cells": self.cells, "records": self.records}, sort_keys=True, indent=2)

    def cells_csv(self) -> str:
        return _to_csv(self.cells)

    def records_csv(self) -> str:
        return _to_csv(self.records)


def _flat(row: dict) -> dict:
    return {k: json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v for k, v in row.items()}


def _to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(_flat(r))
    return buf.getvalue()


def _streams(design: SimDesign, rep_index: int):
    root = np.random.SeedSequence(design.seed, spawn_key=(rep_index,))
    return root.spawn(2)


def gen_covariates(n: int, p: int, cov: str, rho: float, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, p))
    if cov == "identity" or rho == 0.0:
        return Z
    if cov == "ar1":
        X = np.empty_like(Z)
        X[:, 0] = Z[:, 0]
        scale = math.sqrt(1.0 - rho * rho)
        for j in range(1, p):
            X[:, j] = rho * X[:, j - 1] + scale * Z[:, j]
        return X
    if cov == "equicorr":
        g = rng.standard_normal((n, 1))
        return math.sqrt(rho) * g + math.sqrt(1.0 - rho) * Z
    raise ValueError(f"unknown covariance {cov!r}")


def gen_dataset(design: SimDesign, rep_index: int) -> Dataset:
    """Replicate ``rep_index`` of ``design``: Gaussian rows, ``y = X beta + sigma z``."""
    rng = np.random.default_rng(_streams(design, rep_index)[_DATA_STREAM])
    X = gen_covariates(design.n, design.p, design.cov, design.rho, rng)
    z = rng.standard_normal(design.n)
    y = X @ np.asarray(design.beta) + design.sigma * z
    return Dataset(X, y)


def _ols(data: Dataset):
    n, p = data.X.shape
    if p >= n:
        raise ValueError("classical tests need p < n")
    Q, R = np.linalg.qr(data.X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * diag.max():
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    beta = np.linalg.solve(R, Q.T @ data.y)
    resid = data.y - data.X @ beta
    return beta, resid, R


def t_test_pvalue(data: Dataset, j: int) -> float:
    """Two-sided least-squares t-test of ``beta_j = 0``."""
    if not 0 <= j < data.p:
        raise IndexError(f"covariate index {j} out of range for p={data.p}")
    beta, resid, R = _ols(data)
    df = data.n - data.p
    s2 = resid @ resid / df
    Rinv = np.linalg.inv(R)
    var_j = s2 * np.sum(Rinv[j] ** 2)
    if var_j == 0.0:
        return 0.0 if beta[j] != 0 else 1.0
    t = beta[j] / math.sqrt(var_j)
    return float(2.0 * stats.t.sf(abs(t), df))


def f_test_pvalue(data: Dataset, h: Hypothesis) -> float:
    """Partial F-test of ``beta_A = beta0_A`` against the full least-squares fit."""
    h.check(data.p)
    _, resid, _ = _ols(data)
    rss_full = resid @ resid
    keep = np.setdiff1d(np.arange(data.p), h.index)
    target = data.y - data.X[:, h.index] @ h.beta0
    if keep.size:
        coef, *_ = np.linalg.lstsq(data.X[:, keep], target, rcond=None)
        target = target - data.X[:, keep] @ coef
    rss_null = target @ target
    q = len(h.constrained)
    df = data.n - data.p
    if rss_full == 0.0:
        return 0.0 if rss_null > 0 else 1.0
    F = (rss_null - rss_full) / q / (rss_full / df)
    return float(stats.f.sf(F, q, df))


def sis_rank(data: Dataset) -> np.ndarray:
    """Covariates by decreasing ``|x_j^T y|``, ties by ascending index."""
    score = np.abs(data.X.T @ data.y)
    return np.lexsort((np.arange(data.p), -score))


def _run(fn, items, jobs):
    if jobs == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _binom_se(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1 - rate) / reps)


def _test_cells(design, h, spec, cfg, label, jobs, include_baseline):
    """Rejection records for the bootstrap test (and a classical baseline) on one design."""

    def one(rep):
        data = gen_dataset(design, rep)
        boot_seed = _streams(design, rep)[_BOOT_STREAM]
        out = bootstrap_test(data, h, spec, replace(cfg, seed=boot_seed, keep_replicates=False, jobs=1))
        rec = {
            "rep": rep,
            "statistic": out.statistic,
            "pvalue": out.pvalue,
            "reject": out.reject,
        }
        if include_baseline:
            if len(h.constrained) == 1 and h.values[0] == 0.0:
                rec["baseline"] = "t-test"
                rec["baseline_pvalue"] = t_test_pvalue(data, h.constrained[0])
            else:
                rec["baseline"] = "F-test"
                rec["baseline_pvalue"] = f_test_pvalue(data, h)
        return rec

    records = _run(one, range(design.reps), jobs)
    base = {"design": design.describe(), "spec": str(spec), "alpha": cfg.alpha, "B": cfg.B, **label}
    rate = sum(r["reject"] for r in records) / design.reps
    cells = [{**base, "method": f"loco{spec}", "rate": rate, "reps": design.reps, "se": _binom_se(rate, design.reps)}]
    if include_baseline:
        brate = sum(r["baseline_pvalue"] <= cfg.alpha for r in records) / design.reps
        cells.append(
            {**base, "method": records[0]["baseline"], "rate": brate, "reps": design.reps, "se": _binom_se(brate, design.reps)}
        )
    for r in records:
        r.update({"design": design.describe(), "spec": str(spec), **label})
    return cells, records


def experiment_size(
    design: SimDesign,
    spec: NormSpec = NormSpec(),
    cfg: BootstrapConfig = BootstrapConfig(B=200),
    hypothesis: Hypothesis | None = None,
    jobs: int = 1,
) -> SimResult:
    """Rejection rate of a true null (default ``beta_1 = 0``) over ``design.reps`` replicates."""
    h = hypothesis or Hypothesis((0,), (0.0,))
    h.check(design.p)
    cells, records = _test_cells(design, h, spec, cfg, {"experiment": "size"}, jobs, design.p < design.n)
    return SimResult(cells, records)


def experiment_power(
    design: SimDesign,
    spec: NormSpec = NormSpec(),
    cfg: BootstrapConfig = BootstrapConfig(B=200),
    beta1_grid: Sequence[float] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
    hypothesis: Hypothesis | None = None,
    coef: int = 0,
    jobs: int = 1,
) -> SimResult:
    """Rejection rate as coefficient ``coef`` moves along ``beta1_grid``."""
    h = hypothesis or Hypothesis((coef,), (0.0,))
    h.check(design.p)
    result = SimResult()
    for value in beta1_grid:
        cell_design = design.with_coef(coef, value)
        label = {"experiment": "power", "coef": coef + 1, "value": float(value)}
        cells, records = _test_cells(cell_design, h, spec, cfg, label, jobs, design.p < design.n)
        result.cells.extend(cells)
        result.records.extend(records)
    return result


def experiment_screening(
    design: SimDesign,
    rule: TopK | Threshold | None = None,
    specs: Iterable[NormSpec] = (NormSpec(1, 1),),
    support: Sequence[int] | None = None,
    jobs: int = 1,
) -> SimResult:
    """Proportion of replicates whose kept set contains the true support.

    The marginal-correlation ranking is scored with the same number of kept
    covariates as the path rule (``n - 1`` by default).
    """
    rule = rule or TopK(design.n - 1)
    specs = tuple(specs)
    truth = set(np.flatnonzero(np.asarray(design.beta)).tolist() if support is None else support)

    def one(rep):
        data = gen_dataset(design, rep)
        rec = {"rep": rep}
        for spec in specs:
            report = screen(data, spec, rule)
            rec[f"loco{spec}"] = truth <= set(report.kept.tolist())
            rec[f"kept{spec}"] = len(report.kept)
        k = len(report.kept) if isinstance(rule, Threshold) else rule.K
        rec["sis"] = truth <= set(sis_rank(data)[:k].tolist())
        return rec

    records = _run(one, range(design.reps), jobs)
    base = {"design": design.describe(), "rule": str(rule), "experiment": "screening"}
    cells = []
    for method in [f"loco{s}" for s in specs] + ["sis"]:
        rate = sum(r[method] for r in records) / design.reps
        cells.append({**base, "method": method, "rate": rate, "reps": design.reps, "se": _binom_se(rate, design.reps)})
    for r in records:
        r.update({"design": design.describe(), "experiment": "screening"})
    return SimResult(cells, records)

