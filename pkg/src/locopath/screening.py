"""Variable screening by LOCO path statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import NormSpec, loco_statistics
from .path import Dataset


@dataclass(frozen=True)
class Threshold:
    """Keep covariates whose statistic exceeds ``eps``."""

    eps: float = 0.0

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"threshold must be nonnegative, got {self.eps}")

    def __str__(self) -> str:
        return f"threshold({self.eps:g})"


@dataclass(frozen=True)
class TopK:
    """Keep the ``K`` largest statistics."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")

    def __str__(self) -> str:
        return f"topk({self.K})"


@dataclass(frozen=True, eq=False)
class ScreeningReport:
    stats: np.ndarray
    kept: np.ndarray
    rule: Threshold | TopK


def apply_rule(stats: np.ndarray, rule: Threshold | TopK) -> np.ndarray:
    """Indices kept by ``rule``, by decreasing statistic then ascending index."""
    stats = np.asarray(stats, dtype=np.float64)
    order = np.lexsort((np.arange(stats.size), -stats))
    if isinstance(rule, TopK):
        return order[: min(rule.K, stats.size)]
    if isinstance(rule, Threshold):
        return order[stats[order] > rule.eps]
    raise TypeError(f"unknown screening rule {rule!r}")


def screen(data: Dataset, spec: NormSpec = NormSpec(), rule: Threshold | TopK = Threshold(), jobs: int = 1) -> ScreeningReport:
    """Compute every ``T_j`` (one full path, ``p`` leave-one-out paths) and apply ``rule``."""
    stats = loco_statistics(data, spec, jobs)
    return ScreeningReport(stats, apply_rule(stats, rule), rule)
