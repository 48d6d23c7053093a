"""Weighted log-rank statistics and the weight-function catalog.

The standardized statistic for a weight vector ``w`` over the risk table is

    Z(w) = sum_i w_i * (d1_i - y1_i * d_i / y_i)
           / sqrt( sum_i w_i^2 * (y1_i/y_i) * (1 - y1_i/y_i)
                   * (y_i - d_i)/(y_i - 1) * d_i )

i.e. the sum of weighted observed-minus-expected group-1 event counts over
the hypergeometric standard deviation, with the usual tie-correction
factor ``(y - d)/(y - 1)`` (taken as 1 on rows with ``y = 1``, where the
variance term vanishes anyway).

Weight conventions, pinned by tests:

* Fleming-Harrington ``FH(rho, gamma)`` and the crossing weight use the
  left limit ``S(t-)`` of the pooled Kaplan-Meier curve.
* The Peto-Peto weight uses the modified pooled survival estimate
  ``prod(1 - d_j/(y_j + 1))`` evaluated at the event time itself, which
  stays strictly positive and below 1.  (Some implementations use the
  plain Kaplan-Meier left limit instead; the two agree asymptotically.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import RiskTable, SurvivalDataset, TestOutcome, build_risk_table
from .errors import DegenerateVarianceError

__all__ = [
    "WeightFunction",
    "ConstantWeight",
    "PetoPetoWeight",
    "FlemingHarringtonWeight",
    "CrossingWeight",
    "SignSwitchWeight",
    "pooled_km_left",
    "pooled_km_at",
    "pooled_modified_survival",
    "weight_vector",
    "variance_terms",
    "weighted_logrank_z",
    "logrank_test",
    "peto_peto_test",
]


def pooled_km_left(table: RiskTable) -> np.ndarray:
    """Pooled Kaplan-Meier left limits ``S(t_i-)`` at the event rows."""
    s = np.cumprod(1.0 - table.d / table.y)
    return np.concatenate(([1.0], s[:-1]))


def pooled_km_at(table: RiskTable) -> np.ndarray:
    """Pooled Kaplan-Meier values ``S(t_i)`` at the event rows."""
    return np.cumprod(1.0 - table.d / table.y)


def pooled_modified_survival(table: RiskTable) -> np.ndarray:
    """Pooled survival estimate ``prod(1 - d/(y+1))`` at the event rows."""
    return np.cumprod(1.0 - table.d / (table.y + 1.0))


class WeightFunction:
    """Base class: maps a risk table to one weight per event row."""

    name = "weight"

    def evaluate(self, table: RiskTable) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWeight(WeightFunction):
    name: str = "constant"

    def evaluate(self, table: RiskTable) -> np.ndarray:
        return np.ones(table.n_rows)


@dataclass(frozen=True)
class PetoPetoWeight(WeightFunction):
    name: str = "peto-peto"

    def evaluate(self, table: RiskTable) -> np.ndarray:
        return pooled_modified_survival(table)


@dataclass(frozen=True)
class FlemingHarringtonWeight(WeightFunction):
    """``S(t-)^rho * (1 - S(t-))^gamma`` with the pooled Kaplan-Meier curve."""

    rho: float = 0.0
    gamma: float = 0.0

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"FH({self.rho:g},{self.gamma:g})"

    def evaluate(self, table: RiskTable) -> np.ndarray:
        s = pooled_km_left(table)
        w = np.ones(table.n_rows)
        if self.rho != 0:
            w = w * s**self.rho
        if self.gamma != 0:
            w = w * (1.0 - s) ** self.gamma
        return w


@dataclass(frozen=True)
class CrossingWeight(WeightFunction):
    """``1 - 2*S(t-)``: negative early, positive late, targets crossings."""

    name: str = "crossing"

    def evaluate(self, table: RiskTable) -> np.ndarray:
        return 1.0 - 2.0 * pooled_km_left(table)


@dataclass(frozen=True)
class SignSwitchWeight(WeightFunction):
    """``-1`` up to row ``m`` (1-based, inclusive), ``c`` afterwards."""

    m: int
    c: float

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"signswitch(m={self.m})"

    def evaluate(self, table: RiskTable) -> np.ndarray:
        w = np.full(table.n_rows, self.c)
        w[: self.m] = -1.0
        return w


def weight_vector(table: RiskTable, w) -> np.ndarray:
    """Accept a WeightFunction or an explicit per-row array."""
    if isinstance(w, WeightFunction):
        return w.evaluate(table)
    arr = np.asarray(w, dtype=np.float64)
    if arr.shape != (table.n_rows,):
        raise ValueError("weight array length must match risk-table rows")
    return arr


def variance_terms(table: RiskTable) -> np.ndarray:
    """Per-row hypergeometric variance ``(y1/y)(1-y1/y)((y-d)/(y-1))d``."""
    y = table.y.astype(np.float64)
    frac = table.y1 / y
    tie = np.where(table.y > 1, (table.y - table.d) / np.maximum(y - 1.0, 1.0), 1.0)
    return frac * (1.0 - frac) * tie * table.d


def score_terms(table: RiskTable) -> np.ndarray:
    """Per-row observed-minus-expected group-1 event counts."""
    return table.d1 - table.y1 * (table.d / table.y.astype(np.float64))


def weighted_logrank_z(table: RiskTable, w) -> float:
    """Standardized weighted log-rank statistic for one weight function.

    Raises :class:`DegenerateVarianceError` when the estimated variance is
    zero (e.g. one group is exhausted before any pooled event).
    """
    wv = weight_vector(table, w)
    num = float(np.dot(wv, score_terms(table)))
    var = float(np.dot(wv**2, variance_terms(table)))
    if not var > 0.0:
        raise DegenerateVarianceError("weighted log-rank variance is zero")
    return float(num / np.sqrt(var))


def _chi2_outcome(data: SurvivalDataset, w, method: str) -> TestOutcome:
    table = build_risk_table(data)
    z = weighted_logrank_z(table, w)
    p = float(stats.chi2.sf(z * z, df=1))
    return TestOutcome(statistic=z, p_value=p, method=method, detail={"chi2": float(z * z)})


def logrank_test(data: SurvivalDataset) -> TestOutcome:
    """Classical log-rank test (constant weight), two-sided chi-squared(1) p."""
    return _chi2_outcome(data, ConstantWeight(), "LR")


def peto_peto_test(data: SurvivalDataset) -> TestOutcome:
    """Peto-Peto test: pooled-survival weights, sensitive to early differences."""
    return _chi2_outcome(data, PetoPetoWeight(), "PP")
