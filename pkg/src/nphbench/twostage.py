"""Two-stage procedure: log-rank first, then a crossing-targeted statistic.

Stage 1 is the ordinary log-rank test at level ``alpha1``.  If it fails to
reject, stage 2 evaluates sign-switching weights ``w^(m)`` that are -1 up
to event row ``m`` and a positive constant ``c_m`` afterwards, where
``c_m`` is chosen so that the estimated covariance between the stage-2 and
stage-1 weighted sums is zero, making the stages asymptotically
independent.  Writing ``v_i`` for the per-row variance terms, the
zero-covariance condition

    -sum_{i<=m} v_i + c_m * sum_{i>m} v_i = 0

gives ``c_m = V_<=m / V_>m`` in closed form; indices where either side has
no variance mass are skipped.  The stage-2 statistic is the largest
absolute standardized statistic over the trimmed index range (taking the
absolute value makes the procedure invariant to swapping group labels),
and its p-value comes from resampling the pooled data into two groups of
the original sizes, which encodes the null.  The two stages combine as

    p = p1                      if p1 <= alpha1
        alpha1 + p2*(1-alpha1)  otherwise,   alpha1 = 1 - sqrt(1-alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import RiskTable, SurvivalDataset, TestOutcome, build_risk_table
from .errors import NphbenchError, Stage2UndefinedError
from .wlrt import ConstantWeight, SignSwitchWeight, score_terms, variance_terms, weighted_logrank_z

__all__ = ["TwoStageConfig", "stage2_weights", "stage2_statistic", "two_stage_test"]


@dataclass(frozen=True)
class TwoStageConfig:
    alpha: float = 0.05
    eps: float = 0.1
    n_boot: int = 500
    seed: int | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if self.n_boot < 1:
            raise ValueError("n_boot must be >= 1")

    @property
    def alpha1(self) -> float:
        return 1.0 - np.sqrt(1.0 - self.alpha)


def _admissible_range(n_rows: int, eps: float) -> tuple[int, int]:
    """Inclusive 1-based range of switch indices, clamped so it is non-empty
    whenever the table has at least two rows."""
    d_eps = int(n_rows * eps)
    lo = max(1, d_eps)
    hi = min(n_rows - 1, n_rows - d_eps)
    return lo, hi


def stage2_weights(table: RiskTable, m: int) -> SignSwitchWeight:
    """Sign-switching weight at row ``m`` with the zero-covariance constant.

    Raises :class:`Stage2UndefinedError` when no positive constant exists,
    i.e. when all variance mass sits on one side of ``m``.
    """
    if not 1 <= m <= table.n_rows - 1:
        raise Stage2UndefinedError(f"switch index {m} out of range")
    v = variance_terms(table)
    before = float(np.sum(v[:m]))
    after = float(np.sum(v[m:]))
    if before <= 0.0 or after <= 0.0:
        raise Stage2UndefinedError(f"no positive constant at switch index {m}")
    return SignSwitchWeight(m=m, c=before / after)


def _stage2_scan(table: RiskTable, eps: float):
    """All admissible standardized statistics via prefix sums; O(rows)."""
    n_rows = table.n_rows
    if n_rows < 2:
        raise Stage2UndefinedError("need at least two event rows for stage 2")
    lo, hi = _admissible_range(n_rows, eps)
    if lo > hi:
        raise Stage2UndefinedError("trimming leaves no admissible switch index")
    s = score_terms(table)
    v = variance_terms(table)
    cs = np.cumsum(s)
    cv = np.cumsum(v)
    tot_s, tot_v = cs[-1], cv[-1]
    m = np.arange(lo, hi + 1)
    before_v = cv[m - 1]
    after_v = tot_v - before_v
    ok = (before_v > 0) & (after_v > 0)
    if not np.any(ok):
        raise Stage2UndefinedError("no admissible switch index with positive constant")
    m, before_v, after_v = m[ok], before_v[ok], after_v[ok]
    c = before_v / after_v
    num = -cs[m - 1] + c * (tot_s - cs[m - 1])
    var = before_v + c * c * after_v
    z = np.abs(num) / np.sqrt(var)
    return m, c, z


def stage2_statistic(data: SurvivalDataset, cfg: TwoStageConfig) -> float:
    """Largest absolute sign-switching statistic over the trimmed range."""
    table = build_risk_table(data)
    _, _, z = _stage2_scan(table, cfg.eps)
    return float(np.max(z))


def two_stage_test(data: SurvivalDataset, cfg: TwoStageConfig | None = None) -> TestOutcome:
    """Sequential test with split significance levels.

    The returned p-value already embeds ``cfg.alpha``: comparing it to
    ``alpha`` reproduces the two-stage decision rule.
    """
    cfg = cfg or TwoStageConfig()
    table = build_risk_table(data)
    z1 = weighted_logrank_z(table, ConstantWeight())
    p1 = float(2.0 * stats.norm.sf(abs(z1)))
    alpha1 = cfg.alpha1
    if p1 <= alpha1:
        return TestOutcome(
            statistic=z1,
            p_value=p1,
            method="TS",
            detail={"stage": 1, "p1": p1, "alpha1": alpha1},
        )

    m_all, c_all, z_all = _stage2_scan(table, cfg.eps)
    k = int(np.argmax(z_all))
    v_obs = float(z_all[k])

    rng = np.random.default_rng(cfg.seed)
    n, n1 = data.n, data.n1
    group = np.concatenate([np.ones(n1, dtype=np.int8), np.full(n - n1, 2, dtype=np.int8)])
    exceed = 0
    failures = 0
    for _ in range(cfg.n_boot):
        idx = rng.integers(0, n, size=n)
        try:
            boot = SurvivalDataset(data.time[idx], data.event[idx], group)
            table_b = build_risk_table(boot)
            _, _, z_b = _stage2_scan(table_b, cfg.eps)
        except NphbenchError:
            failures += 1
            continue
        if np.max(z_b) >= v_obs:
            exceed += 1
    p2 = (1 + exceed) / (cfg.n_boot + 1)
    p = alpha1 + p2 * (1 - alpha1)
    detail = {
        "stage": 2,
        "p1": p1,
        "p2": p2,
        "alpha1": alpha1,
        "n_boot": cfg.n_boot,
        "switch_index": int(m_all[k]),
        "switch_constant": float(c_all[k]),
        "boot_failures": failures,
    }
    return TestOutcome(statistic=v_obs, p_value=float(p), method="TS", detail=detail)
