"""Omnibus two-sample tests combining several log-rank weights.

Two combination strategies are implemented:

* a studentized quadratic form in a vector of weighted log-rank sums
  (``mdir2``/``mdir3``/``mdir4`` presets), with either a chi-squared
  approximation or a label-permutation p-value;
* the MaxCombo maximum of standardized Fleming-Harrington statistics,
  with a multivariate-normal Monte-Carlo p-value.

For a weight matrix ``W`` (one row per weight, one column per event time)
the score vector and its covariance estimate are

    Z_r       = sqrt(n/(n1*n2)) * sum_i W[r,i] * (d1_i - y1_i*d_i/y_i)
    Sigma[r,s] = (n/(n1*n2)) * sum_i W[r,i]*W[s,i] * (y1_i*y2_i/y_i) * (d_i/y_i)

i.e. the integral of the weight products against ``y1*y2/y`` and the
pooled Nelson-Aalen increments, realized as a sum over event rows.  The
quadratic form uses the Moore-Penrose inverse of ``Sigma`` (singular
values below ``1e-10`` of the largest are treated as zero, and the
chi-squared degrees of freedom equal the numerical rank).  Note ``Sigma``
carries no tie-correction factor, so with a single constant weight the
quadratic form equals the squared log-rank statistic exactly only on
tie-free data.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .core import RiskTable, SurvivalDataset, TestOutcome, build_risk_table
from .errors import DegenerateVarianceError
from .wlrt import (
    ConstantWeight,
    CrossingWeight,
    FlemingHarringtonWeight,
    weight_vector,
    weighted_logrank_z,
)

__all__ = [
    "MDIR2_WEIGHTS",
    "MDIR3_WEIGHTS",
    "MDIR4_WEIGHTS",
    "MAXCOMBO_WEIGHTS",
    "z_vector_and_covariance",
    "mdir_statistic",
    "mdir_test",
    "maxcombo_test",
]

_PINV_RTOL = 1e-10

MDIR2_WEIGHTS = (ConstantWeight(), CrossingWeight())
# The third and fourth weights target early and late differences.  As
# functions of the pooled CDF x they must not be linear in x: FH(1,0)
# and FH(0,1) are exact linear combinations of the constant and crossing
# weights and would collapse under the pseudo-inverse, so the presets
# use the lowest-order independent early/late shapes instead.  The
# two-weight default is the recommended configuration.
MDIR3_WEIGHTS = MDIR2_WEIGHTS + (FlemingHarringtonWeight(2, 0),)
MDIR4_WEIGHTS = MDIR3_WEIGHTS + (FlemingHarringtonWeight(0, 3),)
MAXCOMBO_WEIGHTS = (
    FlemingHarringtonWeight(0, 0),
    FlemingHarringtonWeight(0, 1),
    FlemingHarringtonWeight(1, 1),
    FlemingHarringtonWeight(1, 0),
)


def _weight_matrix(table: RiskTable, weights) -> np.ndarray:
    if len(weights) == 0:
        raise ValueError("need at least one weight")
    return np.stack([weight_vector(table, w) for w in weights])


def _batch_z_sigma(table: RiskTable, wmat: np.ndarray, d1: np.ndarray, y1: np.ndarray):
    """Score vectors and covariance matrices for stacked group-1 columns.

    ``d1`` and ``y1`` have shape (rows, P); returns ``Z`` of shape (P, m)
    and ``Sigma`` of shape (P, m, m) for the P label assignments.
    """
    n1, n2 = table.n1, table.n2
    n = n1 + n2
    y = table.y.astype(np.float64)[:, None]
    d = table.d.astype(np.float64)[:, None]
    e = d / y
    score = d1 - y1 * e  # (rows, P)
    z = np.sqrt(n / (n1 * n2)) * (wmat @ score).T  # (P, m)

    u = y1 * (y - y1) / y * e  # (rows, P)
    m = wmat.shape[0]
    sigma = np.empty((d1.shape[1], m, m))
    scale = n / (n1 * n2)
    for r in range(m):
        for s in range(r, m):
            vals = scale * ((wmat[r] * wmat[s]) @ u)
            sigma[:, r, s] = vals
            sigma[:, s, r] = vals
    return z, sigma


def _batch_quadform(z: np.ndarray, sigma: np.ndarray):
    """Moore-Penrose quadratic forms ``z' pinv(sigma) z`` and ranks, batched."""
    lam, vec = np.linalg.eigh(sigma)
    lam_max = lam[:, -1]
    tol = _PINV_RTOL * np.maximum(lam_max, 0.0)
    keep = lam > np.maximum(tol[:, None], 0.0)
    proj = np.einsum("pmk,pm->pk", vec, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(keep, proj**2 / lam, 0.0)
    s = contrib.sum(axis=1)
    rank = keep.sum(axis=1)
    return s, rank


def z_vector_and_covariance(table: RiskTable, weights):
    """Observed score vector and covariance matrix for a weight list."""
    wmat = _weight_matrix(table, weights)
    d1 = table.d1.astype(np.float64)[:, None]
    y1 = table.y1.astype(np.float64)[:, None]
    z, sigma = _batch_z_sigma(table, wmat, d1, y1)
    return z[0], sigma[0]


def mdir_statistic(data: SurvivalDataset, weights=MDIR2_WEIGHTS) -> float:
    """Studentized quadratic form over the given weight list."""
    table = build_risk_table(data)
    z, sigma = z_vector_and_covariance(table, weights)
    s, rank = _batch_quadform(z[None, :], sigma[None, :, :])
    if rank[0] == 0:
        raise DegenerateVarianceError("covariance matrix has rank zero")
    return float(s[0])


def _permuted_group1_columns(data: SurvivalDataset, table: RiskTable, n_perm, rng):
    """d1 and y1 columns for ``n_perm`` random label permutations."""
    n = data.n
    at_risk = (data.time[None, :] >= table.t[:, None]).astype(np.float64)
    event_at = (
        (data.time[None, :] == table.t[:, None]) & data.event[None, :]
    ).astype(np.float64)
    labels = np.broadcast_to(data.group, (n_perm, n)).copy()
    rng.permuted(labels, axis=1, out=labels)
    g1 = (labels == 1).T.astype(np.float64)  # (n, P)
    return event_at @ g1, at_risk @ g1


def mdir_test(
    data: SurvivalDataset,
    weights=MDIR2_WEIGHTS,
    mode: str = "asymptotic",
    n_perm: int = 2000,
    seed=None,
    method: str = "mdir",
) -> TestOutcome:
    """Quadratic-form omnibus test.

    ``mode="asymptotic"`` uses the chi-squared law with the numerical rank
    of the covariance as degrees of freedom; ``mode="permutation"``
    permutes group labels (keeping each subject's time and censoring
    status) and reports ``(1 + #{S* >= S}) / (n_perm + 1)``.
    """
    if mode not in ("asymptotic", "permutation"):
        raise ValueError(f"unknown mode {mode!r}")
    table = build_risk_table(data)
    wmat = _weight_matrix(table, weights)
    d1 = table.d1.astype(np.float64)[:, None]
    y1 = table.y1.astype(np.float64)[:, None]
    z, sigma = _batch_z_sigma(table, wmat, d1, y1)
    s_obs, rank = _batch_quadform(z, sigma)
    if rank[0] == 0:
        raise DegenerateVarianceError("covariance matrix has rank zero")
    s_obs = float(s_obs[0])
    detail = {
        "weights": [w.name for w in weights],
        "z": [float(v) for v in z[0]],
        "mode": mode,
    }
    if mode == "asymptotic":
        df = int(rank[0])
        p = float(stats.chi2.sf(s_obs, df=df))
        detail["df"] = df
    else:
        if n_perm < 1:
            raise ValueError("n_perm must be >= 1")
        rng = np.random.default_rng(seed)
        d1p, y1p = _permuted_group1_columns(data, table, n_perm, rng)
        zp, sigmap = _batch_z_sigma(table, wmat, d1p, y1p)
        s_perm, _ = _batch_quadform(zp, sigmap)
        exceed = int(np.sum(s_perm >= s_obs))
        p = (1 + exceed) / (n_perm + 1)
        detail["n_perm"] = n_perm
    return TestOutcome(statistic=s_obs, p_value=p, method=method, detail=detail)


def _nearest_correlation(corr: np.ndarray):
    """Clip negative eigenvalues and restore the unit diagonal."""
    lam, vec = np.linalg.eigh(corr)
    clipped = bool(np.any(lam < -1e-8 * max(lam[-1], 1.0)))
    lam = np.clip(lam, 0.0, None)
    fixed = (vec * lam) @ vec.T
    scale = np.sqrt(np.clip(np.diag(fixed), 1e-300, None))
    fixed = fixed / np.outer(scale, scale)
    np.fill_diagonal(fixed, 1.0)
    return fixed, clipped


def maxcombo_test(
    data: SurvivalDataset,
    rho_gamma=((0, 0), (0, 1), (1, 1), (1, 0)),
    n_mc: int = 100_000,
    seed=None,
) -> TestOutcome:
    """Maximum of standardized Fleming-Harrington log-rank statistics.

    The p-value is ``P(max_i |G_i| >= max_i |Z_i|)`` for a centered
    multivariate normal ``G`` whose correlation matrix comes from the
    weight covariance normalized to unit diagonal, estimated with
    ``n_mc`` seeded Monte-Carlo draws.
    """
    if len(rho_gamma) < 2:
        raise ValueError("need at least two (rho, gamma) pairs")
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    table = build_risk_table(data)
    weights = tuple(FlemingHarringtonWeight(r, g) for r, g in rho_gamma)
    # Per-weight statistics use the fully tie-corrected standardization.
    z_std = np.array([weighted_logrank_z(table, w) for w in weights])
    _, sigma = z_vector_and_covariance(table, weights)
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        raise DegenerateVarianceError("a weight has zero variance")
    corr = sigma / np.sqrt(np.outer(diag, diag))
    corr, clipped = _nearest_correlation(corr)

    z_max = float(np.max(np.abs(z_std)))
    lam, vec = np.linalg.eigh(corr)
    factor = vec * np.sqrt(np.clip(lam, 0.0, None))
    rng = np.random.default_rng(seed)
    count = 0
    remaining = n_mc
    chunk = 1 << 16
    while remaining > 0:
        k = min(chunk, remaining)
        draws = rng.standard_normal((k, len(weights))) @ factor.T
        count += int(np.sum(np.max(np.abs(draws), axis=1) >= z_max))
        remaining -= k
    p = count / n_mc
    detail = {
        "z_by_weight": {w.name: float(v) for w, v in zip(weights, z_std)},
        "n_mc": n_mc,
        "mc_se": float(np.sqrt(max(p * (1 - p), 1e-300) / n_mc)),
    }
    if clipped:
        detail["psd_projected"] = True
    return TestOutcome(statistic=z_max, p_value=float(p), method="MC", detail=detail)
