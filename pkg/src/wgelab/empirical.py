"""Finite-sample estimators: ERM, upweighting, downsampling, mixup and l1 fits.

All squared-error fits solve the (weighted) normal equations on centred
data: ``w = Cov_c(X)^{-1} Cov_c(X, Y)`` and ``b = mean_c(Y) - w^T mean_c(X)``
where the subscript marks weighting by c(y, d).  The covariance is always
Cholesky-factored; a near-singular design is reported, never pseudo-inverted.

Features are not standardised before the lasso because the latent scale is
meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .closed_form import DS, SRM, UW, LinearModel, Method, THRESHOLD
from .dataset import GROUPS, Dataset, GroupKey
from .errors import EmptyGroup, NoConvergence, NotSPD, RankDeficient, TooFewSamples
from .numerics import chol_factor, sample_beta_symmetric

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class MixupConfig:
    alpha: float = 1.0
    output_count: Optional[int] = None  # None: same size as the input

    def __post_init__(self):
        Method("mu", self.alpha)  # validates alpha


@dataclass(frozen=True, eq=False)
class FitReport:
    model: LinearModel
    effective_n: int
    method: Method
    seed_used: Optional[object] = None
    lam: Optional[float] = None


def _weighted_moments(ds, weights):
    q = np.ones(ds.n) if weights is None else np.asarray(weights, dtype=float)
    q = q / q.sum()
    mean_x = q @ ds.x
    mean_y = float(q @ ds.y)
    xc = ds.x - mean_x
    yc = ds.y - mean_y
    cov_xx = (xc * q[:, None]).T @ xc
    cov_xx = 0.5 * (cov_xx + cov_xx.T)
    cov_xy = (xc * q[:, None]).T @ yc
    return mean_x, mean_y, cov_xx, cov_xy


def _factor_design(cov_xx):
    try:
        f = chol_factor(cov_xx)
    except NotSPD as exc:
        raise RankDeficient(f"design covariance is singular: {exc}") from None
    if np.any(np.diag(f.lower) ** 2 <= RANK_RTOL * np.max(np.diag(cov_xx))):
        raise RankDeficient("design covariance is numerically rank deficient")
    return f


def _check_size(n, p):
    if n < p + 2:
        raise TooFewSamples(f"{n} samples cannot determine {p + 1} parameters (need {p + 2})")


def weighted_least_squares(ds: Dataset, weights=None) -> LinearModel:
    """Exact minimiser of sum_i c_i (y_i - w^T x_i - b)^2."""
    _check_size(ds.n, ds.dim)
    mean_x, mean_y, cov_xx, cov_xy = _weighted_moments(ds, weights)
    w = _factor_design(cov_xx).solve(cov_xy)
    return LinearModel(w, mean_y - w @ mean_x)


def uw_weights(ds: Dataset) -> np.ndarray:
    """Per-sample weights n / (4 n_g)."""
    ds.require_groups()
    counts = np.array([ds.group_counts[g] for g in GROUPS], dtype=float)
    return ds.n / (4.0 * counts[ds.group_code])


def fit_erm(ds: Dataset) -> FitReport:
    return FitReport(weighted_least_squares(ds), ds.n, SRM)


def fit_uw(ds: Dataset) -> FitReport:
    return FitReport(weighted_least_squares(ds, uw_weights(ds)), ds.n, UW)


def downsample(ds: Dataset, seed) -> Dataset:
    """Keep ``n_min`` samples of every group, drawn without replacement.

    Kept samples stay in their original order.
    """
    ds.require_groups()
    rng = np.random.default_rng(seed)
    n_min = ds.n_min
    keep = [rng.choice(ds.group_indices(g), n_min, replace=False) for g in GROUPS]
    return ds.subset(np.sort(np.concatenate(keep)))


def fit_ds(ds: Dataset, seed) -> FitReport:
    ds.require_groups()
    _check_size(4 * ds.n_min, ds.dim)
    small = downsample(ds, seed)
    return FitReport(weighted_least_squares(small), small.n, DS, seed)


def mixup_dataset(ds: Dataset, cfg: MixupConfig, seed) -> Dataset:
    """Convex combinations of same-class, cross-domain pairs.

    Each output draws its class from the empirical class frequencies, a
    partner from each domain of that class (with replacement) and
    lambda ~ Beta(alpha, alpha); x = lambda x_S + (1 - lambda) x_T.  The
    domain tag is S when lambda >= 1/2, else T; no fit reads it.
    """
    ds.require_groups()
    rng = np.random.default_rng(seed)
    count = ds.n if cfg.output_count is None else int(cfg.output_count)
    p1 = float(np.mean(ds.y == 1))
    y = (rng.random(count) < p1).astype(np.int64)
    lam = sample_beta_symmetric(cfg.alpha, count, rng)
    x = np.empty((count, ds.dim))
    for label in (0, 1):
        rows = np.flatnonzero(y == label)
        src = ds.group_indices(GroupKey(label, "S"))
        tgt = ds.group_indices(GroupKey(label, "T"))
        i1 = src[rng.integers(0, src.size, rows.size)]
        i2 = tgt[rng.integers(0, tgt.size, rows.size)]
        lam_r = lam[rows, None]
        x[rows] = lam_r * ds.x[i1] + (1.0 - lam_r) * ds.x[i2]
    d = np.where(lam >= 0.5, "S", "T")
    return Dataset(x, y, d)


def fit_mu(ds: Dataset, cfg: MixupConfig, seed) -> FitReport:
    mixed = mixup_dataset(ds, cfg, seed)
    return FitReport(weighted_least_squares(mixed), mixed.n, Method("mu", cfg.alpha), seed)


def fit(ds: Dataset, method: Method, seed=None, mixup_count=None) -> FitReport:
    """Dispatch to the estimator for ``method``."""
    if method.kind == "srm":
        return fit_erm(ds)
    if method.kind == "uw":
        return fit_uw(ds)
    if method.kind == "ds":
        return fit_ds(ds, seed)
    return fit_mu(ds, MixupConfig(method.alpha, mixup_count), seed)


def _lasso_weights(ds, weights):
    if weights is None or isinstance(weights, str) and weights == "uniform":
        return np.ones(ds.n)
    if isinstance(weights, str) and weights == "uw":
        return uw_weights(ds)
    if isinstance(weights, str):
        raise ValueError(f"unknown weighting {weights!r}")
    return np.asarray(weights, dtype=float)


def lasso_objective(theta: LinearModel, ds: Dataset, lam, weights="uniform") -> float:
    """(1/n) sum_i c_i (y_i - w^T x_i - b)^2 + lam |w|_1."""
    c = _lasso_weights(ds, weights)
    r = ds.y - theta.score(ds.x)
    return float(np.sum(c * r * r) / ds.n + lam * np.sum(np.abs(theta.w)))


def group_averaged_objective(theta: LinearModel, ds: Dataset, lam=0.0) -> float:
    """(1/4) sum_g mean_{i in g} (y_i - w^T x_i - b)^2 + lam |w|_1."""
    ds.require_groups()
    r = ds.y - theta.score(ds.x)
    per_group = [np.mean(r[ds.group_indices(g)] ** 2) for g in GROUPS]
    return float(0.25 * sum(per_group) + lam * np.sum(np.abs(theta.w)))


def _soft(z, t):
    return np.sign(z) * max(abs(z) - t, 0.0)


def _polish(cov_xx, cov_xy, w, lam):
    # Re-solve the stationarity equations on the active set; keep the result
    # only if signs and the inactive-set subgradient bounds still hold.
    active = np.flatnonzero(w != 0)
    if active.size == 0:
        return w
    sign = np.sign(w[active])
    try:
        sub = scipy.linalg.cho_factor(cov_xx[np.ix_(active, active)], lower=True)
        w_a = scipy.linalg.cho_solve(sub, cov_xy[active] - 0.5 * lam * sign)
    except np.linalg.LinAlgError:
        return w
    if np.any(np.sign(w_a) != sign):
        return w
    cand = np.zeros_like(w)
    cand[active] = w_a
    grad = cov_xx @ cand - cov_xy
    inactive = np.setdiff1d(np.arange(w.size), active)
    if np.any(np.abs(grad[inactive]) > 0.5 * lam * (1 + 1e-9) + 1e-15):
        return w
    return cand


def fit_lasso(ds: Dataset, lam, weights="uniform", tol=1e-10, max_sweeps=100_000) -> FitReport:
    """Minimise the (weighted) mean squared error plus ``lam |w|_1``.

    Cyclic coordinate descent with soft-thresholding on covariance
    statistics computed once; the intercept is unpenalised and profiled
    out.  Stops when no coordinate moves by ``tol`` in a sweep, then
    re-solves exactly on the active set.  ``weights`` is ``"uniform"``,
    ``"uw"`` (n / (4 n_g)) or an array of per-sample weights.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    _check_size(ds.n, ds.dim)
    c = _lasso_weights(ds, weights)
    mean_x, mean_y, cov_xx, cov_xy = _weighted_moments(ds, c)
    diag = np.diag(cov_xx)
    if np.any(diag <= 0):
        raise RankDeficient("a feature is constant over the weighted sample")
    w = np.zeros(ds.dim)
    for _ in range(max_sweeps):
        max_step = 0.0
        for j in range(ds.dim):
            rho = cov_xy[j] - cov_xx[j] @ w + diag[j] * w[j]
            new = _soft(rho, 0.5 * lam) / diag[j]
            max_step = max(max_step, abs(new - w[j]))
            w[j] = new
        if max_step < tol:
            break
    else:
        raise NoConvergence(f"coordinate descent did not converge in {max_sweeps} sweeps")
    w = _polish(cov_xx, cov_xy, w, lam)
    method = UW if isinstance(weights, str) and weights == "uw" else SRM
    return FitReport(LinearModel(w, mean_y - w @ mean_x), ds.n, method, lam=lam)


def empirical_group_error(theta: LinearModel, ds: Dataset, g) -> float:
    """Fraction of group ``g`` misclassified by the rule score > 1/2."""
    idx = ds.group_indices(g)
    if idx.size == 0:
        raise EmptyGroup(f"group {GroupKey(*g)} has no samples", ds.group_counts)
    pred = theta.score(ds.x[idx]) > THRESHOLD
    return float(np.mean(pred != (ds.y[idx] == 1)))


def empirical_group_errors(theta: LinearModel, ds: Dataset) -> dict:
    return {g: empirical_group_error(theta, ds, g) for g in GROUPS}


def empirical_wge(theta: LinearModel, ds: Dataset) -> float:
    return max(empirical_group_errors(theta, ds).values())
