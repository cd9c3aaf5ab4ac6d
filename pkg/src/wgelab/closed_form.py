"""Population-optimal MSE last layers and exact Gaussian group errors.

Every optimal weight vector has the shape ``(1/4) M^{-1} delta`` with ``M``
a covariance plus two rank-one terms, so it is computed with
:func:`~wgelab.numerics.rank_two_update_solve` on a Cholesky factor of the
base covariance.  All intercepts share ``b = 1/2 - w^T (mu(0,T) + mu(1,S)) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import GROUPS, GroupKey
from .errors import DegenerateModel, InvalidAlpha, NotOrthogonal
from .model import (
    GaussianGroupModel,
    check_orthogonality,
    delta_bar,
    group_mean,
    mahalanobis_norms,
)
from .numerics import beta_moments, chol_factor, norm_cdf, rank_two_update_solve, spd_solve

THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine score ``w^T x + b``; predicts class 1 when the score exceeds 1/2."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @property
    def theta(self) -> np.ndarray:
        """Parameters stacked as ``[w..., b]``."""
        return np.append(self.w, self.b)

    def score(self, x):
        return np.asarray(x, dtype=float) @ self.w + self.b

    def predict(self, x):
        return (self.score(x) > THRESHOLD).astype(np.int8)

    def to_dict(self):
        return {"w": self.w.tolist(), "b": self.b}


_KINDS = ("srm", "ds", "uw", "mu")
_ALIASES = {"erm": "srm"}


@dataclass(frozen=True)
class Method:
    """One of SRM (ERM on samples), DS, UW, or MU with a Beta(alpha, alpha) law."""

    kind: str
    alpha: Optional[float] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in _KINDS:
            raise ValueError(f"unknown method {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "mu":
            alpha = 1.0 if self.alpha is None else float(self.alpha)
            if not (np.isfinite(alpha) and alpha > 0):
                raise InvalidAlpha(f"mixup alpha must be positive, got {self.alpha!r}")
            object.__setattr__(self, "alpha", alpha)
        elif self.alpha is not None:
            object.__setattr__(self, "alpha", None)

    @classmethod
    def parse(cls, text, alpha=1.0) -> "Method":
        """Parse ``"ds"``, ``"mu"`` or ``"mu(0.5)"``; plain ``"mu"`` takes ``alpha``."""
        text = text.strip()
        if text.lower().startswith("mu(") and text.endswith(")"):
            return cls("mu", float(text[3:-1]))
        return cls(text, alpha if text.lower() == "mu" else None)

    @property
    def deterministic(self) -> bool:
        """SRM and UW fits use no randomness; DS and MU resample."""
        return self.kind in ("srm", "uw")

    @property
    def label(self) -> str:
        if self.kind == "mu":
            return f"MU({self.alpha:g})"
        return self.kind.upper()

    def __str__(self):
        return self.label


SRM = Method("srm")
DS = Method("ds")
UW = Method("uw")


def MU(alpha=1.0) -> Method:
    return Method("mu", alpha)


def _intercept(w, m):
    return THRESHOLD - 0.5 * w @ (group_mean(m, (0, "T")) + group_mean(m, (1, "S")))


def optimal_ds_uw(m: GaussianGroupModel, direct=False) -> LinearModel:
    """w = (1/4) (Sigma + dc dc^T / 4 + dd dd^T / 4)^{-1} dd, shared by DS and UW.

    ``direct=True`` forms the updated matrix and solves it instead of using
    the rank-two update; both paths give the same answer.
    """
    if direct:
        a = (m.sigma.matrix + 0.25 * np.outer(m.delta_c, m.delta_c)
             + 0.25 * np.outer(m.delta_d, m.delta_d))
        w = 0.25 * spd_solve(a, m.delta_d)
    else:
        # (A + vv^T + uu^T)^{-1} u with u = dd/2 equals 2 w
        w = 0.5 * rank_two_update_solve(m.sigma, m.delta_d / 2, m.delta_c / 2)
    return LinearModel(w, _intercept(w, m))


def optimal_srm(m: GaussianGroupModel) -> LinearModel:
    """w = (1/4) (Sigma + beta dc dc^T + dbar dbar^T / 4)^{-1} dbar, beta = 2 pi0 (1 - 2 pi0)."""
    dbar = delta_bar(m)
    beta = 2.0 * m.pi0 * (1.0 - 2.0 * m.pi0)
    w = 0.5 * rank_two_update_solve(m.sigma, dbar / 2, np.sqrt(beta) * m.delta_c)
    return LinearModel(w, _intercept(w, m))


def optimal_mu(m: GaussianGroupModel, alpha) -> LinearModel:
    """w = (1/4) (2 E[L^2] Sigma + Var(L) dc dc^T + dd dd^T / 4)^{-1} dd, L ~ Beta(alpha, alpha)."""
    mom = beta_moments(alpha)
    base = chol_factor(2.0 * mom.second_moment * m.sigma.matrix)
    w = 0.5 * rank_two_update_solve(base, m.delta_d / 2, np.sqrt(mom.variance) * m.delta_c)
    return LinearModel(w, _intercept(w, m))


def optimal_model(m: GaussianGroupModel, method: Method) -> LinearModel:
    if method.kind == "srm":
        return optimal_srm(m)
    if method.kind in ("ds", "uw"):
        return optimal_ds_uw(m)
    return optimal_mu(m, method.alpha)


def population_moment_fit(m: GaussianGroupModel, weights=None, priors=None) -> LinearModel:
    """Minimise E[c(Y,D) (Y - w^T X - b)^2] by assembling raw weighted moments.

    ``priors`` override the model's group priors (DS uses 1/4 each) and
    ``weights`` give c(y, d) per group (UW uses 1/(4 pi)).  Moments are
    summed group by group from E[X X^T | g] = Sigma + mu mu^T, without any
    of the closed-form simplifications.
    """
    priors = m.priors() if priors is None else {GroupKey(*k): v for k, v in priors.items()}
    weights = {g: 1.0 for g in GROUPS} if weights is None else {GroupKey(*k): v for k, v in weights.items()}
    p = m.dim
    e_c = e_yc = 0.0
    e_xc = np.zeros(p)
    e_xyc = np.zeros(p)
    e_xxc = np.zeros((p, p))
    for g in GROUPS:
        mass = priors[g] * weights[g]
        mu = group_mean(m, g)
        e_c += mass
        e_yc += mass * g.y
        e_xc += mass * mu
        e_xyc += mass * g.y * mu
        e_xxc += mass * (m.sigma.matrix + np.outer(mu, mu))
    mean_x = e_xc / e_c
    mean_y = e_yc / e_c
    cov_xx = e_xxc / e_c - np.outer(mean_x, mean_x)
    cov_xy = e_xyc / e_c - mean_x * mean_y
    w = spd_solve(0.5 * (cov_xx + cov_xx.T), cov_xy)
    return LinearModel(w, mean_y - w @ mean_x)


def population_uw_fit(m: GaussianGroupModel) -> LinearModel:
    return population_moment_fit(m, weights={g: 1.0 / (4.0 * m.prior(g)) for g in GROUPS})


def population_ds_fit(m: GaussianGroupModel) -> LinearModel:
    return population_moment_fit(m, priors={g: 0.25 for g in GROUPS})


def _score_std(theta, m):
    var = float(theta.w @ m.sigma.matrix @ theta.w)
    if not var > 0:
        raise DegenerateModel("w^T Sigma w is zero; the score is constant")
    return np.sqrt(var)


def group_error(theta: LinearModel, m: GaussianGroupModel, g) -> float:
    """Exact misclassification probability of group ``g`` under the 1/2 threshold."""
    g = GroupKey(*g)
    s = _score_std(theta, m)
    margin = theta.w @ group_mean(m, g) + theta.b - THRESHOLD
    return norm_cdf(margin / s if g.y == 0 else -margin / s)


def group_errors(theta: LinearModel, m: GaussianGroupModel) -> dict:
    return {g: group_error(theta, m, g) for g in GROUPS}


def wge(theta: LinearModel, m: GaussianGroupModel) -> float:
    """Worst-group error: the largest of the four group errors."""
    return max(group_errors(theta, m).values())


def c_pi0(m: GaussianGroupModel) -> float:
    """(1 - 4 pi0 + beta dc^T S^-1 dd) / (1 + beta dc^T S^-1 dc), the SRM tilt toward delta_c."""
    t = mahalanobis_norms(m)
    beta = 2.0 * m.pi0 * (1.0 - 2.0 * m.pi0)
    return (1.0 - 4.0 * m.pi0 + beta * t.cross) / (1.0 + beta * t.norm_dc_sq)


def wge_srm_general(m: GaussianGroupModel) -> float:
    """SRM worst-group error from Sigma^{-1} geometry alone (orthogonality not needed)."""
    t = mahalanobis_norms(m)
    c = c_pi0(m)
    denom = 2.0 * np.sqrt(t.norm_dd_sq - 2.0 * c * t.cross + c * c * t.norm_dc_sq)
    minority = ((c - 1.0) * t.cross - t.norm_dd_sq + c * t.norm_dc_sq) / denom
    majority = ((c + 1.0) * t.cross - t.norm_dd_sq - c * t.norm_dc_sq) / denom
    return max(norm_cdf(minority), norm_cdf(majority))


def wge_closed_orthogonal(m: GaussianGroupModel, method: Method, tol=1e-9) -> float:
    """Closed-form optimal WGE when dc^T Sigma^{-1} dd = 0.

    DS, UW and MU all give Phi(-|dd|/2); SRM gives
    Phi((c~|dc|^2 - |dd|^2) / (2 sqrt(|dd|^2 + c~^2 |dc|^2))).
    """
    if not check_orthogonality(m, tol):
        raise NotOrthogonal("delta_c and delta_d are not Sigma^{-1}-orthogonal")
    t = mahalanobis_norms(m)
    if method.kind != "srm":
        return norm_cdf(-np.sqrt(t.norm_dd_sq) / 2.0)
    c = t.c_tilde
    return norm_cdf((-t.norm_dd_sq + c * t.norm_dc_sq)
                    / (2.0 * np.sqrt(t.norm_dd_sq + c * c * t.norm_dc_sq)))
