"""Numerical kernels: SPD factorisation and solves, the normal CDF, samplers.

Everything runs in float64.  Samplers take a ``seed`` that may be an int,
a :class:`numpy.random.SeedSequence` or a :class:`numpy.random.Generator`;
passing a Generator advances its state, the other two are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.special import expit, ndtr

from .errors import InvalidAlpha, NotSPD

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SPDMatrix:
    """A symmetric positive definite matrix with its lower Cholesky factor."""

    matrix: np.ndarray
    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs):
        return scipy.linalg.cho_solve((self.lower, True), np.asarray(rhs, dtype=float),
                                      check_finite=False)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def chol_factor(m) -> SPDMatrix:
    """Factor ``m`` as L L^T.

    Raises NotSPD if ``m`` is not symmetric (relative tolerance 1e-12) or
    any Cholesky pivot L_ii^2 falls at or below 1e-12 times the largest
    diagonal entry.
    """
    if isinstance(m, SPDMatrix):
        return m
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSPD(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotSPD("matrix has non-finite entries")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotSPD("matrix is not symmetric")
    m = 0.5 * (m + m.T)
    max_diag = np.max(np.diag(m))
    if max_diag <= 0:
        raise NotSPD("matrix has no positive diagonal entry")
    try:
        lower = scipy.linalg.cholesky(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotSPD(str(exc)) from None
    pivots = np.diag(lower) ** 2
    if np.any(pivots <= PIVOT_RTOL * max_diag):
        raise NotSPD(f"Cholesky pivot {pivots.min():.3g} below tolerance")
    m.setflags(write=False)
    lower.setflags(write=False)
    return SPDMatrix(m, lower)


def spd_solve(a, rhs) -> np.ndarray:
    """Solve ``a @ x = rhs`` for SPD ``a`` (factored on the fly if needed)."""
    return chol_factor(a).solve(rhs)


def norm_cdf(z):
    """Standard normal CDF, accurate in both tails (Cephes ``ndtr``)."""
    out = ndtr(np.asarray(z, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def rank_two_update_solve(a, u, v, return_terms=False):
    """Return ``(A + v v^T + u u^T)^{-1} u`` without forming the update.

    Two Sherman-Morrison steps, B = A + v v^T first::

        c_v = v^T A^{-1} u / (1 + v^T A^{-1} v)
        B^{-1} u = A^{-1} u - c_v A^{-1} v
        c_u = 1 / (1 + u^T B^{-1} u)
        result = c_u B^{-1} u

    With ``return_terms=True`` the tuple ``(result, c_u, c_v)`` is returned.
    """
    a = chol_factor(a)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    a_inv_u = a.solve(u)
    a_inv_v = a.solve(v)
    c_v = (v @ a_inv_u) / (1.0 + v @ a_inv_v)
    b_inv_u = a_inv_u - c_v * a_inv_v
    c_u = 1.0 / (1.0 + u @ b_inv_u)
    result = c_u * b_inv_u
    if return_terms:
        return result, float(c_u), float(c_v)
    return result


def sample_mvn(mean, cov, n, seed) -> np.ndarray:
    """Draw ``n`` rows from N(mean, cov); returns an (n, p) array."""
    cov = chol_factor(cov)
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (cov.dim,):
        raise ValueError(f"mean has shape {mean.shape}, covariance is {cov.dim}x{cov.dim}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((int(n), cov.dim))
    return mean + z @ cov.lower.T


def _check_alpha(alpha):
    if not (np.isfinite(alpha) and alpha > 0):
        raise InvalidAlpha(f"alpha must be a positive finite number, got {alpha!r}")


def _log_gamma_draws(rng, shape, size):
    # G(a) = G(a+1) * U^(1/a) in log space; stays finite for tiny a
    if shape >= 1:
        return np.log(rng.standard_gamma(shape, size))
    g = rng.standard_gamma(shape + 1.0, size)
    return np.log(g) + np.log(rng.random(size)) / shape


def sample_beta_symmetric(alpha, n, seed) -> np.ndarray:
    """Draw ``n`` values from Beta(alpha, alpha) as a ratio of two Gammas."""
    _check_alpha(alpha)
    rng = np.random.default_rng(seed)
    log_g1 = _log_gamma_draws(rng, alpha, int(n))
    log_g2 = _log_gamma_draws(rng, alpha, int(n))
    return expit(log_g1 - log_g2)


class BetaMoments(NamedTuple):
    mean: float
    variance: float
    second_moment: float


def beta_moments(alpha) -> BetaMoments:
    """Mean, variance and E[L^2] of L ~ Beta(alpha, alpha)."""
    _check_alpha(alpha)
    variance = 1.0 / (4.0 * (2.0 * alpha + 1.0))
    return BetaMoments(0.5, variance, variance + 0.25)
