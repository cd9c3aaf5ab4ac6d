"""Gaussian subpopulation model with parallelogram group means.

The four group means are parameterised as::

    mu(0,T) = mu_base            mu(0,S) = mu_base + delta_c
    mu(1,T) = mu_base + delta_d  mu(1,S) = mu_base + delta_c + delta_d

so the class offset ``delta_d`` is the same in both domains and the domain
offset ``delta_c`` is the same in both classes.  Minority groups (0,T) and
(1,S) have prior ``pi0``; the other two have ``1/2 - pi0``.

Worst-group errors are invariant under shifts of ``mu_base``; only the
optimal intercepts move.  :func:`reference_model` puts ``mu_base`` at the
origin.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import GROUPS, Dataset, GroupKey
from .errors import InvalidModel
from .numerics import SPDMatrix, chol_factor, sample_mvn

SCHEMA_KEYS = ("dim", "mu_base", "delta_c", "delta_d", "sigma", "pi0")


@dataclass(frozen=True, eq=False)
class GaussianGroupModel:
    mu_base: np.ndarray
    delta_c: np.ndarray
    delta_d: np.ndarray
    sigma: SPDMatrix
    pi0: float

    def __post_init__(self):
        vecs = {}
        for name in ("mu_base", "delta_c", "delta_d"):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(v)):
                raise InvalidModel(f"{name} has non-finite entries")
            v.setflags(write=False)
            vecs[name] = v
        p = vecs["mu_base"].shape[0]
        if p == 0 or any(v.shape[0] != p for v in vecs.values()):
            raise InvalidModel("mu_base, delta_c and delta_d must share one positive dimension")
        sigma = chol_factor(self.sigma)
        if sigma.dim != p:
            raise InvalidModel(f"sigma is {sigma.dim}x{sigma.dim}, expected {p}x{p}")
        pi0 = float(self.pi0)
        if not (0.0 < pi0 <= 0.25):
            raise InvalidModel(f"pi0 must lie in (0, 1/4], got {pi0}")
        for name, v in vecs.items():
            object.__setattr__(self, name, v)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "pi0", pi0)

    @classmethod
    def from_means(cls, means, sigma, pi0, tol=1e-9):
        """Build from the four group means, keyed by GroupKey or (y, d).

        The means must form a parallelogram: mu(1,S) - mu(0,S) equal to
        mu(1,T) - mu(0,T) within ``tol`` relative to the largest mean.
        """
        means = {GroupKey(*k): np.asarray(v, dtype=float) for k, v in means.items()}
        if set(means) != set(GROUPS):
            raise InvalidModel("means must be given for all four groups")
        mu_0t, mu_0s = means[GroupKey(0, "T")], means[GroupKey(0, "S")]
        mu_1t, mu_1s = means[GroupKey(1, "T")], means[GroupKey(1, "S")]
        scale = max(1.0, max(np.max(np.abs(v)) for v in means.values()))
        if np.max(np.abs((mu_1s - mu_0s) - (mu_1t - mu_0t))) > tol * scale:
            raise InvalidModel("group means do not form a parallelogram")
        return cls(mu_0t, mu_0s - mu_0t, mu_1t - mu_0t, sigma, pi0)

    @property
    def dim(self) -> int:
        return self.mu_base.shape[0]

    def prior(self, g) -> float:
        g = GroupKey(*g)
        minority = g in (GroupKey(0, "T"), GroupKey(1, "S"))
        return self.pi0 if minority else 0.5 - self.pi0

    def priors(self) -> dict:
        return {g: self.prior(g) for g in GROUPS}

    def means(self) -> dict:
        return {g: group_mean(self, g) for g in GROUPS}

    def replace(self, **changes) -> "GaussianGroupModel":
        return dataclasses.replace(self, **changes)

    def with_pi0(self, pi0) -> "GaussianGroupModel":
        return self.replace(pi0=pi0)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "mu_base": self.mu_base.tolist(),
            "delta_c": self.delta_c.tolist(),
            "delta_d": self.delta_d.tolist(),
            "sigma": self.sigma.matrix.reshape(-1).tolist(),
            "pi0": self.pi0,
        }

    @classmethod
    def from_dict(cls, doc) -> "GaussianGroupModel":
        missing = [k for k in SCHEMA_KEYS if k not in doc]
        if missing:
            raise InvalidModel(f"model document lacks keys: {', '.join(missing)}")
        p = int(doc["dim"])
        sigma = np.asarray(doc["sigma"], dtype=float)
        if sigma.size != p * p:
            raise InvalidModel(f"sigma has {sigma.size} entries, expected {p * p}")
        return cls(doc["mu_base"], doc["delta_c"], doc["delta_d"], sigma.reshape(p, p),
                   doc["pi0"])

    def to_json(self) -> str:
        # json writes floats with repr(), which round-trips float64 exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text) -> "GaussianGroupModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidModel(f"invalid model JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise InvalidModel("model JSON must be an object")
        return cls.from_dict(doc)


def reference_model(pi0=1 / 64, mu_base=(0.0, 0.0)) -> GaussianGroupModel:
    """The orthogonal 2-D geometry used by the synthetic experiments."""
    return GaussianGroupModel(
        mu_base=mu_base,
        delta_c=[0.0, 0.25],
        delta_d=[-0.25, -0.25],
        sigma=[[0.002, 0.002], [0.002, 0.003]],
        pi0=pi0,
    )


def group_mean(m: GaussianGroupModel, g) -> np.ndarray:
    y, d = GroupKey(*g)
    return m.mu_base + (m.delta_c if d == "S" else 0.0) + (m.delta_d if y == 1 else 0.0)


def delta_bar(m: GaussianGroupModel) -> np.ndarray:
    """Class-mean difference mu(1) - mu(0) = delta_d - (1 - 4 pi0) delta_c."""
    return m.delta_d - (1.0 - 4.0 * m.pi0) * m.delta_c


def delta_bar_direct(m: GaussianGroupModel) -> np.ndarray:
    """mu(1) - mu(0) from prior-weighted group means (cross-check path)."""
    class_mean = {}
    for y in (0, 1):
        keys = [GroupKey(y, "S"), GroupKey(y, "T")]
        weights = np.array([m.prior(g) for g in keys])
        class_mean[y] = sum(w * group_mean(m, g) for w, g in zip(weights, keys)) / weights.sum()
    return class_mean[1] - class_mean[0]


class OrthogonalWgeTerms(NamedTuple):
    norm_dc_sq: float
    norm_dd_sq: float
    cross: float
    c_tilde: float


def mahalanobis_norms(m: GaussianGroupModel) -> OrthogonalWgeTerms:
    """Sigma^{-1}-norms of the offsets, their inner product and c_tilde.

    c_tilde = (1 - 4 pi0) / (1 + 2 pi0 (1 - 2 pi0) |delta_c|^2).
    """
    sinv_dc = m.sigma.solve(m.delta_c)
    sinv_dd = m.sigma.solve(m.delta_d)
    norm_dc_sq = float(m.delta_c @ sinv_dc)
    norm_dd_sq = float(m.delta_d @ sinv_dd)
    cross = float(m.delta_c @ sinv_dd)
    beta = 2.0 * m.pi0 * (1.0 - 2.0 * m.pi0)
    c_tilde = (1.0 - 4.0 * m.pi0) / (1.0 + beta * norm_dc_sq)
    return OrthogonalWgeTerms(norm_dc_sq, norm_dd_sq, cross, c_tilde)


def check_orthogonality(m: GaussianGroupModel, tol=1e-9) -> bool:
    t = mahalanobis_norms(m)
    return abs(t.cross) <= tol * np.sqrt(t.norm_dc_sq * t.norm_dd_sq)


def sample_dataset(m: GaussianGroupModel, n, seed) -> Dataset:
    """Draw ``n`` i.i.d. samples: a group per sample, then x ~ N(mu_g, Sigma)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    priors = np.array([m.prior(g) for g in GROUPS])
    code = rng.choice(4, size=n, p=priors / priors.sum())
    means = np.stack([group_mean(m, g) for g in GROUPS])
    x = means[code] + sample_mvn(np.zeros(m.dim), m.sigma, n, rng)
    y = code // 2
    d = np.where(code % 2 == 1, "S", "T")
    return Dataset(x, y, d)
