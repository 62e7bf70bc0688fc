"""Gaussian and Gaussian-mixture value types with closed-form inner products."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .linalg import cholesky, symmetrize

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).ravel()
        cov = symmetrize(np.atleast_2d(np.array(self.cov, dtype=float)))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def logpdf(self, x) -> np.ndarray:
        return _mvn_logpdf(np.atleast_2d(np.asarray(x, dtype=float)), self.mean, self.cov)

    def pdf(self, x):
        out = np.exp(self.logpdf(x))
        return out if np.ndim(x) > 1 else float(out[0])


def _mvn_logpdf(x, mean, cov) -> np.ndarray:
    """Log density at the rows of ``x``, via a Cholesky solve."""
    L = cholesky(cov)
    d = (x - mean).T
    w = scipy.linalg.solve_triangular(L, d, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", w, w)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return -0.5 * (maha + logdet + mean.size * _LOG_2PI)


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted Gaussian components stored as stacked arrays.

    ``weights`` has shape (K,), ``means`` (K, n) and ``covs`` (K, n, n).
    Weights must be positive and sum to one within 1e-12.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        mu = np.atleast_2d(np.array(self.means, dtype=float))
        P = np.array(self.covs, dtype=float)
        if P.ndim == 2:
            P = P[None]
        if not (w.size == mu.shape[0] == P.shape[0]):
            raise ValueError("weights, means and covs disagree on the component count")
        if w.size == 0:
            raise ValueError("a mixture needs at least one component")
        if P.shape[1:] != (mu.shape[1], mu.shape[1]):
            raise ValueError("covariance blocks do not match the mean dimension")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12 * max(1, w.size):
            raise ValueError(f"mixture weights sum to {w.sum()!r}, not 1")
        P = 0.5 * (P + np.swapaxes(P, 1, 2))
        for a in (w, mu, P):
            a.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covs", P)

    @classmethod
    def from_gaussian(cls, g: Gaussian) -> "GaussianMixture":
        return cls([1.0], g.mean[None], g.cov[None])

    @classmethod
    def from_components(cls, components) -> "GaussianMixture":
        """Build from an iterable of ``(weight, Gaussian)`` pairs."""
        comps = list(components)
        return cls([w for w, _ in comps], [g.mean for _, g in comps], [g.cov for _, g in comps])

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def __len__(self) -> int:
        return self.weights.size

    @property
    def components(self) -> list[tuple[float, Gaussian]]:
        return [(float(w), Gaussian(m, P)) for w, m, P in zip(self.weights, self.means, self.covs)]

    def component_logpdf(self, x) -> np.ndarray:
        """Array (K, N) of ``log w_k + log N(x_i; μ_k, P_k)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"points have dimension {x.shape[1]}, mixture has {self.dim}")
        return np.stack([np.log(w) + _mvn_logpdf(x, m, P)
                         for w, m, P in zip(self.weights, self.means, self.covs)])

    def logpdf(self, x) -> np.ndarray:
        return logsumexp(self.component_logpdf(x), axis=0)

    def pdf(self, x):
        out = np.exp(self.logpdf(x))
        return out if np.ndim(x) > 1 else float(out[0])

    def marginal(self, idx: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Weights, means and standard deviations of the 1-D marginal along ``idx``."""
        return self.weights, self.means[:, idx], np.sqrt(self.covs[:, idx, idx])

    def to_dict(self) -> dict:
        return {"components": [{"weight": float(w), "mean": m.tolist(), "cov": P.tolist()}
                               for w, m, P in zip(self.weights, self.means, self.covs)]}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        comps = d["components"]
        return cls([c["weight"] for c in comps], [c["mean"] for c in comps],
                   [c["cov"] for c in comps])


def pdf(gm: GaussianMixture, x):
    return gm.pdf(x)


def mixture_moments(gm: GaussianMixture) -> tuple[np.ndarray, np.ndarray]:
    """Overall mean ``Σ w μ`` and covariance ``Σ w [(μ-m)(μ-m)ᵀ + P]``."""
    w = gm.weights
    mean = w @ gm.means
    d = gm.means - mean
    cov = np.einsum("k,ki,kj->ij", w, d, d) + np.einsum("k,kij->ij", w, gm.covs)
    return mean, symmetrize(cov)


def gm_inner_product(p: GaussianMixture, q: GaussianMixture) -> float:
    """``∫ p(x) q(x) dx = Σ_ij w_i v_j N(μ_i; ν_j, P_i + Q_j)``."""
    return float(np.exp(log_gm_inner_product(p, q)))


def log_gm_inner_product(p: GaussianMixture, q: GaussianMixture) -> float:
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    terms = []
    for wa, ma, Pa in zip(p.weights, p.means, p.covs):
        for wb, mb, Pb in zip(q.weights, q.means, q.covs):
            terms.append(np.log(wa) + np.log(wb) + _mvn_logpdf(ma[None], mb, Pa + Pb)[0])
    # each term is bitwise symmetric in (p, q); sorting makes the sum symmetric too
    return float(logsumexp(np.sort(terms)))


def save_mixture(gm: GaussianMixture, path) -> None:
    Path(path).write_text(json.dumps(gm.to_dict(), indent=1) + "\n")


def load_mixture(path) -> GaussianMixture:
    return GaussianMixture.from_dict(json.loads(Path(path).read_text()))
