"""Approximation-quality metrics between a Gaussian mixture and a truth distribution."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import logsumexp, ndtr

from .linalg import cholesky, symmetrize
from .mixture import GaussianMixture, gm_inner_product, mixture_moments


def nise(p: GaussianMixture, truth) -> float:
    """Normalised integral squared error ``∫(p - q)² / (∫p² + ∫q²)``, in [0, 1].

    ``truth`` is either a GaussianMixture (closed form) or an object with
    ``self_energy()`` and ``cross(p)`` methods, such as a pull-back truth.
    """
    pp = gm_inner_product(p, p)
    if isinstance(truth, GaussianMixture):
        qq = gm_inner_product(truth, truth)
        pq = gm_inner_product(p, truth)
    else:
        qq = truth.self_energy()
        pq = truth.cross(p)
    denom = pp + qq
    val = (pp + qq - 2.0 * pq) / denom
    return float(min(max(val, 0.0), 1.0))


def _mixture_cdf(w, mu, sd, z):
    return ndtr((z[:, None] - mu[None, :]) / sd[None, :]) @ w


def cvm_marginals(p: GaussianMixture, samples) -> np.ndarray:
    """Cramér-von Mises ``ω²`` of each output marginal against the samples."""
    z = np.atleast_2d(np.asarray(samples, dtype=float))
    n = z.shape[0]
    if n < 1:
        raise ValueError("need at least one sample")
    if z.shape[1] != p.dim:
        raise ValueError(f"samples have dimension {z.shape[1]}, mixture has {p.dim}")
    target = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    out = np.empty(p.dim)
    for j in range(p.dim):
        w, mu, sd = p.marginal(j)
        F = _mixture_cdf(w, mu, sd, np.sort(z[:, j]))
        out[j] = 1.0 / (12.0 * n * n) + np.sum((target - F) ** 2) / n
    return out


def cvm_norm(p: GaussianMixture, samples) -> float:
    """Euclidean norm of the per-marginal Cramér-von Mises statistics."""
    return float(np.linalg.norm(cvm_marginals(p, samples)))


def madem(p_mean, truth_mean, norm_cov) -> float:
    """Mahalanobis length of the mean error under ``norm_cov``."""
    d = np.asarray(p_mean, dtype=float).ravel() - np.asarray(truth_mean, dtype=float).ravel()
    L = cholesky(norm_cov)
    w = scipy.linalg.solve_triangular(L, d, lower=True)
    return float(np.sqrt(w @ w))


def covariance_ratios(p_cov, truth_cov) -> np.ndarray:
    """Squared singular values of ``P^{-1/2} P'^{1/2}``: the generalized eigenvalues of ``(P', P)``."""
    Lp = cholesky(p_cov)
    Lt = cholesky(truth_cov)
    M = scipy.linalg.solve_triangular(Lp, Lt, lower=True)
    return np.linalg.svd(M, compute_uv=False) ** 2


def mcr(p_cov, truth_cov) -> float:
    """Maximal covariance ratio ``max(max λ, 1/min λ)``, on squared axis ratios."""
    lam = covariance_ratios(p_cov, truth_cov)
    return float(max(lam.max(), 1.0 / lam.min()))


def elk(p: GaussianMixture, samples) -> float:
    """Sample estimate of ``∫ p q``: the mean of ``p`` over samples drawn from ``q``."""
    z = np.atleast_2d(np.asarray(samples, dtype=float))
    if z.shape[0] < 1:
        raise ValueError("need at least one sample")
    lp = p.logpdf(z)
    return float(math.exp(logsumexp(np.sort(lp)) - math.log(z.shape[0])))


def sample_moments(samples) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(samples, dtype=float)
    return z.mean(axis=0), symmetrize(np.cov(z, rowvar=False))


@dataclass
class MetricReport:
    scenario: str
    method: str
    nise: float | None = None
    elk: float | None = None
    madem: float | None = None
    mcr: float | None = None
    cvm_norm: float | None = None
    samples: int = 0
    error: str | None = None
    extra: dict = field(default_factory=dict)


def sample_metrics(p: GaussianMixture, samples, madem_cov: str = "approx",
                   linear_cov=None) -> dict:
    """ELK, MaDEM, MCR and CvM norm of ``p`` against Monte Carlo samples.

    ``madem_cov`` picks the covariance inducing the MaDEM norm: the mixture's
    own (``approx``), the linearly propagated one (``linear``, pass
    ``linear_cov``) or the sample covariance (``mc``).
    """
    mean, cov = mixture_moments(p)
    t_mean, t_cov = sample_moments(samples)
    norm = {"approx": cov, "linear": linear_cov, "mc": t_cov}[madem_cov]
    if norm is None:
        raise ValueError("madem_cov='linear' needs linear_cov")
    return {"elk": elk(p, samples), "madem": madem(mean, t_mean, norm),
            "mcr": mcr(cov, t_cov), "cvm_norm": cvm_norm(p, samples)}


ERROR_SENTINEL = "ERROR"


def _fmt(v) -> str:
    if v is None:
        return ""
    return format(float(v), ".12g")


def nise_table(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "NISE"])
    for r in reports:
        w.writerow([r.method, ERROR_SENTINEL if r.error else _fmt(r.nise)])
    return buf.getvalue()


def sample_table(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "ELK", "MaDEM", "MCR", "CvMnorm"])
    for r in reports:
        if r.error:
            w.writerow([r.method] + [ERROR_SENTINEL] * 4)
        else:
            w.writerow([r.method, _fmt(r.elk), _fmt(r.madem), _fmt(r.mcr), _fmt(r.cvm_norm)])
    return buf.getvalue()
