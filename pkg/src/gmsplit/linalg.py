"""Dense SPD linear algebra: Cholesky roots, rank-1 downdates, whitening.

Every routine symmetrizes its matrix argument before factoring, and the lower
Cholesky factor is used wherever a matrix square root is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DowndateViolation, NotPositiveDefinite

PSD_TOL = 1e-12


def symmetrize(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def cholesky(m) -> np.ndarray:
    """Lower-triangular ``L`` with ``m = L @ L.T``.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is not strictly positive.
    """
    m = symmetrize(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        return scipy.linalg.cholesky(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def is_psd(m, tol: float = PSD_TOL) -> bool:
    """True when every eigenvalue is at least ``-tol * trace(m)``."""
    m = symmetrize(m)
    w = np.linalg.eigvalsh(m)
    return bool(w.min() >= -tol * max(abs(np.trace(m)), np.finfo(float).tiny))


def clamp_psd(m, tol: float = PSD_TOL) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol*trace, 0)``; larger negatives raise."""
    m = symmetrize(m)
    w, v = np.linalg.eigh(m)
    floor = -tol * max(abs(np.trace(m)), np.finfo(float).tiny)
    if w.min() < floor:
        raise NotPositiveDefinite(f"eigenvalue {w.min():.3e} below PSD tolerance {floor:.3e}")
    if w.min() >= 0.0:
        return m
    w = np.clip(w, 0.0, None)
    return symmetrize((v * w) @ v.T)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("direction vector is zero")
    return v / nrm


def directional_reciprocal_precision(m, direction) -> float:
    """Return ``1 / (d^T m^{-1} d)`` for the unit vector ``d`` along ``direction``.

    This is the variance of the Gaussian along ``d`` conditioned on the
    orthogonal complement, and never exceeds ``d^T m d``.
    """
    d = _unit(direction)
    L = cholesky(m)
    w = scipy.linalg.solve_triangular(L, d, lower=True, check_finite=False)
    return float(1.0 / (w @ w))


def downdate_threshold(m, v) -> float:
    """Largest ``alpha`` for which ``m - alpha v̂v̂ᵀ`` stays PSD."""
    return directional_reciprocal_precision(m, v)


def rank1_downdate(m, v, alpha: float, slack: float = 1e-12) -> np.ndarray:
    """Return ``m - alpha * v̂ v̂ᵀ`` for the unit vector ``v̂`` along ``v``.

    Raises DowndateViolation when ``alpha`` exceeds the PSD threshold
    ``1 / (v̂ᵀ m⁻¹ v̂)`` by more than a relative ``slack``.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    m = symmetrize(m)
    vhat = _unit(v)
    alpha_star = downdate_threshold(m, vhat)
    if alpha > alpha_star * (1.0 + slack):
        raise DowndateViolation(
            f"alpha={alpha!r} exceeds the PSD threshold {alpha_star!r}")
    return symmetrize(m - alpha * np.outer(vhat, vhat))


def cholesky_downdate(L, x) -> np.ndarray:
    """O(n²) update of a lower Cholesky factor so that ``L' L'ᵀ = L Lᵀ - x xᵀ``.

    Uses hyperbolic rotations column by column.  A boundary-singular result
    (a zero pivot) is allowed; a negative one raises DowndateViolation.
    """
    L = np.array(L, dtype=float, copy=True)
    x = np.array(x, dtype=float, copy=True).ravel()
    n = L.shape[0]
    for k in range(n):
        r2 = L[k, k] ** 2 - x[k] ** 2
        if r2 < -PSD_TOL * max(L[k, k] ** 2, 1.0):
            raise DowndateViolation("downdated factor is not positive semi-definite")
        r = np.sqrt(max(r2, 0.0))
        if L[k, k] == 0.0:
            if x[k] != 0.0:
                raise DowndateViolation("downdate through a zero pivot")
            continue
        c = r / L[k, k]
        s = x[k] / L[k, k]
        L[k, k] = r
        if k + 1 < n:
            if c == 0.0:
                # rank lost at this pivot: the remaining column is determined by x alone
                L[k + 1:, k] = 0.0
                x[k + 1:] = 0.0
                continue
            L[k + 1:, k] = (L[k + 1:, k] - s * x[k + 1:]) / c
            x[k + 1:] = c * x[k + 1:] - s * L[k + 1:, k]
    return L


@dataclass(frozen=True)
class GeneralizedEigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def generalized_sym_eig(a, b) -> GeneralizedEigenSolution:
    """Solve ``a v = λ b v`` for symmetric ``a`` and SPD ``b``.

    Reduces through ``b = L Lᵀ`` to the standard problem on ``L⁻¹ a L⁻ᵀ``.
    Eigenvalues are returned in descending order with ``b``-orthonormal
    eigenvector columns.
    """
    a = symmetrize(a)
    L = cholesky(b)
    tmp = scipy.linalg.solve_triangular(L, a, lower=True, check_finite=False)
    c = scipy.linalg.solve_triangular(L, tmp.T, lower=True, check_finite=False)
    w, y = np.linalg.eigh(symmetrize(c))
    v = scipy.linalg.solve_triangular(L.T, y, lower=False, check_finite=False)
    order = np.argsort(w)[::-1]
    return GeneralizedEigenSolution(eigenvalues=w[order], eigenvectors=v[:, order])


@dataclass(frozen=True)
class Whitening:
    """Pair of maps ``x -> P^{-1/2} x`` and ``y -> P^{1/2} y`` with ``P^{1/2}`` lower Cholesky."""

    sqrt: np.ndarray

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return scipy.linalg.solve_triangular(self.sqrt, x, lower=True, check_finite=False)

    def inverse(self, y) -> np.ndarray:
        return self.sqrt @ np.asarray(y, dtype=float)

    @property
    def forward_matrix(self) -> np.ndarray:
        n = self.sqrt.shape[0]
        return self.forward(np.eye(n))


def whiten(m) -> Whitening:
    return Whitening(sqrt=cholesky(m))


def mahalanobis_sq(x, m) -> float:
    w = whiten(m).forward(np.asarray(x, dtype=float).ravel())
    return float(w @ w)
