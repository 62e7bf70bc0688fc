"""Splitting-direction heuristics.

Every heuristic maximises an objective over either the unit sphere or the
1-sigma input ellipsoid ``xᵀ Px⁻¹ x = 1``.  Ellipsoid-constrained problems are
solved in whitened input coordinates ``x = Lx y`` (``Lx`` the lower Cholesky
factor of ``Px``) and mapped back; the returned direction is always a unit
vector in the original coordinates, sign-canonicalised.  Output-whitened
("W") kinds measure outputs in the norm of the linearly predicted precision
``(G Px Gᵀ)⁻¹``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import MissingHessian, MissingModel, NotPositiveDefinite, SingularOutputCovariance
from .linalg import cholesky, clamp_psd, symmetrize
from .mixture import Gaussian
from .models import Model, ModelDerivatives
from .tensor import (canonical_sign, matricize, sphere_guesses, square_tensor, sshopm,
                     transform_inputs, transform_outputs)


class HeuristicKind(str, Enum):
    MAXVAR = "maxvar"
    FOS = "fos"
    SOS = "sos"
    SOLC = "solc"
    SADL = "sadl"
    USFOS = "usfos"
    USSOLC = "ussolc"
    SAFOS = "safos"
    SASOS = "sasos"
    WUSSOS = "wussos"
    WUSSOLC = "wussolc"
    WUSSADL = "wussadl"
    WSASOS = "wsasos"
    ALODT = "alodt"

    @property
    def needs_hessian(self) -> bool:
        return self in _HESSIAN_KINDS

    @property
    def needs_model(self) -> bool:
        return self in _SIGMA_KINDS

    @property
    def output_whitened(self) -> bool:
        return self.value.startswith("w")


_HESSIAN_KINDS = frozenset({HeuristicKind.SOS, HeuristicKind.SOLC, HeuristicKind.USSOLC,
                            HeuristicKind.SASOS, HeuristicKind.WUSSOS, HeuristicKind.WUSSOLC,
                            HeuristicKind.WSASOS})
_SIGMA_KINDS = frozenset({HeuristicKind.SADL, HeuristicKind.WUSSADL, HeuristicKind.ALODT})

ALL_KINDS = tuple(HeuristicKind)


@dataclass(frozen=True)
class SutConfig:
    alpha: float = 0.5
    beta: float = 2.0
    kappa: float = 0.0


@dataclass(frozen=True)
class DirectionResult:
    direction: np.ndarray
    objective_value: float
    diagnostics: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# sigma points and statistical linearization


def sut_sigma_points(g: Gaussian, alpha: float = 0.5, beta: float = 2.0, kappa: float = 0.0):
    """Scaled unscented transform points and weights.

    Returns ``(points, wm, wc)`` with ``points`` of shape (2n+1, n); the first
    point is the mean, followed by ``μ + c L_i`` then ``μ - c L_i`` with
    ``c = sqrt(n + λ)``, ``λ = α²(n + κ) - n``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = g.dim
    lam = alpha**2 * (n + kappa) - n
    c2 = n + lam
    if c2 <= 0:
        raise ValueError("n + lambda must be positive")
    L = cholesky(g.cov)
    offs = np.sqrt(c2) * L.T
    points = np.vstack([g.mean, g.mean + offs, g.mean - offs])
    wm = np.full(2 * n + 1, 0.5 / c2)
    wc = wm.copy()
    wm[0] = lam / c2
    wc[0] = lam / c2 + (1.0 - alpha**2 + beta)
    return points, wm, wc


@dataclass(frozen=True)
class StatisticalLinearization:
    G_sl: np.ndarray
    b: np.ndarray
    Pe: np.ndarray
    Pz: np.ndarray
    Pxz: np.ndarray
    mean_z: np.ndarray


def statistical_linearization(model: Model, g: Gaussian, sut: SutConfig | None = None
                              ) -> StatisticalLinearization:
    """Affine fit ``g(x) ≈ G_SL x + b`` minimising mean squared error over SUT points."""
    sut = sut or SutConfig()
    pts, wm, wc = sut_sigma_points(g, sut.alpha, sut.beta, sut.kappa)
    z = model.evaluate_many(pts)
    mean_z = wm @ z
    dz = z - mean_z
    dx = pts - g.mean
    Pz = symmetrize(np.einsum("k,ki,kj->ij", wc, dz, dz))
    Pxz = np.einsum("k,ki,kj->ij", wc, dx, dz)
    L = cholesky(g.cov)
    G_sl = scipy.linalg.cho_solve((L, True), Pxz).T
    b = mean_z - G_sl @ g.mean
    Pe = Pz - G_sl @ g.cov @ G_sl.T
    try:
        Pe = clamp_psd(Pe, 1e-10)
    except NotPositiveDefinite:
        Pe = symmetrize(Pe)
    return StatisticalLinearization(G_sl, b, Pe, Pz, Pxz, mean_z)


# ---------------------------------------------------------------------------
# helpers


def _top_right_singular(A) -> tuple[float, np.ndarray]:
    _, s, vt = np.linalg.svd(np.atleast_2d(A), full_matrices=False)
    return float(s[0]), vt[0]


def _top_eig(Q) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(symmetrize(Q))
    return float(w[-1]), v[:, -1]


def _ellipsoid_to_unit(Lx, y) -> np.ndarray:
    x = Lx @ y
    return canonical_sign(x / np.linalg.norm(x))


def output_sqrt(G, Px) -> np.ndarray:
    """Lower Cholesky factor of the linearly predicted output covariance ``G Px Gᵀ``."""
    G = np.atleast_2d(G)
    Pz = symmetrize(G @ Px @ G.T)
    try:
        Lz = cholesky(Pz)
    except NotPositiveDefinite:
        raise SingularOutputCovariance(
            "G Px Gᵀ is singular; output whitening needs an invertible Jacobian") from None
    if np.linalg.cond(Lz) > 1e14:
        raise SingularOutputCovariance("G Px Gᵀ is numerically singular")
    return Lz


def _whiten_rows(Lz, A) -> np.ndarray:
    """``Lz⁻¹ A`` for a matrix, or along the output index of an (m, n, n) tensor."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        return scipy.linalg.solve_triangular(Lz, A, lower=True, check_finite=False)
    m = A.shape[0]
    flat = scipy.linalg.solve_triangular(Lz, A.reshape(m, -1), lower=True, check_finite=False)
    return flat.reshape(A.shape)


@lru_cache(maxsize=None)
def _pairings(items: tuple) -> tuple:
    if not items:
        return ((),)
    first, rest = items[0], items[1:]
    out = []
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _pairings(remaining):
            out.append(((first, other),) + tail)
    return tuple(out)


def isserlis_quadratic_form(t4, P) -> np.ndarray:
    """``Q_ab = Σ over the 15 pairings of (a,b,c,d,e,f)`` of ``Π P[pair] · T_cdef``.

    For ``u ~ N(0, P)`` this gives ``xᵀ Q x = E[(uᵀx)² T u⁴]``; it equals
    ``15 ×`` the contraction with the fully symmetrised ``P ⊗ P ⊗ P``.
    """
    letters = "abcdef"
    Q = np.zeros_like(P)
    for pairing in _pairings(tuple(range(6))):
        subs = ",".join(letters[i] + letters[j] for i, j in pairing)
        Q += np.einsum(f"cdef,{subs}->ab", t4, P, P, P)
    return symmetrize(Q)


def _need_hessian(d: ModelDerivatives, kind: HeuristicKind):
    if d.hessian is None:
        raise MissingHessian(f"heuristic {kind.value} needs the second-derivative tensor")
    return d.hessian


# ---------------------------------------------------------------------------
# the heuristics


def alodt_direction(model: Model, g: Gaussian, sut: SutConfig | None = None) -> DirectionResult:
    """Principal axis whose ± sigma pair deviates most from an affine fit.

    The deviation on axis ``k`` is ``||g(χ⁺) + g(χ⁻) - 2 g(μ)||``.  Axes whose
    scores tie with the maximum (to 1e-10 of the sample scale) fall back to the
    largest variance among them.
    """
    sut = sut or SutConfig()
    n = g.dim
    lam = sut.alpha**2 * (n + sut.kappa) - n
    c = np.sqrt(n + lam)
    evals, evecs = np.linalg.eigh(g.cov)
    evals = np.clip(evals, 0.0, None)
    offs = (c * np.sqrt(evals))[None, :] * evecs
    pts = np.vstack([g.mean, g.mean + offs.T, g.mean - offs.T])
    z = model.evaluate_many(pts)
    z0, zp, zm = z[0], z[1:n + 1], z[n + 1:]
    scores = np.linalg.norm(zp + zm - 2.0 * z0, axis=1)
    scale = np.max(np.linalg.norm(zp - z0, axis=1) + np.linalg.norm(zm - z0, axis=1))
    tied = np.flatnonzero(scores >= scores.max() - 1e-10 * max(scale, 1e-300))
    k = int(tied[np.argmax(evals[tied])])
    return DirectionResult(canonical_sign(evecs[:, k]), float(scores[k]),
                           {"scores": scores, "variances": evals})


def split_direction(kind, d: ModelDerivatives, g: Gaussian, model: Model | None = None,
                    sut: SutConfig | None = None, sos_restarts: int = 8,
                    sos_seed: int = 0) -> DirectionResult:
    """Direction maximising the objective of ``kind`` at the mean of ``g``."""
    kind = HeuristicKind(kind)
    G = np.atleast_2d(d.jacobian)
    Px = g.cov
    if kind.needs_model and model is None:
        raise MissingModel(f"heuristic {kind.value} evaluates the model at sigma points")

    if kind is HeuristicKind.MAXVAR:
        lam, v = _top_eig(Px)
        return DirectionResult(canonical_sign(v), float(np.sqrt(max(lam, 0.0))))

    if kind is HeuristicKind.ALODT:
        return alodt_direction(model, g, sut)

    if kind is HeuristicKind.FOS:
        s, v = _top_right_singular(G)
        return DirectionResult(canonical_sign(v), s)

    if kind is HeuristicKind.SOLC:
        s, v = _top_right_singular(matricize(_need_hessian(d, kind)))
        return DirectionResult(canonical_sign(v), s)

    if kind is HeuristicKind.SOS:
        H = _need_hessian(d, kind)
        _, v0 = _top_right_singular(G)
        guesses = [v0] + sphere_guesses(g.dim, sos_restarts, sos_seed)
        pair = sshopm(square_tensor(H), guesses)
        return DirectionResult(pair.eigenvector, float(np.sqrt(max(pair.eigenvalue, 0.0))),
                               _pair_diag(pair))

    if kind is HeuristicKind.SAFOS:
        GtG = G.T @ G
        Q = np.trace(GtG @ Px) * Px + 2.0 * Px @ GtG @ Px
        lam, v = _top_eig(Q)
        return DirectionResult(canonical_sign(v), lam)

    if kind is HeuristicKind.SASOS:
        Q = isserlis_quadratic_form(square_tensor(_need_hessian(d, kind)), Px)
        lam, v = _top_eig(Q)
        return DirectionResult(canonical_sign(v), lam)

    if kind is HeuristicKind.SADL:
        sl = statistical_linearization(model, g, sut)
        s, v = _top_right_singular(sl.G_sl - G)
        return DirectionResult(canonical_sign(v), s, {"G_sl": sl.G_sl})

    Lx = cholesky(Px)

    if kind is HeuristicKind.USFOS:
        s, y = _top_right_singular(G @ Lx)
        return DirectionResult(_ellipsoid_to_unit(Lx, y), s)

    if kind is HeuristicKind.USSOLC:
        s, y = _top_right_singular(matricize(_need_hessian(d, kind)) @ Lx)
        return DirectionResult(_ellipsoid_to_unit(Lx, y), s)

    # output-whitened kinds
    if kind is HeuristicKind.WSASOS:
        H = _need_hessian(d, kind)
        Lz = output_sqrt(G, Px)
        Q = isserlis_quadratic_form(square_tensor(_whiten_rows(Lz, H)), Px)
        lam, v = _top_eig(Q)
        return DirectionResult(canonical_sign(v), lam)

    if kind is HeuristicKind.WUSSOS:
        H = _need_hessian(d, kind)
        Lz = output_sqrt(G, Px)
        Hw = transform_inputs(_whiten_rows(Lz, H), Lx)
        _, y0 = _top_right_singular(G @ Lx)
        guesses = [y0] + sphere_guesses(g.dim, sos_restarts, sos_seed)
        pair = sshopm(square_tensor(Hw), guesses)
        return DirectionResult(_ellipsoid_to_unit(Lx, pair.eigenvector),
                               float(np.sqrt(max(pair.eigenvalue, 0.0))), _pair_diag(pair))

    if kind is HeuristicKind.WUSSOLC:
        H = _need_hessian(d, kind)
        Lz = output_sqrt(G, Px)
        Hw = transform_inputs(_whiten_rows(Lz, H), Lx)
        s, y = _top_right_singular(matricize(Hw))
        n, m = g.dim, G.shape[0]
        return DirectionResult(_ellipsoid_to_unit(Lx, y), s**2,
                               {"normalized": s**2 / min(n, m)})

    if kind is HeuristicKind.WUSSADL:
        Lz = output_sqrt(G, Px)
        sl = statistical_linearization(model, g, sut)
        s, y = _top_right_singular(_whiten_rows(Lz, sl.G_sl - G) @ Lx)
        return DirectionResult(_ellipsoid_to_unit(Lx, y), s, {"G_sl": sl.G_sl})

    raise ValueError(f"unhandled heuristic {kind}")  # pragma: no cover


def _pair_diag(pair) -> dict:
    return {"iterations": pair.iterations, "residual": pair.residual,
            "converged": pair.converged, "z_eigenvalue": pair.eigenvalue}


def direction_for(heuristic, model: Model, g: Gaussian, sut: SutConfig | None = None
                  ) -> DirectionResult:
    """Evaluate the derivatives ``heuristic`` needs at ``g.mean`` and pick a direction."""
    if callable(heuristic) and not isinstance(heuristic, (str, HeuristicKind)):
        return heuristic(model, g)
    kind = HeuristicKind(heuristic)
    if kind is HeuristicKind.MAXVAR:
        d = ModelDerivatives(np.zeros(1), np.zeros((1, g.dim)))
    else:
        d = model.derivatives(g.mean, order=2 if kind.needs_hessian else 1)
    return split_direction(kind, d, g, model=model, sut=sut)


def whitened_first_order_stretch(G, Px, x) -> float:
    """``||G x||`` in the ``(G Px Gᵀ)⁻¹`` norm; constant on the 1-sigma input ellipsoid."""
    Lz = output_sqrt(G, Px)
    w = _whiten_rows(Lz, np.atleast_2d(G) @ np.asarray(x, dtype=float).reshape(-1, 1))
    return float(np.linalg.norm(w))
