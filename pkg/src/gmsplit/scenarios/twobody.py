"""Two-body evolution of semi-major axis and mean anomaly ``(a, M)``."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonPositiveSMA
from ..mixture import Gaussian
from ..models import Model, ModelDerivatives

#: gravitational parameter in canonical Earth units (ER³/TU²)
MU_EARTH_CANONICAL = 1.0


def orbital_period(a: float, mu: float = MU_EARTH_CANONICAL) -> float:
    return 2.0 * math.pi * math.sqrt(a**3 / mu)


class TwoBodyModel(Model):
    """``g(a, M) = [a, M + sqrt(μ/a³) t]``; volume preserving for every ``t``."""

    in_dim = 2
    out_dim = 2

    def __init__(self, t: float, mu: float = MU_EARTH_CANONICAL):
        self.t = float(t)
        self.mu = float(mu)

    def _check(self, a):
        if np.any(np.asarray(a) <= 0):
            raise NonPositiveSMA("semi-major axis must be positive")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float).ravel()
        return self.evaluate_many(x[None])[0]

    def evaluate_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        a = xs[:, 0]
        self._check(a)
        return np.column_stack([a, xs[:, 1] + np.sqrt(self.mu / a**3) * self.t])

    def inverse(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        a = z[:, 0]
        self._check(a)
        return np.column_stack([a, z[:, 1] - np.sqrt(self.mu / a**3) * self.t])

    def derivatives(self, x, order=2):
        a, M = np.asarray(x, dtype=float).ravel()
        self._check(a)
        n = math.sqrt(self.mu / a**3)
        dM_da = -1.5 * math.sqrt(self.mu / a**5) * self.t
        jac = np.array([[1.0, 0.0], [dM_da, 1.0]])
        hess = None
        if order >= 2:
            hess = np.zeros((2, 2, 2))
            hess[1, 0, 0] = 3.75 * math.sqrt(self.mu / a**7) * self.t
        return ModelDerivatives([a, M + n * self.t], jac, hess)

    @staticmethod
    def abs_det_jacobian(xs) -> np.ndarray:
        return np.ones(len(np.atleast_2d(xs)))


def twobody_truth_pdf(g: Gaussian, t: float, mu: float = MU_EARTH_CANONICAL):
    """Exact density of ``(a, M)`` at time ``t``: the input density at the pre-image.

    For a diagonal input covariance this is the closed form with normaliser
    ``2π σ_a σ_M``; M is treated on the real line.
    """
    model = TwoBodyModel(t, mu)

    def pdf(z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.zeros(len(z))
        ok = z[:, 0] > 0
        if np.any(ok):
            out[ok] = g.pdf(model.inverse(z[ok]))
        return out

    return pdf
