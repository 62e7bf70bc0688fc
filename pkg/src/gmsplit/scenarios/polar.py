"""Cartesian to polar coordinate conversion ``(x, y) -> (r, θ)``."""

from __future__ import annotations

import numpy as np

from ..errors import OriginSingularity
from ..mixture import Gaussian
from ..models import Model, ModelDerivatives


class PolarModel(Model):
    """``g(x, y) = [sqrt(x² + y²), atan2(y, x)]`` with θ in (-π, π]."""

    in_dim = 2
    out_dim = 2

    def evaluate(self, x):
        x = np.asarray(x, dtype=float).ravel()
        return self.evaluate_many(x[None])[0]

    def evaluate_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        r = np.hypot(xs[:, 0], xs[:, 1])
        if np.any(r == 0):
            raise OriginSingularity("the polar map is singular at the origin")
        return np.column_stack([r, np.arctan2(xs[:, 1], xs[:, 0])])

    def derivatives(self, x, order=2):
        x0, y0 = np.asarray(x, dtype=float).ravel()
        r2 = x0 * x0 + y0 * y0
        if r2 == 0:
            raise OriginSingularity("the polar map is singular at the origin")
        r = np.sqrt(r2)
        value = np.array([r, np.arctan2(y0, x0)])
        jac = np.array([[x0 / r, y0 / r],
                        [-y0 / r2, x0 / r2]])
        hess = None
        if order >= 2:
            r3, r4 = r2 * r, r2 * r2
            hr = np.array([[y0 * y0, -x0 * y0], [-x0 * y0, x0 * x0]]) / r3
            ht = np.array([[2 * x0 * y0, y0 * y0 - x0 * x0],
                           [y0 * y0 - x0 * x0, -2 * x0 * y0]]) / r4
            hess = np.stack([hr, ht])
        return ModelDerivatives(value, jac, hess)

    @staticmethod
    def inverse(z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return np.column_stack([z[:, 0] * np.cos(z[:, 1]), z[:, 0] * np.sin(z[:, 1])])

    @staticmethod
    def abs_det_jacobian(xs) -> np.ndarray:
        """``|det G| = 1/r``."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return 1.0 / np.hypot(xs[:, 0], xs[:, 1])


def polar_truth_pdf(g: Gaussian):
    """Exact density of ``(r, θ)``: ``N([r cos θ, r sin θ]; μ, P) · r`` on r > 0, θ in (-π, π]."""

    def pdf(z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        r, th = z[:, 0], z[:, 1]
        ok = (r > 0) & (th > -np.pi) & (th <= np.pi)
        out = np.zeros(len(z))
        if np.any(ok):
            out[ok] = g.pdf(PolarModel.inverse(z[ok])) * r[ok]
        return out

    return pdf
