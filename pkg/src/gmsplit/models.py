"""Nonlinear map interface shared by the heuristics, the splitter and the scenarios."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelDerivatives:
    """Value ``g(x)``, Jacobian ``G`` (m, n) and optional Hessian tensor (m, n, n)."""

    value: np.ndarray
    jacobian: np.ndarray
    hessian: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float).ravel())
        object.__setattr__(self, "jacobian", np.atleast_2d(np.asarray(self.jacobian, dtype=float)))
        if self.hessian is not None:
            h = np.asarray(self.hessian, dtype=float)
            object.__setattr__(self, "hessian", 0.5 * (h + np.swapaxes(h, 1, 2)))


class Model:
    """A map ``g: R^n -> R^m`` with first and second derivatives.

    Subclasses implement :meth:`derivatives`; :meth:`evaluate_many` may be
    overridden with a vectorized version.
    """

    in_dim: int
    out_dim: int

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def evaluate(self, x) -> np.ndarray:
        return self.derivatives(x, order=1).value

    def evaluate_many(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.array([self.evaluate(x) for x in xs])

    def derivatives(self, x, order: int = 2) -> ModelDerivatives:
        raise NotImplementedError


class AffineModel(Model):
    """``g(x) = A x + c``."""

    def __init__(self, A, c=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.out_dim, self.in_dim = self.A.shape
        self.c = np.zeros(self.out_dim) if c is None else np.asarray(c, dtype=float).ravel()

    def evaluate(self, x):
        return self.A @ np.asarray(x, dtype=float).ravel() + self.c

    def evaluate_many(self, xs):
        return np.atleast_2d(xs) @ self.A.T + self.c

    def derivatives(self, x, order=2):
        hess = np.zeros((self.out_dim, self.in_dim, self.in_dim)) if order >= 2 else None
        return ModelDerivatives(self.evaluate(x), self.A.copy(), hess)


class QuadraticModel(Model):
    """``g_i(x) = c_i + b_i·x + ½ xᵀ H_i x``; handy for seeded test instances."""

    def __init__(self, H, B=None, c=None):
        H = np.asarray(H, dtype=float)
        self.H = 0.5 * (H + np.swapaxes(H, 1, 2))
        self.out_dim, self.in_dim = H.shape[0], H.shape[1]
        self.B = np.zeros((self.out_dim, self.in_dim)) if B is None else np.asarray(B, dtype=float)
        self.c = np.zeros(self.out_dim) if c is None else np.asarray(c, dtype=float).ravel()

    def evaluate(self, x):
        x = np.asarray(x, dtype=float).ravel()
        return self.c + self.B @ x + 0.5 * np.einsum("ijk,j,k->i", self.H, x, x)

    def evaluate_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return self.c + xs @ self.B.T + 0.5 * np.einsum("ijk,nj,nk->ni", self.H, xs, xs)

    def derivatives(self, x, order=2):
        x = np.asarray(x, dtype=float).ravel()
        jac = self.B + np.einsum("ijk,k->ij", self.H, x)
        return ModelDerivatives(self.evaluate(x), jac, self.H.copy() if order >= 2 else None)


class FunctionModel(Model):
    """Wrap plain callables ``f``, ``jac`` and optionally ``hess``."""

    def __init__(self, f, jac, hess=None, in_dim=None, out_dim=None):
        self.f, self.jac, self.hess = f, jac, hess
        self.in_dim, self.out_dim = in_dim, out_dim

    def evaluate(self, x):
        return np.atleast_1d(np.asarray(self.f(np.asarray(x, dtype=float)), dtype=float))

    def derivatives(self, x, order=2):
        x = np.asarray(x, dtype=float)
        hess = None
        if order >= 2 and self.hess is not None:
            hess = self.hess(x)
        return ModelDerivatives(self.evaluate(x), self.jac(x), hess)
