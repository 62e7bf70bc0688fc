"""Second-derivative tensors and the shifted symmetric higher-order power method.

An order-3 tensor ``G`` has shape ``(m, n, n)``: one output index followed by
two (symmetric) input indices, so ``G[i, j, k] = d²g_i / dx_j dx_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _check3(t, n_x: int | None = None) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 3 or t.shape[1] != t.shape[2]:
        raise ValueError(f"expected an (m, n, n) tensor, got shape {t.shape}")
    if n_x is not None and n_x != t.shape[1]:
        raise ValueError(f"vector length {n_x} does not match tensor input dim {t.shape[1]}")
    return t


def contract_vv(t, x) -> np.ndarray:
    """``(G x²)_i = Σ_jk G[i,j,k] x_j x_k``."""
    x = np.asarray(x, dtype=float).ravel()
    t = _check3(t, x.size)
    return np.einsum("ijk,j,k->i", t, x, x)


def contract_v(t, x) -> np.ndarray:
    """``(G x)_ij = Σ_k G[i,j,k] x_k``, the first-order change of the Jacobian along ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    t = _check3(t, x.size)
    return np.einsum("ijk,k->ij", t, x)


def matricize(t) -> np.ndarray:
    """Flatten to an ``(m*n, n)`` matrix, row ``n*i + j`` and column ``k``."""
    t = _check3(t)
    m, n, _ = t.shape
    return t.reshape(m * n, n)


def transform_inputs(t, a) -> np.ndarray:
    """Return ``G[i,p,q] a[p,j] a[q,k]`` (a change of input coordinates ``x = a y``)."""
    t = _check3(t)
    return np.einsum("ipq,pj,qk->ijk", t, a, a)


def transform_outputs(t, b) -> np.ndarray:
    """Return ``b[i,l] G[l,j,k]``."""
    t = _check3(t)
    return np.einsum("il,ljk->ijk", b, t)


def square_tensor(t, metric=None) -> np.ndarray:
    """Fourth-order ``T[i,j,k,l] = Σ_pq G[p,i,j] M[p,q] G[q,k,l]``.

    With ``metric`` the identity (the default), ``T x⁴ = ||G x²||²``.
    """
    t = _check3(t)
    m = t.shape[0]
    if metric is None:
        return np.einsum("pij,pkl->ijkl", t, t)
    metric = np.asarray(metric, dtype=float)
    if metric.shape != (m, m):
        raise ValueError(f"metric shape {metric.shape} does not match output dim {m}")
    return np.einsum("pij,pq,qkl->ijkl", t, metric, t)


def apply4(t4, x) -> float:
    """``T x⁴``."""
    x = np.asarray(x, dtype=float).ravel()
    return float(np.einsum("ijkl,i,j,k,l->", t4, x, x, x, x))


def apply3(t4, x) -> np.ndarray:
    """``(T x³)_i = Σ T[i,j,k,l] x_j x_k x_l``, first index left free."""
    x = np.asarray(x, dtype=float).ravel()
    return np.einsum("ijkl,j,k,l->i", t4, x, x, x)


def symmetrize4(t4) -> np.ndarray:
    from itertools import permutations

    t4 = np.asarray(t4, dtype=float)
    perms = list(permutations(range(4)))
    return sum(np.transpose(t4, p) for p in perms) / len(perms)


def canonical_sign(x) -> np.ndarray:
    """Flip ``x`` so its largest-magnitude entry is positive (directions are axial)."""
    x = np.asarray(x, dtype=float).ravel()
    i = int(np.argmax(np.abs(x)))
    return -x if x[i] < 0 else x


def default_shift(t4) -> float:
    """Conservative SS-HOPM shift: the sum of absolute entries."""
    return float(np.abs(t4).sum())


@dataclass(frozen=True)
class ZEigenPair:
    eigenvalue: float
    eigenvector: np.ndarray
    residual: float
    iterations: int
    converged: bool = True
    history: tuple = field(default=(), repr=False, compare=False)


class NoConvergence(Warning):
    pass


def _hopm_single(t4, x0, eta, tol, max_iter, record):
    x = np.asarray(x0, dtype=float).ravel()
    x = x / np.linalg.norm(x)
    hist = [apply4(t4, x)] if record else None
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        y = apply3(t4, x) + eta * x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        x_new = y / ny
        step = np.linalg.norm(x_new - x)
        x = x_new
        if record:
            hist.append(apply4(t4, x))
        if step < tol:
            converged = True
            break
    lam = apply4(t4, x)
    res = float(np.linalg.norm(apply3(t4, x) - lam * x))
    return ZEigenPair(lam, x, res, k, converged, tuple(hist) if record else ())


def sshopm(t4, guesses, tol: float = 1e-10, max_iter: int = 5000,
           eta: float | None = None, record: bool = False) -> ZEigenPair:
    """Largest Z-eigenpair reached from a list of starting guesses.

    Iterates ``x <- (T x³ + η x) / ||T x³ + η x||`` from each guess until the
    iterate moves less than ``tol``.  The pair with the largest eigenvalue
    ``λ = T x⁴`` among converged runs is returned (ties keep the earliest
    guess).  If no run converges, the best partial result is returned with
    ``converged=False``.

    ``T`` need not be fully symmetric, only invariant under the permutations
    that can bring any index to the front (as a squared tensor is).
    """
    t4 = np.asarray(t4, dtype=float)
    guesses = [np.asarray(g, dtype=float) for g in guesses]
    if not guesses:
        raise ValueError("at least one initial guess is required")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if eta is None:
        eta = default_shift(t4)
    runs = [_hopm_single(t4, g, eta, tol, max_iter, record) for g in guesses]
    pool = [r for r in runs if r.converged] or runs
    best = pool[0]
    for r in pool[1:]:
        if r.eigenvalue > best.eigenvalue:
            best = r
    return ZEigenPair(best.eigenvalue, canonical_sign(best.eigenvector), best.residual,
                      best.iterations, best.converged, best.history)


def sphere_guesses(n: int, count: int = 8, seed: int = 0) -> list[np.ndarray]:
    """Seeded uniformly distributed unit vectors."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n))
    return list(g / np.linalg.norm(g, axis=1, keepdims=True))
