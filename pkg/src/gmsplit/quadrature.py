"""Adaptive tensor-product Gauss-Legendre cubature on boxes."""

from __future__ import annotations

import numpy as np

from .errors import QuadratureFailure

_ORDER = 12
_BATCH_POINTS = 200_000


def _rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _cell_points(lo, width, nodes):
    """Quadrature nodes (C, q^d, d) for cells with lower corners ``lo`` and sizes ``width``."""
    d = lo.shape[1]
    grids = np.meshgrid(*([nodes] * d), indexing="ij")
    unit = np.stack([g.ravel() for g in grids], axis=1)
    return lo[:, None, :] + unit[None, :, :] * width[:, None, :]


def _cell_weights(weights, d):
    grids = np.meshgrid(*([weights] * d), indexing="ij")
    return np.prod(np.stack([g.ravel() for g in grids], axis=1), axis=1)


def adaptive_gauss_legendre(f, lower, upper, rtol: float = 1e-6, atol: float = 0.0,
                            initial: int = 4, max_cells: int = 200_000,
                            order: int = _ORDER, breaks=None) -> float:
    """Integrate a vectorized ``f: (N, d) -> (N,)`` over the box ``[lower, upper]``.

    Each cell is compared against the sum over its ``2^d`` children; cells
    whose local discrepancy is below their share of the tolerance are
    accepted at the refined value, the rest are subdivided.  ``breaks`` is an
    optional per-dimension list of coordinates added to the initial grid, so
    that known discontinuities fall on cell faces.  Raises QuadratureFailure
    when the cell budget runs out.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = lower.size
    nodes, weights = _rule(order)
    wq = _cell_weights(weights, d)
    corners = np.stack(np.meshgrid(*([[0.0, 0.5]] * d), indexing="ij"), -1).reshape(-1, d)

    def integrate(lo, width):
        out = np.empty(len(lo))
        step = max(1, _BATCH_POINTS // len(wq))
        for s in range(0, len(lo), step):
            pts = _cell_points(lo[s:s + step], width[s:s + step], nodes)
            vals = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(len(pts), -1)
            out[s:s + step] = vals @ wq * np.prod(width[s:s + step], axis=1)
        return out

    def children(lo, width):
        clo = (lo[:, None, :] + corners[None] * width[:, None, :]).reshape(-1, d)
        cw = np.repeat(width / 2.0, len(corners), axis=0)
        return clo, cw

    edges = []
    for k, (a, b) in enumerate(zip(lower, upper)):
        e = np.linspace(a, b, initial + 1)
        if breaks is not None and breaks[k]:
            inner = [v for v in breaks[k] if a < v < b]
            e = np.unique(np.concatenate([e, inner]))
        edges.append(e)
    grid = np.meshgrid(*[e[:-1] for e in edges], indexing="ij")
    wgrid = np.meshgrid(*[np.diff(e) for e in edges], indexing="ij")
    lo = np.stack([g.ravel() for g in grid], axis=1)
    width = np.stack([g.ravel() for g in wgrid], axis=1)
    box_volume = float(np.prod(upper - lower))

    coarse = integrate(lo, width)
    accepted = 0.0
    total_cells = len(lo)
    while len(lo):
        clo, cw = children(lo, width)
        fine_children = integrate(clo, cw)
        fine = fine_children.reshape(len(lo), -1).sum(axis=1)
        estimate = accepted + fine.sum()
        tol = max(rtol * abs(estimate), atol)
        share = tol * np.prod(width, axis=1) / box_volume
        ok = np.abs(fine - coarse) <= share
        accepted += fine[ok].sum()
        keep = np.repeat(~ok, len(corners))
        lo, width, coarse = clo[keep], cw[keep], fine_children[keep]
        total_cells += len(lo)
        if total_cells > max_cells:
            raise QuadratureFailure(
                f"cubature did not reach rtol={rtol} within {max_cells} cells")
    return float(accepted)
