"""Moment-preserving multivariate splitting and the recursive split operator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DowndateViolation
from .library import UnivariateSplit
from .linalg import directional_reciprocal_precision, rank1_downdate, symmetrize
from .mixture import Gaussian, GaussianMixture
from .models import Model


def split_gaussian(g: Gaussian, direction, u: UnivariateSplit) -> GaussianMixture:
    """Split ``g`` along ``direction`` with the univariate split ``u``.

    The univariate split is applied at the reciprocal precision
    ``s² = 1 / (x̂ᵀ P⁻¹ x̂)``: means go to ``μ + s μ̃_i x̂`` and each covariance is
    ``σ̃_i² P̄`` with ``P̄ = (P - s² Σw̃μ̃² x̂x̂ᵀ) / Σw̃σ̃²``.  Mean and covariance of
    the result equal those of ``g``.
    """
    d = np.asarray(direction, dtype=float).ravel()
    d = d / np.linalg.norm(d)
    if d.size != g.dim:
        raise ValueError(f"direction has length {d.size}, Gaussian has dimension {g.dim}")
    scale2 = directional_reciprocal_precision(g.cov, d)
    scale = math.sqrt(scale2)
    w, mu_t, sig_t = u.weights, u.means, u.sigmas
    alpha = scale2 * float(w @ mu_t**2)
    try:
        pbar = rank1_downdate(g.cov, d, alpha) / float(w @ sig_t**2)
    except DowndateViolation:
        raise DowndateViolation("univariate split is not a valid unit-variance split") from None
    means = g.mean[None, :] + (scale * mu_t)[:, None] * d[None, :]
    covs = (sig_t**2)[:, None, None] * pbar[None]
    return GaussianMixture(w, means, covs)


@dataclass(frozen=True)
class SplitCriterion:
    """Split a mixand while ``w^γ · h^(1-γ) > threshold`` and its depth is below ``max_depth``.

    ``h`` is the heuristic's optimal objective at the mixand mean.  A zero
    threshold is benchmark mode: every mixand is split to ``max_depth``.
    """

    gamma: float = 0.0
    threshold: float = 0.0
    max_depth: int = 1

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")

    @property
    def benchmark(self) -> bool:
        return self.threshold == 0.0

    def value(self, weight: float, objective: float) -> float:
        return weight**self.gamma * max(objective, 0.0) ** (1.0 - self.gamma)


def recursive_split(gm: GaussianMixture, model: Model, heuristic, crit: SplitCriterion,
                    u: UnivariateSplit, sut=None) -> GaussianMixture:
    """Apply the split operator until no mixand meets the criterion.

    Mixands are processed level by level; a split mixand is replaced in place
    by its children (library order), and each child carries its parent's depth
    plus one.  ``heuristic`` is a HeuristicKind/tag or a callable
    ``(model, gaussian) -> DirectionResult``.
    """
    from .heuristics import direction_for

    if crit.max_depth == 0 or math.isinf(crit.threshold):
        return gm
    nodes = [(float(w), g, 0, False) for w, g in gm.components]
    while not all(done for *_, done in nodes):
        nxt = []
        for w, g, depth, done in nodes:
            if done or depth >= crit.max_depth:
                nxt.append((w, g, depth, True))
                continue
            res = direction_for(heuristic, model, g, sut)
            if not crit.benchmark and not crit.value(w, res.objective_value) > crit.threshold:
                nxt.append((w, g, depth, True))
                continue
            child = split_gaussian(g, res.direction, u)
            for wc, gc in child.components:
                nxt.append((w * wc, gc, depth + 1, False))
        nodes = nxt
    weights = np.array([n[0] for n in nodes])
    # renormalise the accumulated products so the sum is 1 to rounding
    weights = weights / weights.sum()
    return GaussianMixture(weights, [n[1].mean for n in nodes], [n[1].cov for n in nodes])


def propagate_linearized(gm: GaussianMixture, model: Model) -> GaussianMixture:
    """Push each mixand through ``g`` by first-order linearization at its mean."""
    means, covs = [], []
    for m, P in zip(gm.means, gm.covs):
        d = model.derivatives(m, order=1)
        means.append(d.value)
        covs.append(symmetrize(d.jacobian @ P @ d.jacobian.T))
    return GaussianMixture(gm.weights, means, covs)
