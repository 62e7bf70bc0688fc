"""Circular restricted three-body flow with first- and second-order sensitivities.

State is ``[x, y, z, vx, vy, vz]`` in the rotating frame, nondimensional
units.  The primaries sit at ``(-μ, 0, 0)`` and ``(1-μ, 0, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import IntegrationFailure
from ..models import Model, ModelDerivatives

EARTH_MOON_MU = 1.0 / (81.30059 + 1.0)
NRHO_STATE = np.array([1.022022, 0.0, -0.182097, 0.0, -0.103256, 0.0])
NRHO_PERIOD = 1.511111

_MIN_RADIUS = 1e-6
_CORIOLIS = np.array([[0.0, 2.0, 0.0], [-2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "DOP853"
    rtol: float = 1e-12
    atol_state: float = 1e-12
    atol_variational: float = 1e-10


@dataclass(frozen=True)
class Cr3bpDerivatives:
    state: np.ndarray
    stm: np.ndarray
    stt: np.ndarray | None


def _rel(pos, mu):
    """Offsets from both primaries (…, 3) and their masses."""
    r1 = pos - np.array([-mu, 0.0, 0.0])
    r2 = pos - np.array([1.0 - mu, 0.0, 0.0])
    return (r1, 1.0 - mu), (r2, mu)


def potential_gradient(pos, mu):
    """Gradient of ``Ū = (1-μ)/r1 + μ/r2 + (x²+y²)/2`` for positions of shape (…, 3)."""
    pos = np.asarray(pos, dtype=float)
    grad = pos * np.array([1.0, 1.0, 0.0])
    for rho, m in _rel(pos, mu):
        r = np.linalg.norm(rho, axis=-1, keepdims=True)
        if np.any(r < _MIN_RADIUS):
            raise IntegrationFailure("trajectory passed through a primary")
        grad = grad - m * rho / r**3
    return grad


def potential_hessian(pos, mu):
    pos = np.asarray(pos, dtype=float)
    out = np.diag([1.0, 1.0, 0.0])
    eye = np.eye(3)
    for rho, m in _rel(pos, mu):
        r = np.linalg.norm(rho)
        out = out + m * (3.0 * np.outer(rho, rho) / r**5 - eye / r**3)
    return out


def potential_third(pos, mu):
    """Third derivatives of Ū (3, 3, 3); only the gravitational terms contribute."""
    pos = np.asarray(pos, dtype=float)
    eye = np.eye(3)
    out = np.zeros((3, 3, 3))
    for rho, m in _rel(pos, mu):
        r = np.linalg.norm(rho)
        sym = (np.einsum("ij,k->ijk", eye, rho) + np.einsum("ik,j->ijk", eye, rho)
               + np.einsum("jk,i->ijk", eye, rho))
        out = out + m * (-15.0 * np.einsum("i,j,k->ijk", rho, rho, rho) / r**7 + 3.0 * sym / r**5)
    return out


def jacobi_constant(state, mu: float = EARTH_MOON_MU) -> float:
    s = np.asarray(state, dtype=float)
    pos, vel = s[:3], s[3:6]
    u = 0.5 * (pos[0] ** 2 + pos[1] ** 2)
    for rho, m in _rel(pos, mu):
        u += m / np.linalg.norm(rho)
    return float(2.0 * u - vel @ vel)


def _rhs_batch(states, mu):
    """Vector field for states of shape (N, 6)."""
    pos, vel = states[:, :3], states[:, 3:]
    acc = potential_gradient(pos, mu) + vel @ _CORIOLIS.T
    return np.hstack([vel, acc])


def _state_jacobian(pos, mu):
    A = np.zeros((6, 6))
    A[:3, 3:] = np.eye(3)
    A[3:, :3] = potential_hessian(pos, mu)
    A[3:, 3:] = _CORIOLIS
    return A


def _variational_rhs(mu, order):
    def rhs(_t, y):
        s = y[:6]
        phi = y[6:42].reshape(6, 6)
        ds = _rhs_batch(s[None], mu)[0]
        A = _state_jacobian(s[:3], mu)
        out = [ds, (A @ phi).ravel()]
        if order >= 2:
            psi = y[42:].reshape(6, 6, 6)
            F2 = np.zeros((6, 6, 6))
            F2[3:, :3, :3] = potential_third(s[:3], mu)
            dpsi = (np.einsum("ij,jab->iab", A, psi)
                    + np.einsum("ijk,ja,kb->iab", F2, phi, phi))
            out.append(dpsi.ravel())
        return np.concatenate(out)

    return rhs


def _solve(fun, t, y0, cfg: IntegratorConfig, atol):
    if t == 0:
        return y0.copy()
    sol = solve_ivp(fun, (0.0, t), y0, method=cfg.method, rtol=cfg.rtol, atol=atol)
    if not sol.success:
        raise IntegrationFailure(f"integration failed: {sol.message}")
    return sol.y[:, -1]


def cr3bp_flow_stt(x0, t: float, mu: float = EARTH_MOON_MU,
                   config: IntegratorConfig | None = None, order: int = 2) -> Cr3bpDerivatives:
    """Flow ``φ_t(x0)``, STM ``Φ`` (6, 6) and, for ``order=2``, the full STT (6, 6, 6)."""
    cfg = config or IntegratorConfig()
    x0 = np.asarray(x0, dtype=float).ravel()
    nvar = 36 + (216 if order >= 2 else 0)
    y0 = np.concatenate([x0, np.eye(6).ravel(), np.zeros(nvar - 36)])
    atol = np.concatenate([np.full(6, cfg.atol_state), np.full(nvar, cfg.atol_variational)])
    y = _solve(_variational_rhs(mu, order), float(t), y0, cfg, atol)
    stm = y[6:42].reshape(6, 6)
    stt = None
    if order >= 2:
        stt = y[42:].reshape(6, 6, 6)
        stt = 0.5 * (stt + np.swapaxes(stt, 1, 2))
    return Cr3bpDerivatives(y[:6], stm, stt)


def propagate_states(states, t: float, mu: float = EARTH_MOON_MU,
                     config: IntegratorConfig | None = None) -> np.ndarray:
    """Propagate a batch (N, 6) of states jointly; the step size is shared by the batch."""
    cfg = config or IntegratorConfig()
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = len(states)
    if n == 0:
        return states.copy()

    def fun(_t, y):
        return _rhs_batch(y.reshape(n, 6), mu).ravel()

    return _solve(fun, float(t), states.ravel(), cfg, cfg.atol_state).reshape(n, 6)


class Cr3bpModel(Model):
    """The time-``t`` flow map; Jacobian and Hessian are the STM and STT."""

    in_dim = 6
    out_dim = 6

    def __init__(self, t: float, mu: float = EARTH_MOON_MU, config: IntegratorConfig | None = None):
        self.t = float(t)
        self.mu = float(mu)
        self.config = config or IntegratorConfig()
        self._cache: dict = {}

    def evaluate(self, x):
        return propagate_states(np.asarray(x, dtype=float)[None], self.t, self.mu, self.config)[0]

    def evaluate_many(self, xs):
        return propagate_states(xs, self.t, self.mu, self.config)

    def derivatives(self, x, order=2):
        x = np.asarray(x, dtype=float).ravel()
        key = (x.tobytes(), order >= 2)
        hit = self._cache.get(key) or self._cache.get((x.tobytes(), True))
        if hit is None:
            hit = cr3bp_flow_stt(x, self.t, self.mu, self.config, order=2 if order >= 2 else 1)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = hit
        return ModelDerivatives(hit.state, hit.stm, hit.stt if order >= 2 else None)
