"""Univariate standard-normal split library.

Each entry replaces ``N(0, 1)`` by a homoscedastic mixture with equally spaced,
symmetric means whose overall variance is exactly one.  Entries minimise the
L2 distance to the standard normal plus ``lambda`` times the mean component
variance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import Infeasible, InvariantViolation, ParseError
from .mixture import GaussianMixture, gm_inner_product

FORMAT_TAG = "gmsplit-univariate-split-library"
_SELF_ENERGY_STD = 1.0 / (2.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class UnivariateSplit:
    L: int
    weights: np.ndarray
    means: np.ndarray
    sigma: float
    lam: float = 0.0
    l2_error: float = float("nan")

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        mu = np.array(self.means, dtype=float).ravel()
        if w.size != self.L or mu.size != self.L:
            raise InvariantViolation(f"expected {self.L} weights and means")
        w.flags.writeable = False
        mu.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def sigmas(self) -> np.ndarray:
        return np.full(self.L, self.sigma)

    @property
    def spread(self) -> float:
        """``Σ w μ²``, the variance carried by the component means."""
        return float(self.weights @ self.means**2)

    def as_mixture(self) -> GaussianMixture:
        return GaussianMixture(self.weights, self.means[:, None], (self.sigmas**2)[:, None, None])

    def validate(self, tol: float = 1e-10) -> "UnivariateSplit":
        """Raise InvariantViolation unless the entry is a valid unit-variance split."""
        w, mu = self.weights, self.means
        if self.L < 1:
            raise InvariantViolation("L must be positive")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvariantViolation("weights must be positive and finite")
        if abs(w.sum() - 1.0) > 1e-12 * self.L:
            raise InvariantViolation(f"weights sum to {w.sum()!r}")
        if abs(w @ mu) > tol:
            raise InvariantViolation(f"mixture mean is {w @ mu!r}, not 0")
        if not self.spread < 1.0:
            raise InvariantViolation("Σ w μ² must be strictly below 1")
        if not self.sigma > 0:
            raise InvariantViolation("component sigma must be positive")
        var = float(w @ (mu**2 + self.sigma**2))
        if abs(var - 1.0) > tol:
            raise InvariantViolation(f"mixture variance is {var!r}, not 1")
        return self


def identity_split() -> UnivariateSplit:
    """The trivial one-component "split" of N(0, 1)."""
    return UnivariateSplit(1, [1.0], [0.0], 1.0, 0.0, 0.0)


def mean_offsets(L: int) -> np.ndarray:
    """Unit-spacing positions ``L((i-1)/(L-1) - 1/2)``; multiply by the spacing ε."""
    if L < 2:
        return np.zeros(L)
    i = np.arange(L)
    return L * (i / (L - 1) - 0.5)


def _l2_1d(w, mu, sigma) -> float:
    """Closed-form ``∫(q - q̃)²`` for ``q = N(0,1)`` and a homoscedastic ``q̃``."""
    s2 = sigma**2
    cross = np.sum(w * np.exp(-0.5 * mu**2 / (1.0 + s2))) / np.sqrt(2 * np.pi * (1.0 + s2))
    d = mu[:, None] - mu[None, :]
    self_q = (w @ np.exp(-0.25 * d**2 / s2) @ w) / np.sqrt(4 * np.pi * s2)
    return float(_SELF_ENERGY_STD - 2.0 * cross + self_q)


def l2_to_standard_normal(s: UnivariateSplit) -> float:
    """Integral squared error between the split and N(0, 1), via mixture inner products."""
    q = GaussianMixture([1.0], [[0.0]], [[[1.0]]])
    qt = s.as_mixture()
    val = gm_inner_product(q, q) - 2.0 * gm_inner_product(q, qt) + gm_inner_product(qt, qt)
    return max(val, 0.0)


def _expand(half: np.ndarray, L: int) -> np.ndarray:
    return np.concatenate([half, half[: L // 2][::-1]])


def _weights_from_logits(z: np.ndarray, L: int) -> np.ndarray:
    h = (L + 1) // 2
    logits = np.concatenate([[0.0], z]) if h > 1 else np.zeros(1)
    half = np.exp(logits - logits.max())
    w = _expand(half, L)
    return w / w.sum()


def split_objective(eps: float, w: np.ndarray, lam: float) -> float:
    """L2 error plus ``lam/L Σσ²``, or ``inf`` when the variance budget is exhausted."""
    L = w.size
    mu = eps * mean_offsets(L)
    s2 = 1.0 - w @ mu**2
    if not s2 > 0:
        return math.inf
    return _l2_1d(w, mu, math.sqrt(s2)) + lam * s2


def _best_weights(eps: float, L: int, lam: float, start=None):
    h = (L + 1) // 2
    if h == 1:
        w = _weights_from_logits(np.zeros(0), L)
        return split_objective(eps, w, lam), np.zeros(0)

    offsets2 = mean_offsets(L) ** 2

    def f(z):
        w = _weights_from_logits(z, L)
        val = split_objective(eps, w, lam)
        # graded penalty steers the simplex back into the feasible region
        return val if math.isfinite(val) else 1e3 * (1.0 + eps**2 * (w @ offsets2))

    # the weight landscape has degenerate local minima (interior weights -> 0),
    # so try the warm start, a Gaussian-profile start and the uniform start
    profile = -0.5 * (eps * mean_offsets(L)[:h]) ** 2
    starts = [] if start is None else [np.asarray(start, dtype=float)]
    starts += [profile[1:] - profile[0], np.zeros(h - 1)]
    best = None
    for z0 in starts:
        res = minimize(f, z0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 4000 * h})
        if best is None or res.fun < best.fun:
            best = res
    return float(best.fun), best.x


def generate_entry(L: int, lam: float = 1e-3, eps_max: float = 3.0,
                   grid: int = 241) -> UnivariateSplit:
    """Optimise one library entry.

    Outer search over the mean spacing (coarse grid, then bounded scalar
    refinement); inner Nelder-Mead over the symmetric weight logits.  The
    procedure is deterministic.
    """
    if L < 2:
        raise ValueError("L must be at least 2")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    eps_grid = np.linspace(eps_max / grid, eps_max, grid)
    vals, starts = [], []
    start = None
    for e in eps_grid:
        v, z = _best_weights(e, L, lam, start)
        vals.append(v)
        starts.append(z)
        start = z if v < 1e3 else None
    k = int(np.argmin(vals))
    z_k = starts[k]
    lo = eps_grid[max(k - 1, 0)] if k > 0 else 0.0
    hi = eps_grid[min(k + 1, grid - 1)]

    res = minimize_scalar(lambda e: _best_weights(e, L, lam, z_k)[0], bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    eps, (fz, z) = float(res.x), _best_weights(float(res.x), L, lam, z_k)
    if fz > vals[k]:
        eps, z = float(eps_grid[k]), z_k
    w = _weights_from_logits(z, L)
    mu = eps * mean_offsets(L)
    spread = float(w @ mu**2)
    if not spread < 1.0:
        raise Infeasible(f"no feasible split found for L={L}, lambda={lam}")
    sigma = math.sqrt(1.0 - spread)
    split = UnivariateSplit(L, w, mu, sigma, lam, 0.0)
    split = UnivariateSplit(L, w, mu, sigma, lam, l2_to_standard_normal(split))
    return split.validate()


@dataclass
class SplitLibrary:
    entries: dict = field(default_factory=dict)

    def add(self, s: UnivariateSplit) -> None:
        self.entries[(s.L, float(s.lam))] = s.validate()

    def get(self, L: int, lam: float) -> UnivariateSplit:
        try:
            return self.entries[(L, float(lam))]
        except KeyError:
            raise KeyError(f"no library entry for L={L}, lambda={lam}") from None

    def __contains__(self, key) -> bool:
        return (key[0], float(key[1])) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self):
        return sorted(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SplitLibrary) or self.keys() != other.keys():
            return False
        return all(_same_entry(self.entries[k], other.entries[k]) for k in self.keys())


def _same_entry(a: UnivariateSplit, b: UnivariateSplit) -> bool:
    return (a.L == b.L and np.array_equal(a.weights, b.weights)
            and np.array_equal(a.means, b.means) and a.sigma == b.sigma
            and a.lam == b.lam and (a.l2_error == b.l2_error
                                    or (math.isnan(a.l2_error) and math.isnan(b.l2_error))))


def build_library(Ls, lams) -> SplitLibrary:
    lib = SplitLibrary()
    for L in Ls:
        for lam in lams:
            lib.add(generate_entry(int(L), float(lam)))
    return lib


def _num(x: float) -> str:
    return format(float(x), ".17g")


def dumps(lib: SplitLibrary) -> str:
    """Serialise to JSON text; every float is written with 17 significant digits."""
    lines = ["{", f'  "format": "{FORMAT_TAG}",', '  "version": 1,', '  "entries": [']
    recs = []
    for key in lib.keys():
        s = lib.entries[key]
        recs.append(
            "    {"
            f'"L": {s.L}, "lambda": {_num(s.lam)}, '
            f'"weights": [{", ".join(_num(v) for v in s.weights)}], '
            f'"means": [{", ".join(_num(v) for v in s.means)}], '
            f'"sigma": {_num(s.sigma)}, "l2_error": {_num(s.l2_error)}'
            "}")
    lines.append(",\n".join(recs))
    lines += ["  ]", "}"]
    return "\n".join(line for line in lines if line) + "\n"


def save(lib: SplitLibrary, path) -> None:
    Path(path).write_text(dumps(lib))


def loads(text: str) -> SplitLibrary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"library file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise ParseError("not a split library file")
    lib = SplitLibrary()
    try:
        for rec in doc["entries"]:
            s = UnivariateSplit(int(rec["L"]), rec["weights"], rec["means"], float(rec["sigma"]),
                                float(rec["lambda"]), float(rec["l2_error"]))
            lib.add(s)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvariantViolation):
            raise
        raise ParseError(f"malformed library entry: {exc}") from None
    return lib


def load(path) -> SplitLibrary:
    return loads(Path(path).read_text())


DEFAULT_L = 3
DEFAULT_LAMBDA = 1e-3
DEFAULT_LAMBDAS = (1e-4, 1e-3, 1e-2)

_default_cache: dict = {}


def default_split(L: int = DEFAULT_L, lam: float = DEFAULT_LAMBDA) -> UnivariateSplit:
    """Generate (once per process) the entry for ``(L, lam)``."""
    key = (L, float(lam))
    if key not in _default_cache:
        _default_cache[key] = generate_entry(L, lam)
    return _default_cache[key]
