"""Truth distributions: exact push-forward densities and cached Monte Carlo samples."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import GMSplitError, ParseError
from ..linalg import cholesky
from ..mixture import Gaussian, GaussianMixture
from ..models import Model
from ..quadrature import adaptive_gauss_legendre
from .polar import PolarModel, polar_truth_pdf
from .spec import ScenarioSpec, build_model
from .twobody import twobody_truth_pdf

log = logging.getLogger(__name__)

BOX_SIGMAS = 6.0
MC_CHUNK = 4096


class PullbackTruth:
    """Density of ``g(x)`` for ``x ~ N(μ, P)`` and a bijective ``g``.

    Integrals against it are evaluated in input coordinates, where the
    density is smooth: ``∫ p q' dz = ∫ p(g(x)) N(x) dx`` and
    ``∫ q'² dz = ∫ N(x)² / |det G(x)| dx``, over a box of ``BOX_SIGMAS``
    standard deviations about the input mean.
    """

    def __init__(self, g: Gaussian, model: Model, pdf, abs_det=None, rtol: float = 1e-6,
                 breaks=None):
        self.input = g
        self.model = model
        self.pdf = pdf
        self.abs_det = abs_det
        self.rtol = rtol
        sd = np.sqrt(np.diag(g.cov))
        self.lower = g.mean - BOX_SIGMAS * sd
        self.upper = g.mean + BOX_SIGMAS * sd
        self.breaks = breaks
        self._self_energy = None

    @property
    def dim(self) -> int:
        return self.input.dim

    def self_energy(self) -> float:
        if self._self_energy is None:
            if self.abs_det is None:
                # volume preserving: ∫N² = 1 / ((4π)^{n/2} sqrt(det P))
                L = cholesky(self.input.cov)
                self._self_energy = float(
                    math.exp(-0.5 * self.dim * math.log(4 * math.pi) - np.log(np.diag(L)).sum()))
            else:
                g = self.input
                self._self_energy = adaptive_gauss_legendre(
                    lambda x: g.pdf(x) ** 2 / self.abs_det(x), self.lower, self.upper, self.rtol,
                    breaks=self.breaks)
        return self._self_energy

    def cross(self, p: GaussianMixture) -> float:
        g, model = self.input, self.model

        def integrand(x):
            return np.exp(p.logpdf(model.evaluate_many(x)) + g.logpdf(x))

        return adaptive_gauss_legendre(integrand, self.lower, self.upper, self.rtol,
                                       atol=1e-300, breaks=self.breaks)


def analytic_truth(spec: ScenarioSpec, model: Model | None = None) -> PullbackTruth:
    model = model or build_model(spec)
    g = spec.gaussian
    if spec.kind == "polar":
        # the angle wraps across the negative x axis; keep it on cell faces
        return PullbackTruth(g, model, polar_truth_pdf(g), PolarModel.abs_det_jacobian,
                             breaks=[[0.0], [0.0]])
    if spec.kind == "twobody":
        truth = PullbackTruth(g, model, twobody_truth_pdf(g, model.t, model.mu), None)
        # the box must stay inside a > 0, where the map is defined
        truth.lower[0] = max(truth.lower[0], 1e-6 * g.mean[0])
        return truth
    raise ValueError(f"scenario kind {spec.kind!r} has no analytic truth")


@dataclass(frozen=True)
class SampleSet:
    samples: np.ndarray
    failed: int
    spec_hash: str = ""
    seed: int = 0


def draw_inputs(g: Gaussian, n: int, seed: int, chunk: int) -> np.ndarray:
    """Input draws for one chunk; the stream depends only on ``(seed, chunk)``."""
    rng = np.random.default_rng([seed, chunk])
    L = cholesky(g.cov)
    return g.mean + rng.standard_normal((n, g.dim)) @ L.T


def _propagate_chunk(model: Model, xs):
    try:
        return model.evaluate_many(xs), 0
    except (GMSplitError, FloatingPointError):
        rows, bad = [], 0
        for x in xs:
            try:
                rows.append(model.evaluate(x))
            except (GMSplitError, FloatingPointError):
                bad += 1
        return (np.array(rows) if rows else np.empty((0, model.out_dim))), bad


def generate_samples(spec: ScenarioSpec, model: Model | None = None, n: int | None = None,
                     seed: int | None = None) -> SampleSet:
    model = model or build_model(spec)
    n = spec.mc_samples if n is None else int(n)
    seed = spec.seed if seed is None else int(seed)
    g = spec.gaussian
    parts, failed = [], 0
    for c, start in enumerate(range(0, n, MC_CHUNK)):
        xs = draw_inputs(g, min(MC_CHUNK, n - start), seed, c)
        zs, bad = _propagate_chunk(model, xs)
        parts.append(zs)
        failed += bad
    out_dim = getattr(model, "out_dim", g.dim)
    samples = np.vstack(parts) if parts else np.empty((0, out_dim))
    if failed:
        log.warning("%d of %d Monte Carlo samples failed to propagate and were dropped", failed, n)
    return SampleSet(samples, failed, spec.hash(), seed)


def cache_paths(cache_dir, spec: ScenarioSpec) -> tuple[Path, Path]:
    stem = f"mc-{spec.name}-{spec.hash()[:16]}"
    d = Path(cache_dir)
    return d / f"{stem}.f64", d / f"{stem}.json"


def save_samples(s: SampleSet, data_path, header_path) -> None:
    Path(data_path).write_bytes(np.ascontiguousarray(s.samples, dtype="<f8").tobytes())
    header = {"seed": s.seed, "n": int(s.samples.shape[0]), "dim": int(s.samples.shape[1]),
              "failed": s.failed, "spec_hash": s.spec_hash, "dtype": "<f8", "order": "row-major"}
    Path(header_path).write_text(json.dumps(header, indent=1, sort_keys=True) + "\n")


def load_samples(data_path, header_path) -> SampleSet:
    try:
        h = json.loads(Path(header_path).read_text())
        raw = np.frombuffer(Path(data_path).read_bytes(), dtype="<f8")
        samples = raw.reshape(int(h["n"]), int(h["dim"])).astype(float)
        return SampleSet(samples, int(h["failed"]), h["spec_hash"], int(h["seed"]))
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"corrupt Monte Carlo cache: {exc}") from None


def mc_truth_samples(spec: ScenarioSpec, model: Model | None = None, cache_dir=None) -> SampleSet:
    """Monte Carlo truth samples, read from or written to ``cache_dir`` when given."""
    if cache_dir is None:
        return generate_samples(spec, model)
    data, header = cache_paths(cache_dir, spec)
    if data.exists() and header.exists():
        s = load_samples(data, header)
        if s.spec_hash == spec.hash():
            log.info("reusing Monte Carlo cache %s", data)
            return s
    s = generate_samples(spec, model)
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    save_samples(s, data, header)
    return s


def is_analytic(spec: ScenarioSpec) -> bool:
    return spec.truth == "analytic" and spec.kind in ("polar", "twobody")

