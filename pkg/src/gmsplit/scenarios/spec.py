"""Scenario specifications, named presets and model construction."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..mixture import Gaussian
from ..models import Model
from .cr3bp import EARTH_MOON_MU, NRHO_PERIOD, NRHO_STATE, Cr3bpModel, IntegratorConfig
from .polar import PolarModel
from .twobody import MU_EARTH_CANONICAL, TwoBodyModel, orbital_period

KINDS = ("polar", "twobody", "cr3bp")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    kind: str
    mean: tuple
    cov: tuple
    params: dict = field(default_factory=dict)
    depth: int = 1
    truth: str = "analytic"
    mc_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.truth not in ("analytic", "monte-carlo"):
            raise ValueError(f"unknown truth mode {self.truth!r}")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        object.__setattr__(self, "mean", tuple(float(v) for v in np.ravel(self.mean)))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in cov))
        object.__setattr__(self, "params", {k: float(v) for k, v in sorted(self.params.items())})

    @property
    def gaussian(self) -> Gaussian:
        return Gaussian(np.array(self.mean), np.array(self.cov))

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "mean": list(self.mean),
                "cov": [list(r) for r in self.cov], "params": dict(self.params),
                "depth": self.depth, "truth": self.truth, "mc_samples": self.mc_samples,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(d["name"], d["kind"], d["mean"], d["cov"], d.get("params", {}),
                   int(d.get("depth", 1)), d.get("truth", "analytic"),
                   int(d.get("mc_samples", 0)), int(d.get("seed", 0)))

    def with_overrides(self, **kw) -> "ScenarioSpec":
        params = dict(self.params)
        params.update(kw.pop("params", {}) or {})
        return replace(self, params=params, **kw)

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form (floats written with repr precision)."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def polar_preset() -> ScenarioSpec:
    return ScenarioSpec("polar", "polar", [0.0, 1000.0], 250.0**2 * np.diag([16.0, 1.0]),
                        depth=2, truth="analytic")


def twobody_preset() -> ScenarioSpec:
    a0 = 1.4322
    t = 2.0 * orbital_period(a0, MU_EARTH_CANONICAL)
    return ScenarioSpec("twobody", "twobody", [a0, 0.0], np.diag([0.25**2, 0.02**2]),
                        params={"mu": MU_EARTH_CANONICAL, "t": t}, depth=4, truth="analytic")


def cr3bp_preset() -> ScenarioSpec:
    cov = 1e-8 * np.diag([1.0, 0, 1.0, 0, 0, 0]) + 1e-10 * np.eye(6)
    cfg = IntegratorConfig()
    return ScenarioSpec("cr3bp-nrho", "cr3bp", NRHO_STATE, cov,
                        params={"mu": EARTH_MOON_MU, "t": 0.5 * NRHO_PERIOD,
                                "rtol": cfg.rtol, "atol_state": cfg.atol_state,
                                "atol_variational": cfg.atol_variational},
                        depth=3, truth="monte-carlo", mc_samples=100_000, seed=1)


PRESETS = {"polar": polar_preset, "twobody": twobody_preset, "cr3bp-nrho": cr3bp_preset}


def preset(name: str) -> ScenarioSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown scenario preset {name!r}; choose from {sorted(PRESETS)}") from None


def build_model(spec: ScenarioSpec) -> Model:
    p = spec.params
    if spec.kind == "polar":
        return PolarModel()
    if spec.kind == "twobody":
        mu = p.get("mu", MU_EARTH_CANONICAL)
        t = p.get("t", 2.0 * orbital_period(spec.mean[0], mu))
        return TwoBodyModel(t, mu)
    defaults = IntegratorConfig()
    cfg = IntegratorConfig(rtol=p.get("rtol", defaults.rtol),
                           atol_state=p.get("atol_state", defaults.atol_state),
                           atol_variational=p.get("atol_variational", defaults.atol_variational))
    return Cr3bpModel(p.get("t", 0.5 * NRHO_PERIOD), p.get("mu", EARTH_MOON_MU), cfg)


def default_twobody_time(a: float = 1.4322, mu: float = MU_EARTH_CANONICAL) -> float:
    """Two periods of the mean orbit in canonical time units (about 21.54 TU for 1.4322 ER)."""
    return 2.0 * 2.0 * math.pi * math.sqrt(a**3 / mu)
