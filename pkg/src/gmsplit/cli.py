"""Command-line harness: library generation, truth generation, scenario runs and table joins.

Precedence for run settings is preset < command-line flags < config file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import library as libmod
from .errors import GMSplitError
from .heuristics import ALL_KINDS, HeuristicKind, SutConfig
from .metrics import MetricReport, nise, nise_table, sample_metrics, sample_table
from .mixture import GaussianMixture, mixture_moments
from .scenarios import analytic_truth, build_model, is_analytic, mc_truth_samples, preset
from .scenarios.spec import ScenarioSpec
from .split import SplitCriterion, propagate_linearized, recursive_split

log = logging.getLogger("gmsplit")

RUN_KEYS = ("scenario", "heuristics", "depth", "library", "L", "lambda", "mc_samples", "seed",
            "gamma", "threshold", "madem_cov", "overrides")
PLOT_GRID = 81


# ---------------------------------------------------------------------------
# configuration


def _parse_heuristics(value) -> list[str]:
    if value is None or value == "all":
        return [k.value for k in ALL_KINDS]
    items = value.split(",") if isinstance(value, str) else list(value)
    out = []
    for item in items:
        item = item.strip().lower()
        if item:
            out.append(HeuristicKind(item).value)
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge preset defaults, flags and the optional config file into a concrete run config."""
    cfg = {k: getattr(args, k, None) for k in RUN_KEYS}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        unknown = set(doc) - set(RUN_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(doc)
    spec = preset(cfg["scenario"] or "polar")
    over = dict(cfg.get("overrides") or {})
    if cfg.get("depth") is not None:
        over["depth"] = int(cfg["depth"])
    if cfg.get("mc_samples") is not None:
        over["mc_samples"] = int(cfg["mc_samples"])
    if cfg.get("seed") is not None:
        over["seed"] = int(cfg["seed"])
    if over:
        spec = ScenarioSpec.from_dict({**spec.to_dict(), **over,
                                       "params": {**spec.params, **over.get("params", {})}})
    return {
        "scenario": spec.to_dict(),
        "heuristics": _parse_heuristics(cfg.get("heuristics")),
        "library": str(cfg["library"]) if cfg.get("library") else None,
        "L": int(cfg.get("L") or libmod.DEFAULT_L),
        "lambda": float(cfg["lambda"] if cfg.get("lambda") is not None else libmod.DEFAULT_LAMBDA),
        "gamma": float(cfg.get("gamma") or 0.0),
        "threshold": float(cfg.get("threshold") or 0.0),
        "madem_cov": cfg.get("madem_cov") or "approx",
    }


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def load_split(cfg: dict):
    if cfg["library"]:
        return libmod.load(cfg["library"]).get(cfg["L"], cfg["lambda"])
    return libmod.default_split(cfg["L"], cfg["lambda"])


# ---------------------------------------------------------------------------
# running one scenario


@dataclass
class HeuristicRun:
    heuristic: str
    split: GaussianMixture | None
    propagated: GaussianMixture | None
    report: MetricReport


def _run_one(kind: str, spec: ScenarioSpec, model, u, crit, truth, samples, madem_cov):
    try:
        gm0 = GaussianMixture.from_gaussian(spec.gaussian)
        split = recursive_split(gm0, model, kind, crit, u, SutConfig())
        out = propagate_linearized(split, model)
        rep = MetricReport(spec.name, kind)
        if truth is not None:
            rep.nise = nise(out, truth)
        if samples is not None:
            lin = None
            if madem_cov == "linear":
                lin = propagate_linearized(gm0, model).covs[0]
            vals = sample_metrics(out, samples.samples, madem_cov, lin)
            rep.elk, rep.madem, rep.mcr, rep.cvm_norm = (vals["elk"], vals["madem"],
                                                         vals["mcr"], vals["cvm_norm"])
            rep.samples = len(samples.samples)
        return HeuristicRun(kind, split, out, rep)
    except (GMSplitError, ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("heuristic %s failed: %s", kind, exc)
        return HeuristicRun(kind, None, None, MetricReport(spec.name, kind, error=str(exc)))


def execute_run(cfg: dict, out_dir, jobs: int = 1, cache_dir=None) -> list[HeuristicRun]:
    """Split, propagate and score every configured heuristic; write all outputs to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    spec = ScenarioSpec.from_dict(cfg["scenario"])
    model = build_model(spec)
    u = load_split(cfg)
    crit = SplitCriterion(cfg["gamma"], cfg["threshold"], spec.depth)
    truth = analytic_truth(spec, model) if is_analytic(spec) else None
    samples = None
    if not is_analytic(spec):
        samples = mc_truth_samples(spec, model, cache_dir or out / "truth")

    def task(kind):
        return _run_one(kind, spec, model, u, crit, truth, samples, cfg["madem_cov"])

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(task, cfg["heuristics"]))
    else:
        runs = [task(k) for k in cfg["heuristics"]]

    _write_outputs(out, cfg, h, spec, runs, truth, samples)
    return runs


def _write_outputs(out: Path, cfg, h, spec, runs, truth, samples):
    (out / "run.json").write_text(json.dumps({"config_hash": h, "config": cfg}, indent=1,
                                             sort_keys=True) + "\n")
    reports = [r.report for r in runs]
    table = nise_table(reports) if truth is not None else sample_table(reports)
    (out / "metrics.csv").write_text(table)
    mix_dir, plot_dir = out / "mixtures", out / "plot"
    mix_dir.mkdir(exist_ok=True)
    plot_dir.mkdir(exist_ok=True)
    for r in runs:
        if r.propagated is None:
            continue
        doc = {"config_hash": h, "scenario": spec.name, "heuristic": r.heuristic,
               "split": r.split.to_dict(), "propagated": r.propagated.to_dict()}
        (mix_dir / f"{r.heuristic}.json").write_text(json.dumps(doc, indent=1) + "\n")
        _write_plot(plot_dir / f"{r.heuristic}.tsv", plot_dir / f"{r.heuristic}-means.tsv",
                    r.propagated, h)


def _marginal01(gm: GaussianMixture) -> GaussianMixture:
    return GaussianMixture(gm.weights, gm.means[:, :2], gm.covs[:, :2, :2])


def _write_plot(grid_path: Path, means_path: Path, gm: GaussianMixture, h: str):
    """Gridded density of the first two output coordinates and the mixand means."""
    gm2 = _marginal01(gm) if gm.dim > 2 else gm
    mean, cov = mixture_moments(gm2)
    sd = np.sqrt(np.diag(cov))
    axes = [np.linspace(mean[i] - 4 * sd[i], mean[i] + 4 * sd[i], PLOT_GRID) for i in range(2)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pdf = gm2.pdf(pts)
    lines = [f"# config_hash {h}", "z0\tz1\tpdf"]
    lines += [f"{a:.10g}\t{b:.10g}\t{c:.10g}" for (a, b), c in zip(pts, pdf)]
    grid_path.write_text("\n".join(lines) + "\n")
    lines = [f"# config_hash {h}", "weight\tz0\tz1"]
    lines += [f"{w:.10g}\t{m[0]:.10g}\t{m[1]:.10g}" for w, m in zip(gm2.weights, gm2.means)]
    means_path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_library(args) -> int:
    lib = libmod.build_library(args.L, args.lam)
    libmod.save(lib, args.out)
    log.info("wrote %d entries to %s", len(lib), args.out)
    return 0


def cmd_truth(args) -> int:
    cfg = resolve_config(args)
    spec = ScenarioSpec.from_dict(cfg["scenario"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if is_analytic(spec):
        marker = {"scenario": spec.name, "truth": "analytic", "spec_hash": spec.hash()}
        (out / f"truth-{spec.name}.json").write_text(json.dumps(marker, indent=1) + "\n")
        log.info("%s has an analytic truth; no samples generated", spec.name)
        return 0
    s = mc_truth_samples(spec, build_model(spec), out)
    log.info("%d samples (%d failed) for %s", len(s.samples), s.failed, spec.name)
    return 0


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    runs = execute_run(cfg, args.out, jobs=args.jobs, cache_dir=args.cache)
    sys.stdout.write(Path(args.out, "metrics.csv").read_text())
    return 1 if any(r.report.error for r in runs) else 0


def cmd_compare(args) -> int:
    header, rows = None, []
    for path in args.csvs:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            h = next(reader)
            if header is None:
                header = h
            elif h != header:
                raise ValueError(f"{path} has header {h}, expected {header}")
            run = Path(path).resolve().parent.name
            rows += [[run] + row for row in reader]
    text = ",".join(["run"] + header) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--scenario", choices=["polar", "twobody", "cr3bp-nrho"], default="polar")
    p.add_argument("--heuristics", default=None,
                   help="comma-separated heuristic tags, or 'all' (default)")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--library", default=None, help="split library file")
    p.add_argument("--L", type=int, default=None, help="library entry component count")
    p.add_argument("--lambda", dest="lambda", type=float, default=None)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--madem-cov", dest="madem_cov", choices=["approx", "linear", "mc"],
                   default=None)
    p.add_argument("--config", default=None, help="JSON file; its keys override the flags")
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gmsplit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-library", help="optimise univariate split entries")
    p.add_argument("--L", type=int, nargs="+", default=[libmod.DEFAULT_L])
    p.add_argument("--lambda", dest="lam", type=float, nargs="+",
                   default=[libmod.DEFAULT_LAMBDA])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_library)

    p = sub.add_parser("truth", help="generate the truth marker or Monte Carlo cache")
    _add_run_flags(p)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("run", help="split, propagate and score the chosen heuristics")
    _add_run_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="heuristics evaluated concurrently")
    p.add_argument("--cache", default=None, help="Monte Carlo cache directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="join metric CSVs from several runs")
    p.add_argument("csvs", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GMSplitError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
