import json

import numpy as np
import pytest

from gmsplit import library as libmod
from gmsplit.cli import build_parser, config_hash, main, resolve_config
from gmsplit.heuristics import ALL_KINDS


def test_gen_library_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["gen-library", "--L", "2", "3", "4", "5", "--lambda", "1e-3"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lib = libmod.load(a)
    assert len(lib) == 4
    for L in (2, 3, 4, 5):
        u = lib.get(L, 1e-3)
        assert u.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert u.weights @ (u.means**2 + u.sigmas**2) == pytest.approx(1.0, abs=1e-10)


def test_run_uses_library_file(tmp_path):
    lib = tmp_path / "lib.json"
    assert main(["gen-library", "--L", "5", "--out", str(lib)]) == 0
    out = tmp_path / "run"
    code = main(["run", "--heuristics", "fos", "--depth", "1", "--library", str(lib), "--L", "5",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "mixtures" / "fos.json").read_text())
    assert len(doc["propagated"]["components"]) == 5


def test_truth_marker_for_analytic_scenarios(tmp_path):
    assert main(["truth", "--scenario", "polar", "--out", str(tmp_path)]) == 0
    marker = json.loads((tmp_path / "truth-polar.json").read_text())
    assert marker["truth"] == "analytic"
    assert not list(tmp_path.glob("*.f64"))


def test_truth_cache_is_reused(tmp_path):
    argv = ["truth", "--scenario", "cr3bp-nrho", "--mc-samples", "300", "--out", str(tmp_path)]
    assert main(argv) == 0
    (data,) = tmp_path.glob("mc-cr3bp-nrho-*.f64")
    first = data.read_bytes()
    mtime = data.stat().st_mtime_ns
    assert main(argv) == 0
    assert data.stat().st_mtime_ns == mtime and data.read_bytes() == first
    header = json.loads(data.with_suffix(".json").read_text())
    assert header["n"] == 300 and header["dim"] == 6 and header["seed"] == 1
    assert len(first) == 300 * 6 * 8


def test_run_outputs_and_determinism(tmp_path, capsys):
    argv = ["run", "--heuristics", "fos,sos,maxvar", "--depth", "1"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    printed = capsys.readouterr().out
    assert main(argv + ["--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "metrics.csv").read_text() == printed
    lines = printed.splitlines()
    assert lines[0] == "method,NISE" and [l.split(",")[0] for l in lines[1:]] == ["fos", "sos",
                                                                                 "maxvar"]
    for rel in ("metrics.csv", "run.json", "mixtures/fos.json", "plot/sos.tsv",
                "plot/maxvar-means.tsv"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
    run = json.loads((a / "run.json").read_text())
    assert run["config_hash"] == config_hash(run["config"])
    grid = (a / "plot" / "fos.tsv").read_text().splitlines()
    assert grid[0] == f"# config_hash {run['config_hash']}" and len(grid) == 2 + 81 * 81


def test_run_monte_carlo_scenario(tmp_path):
    out = tmp_path / "run"
    argv = ["run", "--scenario", "cr3bp-nrho", "--heuristics", "maxvar", "--depth", "1",
            "--mc-samples", "500", "--cache", str(tmp_path / "cache"), "--out", str(out)]
    assert main(argv) == 0
    header, row = (out / "metrics.csv").read_text().splitlines()
    assert header == "method,ELK,MaDEM,MCR,CvMnorm"
    assert row.startswith("maxvar,") and all(np.isfinite(float(v)) for v in row.split(",")[1:])
    assert list((tmp_path / "cache").glob("*.f64"))


def test_failing_heuristic_is_reported(tmp_path):
    # the whitened kinds need an invertible output covariance, which a 0-variance input lacks
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"heuristics": ["fos", "wussos"], "depth": 1,
                               "overrides": {"cov": [[1.0, 0.0], [0.0, 0.0]]}}))
    out = tmp_path / "run"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 1
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[2] == "wussos,ERROR"
    assert not (out / "mixtures" / "wussos.json").exists()


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"depth": 1, "heuristics": "fos"}))
    args = build_parser().parse_args(["run", "--depth", "3", "--heuristics", "sos",
                                      "--config", str(cfg), "--out", str(tmp_path)])
    resolved = resolve_config(args)
    assert resolved["scenario"]["depth"] == 1 and resolved["heuristics"] == ["fos"]
    args = build_parser().parse_args(["run", "--depth", "3", "--out", str(tmp_path)])
    resolved = resolve_config(args)
    assert resolved["scenario"]["depth"] == 3
    assert resolved["heuristics"] == [k.value for k in ALL_KINDS]


def test_bad_inputs_exit_with_code_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["run", "--heuristics", "nope", "--out", str(tmp_path)]) == 2
    assert main(["run", "--library", str(tmp_path / "missing.json"), "--out",
                 str(tmp_path)]) == 2


def test_compare_joins_tables(tmp_path, capsys):
    for name in ("r1", "r2"):
        (tmp_path / name).mkdir()
        (tmp_path / name / "metrics.csv").write_text(f"method,NISE\nfos,0.{name[1]}\n")
    assert main(["compare", str(tmp_path / "r1" / "metrics.csv"),
                 str(tmp_path / "r2" / "metrics.csv")]) == 0
    assert capsys.readouterr().out == "run,method,NISE\nr1,fos,0.1\nr2,fos,0.2\n"
    (tmp_path / "r3").mkdir()
    (tmp_path / "r3" / "metrics.csv").write_text("method,ELK\nfos,1\n")
    assert main(["compare", str(tmp_path / "r1" / "metrics.csv"),
                 str(tmp_path / "r3" / "metrics.csv")]) == 2
