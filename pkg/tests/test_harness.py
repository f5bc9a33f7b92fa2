import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from mcsvgd.harness import (ConfigError, RunConfig, derive_seed, resimulate, run_experiment,
                            simulate_dataset, sweep)
from mcsvgd.io import read_lattice, read_particles, read_trace
from mcsvgd.diagnostics import read_summary_csv
from mcsvgd.models import potts_suffstat


def cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "mcsvgd", *map(str, args)], capture_output=True,
                          text=True, cwd=cwd)


@pytest.fixture(scope="module")
def potts_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("potts")
    simulate_dataset({"model": "potts", "K": 3, "cycles": 200}, [0.7], 8, 11, d / "data")
    return d


def small_potts(potts_dir, **over):
    cfg = {"model": "potts", "seed": 3, "data": {"lattice": str(potts_dir / "data" / "lattice.csv"), "K": 3},
           "model_options": {"cycles": 40, "burnin": 10},
           "svgd": {"n_particles": 12, "m_mc": 30, "step_size": 2e-3, "max_iters": 20, "map_iters": 20,
                    "kl_check_every": 10},
           "out": str(potts_dir / "run")}
    cfg.update(over)
    return cfg


def test_derive_seed_is_stable_and_label_dependent():
    assert derive_seed(1, "map") == derive_seed(1, "map")
    assert derive_seed(1, "map") != derive_seed(1, "main")
    assert 0 <= derive_seed(2**40, "x") < 2**63


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.from_dict({"model": "potts", "bogus": 1})
    with pytest.raises(ConfigError, match="'model'"):
        RunConfig.from_dict({})
    with pytest.raises(ConfigError, match="unknown model"):
        RunConfig.from_dict({"model": "ising"}).validate(need_data=False)
    with pytest.raises(ConfigError, match="workers"):
        RunConfig.from_dict({"model": "potts", "workers": 0}).validate(need_data=False)
    with pytest.raises(ConfigError, match="nu"):
        RunConfig.from_dict({"model": "comp", "data": {"counts": "c.csv"}}).validate(need_data=False)
    with pytest.raises(ConfigError, match="svgd"):
        RunConfig.from_dict({"model": "potts", "svgd": {"particles": 3}}).svgd_config()


def test_run_outputs_roundtrip(potts_dir):
    rep = run_experiment(RunConfig.from_dict(small_potts(potts_dir)))
    out = potts_dir / "run"
    doc = json.loads((out / "report.json").read_text())
    assert doc["schema"] == "mcsvgd-report/1"
    assert set(doc["timing"]) >= {"map_seconds", "main_seconds", "simulation_seconds"}
    assert read_particles(out / "particles.csv").shape == (12, 1)
    assert read_summary_csv(out / "summary.csv") == rep.summaries
    assert [r["iteration"] for r in read_trace(out / "trace.csv")] == [10, 20]


def test_zero_iteration_run_echoes_initial_particles(potts_dir):
    cfg = small_potts(potts_dir, out=str(potts_dir / "zero"))
    cfg["svgd"] = dict(cfg["svgd"], max_iters=0)
    rep = run_experiment(RunConfig.from_dict(cfg))
    assert rep.details["iterations"] == 0 and rep.traces == []


def test_reproducible_across_workers(potts_dir):
    a = run_experiment(RunConfig.from_dict(small_potts(potts_dir, out=str(potts_dir / "w1"))))
    b = run_experiment(RunConfig.from_dict(small_potts(potts_dir, out=str(potts_dir / "w4"), workers=4)))
    assert (potts_dir / "w1" / "particles.csv").read_text() == (potts_dir / "w4" / "particles.csv").read_text()
    assert a.summaries == b.summaries


def test_single_value_sweep_matches_run(potts_dir):
    cfg = small_potts(potts_dir, out=str(potts_dir / "sw"))
    ref = run_experiment(RunConfig.from_dict(dict(cfg, out=str(potts_dir / "ref"))))
    reps = sweep(RunConfig.from_dict(cfg), "n", [12])
    assert reps[0].summaries == ref.summaries
    assert (potts_dir / "sw" / "sweep.csv").read_text().startswith("axis,value,status,coord")


def test_sweep_records_failures(potts_dir):
    reps = sweep(RunConfig.from_dict(small_potts(potts_dir, out=str(potts_dir / "swf"))), "n", [0, 5])
    assert reps[0] is None and reps[1] is not None
    rows = (potts_dir / "swf" / "sweep.csv").read_text().splitlines()
    assert rows[1].split(",")[2] == "error"


def test_mcmc_methods_write_chain(potts_dir):
    cfg = small_potts(potts_dir, method="dmh", out=str(potts_dir / "dmh"),
                      chain={"iters": 300, "burnin": 50, "tune_batch": 50, "tune_rounds": 3, "inner_cycles": 5})
    rep = run_experiment(RunConfig.from_dict(cfg))
    assert 0 <= rep.details["acceptance_rate"] <= 1
    assert (potts_dir / "dmh" / "chain.csv.json").exists()
    assert read_particles(potts_dir / "dmh" / "particles.csv").shape == (250, 1)


def test_simulate_empty_counts(tmp_path):
    paths = simulate_dataset({"model": "comp"}, [1.0, 1.0, 0.1], 0, 1, tmp_path)
    assert open(paths["counts"]).read().splitlines() == ["y,x1,x2,x3"]


@pytest.mark.parametrize("model,theta,size", [("comp", [1.0, 1.0, 0.1], 30), ("potts", [0.8], 6),
                                              ("ergm", [-3, 2, 2, 2, 2, 2, 2, 0.5, 0, 0.5], 12)])
def test_provenance_regenerates_bit_identically(tmp_path, model, theta, size):
    spec = {"model": model, "cycles": 20} if model != "comp" else {"model": model}
    paths = simulate_dataset(spec, theta, size, 5, tmp_path)
    before = {k: open(p).read() for k, p in paths.items()}
    resimulate(tmp_path / "provenance.json")
    assert {k: open(p).read() for k, p in paths.items()} == before


def test_potts_simulation_match_rate(tmp_path):
    paths = simulate_dataset({"model": "potts", "K": 4, "cycles": 5000}, [1.0], 30, 6, tmp_path)
    lat = read_lattice(paths["lattice"], K=4)
    rate = potts_suffstat(lat) / lat.n_pairs
    assert 0.25 < rate < 1.0


# command line ------------------------------------------------------------------

def write_cfg(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_cli_run_and_summarize(potts_dir, tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", small_potts(potts_dir))
    res = cli("run", "--config", cfg, "--out", tmp_path / "o", "--seed", 9, "--workers", 2)
    assert res.returncode == 0, res.stderr
    assert res.stdout.startswith("theta_1: mean")
    res = cli("summarize", "--out", tmp_path / "o", "--prob", 0.9)
    assert res.returncode == 0
    assert read_summary_csv(tmp_path / "o" / "summary.csv")[0].prob == 0.9


def test_cli_simulate_and_sweep(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {
        "model": "comp", "seed": 2, "data": {"counts": "data/counts.csv", "nu": 1.5},
        "simulate": {"theta": [1.0, 0.5], "size": 40, "nu": 1.5},
        "svgd": {"n_particles": 8, "m_mc": 20, "max_iters": 5, "map_iters": 5}})
    res = cli("simulate", "--config", cfg, "--out", tmp_path / "data")
    assert res.returncode == 0, res.stderr
    res = cli("sweep", "--config", cfg, "--out", tmp_path / "sw", "--axis", "m", "--values", "10,20")
    assert res.returncode == 0, res.stderr
    assert "2 of 2 runs succeeded" in res.stdout


def test_cli_config_error_exit_code(tmp_path):
    res = cli("run", "--config", tmp_path / "missing.yaml")
    assert res.returncode == 2
    err = json.loads(res.stderr.strip())
    assert err["error"] == "config"
    cfg = write_cfg(tmp_path / "c.yaml", {"model": "potts", "method": "gibbs"})
    assert cli("run", "--config", cfg).returncode == 2


def test_cli_data_error_exit_code(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {"model": "potts", "data": {"lattice": "nope.csv"}})
    res = cli("run", "--config", cfg)
    assert res.returncode == 3
    assert json.loads(res.stderr.strip())["error"] == "data"
    (tmp_path / "bad.csv").write_text("1,x\n")
    cfg = write_cfg(tmp_path / "c.yaml", {"model": "potts", "data": {"lattice": "bad.csv"}})
    assert cli("run", "--config", cfg).returncode == 3


def test_cli_numerical_error_exit_code(tmp_path):
    (tmp_path / "l.csv").write_text("1,2\n2,1\n")
    cfg = write_cfg(tmp_path / "c.yaml", {
        "model": "potts", "data": {"lattice": "l.csv", "K": 2},
        "svgd": {"n_particles": 2, "m_mc": 5, "step_size": 1e300, "max_iters": 3, "map_iters": 0}})
    res = cli("run", "--config", cfg, "--out", tmp_path / "o")
    assert res.returncode == 4, res.stderr
    assert json.loads(res.stderr.strip().splitlines()[-1])["error"] == "numerical"
