"""Experiment orchestration: config, data loading, method dispatch and outputs."""

import copy
import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import io
from .baselines import run_chain, tune_proposal, write_chain
from .diagnostics import summarize, summary_dicts, write_summary_csv
from .kernel import KernelConfig
from .models import (COMPModel, CountRegressionData, ERGMModel, Lattice, Network, PottsModel,
                     make_prior, mple, poisson_regression, potts_mple)
from .models.ergm import ergm_gibbs_cycle
from .models.potts import _sw_cycles
from .svgd import SvgdConfig, init_particles, map_estimate, run_mcsvgd, seed_cache

SCHEMA = "mcsvgd-report/1"
MODELS = ("potts", "comp", "ergm")
METHODS = ("mcsvgd", "svgd-naive", "exchange", "dmh")
SWEEP_AXES = {"n": "n_particles", "m": "m_mc", "threshold": "ess_threshold", "iters": "max_iters"}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def derive_seed(master: int, label: str) -> int:
    """Child seed from a master seed and a purpose label."""
    digest = hashlib.sha256(f"{int(master)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & (2**63 - 1)


def _rng(master, label):
    return np.random.default_rng(derive_seed(master, label))


@dataclass
class RunConfig:
    model: str
    method: str = "mcsvgd"
    data: dict = field(default_factory=dict)
    model_options: dict = field(default_factory=dict)
    svgd: dict = field(default_factory=dict)
    chain: dict = field(default_factory=dict)
    prior: dict = None
    simulate: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "runs/out"
    workers: int = 1
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "RunConfig":
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "model" not in d:
            raise ConfigError("config needs a 'model' entry")
        cfg = cls(**{k: copy.deepcopy(v) for k, v in d.items()}, base_dir=str(base_dir))
        for name in ("data", "model_options", "svgd", "chain", "simulate"):
            if getattr(cfg, name) is None:
                setattr(cfg, name, {})
        return cfg

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"{path}: config file not found")
        try:
            d = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}".replace("\n", " ")) from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(d, path.parent)

    def path(self, key) -> Path:
        if key not in self.data:
            raise ConfigError(f"data.{key} is required for model {self.model}")
        p = Path(self.data[key])
        return p if p.is_absolute() else Path(self.base_dir) / p

    def validate(self, need_data: bool = True) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")
        if need_data:
            for key in {"potts": ("lattice",), "comp": ("counts",), "ergm": ("edges", "nodes")}[self.model]:
                if not self.path(key).exists():
                    raise io.DataError(f"{self.path(key)}: file not found")
        if self.model == "comp" and "nu" not in self.data:
            raise ConfigError("data.nu (known COMP dispersion) is required")

    def svgd_config(self) -> SvgdConfig:
        opts = dict(self.svgd)
        for k in ("map_start", "checkpoints", "init_cov"):
            opts.pop(k, None)
        kernel = opts.pop("kernel", None) or {}
        try:
            return SvgdConfig(kernel=KernelConfig(**kernel), naive=self.method == "svgd-naive", **opts)
        except TypeError as exc:
            raise ConfigError(f"svgd: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


@dataclass
class RunReport:
    model: str
    method: str
    summaries: list
    traces: list
    timing: dict
    config: dict
    details: dict = field(default_factory=dict)
    schema: str = SCHEMA

    def to_dict(self) -> dict:
        return {"schema": self.schema, "model": self.model, "method": self.method,
                "summaries": summary_dicts(self.summaries), "traces": self.traces,
                "timing": self.timing, "config": self.config, "details": self.details}


# ---------------------------------------------------------------------------
# Data and models
# ---------------------------------------------------------------------------

def load_data(cfg: RunConfig):
    if cfg.model == "potts":
        return io.read_lattice(cfg.path("lattice"), cfg.data.get("K"), bool(cfg.data.get("raw_thickness", False)))
    if cfg.model == "comp":
        return io.read_counts(cfg.path("counts"), float(cfg.data["nu"]))
    return io.read_network(cfg.path("edges"), cfg.path("nodes"),
                           cfg.data.get("tau_d", 0.25), cfg.data.get("tau_s", 0.25))


def build_model(cfg: RunConfig, data):
    opts = dict(cfg.model_options)
    try:
        if cfg.model == "potts":
            return PottsModel(data.shape, data.K, **opts)
        if cfg.model == "comp":
            return COMPModel(data.X, data.nu, **opts)
        return ERGMModel.for_network(data, **opts)
    except TypeError as exc:
        raise ConfigError(f"model_options: {exc}") from None


def initial_estimate(model_name: str, data):
    """Cheap point estimate and covariance used for initialization.

    Potts: pseudo-likelihood; COMP: Poisson regression; ERGM: MPLE.
    """
    if model_name == "potts":
        theta, var = potts_mple(data)
        return np.array([theta]), np.array([[var]])
    if model_name == "comp":
        return poisson_regression(data.X, data.y)
    return mple(data)


def _start_point(spec, estimate, dim):
    if spec is None or spec == "zero":
        return np.zeros(dim)
    if spec == "estimate":
        return np.asarray(estimate, dtype=float)
    arr = np.asarray(spec, dtype=float).reshape(-1)
    if arr.size != dim:
        raise ConfigError(f"start point has {arr.size} entries, model has {dim} parameters")
    return arr


def _covariance(spec, estimate_cov, dim):
    if spec is None or spec == "estimate":
        return np.asarray(estimate_cov, dtype=float)
    if spec == "identity":
        return np.eye(dim)
    cov = np.asarray(spec, dtype=float)
    if cov.shape != (dim, dim):
        raise ConfigError(f"init_cov must be {dim}x{dim}")
    return cov


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def _run_svgd(cfg, model, data, prior, report_details, timing):
    scfg = cfg.svgd_config()
    est, est_cov = initial_estimate(cfg.model, data)
    x_stats = model.suffstats(data)
    t0 = time.perf_counter()
    start = _start_point(cfg.svgd.get("map_start", "zero"), est, model.param_dim)
    if scfg.map_iters > 0:
        theta_map, map_trace = map_estimate(model, data, scfg.map_iters, derive_seed(cfg.seed, "map"),
                                            start=start, cfg=scfg, workers=cfg.workers,
                                            x_stats=x_stats, return_trace=True)
        sim = map_trace.sim_seconds
    else:
        theta_map, sim = start, 0.0
    timing["map_seconds"] = time.perf_counter() - t0
    cov = _covariance(cfg.svgd.get("init_cov", "estimate"), est_cov, model.param_dim)
    main_seed = derive_seed(cfg.seed, "main")
    particles = init_particles(theta_map, cov, scfg.n_particles, _rng(cfg.seed, "init"), main_seed)
    cache = None if scfg.naive else seed_cache(model, theta_map, scfg.m_mc, _rng(cfg.seed, "cache"))
    ckpt = Path(cfg.out) / "checkpoints" if cfg.svgd.get("checkpoints") else None
    t0 = time.perf_counter()
    ps, trace = run_mcsvgd(model, data, scfg, main_seed, particles=particles, cache=cache, prior=prior,
                           workers=cfg.workers, checkpoint_dir=ckpt, x_stats=x_stats)
    timing["main_seconds"] = time.perf_counter() - t0
    timing["simulation_seconds"] = sim + trace.sim_seconds
    report_details.update({
        "theta_map": theta_map.tolist(), "initial_estimate": np.asarray(est).tolist(),
        "iterations": trace.iterations, "stopped_early": trace.stopped_early,
        "refresh_total": int(sum(trace.refresh_counts)), "cache_size": len(trace.cache),
        "ksd_initial": trace.ksd_initial, "ksd_final": trace.ksd_final,
        "warnings": trace.warnings, "flags": trace.flags,
    })
    return ps.particles, trace.checkpoints


def _run_mcmc(cfg, model, data, prior, report_details, timing):
    ch = dict(cfg.chain)
    kind = cfg.method
    est, est_cov = initial_estimate(cfg.model, data)
    theta0 = _start_point(ch.get("start", "estimate"), est, model.param_dim)
    sd = ch.get("proposal_sd", "auto")
    if sd == "auto":
        cov = _covariance(ch.get("proposal_cov"), est_cov, model.param_dim)
        sd = cov if ch.get("proposal", "diag") == "full" else np.sqrt(np.diag(cov))
    inner = int(ch.get("inner_cycles", {"potts": 30, "ergm": 10}.get(cfg.model, 1)))
    iters, burnin = int(ch.get("iters", 11000)), int(ch.get("burnin", 1000))
    t0 = time.perf_counter()
    history = []
    if ch.get("tune", True):
        sd, theta0, history = tune_proposal(kind, model, data, theta0, sd, _rng(cfg.seed, "tune"),
                                            inner_cycles=inner, prior=prior,
                                            batch=int(ch.get("tune_batch", 200)),
                                            rounds=int(ch.get("tune_rounds", 20)))
    timing["tuning_seconds"] = time.perf_counter() - t0
    chain_seed = derive_seed(cfg.seed, "chain")
    chain = run_chain(kind, model, data, theta0, iters, burnin, sd, np.random.default_rng(chain_seed),
                      inner_cycles=inner, prior=prior, seed=chain_seed)
    chain.tuning = history
    timing["main_seconds"] = chain.wall_seconds
    report_details.update({"acceptance_rate": chain.acceptance_rate, "tuning_rates": history,
                           "proposal_sd": np.asarray(sd).tolist(), "iters": iters, "burnin": burnin,
                           "inner_cycles": inner if kind == "dmh" else None})
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_chain(chain, out / "chain.csv")
    return chain.samples, []


def run_experiment(cfg: RunConfig) -> RunReport:
    """Load data, run the configured method and write report.json plus CSVs to ``cfg.out``."""
    t_start = time.perf_counter()
    cfg.validate()
    data = load_data(cfg)
    model = build_model(cfg, data)
    try:
        prior = make_prior(cfg.prior)
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"prior: {exc}") from None
    timing, details = {}, {}
    if cfg.method in ("mcsvgd", "svgd-naive"):
        samples, traces = _run_svgd(cfg, model, data, prior, details, timing)
    else:
        samples, traces = _run_mcmc(cfg, model, data, prior, details, timing)
    timing["total_seconds"] = time.perf_counter() - t_start
    rows = summarize(samples)
    report = RunReport(cfg.model, cfg.method, rows, traces, timing, cfg.to_dict(), details)
    write_outputs(report, samples, cfg.out)
    return report


def write_outputs(report: RunReport, samples, out) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, default=_json_default)
    io.write_particles(samples, out / "particles.csv")
    write_summary_csv(report.summaries, out / "summary.csv")
    io.write_trace(report.traces, out / "trace.csv")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _balanced(n, values):
    return np.array([values[k * len(values) // max(n, 1)] for k in range(n)], dtype=np.int64)


def simulate_dataset(spec: dict, theta_true, size, seed: int, out) -> dict:
    """Draw a dataset from a model and write it with a JSON provenance sidecar.

    ``spec`` needs ``model`` and may carry model-specific settings
    (COMP: ``nu``, ``covariate_sd``; Potts: ``K``, ``cycles``; ERGM:
    ``cycles``, ``tau_d``, ``tau_s``). Running again with the sidecar's
    contents reproduces the files bit for bit. Returns the written paths.
    """
    spec = dict(spec)
    model = spec.get("model")
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = _rng(seed, f"simulate:{model}")
    theta = np.asarray(theta_true, dtype=float).reshape(-1)
    sidecar = {"model": model, "theta_true": theta.tolist(), "size": size, "seed": int(seed)}
    if model == "comp":
        nu = float(spec.get("nu", np.exp(0.5)))
        sd = float(spec.get("covariate_sd", 0.5))
        X = rng.normal(0.0, sd, size=(int(size), theta.size))
        y = COMPModel(X, nu, int(spec.get("max_tries", 10_000))).simulate_counts(theta, rng) \
            if size else np.zeros(0, dtype=np.int64)
        paths = {"counts": out / "counts.csv"}
        io.write_counts(CountRegressionData(y, X, nu), paths["counts"])
        sidecar.update(nu=nu, covariate_sd=sd, sampler="rejection")
    elif model == "potts":
        shape = (int(size), int(size)) if np.ndim(size) == 0 else tuple(int(s) for s in size)
        K = int(spec.get("K", 4))
        cycles = int(spec.get("cycles", 5000))
        values = rng.integers(0, K, size=shape).astype(np.int64)
        if cycles:
            _sw_cycles(values, theta[0], K, cycles, rng)
        paths = {"lattice": out / "lattice.csv"}
        io.write_lattice(Lattice(values, K), paths["lattice"])
        sidecar.update(K=K, cycles=cycles, sampler="swendsen-wang", start="uniform random")
    else:
        n = int(size)
        cycles = int(spec.get("cycles", 100))
        grade = _balanced(n, list(range(7, 13)))
        sex = np.arange(n, dtype=np.int64) % 2
        net = Network(np.zeros((n, n), dtype=np.int64), grade, sex,
                      spec.get("tau_d", 0.25), spec.get("tau_s", 0.25))
        for _ in range(cycles):
            net = ergm_gibbs_cycle(net, theta, rng)
        paths = {"edges": out / "edges.csv", "nodes": out / "nodes.csv"}
        io.write_network(net, paths["edges"], paths["nodes"])
        sidecar.update(cycles=cycles, tau_d=net.tau_d, tau_s=net.tau_s, sampler="random-scan gibbs",
                       start="empty graph", attributes="grades balanced over 7..12, sex alternating")
    with open(out / "provenance.json", "w") as fh:
        json.dump({"spec": spec, **sidecar}, fh, indent=2)
    return {k: str(v) for k, v in paths.items()}


def resimulate(provenance_path) -> dict:
    """Regenerate a dataset from its sidecar, next to the sidecar."""
    p = Path(provenance_path)
    side = json.loads(p.read_text())
    return simulate_dataset(side["spec"], side["theta_true"], side["size"], side["seed"], p.parent)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def sweep(cfg: RunConfig, axis: str, values) -> list:
    """Re-run ``cfg`` once per value of one SVGD setting.

    Every sub-run uses the same data and master seed, so a single-value
    sweep reproduces ``run_experiment``. Failures are recorded in the
    combined ``sweep.csv`` and the sweep moves on.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {tuple(SWEEP_AXES)}")
    if cfg.method not in ("mcsvgd", "svgd-naive"):
        raise ConfigError("sweeps vary SVGD settings; method must be mcsvgd or svgd-naive")
    reports = []
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for v in values:
        sub = copy.deepcopy(cfg)
        sub.svgd[SWEEP_AXES[axis]] = v if axis == "threshold" else int(v)
        sub.out = str(out / f"{axis}={v}")
        try:
            rep = run_experiment(sub)
        except Exception as exc:  # noqa: BLE001 - recorded and skipped by design
            reports.append(None)
            rows.append([axis, v, "error", "", "", "", "", "", "", f"{type(exc).__name__}: {exc}"])
            continue
        reports.append(rep)
        for r in rep.summaries:
            rows.append([axis, v, "ok", r.coordinate, r.mean, r.hpd_low, r.hpd_high, r.prob,
                         rep.timing.get("total_seconds"), ""])
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "value", "status", "coord", "mean", "hpd_low", "hpd_high", "prob",
                    "wall_seconds", "error"])
        w.writerows(rows)
    return reports
