"""Experiment orchestration behind the command-line interface.

Random streams are split from the master seed as ``SeedSequence(seed, spawn_key=(stream,))``:

* stream 0: pilot batch (design fit and control-variate weights)
* stream 1: reference batch
* stream 2: the batch used by ``estimate``
* stream 1000 + r: replication r of ``benchmark``
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import Scheme, build_basis, eval_basis
from .cv import (CrossMoments, DegenerateSurrogate, cvpc_variance, optimal_alpha_mean,
                 optimal_alpha_variance, pearson)
from .design import (EstimatorDesign, InfeasibleBudget, design_curve, fit_models, run_pilot,
                     solve_discrete)
from .galerkin import GalerkinTrajectory, integrate, project
from .integrators import steps_for
from .models import INTEGRAL, STATE, ModelPreset, QoiSpec, augment, get_preset, qoi_from_galerkin
from .montecarlo import SampleBatch, draw, simulate_qoi

PILOT_STREAM = 0
REFERENCE_STREAM = 1
ESTIMATE_STREAM = 2
REPLICATION_STREAM_BASE = 1000

CSV_COLUMNS = ["t", "estimator", "stat", "estimate", "rmse", "alpha", "rho", "cost", "replication_mode"]
ESTIMATORS = ("MC", "gPC", "CVPC", "CVPC-suboptimal")
REFERENCE_FORMAT = "cvpc-reference/1"


class ConfigError(ValueError):
    pass


class CacheConflict(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    seed: int
    budget_hf_sample_units: float
    qoi_kind: str | None = None
    qoi_state: int = 0
    qoi_weights: tuple | None = None
    qoi_time_units: float | None = None
    step_time_units: float = 1e-3
    report_start_time_units: float = 0.0
    report_end_time_units: float | None = None
    report_interval_time_units: float = 0.25
    scheme: str = "total-order"
    pilot_max_degree: int = 4
    pilot_samples: int = 500
    replications: int = 1
    reference_samples: int = 100_000
    reference_cache_path: str = "reference.json"
    weight_mode: str = "pilot"
    alpha_zero: bool = False
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        for key in ("model", "seed", "budget_hf_sample_units"):
            if key not in raw:
                raise ConfigError(f"missing required config field {key!r}")
        data = dict(raw)
        if data.get("qoi_weights") is not None:
            data["qoi_weights"] = tuple(float(w) for w in data["qoi_weights"])
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(raw)

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an explicit unsigned 64-bit integer")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.budget_hf_sample_units > 0:
            raise ConfigError("budget must be positive")
        if self.weight_mode not in ("pilot", "reference"):
            raise ConfigError("weight_mode must be 'pilot' or 'reference'")
        if self.pilot_samples < 2 or self.pilot_max_degree < 1:
            raise ConfigError("pilot needs >= 2 samples and max degree >= 1")
        if self.reference_samples < 2:
            raise ConfigError("reference needs >= 2 samples")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.report_interval_time_units > 0:
            raise ConfigError("report interval must be positive")
        try:
            Scheme(self.scheme)
        except ValueError:
            raise ConfigError(f"unknown expansion scheme {self.scheme!r}") from None

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = dataclasses.replace(self, **kw)
        cfg.validate()
        return cfg


@dataclass
class Setup:
    config: ExperimentConfig
    preset: ModelPreset
    qoi: QoiSpec
    times: np.ndarray

    @property
    def model(self):
        return self.preset.model


def prepare(cfg: ExperimentConfig) -> Setup:
    try:
        base = get_preset(cfg.model)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    qoi = base.qoi
    if cfg.qoi_kind is not None:
        if cfg.qoi_kind not in (STATE, INTEGRAL):
            raise ConfigError(f"unknown QoI kind {cfg.qoi_kind!r}")
        weights = cfg.qoi_weights if cfg.qoi_weights is not None else (1.0,) * base.model.n_x
        qoi = QoiSpec(cfg.qoi_kind, cfg.qoi_state, weights if cfg.qoi_kind == INTEGRAL else (), qoi.t)
    if cfg.qoi_time_units is not None:
        qoi = dataclasses.replace(qoi, t=float(cfg.qoi_time_units))
    h = float(cfg.step_time_units)
    end = qoi.t if cfg.report_end_time_units is None else float(cfg.report_end_time_units)
    start = float(cfg.report_start_time_units)
    if end < start or start < 0:
        raise ConfigError("report window must satisfy 0 <= start <= end")
    count = int(round((end - start) / cfg.report_interval_time_units))
    times = start + cfg.report_interval_time_units * np.arange(count + 1)
    try:
        # snap onto the integration grid; off-grid times are a config error
        times = np.array([steps_for(t, h) * h for t in times])
        steps_for(qoi.t, h)
        horizon = steps_for(max(end, qoi.t), h) * h
        preset = get_preset(cfg.model, step=h, t_final=horizon)
        augment(preset.model, qoi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Setup(cfg, preset, qoi, times)


# ---------------------------------------------------------------- reference

def reference_header(setup: Setup) -> dict:
    cfg = setup.config
    return {
        "model": setup.preset.name,
        "preset_version": setup.preset.version,
        "qoi": {"kind": setup.qoi.kind, "state": setup.qoi.state, "weights": list(setup.qoi.weights)},
        "step_time_units": cfg.step_time_units,
        "seed": cfg.seed,
        "stream": REFERENCE_STREAM,
        "samples": cfg.reference_samples,
        "times_time_units": [float(t) for t in setup.times],
    }


def build_reference(setup: Setup) -> dict:
    cfg = setup.config
    batch = draw(cfg.seed, cfg.reference_samples, setup.model.n_zeta, REFERENCE_STREAM)
    q = simulate_qoi(setup.model, setup.qoi, batch, setup.times, workers=cfg.workers)
    var = np.var(q, axis=1, ddof=1)
    return {
        "format": REFERENCE_FORMAT,
        "header": reference_header(setup),
        "mean": [float(v) for v in q.mean(axis=1)],
        "variance": [float(v) for v in var],
        "stderr_mean": [float(v) for v in np.sqrt(var / q.shape[1])],
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_or_build_reference(setup: Setup, force: bool = False) -> tuple[dict, bool]:
    """Cached reference for ``setup``; the flag is True on a cache hit.

    A cache file whose header differs is never overwritten unless ``force``.
    """
    path = setup.config.reference_cache_path
    expected = reference_header(setup)
    if os.path.exists(path):
        try:
            with open(path) as fh:
                cached = json.load(fh)
        except (OSError, json.JSONDecodeError):
            cached = None
        if cached is not None and cached.get("format") == REFERENCE_FORMAT and cached.get("header") == expected:
            return cached, True
        if not force:
            raise CacheConflict(f"reference cache {path} was built with different parameters; "
                                "pass --force to overwrite")
    ref = build_reference(setup)
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(_dump(ref))
    return ref, False


# ---------------------------------------------------------------- pilot, design, weights

@dataclass
class Pilot:
    batch: SampleBatch
    q: np.ndarray  # (n_t, N) at the report times
    design: EstimatorDesign
    stats: object
    p0_cost: float


def _all_times(setup: Setup) -> np.ndarray:
    return np.unique(np.append(setup.times, setup.qoi.t))


def check_budget(setup: Setup) -> float:
    """Measured degree-0 surrogate cost; raises when the budget cannot cover it plus one sample."""
    aug, _ = augment(setup.model, setup.qoi)
    c0 = project(aug, build_basis(setup.model.n_zeta, 0, setup.config.scheme)).cost
    if setup.config.budget_hf_sample_units < 1.0 + c0:
        raise InfeasibleBudget(
            f"infeasible budget: {setup.config.budget_hf_sample_units} < one sample (1) "
            f"plus the degree-0 surrogate ({c0})")
    return c0


def run_design(setup: Setup) -> Pilot:
    cfg = setup.config
    c0 = check_budget(setup)
    batch = draw(cfg.seed, cfg.pilot_samples, setup.model.n_zeta, PILOT_STREAM)
    times = _all_times(setup)
    q_all = simulate_qoi(setup.model, setup.qoi, batch, times, workers=cfg.workers)
    q_design = q_all[int(np.searchsorted(times, setup.qoi.t))]
    stats = run_pilot(setup.model, setup.qoi, cfg.pilot_max_degree, cfg.pilot_samples, cfg.seed,
                      cfg.scheme, batch=batch, q=q_design)
    corr, cost, flags = fit_models(stats, cfg.scheme, setup.model.n_zeta)
    design = solve_discrete(corr, cost, cfg.budget_hf_sample_units, 1.0, flags)
    q_report = q_all[np.searchsorted(times, setup.times)]
    return Pilot(batch, q_report, design, stats, c0)


@dataclass
class Surrogate:
    degree: int
    trajectory: GalerkinTrajectory
    coefficients: np.ndarray  # (n_t, M) QoI coefficients at the report times
    cost: float

    @property
    def basis(self):
        return self.trajectory.system.basis

    def values(self, samples: np.ndarray) -> np.ndarray:
        """Per-sample surrogate QoI, ``(n_t, N)``."""
        return (eval_basis(self.basis, samples) @ self.coefficients.T).T

    def mean(self) -> np.ndarray:
        return self.coefficients[:, 0]

    def variance(self) -> np.ndarray:
        return np.sum(self.coefficients[:, 1:] ** 2, axis=1)


def build_surrogate(setup: Setup, degree: int) -> Surrogate:
    aug, _ = augment(setup.model, setup.qoi)
    system = project(aug, build_basis(setup.model.n_zeta, degree, setup.config.scheme))
    traj = integrate(system, record_times=setup.times)
    return Surrogate(degree, traj, qoi_from_galerkin(traj, setup.qoi), system.cost)


def max_feasible_degree(setup: Setup, budget: float) -> int:
    """Largest degree whose measured surrogate cost fits in ``budget``."""
    aug, _ = augment(setup.model, setup.qoi)
    p = 0
    while project(aug, build_basis(setup.model.n_zeta, p + 1, setup.config.scheme)).cost <= budget:
        p += 1
    return p


@dataclass
class Weights:
    alpha_mean: np.ndarray
    alpha_variance: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    flags: list = field(default_factory=list)


def control_weights(setup: Setup, surrogate: Surrogate, batch: SampleBatch, q: np.ndarray,
                    mu: np.ndarray) -> Weights:
    """Per-time weights from pilot values; unusable surrogate times fall back to alpha = 0."""
    n_t = len(setup.times)
    a_mean, a_var, rho = np.zeros(n_t), np.zeros(n_t), np.zeros(n_t)
    flags = []
    qpc = surrogate.values(batch.samples)
    for i, t in enumerate(setup.times):
        coef = surrogate.coefficients[i]
        if not np.all(np.isfinite(coef)):
            flags.append(f"surrogate_diverged_t{t:.17g}")
            continue
        if not np.any(coef[1:]):
            continue  # constant surrogate: plain MC
        try:
            a_mean[i] = optimal_alpha_mean(q[i], qpc[i])
            a_var[i] = optimal_alpha_variance(CrossMoments.from_samples(q[i], qpc[i], mu[i], coef[0]))
        except DegenerateSurrogate:
            a_mean[i] = a_var[i] = 0.0
            continue
        rho[i] = pearson(q[i], qpc[i])
    return Weights(a_mean, a_var, rho, np.asarray(mu, dtype=float), flags)


def executed_samples(design: EstimatorDesign, surrogate_cost: float, budget: float) -> int:
    """Design sample count, trimmed if the measured surrogate cost leaves less room."""
    return max(0, min(design.N_star, int(math.floor(budget - surrogate_cost))))


# ---------------------------------------------------------------- commands

def fmt(x) -> str:
    return format(float(x), ".17g")


def design_document(setup: Setup, pilot: Pilot) -> dict:
    d = pilot.design
    budgets = [float(b) for b in np.linspace(0.25, 2.0, 8) * setup.config.budget_hf_sample_units]
    return {
        "model": setup.preset.name,
        "seed": setup.config.seed,
        "qoi_time_units": setup.qoi.t,
        "design": d.to_dict(),
        "pilot": {
            "samples": pilot.stats.n_pilot,
            "degrees": list(pilot.stats.degrees),
            "rho": list(pilot.stats.rho),
            "cost_hf_sample_units": list(pilot.stats.costs),
            "degenerate": list(pilot.stats.degenerate),
            "diverged": list(pilot.stats.diverged),
        },
        "predicted_variance_curve": design_curve(d.correlation, d.cost, budgets),
    }


def cmd_design(cfg: ExperimentConfig) -> str:
    setup = prepare(cfg)
    return _dump(design_document(setup, run_design(setup)))


def _mu(setup: Setup, pilot: Pilot, reference: dict | None) -> np.ndarray:
    if setup.config.weight_mode == "reference":
        return np.asarray(reference["mean"], dtype=float)
    return pilot.q.mean(axis=1)


def cmd_estimate(cfg: ExperimentConfig, design_doc: dict, alpha_zero: bool = False) -> str:
    setup = prepare(cfg)
    pilot = run_design(setup)
    p_star = int(design_doc["design"]["p_star"])
    n_star = int(design_doc["design"]["N_star"])
    budget = cfg.budget_hf_sample_units
    surrogate = build_surrogate(setup, p_star)
    n_exec = min(n_star, int(math.floor(budget - surrogate.cost)))
    if n_exec < 1:
        raise InfeasibleBudget("infeasible budget: the surrogate leaves no room for a sample")
    reference = load_or_build_reference(setup)[0] if cfg.weight_mode == "reference" else None
    mu = _mu(setup, pilot, reference)
    w = control_weights(setup, surrogate, pilot.batch, pilot.q, mu)
    zero = alpha_zero or cfg.alpha_zero
    batch = draw(cfg.seed, n_exec, setup.model.n_zeta, ESTIMATE_STREAM)
    q = simulate_qoi(setup.model, setup.qoi, batch, setup.times, workers=cfg.workers)
    qpc = surrogate.values(batch.samples)
    rows = []
    for i, t in enumerate(setup.times):
        diverged = not np.all(np.isfinite(surrogate.coefficients[i]))
        a_m = 0.0 if (zero or diverged) else float(w.alpha_mean[i])
        a_v = 0.0 if (zero or diverged) else float(w.alpha_variance[i])
        mc_mean = float(np.mean(q[i]))
        mu_pc = 0.0 if diverged else float(surrogate.coefficients[i, 0])
        cme = 0.0 if diverged else float(np.mean(qpc[i]))
        var_pc = 0.0 if diverged else float(surrogate.variance()[i])
        low = np.zeros_like(q[i]) if diverged else qpc[i]
        rows.append({
            "t_time_units": float(t),
            "cvpc_mean": mc_mean + a_m * (cme - mu_pc),
            "cvpc_variance": cvpc_variance(q[i], low, float(mu[i]), mu_pc, var_pc, a_v),
            "mc_mean": mc_mean,
            "mc_variance": float(np.var(q[i], ddof=1)) if n_exec > 1 else None,
            "alpha_mean": a_m,
            "alpha_variance": a_v,
            "rho": float(w.rho[i]),
            "surrogate_diverged": diverged,
        })
    doc = {
        "model": setup.preset.name,
        "seed": cfg.seed,
        "weight_mode": cfg.weight_mode,
        "alpha_forced_zero": zero,
        "p_star": p_star,
        "samples": n_exec,
        "samples_designed": n_star,
        "cost_hf_sample_units": {"samples": float(n_exec), "surrogate": surrogate.cost,
                                 "total": n_exec + surrogate.cost},
        "flags": w.flags,
        "estimates": rows,
    }
    if any(r["surrogate_diverged"] for r in rows):
        warnings.warn("surrogate diverged before some report times; alpha set to 0 there", RuntimeWarning)
    return _dump(doc)


@dataclass
class BenchmarkResult:
    times: np.ndarray
    reference_mean: np.ndarray
    reference_variance: np.ndarray
    reference_stderr: np.ndarray
    estimates: dict  # (estimator, stat) -> (R, n_t)
    alphas: dict  # (estimator, stat) -> (n_t,)
    rho: np.ndarray
    costs: dict
    design: EstimatorDesign
    gpc_degree: int
    cvpc_samples: int
    mc_samples: int
    replications: int
    flags: list

    def rmse(self, estimator: str, stat: str) -> np.ndarray:
        ref = self.reference_mean if stat == "mean" else self.reference_variance
        err = self.estimates[(estimator, stat)] - ref[None, :]
        return np.sqrt(np.mean(err ** 2, axis=0))

    def squared_errors(self, estimator: str, stat: str) -> np.ndarray:
        ref = self.reference_mean if stat == "mean" else self.reference_variance
        return (self.estimates[(estimator, stat)] - ref[None, :]) ** 2


def run_benchmark(cfg: ExperimentConfig, force_reference: bool = False) -> BenchmarkResult:
    setup = prepare(cfg)
    budget = cfg.budget_hf_sample_units
    reference, _ = load_or_build_reference(setup, force=force_reference)
    pilot = run_design(setup)
    design = pilot.design
    surrogate = build_surrogate(setup, design.p_star)
    n_cv = executed_samples(design, surrogate.cost, budget)
    n_mc = int(math.floor(budget))
    p_gpc = max_feasible_degree(setup, budget)
    gpc = build_surrogate(setup, p_gpc)
    mu = _mu(setup, pilot, reference)
    w = control_weights(setup, surrogate, pilot.batch, pilot.q, mu)

    R, n_t, n_zeta = cfg.replications, len(setup.times), setup.model.n_zeta
    batches = [draw(cfg.seed, n_mc, n_zeta, REPLICATION_STREAM_BASE + r) for r in range(R)]
    stacked = SampleBatch(cfg.seed, REPLICATION_STREAM_BASE, np.vstack([b.samples for b in batches]))
    q_all = simulate_qoi(setup.model, setup.qoi, stacked, setup.times, workers=cfg.workers)

    est = {(e, s): np.empty((R, n_t)) for e in ESTIMATORS for s in ("mean", "variance")}
    mu_pc = surrogate.mean()
    var_pc = surrogate.variance()
    usable = np.all(np.isfinite(surrogate.coefficients), axis=1)
    for r, b in enumerate(batches):
        q = q_all[:, r * n_mc:(r + 1) * n_mc]
        est[("MC", "mean")][r] = q.mean(axis=1)
        est[("MC", "variance")][r] = np.var(q, axis=1, ddof=1)
        est[("gPC", "mean")][r] = gpc.mean()
        est[("gPC", "variance")][r] = gpc.variance()
        qc = q[:, :n_cv]
        qpc = surrogate.values(b.samples[:n_cv])
        for i in range(n_t):
            if not usable[i]:
                m = float(np.mean(qc[i]))
                v = float(np.mean((qc[i] - mu[i]) ** 2))
                for e in ("CVPC", "CVPC-suboptimal"):
                    est[(e, "mean")][r, i] = m
                    est[(e, "variance")][r, i] = v
                continue
            correction = float(np.mean(qpc[i])) - mu_pc[i]
            high = float(np.mean(qc[i]))
            est[("CVPC", "mean")][r, i] = high + w.alpha_mean[i] * correction
            est[("CVPC-suboptimal", "mean")][r, i] = high + w.alpha_variance[i] * correction
            est[("CVPC", "variance")][r, i] = cvpc_variance(
                qc[i], qpc[i], mu[i], mu_pc[i], var_pc[i], w.alpha_variance[i])
            est[("CVPC-suboptimal", "variance")][r, i] = cvpc_variance(
                qc[i], qpc[i], mu[i], mu_pc[i], var_pc[i], w.alpha_mean[i])

    nan = np.full(n_t, np.nan)
    zeros = np.zeros(n_t)
    alphas = {
        ("MC", "mean"): zeros, ("MC", "variance"): zeros,
        ("gPC", "mean"): nan, ("gPC", "variance"): nan,
        ("CVPC", "mean"): w.alpha_mean, ("CVPC", "variance"): w.alpha_variance,
        ("CVPC-suboptimal", "mean"): w.alpha_variance, ("CVPC-suboptimal", "variance"): w.alpha_mean,
    }
    costs = {"MC": float(n_mc), "gPC": gpc.cost, "CVPC": n_cv + surrogate.cost,
             "CVPC-suboptimal": n_cv + surrogate.cost}
    flags = list(design.flags) + w.flags
    if gpc.trajectory.diverged:
        flags.append(f"gpc_diverged_after_t{gpc.trajectory.last_finite_time:.17g}")
    return BenchmarkResult(
        setup.times, np.asarray(reference["mean"]), np.asarray(reference["variance"]),
        np.asarray(reference["stderr_mean"]), est, alphas, w.rho, costs, design, p_gpc, n_cv,
        n_mc, R, flags)


def benchmark_csv(res: BenchmarkResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    mode = "single" if res.replications == 1 else "replicated"
    rho_of = {"MC": np.full(len(res.times), np.nan), "gPC": np.full(len(res.times), np.nan),
              "CVPC": res.rho, "CVPC-suboptimal": res.rho}
    for i, t in enumerate(res.times):
        for e in ESTIMATORS:
            for s in ("mean", "variance"):
                writer.writerow([
                    fmt(t), e, s,
                    fmt(np.mean(res.estimates[(e, s)][:, i])),
                    fmt(res.rmse(e, s)[i]),
                    fmt(res.alphas[(e, s)][i]),
                    fmt(rho_of[e][i]),
                    fmt(res.costs[e]),
                    mode,
                ])
    return buf.getvalue()


def benchmark_summary(cfg: ExperimentConfig, res: BenchmarkResult) -> dict:
    rel = {}
    for e in ESTIMATORS:
        for s in ("mean", "variance"):
            ref = res.reference_mean if s == "mean" else res.reference_variance
            rel[f"{e}/{s}"] = [float(v) for v in res.rmse(e, s) / np.abs(ref)]
    return {
        "model": cfg.model,
        "seed": cfg.seed,
        "replications": res.replications,
        "replication_streams": f"{REPLICATION_STREAM_BASE} + r",
        "weight_mode": cfg.weight_mode,
        "budget_hf_sample_units": cfg.budget_hf_sample_units,
        "design": res.design.to_dict(),
        "cvpc_samples": res.cvpc_samples,
        "mc_samples": res.mc_samples,
        "gpc_degree": res.gpc_degree,
        "cost_hf_sample_units": res.costs,
        "times_time_units": [float(t) for t in res.times],
        "reference_mean": [float(v) for v in res.reference_mean],
        "reference_variance": [float(v) for v in res.reference_variance],
        "reference_stderr_mean": [float(v) for v in res.reference_stderr],
        "relative_rmse": rel,
        "flags": res.flags,
    }


def cmd_benchmark(cfg: ExperimentConfig, out_dir: str, force_reference: bool = False) -> BenchmarkResult:
    res = run_benchmark(cfg, force_reference)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "benchmark.csv"), "w") as fh:
        fh.write(benchmark_csv(res))
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        fh.write(_dump(benchmark_summary(cfg, res)))
    return res


def cmd_reference(cfg: ExperimentConfig, force: bool = False) -> tuple[dict, bool]:
    return load_or_build_reference(prepare(cfg), force=force)
