"""Seeded input sampling, per-sample ODE solves and the two shared-sample MC estimators.

Random numbers come from numpy's counter-based Philox generator keyed by
``SeedSequence(seed, spawn_key=(stream,))``. Each uniform ``k / 2**53`` is
shifted to the open interval ``(k + 1/2) / 2**53`` and mapped to a standard
normal by the inverse CDF, so batches are reproducible bit for bit.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .basis import eval_basis
from .galerkin import PCExpansion, QuadraticStochasticODE
from .integrators import rk4_integrate
from .models import QoiSpec, augment, qoi_from_states

CHUNK = 8192


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    stream: int
    samples: np.ndarray  # (N, n_zeta)

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def n_zeta(self) -> int:
        return self.samples.shape[1]

    @property
    def fingerprint(self) -> tuple:
        return (self.seed, self.stream, self.size)

    def head(self, n: int) -> "SampleBatch":
        """The first ``n`` draws, as drawn."""
        return SampleBatch(self.seed, self.stream, self.samples[:n])


def draw(seed: int, n: int, n_zeta: int, stream: int = 0) -> SampleBatch:
    if n < 1:
        raise ValueError("need at least one sample")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    rng = np.random.Generator(np.random.Philox(ss))
    u = rng.random((n, n_zeta)) + 2.0**-54
    return SampleBatch(int(seed), int(stream), ndtri(u))


@dataclass
class EstimatorResult:
    mean: float
    variance: float
    values: np.ndarray
    cost: float
    fingerprint: tuple


def summarize(values: np.ndarray, cost: float, fingerprint: tuple) -> EstimatorResult:
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    if values.size < 2:
        warnings.warn("sample variance needs at least two samples", RuntimeWarning, stacklevel=2)
        var = math.nan
    else:
        var = float(np.var(values, ddof=1))
    return EstimatorResult(mean, var, values, cost, fingerprint)


class _BatchRHS:
    """Vectorized right-hand side for a block of samples, states laid out ``(n_x, n)``."""

    def __init__(self, model: QuadraticStochasticODE, zeta: np.ndarray):
        n_x, n = model.n_x, zeta.shape[0]
        self.lin = np.zeros((n_x, n_x))
        self.uncertain_lin = []
        self.forcing = np.zeros((n_x, 1))
        self.uncertain_forcing = np.zeros((n_x, n))
        pairs: dict = {}
        pw: dict = {}
        for term in model.terms:
            deg = len(term.factors)
            if deg == 0:
                if term.coef.is_constant:
                    self.forcing[term.state, 0] += term.coef.const
                else:
                    self.uncertain_forcing[term.state] += term.coef.evaluate(zeta)
            elif deg == 1:
                if term.coef.is_constant:
                    self.lin[term.state, term.factors[0]] += term.coef.const
                else:
                    self.uncertain_lin.append((term.state, term.factors[0], term.coef.evaluate(zeta)))
            else:
                if not term.coef.is_constant:
                    raise ValueError("bilinear terms must have deterministic coefficients")
                key = tuple(sorted(term.factors))
                j = pairs.setdefault(key, len(pairs))
                pw[(term.state, j)] = pw.get((term.state, j), 0.0) + term.coef.const
        self.pairs = np.array(sorted(pairs, key=pairs.get), dtype=np.int64).reshape(-1, 2)
        self.pair_weights = np.zeros((n_x, len(self.pairs)))
        for (k, j), w in pw.items():
            self.pair_weights[k, j] = w
        if not self.uncertain_forcing.any():
            self.uncertain_forcing = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = self.lin @ x + self.forcing
        if self.uncertain_forcing is not None:
            out += self.uncertain_forcing
        for k, a, c in self.uncertain_lin:
            out[k] += c * x[a]
        if len(self.pairs):
            out += self.pair_weights @ (x[self.pairs[:, 0]] * x[self.pairs[:, 1]])
        return out


def initial_states(model: QuadraticStochasticODE, zeta: np.ndarray) -> np.ndarray:
    return np.vstack([expr.evaluate(zeta) for expr in model.initial])


def simulate_states(model: QuadraticStochasticODE, zeta: np.ndarray, record_times) -> np.ndarray:
    """States of every sample at ``record_times``: ``(n_t, n_x, N)``."""
    model.validate()
    res = rk4_integrate(_BatchRHS(model, zeta), initial_states(model, zeta), model.step, record_times)
    return res.states


def simulate_qoi(model: QuadraticStochasticODE, qoi: QoiSpec, batch: SampleBatch, times,
                 workers: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Per-sample QoI values ``(n_t, N)`` from one true-model solve per sample.

    Samples are processed in fixed blocks and written back by block index, so
    the result does not depend on ``workers``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size and times.max() > model.t_final * (1 + 1e-12):
        raise ValueError("requested time beyond the model horizon")
    if batch.n_zeta != model.n_zeta:
        raise ValueError(f"batch has {batch.n_zeta} input dimensions, model has {model.n_zeta}")
    aug, _ = augment(model, qoi)
    aug.validate()
    out = np.empty((times.size, batch.size))
    starts = range(0, batch.size, chunk)

    def run(start):
        zeta = batch.samples[start:start + chunk]
        states = simulate_states(aug, zeta, times)
        out[:, start:start + zeta.shape[0]] = qoi_from_states(states, times, qoi)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return out


def mc_estimate(model: QuadraticStochasticODE, qoi: QoiSpec, batch: SampleBatch,
                t: float | None = None, workers: int = 1) -> EstimatorResult:
    t = qoi.t if t is None else t
    values = simulate_qoi(model, qoi, batch, [t], workers=workers)[0]
    return summarize(values, float(batch.size), batch.fingerprint)


def cme_estimate(exp: PCExpansion, batch: SampleBatch) -> EstimatorResult:
    """Shared-sample MC estimate of the surrogate mean; its sampling cost is ignored."""
    if exp.basis.n_zeta != batch.n_zeta:
        raise ValueError(f"expansion has {exp.basis.n_zeta} input dimensions, batch has {batch.n_zeta}")
    values = eval_basis(exp.basis, batch.samples) @ np.asarray(exp.coefficients, dtype=float)
    return summarize(values, 0.0, batch.fingerprint)
