"""Control-variate combination of sampled high-fidelity values with a polynomial chaos surrogate.

Weights follow the convention ``estimate = high + alpha * (low - known_low_mean)``,
so a positively correlated surrogate gets a negative weight.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .montecarlo import EstimatorResult

log = logging.getLogger(__name__)


class DegenerateSurrogate(ValueError):
    """The surrogate has no sample variability, so it cannot act as a control variate."""


class BatchMismatch(ValueError):
    """High- and low-fidelity values were not computed on the same samples."""


@dataclass(frozen=True)
class CvWeights:
    alpha_mean: float
    alpha_variance: float
    rho: float
    degenerate: bool = False


@dataclass(frozen=True)
class CrossMoments:
    var_Q: float
    var_Qpc: float
    cov_Q_Qpc: float
    var_Qpc_sq: float
    cov_Qsq_Qpcsq: float
    cov_Q_Qpcsq: float
    cov_Qsq_Qpc: float
    cov_Qpcsq_Qpc: float
    mu: float
    mu_pc: float

    @classmethod
    def from_samples(cls, q, qpc, mu: float, mu_pc: float) -> "CrossMoments":
        """Unbiased (1/(N-1)) sample moments of the per-sample values."""
        q = np.asarray(q, dtype=float)
        qpc = np.asarray(qpc, dtype=float)
        _check_pair(q, qpc)

        def cov(a, b):
            return float(np.cov(a, b, ddof=1)[0, 1])

        q2, p2 = q * q, qpc * qpc
        return cls(
            var_Q=float(np.var(q, ddof=1)),
            var_Qpc=float(np.var(qpc, ddof=1)),
            cov_Q_Qpc=cov(q, qpc),
            var_Qpc_sq=float(np.var(p2, ddof=1)),
            cov_Qsq_Qpcsq=cov(q2, p2),
            cov_Q_Qpcsq=cov(q, p2),
            cov_Qsq_Qpc=cov(q2, qpc),
            cov_Qpcsq_Qpc=cov(p2, qpc),
            mu=float(mu),
            mu_pc=float(mu_pc),
        )


def _check_pair(q: np.ndarray, qpc: np.ndarray) -> None:
    if q.shape != qpc.shape or q.ndim != 1:
        raise BatchMismatch("per-sample vectors must be one-dimensional and of equal length")
    if q.size < 2:
        raise ValueError("need at least two samples")


def _check_fingerprints(mc: EstimatorResult, cme: EstimatorResult) -> None:
    if mc.fingerprint != cme.fingerprint:
        raise BatchMismatch(f"samples differ: {mc.fingerprint} vs {cme.fingerprint}")


def pearson(q, qpc) -> float:
    """Sample correlation clamped to [-1, 1]; 0 for a constant input."""
    q = np.asarray(q, dtype=float)
    qpc = np.asarray(qpc, dtype=float)
    _check_pair(q, qpc)
    if np.ptp(q) == 0.0 or np.ptp(qpc) == 0.0:
        return 0.0
    sq, sp = np.std(q, ddof=1), np.std(qpc, ddof=1)
    if not (sq > 0.0 and sp > 0.0):  # spread below floating-point resolution
        return 0.0
    rho = float(np.cov(q, qpc, ddof=1)[0, 1] / (sq * sp))
    if abs(rho) > 1.0:
        log.info("clamped sample correlation %.17g to [-1, 1]", rho)
        rho = float(np.clip(rho, -1.0, 1.0))
    return rho


def optimal_alpha_mean(q, qpc) -> float:
    """``-Cov[Q, Qpc] / Var[Qpc]`` from 1/(N-1) sample moments."""
    q = np.asarray(q, dtype=float)
    qpc = np.asarray(qpc, dtype=float)
    _check_pair(q, qpc)
    if np.ptp(qpc) == 0.0:
        raise DegenerateSurrogate("surrogate values are constant")
    var_pc = float(np.var(qpc, ddof=1))
    return -float(np.cov(q, qpc, ddof=1)[0, 1]) / var_pc


def optimal_alpha_variance(m: CrossMoments) -> float:
    """Weight minimizing the variance of the control-variate variance estimator.

    The high-fidelity statistic is ``(Q - mu)^2`` and its control is
    ``(Qpc - mu_pc)^2``, so the weight is ``-Cov[.,.] / Var[.]`` of those two
    squared deviations, expanded in raw cross-moments.
    """
    mu, mp = m.mu, m.mu_pc
    num = (m.cov_Qsq_Qpcsq - 2.0 * mu * m.cov_Q_Qpcsq - 2.0 * mp * m.cov_Qsq_Qpc
           + 4.0 * mu * mp * m.cov_Q_Qpc)
    den = m.var_Qpc_sq + 4.0 * mp * mp * m.var_Qpc - 4.0 * mp * m.cov_Qpcsq_Qpc
    if not den > 0.0:
        raise DegenerateSurrogate("squared surrogate deviations have no variance")
    return -num / den


def weights_from_samples(q, qpc, mu: float, mu_pc: float) -> CvWeights:
    """Both weights and the correlation; a degenerate surrogate gives plain MC (alpha = 0)."""
    rho = pearson(q, qpc)
    try:
        a_mean = optimal_alpha_mean(q, qpc)
        a_var = optimal_alpha_variance(CrossMoments.from_samples(q, qpc, mu, mu_pc))
    except DegenerateSurrogate:
        return CvWeights(0.0, 0.0, 0.0, degenerate=True)
    return CvWeights(a_mean, a_var, rho)


def cvpc_mean(mc: EstimatorResult, cme: EstimatorResult, cvm: float, alpha: float) -> float:
    _check_fingerprints(mc, cme)
    return mc.mean + alpha * (cme.mean - cvm)


def cvpc_variance(q, qpc, mu: float, mu_pc: float, var_pc_analytic: float, alpha: float) -> float:
    q = np.asarray(q, dtype=float)
    qpc = np.asarray(qpc, dtype=float)
    if q.shape != qpc.shape:
        raise BatchMismatch("per-sample vectors differ in length")
    high = float(np.mean((q - mu) ** 2))
    low = float(np.mean((qpc - mu_pc) ** 2))
    return high + alpha * (low - var_pc_analytic)


def variance_reduction_ratio(rho: float) -> float:
    if abs(rho) > 1.0:
        raise ValueError("correlation must lie in [-1, 1]")
    return 1.0 - rho * rho
