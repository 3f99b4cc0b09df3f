"""Choosing the surrogate degree and sample count under a fixed budget.

The predicted estimator variance is proportional to ``f_rho(p) / N`` with
``f_rho = 1 - rho^2``. Spending the rest of the budget on samples gives the
objective ``J(p) = f_rho(p) / (C0 - f_c(p))``. With ``f_rho = k1 exp(-k2 p)``
and a convex increasing cost model ``f_c``, J is convex in p. Its derivative has
the sign of ``g(p) = f_c'(p) + k2 f_c(p) - k2 C0``, which is increasing, so the
signs of g at the ends of the feasible interval decide which case applies.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import Scheme, build_basis, eval_basis, triple_products
from .cv import pearson
from .galerkin import QuadraticStochasticODE, integrate, project
from .models import QoiSpec, augment, qoi_from_galerkin
from .montecarlo import draw, simulate_qoi

log = logging.getLogger(__name__)

RHO_FLOOR = 1e-12
ROOT_WIDTH = 1e-8
POSITIVE_FLOOR = 1e-12

INCREASING = "increasing"
DECREASING = "decreasing"
NON_MONOTONIC = "non-monotonic"


class InfeasibleBudget(ValueError):
    """The budget cannot pay for one sample plus the cheapest surrogate."""


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationModel:
    """``f_rho(p) = k1 exp(-k2 p)``, the modelled ``1 - rho^2`` at degree p.

    ``f_zero`` is the degree-0 value used by the total-order comparison with
    ``p = 0``; a constant surrogate gives no reduction, so the pilot sets it to 1.
    """

    k1: float
    k2: float
    f_zero: float | None = None

    def __call__(self, p):
        return self.k1 * np.exp(-self.k2 * np.asarray(p, dtype=float))

    def derivative(self, p):
        return -self.k2 * self(p)


@dataclass(frozen=True)
class CostModel:
    """Surrogate cost as a function of degree, in units of one sample.

    Tensor product: ``k3 (p + 1)^(k4 n)``. Total order: ``k3 S(p)^k4`` with
    ``S(p)`` the Stirling form of ``(p + n)! / (n! p!)``, valid for ``p >= 1``.
    ``cost_zero`` is the degree-0 cost used by the total-order comparison with
    ``p = 0``; it defaults to ``k3``.
    """

    scheme: Scheme
    k3: float
    k4: float
    n_zeta: int
    cost_zero: float | None = None

    @property
    def lower(self) -> int:
        return 1 if Scheme(self.scheme) is Scheme.TOTAL_ORDER else 0

    def log_structural(self, p: float) -> float:
        n = self.n_zeta
        if Scheme(self.scheme) is Scheme.TENSOR_PRODUCT:
            return n * math.log(p + 1.0)
        if p <= 0:
            raise ValueError("Stirling cost form needs p > 0")
        return ((p + n + 0.5) * math.log(p + n) - math.lgamma(n + 1) - n
                - (p + 0.5) * math.log(p))

    def log_cost(self, p: float) -> float:
        return math.log(self.k3) + self.k4 * self.log_structural(p)

    def __call__(self, p: float) -> float:
        if Scheme(self.scheme) is Scheme.TENSOR_PRODUCT:
            return self.k3 * (p + 1.0) ** (self.k4 * self.n_zeta)  # exact at integer points
        if p == 0:
            return self.k3 if self.cost_zero is None else float(self.cost_zero)
        return math.exp(self.log_cost(p))

    def log_derivative(self, p: float) -> float:
        """``f_c'(p) / f_c(p)``."""
        n = self.n_zeta
        if Scheme(self.scheme) is Scheme.TENSOR_PRODUCT:
            return self.k4 * n / (p + 1.0)
        return self.k4 * (math.log((p + n) / p) - n / (2.0 * p * (p + n)))

    def derivative(self, p: float) -> float:
        return self(p) * self.log_derivative(p)


@dataclass
class PilotStats:
    C: float
    degrees: tuple
    rho: tuple
    costs: tuple
    n_pilot: int
    p_pilot: int
    degenerate: tuple = ()
    diverged: tuple = ()
    var_q: float = math.nan


@dataclass
class EstimatorDesign:
    p_star: int
    N_star: int
    C0: float
    C: float
    correlation: CorrelationModel
    cost: CostModel
    predicted_variance_factor: float
    branch: str
    p_continuous: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p_star": self.p_star,
            "N_star": self.N_star,
            "budget_hf_sample_units": self.C0,
            "hf_sample_cost_units": self.C,
            "k1": self.correlation.k1,
            "k2": self.correlation.k2,
            "degree0_variance_factor": self.correlation.f_zero,
            "k3": self.cost.k3,
            "k4": self.cost.k4,
            "scheme": Scheme(self.cost.scheme).value,
            "n_zeta": self.cost.n_zeta,
            "degree0_cost_hf_sample_units": self.cost.cost_zero,
            "predicted_variance_factor": self.predicted_variance_factor,
            "branch": self.branch,
            "p_continuous": self.p_continuous,
            "flags": list(self.flags),
        }


def run_pilot(model: QuadraticStochasticODE, qoi: QoiSpec, p_pilot: int, n_pilot: int,
              seed: int, scheme=Scheme.TOTAL_ORDER, stream: int = 0, workers: int = 1,
              batch=None, q=None) -> PilotStats:
    """Shared-sample correlations and surrogate costs for degrees 0..p_pilot at time ``qoi.t``.

    ``batch`` and its high-fidelity values ``q`` may be passed in to reuse runs.
    """
    if n_pilot < 2:
        raise ValueError("pilot needs at least two samples")
    if p_pilot < 1:
        raise ValueError("pilot needs degree 1 or higher")
    if batch is None:
        batch = draw(seed, n_pilot, model.n_zeta, stream)
    if q is None:
        q = simulate_qoi(model, qoi, batch, [qoi.t], workers=workers)[0]
    aug, _ = augment(model, qoi)
    rhos, costs, degenerate, diverged = [], [], [], []
    for p in range(p_pilot + 1):
        basis = build_basis(model.n_zeta, p, scheme)
        system = project(aug, basis, triple_products(basis))
        traj = integrate(system, record_times=[qoi.t])
        costs.append(system.cost)
        if traj.diverged:
            rhos.append(0.0)
            degenerate.append(False)
            diverged.append(True)
            continue
        coef = qoi_from_galerkin(traj, qoi)[0]
        qpc = eval_basis(basis, batch.samples) @ coef
        flat = not np.any(coef[1:])  # constant surrogate
        rhos.append(0.0 if flat else pearson(q, qpc))
        degenerate.append(flat)
        diverged.append(False)
    return PilotStats(1.0, tuple(range(p_pilot + 1)), tuple(rhos), tuple(costs), n_pilot,
                      p_pilot, tuple(degenerate), tuple(diverged), float(np.var(q, ddof=1)))


def _line_fit(x, y) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(intercept), float(slope)


def fit_models(stats: PilotStats, scheme=Scheme.TOTAL_ORDER,
               n_zeta: int | None = None) -> tuple[CorrelationModel, CostModel, list]:
    """Least squares in log space; returns the two models and any fit flags."""
    scheme = Scheme(scheme)
    flags = []
    degenerate = stats.degenerate or (False,) * len(stats.degrees)
    diverged = stats.diverged or (False,) * len(stats.degrees)
    xs, ys = [], []
    for p, r, dg, dv in zip(stats.degrees, stats.rho, degenerate, diverged):
        if dg or dv:
            continue
        one_minus = 1.0 - r * r
        if one_minus < RHO_FLOOR:
            flags.append(f"rho_floored_p{p}")
            one_minus = RHO_FLOOR
        xs.append(p)
        ys.append(math.log(one_minus))
    if len(xs) < 2:
        raise FitError("need at least two usable pilot degrees for the correlation fit")
    intercept, slope = _line_fit(xs, ys)
    k1, k2 = math.exp(intercept), -slope
    if k2 <= 0:
        flags.append("k2_floored")
        k2 = POSITIVE_FLOOR
    f_zero = None
    if scheme is Scheme.TOTAL_ORDER and 0 in stats.degrees:
        i = stats.degrees.index(0)
        f_zero = 1.0 if degenerate[i] else max(1.0 - stats.rho[i] ** 2, RHO_FLOOR)

    if n_zeta is None:
        raise FitError("n_zeta is required for the cost fit")
    probe = CostModel(scheme, 1.0, 1.0, n_zeta)
    cx, cy = [], []
    cost_zero = None
    for p, c in zip(stats.degrees, stats.costs):
        if p == 0:
            cost_zero = float(c)
        if p < probe.lower:
            continue
        cx.append(probe.log_structural(p))
        cy.append(math.log(c))
    if len(cx) < 2:
        raise FitError("need at least two pilot degrees for the cost fit")
    intercept, k4 = _line_fit(cx, cy)
    k3 = math.exp(intercept)
    if k4 <= 0:
        flags.append("k4_floored")
        k4 = POSITIVE_FLOOR
    cost = CostModel(scheme, k3, k4, n_zeta, cost_zero if scheme is Scheme.TOTAL_ORDER else None)
    return CorrelationModel(k1, k2, f_zero), cost, flags


def _g(corr: CorrelationModel, cost: CostModel, C0: float, p: float) -> float:
    # J' = f_rho * g / (C0 - f_c)^2 for the exponential correlation model
    return cost.derivative(p) + corr.k2 * (cost(p) - C0)


def _upper_bound(cost: CostModel, C0: float, C: float) -> float:
    """Continuous ``f_c^{-1}(C0 - C)`` by bisection on ``log f_c``."""
    target = math.log(C0 - C)
    lo = float(cost.lower)
    if cost.log_cost(lo if lo > 0 else 0.0) > target:
        raise InfeasibleBudget("budget below one sample plus the cheapest surrogate")
    hi = max(2.0 * lo, 1.0)
    while cost.log_cost(hi) <= target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            return math.inf
    while hi - lo > ROOT_WIDTH * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if cost.log_cost(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def _integer_upper(cost: CostModel, C0: float, C: float, p_cont: float) -> int:
    """Largest integer degree whose modelled cost leaves room for one sample."""
    p = int(math.floor(p_cont)) if math.isfinite(p_cont) else 10**6
    p = max(p, cost.lower)
    while p > cost.lower and cost(p) + C > C0:
        p -= 1
    while cost(p + 1) + C <= C0:
        p += 1
    return p


@dataclass(frozen=True)
class ContinuousSolution:
    p: float
    branch: str
    p_max: float


def solve_continuous(corr: CorrelationModel, cost: CostModel, C0: float, C: float = 1.0) -> ContinuousSolution:
    p0 = float(cost.lower)
    if not C0 - C >= cost(p0):
        raise InfeasibleBudget(
            f"budget {C0} cannot cover one sample ({C}) plus the degree-{cost.lower} surrogate ({cost(p0)})")
    p_max = _upper_bound(cost, C0, C)
    if _g(corr, cost, C0, p0) >= 0.0:
        return ContinuousSolution(p0, INCREASING, p_max)
    if not math.isfinite(p_max) or _g(corr, cost, C0, p_max) <= 0.0:
        return ContinuousSolution(p_max, DECREASING, p_max)
    lo, hi = p0, p_max
    while hi - lo > ROOT_WIDTH:
        mid = 0.5 * (lo + hi)
        if _g(corr, cost, C0, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return ContinuousSolution(0.5 * (lo + hi), NON_MONOTONIC, p_max)


def f_rho_at(corr: CorrelationModel, cost: CostModel, p: int) -> float:
    if p == 0 and corr.f_zero is not None and Scheme(cost.scheme) is Scheme.TOTAL_ORDER:
        return float(corr.f_zero)
    return float(corr(p))


def j_disc(corr: CorrelationModel, cost: CostModel, C0: float, p: int) -> float:
    return f_rho_at(corr, cost, p) / (C0 - cost(p))


def _design(corr, cost, C0, C, p, branch, p_cont, flags) -> EstimatorDesign:
    n = int(math.floor((C0 - cost(p)) / C))
    return EstimatorDesign(p, n, C0, C, corr, cost, f_rho_at(corr, cost, p) / n, branch, p_cont,
                           list(flags))


def solve_discrete(corr: CorrelationModel, cost: CostModel, C0: float, C: float = 1.0,
                   flags=()) -> EstimatorDesign:
    total = Scheme(cost.scheme) is Scheme.TOTAL_ORDER
    zero_ok = total and cost(0) + C <= C0
    try:
        cont = solve_continuous(corr, cost, C0, C)
    except InfeasibleBudget:
        if zero_ok:
            return _design(corr, cost, C0, C, 0, INCREASING, 0.0, flags)
        raise
    p_hi = _integer_upper(cost, C0, C, cont.p_max)
    if cont.branch == INCREASING:
        p = cost.lower
    elif cont.branch == DECREASING:
        p = p_hi
    else:
        lo, hi = math.floor(cont.p), math.ceil(cont.p)
        if hi > p_hi:
            p = p_hi
        else:
            lo = max(lo, cost.lower)
            p = lo if j_disc(corr, cost, C0, lo) <= j_disc(corr, cost, C0, hi) else hi
    if zero_ok and j_disc(corr, cost, C0, 0) < j_disc(corr, cost, C0, p):
        p = 0
    return _design(corr, cost, C0, C, p, cont.branch, cont.p, flags)


def exhaustive_design(corr: CorrelationModel, cost: CostModel, C0: float, C: float = 1.0) -> tuple[int, int, float]:
    """Brute-force minimum of J_disc over every feasible integer degree."""
    best = None
    p = 0 if Scheme(cost.scheme) is Scheme.TOTAL_ORDER else cost.lower
    misses = 0
    while misses < 2 and p < 10**5:
        if cost(p) + C <= C0:
            misses = 0
            j = j_disc(corr, cost, C0, p)
            if best is None or j < best[2]:
                best = (p, int(math.floor((C0 - cost(p)) / C)), j)
        elif p >= cost.lower:
            misses += 1  # cost is increasing beyond the lower bound
        p += 1
    if best is None:
        raise InfeasibleBudget("no feasible degree")
    return best


def design_curve(corr: CorrelationModel, cost: CostModel, budgets, C: float = 1.0) -> list[dict]:
    rows = []
    for C0 in budgets:
        try:
            d = solve_discrete(corr, cost, float(C0), C)
            rows.append({"C0": float(C0), "p_star": d.p_star, "N_star": d.N_star,
                         "variance_factor": d.predicted_variance_factor, "feasible": True})
        except InfeasibleBudget:
            rows.append({"C0": float(C0), "p_star": None, "N_star": None,
                         "variance_factor": None, "feasible": False})
    return rows
