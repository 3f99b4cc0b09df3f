"""Intrusive stochastic Galerkin projection of quadratic stochastic ODEs.

A model is a list of polynomial terms of degree at most two in the states,
whose coefficients and initial conditions are affine in independent standard
normal inputs. Projection onto an orthonormal Hermite basis gives a
deterministic ODE system for the expansion coefficients, which is integrated
with the same fixed-step RK4 scheme used for the per-sample runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import (InnerProductTensors, MultiIndexBasis, build_basis, eval_basis,
                    triple_products)
from .integrators import GRID_TOL, rk4_integrate

# magnitude treated as blow-up of the coefficient dynamics
DIVERGENCE_BOUND = 1e100


@dataclass(frozen=True)
class Affine:
    """``const + sum_d slope_d * zeta_d``."""

    const: float = 0.0
    slopes: tuple = ()  # ((dim, slope), ...)

    @classmethod
    def normal(cls, mean: float, std: float, dim: int) -> "Affine":
        return cls(float(mean), ((int(dim), float(std)),) if std != 0.0 else ())

    @property
    def is_constant(self) -> bool:
        return not self.slopes

    def dims(self) -> list[int]:
        return [d for d, _ in self.slopes]

    def evaluate(self, zeta: np.ndarray) -> np.ndarray:
        """Per-sample values for ``zeta`` of shape ``(N, n_zeta)``."""
        out = np.full(zeta.shape[0], self.const)
        for d, s in self.slopes:
            out = out + s * zeta[:, d]
        return out


@dataclass(frozen=True)
class Term:
    """``coef * prod(x[f] for f in factors)`` added to ``dx[state]/dt``."""

    state: int
    coef: Affine
    factors: tuple = ()


@dataclass(frozen=True)
class QuadraticStochasticODE:
    n_x: int
    n_zeta: int
    terms: tuple
    initial: tuple  # one Affine per state
    t_final: float
    step: float = 1e-3
    state_names: tuple = ()

    def validate(self) -> None:
        if len(self.initial) != self.n_x:
            raise ValueError("need one initial condition per state")
        if not (self.t_final > 0 and self.step > 0):
            raise ValueError("time horizon and step must be positive")
        n = round(self.t_final / self.step)
        if abs(n * self.step - self.t_final) > GRID_TOL * max(1.0, self.t_final):
            raise ValueError("step must divide the time horizon")
        for term in self.terms:
            if len(term.factors) > 2:
                raise ValueError(f"term of degree {len(term.factors)} in the states is not supported")
            if not 0 <= term.state < self.n_x or any(not 0 <= f < self.n_x for f in term.factors):
                raise ValueError("term references an unknown state")
        for expr in [t.coef for t in self.terms] + list(self.initial):
            if any(not 0 <= d < self.n_zeta for d in expr.dims()):
                raise ValueError("expression references a zeta dimension beyond n_zeta")

    def with_quadratic_integral(self, weights) -> "QuadraticStochasticODE":
        """Append a state ``q`` with ``dq/dt = sum_k w_k x_k^2`` and ``q(0) = 0``."""
        q = self.n_x
        extra = tuple(Term(q, Affine(float(w)), (k, k)) for k, w in enumerate(weights) if w != 0.0)
        names = tuple(self.state_names) + ("integral",) if self.state_names else ()
        return QuadraticStochasticODE(self.n_x + 1, self.n_zeta, self.terms + extra,
                                      self.initial + (Affine(0.0),), self.t_final, self.step, names)

    def hifi_flops(self) -> int:
        """Arithmetic operations of one right-hand-side evaluation for one sample."""
        return sum(1 + len(t.factors) for t in self.terms)

@dataclass(frozen=True)
class PCExpansion:
    basis: MultiIndexBasis
    coefficients: np.ndarray

    def __call__(self, zeta) -> np.ndarray:
        return eval_basis(self.basis, zeta) @ self.coefficients


def extract_moments(exp: PCExpansion) -> tuple[float, float]:
    c = np.asarray(exp.coefficients, dtype=float)
    return float(c[0]), float(np.sum(c[1:] ** 2))


def cvm(exp: PCExpansion) -> float:
    """Control-variate mean: the exact surrogate mean, coefficient 0."""
    return float(exp.coefficients[0])


def _project_affine(expr: Affine, basis: MultiIndexBasis) -> np.ndarray:
    vec = np.zeros(basis.size)
    vec[0] = expr.const
    for d, s in expr.slopes:
        pos = basis.linear_position(d)
        if pos is not None:  # absent only for the degree-0 basis
            vec[pos] += s
    return vec


@dataclass
class GalerkinSystem:
    model: QuadraticStochasticODE
    basis: MultiIndexBasis
    tensors: InnerProductTensors | None  # None when no term needs triple products
    linear: sp.csr_matrix  # acts on the flattened (n_x * M) coefficient state
    pairs: np.ndarray  # (n_pairs, 2) state index pairs of bilinear terms
    pair_weights: np.ndarray  # (n_x, n_pairs)
    forcing: np.ndarray  # (n_x, M)
    initial: np.ndarray  # (n_x, M)
    flops: int = 0
    _contract: sp.csr_matrix = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.basis.size

    def rhs(self, xhat: np.ndarray) -> np.ndarray:
        n_x, m = self.model.n_x, self.basis.size
        out = (self.linear @ xhat.ravel()).reshape(n_x, m) + self.forcing
        if len(self.pairs):
            a = xhat[self.pairs[:, 0]]
            b = xhat[self.pairs[:, 1]]
            outer = (a[:, :, None] * b[:, None, :]).reshape(len(self.pairs), m * m)
            prod = (self._contract @ outer.T).T  # (n_pairs, M)
            out += self.pair_weights @ prod
        return out

    @property
    def cost(self) -> float:
        """Cost of one coefficient solve, in units of one per-sample solve.

        Both solves take the same number of RK4 steps, so the ratio of the
        arithmetic operations per right-hand-side evaluation is the ratio of
        solves. Counting operations instead of timing keeps costs reproducible.
        """
        return self.flops / self.model.hifi_flops()


def project(model: QuadraticStochasticODE, basis: MultiIndexBasis,
            tensors: InnerProductTensors | None = None) -> GalerkinSystem:
    model.validate()
    if basis.n_zeta != model.n_zeta:
        raise ValueError(f"basis has {basis.n_zeta} input dimensions, model has {model.n_zeta}")
    needs_tensors = any(len(t.factors) == 2 or (len(t.factors) == 1 and not t.coef.is_constant)
                        for t in model.terms)
    if tensors is None and needs_tensors:
        tensors = triple_products(basis)
    n_x, m = model.n_x, basis.size

    lin = sp.lil_matrix((n_x * m, n_x * m))
    forcing = np.zeros((n_x, m))
    pair_index: dict = {}
    pair_w: dict = {}
    slices: dict = {}
    flops = 0
    eye = sp.identity(m, format="csr")
    for term in model.terms:
        deg = len(term.factors)
        if deg == 0:
            vec = _project_affine(term.coef, basis)
            forcing[term.state] += vec
            flops += int(np.count_nonzero(vec))
        elif deg == 1:
            op = term.coef.const * eye
            for d, s in term.coef.slopes:
                pos = basis.linear_position(d)
                if pos is None:
                    continue
                if pos not in slices:
                    slices[pos] = tensors.slice_matrix(pos)
                op = op + s * slices[pos]
            op = sp.csr_matrix(op)
            k, a = term.state, term.factors[0]
            lin[k * m:(k + 1) * m, a * m:(a + 1) * m] += op
            flops += 2 * op.nnz
        else:
            if not term.coef.is_constant:
                raise ValueError("bilinear terms must have deterministic coefficients")
            key = tuple(sorted(term.factors))
            if key not in pair_index:
                pair_index[key] = len(pair_index)
            pair_w[(term.state, pair_index[key])] = (
                pair_w.get((term.state, pair_index[key]), 0.0) + term.coef.const)
            flops += 3 * tensors.nnz

    pairs = np.array(sorted(pair_index, key=pair_index.get), dtype=np.int64).reshape(-1, 2)
    weights = np.zeros((n_x, len(pairs)))
    for (k, j), w in pair_w.items():
        weights[k, j] = w
    initial = np.vstack([_project_affine(expr, basis) for expr in model.initial])
    return GalerkinSystem(model, basis, tensors, sp.csr_matrix(lin), pairs, weights,
                          forcing, initial, flops,
                          tensors.contraction_matrix() if len(pairs) else None)


@dataclass
class GalerkinTrajectory:
    system: GalerkinSystem
    times: np.ndarray
    coefficients: np.ndarray  # (n_t, n_x, M); NaN after divergence
    diverged: bool
    last_finite_time: float

    def expansion(self, state: int, t_index: int) -> PCExpansion:
        return PCExpansion(self.system.basis, self.coefficients[t_index, state])


def integrate(system: GalerkinSystem, t_end: float | None = None, record_times=None,
              bound: float = DIVERGENCE_BOUND) -> GalerkinTrajectory:
    """RK4 trajectory of the coefficient state.

    Records at ``record_times`` (default: every grid point up to ``t_end``).
    Blow-up is reported through ``diverged``/``last_finite_time`` rather than
    raised.
    """
    model = system.model
    if record_times is None:
        if t_end is None:
            t_end = model.t_final
        n = int(round(t_end / model.step))
        record_times = np.arange(n + 1) * model.step
    record_times = np.asarray(record_times, dtype=float)
    if record_times.size and record_times[-1] > model.t_final * (1 + GRID_TOL):
        raise ValueError("cannot integrate past the model horizon")
    with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported via the flag
        res = rk4_integrate(system.rhs, system.initial, model.step, record_times, bound=bound)
    return GalerkinTrajectory(system, res.times, res.states, res.diverged,
                              res.last_finite_time if res.diverged else float(record_times[-1]))


def galerkin_surrogate(model: QuadraticStochasticODE, degree: int, scheme="total-order",
                       record_times=None) -> GalerkinTrajectory:
    """Build, project and integrate in one call."""
    basis = build_basis(model.n_zeta, degree, scheme)
    return integrate(project(model, basis), record_times=record_times)

