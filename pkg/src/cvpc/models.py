"""Concrete stochastic systems, quantities of interest and the preset registry."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .galerkin import Affine, GalerkinTrajectory, QuadraticStochasticODE, Term

STATE = "state"
INTEGRAL = "integral"


@dataclass(frozen=True)
class QoiSpec:
    """Scalar quantity of interest.

    ``kind == "state"``: the value of state ``state`` at time t.
    ``kind == "integral"``: ``(1/t) * int_0^t sum_k w_k x_k^2 ds``, defined at
    ``t = 0`` by the integrand itself.
    """

    kind: str = STATE
    state: int = 0
    weights: tuple = ()
    t: float = 1.0

    def __post_init__(self):
        if self.kind not in (STATE, INTEGRAL):
            raise ValueError(f"unknown QoI kind {self.kind!r}")
        if self.kind == INTEGRAL and not np.all(np.isfinite(self.weights)):
            raise ValueError("QoI weights must be finite")


@dataclass(frozen=True)
class ModelPreset:
    name: str
    model: QuadraticStochasticODE
    qoi: QoiSpec
    provenance: str
    version: int = 1


def augment(model: QuadraticStochasticODE, qoi: QoiSpec) -> tuple[QuadraticStochasticODE, int]:
    """Model to integrate for ``qoi`` and the state index carrying it.

    Integral QoIs are accumulated as an extra state driven by the quadratic
    integrand, so the per-sample and Galerkin paths share one integrator.
    """
    if qoi.kind == INTEGRAL:
        if len(qoi.weights) != model.n_x:
            raise ValueError("need one QoI weight per state")
        return model.with_quadratic_integral(qoi.weights), model.n_x
    if not 0 <= qoi.state < model.n_x:
        raise ValueError("QoI state out of range")
    return model, qoi.state


def qoi_from_states(states: np.ndarray, times: np.ndarray, qoi: QoiSpec) -> np.ndarray:
    """Per-sample QoI from states of the augmented model.

    ``states`` has shape ``(n_t, n_x_aug, N)``; returns ``(n_t, N)``.
    """
    if qoi.kind == STATE:
        return states[:, qoi.state, :]
    n_x = len(qoi.weights)
    out = np.empty((states.shape[0], states.shape[2]))
    for i, t in enumerate(times):
        if t > 0:
            out[i] = states[i, n_x] / t
        else:
            w = np.asarray(qoi.weights, dtype=float)[:, None]
            out[i] = np.sum(w * states[i, :n_x] ** 2, axis=0)
    return out


def qoi_from_galerkin(traj: GalerkinTrajectory, qoi: QoiSpec) -> np.ndarray:
    """Expansion coefficients of the QoI at each recorded time, ``(n_t, M)``."""
    if qoi.kind == STATE:
        return traj.coefficients[:, qoi.state, :]
    n_x = len(qoi.weights)
    out = np.empty((len(traj.times), traj.coefficients.shape[2]))
    for i, t in enumerate(traj.times):
        if t > 0:
            out[i] = traj.coefficients[i, n_x] / t
        else:
            # integrand limit: the projected integrand at the initial state
            out[i] = traj.system.rhs(traj.coefficients[i])[n_x]
    return out


def eval_qoi(trajectory, spec: QoiSpec):
    """Dispatch on trajectory type: Galerkin trajectories give coefficient rows,
    ``(times, states)`` tuples from the sampling path give per-sample values."""
    if isinstance(trajectory, GalerkinTrajectory):
        return qoi_from_galerkin(trajectory, spec)
    times, states = trajectory
    return qoi_from_states(states, np.asarray(times, dtype=float), spec)


def lorenz(theta1: float, theta2: float, theta3: float, std: float,
           t_final: float, step: float = 1e-3, means=(0.5, 0.5, 15.0)) -> QuadraticStochasticODE:
    """Lorenz system with independent Gaussian initial conditions, one input per state.

    ``dx/dt = theta1 (y - x)``, ``dy/dt = theta2 x - y - x z``, ``dz/dt = x y - theta3 z``.
    """
    x, y, z = 0, 1, 2
    terms = (
        Term(x, Affine(-theta1), (x,)),
        Term(x, Affine(theta1), (y,)),
        Term(y, Affine(theta2), (x,)),
        Term(y, Affine(-1.0), (y,)),
        Term(y, Affine(-1.0), (x, z)),
        Term(z, Affine(1.0), (x, y)),
        Term(z, Affine(-theta3), (z,)),
    )
    initial = tuple(Affine.normal(m, std, d) for d, m in enumerate(means))
    return QuadraticStochasticODE(3, 3, terms, initial, t_final, step, ("x", "y", "z"))


LORENZ_QOI_WEIGHTS = (1.0, 1.0, 1.0)


def lorenz_stable(step: float = 1e-3, t_final: float = 5.0) -> ModelPreset:
    model = lorenz(1.0, 10.0, 1.0, 0.5, t_final, step)
    return ModelPreset(
        "lorenz-stable", model, QoiSpec(INTEGRAL, weights=LORENZ_QOI_WEIGHTS, t=3.0),
        "theta=(1, 10, 1); x0, y0 ~ N(0.5, 0.5^2), z0 ~ N(15, 0.5^2); "
        "QoI = time-averaged x^2 + y^2 + z^2 at t = 3")


def lorenz_chaotic(step: float = 1e-3, t_final: float = 10.0) -> ModelPreset:
    model = lorenz(10.0, 28.0, 8.0 / 3.0, 0.25, t_final, step)
    return ModelPreset(
        "lorenz-chaotic", model, QoiSpec(INTEGRAL, weights=LORENZ_QOI_WEIGHTS, t=3.0),
        "theta=(10, 28, 8/3); initial standard deviations halved to 0.25; "
        "QoI = time-averaged x^2 + y^2 + z^2 at t = 3")


def linear_benchmark(step: float = 1e-3, t_final: float = 2.0) -> ModelPreset:
    model = QuadraticStochasticODE(
        1, 1, (Term(0, Affine(-1.0), (0,)),), (Affine.normal(1.0, 0.1, 0),), t_final, step, ("x",))
    return ModelPreset("linear-benchmark", model, QoiSpec(STATE, state=0, t=1.0),
                       "dx/dt = -x, x0 ~ N(1, 0.1^2); analytic test system")


PRESETS = {
    "lorenz-stable": lorenz_stable,
    "lorenz-chaotic": lorenz_chaotic,
    "linear-benchmark": linear_benchmark,
}


def get_preset(name: str, step: float | None = None, t_final: float | None = None) -> ModelPreset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}") from None
    preset = factory()
    if step is not None or t_final is not None:
        model = replace(preset.model,
                        step=preset.model.step if step is None else float(step),
                        t_final=preset.model.t_final if t_final is None else float(t_final))
        model.validate()
        preset = replace(preset, model=model)
    return preset
