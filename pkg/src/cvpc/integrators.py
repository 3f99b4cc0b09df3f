"""Fixed-step classical Runge-Kutta integration on a uniform grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRID_TOL = 1e-12


def steps_for(t: float, h: float) -> int:
    """Number of steps of size ``h`` that land exactly on ``t``."""
    n = int(round(t / h))
    if n < 0 or abs(n * h - t) > GRID_TOL * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not on the grid of step {h}")
    return n


def rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class Integration:
    times: np.ndarray
    states: np.ndarray  # (len(times),) + y0.shape
    diverged: bool = False
    last_finite_time: float = math.nan


def rk4_integrate(rhs, y0, h: float, record_times, bound: float | None = None) -> Integration:
    """Integrate ``y' = rhs(y)`` from 0 and record the state at ``record_times``.

    With ``bound`` set, the run stops at the first step whose state is
    non-finite or exceeds ``bound`` in magnitude; unreached record times are
    filled with NaN and the result is flagged as diverged.
    """
    record_times = np.asarray(record_times, dtype=float)
    targets = [steps_for(t, h) for t in record_times]
    if any(b < a for a, b in zip(targets, targets[1:])):
        raise ValueError("record times must be non-decreasing")
    y = np.array(y0, dtype=float)
    out = np.full((len(targets),) + y.shape, np.nan)
    step = 0
    last_ok = 0.0
    for slot, target in enumerate(targets):
        while step < target:
            y_next = rk4_step(rhs, y, h)
            if bound is not None:
                peak = np.max(np.abs(y_next)) if y_next.size else 0.0
                if not np.isfinite(peak) or peak > bound:
                    return Integration(record_times, out, True, last_ok)
            y = y_next
            step += 1
            last_ok = step * h
        out[slot] = y
    return Integration(record_times, out, False, last_ok)
