"""Classical fourth-order Runge-Kutta stepping shared by both solvers."""

from __future__ import annotations

import math

from typing import List, Optional

import numpy as np

# Extent of the RK4 stability region on the negative real axis.
RK4_REAL_AXIS_BOUND = 2.78


class IntegrationBlowup(RuntimeError):
    """Non-finite values appeared during time integration."""

    def __init__(self, time: float, detail: str = ""):
        self.time = float(time)
        msg = f"integration blew up at t = {self.time:.6g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


def rk4_step(f, y: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step for ``y' = f(y)``; ``y`` is left untouched."""
    k1 = f(y)
    k2 = f(y + (0.5 * dt) * k1)
    k3 = f(y + (0.5 * dt) * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_count(span: float, dt: float) -> int:
    """Number of equal steps of size at most ``dt`` covering ``span``."""
    if span <= 0:
        return 0
    return max(1, math.ceil(span / dt * (1 - 1e-12)))


def check_finite(y: np.ndarray, time: float, what: str = "state") -> None:
    if not np.isfinite(y).all():
        raise IntegrationBlowup(time, f"non-finite {what}")


def output_marks(t0: float, t1: float, every: Optional[float]) -> List[float]:
    """Output times after ``t0``: multiples of ``every`` plus ``t1`` itself."""
    if every is None or every <= 0 or every >= t1 - t0:
        return [t1] if t1 > t0 else []
    count = math.floor((t1 - t0) / every * (1 + 1e-12))
    marks = [t0 + j * every for j in range(1, count + 1)]
    if t1 - marks[-1] > 1e-12 * max(1.0, abs(t1)):
        marks.append(t1)
    else:
        marks[-1] = t1
    return marks
