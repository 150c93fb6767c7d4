"""Continuous lattice-BGK system on the periodic unit square.

Each distribution ``g_i`` obeys::

    dg_i/dt = -(1/eps) v_i . grad g_i + (g_i,eq - g_i) / (eps^2 nu)

with the equilibrium built from the moments ``rho = sum w_i g_i`` and
``u = sum w_i v_i g_i``::

    g_i,eq = rho + v_i.u / c_s^2 + eps / (2 c_s^4) sum_ab u_a u_b (v_ia v_ib - c_s^2 d_ab)

Space is discretized pseudo-spectrally and time with classical RK4.  The
integration loop keeps all ``g_i`` in real-FFT space; only the quadratic
products ``u_a u_b`` are formed on the grid (with 2/3-rule dealiasing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import spectral
from .lattice import Lattice, d2q9, validate_isotropy
from .spectral import Grid2D, RealField2D, irfft2, rfft2
from .timestepping import (
    RK4_REAL_AXIS_BOUND,
    IntegrationBlowup,
    check_finite,
    output_marks,
    step_count,
)

COLLISION_SAFETY = 0.5
ADVECTIVE_SAFETY = 0.5
_FINITE_CHECK_EVERY = 256


class LbgkError(ValueError):
    """Invalid LBGK parameters or inconsistent input fields."""


@dataclass(frozen=True)
class LbgkParams:
    """Knudsen number, relaxation time and lattice of an LBGK run.

    ``nonlinear=False`` drops the quadratic part of the equilibrium.
    ``literal_cutoff=True`` applies the sharp Fourier cutoff ``|k| < 1/eps`` to
    the initial data and after every step.
    """

    epsilon: float
    nu: float
    lattice: Lattice = field(default_factory=d2q9)
    nonlinear: bool = True
    literal_cutoff: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise LbgkError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not self.nu > 0:
            raise LbgkError(f"nu must be positive, got {self.nu!r}")
        if self.lattice.dim != 2:
            raise LbgkError("the LBGK solver needs a 2D lattice")
        report = validate_isotropy(self.lattice, 1e-10)
        if not report.satisfied:
            raise LbgkError(
                f"lattice {self.lattice!r} is not isotropic "
                f"(max residual {report.max_residual:.3e})"
            )

    @property
    def collision_rate(self) -> float:
        return 1.0 / (self.epsilon**2 * self.nu)


@dataclass(frozen=True)
class MacroFields:
    rho: RealField2D
    u: Tuple[RealField2D, RealField2D]


@dataclass(frozen=True, eq=False)
class LbgkState:
    """Distribution functions ``g`` with shape ``(q, n, n)`` at time ``time``."""

    time: float
    g: np.ndarray
    params: LbgkParams
    grid: Grid2D

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        q, n = self.params.lattice.q, self.grid.n
        if g.shape != (q, n, n):
            raise LbgkError(f"g must have shape {(q, n, n)}, got {g.shape}")
        object.__setattr__(self, "g", g)

    @property
    def fields(self) -> List[RealField2D]:
        return [RealField2D(self.grid, gi) for gi in self.g]


def stable_dt(
    params: LbgkParams,
    grid: Grid2D,
    collision_safety: float = COLLISION_SAFETY,
    advective_safety: float = ADVECTIVE_SAFETY,
) -> float:
    """Largest RK4 step allowed by the collision and advective limits."""
    collision = collision_safety * RK4_REAL_AXIS_BOUND / params.collision_rate
    advective = advective_safety * params.epsilon * grid.dx / params.lattice.max_speed
    return min(collision, advective)


class LbgkOperator:
    """Right-hand side of the semi-discrete LBGK system in real-FFT space."""

    def __init__(self, params: LbgkParams, grid: Grid2D):
        self.params = params
        self.grid = grid
        lat = params.lattice
        v = lat.velocities
        w = lat.weights
        cs2 = lat.sound_speed**2
        eps = params.epsilon
        d1, d2 = grid.derivative_symbols

        self.rate = params.collision_rate
        transport = -(v[:, 0, None, None] * d1 + v[:, 1, None, None] * d2) / eps
        # rhs = (transport - rate) g + rate * g_eq
        self.linear = transport - self.rate

        # moments (rho, u1, u2) = moment_matrix @ g
        self.moment_matrix = np.stack([w, w * v[:, 0], w * v[:, 1]])
        quad = eps / (2.0 * cs2**2)
        self.eq_linear = np.column_stack([np.ones(lat.q), v / cs2])
        self.eq_quadratic = quad * np.column_stack(
            [v[:, 0] ** 2 - cs2, 2.0 * v[:, 0] * v[:, 1], v[:, 1] ** 2 - cs2]
        )
        if not params.nonlinear:
            self.eq_quadratic = np.zeros_like(self.eq_quadratic)
        # rate-scaled equilibrium map acting on (rho, u1, u2, u1u1, u1u2, u2u2)
        self.eq_map = self.rate * np.hstack([self.eq_linear, self.eq_quadratic])
        self.dealias = grid.dealias_mask
        self.cutoff = grid.cutoff_mask(eps) if params.literal_cutoff else None

    def moments(self, g_hat: np.ndarray) -> np.ndarray:
        q = g_hat.shape[0]
        return (self.moment_matrix @ g_hat.reshape(q, -1)).reshape((3,) + g_hat.shape[1:])

    def products(self, m_hat: np.ndarray) -> np.ndarray:
        """Dealiased spectra of ``(u1 u1, u1 u2, u2 u2)``."""
        u = irfft2(m_hat[1:] * self.dealias, self.grid.n)
        prod = np.stack([u[0] * u[0], u[0] * u[1], u[1] * u[1]])
        out = rfft2(prod)
        out *= self.dealias
        return out

    def equilibrium_inputs(self, g_hat: np.ndarray) -> np.ndarray:
        m = self.moments(g_hat)
        if self.params.nonlinear:
            return np.concatenate([m, self.products(m)])
        return np.concatenate([m, np.zeros_like(m)])

    def equilibrium(self, g_hat: np.ndarray) -> np.ndarray:
        x = self.equilibrium_inputs(g_hat)
        e = np.hstack([self.eq_linear, self.eq_quadratic])
        return (e @ x.reshape(6, -1)).reshape(g_hat.shape)

    def __call__(self, g_hat: np.ndarray) -> np.ndarray:
        x = self.equilibrium_inputs(g_hat)
        out = (self.eq_map @ x.reshape(6, -1)).reshape(g_hat.shape)
        out += self.linear * g_hat
        return out

    def step(self, g_hat: np.ndarray, dt: float, out: Optional[np.ndarray] = None) -> np.ndarray:
        """One classical RK4 step; writes into ``out`` when given."""
        k = self(g_hat)
        acc = k.copy()
        stage = g_hat + (0.5 * dt) * k
        k = self(stage)
        acc += 2.0 * k
        np.multiply(k, 0.5 * dt, out=stage)
        stage += g_hat
        k = self(stage)
        acc += 2.0 * k
        np.multiply(k, dt, out=stage)
        stage += g_hat
        acc += self(stage)
        if out is None:
            out = np.empty_like(g_hat)
        np.multiply(acc, dt / 6.0, out=out)
        out += g_hat
        if self.cutoff is not None:
            out *= self.cutoff
        return out


_OPERATORS: dict = {}


def operator(params: LbgkParams, grid: Grid2D) -> LbgkOperator:
    """Cached :class:`LbgkOperator` for ``(params, grid)``."""
    key = (params, grid)
    op = _OPERATORS.get(key)
    if op is None:
        if len(_OPERATORS) > 16:
            _OPERATORS.clear()
        op = _OPERATORS[key] = LbgkOperator(params, grid)
    return op


def _to_physical(g_hat: np.ndarray, grid: Grid2D) -> np.ndarray:
    return irfft2(g_hat, grid.n)


def equilibrium(state: LbgkState) -> List[RealField2D]:
    """Equilibrium distributions ``g_i,eq`` of the current moments."""
    op = operator(state.params, state.grid)
    geq = _to_physical(op.equilibrium(rfft2(state.g)), state.grid)
    return [RealField2D(state.grid, gi) for gi in geq]


def rhs(state: LbgkState) -> List[RealField2D]:
    """Time derivative ``dg_i/dt`` of every distribution."""
    op = operator(state.params, state.grid)
    dg = _to_physical(op(rfft2(state.g)), state.grid)
    return [RealField2D(state.grid, gi) for gi in dg]


def rk4_step(state: LbgkState, dt: float) -> LbgkState:
    """Advance ``state`` by one RK4 step of size ``dt``."""
    if not dt > 0:
        raise LbgkError(f"dt must be positive, got {dt!r}")
    op = operator(state.params, state.grid)
    g_hat = op.step(rfft2(state.g), dt)
    g = _to_physical(g_hat, state.grid)
    check_finite(g, state.time + dt, "distribution")
    return LbgkState(state.time + dt, g, state.params, state.grid)


def macroscopic(state: LbgkState) -> MacroFields:
    """Density ``sum w_i g_i`` and momentum ``sum w_i v_i g_i``."""
    lat = state.params.lattice
    m = np.tensordot(
        np.stack([lat.weights, lat.weights * lat.velocities[:, 0],
                  lat.weights * lat.velocities[:, 1]]),
        state.g,
        axes=1,
    )
    grid = state.grid
    return MacroFields(
        RealField2D(grid, m[0]), (RealField2D(grid, m[1]), RealField2D(grid, m[2]))
    )


def init_from_macroscopic(
    rho0: RealField2D, u0: Sequence[RealField2D], params: LbgkParams
) -> LbgkState:
    """Lift ``(rho0, u0)`` to ``g_i = rho0 + v_i.u0 / c_s^2`` at ``t = 0``."""
    u1, u2 = u0
    grid = rho0.grid
    if u1.grid != grid or u2.grid != grid:
        raise LbgkError("rho0 and u0 must share one grid")
    lat = params.lattice
    cs2 = lat.sound_speed**2
    v = lat.velocities
    g = (
        rho0.values[None]
        + (v[:, 0, None, None] * u1.values[None] + v[:, 1, None, None] * u2.values[None])
        / cs2
    )
    if params.literal_cutoff:
        g = irfft2(rfft2(g) * grid.cutoff_mask(params.epsilon), grid.n)
    return LbgkState(0.0, g, params, grid)


def vorticity_of(state: LbgkState) -> RealField2D:
    """Vorticity ``d u2/d x1 - d u1/d x2`` of the macroscopic momentum."""
    macro = macroscopic(state)
    return spectral.curl(*macro.u)


def weighted_norm(state: LbgkState) -> float:
    """``sum_i w_i ||g_i||^2`` over the grid."""
    sq = np.sum(state.g**2, axis=(1, 2)) * state.grid.dx**2
    return float(np.dot(state.params.lattice.weights, sq))


def integrate(
    state: LbgkState,
    t_final: float,
    dt: Optional[float] = None,
    callback: Optional[Callable[[LbgkState], None]] = None,
    every: Optional[float] = None,
) -> LbgkState:
    """Integrate from ``state.time`` to ``t_final`` with equal RK4 steps.

    ``dt`` defaults to :func:`stable_dt` and is shrunk so the run lands on
    ``t_final`` exactly.  With ``every`` set, ``callback`` also receives the
    state at each multiple of ``every`` (and always at start and end).
    """
    if t_final < state.time:
        raise LbgkError("t_final precedes the current time")
    limit = stable_dt(state.params, state.grid) if dt is None else dt
    if not limit > 0:
        raise LbgkError(f"dt must be positive, got {dt!r}")
    op = operator(state.params, state.grid)
    marks = output_marks(state.time, t_final, every)
    g_hat = rfft2(state.g)
    spare = np.empty_like(g_hat)
    t = state.time
    if callback is not None:
        callback(state)
    for t_next in marks:
        steps = step_count(t_next - t, limit)
        h = (t_next - t) / steps if steps else 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(steps):
                g_hat, spare = op.step(g_hat, h, out=spare), g_hat
                if (s + 1) % _FINITE_CHECK_EVERY == 0 or s + 1 == steps:
                    if not np.isfinite(g_hat).all():
                        raise IntegrationBlowup(t + (s + 1) * h, "non-finite distribution")
        t = t_next
        if callback is not None:
            callback(LbgkState(t, _to_physical(g_hat, state.grid), state.params, state.grid))
    return LbgkState(t, _to_physical(g_hat, state.grid), state.params, state.grid)


def with_params(state: LbgkState, **changes) -> LbgkState:
    return LbgkState(state.time, state.g, replace(state.params, **changes), state.grid)
