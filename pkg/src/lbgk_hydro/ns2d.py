"""Incompressible 2D Navier-Stokes in vorticity form on the unit torus.

    d omega/dt + (u . grad) omega = nu_eff lap omega,   u = grad_perp lap^-1 omega

with ``nu_eff = c_s^2 nu``.  The advective product is formed on the grid
from 2/3-rule dealiased ``u`` and ``grad omega`` and dealiased again, which
keeps the discrete nonlinear term exactly enstrophy-neutral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import spectral
from .spectral import Grid2D, RealField2D, irfft2, rfft2
from .timestepping import IntegrationBlowup, output_marks, rk4_step as _rk4, step_count

ADVECTIVE_SAFETY = 0.5
DIFFUSIVE_SAFETY = 0.5
DEFAULT_SOUND_SPEED = 1.0 / math.sqrt(3.0)


class NsError(ValueError):
    """Invalid Navier-Stokes parameters or initial data."""


@dataclass(frozen=True)
class NsParams:
    """Relaxation time ``nu`` and sound speed; the viscosity is ``c_s^2 nu``."""

    nu: float
    sound_speed: float = DEFAULT_SOUND_SPEED

    def __post_init__(self):
        if not self.nu > 0:
            raise NsError(f"nu must be positive, got {self.nu!r}")
        if not self.sound_speed > 0:
            raise NsError(f"sound_speed must be positive, got {self.sound_speed!r}")

    @property
    def nu_eff(self) -> float:
        return self.sound_speed**2 * self.nu


@dataclass(frozen=True, eq=False)
class NsState:
    time: float
    omega: RealField2D
    params: NsParams

    def __post_init__(self):
        try:
            spectral.check_zero_mean(self.omega)
        except spectral.SpectralError as exc:
            raise NsError(f"vorticity {exc}") from None

    @property
    def grid(self) -> Grid2D:
        return self.omega.grid


@dataclass(frozen=True)
class Diagnostics:
    time: float
    enstrophy: float
    palinstrophy: float
    energy: float
    mean_vorticity: float
    # int (u . grad omega) lap omega dx and ||lap omega||^2, for the palinstrophy law
    stretching: float = 0.0
    lap_norm_sq: float = 0.0


class NsOperator:
    """Right-hand side of the vorticity equation acting on rfft coefficients."""

    def __init__(self, params: NsParams, grid: Grid2D):
        self.params = params
        self.grid = grid
        self.d1, self.d2 = grid.derivative_symbols
        self.lap = grid.laplacian_symbol
        self.inv_lap = grid.inverse_laplacian_symbol
        self.mask = grid.dealias_mask
        self.diffusion = params.nu_eff * self.lap

    def advection(self, w_hat: np.ndarray) -> np.ndarray:
        """Dealiased spectrum of ``(u . grad) omega``, mean mode zeroed."""
        n = self.grid.n
        wd = w_hat * self.mask
        psi = wd * self.inv_lap
        fields = irfft2(
            np.stack([-self.d2 * psi, self.d1 * psi, self.d1 * wd, self.d2 * wd]), n
        )
        out = rfft2(fields[0] * fields[2] + fields[1] * fields[3])
        out *= self.mask
        out[0, 0] = 0.0
        return out

    def __call__(self, w_hat: np.ndarray) -> np.ndarray:
        return self.diffusion * w_hat - self.advection(w_hat)


def stable_dt(
    state: NsState,
    advective_safety: float = ADVECTIVE_SAFETY,
    diffusive_safety: float = DIFFUSIVE_SAFETY,
) -> float:
    """``min(S dx / max|u|, S dx^2 / (4 pi^2 nu_eff))``."""
    dx = state.grid.dx
    u1, u2 = velocity_from_vorticity(state.omega)
    umax = float(np.max(np.hypot(u1.values, u2.values)))
    diffusive = diffusive_safety * dx**2 / (4.0 * math.pi**2 * state.params.nu_eff)
    if umax == 0.0:
        return diffusive
    return min(advective_safety * dx / umax, diffusive)


def velocity_from_vorticity(omega: RealField2D) -> Tuple[RealField2D, RealField2D]:
    """``u = (-d/dx2, d/dx1) lap^-1 omega`` for zero-mean ``omega``."""
    return spectral.perp_grad_inv_laplacian(omega)


def rhs(state: NsState) -> RealField2D:
    """``-dealias(u . grad omega) + nu_eff lap omega``."""
    op = NsOperator(state.params, state.grid)
    return RealField2D.from_spectral(state.grid, op(state.omega.spectral()))


def rk4_step(state: NsState, dt: float) -> NsState:
    if not dt > 0:
        raise NsError(f"dt must be positive, got {dt!r}")
    op = NsOperator(state.params, state.grid)
    w_hat = _rk4(op, state.omega.spectral(), dt)
    w = irfft2(w_hat, state.grid.n)
    if not np.isfinite(w).all():
        raise IntegrationBlowup(state.time + dt, "non-finite vorticity")
    return NsState(state.time + dt, RealField2D(state.grid, w), state.params)


def diagnostics(state: NsState) -> Diagnostics:
    """Enstrophy, palinstrophy, kinetic energy and mean by grid quadrature."""
    g = state.grid
    w = state.omega
    w_hat = w.spectral()
    d1, d2 = g.derivative_symbols
    wx, wy, lap_w = irfft2(np.stack([d1 * w_hat, d2 * w_hat, g.laplacian_symbol * w_hat]), g.n)
    u1, u2 = velocity_from_vorticity(w)
    area = g.dx**2
    adv = u1.values * wx + u2.values * wy
    return Diagnostics(
        time=state.time,
        enstrophy=0.5 * float(np.sum(w.values**2)) * area,
        palinstrophy=0.5 * float(np.sum(wx**2 + wy**2)) * area,
        energy=0.5 * float(np.sum(u1.values**2 + u2.values**2)) * area,
        mean_vorticity=spectral.mean(w),
        stretching=float(np.sum(adv * lap_w)) * area,
        lap_norm_sq=float(np.sum(lap_w**2)) * area,
    )


def enstrophy_law_residual(d0: Diagnostics, d1: Diagnostics, nu_eff: float) -> float:
    """``dE/dt + 2 nu_eff P`` over one interval, with trapezoidal ``P``."""
    dt = d1.time - d0.time
    return (d1.enstrophy - d0.enstrophy) / dt + nu_eff * (d0.palinstrophy + d1.palinstrophy)


def palinstrophy_law_residual(d0: Diagnostics, d1: Diagnostics, nu_eff: float) -> Tuple[float, float]:
    """Residual of ``dP/dt = int (u.grad w) lap w - nu_eff ||lap w||^2`` and its right side."""
    dt = d1.time - d0.time
    right = 0.5 * (
        d0.stretching + d1.stretching - nu_eff * (d0.lap_norm_sq + d1.lap_norm_sq)
    )
    return (d1.palinstrophy - d0.palinstrophy) / dt - right, right


def taylor_green_exact(
    amplitude: float, a: int, b: int, params: NsParams, t: float, grid: Grid2D
) -> RealField2D:
    """``amplitude sin(2 pi a x1) sin(2 pi b x2) exp(-4 pi^2 (a^2+b^2) nu_eff t)``."""
    if t < 0:
        raise NsError(f"t must be nonnegative, got {t!r}")
    decay = math.exp(-4.0 * math.pi**2 * (a * a + b * b) * params.nu_eff * t)
    return RealField2D.from_function(
        grid,
        lambda x1, x2: amplitude * decay * np.sin(2 * np.pi * a * x1) * np.sin(2 * np.pi * b * x2),
    )


def _perturbed_base(grid: Grid2D) -> np.ndarray:
    x1, x2 = grid.coordinates()
    return -np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * x2) + np.exp(
        -50.0 * ((x1 - 0.5) ** 2 + (x2 - 0.5) ** 2)
    )


def perturbed_tg_constant(grid: Grid2D) -> float:
    """Constant that makes the perturbed vortex zero-mean on this grid."""
    return -float(np.mean(_perturbed_base(grid)))


def perturbed_tg(grid: Grid2D) -> RealField2D:
    """Taylor-Green cell plus a centred Gaussian bump, shifted to zero mean.

    The Gaussian is not periodized; its jump across the boundary is below
    ``exp(-12.5)``.
    """
    base = _perturbed_base(grid)
    return RealField2D(grid, base - np.mean(base))


def integrate(
    state: NsState,
    t_final: float,
    dt: Optional[float] = None,
    callback: Optional[Callable[[NsState], None]] = None,
    every: Optional[float] = None,
) -> NsState:
    """RK4 from ``state.time`` to ``t_final`` in equal steps of at most ``dt``.

    Without ``dt`` the step comes from :func:`stable_dt` at the initial state.
    ``callback`` sees the initial state, every multiple of ``every`` and the end.
    """
    if t_final < state.time:
        raise NsError("t_final precedes the current time")
    limit = stable_dt(state) if dt is None else dt
    if not limit > 0:
        raise NsError(f"dt must be positive, got {dt!r}")
    op = NsOperator(state.params, state.grid)
    grid = state.grid
    w_hat = state.omega.spectral()
    t = state.time
    if callback is not None:
        callback(state)
    current = state
    for t_next in output_marks(state.time, t_final, every):
        steps = step_count(t_next - t, limit)
        h = (t_next - t) / steps
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(steps):
                w_hat = _rk4(op, w_hat, h)
                if (s + 1) % 256 == 0 or s + 1 == steps:
                    if not np.isfinite(w_hat).all():
                        raise IntegrationBlowup(t + (s + 1) * h, "non-finite vorticity")
        t = t_next
        current = NsState(t, RealField2D(grid, irfft2(w_hat, grid.n)), state.params)
        if callback is not None:
            callback(current)
    return current


def run_series(
    state: NsState, t_final: float, every: float, dt: Optional[float] = None,
    on_state: Optional[Callable[[NsState], None]] = None,
) -> List[Diagnostics]:
    """Diagnostics at the start, each output time and the end."""
    series: List[Diagnostics] = []

    def record(s: NsState):
        series.append(diagnostics(s))
        if on_state is not None:
            on_state(s)

    integrate(state, t_final, dt=dt, callback=record, every=every)
    return series
