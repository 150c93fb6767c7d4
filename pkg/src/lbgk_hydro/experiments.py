"""Hydrodynamic-limit convergence study and the Navier-Stokes validation runs."""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import lbgk, ns2d, serialization, spectral
from .lattice import builtin
from .spectral import Grid2D, RealField2D, irfft2, rfft2
from .timestepping import IntegrationBlowup, step_count

log = logging.getLogger(__name__)

INITIAL_DENSITIES = ("uniform", "pressure-balanced")


class ExperimentError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class InitialCondition:
    """``taylor_green`` (amplitude, a, b) or the ``perturbed_tg`` vortex."""

    kind: str = "taylor_green"
    amplitude: float = 10.0
    a: int = 2
    b: int = 2

    def __post_init__(self):
        if self.kind not in ("taylor_green", "perturbed_tg"):
            raise ExperimentError(f"unknown initial condition {self.kind!r}")

    @classmethod
    def parse(cls, name: str, amplitude=10.0, a=2, b=2) -> "InitialCondition":
        key = name.strip().lower().replace("-", "_")
        aliases = {"tg": "taylor_green", "taylor_green": "taylor_green",
                   "perturbed_tg": "perturbed_tg", "tgvort": "perturbed_tg"}
        if key not in aliases:
            raise ExperimentError(f"unknown initial condition {name!r} (use tg or perturbed-tg)")
        return cls(aliases[key], float(amplitude), int(a), int(b))

    def vorticity(self, grid: Grid2D, params: ns2d.NsParams) -> RealField2D:
        if self.kind == "taylor_green":
            return ns2d.taylor_green_exact(self.amplitude, self.a, self.b, params, 0.0, grid)
        return ns2d.perturbed_tg(grid)


@dataclass(frozen=True)
class ConvergenceConfig:
    """Setup of an epsilon sweep.

    ``initial_density`` is ``"uniform"`` (rho0 = 1) or ``"pressure-balanced"``
    (rho0 = 1 + eps p / c_s^2 with the incompressible pressure ``p`` of u0).
    ``nonlinear=False`` drops the quadratic equilibrium term.
    """

    grid_n: int = 64
    nu: float = 1e-4
    epsilons: Tuple[float, ...] = (0.4, 0.2, 0.1)
    t_final: float = 1.0
    initial_condition: InitialCondition = field(default_factory=InitialCondition)
    dt_override: Optional[float] = None
    ns_dt: Optional[float] = None
    lattice: str = "d2q9"
    initial_density: str = "uniform"
    nonlinear: bool = True
    literal_cutoff: bool = False

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ExperimentError("epsilons must be nonempty")
        if any(not 0 < e < 1 for e in eps):
            raise ExperimentError("every epsilon must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ExperimentError("epsilons must be strictly decreasing")
        if not self.t_final > 0:
            raise ExperimentError(f"t_final must be positive, got {self.t_final!r}")
        if not self.nu > 0:
            raise ExperimentError(f"nu must be positive, got {self.nu!r}")
        for name in ("dt_override", "ns_dt"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ExperimentError(f"{name} must be positive, got {v!r}")
        if self.initial_density not in INITIAL_DENSITIES:
            raise ExperimentError(
                f"initial_density must be one of {INITIAL_DENSITIES}, got {self.initial_density!r}"
            )
        Grid2D(self.grid_n)
        builtin(self.lattice)


# Long perturbed-vortex sweep at N=128; runs for hours.
LARGE_SCALE = ConvergenceConfig(
    grid_n=128,
    epsilons=(0.4, 0.2, 0.1),
    t_final=32.0,
    initial_condition=InitialCondition("perturbed_tg"),
    ns_dt=2e-6,
)


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    rel_error: float
    dt_used: float
    steps: int
    seconds: float = 0.0


@dataclass(frozen=True)
class RunFailure:
    epsilon: float
    time: float
    message: str


class PowerLawFit(NamedTuple):
    prefactor: float
    exponent: float
    r2: float


@dataclass
class ConvergenceResult:
    rows: List[ConvergenceRow]
    fit: Optional[PowerLawFit] = None
    failures: List[RunFailure] = field(default_factory=list)
    reference_error: Optional[float] = None

    @property
    def fit_prefactor(self) -> Optional[float]:
        return None if self.fit is None else self.fit.prefactor

    @property
    def fit_exponent(self) -> Optional[float]:
        return None if self.fit is None else self.fit.exponent

    @property
    def fit_r2(self) -> Optional[float]:
        return None if self.fit is None else self.fit.r2


def fit_power_law(rows: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Least-squares fit of ``log y = log A + p log x``; ``r2`` is taken in log space."""
    pts = np.asarray(rows, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ExperimentError("rows must be (x, y) pairs")
    if pts.shape[0] < 2:
        raise ExperimentError("a power-law fit needs at least 2 rows")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ExperimentError("power-law fit needs positive finite values")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise ExperimentError("power-law fit needs at least two distinct x values")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(np.exp(intercept)), float(slope), r2)


def relative_l2_error(approx: RealField2D, reference: RealField2D) -> float:
    return spectral.l2_norm(approx - reference) / spectral.l2_norm(reference)


def incompressible_pressure(u1: RealField2D, u2: RealField2D) -> RealField2D:
    """Zero-mean ``p`` with ``lap p = -div div (u u)``."""
    g = u1.grid
    d1, d2 = g.derivative_symbols
    u = np.stack([u1.values, u2.values])
    prod = rfft2(np.stack([u[0] * u[0], u[0] * u[1], u[1] * u[1]])) * g.dealias_mask
    source = d1 * d1 * prod[0] + 2.0 * d1 * d2 * prod[1] + d2 * d2 * prod[2]
    return RealField2D.from_spectral(g, -source * g.inverse_laplacian_symbol)


def lbgk_initial_state(
    omega0: RealField2D, params: lbgk.LbgkParams, initial_density: str = "uniform"
) -> lbgk.LbgkState:
    u = ns2d.velocity_from_vorticity(omega0)
    rho = RealField2D(omega0.grid, np.ones_like(omega0.values))
    if initial_density == "pressure-balanced":
        cs2 = params.lattice.sound_speed**2
        rho = rho + incompressible_pressure(*u) * (params.epsilon / cs2)
    elif initial_density != "uniform":
        raise ExperimentError(f"unknown initial_density {initial_density!r}")
    return lbgk.init_from_macroscopic(rho, u, params)


def lbgk_params(config: ConvergenceConfig, epsilon: float) -> lbgk.LbgkParams:
    return lbgk.LbgkParams(
        epsilon,
        config.nu,
        builtin(config.lattice),
        nonlinear=config.nonlinear,
        literal_cutoff=config.literal_cutoff,
    )


def ns_reference(config: ConvergenceConfig) -> Tuple[RealField2D, Optional[float]]:
    """NS vorticity at ``t_final``; for Taylor-Green also its error against the exact decay."""
    grid = Grid2D(config.grid_n)
    params = ns2d.NsParams(config.nu, builtin(config.lattice).sound_speed)
    omega0 = config.initial_condition.vorticity(grid, params)
    final = ns2d.integrate(ns2d.NsState(0.0, omega0, params), config.t_final, dt=config.ns_dt)
    exact_err = None
    ic = config.initial_condition
    if ic.kind == "taylor_green":
        exact = ns2d.taylor_green_exact(ic.amplitude, ic.a, ic.b, params, config.t_final, grid)
        exact_err = relative_l2_error(final.omega, exact)
    return final.omega, exact_err


def run_convergence(
    config: ConvergenceConfig,
    progress: Optional[Callable[[ConvergenceRow], None]] = None,
) -> ConvergenceResult:
    """Relative vorticity error of LBGK against NS at ``t_final`` for each epsilon.

    A blow-up is recorded in ``failures`` and the sweep continues; the fit
    needs at least two successful epsilons.
    """
    grid = Grid2D(config.grid_n)
    reference, ref_err = ns_reference(config)
    ns_params = ns2d.NsParams(config.nu, builtin(config.lattice).sound_speed)
    omega0 = config.initial_condition.vorticity(grid, ns_params)
    rows: List[ConvergenceRow] = []
    failures: List[RunFailure] = []
    for eps in config.epsilons:
        params = lbgk_params(config, eps)
        dt = config.dt_override or lbgk.stable_dt(params, grid)
        steps = step_count(config.t_final, dt)
        log.info("eps=%g: %d RK4 steps of %.3e", eps, steps, config.t_final / steps)
        state = lbgk_initial_state(omega0, params, config.initial_density)
        start = _time.perf_counter()
        try:
            final = lbgk.integrate(state, config.t_final, dt=dt)
        except IntegrationBlowup as exc:
            failures.append(RunFailure(eps, exc.time, str(exc)))
            log.warning("eps=%g blew up at t=%g", eps, exc.time)
            continue
        err = relative_l2_error(lbgk.vorticity_of(final), reference)
        row = ConvergenceRow(eps, err, config.t_final / steps, steps, _time.perf_counter() - start)
        rows.append(row)
        if progress is not None:
            progress(row)
    fit = fit_power_law([(r.epsilon, r.rel_error) for r in rows]) if len(rows) >= 2 else None
    return ConvergenceResult(rows, fit, failures, ref_err)


def write_convergence_csv(path, result: ConvergenceResult) -> None:
    rows = [(r.epsilon, r.rel_error, r.dt_used, r.steps) for r in result.rows]
    footer = []
    if result.fit is not None:
        footer = [
            ("fit_prefactor", result.fit.prefactor),
            ("fit_exponent", result.fit.exponent),
            ("fit_r2", result.fit.r2),
        ]
    serialization.write_csv(path, ("epsilon", "rel_error", "dt_used", "steps"), rows, footer)


def run_tg_validation(
    grid_n: int = 64,
    nu: float = 1e-4,
    t_final: float = 1.0,
    dt: float = 1e-4,
    amplitude: float = 10.0,
    a: int = 2,
    b: int = 2,
    sound_speed: float = ns2d.DEFAULT_SOUND_SPEED,
) -> float:
    """Relative L2 error of the NS solver against the exact Taylor-Green decay."""
    grid = Grid2D(grid_n)
    params = ns2d.NsParams(nu, sound_speed)
    omega0 = ns2d.taylor_green_exact(amplitude, a, b, params, 0.0, grid)
    final = ns2d.integrate(ns2d.NsState(0.0, omega0, params), t_final, dt=dt)
    exact = ns2d.taylor_green_exact(amplitude, a, b, params, t_final, grid)
    return relative_l2_error(final.omega, exact)


NS_SERIES_COLUMNS = (
    "time", "enstrophy", "palinstrophy", "energy", "mean_vorticity", "enstrophy_law_residual",
)


def ns_series_rows(series: Sequence[ns2d.Diagnostics], nu_eff: float) -> List[tuple]:
    """CSV rows; the law residual of row k covers the interval ending at row k."""
    out = []
    for k, d in enumerate(series):
        res = ns2d.enstrophy_law_residual(series[k - 1], d, nu_eff) if k else math.nan
        out.append((d.time, d.enstrophy, d.palinstrophy, d.energy, d.mean_vorticity, res))
    return out


def run_vortex_evolution(
    grid_n: int = 64,
    nu: float = 1e-4,
    t_final: float = 4.0,
    output_every: float = 0.1,
    dt: Optional[float] = None,
    out_dir: Optional[Path] = None,
    snapshot_every: Optional[float] = None,
    initial_condition: Optional[InitialCondition] = None,
    sound_speed: float = ns2d.DEFAULT_SOUND_SPEED,
) -> List[ns2d.Diagnostics]:
    """Integrate the perturbed vortex; optionally write ``ns_series.csv`` and snapshots."""
    grid = Grid2D(grid_n)
    params = ns2d.NsParams(nu, sound_speed)
    ic = initial_condition or InitialCondition("perturbed_tg")
    state = ns2d.NsState(0.0, ic.vorticity(grid, params), params)
    on_state = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        on_state = _snapshot_writer(out_dir, snapshot_every, output_every, t_final,
                                    lambda s: [("omega", s.omega)])
    series = ns2d.run_series(state, t_final, output_every, dt=dt, on_state=on_state)
    if out_dir is not None:
        serialization.write_csv(
            out_dir / "ns_series.csv", NS_SERIES_COLUMNS, ns_series_rows(series, params.nu_eff)
        )
    return series


LBGK_SERIES_COLUMNS = ("time", "mass", "l2_rho", "l2_u", "weighted_g_norm")


def lbgk_series_row(state: lbgk.LbgkState) -> tuple:
    m = lbgk.macroscopic(state)
    l2_u = math.hypot(spectral.l2_norm(m.u[0]), spectral.l2_norm(m.u[1]))
    return (state.time, spectral.mean(m.rho), spectral.l2_norm(m.rho), l2_u,
            lbgk.weighted_norm(state))


def run_lbgk(
    config: ConvergenceConfig,
    epsilon: float,
    output_every: Optional[float] = None,
    out_dir: Optional[Path] = None,
    snapshot_every: Optional[float] = None,
) -> Tuple[lbgk.LbgkState, List[tuple]]:
    """Single LBGK run from the configured initial vortex; returns the final state and series."""
    grid = Grid2D(config.grid_n)
    params = lbgk_params(config, epsilon)
    ns_params = ns2d.NsParams(config.nu, params.lattice.sound_speed)
    omega0 = config.initial_condition.vorticity(grid, ns_params)
    state = lbgk_initial_state(omega0, params, config.initial_density)
    rows: List[tuple] = []
    writer = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        writer = _snapshot_writer(
            out_dir, snapshot_every, output_every, config.t_final,
            lambda s: [(f"g{i}", f) for i, f in enumerate(s.fields)]
            + [("omega_eps", lbgk.vorticity_of(s))],
        )

    def record(s: lbgk.LbgkState):
        rows.append(lbgk_series_row(s))
        if writer is not None:
            writer(s)

    final = lbgk.integrate(state, config.t_final, dt=config.dt_override,
                           callback=record, every=output_every)
    if out_dir is not None:
        serialization.write_csv(out_dir / "lbgk_series.csv", LBGK_SERIES_COLUMNS, rows)
    return final, rows


def _snapshot_writer(out_dir: Path, snapshot_every, output_every, t_final, fields_of):
    """Callback writing snapshots at multiples of ``snapshot_every`` and at the end."""
    cadence = snapshot_every or output_every or t_final
    tol = 1e-9 * max(1.0, t_final)

    def write(state):
        t = state.time
        k = round(t / cadence)
        if abs(t - k * cadence) > tol and abs(t - t_final) > tol:
            return
        for prefix, fld in fields_of(state):
            serialization.write_field_snapshot(
                out_dir / serialization.snapshot_name(prefix, t), fld, t
            )

    return write


def config_record(config: ConvergenceConfig) -> dict:
    """Flat key/value view of a config, as written to run directories."""
    d = asdict(config)
    ic = d.pop("initial_condition")
    d["ic"] = "tg" if ic["kind"] == "taylor_green" else "perturbed-tg"
    d.update(amplitude=ic["amplitude"], a=ic["a"], b=ic["b"])
    d["n"] = d.pop("grid_n")
    d["eps"] = d.pop("epsilons")
    d["dt"] = d.pop("dt_override")
    return d
