"""Pseudo-spectral operators on the periodic unit square.

Fields are sampled at ``x_jk = (j dx, k dx)``; array axis 0 is ``x1`` and
axis 1 is ``x2``.  Spectral data uses the real-FFT layout of
:func:`scipy.fft.rfft2`, shape ``(n, n // 2 + 1)``, with integer wavenumbers
``k``; the physical wavenumber is ``2 pi k`` on the unit torus.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

THREADS_ENV = "LBGK_HYDRO_THREADS"
MEAN_TOLERANCE = 1e-10


class SpectralError(ValueError):
    """Raised for invalid grids or fields violating an operator precondition."""


def fft_workers() -> int:
    """Worker count for FFTs, from ``LBGK_HYDRO_THREADS`` (0 or unset: all cores)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise SpectralError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise SpectralError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def rfft2(values: np.ndarray) -> np.ndarray:
    return scipy.fft.rfft2(values, axes=(-2, -1), workers=fft_workers())


def irfft2(coeffs: np.ndarray, n: int) -> np.ndarray:
    return scipy.fft.irfft2(coeffs, s=(n, n), axes=(-2, -1), workers=fft_workers())


@dataclass(frozen=True)
class Grid2D:
    """Uniform ``n x n`` grid on the unit torus."""

    n: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise SpectralError(f"grid size must be an even integer >= 8, got {self.n!r}")
        if self.length != 1.0:
            raise SpectralError("only the unit torus (length 1) is supported")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def spectral_shape(self):
        return (self.n, self.n // 2 + 1)

    def coordinates(self):
        """Meshgrid ``(x1, x2)`` with ``indexing='ij'``."""
        x = np.arange(self.n) * self.dx
        return np.meshgrid(x, x, indexing="ij")

    # Wavenumber tables are cached per instance; the dataclass is frozen so
    # the arrays never go stale, and they are marked read-only.
    @cached_property
    def k1(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, 1.0 / self.n)[:, None] * np.ones(self.spectral_shape)
        k.setflags(write=False)
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        k = np.fft.rfftfreq(self.n, 1.0 / self.n)[None, :] * np.ones(self.spectral_shape)
        k.setflags(write=False)
        return k

    @cached_property
    def derivative_symbols(self):
        """``(i 2 pi k1, i 2 pi k2)`` with the Nyquist coefficient of each axis zeroed."""
        half = self.n // 2
        out = []
        for k in (self.k1, self.k2):
            sym = np.where(np.abs(k) == half, 0.0, 2j * np.pi * k)
            sym.setflags(write=False)
            out.append(sym)
        return tuple(out)

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        sym = -4.0 * np.pi**2 * (self.k1**2 + self.k2**2)
        sym.setflags(write=False)
        return sym

    @cached_property
    def inverse_laplacian_symbol(self) -> np.ndarray:
        lap = self.laplacian_symbol
        inv = np.zeros_like(lap)
        np.divide(1.0, lap, out=inv, where=lap != 0)
        inv.setflags(write=False)
        return inv

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with ``max(|k1|, |k2|) <= n/3``."""
        mask = np.maximum(np.abs(self.k1), np.abs(self.k2)) <= self.n / 3
        mask.setflags(write=False)
        return mask

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum coefficient in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[:, 0] = 1.0
        if self.n % 2 == 0:
            w[:, -1] = 1.0
        w.setflags(write=False)
        return w

    def cutoff_mask(self, epsilon: float) -> np.ndarray:
        """Modes with ``|k| < 1/epsilon`` (frequency in the ``exp(2 pi i x.k)`` convention)."""
        if not epsilon > 0:
            raise SpectralError(f"epsilon must be positive, got {epsilon!r}")
        return np.hypot(self.k1, self.k2) < 1.0 / epsilon


@dataclass(frozen=True, eq=False)
class RealField2D:
    """Real scalar field sampled on a :class:`Grid2D`."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise SpectralError(
                f"values must have shape {(self.grid.n, self.grid.n)}, got {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> "RealField2D":
        x1, x2 = grid.coordinates()
        return cls(grid, np.broadcast_to(func(x1, x2), x1.shape).astype(float))

    @classmethod
    def zeros(cls, grid: Grid2D) -> "RealField2D":
        return cls(grid, np.zeros((grid.n, grid.n)))

    @classmethod
    def from_spectral(cls, grid: Grid2D, coeffs: np.ndarray) -> "RealField2D":
        return cls(grid, irfft2(coeffs, grid.n))

    def spectral(self) -> np.ndarray:
        return rfft2(self.values)

    def _check_grid(self, other: "RealField2D"):
        if other.grid != self.grid:
            raise SpectralError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, RealField2D):
            self._check_grid(other)
            return RealField2D(self.grid, self.values + other.values)
        return RealField2D(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RealField2D):
            self._check_grid(other)
            return RealField2D(self.grid, self.values - other.values)
        return RealField2D(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, RealField2D):
            self._check_grid(other)
            return RealField2D(self.grid, self.values * other.values)
        return RealField2D(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return RealField2D(self.grid, -self.values)

    def __repr__(self):
        return f"RealField2D(n={self.grid.n}, mean={mean(self):.3g}, l2={l2_norm(self):.3g})"


def _apply(field: RealField2D, symbol) -> RealField2D:
    return RealField2D.from_spectral(field.grid, field.spectral() * symbol)


def deriv(field: RealField2D, axis: int) -> RealField2D:
    """Spectral partial derivative along ``axis`` (0 for ``x1``, 1 for ``x2``)."""
    if axis not in (0, 1):
        raise SpectralError(f"axis must be 0 or 1, got {axis!r}")
    return _apply(field, field.grid.derivative_symbols[axis])


def laplacian(field: RealField2D) -> RealField2D:
    return _apply(field, field.grid.laplacian_symbol)


def mean(field: RealField2D) -> float:
    g = field.grid
    return float(field.values.sum() * g.dx**2 / g.length**2)


def l2_norm(field: RealField2D) -> float:
    return float(np.sqrt(np.sum(field.values**2) * field.grid.dx**2))


def inner(f: RealField2D, h: RealField2D) -> float:
    """Grid L2 inner product ``sum f h dx^2``."""
    f._check_grid(h)
    return float(np.sum(f.values * h.values) * f.grid.dx**2)


def spectral_l2_norm(field: RealField2D) -> float:
    """L2 norm from the Fourier coefficients (Parseval)."""
    coeffs = field.spectral()
    n = field.grid.n
    power = np.sum(field.grid.rfft_weights * np.abs(coeffs) ** 2)
    return float(np.sqrt(power) / n**2 * field.grid.length)


def check_zero_mean(field: RealField2D, tolerance: float = MEAN_TOLERANCE) -> None:
    m = mean(field)
    if abs(m) > tolerance * l2_norm(field):
        raise SpectralError(
            f"field must have zero mean (|mean| = {abs(m):.3e} exceeds "
            f"{tolerance:g} * ||f||_L2)"
        )


def inv_laplacian(field: RealField2D) -> RealField2D:
    """Periodic inverse Laplacian in the zero-mean gauge."""
    check_zero_mean(field)
    return _apply(field, field.grid.inverse_laplacian_symbol)


def dealias(field: RealField2D) -> RealField2D:
    """Zero every mode with ``max(|k1|, |k2|) > n/3``."""
    return _apply(field, field.grid.dealias_mask)


def fourier_cutoff(field: RealField2D, epsilon: float) -> RealField2D:
    """Sharp Fourier cutoff keeping frequencies ``|k| < 1/epsilon``."""
    return _apply(field, field.grid.cutoff_mask(epsilon))


def curl(u1: RealField2D, u2: RealField2D) -> RealField2D:
    """Scalar vorticity ``d u2/d x1 - d u1/d x2``."""
    u1._check_grid(u2)
    d1, d2 = u1.grid.derivative_symbols
    return RealField2D.from_spectral(u1.grid, d1 * u2.spectral() - d2 * u1.spectral())


def perp_grad_inv_laplacian(omega: RealField2D):
    """Velocity ``(-d/dx2, d/dx1) inv_laplacian(omega)`` of a zero-mean vorticity."""
    check_zero_mean(omega)
    g = omega.grid
    psi = omega.spectral() * g.inverse_laplacian_symbol
    d1, d2 = g.derivative_symbols
    return (
        RealField2D.from_spectral(g, -d2 * psi),
        RealField2D.from_spectral(g, d1 * psi),
    )
