"""scikit-learn style wrappers.

``PowerLawRegressor`` is an ordinary regressor.  The solver wrappers fit on
an initial vorticity field (an ``(n, n)`` array) and ``predict`` maps a
list of times to the vorticity at those times, shape ``(len(times), n, n)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import experiments, lbgk, ns2d
from .lattice import builtin
from .spectral import Grid2D, RealField2D


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Fit ``y = A x^p`` by least squares in log-log space."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single feature, got {X.shape[1]}")
        fit = experiments.fit_power_law(np.column_stack([X[:, 0], y]))
        self.prefactor_, self.exponent_, self.r2_ = fit
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        X = check_array(X)
        return self.prefactor_ * X[:, 0] ** self.exponent_


def _check_field(omega) -> np.ndarray:
    w = check_array(omega, ensure_min_samples=8, ensure_min_features=8)
    if w.shape[0] != w.shape[1]:
        raise ValueError(f"vorticity must be square, got shape {w.shape}")
    return w


def _check_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("times must be a nondecreasing 1-D sequence of nonnegative values")
    return t


class NavierStokes2D(BaseEstimator):
    """Pseudo-spectral vorticity solver; ``fit`` stores the initial field."""

    def __init__(self, nu=1e-4, sound_speed=ns2d.DEFAULT_SOUND_SPEED, dt=None):
        self.nu = nu
        self.sound_speed = sound_speed
        self.dt = dt

    def fit(self, omega0, y=None):
        w = _check_field(omega0)
        self.params_ = ns2d.NsParams(self.nu, self.sound_speed)
        self.initial_state_ = ns2d.NsState(0.0, RealField2D(Grid2D(w.shape[0]), w), self.params_)
        return self

    def predict(self, times):
        check_is_fitted(self, "initial_state_")
        out = []
        state = self.initial_state_
        for t in _check_times(times):
            state = ns2d.integrate(state, t, dt=self.dt)
            out.append(state.omega.values.copy())
        return np.stack(out)


class LatticeBGK(BaseEstimator):
    """LBGK solver lifted from a vorticity field; ``predict`` returns the macroscopic vorticity."""

    def __init__(self, epsilon=0.2, nu=1e-4, lattice="d2q9", initial_density="uniform",
                 nonlinear=True, literal_cutoff=False, dt=None):
        self.epsilon = epsilon
        self.nu = nu
        self.lattice = lattice
        self.initial_density = initial_density
        self.nonlinear = nonlinear
        self.literal_cutoff = literal_cutoff
        self.dt = dt

    def fit(self, omega0, y=None):
        w = _check_field(omega0)
        self.params_ = lbgk.LbgkParams(self.epsilon, self.nu, builtin(self.lattice),
                                       self.nonlinear, self.literal_cutoff)
        field = RealField2D(Grid2D(w.shape[0]), w)
        self.initial_state_ = experiments.lbgk_initial_state(field, self.params_,
                                                             self.initial_density)
        return self

    def predict(self, times):
        check_is_fitted(self, "initial_state_")
        out = []
        state = self.initial_state_
        for t in _check_times(times):
            state = lbgk.integrate(state, t, dt=self.dt)
            out.append(lbgk.vorticity_of(state).values)
        return np.stack(out)
