"""scikit-learn style wrappers around the fitters and the rate model.

The wrappers only translate between array inputs and the typed functions
in the physics modules; all numerical work happens there.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import coupling, materials, photon_stats
from .errors import InputValidationError
from .mode import WireGeometry


def check_positive(name, value):
    if not (np.isscalar(value) and np.isfinite(value) and value > 0):
        raise InputValidationError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_choice(name, value, choices):
    if value not in choices:
        raise InputValidationError(f"{name} must be one of {tuple(choices)}, got {value!r}")
    return value


def check_column(X, name="X"):
    """Accept a 1-D array or an (n, 1) column and return a flat float array."""
    arr = check_array(np.asarray(X, float).reshape(-1, 1) if np.ndim(X) == 1 else X,
                      ensure_2d=True, dtype=float, input_name=name)
    if arr.shape[1] != 1:
        raise InputValidationError(f"{name} must have exactly one column")
    return arr[:, 0]


def _histogram(X, y, period_ps=None):
    starts = check_column(X)
    counts = np.asarray(y, float).ravel()
    if counts.shape != starts.shape:
        raise InputValidationError("X and y must have the same number of bins")
    if starts.size < 2:
        raise InputValidationError("need at least two bins")
    width = float(starts[1] - starts[0])
    if not np.allclose(np.diff(starts), width):
        raise InputValidationError("bin starts must be equally spaced")
    return photon_stats.Histogram(starts, counts, width, period_ps)


class DrudeRegressor(BaseEstimator):
    """Drude fit of complex permittivity against wavelength (nm)."""

    def __init__(self, window_nm=materials.FIT_WINDOW_NM, start=materials.FIT_START):
        self.window_nm = window_nm
        self.start = start

    def fit(self, X, y):
        lam = check_column(X)
        eps = np.asarray(y, complex).ravel()
        if eps.shape != lam.shape:
            raise InputValidationError("X and y must have the same length")
        order = np.argsort(lam)
        table = materials.OpticalConstantTable(lam[order], eps[order])
        self.fit_result_ = materials.fit_drude(table, tuple(self.window_nm), tuple(self.start))
        self.params_ = self.fit_result_.params
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        return np.atleast_1d(materials.drude_epsilon(check_column(X), self.params_))


class LifetimeEstimator(BaseEstimator):
    """Poisson-likelihood single-exponential fit of a start-stop histogram.

    ``X`` holds bin starts in ps, ``y`` the counts.
    """

    def __init__(self, fit_window_ns=None, period_ps=None):
        self.fit_window_ns = fit_window_ns
        self.period_ps = period_ps

    def fit(self, X, y):
        hist = _histogram(X, y, self.period_ps)
        self.result_ = photon_stats.fit_lifetime(hist, self.fit_window_ns)
        self.tau_ = self.result_.tau
        self.bin_width_ps_ = hist.bin_width_ps
        return self

    def predict(self, X):
        """Model counts at bin starts ``X`` (ps)."""
        check_is_fitted(self, "result_")
        t = (check_column(X) + 0.5 * self.bin_width_ps_) / photon_stats.PS_PER_NS
        r = self.result_
        return r.amplitude * np.exp(-(t - r.window_ns[0]) / r.tau) + r.offset


class G2Estimator(BaseEstimator):
    """Three-level g² fit of a correlation histogram (``X`` in ps)."""

    def __init__(self, normalization_window_ns=photon_stats.NORMALIZATION_WINDOW_NS):
        self.normalization_window_ns = normalization_window_ns

    def fit(self, X, y):
        hist = _histogram(X, y)
        self.result_ = photon_stats.fit_g2(hist, tuple(self.normalization_window_ns))
        self.g2_zero_ = self.result_.g2_zero
        self.single_emitter_ = self.result_.single_emitter
        self.bin_width_ps_ = hist.bin_width_ps
        return self

    def predict(self, X):
        """Normalized g² model at bin starts ``X`` (ps)."""
        check_is_fitted(self, "result_")
        t = (check_column(X) + 0.5 * self.bin_width_ps_) / photon_stats.PS_PER_NS
        return photon_stats.g2_model(t, self.result_.params)


class RateEnhancementModel(BaseEstimator):
    """Total decay-rate enhancement as a function of (diameter nm, d′ nm).

    ``fit`` only resolves the metal permittivity; nothing is learned from
    data, so ``X`` and ``y`` are ignored.
    """

    CHANNELS = ("gamma_pl", "gamma_rad", "gamma_nr", "total", "beta")

    def __init__(self, wavelength_nm=700.0, eps1=3.0, orientation="radial", drude=None):
        self.wavelength_nm = wavelength_nm
        self.eps1 = eps1
        self.orientation = orientation
        self.drude = drude

    def fit(self, X=None, y=None):
        check_positive("wavelength_nm", self.wavelength_nm)
        check_positive("eps1", self.eps1)
        check_choice("orientation", self.orientation, coupling.ORIENTATIONS)
        self.drude_ = self.drude or materials.default_silver()
        self.eps_metal_ = complex(materials.drude_epsilon(self.wavelength_nm, self.drude_))
        return self

    def _rows(self, X):
        check_is_fitted(self, "eps_metal_")
        X = check_array(X, dtype=float, input_name="X")
        if X.shape[1] != 2:
            raise InputValidationError("X must have two columns: diameter_nm, distance_nm")
        out = []
        for dia, dist in X:
            geo = WireGeometry(dia / 2e9, self.eps_metal_, self.eps1)
            em = coupling.EmitterConfig(dist / 1e9, self.orientation,
                                        self.wavelength_nm / 1e9, self.eps1)
            out.append(coupling.total_rate_enhancement(geo, em))
        return out

    def predict(self, X):
        return np.array([r.total for r in self._rows(X)])

    def transform(self, X):
        """Channel matrix with columns :attr:`CHANNELS`."""
        return np.array([[getattr(r, c) for c in self.CHANNELS] for r in self._rows(X)])
