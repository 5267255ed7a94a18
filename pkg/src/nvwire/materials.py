"""Drude permittivity of silver and its fit to tabulated optical constants."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, InputValidationError, InsufficientDataError
from .io import read_csv, write_csv

HBAR_EV_S = 6.582119569e-16
C_LIGHT = 299792458.0
HC_EV_NM = 2 * np.pi * HBAR_EV_S * C_LIGHT * 1e9

FIT_WINDOW_NM = (600.0, 800.0)
# eps_inf, hbar*omega_p [eV], hbar*gamma [eV]
FIT_START = (4.0, 9.0, 0.02)


@dataclass(frozen=True)
class DrudeParameters:
    """eps(ω) = eps_inf − omega_p² / (ω² + i·gamma·ω); frequencies in rad/s."""

    eps_inf: float
    omega_p: float
    gamma: float

    def __post_init__(self):
        if not self.omega_p > 0:
            raise InputValidationError("omega_p must be positive")
        if not self.gamma >= 0:
            raise InputValidationError("gamma must be non-negative")
        if not self.eps_inf >= 1:
            raise InputValidationError("eps_inf must be at least 1")

    @classmethod
    def from_ev(cls, eps_inf, omega_p_ev, gamma_ev):
        return cls(float(eps_inf), float(omega_p_ev) / HBAR_EV_S, float(gamma_ev) / HBAR_EV_S)

    @property
    def omega_p_ev(self):
        return self.omega_p * HBAR_EV_S

    @property
    def gamma_ev(self):
        return self.gamma * HBAR_EV_S

    def lossless(self):
        return DrudeParameters(self.eps_inf, self.omega_p, 0.0)

    def as_dict(self):
        return {"eps_inf": self.eps_inf, "omega_p_rad_s": self.omega_p,
                "gamma_rad_s": self.gamma}


def angular_frequency(wavelength_nm):
    return 2 * np.pi * C_LIGHT / (np.asarray(wavelength_nm, float) * 1e-9)


def drude_epsilon(wavelength_nm, params):
    """Complex permittivity at vacuum wavelength(s) ``wavelength_nm``."""
    lam = np.asarray(wavelength_nm, float)
    if np.any(~(lam > 0)):
        raise InputValidationError("wavelength must be positive")
    w = angular_frequency(lam)
    eps = params.eps_inf - params.omega_p ** 2 / (w * w + 1j * params.gamma * w)
    return eps[()] if eps.ndim == 0 else eps


@dataclass(frozen=True)
class OpticalConstantTable:
    """Tabulated permittivity, wavelength strictly increasing (nm)."""

    wavelength_nm: np.ndarray
    epsilon: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.wavelength_nm, float)
        eps = np.asarray(self.epsilon, complex)
        if lam.ndim != 1 or lam.shape != eps.shape:
            raise InputValidationError("wavelength and epsilon must be matching 1-D arrays")
        if lam.size < 2:
            raise InputValidationError("an optical-constant table needs at least 2 rows")
        if np.any(np.diff(lam) <= 0):
            raise InputValidationError("table wavelengths must be strictly increasing")
        if np.any(eps.imag < 0):
            raise InputValidationError("Im eps must be non-negative (passive medium)")
        lam.setflags(write=False)
        eps.setflags(write=False)
        object.__setattr__(self, "wavelength_nm", lam)
        object.__setattr__(self, "epsilon", eps)

    def __len__(self):
        return self.wavelength_nm.size

    def window(self, lo, hi):
        sel = (self.wavelength_nm >= lo) & (self.wavelength_nm <= hi)
        return self.wavelength_nm[sel], self.epsilon[sel]

    def lookup(self, wavelength_nm):
        """Linear interpolation of Re and Im parts."""
        return (np.interp(wavelength_nm, self.wavelength_nm, self.epsilon.real)
                + 1j * np.interp(wavelength_nm, self.wavelength_nm, self.epsilon.imag))

    @classmethod
    def from_drude(cls, wavelength_nm, params):
        lam = np.asarray(wavelength_nm, float)
        return cls(lam, np.atleast_1d(drude_epsilon(lam, params)))


def load_optical_table(path):
    lam, re, im = read_csv(path, ("wavelength_nm", "eps_re", "eps_im"), (float, float, float))
    return OpticalConstantTable(np.array(lam), np.array(re) + 1j * np.array(im))


def save_optical_table(path, table):
    write_csv(path, ("wavelength_nm", "eps_re", "eps_im"),
              [(repr(float(l)), repr(float(e.real)), repr(float(e.imag)))
               for l, e in zip(table.wavelength_nm, table.epsilon)])


def bundled_silver_table():
    """Johnson & Christy silver, 496–892 nm, converted from (n, k) to ε."""
    ref = resources.files("nvwire.data") / "silver_johnson_christy.csv"
    with resources.as_file(ref) as path:
        return load_optical_table(path)


@dataclass(frozen=True)
class DrudeFit:
    params: DrudeParameters
    wavelength_nm: np.ndarray
    residuals: np.ndarray
    cost: float
    iterations: int

    @property
    def max_residual(self):
        return float(np.max(self.residuals))


def _model_ev(lam, eps_inf, wp_ev, g_ev):
    e = HC_EV_NM / lam
    return eps_inf - wp_ev ** 2 / (e * e + 1j * g_ev * e)


def fit_drude(table, window=FIT_WINDOW_NM, start=FIT_START):
    """Least-squares Drude fit over rows with wavelength inside ``window``.

    The objective is the sum of squared *relative* errors of Re ε and
    Im ε, each part weighted equally.  Returns a :class:`DrudeFit` whose
    ``residuals`` are the per-row ``|ε_fit − ε_table| / |ε_table|``.
    """
    lam, eps = table.window(*window)
    if lam.size < 3:
        raise InsufficientDataError(
            f"need at least 3 table rows inside {window[0]:g}-{window[1]:g} nm, "
            f"found {lam.size}")
    re_scale = np.abs(eps.real)
    im_scale = np.abs(eps.imag)
    im_scale = np.where(im_scale > 0, im_scale, np.abs(eps))

    def resid(p):
        m = _model_ev(lam, *p)
        return np.concatenate([(m.real - eps.real) / re_scale,
                               (m.imag - eps.imag) / im_scale])

    sol = optimize.least_squares(resid, np.asarray(start, float), method="lm",
                                 x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                 max_nfev=20000)
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise ConvergenceError(f"Drude fit failed: {sol.message}",
                               {"x": sol.x.tolist(), "cost": float(sol.cost),
                                "nfev": int(sol.nfev), "status": int(sol.status)})
    eps_inf, wp_ev, g_ev = sol.x
    wp_ev, g_ev = abs(wp_ev), abs(g_ev)
    try:
        params = DrudeParameters.from_ev(eps_inf, wp_ev, g_ev)
    except InputValidationError as exc:
        raise ConvergenceError(f"Drude fit left the physical domain: {exc}",
                               {"x": sol.x.tolist()}) from exc
    model = _model_ev(lam, eps_inf, wp_ev, g_ev)
    residuals = np.abs(model - eps) / np.abs(eps)
    return DrudeFit(params, lam, residuals, float(sol.cost), int(sol.nfev))


_DEFAULT = None


def default_silver():
    """Drude parameters fitted to the bundled silver table over 600–800 nm."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = fit_drude(bundled_silver_table()).params
    return _DEFAULT
