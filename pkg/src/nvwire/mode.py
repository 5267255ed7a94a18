"""Fundamental (m = 0, TM) surface-plasmon mode of a metal cylinder.

Lengths are in metres.  Magnetic fields are reported as Z0·H, i.e. in
the same units as E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import InputValidationError, NoModeError, NoRootError, RangeError
from .numerics import RootRegion, find_complex_root, winding_number

FIELD_NORMALIZATION = "Ez(R+)=1"

# effective-index search box (the guided mode lies right of the light line)
SEARCH_RE_MAX = 6.0
SEARCH_IM = (-0.05, 1.0)


def decaying_sqrt(z):
    """Square root with Re ≥ 0, and Im ≥ 0 when Re = 0."""
    s = np.sqrt(np.asarray(z, dtype=complex))
    flip = (s.real < 0) | ((s.real == 0) & (s.imag < 0))
    s = np.where(flip, -s, s)
    return s[()] if s.ndim == 0 else s


@dataclass(frozen=True)
class WireGeometry:
    radius: float
    eps_metal: complex
    eps_dielectric: float = 3.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InputValidationError("wire radius must be positive")
        if not self.eps_dielectric >= 1:
            raise InputValidationError("eps_dielectric must be at least 1")
        object.__setattr__(self, "eps_metal", complex(self.eps_metal))
        object.__setattr__(self, "eps_dielectric", float(self.eps_dielectric))

    @property
    def diameter(self):
        return 2 * self.radius


@dataclass(frozen=True)
class PlasmonMode:
    vacuum_wavelength: float
    geometry: WireGeometry
    n_eff: complex
    propagation_length: float
    field_normalization: str = FIELD_NORMALIZATION

    @property
    def k0(self):
        return 2 * math.pi / self.vacuum_wavelength

    @property
    def beta(self):
        """Complex propagation constant k_pl = n_eff·k0 (1/m)."""
        return self.n_eff * self.k0


@dataclass(frozen=True)
class ModeFieldSample:
    r: np.ndarray
    E_r: np.ndarray
    E_phi: np.ndarray
    E_z: np.ndarray
    H_phi: np.ndarray


def _transverse(n, eps, k0):
    return k0 * decaying_sqrt(n * n - eps)


def dispersion_terms(n_eff, geometry, wavelength):
    """The metal and dielectric addends of the TM0 bound-mode condition."""
    k0 = 2 * math.pi / wavelength
    R = geometry.radius
    em, e1 = geometry.eps_metal, geometry.eps_dielectric
    n = np.asarray(n_eff, dtype=complex)
    km = _transverse(n, em, k0)
    k1 = _transverse(n, e1, k0)
    with np.errstate(all="ignore"):
        inner = em / km * sp.ive(1, km * R) / sp.ive(0, km * R)
        outer = e1 / k1 * sp.kve(1, k1 * R) / sp.kve(0, k1 * R)
    if not (np.all(np.isfinite(inner)) and np.all(np.isfinite(outer))):
        raise RangeError(f"Bessel ratio not finite at n_eff = {n_eff!r}")
    return inner[()], outer[()]


def dispersion_residual(n_eff, geometry, wavelength):
    """D(n) = (ε_m/κ_m) I1/I0 (κ_m R) + (ε_1/κ_1) K1/K0 (κ_1 R); zero on the mode."""
    inner, outer = dispersion_terms(n_eff, geometry, wavelength)
    return inner + outer


def default_search_region(geometry):
    lo = math.sqrt(geometry.eps_dielectric) * 1.001
    return RootRegion.from_bounds(lo, SEARCH_RE_MAX, *SEARCH_IM)


def solve_fundamental_mode(geometry, wavelength, region=None):
    """Solve for the guided TM0 plasmon; returns a :class:`PlasmonMode`.

    Raises :class:`NoModeError` when Re ε_m ≥ −ε_1 or when the
    argument-principle count finds no zero in the search box.
    """
    if not wavelength > 0:
        raise InputValidationError("wavelength must be positive")
    em, e1 = geometry.eps_metal, geometry.eps_dielectric
    if not em.real < -e1:
        raise NoModeError(f"no guided plasmon: Re eps_metal = {em.real:g} is not below "
                          f"-eps_dielectric = {-e1:g}")
    region = region or default_search_region(geometry)

    def f(n):
        return complex(dispersion_residual(n, geometry, wavelength))

    try:
        n = find_complex_root(f, region, tol=1e-13)
    except NoRootError as exc:
        raise NoModeError(f"no guided plasmon found in the search region: {exc}") from exc
    if em.imag == 0 and abs(n.imag) < 1e-12 * abs(n):
        n = complex(n.real, 0.0)
    inner, outer = dispersion_terms(n, geometry, wavelength)
    rel = abs(inner + outer) / max(abs(inner), abs(outer))
    if rel > 1e-10:
        raise NoModeError(f"mode residual {rel:.2e} exceeds certification threshold")
    return PlasmonMode(float(wavelength), geometry, n, _length(wavelength, n))


def _length(wavelength, n):
    if n.imag <= 0:
        return math.inf
    return wavelength / (4 * math.pi * n.imag)


def propagation_length(mode):
    """1/e power decay length λ/(4π Im n_eff); ``inf`` for a lossless mode."""
    return _length(mode.vacuum_wavelength, mode.n_eff)


def certify_mode(mode, half_size=1e-3):
    """Winding number of D on a small box around the mode's n_eff."""
    g, lam = mode.geometry, mode.vacuum_wavelength
    box = RootRegion(mode.n_eff, half_size, half_size)
    return winding_number(lambda n: complex(dispersion_residual(n, g, lam)), box)


def mode_fields(mode, r):
    """Field components of ``mode`` at radial position(s) ``r`` (metres).

    Inside the wire the profile is built from I-type functions, outside
    from K-type ones, normalised so that E_z just outside the surface is 1.
    """
    r_arr = np.atleast_1d(np.asarray(r, float))
    if np.any(r_arr < 0):
        raise InputValidationError("r must be non-negative")
    g = mode.geometry
    R, k0 = g.radius, mode.k0
    n = mode.n_eff
    beta = n * k0
    km = _transverse(n, g.eps_metal, k0)
    k1 = _transverse(n, g.eps_dielectric, k0)
    inside = r_arr < R
    Ez = np.empty(r_arr.shape, complex)
    Er = np.empty_like(Ez)
    Hp = np.empty_like(Ez)
    ri = r_arr[inside]
    if ri.size:
        scale = np.exp(np.abs((km * ri).real) - abs((km * R).real)) / sp.ive(0, km * R)
        i0 = sp.ive(0, km * ri) * scale
        i1 = sp.ive(1, km * ri) * scale
        Ez[inside] = i0
        Er[inside] = -1j * beta / km * i1
        Hp[inside] = -1j * k0 * g.eps_metal / km * i1
    ro = r_arr[~inside]
    if ro.size:
        scale = np.exp(-k1 * (ro - R)) / sp.kve(0, k1 * R)
        k0v = sp.kve(0, k1 * ro) * scale
        k1v = sp.kve(1, k1 * ro) * scale
        Ez[~inside] = k0v
        Er[~inside] = 1j * beta / k1 * k1v
        Hp[~inside] = 1j * k0 * g.eps_dielectric / k1 * k1v
    parts = (r_arr, Er, np.zeros_like(Er), Ez, Hp)
    if np.ndim(r) == 0:
        parts = tuple(v[0] for v in parts)
    return ModeFieldSample(*parts)
