"""Decay-rate enhancement of a dipole next to a metal nanowire.

The scattered field of the wire is expanded in cylindrical waves
``exp(i m φ + i h z)``: for every angular order m and axial wavenumber h
a 2×2 system (tangential continuity of E_z, H_z, E_φ, H_φ at r = R)
maps the regular incident wave of the dipole onto the outgoing scattered
wave.  The h-integral of the resulting self-field is split into

* the residue of the m = 0 TM pole at the plasmon wavenumber (plasmon
  channel, extracted with a small circular contour and subtracted from
  the real-axis integrand),
* the remainder over |h| < k₁ (far-field radiation, plus the free-space
  unit rate), and
* the remainder over |h| > k₁ (absorption in the metal).

Internally all lengths are measured in units of 1/k0 and ω = c = 1.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import special as sp

from .errors import (AccuracyError, ChannelSplitError, FileFormatError, InputValidationError,
                     NoModeError)
from .io import read_csv, read_key_values, write_csv, write_key_values
from .materials import default_silver, drude_epsilon
from .mode import WireGeometry, solve_fundamental_mode
from .numerics import QuadratureConfig, RootRegion, find_complex_root, gauss_kronrod
from .numerics.bessel import (
    MAX_ORDER,
    h_ratios,
    hankel_growth,
    j_ratios,
    jh_products,
    log_derivatives,
)

ORIENTATIONS = ("radial", "axial", "azimuthal")
_DIPOLE = {"radial": (1.0, 0.0, 0.0), "azimuthal": (0.0, 1.0, 0.0), "axial": (0.0, 0.0, 1.0)}

M_START = 10
M_STEP = 10
M_TOLERANCE = 1e-4
CUTOFF_DISTANCE_FACTOR = 40.0
CUTOFF_K1_FACTOR = 8.0
CLAMP_FLOOR = -1e-9

MAP_DIAMETER_RANGE_NM = (30.0, 80.0)
MAP_DISTANCE_RANGE_NM = (5.0, 60.0)


@dataclass(frozen=True)
class EmitterConfig:
    distance_from_surface: float
    orientation: str = "radial"
    vacuum_wavelength: float = 700e-9
    eps_background: float = 3.0

    def __post_init__(self):
        if not self.distance_from_surface > 0:
            raise InputValidationError("distance_from_surface must be positive")
        if not self.vacuum_wavelength > 0:
            raise InputValidationError("vacuum_wavelength must be positive")
        if self.orientation not in ORIENTATIONS:
            raise InputValidationError(f"orientation must be one of {ORIENTATIONS}")
        if not self.eps_background >= 1:
            raise InputValidationError("eps_background must be at least 1")


@dataclass(frozen=True)
class RateBreakdown:
    gamma_pl: float
    gamma_rad: float
    gamma_nr: float
    total: float
    beta: float
    n_eff: complex | None = None
    orders: int = 0
    quadrature_error: float = 0.0

    def __post_init__(self):
        for name in ("gamma_pl", "gamma_rad", "gamma_nr"):
            if getattr(self, name) < 0:
                raise InputValidationError(f"{name} must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise InputValidationError("beta must lie in [0, 1]")

    def as_dict(self):
        return {"gamma_pl": self.gamma_pl, "gamma_rad": self.gamma_rad,
                "gamma_nr": self.gamma_nr, "total": self.total, "beta": self.beta}


def _outgoing_q(h, k):
    """Transverse wavenumber sqrt(k² − h²) on the outgoing branch (Im q ≥ 0).

    Right of the light line the root is taken as i·sqrt(h² − k²) so that
    the branch is continuous around plasmon poles just off the real axis.
    """
    h = np.asarray(h, dtype=complex)
    a = h * h - k * k
    return np.where(a.real > 0, 1j * np.sqrt(a), np.sqrt(-a))


class CylinderScatterer:
    """Self-field integrand of a dipole outside a circular cylinder.

    Parameters are dimensionless: ``radius`` and ``r0`` are k0·R and
    k0·r0, ``eps_metal`` and ``eps_out`` the permittivities.  ``dipole``
    is a unit vector (p_r, p_φ, p_z) along one of the cylinder axes; the
    ±m and ±h pairing used below is only valid for such orientations.
    """

    def __init__(self, radius, eps_metal, eps_out, r0, dipole):
        self.R = float(radius)
        self.em = complex(eps_metal)
        self.e1 = float(eps_out)
        self.k1 = math.sqrt(self.e1)
        self.r0 = float(r0)
        self.dipole = tuple(float(c) for c in dipole)
        if sorted(map(abs, self.dipole)) != [0.0, 0.0, 1.0]:
            raise InputValidationError("dipole must be a unit vector along r, phi or z")
        # Γ/Γ0 = 1 + prefactor · Im(p̂·E_sc(r0))
        self.prefactor = 6 * math.pi * self.e1 / self.k1 ** 3

    def _columns(self, h, M):
        h = np.asarray(h, dtype=complex)
        q1 = _outgoing_q(h, self.k1)
        q2 = np.sqrt(self.em - h * h)
        z1, z0, z2 = q1 * self.R, q1 * self.r0, q2 * self.R
        s1, t1 = j_ratios(M, z1), h_ratios(M, z1)
        t0, s2 = h_ratios(M, z0), j_ratios(M, z2)
        LJ1 = log_derivatives(s1, z1)[: M + 1]
        LH1 = log_derivatives(t1, z1)[: M + 1]
        LH0 = log_derivatives(t0, z0)[: M + 1]
        LJ2 = log_derivatives(s2, z2)[: M + 1]
        growth = hankel_growth(t1, t0, z1, z0)[: M + 1]
        P = jh_products(s1, t1, z1)[: M + 1] * growth ** 2
        return q1, q2, LJ1, LH1, LH0, LJ2, P

    def tm0_denominator(self, h):
        """(iε₁/q₁)H₀'/H₀ − (iε_m/q₂)J₀'/J₀ at r = R: vanishes on the TM0 plasmon."""
        h = np.asarray(h, dtype=complex)
        q1 = _outgoing_q(h, self.k1)
        q2 = np.sqrt(self.em - h * h)
        z1, z2 = q1 * self.R, q2 * self.R
        LH1 = -sp.hankel1e(1, z1) / sp.hankel1e(0, z1)
        LJ2 = -sp.jve(1, z2) / sp.jve(0, z2)
        return 1j * self.e1 * LH1 / q1 - 1j * self.em * LJ2 / q2

    def orders(self, h, M):
        """p̂·E_sc spectral density for m = 0..M at axial wavenumbers ``h``.

        Row m already includes the factor 2 for the ±m pair (m ≥ 1); the
        full-line integral is twice the half-line integral of the sum.
        """
        h = np.asarray(h, dtype=complex)
        pr, pp, pz = self.dipole
        q1, q2, LJ1, LH1, LH0, LJ2, P = self._columns(h, M)
        m = np.arange(M + 1).reshape((-1,) + (1,) * h.ndim)
        e1, em, R, r0 = self.e1, self.em, self.R, self.r0
        # incident amplitudes on J_m(q1 r), with the J·H·(growth)² factor pulled out
        aE = (1j / (8 * math.pi * e1)) * (q1 ** 2 * pz - 1j * h * q1 * pr * LH0
                                         - (h * m / r0) * pp)
        aH = -(1 / (8 * math.pi)) * (q1 * LH0 * pp + (1j * m / r0) * pr)
        dc = -h * m / R * (1 / q1 ** 2 - 1 / q2 ** 2)
        uH = 1j * (e1 * LH1 / q1 - em * LJ2 / q2)
        uJ = 1j * (e1 * LJ1 / q1 - em * LJ2 / q2)
        vH = -1j * (LH1 / q1 - LJ2 / q2)
        vJ = 1j * (LJ1 / q1 - LJ2 / q2)
        b1 = -aE * dc + aH * vJ
        b2 = -aE * uJ - aH * dc
        det = dc * dc - vH * uH
        CE = (b1 * dc - vH * b2) / det
        CH = (dc * b2 - uH * b1) / det
        Ez = CE
        Er = (1j / q1 ** 2) * (h * q1 * CE * LH0 + (1j * m / r0) * CH)
        Ep = (1j / q1 ** 2) * (h * (1j * m / r0) * CE - q1 * CH * LH0)
        out = (pr * Er + pp * Ep + pz * Ez) * P
        out[1:] *= 2.0
        return out


@dataclass
class _Channels:
    pl: float
    rad: float
    nr: float
    per_order: np.ndarray
    error: float


def _pole_residue(scat, h_pole, n_nodes=128):
    """Residue of the m = 0 density at ``h_pole`` from a circular contour."""
    radius = 0.25 * (h_pole.real - scat.k1)
    radius = min(radius, 0.25 * h_pole.real)
    t = 2 * np.pi * np.arange(n_nodes) / n_nodes
    ring = radius * np.exp(1j * t)
    vals = scat.orders(h_pole + ring, 0)[0]
    return complex(np.mean(vals * ring))


def _channel_integrals(scat, M, h_pole, residue, distance, rtol, cutoff_scale=1.0):
    """Integrate the pole-subtracted density over both h ranges for m = 0..M."""
    k1 = scat.k1
    pref = 2 * scat.prefactor   # twice: the density is even in h

    def subtracted(h):
        dens = scat.orders(h, M)
        if residue is not None:
            dens[0] -= residue * (1 / (h - h_pole) - 1 / (h + h_pole))
        return pref * dens.imag

    def radiative(theta):
        h = k1 * np.cos(theta)
        return subtracted(h) * (k1 * np.sin(theta))

    h_max = cutoff_scale * max(CUTOFF_DISTANCE_FACTOR / distance, CUTOFF_K1_FACTOR * k1)
    u_max = math.acosh(h_max / k1)

    def evanescent(u):
        h = k1 * np.cosh(u)
        return subtracted(h) * (k1 * np.sinh(u))

    cfg = QuadratureConfig(rel_tol=rtol, abs_tol=rtol, max_subdivisions=4000)
    norm_e = lambda e: np.sum(e, axis=0)
    norm_v = lambda v: abs(np.sum(v)) + 1.0
    rad = gauss_kronrod(radiative, 0.0, 0.5 * math.pi, cfg,
                        error_norm=norm_e, value_norm=norm_v)
    breaks = []
    if h_pole is not None and h_pole.real < h_max:
        breaks = [math.acosh(h_pole.real / k1)]
    ev = gauss_kronrod(evanescent, 0.0, u_max, cfg, breakpoints=breaks,
                       error_norm=norm_e, value_norm=norm_v)
    # exponential extrapolation past the cutoff, image terms fall as exp(-2 h d')
    step = 0.5 / distance
    g_hi = np.sum(subtracted(np.array([h_max])))
    g_lo = np.sum(subtracted(np.array([h_max - step])))
    tail = 0.0
    if g_hi != 0 and g_lo / g_hi > 1:
        tail = g_hi * step / math.log(g_lo / g_hi)
    pl = pref * math.pi * residue.real if residue is not None else 0.0
    per_order = rad.value + ev.value
    per_order[0] += pl
    return _Channels(pl, 1.0 + float(np.sum(rad.value)), float(np.sum(ev.value) + tail),
                     per_order, rad.error + ev.error)


def _to_units(geometry, emitter):
    k0 = 2 * math.pi / emitter.vacuum_wavelength
    return k0, k0 * geometry.radius, k0 * (geometry.radius + emitter.distance_from_surface)


def _plasmon_pole(geometry, emitter):
    g = geometry
    if g.eps_dielectric != emitter.eps_background:
        raise InputValidationError("geometry.eps_dielectric and emitter.eps_background differ")
    try:
        mode = solve_fundamental_mode(g, emitter.vacuum_wavelength)
    except NoModeError:
        return None
    return mode


def total_rate_enhancement(geometry, emitter, rtol=1e-7, orders=None, cutoff_scale=1.0):
    """Channel-resolved decay-rate enhancement Γ/Γ0 for one emitter placement.

    Γ0 is the rate in the homogeneous background ε₁.  When the wire
    supports no guided plasmon the plasmon channel is zero and only the
    radiative and absorptive parts are computed.

    ``orders`` fixes the angular truncation |m| ≤ orders instead of the
    adaptive one; ``cutoff_scale`` stretches the axial-wavenumber cutoff.
    Both exist for convergence studies.

    Raises :class:`AccuracyError` when the angular-order sum has not
    converged by |m| = 60.
    """
    k0, R, r0 = _to_units(geometry, emitter)
    d = r0 - R
    scat = CylinderScatterer(R, geometry.eps_metal, geometry.eps_dielectric, r0,
                             _DIPOLE[emitter.orientation])
    mode = _plasmon_pole(geometry, emitter)
    h_pole = residue = None
    n_eff = None
    if mode is not None:
        n_eff = mode.n_eff
        h_pole = complex(mode.n_eff)
        residue = _pole_residue(scat, h_pole) if emitter.orientation != "azimuthal" else 0j
    if orders is not None and not 0 <= orders <= MAX_ORDER:
        raise InputValidationError(f"orders must lie in [0, {MAX_ORDER}]")
    M = M_START if orders is None else int(orders)
    while True:
        ch = _channel_integrals(scat, M, h_pole, residue, d, rtol, cutoff_scale)
        total = ch.pl + ch.rad + ch.nr
        last = abs(ch.per_order[-1])
        if orders is not None or last <= M_TOLERANCE * abs(total):
            break
        if M >= MAX_ORDER:
            raise AccuracyError(
                f"angular-order sum not converged at |m| = {MAX_ORDER} "
                f"(last order {last:.3g} of {total:.3g})", best_estimate=total)
        M = min(M + M_STEP, MAX_ORDER)
    raw = {"gamma_pl": ch.pl, "gamma_rad": ch.rad, "gamma_nr": ch.nr}
    pl, rad, nr = (_clamp(v, name, total, raw) for name, v in raw.items())
    total = pl + rad + nr
    return RateBreakdown(pl, rad, nr, float(total), pl / total if total > 0 else 0.0,
                         n_eff, M, ch.error)


def _clamp(value, name, total, raw):
    # the channel split can go slightly negative for thin lossy wires, where
    # the pole residue over-counts the real-axis plasmon peak; the total is
    # still well defined and is handed back as the best estimate
    if value >= 0:
        return float(value)
    if value >= CLAMP_FLOOR:
        warnings.warn(f"{name} = {value:.3g} clamped to zero", RuntimeWarning, stacklevel=3)
        return 0.0
    raise ChannelSplitError(f"{name} = {value:.3g} is negative beyond the numerical floor "
                            f"(total {total:.6g})", float(total), raw)


def gamma_plasmon(geometry, emitter):
    """Plasmon-channel rate Γ_pl/Γ0 (pole residue only)."""
    k0, R, r0 = _to_units(geometry, emitter)
    mode = _plasmon_pole(geometry, emitter)
    if mode is None:
        raise NoModeError("geometry supports no guided plasmon")
    if emitter.orientation == "azimuthal":
        # the TM0 mode has no E_phi
        return 0.0
    scat = CylinderScatterer(R, geometry.eps_metal, geometry.eps_dielectric, r0,
                             _DIPOLE[emitter.orientation])
    res = _pole_residue(scat, complex(mode.n_eff))
    return max(2 * scat.prefactor * math.pi * res.real, 0.0)


def scattering_pole(geometry, wavelength, guess, half_size=0.02):
    """Zero of the m = 0 TM scattering denominator near ``guess`` (as n_eff)."""
    k0 = 2 * math.pi / wavelength
    scat = CylinderScatterer(k0 * geometry.radius, geometry.eps_metal,
                             geometry.eps_dielectric, 2 * k0 * geometry.radius, (1, 0, 0))
    region = RootRegion(complex(guess), half_size, half_size)
    return find_complex_root(lambda n: complex(scat.tm0_denominator(n)), region, tol=1e-13)


# -- maps and tables -----------------------------------------------------------


@dataclass
class EnhancementMap:
    diameter_axis: np.ndarray
    distance_axis: np.ndarray
    total: np.ndarray
    metadata: dict = field(default_factory=dict)
    cell_errors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.diameter_axis = np.asarray(self.diameter_axis, float)
        self.distance_axis = np.asarray(self.distance_axis, float)
        self.total = np.asarray(self.total, float)
        if self.total.shape != (self.diameter_axis.size, self.distance_axis.size):
            raise InputValidationError("map matrix does not match its axes")


def _eps_for(drude, wavelength_nm):
    return drude_epsilon(wavelength_nm, drude or default_silver())


def enhancement_map(diameters_nm, distances_nm, wavelength_nm=700.0, eps1=3.0,
                    orientation="radial", drude=None, workers=1, rtol=1e-7):
    """Total enhancement on a (diameter × distance) grid, in nanometres.

    Cells are computed independently (optionally on ``workers`` threads)
    and written back by index, so the result does not depend on the
    scheduling.  A cell whose computation raises :class:`AccuracyError`
    holds the best estimate and is listed in ``cell_errors``.
    """
    dia = np.atleast_1d(np.asarray(diameters_nm, float))
    dist = np.atleast_1d(np.asarray(distances_nm, float))
    if dia.size == 0 or dist.size == 0:
        raise InputValidationError("map axes must be non-empty")
    lo, hi = MAP_DIAMETER_RANGE_NM
    if dia.min() < lo or dia.max() > hi:
        raise InputValidationError(f"diameters must lie in [{lo:g}, {hi:g}] nm")
    lo, hi = MAP_DISTANCE_RANGE_NM
    if dist.min() < lo or dist.max() > hi:
        raise InputValidationError(f"distances must lie in [{lo:g}, {hi:g}] nm")
    drude = drude or default_silver()
    eps_m = _eps_for(drude, wavelength_nm)
    lam = wavelength_nm / 1e9
    out = np.empty((dia.size, dist.size))
    errors = {}

    def cell(ij):
        i, j = ij
        geo = WireGeometry(dia[i] / 2e9, eps_m, eps1)
        em = EmitterConfig(dist[j] / 1e9, orientation, lam, eps1)
        try:
            return ij, total_rate_enhancement(geo, em, rtol).total, None
        except AccuracyError as exc:
            return ij, float(np.real(exc.best_estimate)), str(exc)

    cells = [(i, j) for i in range(dia.size) for j in range(dist.size)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, cells))
    else:
        results = [cell(c) for c in cells]
    for (i, j), value, err in results:
        out[i, j] = value
        if err is not None:
            errors[(i, j)] = err
    meta = {"wavelength_nm": wavelength_nm, "eps1": eps1, "orientation": orientation,
            "drude_eps_inf": drude.eps_inf, "drude_omega_p_rad_s": drude.omega_p,
            "drude_gamma_rad_s": drude.gamma, "eps_metal": eps_m}
    return EnhancementMap(dia, dist, out, meta, errors)


@dataclass(frozen=True)
class SystemRecord:
    wire_diameter: float
    diamond_height: float
    measured_enhancement: float | None = None
    measured_error: float | None = None
    predicted_min_enhancement: float | None = None

    def __post_init__(self):
        if not self.wire_diameter > 0 or not self.diamond_height > 0:
            raise InputValidationError("diameter and height must be positive")


def predict_table(records, wavelength_nm=700.0, eps1=3.0, drude=None):
    """Fill ``predicted_min_enhancement`` for each record.

    The emitter sits at the top of the crystal (d′ = diamond height) with
    its dipole along the plasmon's radial field.
    """
    eps_m = _eps_for(drude, wavelength_nm)
    out = []
    for rec in records:
        geo = WireGeometry(rec.wire_diameter / 2e9, eps_m, eps1)
        em = EmitterConfig(rec.diamond_height / 1e9, "radial", wavelength_nm / 1e9, eps1)
        total = total_rate_enhancement(geo, em).total
        out.append(SystemRecord(rec.wire_diameter, rec.diamond_height,
                                rec.measured_enhancement, rec.measured_error, total))
    return out


def band_averaged_enhancement(radius, emitter, drude=None, band_nm=(647.0, 785.0), nodes=7):
    """Uniform average of the total enhancement over a wavelength band."""
    drude = drude or default_silver()
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = band_nm
    lams = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
    acc = 0.0
    for lam, wt in zip(lams, w):
        geo = WireGeometry(radius, drude_epsilon(lam, drude), emitter.eps_background)
        em = EmitterConfig(emitter.distance_from_surface, emitter.orientation,
                           lam / 1e9, emitter.eps_background)
        acc += 0.5 * wt * total_rate_enhancement(geo, em).total
    return acc


# -- files ---------------------------------------------------------------------

MAP_CORNER = "diameter_nm/distance_nm"


def save_map(path, emap):
    """Write the map as CSV plus a ``<path>.meta`` key-value sidecar."""
    header = [MAP_CORNER] + [repr(float(d)) for d in emap.distance_axis]
    rows = [[repr(float(dia))] + [repr(float(v)) for v in row]
            for dia, row in zip(emap.diameter_axis, emap.total)]
    write_csv(path, header, rows)
    meta = {k: _meta_text(v) for k, v in emap.metadata.items()}
    meta["flagged_cells"] = ";".join(f"{i}:{j}" for i, j in sorted(emap.cell_errors))
    write_key_values(Path(str(path) + ".meta"), meta)


def _meta_text(v):
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def load_map(path):
    """Read a map written by :func:`save_map` (sidecar optional)."""
    path = Path(path)
    try:
        rows = list(csv.reader(path.open(encoding="utf-8", newline="")))
    except OSError as exc:
        raise FileFormatError(f"cannot open {path}: {exc.strerror}", path) from exc
    if not rows or not rows[0] or rows[0][0] != MAP_CORNER:
        raise FileFormatError(f"expected first cell {MAP_CORNER!r}", path, 1)
    try:
        dist = [float(c) for c in rows[0][1:]]
    except ValueError:
        raise FileFormatError("non-numeric distance in header", path, 1) from None
    dia, total = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(dist) + 1:
            raise FileFormatError(f"expected {len(dist) + 1} fields, got {len(row)}", path, line)
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise FileFormatError("non-numeric cell", path, line) from None
        dia.append(vals[0])
        total.append(vals[1:])
    meta = {}
    side = Path(str(path) + ".meta")
    if side.exists():
        meta = read_key_values(side)
    flagged = meta.pop("flagged_cells", "")
    errors = {}
    for item in filter(None, flagged.split(";")):
        i, j = item.split(":")
        errors[(int(i), int(j))] = "flagged"
    return EnhancementMap(dia, dist, np.array(total, float).reshape(len(dia), len(dist)),
                          meta, errors)


TABLE_HEADER = ("diameter_nm", "height_nm", "measured_ratio", "measured_error",
                "reference_prediction", "source")


def load_table_records(path):
    """Records and their reference predictions from a Table-style CSV."""
    cols = read_csv(path, TABLE_HEADER, (float, float, float, float, float, str))
    recs = [SystemRecord(d, h, m, e) for d, h, m, e in zip(*cols[:4])]
    return recs, list(cols[4])


def bundled_table_records():
    """The five measured wire/crystal systems shipped with the package."""
    ref = resources.files("nvwire.data") / "table_records.csv"
    with resources.as_file(ref) as p:
        return load_table_records(p)
