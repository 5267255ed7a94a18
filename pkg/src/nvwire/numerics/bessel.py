"""Cylinder functions of integer order and complex argument.

Values come from the AMOS routines wrapped by :mod:`scipy.special`; this
module adds the order/range checks, derivative bookkeeping and the
overflow-free order recurrences used by the cylinder scattering code.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import special as sp

from ..errors import InputValidationError, RangeError

MAX_ORDER = 60


class CylinderFunctions(NamedTuple):
    J: np.ndarray
    Y: np.ndarray
    H1: np.ndarray
    dJ: np.ndarray
    dY: np.ndarray
    dH1: np.ndarray


class ModifiedCylinderFunctions(NamedTuple):
    I: np.ndarray
    K: np.ndarray
    dI: np.ndarray
    dK: np.ndarray


def _check_order(order):
    m = np.asarray(order)
    if not np.issubdtype(m.dtype, np.integer):
        if not np.all(np.equal(np.mod(m, 1), 0)):
            raise InputValidationError("Bessel order must be an integer")
        m = m.astype(int)
    if np.any(np.abs(m) > MAX_ORDER):
        raise InputValidationError(f"|order| must not exceed {MAX_ORDER}")
    return m


def _check_finite(values, z, singular_at_origin, name):
    bad = ~np.isfinite(values)
    if singular_at_origin:
        bad &= z != 0
    if np.any(bad):
        where = np.asarray(z)[bad].ravel()[0] if np.ndim(z) else z
        raise RangeError(f"{name} overflowed or underflowed at z = {where!r}")


# scipy warns at z = 0; those entries are patched and any other non-finite value raises
@np.errstate(all="ignore")
def bessel_cyl(order, argument, scaled=False):
    """Return J_m, Y_m, H^(1)_m and their z-derivatives at complex ``argument``.

    With ``scaled=True`` J, Y and their derivatives are multiplied by
    ``exp(-|Im z|)`` and H^(1) (with its derivative) by ``exp(-i z)``,
    which keeps them finite far off the real axis.

    At ``z = 0`` the singular members Y and H^(1) are returned as complex
    infinities instead of raising; anywhere else a non-finite value
    raises :class:`RangeError`.
    """
    m = _check_order(order)
    z = np.asarray(argument, dtype=complex)
    if scaled:
        J, Jm1 = sp.jve(m, z), sp.jve(m - 1, z)
        Y, Ym1 = sp.yve(m, z), sp.yve(m - 1, z)
        H, Hm1 = sp.hankel1e(m, z), sp.hankel1e(m - 1, z)
        dJ = Jm1 - m / z * J
        dY = Ym1 - m / z * Y
        dH = Hm1 - m / z * H
        # derivatives carry the same scale factor as their function
        dJ = np.where(z == 0, 0.5 * (sp.jv(m - 1, z) - sp.jv(m + 1, z)), dJ)
    else:
        J, dJ = sp.jv(m, z), sp.jvp(m, z)
        Y, dY = sp.yv(m, z), sp.yvp(m, z)
        H, dH = sp.hankel1(m, z), sp.h1vp(m, z)
    at_origin = z == 0
    if np.any(at_origin):
        inf = complex(-np.inf, 0.0)
        Y = np.where(at_origin, inf, Y)
        dY = np.where(at_origin, complex(np.inf, 0.0), dY)
        H = np.where(at_origin, complex(np.nan, -np.inf), H)
        dH = np.where(at_origin, complex(np.nan, np.inf), dH)
    for name, val, singular in (("J", J, False), ("dJ", dJ, False), ("Y", Y, True),
                                ("dY", dY, True), ("H1", H, True), ("dH1", dH, True)):
        _check_finite(val, z, singular, name)
    return CylinderFunctions(*(np.asarray(v)[()] for v in (J, Y, H, dJ, dY, dH)))


@np.errstate(all="ignore")
def bessel_mod(order, argument, scaled=False):
    """Return I_m, K_m and their derivatives at complex ``argument``.

    ``scaled=True`` gives ``I*exp(-|Re z|)`` and ``K*exp(z)``.  K_m(0) is
    returned as ``+inf`` (the logarithmic / power-law divergence at the
    origin) rather than raising.
    """
    m = _check_order(order)
    z = np.asarray(argument, dtype=complex)
    if scaled:
        I, Im1 = sp.ive(m, z), sp.ive(m - 1, z)
        K, Km1 = sp.kve(m, z), sp.kve(m - 1, z)
        dI = Im1 - m / z * I
        dK = -Km1 - m / z * K
        dI = np.where(z == 0, 0.5 * (sp.iv(m - 1, z) + sp.iv(m + 1, z)), dI)
    else:
        I, dI = sp.iv(m, z), sp.ivp(m, z)
        K, dK = sp.kv(m, z), sp.kvp(m, z)
    at_origin = z == 0
    if np.any(at_origin):
        K = np.where(at_origin, complex(np.inf, 0.0), K)
        dK = np.where(at_origin, complex(-np.inf, 0.0), dK)
    for name, val, singular in (("I", I, False), ("dI", dI, False),
                                ("K", K, True), ("dK", dK, True)):
        _check_finite(val, z, singular, name)
    return ModifiedCylinderFunctions(*(np.asarray(v)[()] for v in (I, K, dI, dK)))


# -- order recurrences -------------------------------------------------------
#
# The scattering code needs, for every order 0..M, log-derivatives of J_m and
# H_m, the product J_m(z) H_m(z) and the ratio H_m(z0) / H_m(z1).  Evaluated
# directly these overflow for large m and small |z|; as ratios they do not.


def _j_ratio_top(m, z):
    """J_{m-1}(z) / J_m(z) from the continued fraction (modified Lentz)."""
    tiny = 1e-300
    f = np.full(z.shape, tiny, dtype=complex)
    C = f.copy()
    D = np.zeros_like(f)
    k = m
    for _ in range(5000):
        b = 2.0 * k / z
        a = 1.0 if k == m else -1.0
        D = b + a * D
        D = np.where(np.abs(D) < tiny, tiny, D)
        C = b + a / C
        C = np.where(np.abs(C) < tiny, tiny, C)
        D = 1.0 / D
        delta = C * D
        f = f * delta
        k += 1
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    # f = 1/(b_m - 1/(b_{m+1} - ...)) = J_m / J_{m-1}
    return 1.0 / f


def j_ratios(m_max, z):
    """``s[m] = J_{m-1}(z) / J_m(z)`` for m = 1..m_max (index 0 unused).

    Downward recurrence seeded at the top order, from scaled values when
    they are representable and from the continued fraction otherwise.
    """
    z = np.asarray(z, dtype=complex)
    m_max = max(m_max, 1)
    top = m_max + 1
    with np.errstate(all="ignore"):
        a, b = sp.jve(top - 1, z), sp.jve(top, z)
        seed = a / b
    ok = np.isfinite(seed) & (np.abs(b) > 1e-250)
    if not np.all(ok):
        seed = np.where(ok, seed, _j_ratio_top(top, np.where(ok, 1.0, z)))
    s = np.empty((m_max + 2,) + z.shape, dtype=complex)
    s[top] = seed
    for m in range(m_max, 0, -1):
        s[m] = 2.0 * m / z - 1.0 / s[m + 1]
    return s[: m_max + 1]


def h_ratios(m_max, z):
    """``t[m] = H_{m-1}(z) / H_m(z)`` for m = 1..m_max by upward recurrence."""
    z = np.asarray(z, dtype=complex)
    m_max = max(m_max, 1)
    t = np.empty((m_max + 1,) + z.shape, dtype=complex)
    t[0] = np.nan
    t[1] = sp.hankel1e(0, z) / sp.hankel1e(1, z)
    for m in range(1, m_max):
        t[m + 1] = 1.0 / (2.0 * m / z - t[m])
    return t


def log_derivatives(ratios, z):
    """Z_m'(z)/Z_m(z) for m = 0..M from ``ratios[m] = Z_{m-1}/Z_m``."""
    z = np.asarray(z, dtype=complex)
    M = ratios.shape[0] - 1
    out = np.empty_like(ratios)
    out[0] = -1.0 / ratios[1]
    m = np.arange(1, M + 1).reshape((-1,) + (1,) * z.ndim)
    out[1:] = ratios[1:] - m / z
    return out


def jh_products(s, t, z):
    """J_m(z) H^(1)_m(z) for m = 0..M, with ``s``, ``t`` from the ratio helpers."""
    z = np.asarray(z, dtype=complex)
    p = np.empty_like(s)
    # exp(|Im z|) * exp(i z) restores both scale factors (bounded for Im z >= 0)
    p[0] = sp.jve(0, z) * sp.hankel1e(0, z) * np.exp(np.abs(z.imag) + 1j * z)
    for m in range(1, s.shape[0]):
        p[m] = p[m - 1] / (s[m] * t[m])
    return p


def hankel_growth(t_inner, t_outer, z_inner, z_outer):
    """H_m(z_outer) / H_m(z_inner) for m = 0..M from the upward ratio tables."""
    r = np.empty_like(t_inner)
    r[0] = (sp.hankel1e(0, z_outer) / sp.hankel1e(0, z_inner)
            * np.exp(1j * (z_outer - z_inner)))
    for m in range(1, t_inner.shape[0]):
        r[m] = r[m - 1] * t_inner[m] / t_outer[m]
    return r
