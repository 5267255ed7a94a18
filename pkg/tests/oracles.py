"""Independent reference computations used by the test-suite.

Nothing here calls into the package's numerical routines; each oracle
recomputes its quantity by a different route (extended precision,
integral representation, brute-force scan, direct linear solve or
energy-flux normalization).
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate, optimize, special

HC_EV_NM = 1239.8419843320026


def j0_series(x, terms=40, dps=40):
    """J0(x) from its Taylor series, summed in extended precision."""
    with mp.workdps(dps):
        x = mp.mpf(x)
        s = mp.mpf(0)
        for k in range(terms):
            s += (-1) ** k * (x / 2) ** (2 * k) / mp.factorial(k) ** 2
        return float(s)


def k0_integral(x):
    """K0(x) = ∫₀^∞ exp(−x cosh t) dt."""
    with mp.workdps(30):
        # the integrand is below exp(-1e4) beyond t = 10
        return float(mp.quad(lambda t: mp.exp(-x * mp.cosh(t)), [0, 2, 5, 10]))


def decaying_sqrt_mp(z):
    s = mp.sqrt(z)
    if mp.re(s) < 0 or (mp.re(s) == 0 and mp.im(s) < 0):
        s = -s
    return s


def dispersion_mp(n, radius, wavelength, eps_metal, eps_out, dps=40):
    """TM0 bound-mode function from its formula, with mpmath Bessel functions."""
    with mp.workdps(dps):
        n = mp.mpc(n)
        k0 = 2 * mp.pi / mp.mpf(wavelength)
        em, e1 = mp.mpc(eps_metal), mp.mpf(eps_out)
        km = k0 * decaying_sqrt_mp(n * n - em)
        k1 = k0 * decaying_sqrt_mp(n * n - e1)
        R = mp.mpf(radius)
        val = (em / km * mp.besseli(1, km * R) / mp.besseli(0, km * R)
               + e1 / k1 * mp.besselk(1, k1 * R) / mp.besselk(0, k1 * R))
        return complex(val)


def flat_interface_index(eps_metal, eps_out):
    return np.sqrt(eps_metal * eps_out / (eps_metal + eps_out))


def _cell_winding(f, z0, w, h, samples=64):
    """Winding number of f around the rectangle [z0, z0 + w + ih]."""
    t = np.linspace(0, 1, samples, endpoint=False)
    edge = np.concatenate([z0 + w * t, z0 + w + 1j * h * t,
                           z0 + w + 1j * h - w * t, z0 + 1j * h - 1j * h * t])
    vals = np.array([f(z) for z in edge])
    ph = np.unwrap(np.angle(np.append(vals, vals[0])))
    return int(round((ph[-1] - ph[0]) / (2 * math.pi)))


def grid_scan_root(f, re_range, im_range, tol=1e-10, grid=8):
    """Locate the single zero of ``f`` by nested winding-number grid scans.

    The box is cut into grid×grid cells; the cell with winding 1 is kept
    and subdivided again until it is smaller than ``tol``.  No Newton step
    or derivative is used.
    """
    x0, y0 = re_range[0], im_range[0]
    w, h = re_range[1] - re_range[0], im_range[1] - im_range[0]
    while max(w, h) > tol:
        cw, ch = w / grid, h / grid
        hit = None
        for i in range(grid):
            for j in range(grid):
                z = complex(x0 + i * cw, y0 + j * ch)
                if _cell_winding(f, z, cw, ch) == 1:
                    hit = z
                    break
            if hit is not None:
                break
        if hit is None:
            raise RuntimeError("grid scan lost the root")
        x0, y0, w, h = hit.real, hit.imag, cw, ch
    return complex(x0 + w / 2, y0 + h / 2)


# -- direct 4x4 cylinder scattering ------------------------------------------------

def _outgoing_q(h, k):
    a = h * h - k * k
    return 1j * np.sqrt(a) if a.real > 0 else np.sqrt(-a)


def scattered_density_4x4(m, h, radius, r0, eps_metal, eps_out, dipole):
    """p̂·E_sc spectral density of order m (single sign) by a 4x4 solve.

    Units k0 = ω = 1.  Unscaled scipy Bessel functions are used, so keep
    |m| moderate.
    """
    e1, em = eps_out, complex(eps_metal)
    k1 = math.sqrt(e1)
    q1 = _outgoing_q(complex(h), k1)
    q2 = np.sqrt(em - h * h)
    pr, pp, pz = dipole

    def J(z):
        return special.jv(m, z), special.jvp(m, z)

    def H(z):
        return special.hankel1(m, z), special.h1vp(m, z)

    j1, dj1 = J(q1 * radius)
    hh1, dh1 = H(q1 * radius)
    j2, dj2 = J(q2 * radius)
    h0, dh0 = H(q1 * r0)
    # incident field of the dipole (r < r0): coefficients of J_m(q1 r)
    LH0 = dh0 / h0
    aE = (1 / e1) * (1j / (8 * math.pi)) * (q1 ** 2 * pz - 1j * h * q1 * pr * LH0
                                           - (h * m / r0) * pp) * h0
    aH = -(1 / (8 * math.pi)) * (q1 * LH0 * pp + (1j * m / r0) * pr) * h0

    def cols(q, eps, f, df):
        c = -h * m / (q * q * radius)
        E = np.array([f, 0, c * f, 1j * eps * df / q])
        Hc = np.array([0, f, -1j * df / q, c * f])
        return E, Hc

    iE, iH = cols(q1, e1, j1, dj1)
    sE, sH = cols(q1, e1, hh1, dh1)
    mE, mH = cols(q2, em, j2, dj2)
    A = np.stack([sE, sH, -mE, -mH], axis=1)
    rhs = -(aE * iE + aH * iH)
    CE, CH = np.linalg.solve(A, rhs)[:2]
    Ez = CE * h0
    Er = (1j / q1 ** 2) * (h * q1 * CE * dh0 + (1j * m / r0) * CH * h0)
    Ep = (1j / q1 ** 2) * (h * (1j * m / r0) * CE * h0 - q1 * CH * dh0)
    return pr * Er + pp * Ep + pz * Ez


# -- lossless waveguide Purcell factor ------------------------------------------------

def purcell_lossless(radius_nm, dprime_nm, wavelength_nm, eps_inf, omega_p_ev, eps_out=3.0):
    """Γ_pl/Γ0 of a radial dipole from the energy-normalized guided mode.

    Γ_pl/Γ0 = 6π n1 |E_r(r0)|² / (k1² v_g W), W = ∫(∂(ωε)/∂ω |E|² + |H|²) dA,
    in units ε0 = μ0 = c = 1.  The mode is found with a real bracketing
    solver on the lossless dispersion relation.
    """
    R = radius_nm
    r0 = R + dprime_nm
    e1 = eps_out

    def eps_m(k0):
        e = k0 * HC_EV_NM / (2 * math.pi)
        return eps_inf - omega_p_ev ** 2 / e ** 2

    def index(k0):
        em = eps_m(k0)

        def D(n):
            km = k0 * math.sqrt(n * n - em)
            kk = k0 * math.sqrt(n * n - e1)
            return (em / km * special.ive(1, km * R) / special.ive(0, km * R)
                    + e1 / kk * special.kve(1, kk * R) / special.kve(0, kk * R))
        return optimize.brentq(D, math.sqrt(e1) * 1.0001, 20.0, xtol=1e-15, rtol=1e-15)

    k0 = 2 * math.pi / wavelength_nm
    n = index(k0)
    dk = k0 * 1e-5
    vg = 2 * dk / (index(k0 + dk) * (k0 + dk) - index(k0 - dk) * (k0 - dk))
    em = eps_m(k0)
    h = n * k0
    km = k0 * math.sqrt(n * n - em)
    kk = k0 * math.sqrt(n * n - e1)
    A = 1 / special.iv(0, km * R)
    B = 1 / special.kv(0, kk * R)
    w = k0

    def inner(r):
        i0, i1 = special.iv(0, km * r) * A, special.iv(1, km * r) * A
        return i0, h / km * i1, w * em / km * i1

    def outer(r):
        k0v, k1v = special.kv(0, kk * r) * B, special.kv(1, kk * r) * B
        return k0v, h / kk * k1v, w * e1 / kk * k1v

    dwe = eps_inf + omega_p_ev ** 2 / (k0 * HC_EV_NM / (2 * math.pi)) ** 2
    w_in = integrate.quad(lambda r: 2 * math.pi * r * (dwe * (inner(r)[0] ** 2 + inner(r)[1] ** 2)
                                                      + inner(r)[2] ** 2),
                          0, R, epsabs=0, epsrel=1e-12)[0]
    w_out = integrate.quad(lambda r: 2 * math.pi * r * (e1 * (outer(r)[0] ** 2 + outer(r)[1] ** 2)
                                                       + outer(r)[2] ** 2),
                           R, np.inf, epsabs=0, epsrel=1e-12)[0]
    k1 = math.sqrt(e1) * k0
    er0 = outer(r0)[1]
    return 6 * math.pi * math.sqrt(e1) * er0 ** 2 / (k1 ** 2 * vg * (w_in + w_out))


def analytic_cw_count_rate(kp, kr, kisc, km, eta):
    """Detected signal rate per detector of a CW three-level emitter."""
    shelf = kisc / km if kisc > 0 else 0.0
    return 0.5 * eta * kr / ((kr + kisc) / kp + 1 + shelf)


def drude_fit_independent(wavelength_nm, eps, start=(4.0, 9.0, 0.02)):
    """Relative-error Drude fit by direct minimization (no Jacobian, no LM)."""
    lam = np.asarray(wavelength_nm, float)
    eps = np.asarray(eps, complex)

    def cost(p):
        e = HC_EV_NM / lam
        m = p[0] - p[1] ** 2 / (e * e + 1j * p[2] * e)
        return np.sum(((m.real - eps.real) / eps.real) ** 2
                      + ((m.imag - eps.imag) / eps.imag) ** 2)

    x = optimize.minimize(cost, start, method="Nelder-Mead",
                          options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 40000}).x
    x = optimize.minimize(cost, x, method="BFGS", options={"gtol": 1e-13}).x
    return tuple(float(v) for v in x)
