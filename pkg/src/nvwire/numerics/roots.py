"""Certified complex root finding: argument-principle count, then Newton."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputValidationError, MultipleRootsError, NoRootError


@dataclass(frozen=True)
class RootRegion:
    """Axis-aligned rectangle ``center ± half_width ± i·half_height``."""

    center: complex
    half_width: float
    half_height: float

    def __post_init__(self):
        if not self.half_width > 0 or not self.half_height > 0:
            raise InputValidationError("RootRegion half-sizes must be positive")
        object.__setattr__(self, "center", complex(self.center))

    @classmethod
    def from_bounds(cls, re_min, re_max, im_min, im_max):
        return cls(complex(0.5 * (re_min + re_max), 0.5 * (im_min + im_max)),
                   0.5 * (re_max - re_min), 0.5 * (im_max - im_min))

    @property
    def corners(self):
        c, w, h = self.center, self.half_width, self.half_height
        return (c + complex(-w, -h), c + complex(w, -h),
                c + complex(w, h), c + complex(-w, h))

    def contains(self, z):
        d = complex(z) - self.center
        return abs(d.real) <= self.half_width and abs(d.imag) <= self.half_height

    def quadrants(self):
        w, h = 0.5 * self.half_width, 0.5 * self.half_height
        return [RootRegion(self.center + complex(sx * w, sy * h), w, h)
                for sx in (-1, 1) for sy in (-1, 1)]


def _edge_phase(f, a, b, fa, fb, depth=0):
    """Continuous change of arg f along the segment a→b, refined until
    neighbouring samples differ by less than a quarter turn."""
    n = 16
    t = np.linspace(0.0, 1.0, n + 1)
    z = a + (b - a) * t
    vals = np.empty(n + 1, dtype=complex)
    vals[0], vals[-1] = fa, fb
    vals[1:-1] = [f(zz) for zz in z[1:-1]]
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        raise NoRootError("function vanishes or is singular on the region boundary")
    steps = np.angle(vals[1:] / vals[:-1])
    total = 0.0
    samples = []
    for k in range(n):
        if abs(steps[k]) > np.pi / 4 and depth < 12:
            dphi, sub = _edge_phase(f, z[k], z[k + 1], vals[k], vals[k + 1], depth + 1)
            total += dphi
            samples.extend(sub[:-1])
        else:
            total += steps[k]
            samples.append((z[k], vals[k]))
    samples.append((z[-1], vals[-1]))
    return total, samples


def boundary_winding(f, region):
    """Return (winding number, boundary samples) of ``f`` around ``region``."""
    corners = region.corners
    fvals = [complex(f(c)) for c in corners]
    total = 0.0
    samples = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        dphi, sub = _edge_phase(f, a, b, fvals[k], fvals[(k + 1) % 4])
        total += dphi
        samples.extend(sub[:-1])
    return int(round(total / (2.0 * np.pi))), samples


def winding_number(f, region):
    """Number of zeros minus poles of ``f`` inside ``region``."""
    return boundary_winding(f, region)[0]


def _boundary_scale(samples):
    return max(abs(v) for _, v in samples)


def _contour_centroid(samples):
    """(1/2πi) ∮ z d(log f) from boundary samples: the root when there is one."""
    z = np.array([s[0] for s in samples] + [samples[0][0]])
    v = np.array([s[1] for s in samples] + [samples[0][1]])
    dlog = np.log(np.abs(v[1:] / v[:-1])) + 1j * np.angle(v[1:] / v[:-1])
    zm = 0.5 * (z[1:] + z[:-1])
    return complex(np.sum(zm * dlog) / (2j * np.pi))


def _newton(f, z0, region, tol, scale, max_iter=60):
    z = complex(z0)
    fz = complex(f(z))
    span = max(region.half_width, region.half_height)
    for _ in range(max_iter):
        if abs(fz) / scale < tol * 1e-3:
            return z, fz
        step = 1e-7 * max(abs(z), span)
        df = (complex(f(z + step)) - complex(f(z - step))) / (2 * step)
        if df == 0 or not np.isfinite(df):
            return None, None
        dz = -fz / df
        z_new = z + dz
        if not region.contains(z_new):
            return None, None
        f_new = complex(f(z_new))
        if abs(dz) <= 4e-16 * max(abs(z_new), 1e-300):
            return z_new, f_new
        z, fz = z_new, f_new
    return z, fz


def find_complex_root(f, region, tol=1e-12, _scale=None, _depth=0):
    """Locate the single zero of analytic ``f`` inside ``region``.

    The zero count is certified with the argument principle first; with
    exactly one zero a Newton iteration (central-difference derivative)
    starts from the contour centroid.  If Newton strays outside the
    region the rectangle is quartered and the search recurses into the
    quadrant holding the zero.

    The returned ``z`` satisfies ``|f(z)| / scale < tol`` where ``scale``
    is the largest ``|f|`` seen on the original boundary.

    Raises :class:`NoRootError` for winding number 0 and
    :class:`MultipleRootsError` for more than one zero.
    """
    if not tol > 0:
        raise InputValidationError("tol must be positive")
    count, samples = boundary_winding(f, region)
    if count <= 0:
        raise NoRootError(f"no root inside region centred at {region.center:.6g} "
                          f"(winding number {count})")
    if count > 1:
        raise MultipleRootsError(f"{count} roots inside region centred at "
                                 f"{region.center:.6g}; shrink the region", count)
    scale = _scale if _scale is not None else _boundary_scale(samples)
    guess = _contour_centroid(samples)
    if not region.contains(guess):
        guess = region.center
    z, fz = _newton(f, guess, region, tol, scale)
    if z is not None and abs(fz) / scale < tol:
        return z
    if _depth > 40:
        raise NoRootError("root refinement failed to converge")
    for quad in region.quadrants():
        try:
            return find_complex_root(f, quad, tol, scale, _depth + 1)
        except NoRootError:
            continue
        except MultipleRootsError:
            continue
    # zero sits on an internal edge: retry around the best point
    if z is not None:
        shifted = RootRegion(z, region.half_width / 2, region.half_height / 2)
        return find_complex_root(f, shifted, tol, scale, _depth + 1)
    raise NoRootError("root refinement failed to converge")
