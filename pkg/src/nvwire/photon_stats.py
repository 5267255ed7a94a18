"""Three-level emitter photon streams, start-stop histograms and their fits.

Times inside streams and histograms are integer picoseconds; fit results
are reported in nanoseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .errors import (ConvergenceError, EmptyStreamError, FileFormatError,
                     InputValidationError, InsufficientDataError)
from .io import read_csv, read_key_values, write_key_values

PS_PER_NS = 1000
PS_PER_S = 10 ** 12

LIFETIME_BIN_PS = 200
G2_BIN_PS = 1000
NORMALIZATION_WINDOW_NS = (300.0, 500.0)
FIT_START_AFTER_PEAK_NS = 1.0
FIT_END_PERIOD_FRACTION = 0.8
# bulk-diamond lifetime of the NV centre, for reference only
TAU_BULK_NS = 12.0

_CHUNK = 1 << 20


# -- model ---------------------------------------------------------------------


@dataclass(frozen=True)
class ThreeLevelModel:
    """Ground, excited and metastable (shelving) levels; rates in 1/s.

    ``background_rate`` is the dark/stray count rate of *each* detector.
    """

    pump_rate: float
    radiative_rate: float
    isc_rate: float = 0.0
    metastable_rate: float = 0.0
    detection_efficiency: float = 1.0
    background_rate: float = 0.0

    def __post_init__(self):
        for name in ("pump_rate", "isc_rate", "metastable_rate", "background_rate"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InputValidationError(f"{name} must be a finite non-negative rate")
        if not (self.radiative_rate > 0 and math.isfinite(self.radiative_rate)):
            raise InputValidationError("radiative_rate must be positive")
        if self.isc_rate > 0 and self.metastable_rate == 0:
            raise InputValidationError("metastable_rate must be positive when isc_rate > 0")
        if not 0.0 <= self.detection_efficiency <= 1.0:
            raise InputValidationError("detection_efficiency must lie in [0, 1]")

    @property
    def lifetime(self):
        """Excited-state lifetime 1/(k_r + k_isc) in seconds."""
        return 1.0 / (self.radiative_rate + self.isc_rate)

    def excited_population(self):
        """Steady-state excited population under CW pumping."""
        kp, kr, ki, km = (self.pump_rate, self.radiative_rate, self.isc_rate,
                          self.metastable_rate)
        if kp == 0:
            return 0.0
        shelf = ki / km if ki > 0 else 0.0
        return 1.0 / ((kr + ki) / kp + 1.0 + shelf)

    def emission_rate(self):
        """Steady-state photon emission rate (1/s) under CW pumping."""
        return self.radiative_rate * self.excited_population()

    def detected_rate(self):
        """Expected signal count rate per detector (1/s), background excluded."""
        return 0.5 * self.detection_efficiency * self.emission_rate()


@dataclass(frozen=True)
class ContinuousWave:
    pass


@dataclass(frozen=True)
class Pulsed:
    """Pulse train; ``pump_rate`` acts during the pulse only."""

    rep_rate: float = 5.05e6
    pulse_width: float = 4.6e-12

    def __post_init__(self):
        if not self.rep_rate > 0:
            raise InputValidationError("rep_rate must be positive")
        if not self.pulse_width > 0 or self.pulse_width * self.rep_rate >= 1:
            raise InputValidationError("pulse_width must be positive and below the period")

    @property
    def period_ps(self):
        return PS_PER_S / self.rep_rate


# -- streams -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimeTagStream:
    """Detector events sorted by time; channels are 1 and 2."""

    channel: np.ndarray
    time_ps: np.ndarray
    duration_ps: int
    seed: int | None = None
    rep_rate: float | None = None

    def __post_init__(self):
        ch = np.ascontiguousarray(self.channel, dtype=np.int8)
        t = np.ascontiguousarray(self.time_ps, dtype=np.int64)
        if ch.shape != t.shape or ch.ndim != 1:
            raise InputValidationError("channel and time arrays must be matching 1-D arrays")
        if ch.size and not np.all((ch == 1) | (ch == 2)):
            raise InputValidationError("channels must be 1 or 2")
        if t.size and (np.any(np.diff(t) < 0) or t[0] < 0):
            raise InputValidationError("times must be non-negative and non-decreasing")
        if not self.duration_ps > 0 or (t.size and t[-1] >= self.duration_ps):
            raise InputValidationError("all times must lie below the stream duration")
        ch.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "channel", ch)
        object.__setattr__(self, "time_ps", t)
        object.__setattr__(self, "duration_ps", int(self.duration_ps))

    def __len__(self):
        return self.time_ps.size

    @property
    def events(self):
        return list(zip(self.channel.tolist(), self.time_ps.tolist()))

    def counts(self):
        return int(np.sum(self.channel == 1)), int(np.sum(self.channel == 2))

    def select(self, channel):
        return self.time_ps[self.channel == channel]

    def to_csv_bytes(self):
        lines = ["channel,time_ps"]
        lines += [f"{c},{t}" for c, t in zip(self.channel.tolist(), self.time_ps.tolist())]
        return ("\n".join(lines) + "\n").encode("ascii")


def save_stream(path, stream):
    path = Path(path)
    path.write_bytes(stream.to_csv_bytes())
    meta = {"duration_ps": stream.duration_ps}
    if stream.seed is not None:
        meta["seed"] = stream.seed
    if stream.rep_rate is not None:
        meta["rep_rate_hz"] = repr(float(stream.rep_rate))
    write_key_values(Path(str(path) + ".meta"), meta)


def load_stream(path):
    """Read ``channel,time_ps`` CSV (plus an optional ``.meta`` sidecar)."""
    path = Path(path)
    ch, t = read_csv(path, ("channel", "time_ps"), (int, int))
    ch = np.array(ch, dtype=np.int64)
    t = np.array(t, dtype=np.int64)
    bad = np.flatnonzero((ch != 1) & (ch != 2))
    if bad.size:
        raise FileFormatError(f"channel must be 1 or 2, got {ch[bad[0]]}", path, bad[0] + 2)
    back = np.flatnonzero(np.diff(t) < 0)
    if back.size:
        raise FileFormatError("time goes backwards", path, back[0] + 3)
    if t.size and t[0] < 0:
        raise FileFormatError("negative time", path, 2)
    meta = {}
    side = Path(str(path) + ".meta")
    if side.exists():
        meta = read_key_values(side)
    duration = int(meta.get("duration_ps", int(t[-1]) + 1 if t.size else 1))
    seed = int(meta["seed"]) if "seed" in meta else None
    rep = float(meta["rep_rate_hz"]) if "rep_rate_hz" in meta else None
    try:
        return TimeTagStream(ch, t, duration, seed, rep)
    except InputValidationError as exc:
        raise FileFormatError(str(exc), path) from exc


def _cw_emissions(model, duration_s, rng):
    """Radiative emission times (s) of a CW-pumped emitter via renewal cycles."""
    kp, kr, ki, km = (model.pump_rate, model.radiative_rate, model.isc_rate,
                      model.metastable_rate)
    if kp == 0:
        return np.empty(0)
    out = []
    clock = 0.0
    k_out = kr + ki
    while clock < duration_s:
        wait = rng.exponential(1.0 / kp, _CHUNK)
        decay = rng.exponential(1.0 / k_out, _CHUNK)
        shelved = rng.random(_CHUNK) < ki / k_out
        dark = np.where(shelved, rng.exponential(1.0 / km, _CHUNK) if ki > 0 else 0.0, 0.0)
        cycle = wait + decay + dark
        ends = clock + np.cumsum(cycle)
        starts = ends - cycle
        emit = starts + wait + decay
        keep = ~shelved & (emit < duration_s)
        out.append(emit[keep])
        clock = ends[-1]
    return np.concatenate(out)


def _pulsed_emissions(model, mode, duration_s, rng):
    """Emission times (s) under a pulse train; the emitter ignores pulses while busy."""
    kr, ki, km = model.radiative_rate, model.isc_rate, model.metastable_rate
    p_exc = -math.expm1(-model.pump_rate * mode.pulse_width)
    if p_exc == 0:
        return np.empty(0)
    period = 1.0 / mode.rep_rate
    n_pulses = int(math.ceil(duration_s * mode.rep_rate))
    k_out = kr + ki
    out = []
    free_pulse = 0          # first pulse index at which the emitter is back in ground
    while free_pulse < n_pulses:
        skip = rng.geometric(p_exc, _CHUNK) - 1
        decay = rng.exponential(1.0 / k_out, _CHUNK)
        shelved = rng.random(_CHUNK) < ki / k_out
        dark = rng.exponential(1.0 / km, _CHUNK) if ki > 0 else np.zeros(_CHUNK)
        busy = decay + np.where(shelved, dark, 0.0)
        # pulses spanned while busy; the next usable pulse is the first one after
        # the emitter returns to ground
        busy_pulses = np.floor(busy / period).astype(np.int64) + 1
        # excitation pulse of cycle i: previous free pulse plus the failed pulses
        steps = skip + busy_pulses
        idx = free_pulse + skip + np.concatenate([[0], np.cumsum(steps)[:-1]])
        emit = idx * period + decay
        keep = (~shelved) & (idx < n_pulses) & (emit < duration_s)
        out.append(emit[keep])
        free_pulse = int(idx[-1] + busy_pulses[-1])
    return np.concatenate(out)


def simulate_stream(model, mode, duration, seed):
    """Kinetic Monte-Carlo photon stream of a three-level emitter.

    ``duration`` is in seconds; ``mode`` is :class:`ContinuousWave` or
    :class:`Pulsed`.  Each emitted photon goes to channel 1 or 2 with equal
    probability and is detected with ``model.detection_efficiency``;
    independent Poisson background is added to each channel.  The result
    depends only on the arguments.
    """
    if not duration > 0:
        raise InputValidationError("duration must be positive")
    if seed is None or int(seed) != seed or seed < 0:
        raise InputValidationError("seed must be a non-negative integer")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    if isinstance(mode, Pulsed):
        emit = _pulsed_emissions(model, mode, duration, rng)
        rep = mode.rep_rate
    elif isinstance(mode, ContinuousWave):
        emit = _cw_emissions(model, duration, rng)
        rep = None
    else:
        raise InputValidationError("mode must be ContinuousWave() or Pulsed(...)")
    detected = emit[rng.random(emit.size) < model.detection_efficiency]
    chan = np.where(rng.random(detected.size) < 0.5, 1, 2)
    duration_ps = int(round(duration * PS_PER_S))
    times = [np.floor(detected * PS_PER_S).astype(np.int64)]
    chans = [chan]
    for c in (1, 2):
        n = rng.poisson(model.background_rate * duration)
        times.append(rng.integers(0, duration_ps, n, dtype=np.int64))
        chans.append(np.full(n, c))
    t = np.concatenate(times)
    ch = np.concatenate(chans)
    order = np.lexsort((ch, t))
    t, ch = t[order], ch[order]
    keep = t < duration_ps
    return TimeTagStream(ch[keep], t[keep], duration_ps, int(seed), rep)


# -- histograms ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Histogram:
    """Counts in bins of equal width starting at ``bin_start_ps``."""

    bin_start_ps: np.ndarray
    counts: np.ndarray
    bin_width_ps: float
    period_ps: float | None = None

    def __post_init__(self):
        b = np.asarray(self.bin_start_ps, float)
        c = np.asarray(self.counts, float)
        if b.ndim != 1 or b.shape != c.shape or b.size == 0:
            raise InputValidationError("bin starts and counts must be matching non-empty 1-D arrays")
        if not self.bin_width_ps > 0:
            raise InputValidationError("bin width must be positive")
        if np.any(c < 0):
            raise InputValidationError("counts must be non-negative")
        object.__setattr__(self, "bin_start_ps", b)
        object.__setattr__(self, "counts", c)

    @property
    def centers_ns(self):
        return (self.bin_start_ps + 0.5 * self.bin_width_ps) / PS_PER_NS

    @property
    def total(self):
        return float(self.counts.sum())


def _int_text(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def save_histogram(path, hist):
    rows = ["bin_start_ps,count"] + [f"{_int_text(b)},{_int_text(c)}"
                                     for b, c in zip(hist.bin_start_ps, hist.counts)]
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")


def load_histogram(path, period_ps=None):
    """Read ``bin_start_ps,count``; the bin width is the spacing of the starts."""
    b, c = read_csv(path, ("bin_start_ps", "count"), (float, float))
    b = np.array(b)
    if b.size < 2:
        raise FileFormatError("a histogram file needs at least two bins", path)
    steps = np.diff(b)
    bad = np.flatnonzero(~np.isclose(steps, steps[0], rtol=1e-9, atol=1e-9))
    if not steps[0] > 0 or bad.size:
        line = (bad[0] if bad.size else 0) + 3
        raise FileFormatError("bin starts must be equally spaced and increasing", path, line)
    neg = np.flatnonzero(np.array(c) < 0)
    if neg.size:
        raise FileFormatError("negative count", path, neg[0] + 2)
    return Histogram(b, np.array(c), float(steps[0]), period_ps)


def histogram_start_stop(stream, sync, bin_width, window, channels=(1, 2)):
    """Start-stop delay histogram of ``stream`` (all times in ps).

    ``sync="pulse_train"``: each laser pulse starts the clock, the first
    detection (on ``channels``) after it stops it; delays fall in
    [0, window).  ``sync="channel"``: channel 1 starts, the first channel 2
    event stops, with a delay line of ``window`` so that signed delays in
    (−window, window) are recorded.
    """
    if not bin_width > 0:
        raise InputValidationError("bin_width must be positive")
    if not window >= bin_width:
        raise InputValidationError("window must be at least one bin wide")
    n_bins = int(math.ceil(window / bin_width))
    if sync == "pulse_train":
        if stream.rep_rate is None:
            raise InputValidationError("stream carries no pulse-train timing")
        period = PS_PER_S / stream.rep_rate
        t = stream.time_ps[np.isin(stream.channel, channels)]
        if t.size == 0:
            raise EmptyStreamError("no detection events on the selected channels")
        pulse = np.floor(t / period).astype(np.int64)
        first = np.concatenate([[True], pulse[1:] != pulse[:-1]])
        delay = t[first] - pulse[first] * period
        delay = delay[delay < window]
        edges = np.arange(n_bins + 1) * bin_width
        counts, _ = np.histogram(delay, edges)
        return Histogram(edges[:-1], counts, float(bin_width), period)
    if sync == "channel":
        t1, t2 = stream.select(1), stream.select(2)
        if t1.size == 0 or t2.size == 0:
            raise EmptyStreamError("correlation mode needs events on both channels")
        j = np.searchsorted(t2, t1 - window, side="left")
        ok = j < t2.size
        delay = t2[j[ok]] - t1[ok]
        delay = delay[delay < window]
        edges = np.arange(-n_bins, n_bins + 1) * bin_width
        counts, _ = np.histogram(delay, edges)
        return Histogram(edges[:-1], counts, float(bin_width))
    raise InputValidationError("sync must be 'pulse_train' or 'channel'")


# -- lifetime fit --------------------------------------------------------------


@dataclass(frozen=True)
class LifetimeFitResult:
    tau: float          # ns
    tau_error: float    # ns
    amplitude: float    # counts per bin at the window start
    offset: float       # counts per bin
    chi2_per_dof: float
    window_ns: tuple = (0.0, 0.0)
    bins: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise InputValidationError("tau must be positive")
        if not self.chi2_per_dof >= 0:
            raise InputValidationError("chi2_per_dof must be non-negative")


def _lifetime_model(p, x):
    A, tau, B = p
    e = np.exp(-x / tau)
    mu = A * e + B
    # dμ/dA, dμ/dτ, dμ/dB
    jac = np.stack([e, A * e * x / tau ** 2, np.ones_like(x)])
    return mu, e, jac


def fit_lifetime(hist, fit_window_ns=None):
    """Poisson maximum-likelihood fit of ``A·exp(−t/τ) + B``.

    The default window runs from 1 ns after the histogram peak to 80 % of
    the pulse period (or the histogram end when no period is known).
    Standard errors come from the inverse observed information.
    """
    t = hist.centers_ns
    n = hist.counts
    if np.count_nonzero(n) < 10:
        raise InsufficientDataError("lifetime fit needs at least 10 non-empty bins")
    if fit_window_ns is None:
        start = t[int(np.argmax(n))] + FIT_START_AFTER_PEAK_NS
        if hist.period_ps is not None:
            stop = FIT_END_PERIOD_FRACTION * hist.period_ps / PS_PER_NS
        else:
            stop = (hist.bin_start_ps[-1] + hist.bin_width_ps) / PS_PER_NS
    else:
        start, stop = fit_window_ns
    sel = (t >= start) & (t <= stop)
    x, y = t[sel] - start, n[sel]
    if np.count_nonzero(y) < 10 or x.size < 4:
        raise InsufficientDataError("fewer than 10 non-empty bins inside the fit window")

    # starting point: tail mean for B, log-linear slope for τ
    tail = y[x > 0.8 * x[-1]]
    B0 = float(np.mean(tail)) if tail.size else 0.0
    sig = y - B0
    good = sig > max(1.0, 0.05 * sig.max())
    if np.count_nonzero(good) >= 2:
        slope = np.polyfit(x[good], np.log(sig[good]), 1)[0]
        tau0 = -1.0 / slope if slope < 0 else x[-1]
    else:
        tau0 = x[-1] / 3
    tau0 = float(np.clip(tau0, 0.1 * (x[1] - x[0]), 10 * x[-1]))
    A0 = max(float(y[0] - B0), 1.0)
    scale = np.array([A0, tau0, max(B0, 1.0)])

    def nll(u):
        p = u * scale
        mu, _, jac = _lifetime_model(p, x)
        if np.any(mu <= 0):
            return np.inf, np.zeros(3)
        val = np.sum(mu - y * np.log(mu))
        grad = jac @ (1 - y / mu)
        return val, grad * scale

    bounds = [(1e-12, None), (1e-9, None), (0.0, None)]
    u0 = np.array([1.0, 1.0, B0 / scale[2]])
    sol = optimize.minimize(nll, u0, jac=True, method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-10})
    p = sol.x * scale
    if not np.all(np.isfinite(p)) or not (sol.success or _stationary(p, x, y)):
        raise ConvergenceError(f"lifetime fit did not converge: {sol.message}",
                               {"params": p.tolist(), "nit": int(sol.nit)})
    p = _polish(p, x, y)
    mu, e, jac = _lifetime_model(p, x)
    A, tau, B = p
    # observed information: Σ (n/μ²)∇μ∇μᵀ + (1 − n/μ)∇²μ
    w = y / mu ** 2
    info = (jac * w) @ jac.T
    r = 1 - y / mu
    d2 = np.zeros((3, 3))
    d2[0, 1] = d2[1, 0] = np.sum(r * e * x / tau ** 2)
    d2[1, 1] = np.sum(r * A * e * (x ** 2 / tau ** 4 - 2 * x / tau ** 3))
    info = info + d2
    active = [0, 1, 2] if B > 0 else [0, 1]
    cov = np.full((3, 3), np.nan)
    try:
        sub = np.linalg.inv(info[np.ix_(active, active)])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("singular information matrix", {"params": p.tolist()}) from exc
    cov[np.ix_(active, active)] = sub
    tau_err = float(np.sqrt(cov[1, 1])) if cov[1, 1] > 0 else math.inf
    dof = max(x.size - len(active), 1)
    chi2 = float(np.sum((y - mu) ** 2 / mu) / dof)
    return LifetimeFitResult(float(tau), tau_err, float(A), float(B), chi2,
                             (float(start), float(stop)), int(x.size))


def _stationary(p, x, y):
    mu, _, jac = _lifetime_model(p, x)
    g = jac @ (1 - y / mu)
    return bool(np.all(np.abs(g * p) < 1e-6 * max(1.0, y.sum())))


def _polish(p, x, y, steps=20):
    """A few Newton steps on the likelihood (B held at 0 if it sits on its bound)."""
    free = [0, 1, 2] if p[2] > 0 else [0, 1]
    for _ in range(steps):
        mu, e, jac = _lifetime_model(p, x)
        A, tau, _B = p
        r = 1 - y / mu
        g = jac @ r
        H = (jac * (y / mu ** 2)) @ jac.T
        H[0, 1] += np.sum(r * e * x / tau ** 2)
        H[1, 0] = H[0, 1]
        H[1, 1] += np.sum(r * A * e * (x ** 2 / tau ** 4 - 2 * x / tau ** 3))
        try:
            step = np.linalg.solve(H[np.ix_(free, free)], g[free])
        except np.linalg.LinAlgError:
            break
        trial = p.copy()
        trial[free] -= step
        if trial[0] <= 0 or trial[1] <= 0 or trial[2] < 0:
            break
        mu_t = _lifetime_model(trial, x)[0]
        if np.any(mu_t <= 0):
            break
        old = np.sum(mu - y * np.log(mu))
        new = np.sum(mu_t - y * np.log(mu_t))
        if new > old + 1e-12 * abs(old):
            break
        p = trial
        if np.all(np.abs(step) <= 1e-13 * np.abs(p[free]) + 1e-300):
            break
    return p


# -- g2 ------------------------------------------------------------------------


@dataclass(frozen=True)
class G2Parameters:
    a: float
    tau1: float     # ns
    tau2: float     # ns
    rho: float = 1.0

    def __post_init__(self):
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise InputValidationError("tau1 and tau2 must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise InputValidationError("rho must lie in [0, 1]")


def g2_model(tau_ns, params):
    """Background-mixed three-level g²(τ).

    g² = 1 − (1 + a)e^{−|τ|/τ1} + a e^{−|τ|/τ2}, observed as 1 + ρ²(g² − 1)
    with ρ the signal fraction of the counts.
    """
    t = np.abs(np.asarray(tau_ns, float))
    a, t1, t2, rho = params.a, params.tau1, params.tau2, params.rho
    e1, e2 = np.exp(-t / t1), np.exp(-t / t2)
    # g − 1 written so that it is exactly −1 at τ = 0
    out = 1.0 + rho * rho * (a * (e2 - e1) - e1)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class G2FitResult:
    a: float
    tau1: float
    tau2: float
    g2_zero: float
    background_fraction: float
    errors: dict
    normalization: float
    chi2_per_dof: float

    def __post_init__(self):
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise InputValidationError("tau1 and tau2 must be positive")
        if not self.g2_zero >= 0:
            raise InputValidationError("g2_zero must be non-negative")

    @property
    def single_emitter(self):
        return self.g2_zero < 0.5

    @property
    def params(self):
        return G2Parameters(self.a, self.tau1, self.tau2, 1.0 - self.background_fraction)


def normalize_g2(hist, normalization_window_ns=NORMALIZATION_WINDOW_NS):
    """Counts divided by their mean over the far wings |τ| ∈ window."""
    lo, hi = normalization_window_ns
    if not 0 <= lo < hi:
        raise InputValidationError("normalization window must satisfy 0 <= lo < hi")
    t = hist.centers_ns
    wing = (np.abs(t) >= lo) & (np.abs(t) <= hi)
    if np.count_nonzero(wing) < 5:
        raise InsufficientDataError(
            f"fewer than 5 bins with |tau| in [{lo:g}, {hi:g}] ns for normalization")
    norm = float(np.mean(hist.counts[wing]))
    if norm <= 0:
        raise InsufficientDataError("no counts in the normalization window")
    return t, hist.counts / norm, norm


def fit_g2(hist, normalization_window_ns=NORMALIZATION_WINDOW_NS):
    """Weighted least-squares fit of the background-mixed g² model.

    A free overall scale absorbs the statistical error of the wing mean.
    Returns a :class:`G2FitResult` whose ``single_emitter`` verdict is
    ``g2_zero < 0.5``.
    """
    t, g, norm = normalize_g2(hist, normalization_window_ns)
    sigma = np.sqrt(np.maximum(hist.counts, 1.0)) / norm
    span = float(np.max(np.abs(t)))

    def model(p):
        a, t1, t2, rho, c = p
        return c * g2_model(t, G2Parameters(a, t1, t2, rho))

    def resid(p):
        return (model(p) - g) / sigma

    dip = float(np.clip(g[np.argmin(np.abs(t))], 0.0, 1.0))
    rho0 = math.sqrt(max(1.0 - dip, 0.01))
    # a dip narrower than one bin is invisible at the bin centres and would leave
    # g2(0) unconstrained
    bin_ns = hist.bin_width_ps / PS_PER_NS
    lower = [0.0, bin_ns, bin_ns, 0.0, 0.5]
    upper = [50.0, span, 10 * span, 1.0, 2.0]
    best = None
    for t1 in (3.0, 15.0):
        for t2 in (60.0, 300.0):
            p0 = np.clip([0.3, t1 * bin_ns, t2 * bin_ns, rho0, 1.0], lower, upper)
            p0[3] = min(p0[3], 0.999)
            try:
                sol = optimize.least_squares(resid, p0, bounds=(lower, upper), x_scale="jac",
                                             xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=2000)
            except ValueError:
                continue
            if best is None or sol.cost < best.cost:
                best = sol
    if best is None or not np.all(np.isfinite(best.x)):
        raise ConvergenceError("g2 fit did not converge", {})
    a, t1, t2, rho, c = best.x
    if 5 * t1 > span:
        raise InsufficientDataError(
            f"histogram spans |tau| <= {span:g} ns, less than 5 tau1 = {5 * t1:g} ns")
    jac = best.jac
    dof = max(t.size - 5, 1)
    chi2 = float(2 * best.cost / dof)
    try:
        cov = np.linalg.pinv(jac.T @ jac) * max(chi2, 1.0)
        err = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        err = np.full(5, np.inf)
    g0 = 1.0 - rho * rho
    errors = {"a": err[0], "tau1": err[1], "tau2": err[2], "rho": err[3],
              "normalization": err[4], "g2_zero": 2 * rho * err[3]}
    return G2FitResult(float(a), float(t1), float(t2), float(g0), float(1.0 - rho),
                       {k: float(v) for k, v in errors.items()}, float(norm * c), chi2)


def synthetic_g2_histogram(params, bin_width_ps=G2_BIN_PS, window_ps=600_000,
                           flat_counts=1000.0):
    """Noiseless correlation histogram of ``g2_model`` sampled at bin centres."""
    n = int(math.ceil(window_ps / bin_width_ps))
    starts = np.arange(-n, n) * float(bin_width_ps)
    centers = (starts + 0.5 * bin_width_ps) / PS_PER_NS
    return Histogram(starts, flat_counts * g2_model(centers, params), float(bin_width_ps))
