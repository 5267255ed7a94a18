"""Command-line front end: ``nvwire <command> [flags]``.

Every flag can also be given in a ``key = value`` file passed with
``--config``; keys are flag names without the leading dashes (``-`` and
``_`` are interchangeable) and flags on the command line win.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import coupling, materials, mode, photon_stats
from .errors import FileFormatError, InputValidationError, NVWireError
from .io import fmt, parse_complex, read_key_values, write_csv

EXIT_USAGE = 2
EXIT_IO = 4


class UsageError(NVWireError):
    exit_code = EXIT_USAGE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _range(text):
    """``start:stop:count`` -> evenly spaced floats (count ≥ 1)."""
    try:
        lo, hi, n = text.split(":")
        n = int(n)
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("count must be at least 1")
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def _pair(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    return lo, hi


def _complex(text):
    try:
        return parse_complex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


def _seed(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


# -- shared flag groups ----------------------------------------------------------


def _optics_flags(p):
    p.add_argument("--wavelength-nm", type=_positive, default=700.0,
                   help="vacuum wavelength in nm (default 700)")
    p.add_argument("--eps1", type=_positive, default=3.0,
                   help="relative permittivity of the surrounding dielectric (default 3)")
    p.add_argument("--eps-metal", type=_complex, default=None,
                   help="metal permittivity, e.g. --eps-metal=-20.4+1.3i (default: fitted silver Drude model)")
    p.add_argument("--drude-eps-inf", type=_positive, default=None,
                   help="Drude eps_inf override (dimensionless)")
    p.add_argument("--drude-omega-p-ev", type=_positive, default=None,
                   help="Drude plasma energy override in eV")
    p.add_argument("--drude-gamma-ev", type=_nonneg, default=None,
                   help="Drude damping energy override in eV")


def _drude(args):
    base = materials.default_silver()
    over = (args.drude_eps_inf, args.drude_omega_p_ev, args.drude_gamma_ev)
    if all(v is None for v in over):
        return base
    return materials.DrudeParameters.from_ev(
        base.eps_inf if over[0] is None else over[0],
        base.omega_p_ev if over[1] is None else over[1],
        base.gamma_ev if over[2] is None else over[2])


def _eps_metal(args, wavelength_nm=None):
    if args.eps_metal is not None:
        return args.eps_metal
    return complex(materials.drude_epsilon(wavelength_nm or args.wavelength_nm, _drude(args)))


def _emit(out, pairs):
    for key, value in pairs:
        out.write(f"{key}: {value}\n")


# -- commands ----------------------------------------------------------------------


def cmd_mode(args, out):
    geo = mode.WireGeometry(args.radius_nm / 1e9, _eps_metal(args), args.eps1)
    m = mode.solve_fundamental_mode(geo, args.wavelength_nm / 1e9)
    length_um = m.propagation_length * 1e6
    _emit(out, [("n_eff", fmt(complex(m.n_eff))),
                ("propagation_length_um", fmt(length_um)),
                ("eps_metal", fmt(complex(geo.eps_metal))),
                ("winding_number", mode.certify_mode(m))])
    if args.csv:
        write_csv(args.csv, ("radius_nm", "wavelength_nm", "n_eff_re", "n_eff_im",
                             "propagation_length_um"),
                  [(repr(args.radius_nm), repr(args.wavelength_nm), repr(m.n_eff.real),
                    repr(m.n_eff.imag), repr(length_um))])


def cmd_enhance(args, out):
    em = coupling.EmitterConfig(args.dprime_nm / 1e9, args.orientation,
                                args.wavelength_nm / 1e9, args.eps1)
    radius = args.diameter_nm / 2e9
    if args.band_average:
        total = coupling.band_averaged_enhancement(radius, em, _drude(args))
        _emit(out, [("total", fmt(total)), ("band_nm", "647-785")])
        return
    geo = mode.WireGeometry(radius, _eps_metal(args), args.eps1)
    r = coupling.total_rate_enhancement(geo, em)
    _emit(out, [(k, fmt(v)) for k, v in r.as_dict().items()])
    if r.n_eff is not None:
        _emit(out, [("n_eff", fmt(complex(r.n_eff)))])


def cmd_map(args, out):
    emap = coupling.enhancement_map(args.diameters, args.distances, args.wavelength_nm,
                                    args.eps1, args.orientation, _drude(args), args.workers)
    coupling.save_map(args.out, emap)
    _emit(out, [("map", f"{emap.total.shape[0]}x{emap.total.shape[1]}"),
                ("written", str(args.out)),
                ("flagged_cells", len(emap.cell_errors)),
                ("min_total", fmt(emap.total.min())),
                ("max_total", fmt(emap.total.max()))])


def cmd_table(args, out):
    if args.records:
        records, reference = coupling.load_table_records(args.records)
    else:
        records, reference = coupling.bundled_table_records()
    drude = _drude(args)
    rows = coupling.predict_table(records, args.wavelength_nm, args.eps1, drude)
    header = ("diameter_nm", "height_nm", "measured_ratio", "measured_error",
              "reference_prediction", "predicted_total")
    body = [(fmt(r.wire_diameter), fmt(r.diamond_height), fmt(r.measured_enhancement),
             fmt(r.measured_error), fmt(ref), fmt(r.predicted_min_enhancement))
            for r, ref in zip(rows, reference)]
    out.write(",".join(header) + "\n")
    for row in body:
        out.write(",".join(row) + "\n")
    if args.out:
        write_csv(args.out, header,
                  [(repr(r.wire_diameter), repr(r.diamond_height), repr(r.measured_enhancement),
                    repr(r.measured_error), repr(ref), repr(r.predicted_min_enhancement))
                   for r, ref in zip(rows, reference)])


def cmd_drude_fit(args, out):
    table = materials.load_optical_table(args.table) if args.table else \
        materials.bundled_silver_table()
    fit = materials.fit_drude(table, args.window_nm)
    p = fit.params
    _emit(out, [("eps_inf", fmt(p.eps_inf)), ("omega_p_ev", fmt(p.omega_p_ev)),
                ("gamma_ev", fmt(p.gamma_ev)), ("rows", len(fit.wavelength_nm)),
                ("max_relative_residual", fmt(fit.max_residual)),
                ("eps_at_700nm", fmt(complex(materials.drude_epsilon(700.0, p))))])


def _three_level(args):
    return photon_stats.ThreeLevelModel(
        pump_rate=args.pump_rate_per_s, radiative_rate=1e9 / args.tau_ns,
        isc_rate=args.isc_rate_per_s, metastable_rate=args.metastable_rate_per_s,
        detection_efficiency=args.detection_efficiency,
        background_rate=args.background_rate_per_s)


def cmd_simulate(args, out):
    model = _three_level(args)
    if args.mode == "pulsed":
        drive = photon_stats.Pulsed(args.rep_rate_mhz * 1e6, args.pulse_width_ps * 1e-12)
    else:
        drive = photon_stats.ContinuousWave()
    stream = photon_stats.simulate_stream(model, drive, args.duration_s, args.seed)
    photon_stats.save_stream(args.out, stream)
    c1, c2 = stream.counts()
    _emit(out, [("events", len(stream)), ("channel1", c1), ("channel2", c2),
                ("written", str(args.out))])


def _lifetime_histogram(args):
    if args.histogram:
        period = 1e6 / args.rep_rate_mhz if args.rep_rate_mhz else None
        return photon_stats.load_histogram(args.histogram, period)
    stream = photon_stats.load_stream(args.stream)
    if stream.rep_rate is None:
        if not args.rep_rate_mhz:
            raise InputValidationError("stream has no pulse timing; pass --rep-rate-mhz")
        stream = photon_stats.TimeTagStream(stream.channel, stream.time_ps, stream.duration_ps,
                                            stream.seed, args.rep_rate_mhz * 1e6)
    period = photon_stats.PS_PER_S / stream.rep_rate
    return photon_stats.histogram_start_stop(stream, "pulse_train", args.bin_ps, period)


def cmd_fit_lifetime(args, out):
    hist = _lifetime_histogram(args)
    if args.histogram_out:
        photon_stats.save_histogram(args.histogram_out, hist)
    r = photon_stats.fit_lifetime(hist)
    _emit(out, [("tau_ns", fmt(r.tau)), ("tau_error_ns", fmt(r.tau_error)),
                ("amplitude_counts", fmt(r.amplitude)), ("offset_counts", fmt(r.offset)),
                ("chi2_per_dof", fmt(r.chi2_per_dof)),
                ("fit_window_ns", f"{fmt(r.window_ns[0])}:{fmt(r.window_ns[1])}")])


def _bundled_g2():
    ref = resources.files("nvwire.data") / "g2_single_emitter.csv"
    with resources.as_file(ref) as p:
        return photon_stats.load_histogram(p)


def cmd_fit_g2(args, out):
    if args.example:
        hist = _bundled_g2()
    elif args.histogram:
        hist = photon_stats.load_histogram(args.histogram)
    elif args.stream:
        stream = photon_stats.load_stream(args.stream)
        hist = photon_stats.histogram_start_stop(stream, "channel", args.bin_ps,
                                                 args.window_ns * 1000)
    else:
        raise UsageError("one of --histogram, --stream or --example is required")
    if args.histogram_out:
        photon_stats.save_histogram(args.histogram_out, hist)
    r = photon_stats.fit_g2(hist, args.norm_window_ns)
    e = r.errors
    _emit(out, [("g2_zero", fmt(r.g2_zero)), ("g2_zero_error", fmt(e["g2_zero"])),
                ("a", fmt(r.a)), ("a_error", fmt(e["a"])),
                ("tau1_ns", fmt(r.tau1)), ("tau1_error_ns", fmt(e["tau1"])),
                ("tau2_ns", fmt(r.tau2)), ("tau2_error_ns", fmt(e["tau2"])),
                ("background_fraction", fmt(r.background_fraction)),
                ("chi2_per_dof", fmt(r.chi2_per_dof)),
                ("single emitter", "true" if r.single_emitter else "false")])


# -- parser ------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="nvwire", description="Nanowire plasmon coupling and photon statistics")
    parser.add_argument("--config", type=Path, default=None,
                        help="key = value file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mode", help="solve the fundamental plasmon mode")
    p.add_argument("--radius-nm", type=_positive, required=True, help="wire radius in nm")
    _optics_flags(p)
    p.add_argument("--csv", type=Path, default=None, help="also write the result as CSV")
    p.set_defaults(func=cmd_mode)

    p = sub.add_parser("enhance", help="decay-rate enhancement for one emitter placement")
    p.add_argument("--diameter-nm", type=_positive, required=True, help="wire diameter in nm")
    p.add_argument("--dprime-nm", type=_positive, required=True,
                   help="emitter distance from the wire surface in nm")
    p.add_argument("--orientation", choices=coupling.ORIENTATIONS, default="radial",
                   help="dipole orientation (default radial)")
    p.add_argument("--band-average", action="store_true",
                   help="average the total over 647-785 nm (Drude model only)")
    _optics_flags(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("map", help="total enhancement on a diameter x distance grid")
    p.add_argument("--diameters", type=_range, default=_range("30:80:50"),
                   help="diameters in nm as start:stop:count (default 30:80:50)")
    p.add_argument("--distances", type=_range, default=_range("5:60:50"),
                   help="distances d' in nm as start:stop:count (default 5:60:50)")
    p.add_argument("--orientation", choices=coupling.ORIENTATIONS, default="radial",
                   help="dipole orientation (default radial)")
    p.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--out", type=Path, required=True,
                   help="CSV path; metadata goes to <out>.meta")
    _optics_flags(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("table", help="predicted enhancement for the measured systems")
    p.add_argument("--records", type=Path, default=None,
                   help="records CSV (default: bundled measured systems)")
    p.add_argument("--out", type=Path, default=None, help="also write the table as CSV")
    _optics_flags(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("drude-fit", help="fit the Drude model to optical constants")
    p.add_argument("--table", type=Path, default=None,
                   help="CSV wavelength_nm,eps_re,eps_im (default: bundled silver data)")
    p.add_argument("--window-nm", type=_pair, default=materials.FIT_WINDOW_NM,
                   help="fit window in nm as lo:hi (default 600:800)")
    p.set_defaults(func=cmd_drude_fit)

    p = sub.add_parser("simulate", help="Monte-Carlo photon stream of a three-level emitter")
    p.add_argument("--mode", choices=("cw", "pulsed"), default="pulsed", help="excitation")
    p.add_argument("--seed", type=_seed, required=True, help="random seed (required)")
    p.add_argument("--duration-s", type=_positive, default=1.0, help="stream length in s")
    p.add_argument("--tau-ns", type=_positive, default=17.3, help="radiative lifetime in ns")
    p.add_argument("--pump-rate-per-s", type=_nonneg, default=1e12,
                   help="pump rate in 1/s (during the pulse in pulsed mode)")
    p.add_argument("--isc-rate-per-s", type=_nonneg, default=0.0,
                   help="shelving rate into the metastable level in 1/s")
    p.add_argument("--metastable-rate-per-s", type=_nonneg, default=0.0,
                   help="return rate from the metastable level in 1/s")
    p.add_argument("--detection-efficiency", type=_nonneg, default=0.1,
                   help="overall detection probability per photon")
    p.add_argument("--background-rate-per-s", type=_nonneg, default=0.0,
                   help="background count rate of each detector in 1/s")
    p.add_argument("--rep-rate-mhz", type=_positive, default=5.05, help="pulse repetition rate in MHz")
    p.add_argument("--pulse-width-ps", type=_positive, default=4.6, help="pulse width in ps")
    p.add_argument("--out", type=Path, required=True, help="time-tag CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-lifetime", help="exponential fit of a lifetime histogram")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--stream", type=Path, help="time-tag CSV from simulate")
    src.add_argument("--histogram", type=Path, help="histogram CSV bin_start_ps,count")
    p.add_argument("--bin-ps", type=_positive, default=photon_stats.LIFETIME_BIN_PS,
                   help="bin width in ps (default 200)")
    p.add_argument("--rep-rate-mhz", type=_positive, default=None,
                   help="pulse repetition rate in MHz when the input lacks it")
    p.add_argument("--histogram-out", type=Path, default=None, help="write the histogram CSV")
    p.set_defaults(func=cmd_fit_lifetime)

    p = sub.add_parser("fit-g2", help="three-level fit of a correlation histogram")
    p.add_argument("--stream", type=Path, default=None, help="time-tag CSV from simulate")
    p.add_argument("--histogram", type=Path, default=None, help="histogram CSV bin_start_ps,count")
    p.add_argument("--example", action="store_true", help="use the bundled example histogram")
    p.add_argument("--bin-ps", type=_positive, default=photon_stats.G2_BIN_PS,
                   help="bin width in ps (default 1000)")
    p.add_argument("--window-ns", type=_positive, default=600.0,
                   help="correlation half-window in ns (default 600)")
    p.add_argument("--norm-window-ns", type=_pair, default=photon_stats.NORMALIZATION_WINDOW_NS,
                   help="|tau| range in ns used for normalization (default 300:500)")
    p.add_argument("--histogram-out", type=Path, default=None, help="write the histogram CSV")
    p.set_defaults(func=cmd_fit_g2)
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from the --config file, if any."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return parser.parse_args(argv)
    commands = parser._subparsers._group_actions[0].choices
    name = next((tok for tok in rest if tok in commands), None)
    if name is None:
        return parser.parse_args(argv)
    sub = commands[name]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "func")}
    defaults = {}
    for key, text in read_key_values(known.config).items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise UsageError(f"unknown key {key!r} in {known.config} for command {name}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = text.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(text) if action.type else text
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{known.config}: bad value for {key}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{known.config}: {key} must be one of {tuple(action.choices)}")
        defaults[dest] = value
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args, out)
    except NVWireError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
