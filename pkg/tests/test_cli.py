import io
import re
import subprocess
import sys

import numpy as np
import pytest

from nvwire.cli import build_parser, main
from nvwire.coupling import load_map
from nvwire.photon_stats import load_histogram, load_stream

COMMANDS = ("mode", "enhance", "map", "table", "drude-fit", "simulate", "fit-lifetime", "fit-g2")


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


def report(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines())


def test_mode_report(tmp_path):
    code, text = run("mode", "--radius-nm", "27.5", "--wavelength-nm", "700", "--eps1", "3",
                     "--csv", str(tmp_path / "m.csv"))
    assert code == 0
    r = report(text)
    n = complex(r["n_eff"])
    assert n.real == pytest.approx(2.81763, abs=1e-5)
    assert n.imag == pytest.approx(0.0176264, rel=1e-5)
    assert float(r["propagation_length_um"]) == pytest.approx(0.7 / (4 * np.pi * n.imag),
                                                              rel=1e-4)
    assert r["winding_number"] == "1"
    assert (tmp_path / "m.csv").read_text().startswith("radius_nm,")


def test_missing_radius_is_usage_error(capsys):
    assert run("mode")[0] == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: UsageError:") and "\n" not in err


def test_no_mode_error_surfaces(capsys):
    code, _ = run("mode", "--radius-nm", "27.5", "--eps-metal", "2+0i")
    assert code == 3
    assert capsys.readouterr().err.startswith("error: NoModeError: no guided plasmon")


def test_enhance_reports_channels():
    code, text = run("enhance", "--diameter-nm", "55", "--dprime-nm", "27")
    assert code == 0
    r = report(text)
    parts = sum(float(r[k]) for k in ("gamma_pl", "gamma_rad", "gamma_nr"))
    assert parts == pytest.approx(float(r["total"]), rel=1e-5)


def test_enhance_channel_split_exit_code(capsys):
    code, _ = run("enhance", "--diameter-nm", "30", "--dprime-nm", "27")
    assert code == 3
    assert "ChannelSplitError" in capsys.readouterr().err


def test_table_command(tmp_path):
    code, text = run("table", "--out", str(tmp_path / "t.csv"))
    lines = text.strip().splitlines()
    assert code == 0 and len(lines) == 6
    assert lines[0].endswith("reference_prediction,predicted_total")
    preds = [float(l.split(",")[-1]) for l in lines[1:]]
    assert int(np.argmax(preds)) == 3
    rows = (tmp_path / "t.csv").read_text().strip().splitlines()
    assert len(rows) == 6


def test_map_shape_and_round_trip(tmp_path):
    out = tmp_path / "map.csv"
    code, text = run("map", "--diameters", "50:60:3", "--distances", "20:40:2",
                     "--out", str(out), "--workers", "2")
    assert code == 0 and report(text)["map"] == "3x2"
    emap = load_map(out)
    assert emap.total.shape == (3, 2)
    np.testing.assert_allclose(emap.diameter_axis, [50, 55, 60])


def test_map_range_validation():
    assert run("map", "--diameters", "10:20:2", "--out", "x.csv")[0] == 2
    assert run("map", "--diameters", "bad", "--out", "x.csv")[0] == 2


def test_drude_fit_command():
    code, text = run("drude-fit")
    r = report(text)
    assert code == 0
    assert float(r["max_relative_residual"]) < 0.05
    assert complex(r["eps_at_700nm"]).real == pytest.approx(-23.0797, rel=1e-5)


def test_simulate_requires_seed(tmp_path):
    assert run("simulate", "--out", str(tmp_path / "s.csv"))[0] == 2


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run("simulate", "--seed", "5", "--duration-s", "0.01", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_then_fit_lifetime(tmp_path):
    s, h = tmp_path / "s.csv", tmp_path / "h.csv"
    code, _ = run("simulate", "--seed", "2024", "--duration-s", "1", "--detection-efficiency",
                  "0.2", "--out", str(s))
    assert code == 0
    code, text = run("fit-lifetime", "--stream", str(s), "--histogram-out", str(h))
    assert code == 0
    r = report(text)
    tau, err = float(r["tau_ns"]), float(r["tau_error_ns"])
    assert abs(tau - 17.3) < 3 * err
    # the histogram file refits to the same answer
    code, again = run("fit-lifetime", "--histogram", str(h), "--rep-rate-mhz", "5.05")
    assert report(again)["tau_ns"] == r["tau_ns"]
    assert load_histogram(h).counts.sum() > 9e5


def test_fit_g2_example():
    code, text = run("fit-g2", "--example")
    assert code == 0
    assert "single emitter: true" in text
    assert float(report(text)["g2_zero"]) < 0.5


def test_fit_g2_flat_histogram(tmp_path):
    p = tmp_path / "flat.csv"
    starts = np.arange(-600, 600) * 1000
    rng = np.random.default_rng(1)
    counts = rng.poisson(2000, starts.size)
    p.write_text("bin_start_ps,count\n" + "".join(f"{b},{c}\n" for b, c in zip(starts, counts)))
    code, text = run("fit-g2", "--histogram", str(p))
    assert code == 0
    r = report(text)
    assert abs(float(r["g2_zero"]) - 1) < 0.05
    assert r["single emitter"] == "false"


def test_fit_g2_needs_input():
    assert run("fit-g2")[0] == 2


def test_bad_file_reports_line(tmp_path, capsys):
    p = tmp_path / "s.csv"
    p.write_text("channel,time_ps\n1,100\n1,abc\n")
    code, _ = run("fit-lifetime", "--stream", str(p), "--rep-rate-mhz", "5")
    assert code == 4
    assert re.search(r"s\.csv:3:", capsys.readouterr().err)


def test_missing_file_is_io_error():
    assert run("fit-g2", "--histogram", "/nonexistent/h.csv")[0] == 4


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text("radius-nm = 27.5\nwavelength_nm = 650\n")
    code, text = run("--config", str(cfg), "mode")
    assert code == 0
    base = report(text)["n_eff"]
    code, text = run("--config", str(cfg), "mode", "--wavelength-nm", "700")
    assert report(text)["n_eff"] != base
    assert report(text)["n_eff"] == report(run("mode", "--radius-nm", "27.5")[1])["n_eff"]


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text("radius-nm = 27.5\ncolour = blue\n")
    assert run("--config", str(cfg), "mode")[0] == 2


@pytest.mark.parametrize("command", COMMANDS)
def test_help_lists_flags_with_units(command, capsys):
    with pytest.raises(SystemExit) as info:
        main([command, "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    sub = build_parser()._subparsers._group_actions[0].choices[command]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text
    units = {"-nm": "nm", "-ns": "ns", "-ps": "ps", "-mhz": "MHz", "-per-s": "1/s",
             "-s": " s", "-ev": "eV"}
    unitless = {"--eps1", "--eps-metal", "--drude-eps-inf", "--detection-efficiency",
                "--workers", "--seed", "--orientation", "--mode"}
    for action in sub._actions:
        flags = [f for f in action.option_strings if f.startswith("--")]
        if not flags or action.type is None or action.dest in ("help", "config"):
            continue
        flag = flags[0]
        suffix = next((u for u in units if flag.endswith(u)), None)
        if suffix:
            assert units[suffix] in action.help, flag
        elif action.type.__name__ in ("Path",):
            continue
        elif flag not in unitless:
            assert "nm" in action.help, flag


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nvwire", "drude-fit"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "eps_inf:" in res.stdout


def test_eps_metal_override():
    code, text = run("mode", "--radius-nm", "27.5", "--eps-metal=-20.4+1.3i")
    assert code == 0
    assert report(text)["eps_metal"] == "-20.4+1.3j"
