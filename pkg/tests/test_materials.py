import numpy as np
import pytest

from nvwire.errors import InputValidationError, InsufficientDataError
from nvwire.materials import (HC_EV_NM, DrudeParameters, OpticalConstantTable,
                              bundled_silver_table, default_silver, drude_epsilon,
                              fit_drude, load_optical_table, save_optical_table)

import oracles

# frozen from oracles.drude_fit_independent on the bundled table, 600–800 nm
GOLDEN_EPS_700 = -23.079693 + 0.348517j
GOLDEN_PARAMS_EV = (3.160979, 9.073902, 0.0235243)


def test_parameter_invariants():
    with pytest.raises(InputValidationError):
        DrudeParameters(4.0, 0.0, 1e13)
    with pytest.raises(InputValidationError):
        DrudeParameters(4.0, 1e16, -1.0)
    with pytest.raises(InputValidationError):
        DrudeParameters(0.5, 1e16, 1e13)


def test_zero_at_plasma_frequency():
    p = DrudeParameters.from_ev(1.0, 9.0, 0.0)
    assert abs(drude_epsilon(HC_EV_NM / 9.0, p)) < 1e-12


def test_long_wavelength_asymptote():
    p = DrudeParameters.from_ev(4.0, 9.0, 0.0)
    re = drude_epsilon(np.array([1000.0, 3000.0, 10000.0]), p).real
    assert re[2] < 0 and np.all(np.diff(re) < 0)


def test_nonpositive_wavelength_rejected():
    with pytest.raises(InputValidationError):
        drude_epsilon(0.0, default_silver())


def test_passivity_and_monotonicity():
    lam = np.linspace(200, 5000, 500)
    eps = drude_epsilon(lam, default_silver())
    assert np.all(eps.imag >= 0)
    window = (lam >= 600) & (lam <= 800)
    assert np.all(np.diff(eps.real[window]) < 0)


def test_table_invariants():
    with pytest.raises(InputValidationError):
        OpticalConstantTable(np.array([500.0]), np.array([-10 + 1j]))
    with pytest.raises(InputValidationError):
        OpticalConstantTable(np.array([600.0, 500.0]), np.array([-10 + 1j, -8 + 1j]))
    with pytest.raises(InputValidationError):
        OpticalConstantTable(np.array([500.0, 600.0]), np.array([-10 - 1j, -8 + 1j]))


def test_noiseless_inversion():
    truth = DrudeParameters.from_ev(4.0, 9.0, 0.05)
    table = OpticalConstantTable.from_drude(np.linspace(600, 800, 9), truth)
    fit = fit_drude(table)
    assert fit.params.eps_inf == pytest.approx(4.0, rel=1e-6)
    assert fit.params.omega_p_ev == pytest.approx(9.0, rel=1e-6)
    assert fit.params.gamma_ev == pytest.approx(0.05, rel=1e-6)


def test_bundled_fit_residuals_and_golden_value():
    fit = fit_drude(bundled_silver_table())
    assert fit.max_residual < 0.05
    eps = drude_epsilon(700.0, fit.params)
    assert eps.real == pytest.approx(GOLDEN_EPS_700.real, rel=1e-6)
    assert eps.imag == pytest.approx(GOLDEN_EPS_700.imag, rel=1e-5)
    got = (fit.params.eps_inf, fit.params.omega_p_ev, fit.params.gamma_ev)
    np.testing.assert_allclose(got, GOLDEN_PARAMS_EV, rtol=1e-5)
    # agrees with the tabulated value within the fit residual
    tab = bundled_silver_table().lookup(700.0)
    assert abs(eps - tab) / abs(tab) < 0.05


def test_fit_idempotence():
    p = default_silver()
    table = OpticalConstantTable.from_drude(np.linspace(600, 800, 11), p)
    q = fit_drude(table).params
    assert q.eps_inf == pytest.approx(p.eps_inf, rel=1e-9)
    assert q.omega_p == pytest.approx(p.omega_p, rel=1e-9)
    assert q.gamma == pytest.approx(p.gamma, rel=1e-9)


def test_empty_range():
    with pytest.raises(InsufficientDataError):
        fit_drude(bundled_silver_table(), window=(1000.0, 1100.0))


def test_table_round_trip(tmp_path):
    table = bundled_silver_table()
    save_optical_table(tmp_path / "t.csv", table)
    again = load_optical_table(tmp_path / "t.csv")
    np.testing.assert_array_equal(again.wavelength_nm, table.wavelength_nm)
    np.testing.assert_array_equal(again.epsilon, table.epsilon)
