from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conewave.csvio import read_csv
from conewave.errors import ConditioningError, ConvergenceError, DomainError
from conewave.radiation import (
    Cutoff,
    RadiationSamples,
    extract_radiation,
    fit_expansion,
    locate_pole,
    mellin,
    mellin_pole_scan,
    mellin_samples,
    mellin_scan,
    peel_exponents,
    refine_leading_exponent,
    richardson_limit,
)
from conewave.radiation.peel import MIXED_DRIFT
from conewave.solver import HankelMode, ModeInitialData, bump, bump_data, zero_profile
from conewave.spectrum import circle_spectrum, exponent_ladder, resonances

from oracles import DAlembertThreeD, bump_profile

S_LONG = np.geomspace(5.0, 2000.0, 400)


def _synthetic(func, s=S_LONG):
    return RadiationSamples.synthetic(s, func(s))


# -- Richardson extrapolation -----------------------------------------------

def test_richardson_exact_for_polynomials_in_inverse_r():
    r = np.array([1e3, 2e3, 4e3, 8e3])
    raw = 3.0 + 5.0 / r - 7.0 / r**2 + 2.0 / r**3
    limit, error, trusted = richardson_limit(r, raw)
    assert limit == pytest.approx(3.0, abs=1e-12)
    assert error <= 1e-9
    assert trusted


def test_richardson_flags_growing_differences():
    r = np.array([1.0, 2.0, 4.0, 8.0])
    raw = np.array([0.0, 1e-3, 0.0, 0.0])  # a glitch that later orders amplify
    _, _, trusted = richardson_limit(r, raw)
    assert not trusted


def test_richardson_needs_two_radii():
    with pytest.raises(DomainError):
        richardson_limit(np.array([1.0]), np.array([1.0]))


# -- extract_radiation ------------------------------------------------------

R_LIST = np.array([1e4, 2e4, 4e4, 8e4])
# near the wave front (|s| < r_b) the lam integral is oscillatory in r, so
# moderate radii are used there
R_NEAR = np.array([100.0, 200.0, 400.0, 800.0])


def test_zero_solution_has_zero_radiation():
    data = ModeInitialData(1.5, 2, zero_profile, zero_profile, (2.0, 3.0))
    R = extract_radiation(HankelMode(data), np.linspace(-2, 20, 12), R_NEAR)
    assert np.all(R.values == 0)


def test_extract_needs_three_radii():
    mode = HankelMode(bump_data(1.5, 2))
    with pytest.raises(DomainError):
        extract_radiation(mode, np.array([1.0, 2.0]), R_LIST[:2])


def test_extract_enforces_lapse_window():
    mode = HankelMode(bump_data(1.5, 2))
    with pytest.raises(DomainError):
        extract_radiation(mode, np.array([1.0, 3000.0]), R_LIST)


def test_free_space_radiation_matches_dalembert():
    # n = 3, nu = 1/2 is the spherically symmetric wave in R^3
    mode = HankelMode(bump_data(0.5, 3, (2.0, 3.0), 1.0, 1.0))
    oracle = DAlembertThreeD(bump_profile, bump_profile, (2.0, 3.0))
    s = np.linspace(-3.5, 6.0, 60)
    R = extract_radiation(mode, s, R_NEAR)
    assert np.max(np.abs(R.values - oracle.radiation(s))) <= 1e-4


def test_extrapolated_matches_stationary_phase():
    mode = HankelMode(bump_data(1.5, 2, (2.0, 3.0), 1.0, 1.0))
    s = np.linspace(-2.5, 12.0, 30)
    R = extract_radiation(mode, s, R_NEAR)
    ref = mode.radiation_stationary_phase(s)
    assert np.max(np.abs(R.values - ref)) <= 1e-3 * np.max(np.abs(ref))


def test_kernel_limit_matches_stationary_phase():
    mode = HankelMode(bump_data(10 / 7, 2, (2.0, 3.0), 1.0, 1.0))
    s = np.array([4.0, 10.0, 40.0])
    kernel = mode.radiation_kernel_limit(s)
    phase = mode.radiation_stationary_phase(s)
    assert np.allclose(kernel, phase, rtol=1e-6, atol=1e-10)


def test_extraction_is_linear():
    d1 = bump_data(1.5, 2, (2.0, 3.0), 1.0, 0.0)
    d2 = ModeInitialData(1.5, 2, zero_profile, lambda r: r * bump(2.0, 3.0)(r), (2.0, 3.0))
    combo = d1.scaled(0.8, d2, -1.7)
    s = np.linspace(0.0, 18.0, 16)
    r_list = R_NEAR
    lhs = extract_radiation(HankelMode(combo), s, r_list).values
    rhs = (0.8 * extract_radiation(HankelMode(d1), s, r_list).values
           - 1.7 * extract_radiation(HankelMode(d2), s, r_list).values)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


def test_radiation_samples_csv(tmp_path):
    R = extract_radiation(HankelMode(bump_data(1.5, 2)), np.linspace(4, 9, 6), R_LIST)
    header, rows = read_csv(R.to_csv(tmp_path / "radiation.csv"))
    assert header[:4] == ["s", "R", "error", "trusted"]
    assert len(header) == 4 + R_LIST.size
    assert len(rows) == 6


def test_radiation_samples_read_only():
    R = _synthetic(lambda s: s**-0.5)
    with pytest.raises(ValueError):
        R.values[0] = 1.0


# -- fit_expansion ----------------------------------------------------------

def test_fit_exact_single_term():
    fit = fit_expansion(_synthetic(lambda s: 2 * s**-0.5), [0.5], 1, (5.0, 50.0))
    assert fit.coefficients[0] == pytest.approx(2.0, rel=1e-12)
    assert fit.residual <= 1e-12


def test_fit_second_term_drops_residual():
    R = _synthetic(lambda s: s**-0.5 + 0.3 * s**-1.5)
    one = fit_expansion(R, [0.5, 1.5], 1, (5.0, 50.0))
    two = fit_expansion(R, [0.5, 1.5], 2, (5.0, 50.0))
    assert one.residual >= 10 * two.residual
    assert two.coefficients == pytest.approx([1.0, 0.3], rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(min_value=-5, max_value=5).filter(lambda a: abs(a) > 1e-3), min_size=3, max_size=3),
)
def test_fit_exact_basis_residual(coefs):
    lams = [0.5, 1.5, 2.9]
    R = _synthetic(lambda s: sum(a * s**-lam for a, lam in zip(coefs, lams)))
    fit = fit_expansion(R, lams, 3, (5.0, 200.0))
    assert fit.residual <= 1e-10


def test_fit_log_basis_from_ladder():
    ladder = exponent_ladder(resonances(2, circle_spectrum(1.0, 3), 2.0))
    R = _synthetic(lambda s: s**-0.5 + 0.2 * s**-1.5 * np.log(s) - 0.4 * s**-1.5)
    fit = fit_expansion(R, ladder, 2, (5.0, 200.0))
    assert fit.labels == ((0.5, 0), (1.5, 0), (1.5, 1))
    assert fit.coefficients == pytest.approx([1.0, -0.4, 0.2], rel=1e-8)


def test_fit_conditioning_error():
    with pytest.raises(ConditioningError):
        fit_expansion(_synthetic(lambda s: s**-0.5), [0.5, 0.5 + 1e-12], 2, (5.0, 50.0))


@pytest.mark.parametrize("window", [(0.5, 50.0), (5.0, 1e5), (50.0, 5.0)])
def test_fit_rejects_bad_window(window):
    with pytest.raises(DomainError):
        fit_expansion(_synthetic(lambda s: s**-0.5), [0.5], 1, window)


def test_fit_rejects_too_many_terms():
    with pytest.raises(DomainError):
        fit_expansion(_synthetic(lambda s: s**-0.5), [0.5], 2, (5.0, 50.0))


def test_refine_leading_exponent_recovers_free_exponent():
    R = _synthetic(lambda s: 1.3 * s**-1.9 + 0.5 * s**-2.9)
    lam = refine_leading_exponent(R, [1.8, 2.9], (5.0, 500.0))
    assert lam == pytest.approx(1.9, abs=1e-6)


def test_fit_csv(tmp_path):
    fit = fit_expansion(_synthetic(lambda s: s**-0.5), [0.5], 1, (5.0, 50.0))
    header, rows = read_csv(fit.to_csv(tmp_path / "fit.csv"))
    assert header == ["lambda", "log_power", "coefficient"]
    assert len(rows) == 1


# -- peel_exponents ---------------------------------------------------------

def test_peel_single_power():
    terms = peel_exponents(_synthetic(lambda s: 5 * s**-1.2), 3, (5.0, 500.0))
    assert len(terms) == 1
    lam, amp = terms[0]
    assert lam == pytest.approx(1.2, abs=1e-3)
    assert amp == pytest.approx(5.0, rel=1e-3)
    assert not terms[0].mixed


def test_peel_flags_mixed_exponents():
    terms = peel_exponents(_synthetic(lambda s: s**-0.5 + s**-0.7), 3, (5.0, 500.0))
    first = terms[0]
    assert 0.5 < first.lambda_est < 0.7
    assert first.mixed and first.drift > MIXED_DRIFT


def test_peel_needs_a_decade():
    with pytest.raises(DomainError):
        peel_exponents(_synthetic(lambda s: s**-0.5), 2, (5.0, 40.0))


def test_peel_zero_signal():
    assert peel_exponents(_synthetic(lambda s: 0 * s), 2, (5.0, 500.0)) == []


# -- mellin -----------------------------------------------------------------

def test_mellin_constant_like():
    assert mellin(lambda rho: rho, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_mellin_power_closed_form():
    value = mellin(lambda rho: rho**1.5, 2.0)
    assert value == pytest.approx(1 / (1.5 - 2j), abs=1e-12)
    assert abs(value) == pytest.approx(1 / 2.5, abs=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.5, 2.25])
@pytest.mark.parametrize("sigma", [0.0, 1.0 - 0.2j, -3.0 + 0.4j])
def test_mellin_power_family(a, sigma):
    assert mellin(lambda rho: rho**a, sigma) == pytest.approx(1 / (a - 1j * sigma), abs=1e-11)


def test_mellin_divergence_names_endpoint():
    with pytest.raises(ConvergenceError) as info:
        mellin(lambda rho: rho**0.5, -1.0j)
    assert "rho = 0" in str(info.value)
    assert info.value.diagnostics["endpoint"] == "rho=0"


def test_mellin_is_linear():
    f = lambda rho: rho**1.5 * np.cos(rho)
    g = lambda rho: rho**2.2
    sigma = 0.7 - 0.3j
    lhs = mellin(lambda rho: 2.0 * f(rho) - 3.5 * g(rho), sigma)
    rhs = 2.0 * mellin(f, sigma) - 3.5 * mellin(g, sigma)
    assert abs(lhs - rhs) <= 1e-12


def test_mellin_smooth_cutoff_numeric_oracle():
    from scipy.integrate import quad

    cut = Cutoff("smooth", 1.0)
    sigma = 0.4
    re = quad(lambda x: float(cut(np.array([x]))[0]) * x**1.5 * np.cos(sigma * np.log(x)) / x, 0, 1,
              epsabs=1e-14, limit=200)[0]
    im = quad(lambda x: -float(cut(np.array([x]))[0]) * x**1.5 * np.sin(sigma * np.log(x)) / x, 0, 1,
              epsabs=1e-14, limit=200)[0]
    assert mellin(lambda rho: rho**1.5, sigma, cut) == pytest.approx(complex(re, im), abs=1e-10)


def test_mellin_samples_of_power():
    rho = np.geomspace(1e-4, 1.0, 300)
    value = mellin_samples(rho, rho**1.5, 2.0, Cutoff("sharp", 1.0))
    assert value == pytest.approx(1 / (1.5 - 2j), rel=1e-6)


def test_pole_of_power_on_analytic_input():
    pole, _ = locate_pole(lambda sig: mellin(lambda rho: rho**1.5, sig), (0.0, 3.0))
    assert abs(pole - (-1.5j)) <= 1e-3


def test_cutoff_shape():
    cut = Cutoff("smooth", 2.0)
    rho = np.array([0.1, 1.0, 1.5, 2.0, 3.0])
    vals = cut(rho)
    assert vals[0] == 1.0 and vals[1] == 1.0 and 0 < vals[2] < 1 and vals[3] == 0 and vals[4] == 0
    with pytest.raises(DomainError):
        Cutoff("box")


def test_mellin_scan_csv(tmp_path):
    rho = np.geomspace(1e-3, 1.0, 200)
    scan = mellin_scan(rho, rho**1.5, [0.0, 1.0], [-1.0, -2.0], Cutoff())
    assert scan.sigma_samples.size == 2  # Im sigma = -2 diverges and is dropped
    header, rows = read_csv(scan.to_csv(tmp_path / "scan.csv"))
    assert header == ["re_sigma", "im_sigma", "re_M", "im_M"]
    assert len(rows) == 2


# -- mellin_pole_scan -------------------------------------------------------

def test_pole_scan_single_power():
    result = mellin_pole_scan(_synthetic(lambda s: s**-0.5), (-3.0, 0.0))
    assert len(result.poles) == 1
    assert abs(result.poles[0] - (-0.5j)) <= 1e-3


def test_pole_scan_two_terms():
    R = _synthetic(lambda s: s**-0.5 + 0.4 * s**-1.5)
    result = mellin_pole_scan(R, (-3.0, 0.0), ladder=[0.5, 1.5, 2.5], n_poles=2, window=(5.0, 2000.0))
    assert len(result.poles) == 2
    assert abs(result.poles[0] - (-0.5j)) <= 5e-3
    assert abs(result.poles[1] - (-1.5j)) <= 5e-3


def test_pole_scan_needs_ladder_for_second_pole():
    with pytest.raises(DomainError):
        mellin_pole_scan(_synthetic(lambda s: s**-0.5), (-3.0, 0.0), n_poles=2)


# -- pipeline ---------------------------------------------------------------

def test_pipeline_peel_unit_circle_mode_zero():
    # alpha = 1, j = 0 gives nu = 0 and leading decay 1/2
    mode = HankelMode(bump_data(0.0, 2, (2.0, 3.0), 1.0, 1.0))
    s = np.geomspace(5.0, 2000.0, 120)
    R = extract_radiation(mode, s, R_LIST, mode_j=0)
    terms = peel_exponents(R, 2, (50.0, 2000.0))
    assert terms[0].lambda_est == pytest.approx(0.5, rel=0.05)


def test_pole_scan_of_zero_signal_reports_no_pole():
    result = mellin_pole_scan(_synthetic(lambda s: 0 * s), (-3.0, 0.0))
    assert result.poles == []
    assert "vanishes" in result.diagnostics[0]
