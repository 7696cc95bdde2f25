import numpy as np
import pytest
from scipy.integrate import quad
from sklearn.base import clone

from oqgqsp.fourier import (FourierPhaseApproximator, FourierSeries, PhaseTarget,
                            analytic_tail_bound, certify_tail, envelope_strip,
                            fourier_coefficients, select_degree, select_series)
from oqgqsp.potentials import morse, quartic, zero
from oqgqsp.units import HBAR_EV_FS

L = 8.0


def test_zero_potential():
    s = fourier_coefficients(zero(), 0.3, L, 5)
    expected = np.zeros(11)
    expected[5] = 1.0
    np.testing.assert_allclose(s.coeffs, expected, atol=1e-14)
    assert s.tail_bound <= 1e-14


def test_direct_cosine():
    s = fourier_coefficients(lambda x: np.cos(np.pi * x / L), L=L, d=3)
    assert s.coefficient(1) == pytest.approx(0.5, abs=1e-14)
    assert s.coefficient(-1) == pytest.approx(0.5, abs=1e-14)
    assert abs(s.coefficient(0)) < 1e-14


def test_target_exact_in_core(morse_26_2):
    t = PhaseTarget(morse_26_2, 0.3, L)
    x = np.linspace(-0.75 * L, 0.75 * L, 301)
    raw = np.exp(-1j * 0.3 * morse_26_2(x) / HBAR_EV_FS)
    np.testing.assert_allclose(t(x), raw, atol=1e-13)
    # periodic and smooth across the seam
    assert abs(t(-L) - t(L)) < 1e-12


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_morse_coefficients_match_adaptive_quadrature(morse_26_2):
    s = fourier_coefficients(morse_26_2, 0.3, L, 39)
    g = s.target

    def coeff(k):
        kern = lambda x, part: part(g(x) * np.exp(-1j * np.pi * k * x / L))
        opts = dict(limit=400, epsabs=1e-14, epsrel=1e-13)
        re = quad(kern, -L, L, args=(np.real,), **opts)[0]
        im = quad(kern, -L, L, args=(np.imag,), **opts)[0]
        return (re + 1j * im) / (2 * L)

    for k in (-39, -17, 0, 5, 23, 39):
        assert abs(s.coefficient(k) - coeff(k)) <= 1e-10


def test_error_decays_with_degree(morse_26_2):
    errs = [fourier_coefficients(morse_26_2, 0.3, L, d).tail_bound for d in (10, 20, 30, 39)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    slope = np.polyfit([10, 20, 30, 39], np.log(errs), 1)[0]
    assert slope < 0


def test_modulus_near_one(morse_26_2):
    s = fourier_coefficients(morse_26_2, 0.3, L, 30)
    x = np.linspace(-L, L, 4001)
    mod = np.abs(s(x))
    assert np.all(mod >= 1 - 2 * s.tail_bound) and np.all(mod <= 1 + 2 * s.tail_bound)


def test_select_degree_formula():
    expected = int(np.ceil(np.log(2 / ((1 - np.exp(-np.pi)) * 1e-3)) / np.pi))
    assert select_degree(1.0, L, L, 1e-3) == expected == 3


@pytest.mark.parametrize("B", [1.0, 5.0, 1e3])
def test_select_degree_monotone(B):
    eps = [1e-1, 1e-3, 1e-6, 1e-9]
    ds = [select_degree(B, 2.0, L, e) for e in eps]
    assert ds == sorted(ds)
    sig = [0.5, 1.0, 4.0, 8.0]
    ds = [select_degree(B, s, L, 1e-6) for s in sig]
    assert ds == sorted(ds, reverse=True)
    d = select_degree(B, 2.0, L, 1e-6)
    assert analytic_tail_bound(B, 2.0, L, d) <= 1e-6
    rho = np.exp(np.pi * 2.0 / L)
    assert d == int(np.ceil(L / (np.pi * 2.0) * np.log(2 * B / ((1 - 1 / rho) * 1e-6))))


def test_envelope_bounds_coefficients(morse_26_2):
    t = PhaseTarget(morse_26_2, 0.3, L)
    B, sigma = envelope_strip(t, L)
    c = fourier_coefficients(t, L=L, d=80, certify=False)
    bound = B * np.exp(-np.pi * sigma * np.abs(c.ks) / L)
    assert np.all(np.abs(c.coeffs) <= bound * (1 + 1e-9) + 1e-13)


def test_select_series_meets_epsilon(morse_26_2):
    s = select_series(morse_26_2, 0.3, L, 1e-3)
    assert s.tail_bound <= 1e-3
    lower = fourier_coefficients(morse_26_2, 0.3, L, s.d - 1)
    assert s.d >= s.formula_degree or lower.tail_bound > 1e-3
    assert certify_tail(s) == pytest.approx(s.tail_bound)


def test_series_csv_round_trip(morse_26_2):
    s = fourier_coefficients(morse_26_2, 0.3, L, 6)
    again = FourierSeries.from_csv(s.to_csv())
    np.testing.assert_array_equal(again.coeffs, s.coeffs)
    assert (again.L, again.d, again.delta_t, again.tail_bound) == (s.L, s.d, s.delta_t,
                                                                    s.tail_bound)
    with pytest.raises(ValueError):
        FourierSeries.from_csv("k,re,im\n0,1.0,0.0\n")


def test_estimator_api(morse_26_2):
    est = FourierPhaseApproximator(potential=morse_26_2, degree=20)
    assert clone(est).get_params()["degree"] == 20
    est.fit()
    x = np.linspace(-5, 5, 50)
    assert est.predict(x[:, None]).shape == (50,)
    assert -est.score(x) <= est.tail_bound_ + 1e-15
    with pytest.raises(ValueError):
        FourierPhaseApproximator().fit()


def test_half_series_squares_to_full(morse_26_2):
    half = PhaseTarget(morse_26_2, 0.3, L, fraction=0.5)
    full = PhaseTarget(morse_26_2, 0.3, L)
    x = np.linspace(-6, 6, 101)
    np.testing.assert_allclose(half(x) ** 2, full(x), atol=1e-12)


def test_quartic_target_periodizes():
    t = PhaseTarget(quartic(0.03317), 0.3, L)
    assert abs(t(-L) - t(L)) < 1e-12
    s = fourier_coefficients(t, L=L, d=60)
    assert s.tail_bound < 1e-3
