import numpy as np
import pytest

from relkernel.symbols import (
    _FLOAT_SERIES_MAX,
    _SEAM,
    _k_asymptotic,
    _kn_series_float,
    _kn_series_mp,
    bessel_k,
    symbol_of_norm,
    symbol_value,
)
from _oracles import bessel_k_quad


def test_symbol_examples():
    assert symbol_of_norm(1.0, 0.0) == 0.0
    assert symbol_of_norm(1.0, 1.0) == pytest.approx(np.sqrt(2) - 1, abs=1e-15)
    assert symbol_of_norm(0.0, 3.0) == 3.0
    assert symbol_value(1.0, np.array([0.6, 0.8])) == pytest.approx(np.sqrt(2) - 1)


def test_symbol_cancellation_safe_small_argument():
    # naive sqrt(r^2+m^2)-m loses all digits here; safe form keeps r^2/(2m)
    r = 1e-9
    val = float(symbol_of_norm(1.0, r))
    assert val == pytest.approx(r * r / 2.0, rel=1e-12)


def test_symbol_bounds_and_lipschitz():
    rng = np.random.default_rng(42)
    m = rng.uniform(0, 3, size=1000)
    r = rng.uniform(0, 10, size=1000)
    s = np.array([symbol_of_norm(mi, ri) for mi, ri in zip(m, r)])
    assert np.all(s >= 0) and np.all(s <= r + 1e-15)
    # 1-Lipschitz in |xi|
    r2 = r + rng.uniform(0, 1, size=1000)
    s2 = np.array([symbol_of_norm(mi, ri) for mi, ri in zip(m, r2)])
    assert np.all(np.abs(s2 - s) <= np.abs(r2 - r) + 1e-12)


def test_half_integer_orders_closed_form():
    assert bessel_k(0.5, 1.0) == pytest.approx(np.sqrt(np.pi / 2) * np.exp(-1), abs=1e-15)
    assert bessel_k(1.5, 2.0) == pytest.approx(
        np.sqrt(np.pi / 4) * np.exp(-2) * 1.5, abs=1e-15
    )


@pytest.mark.parametrize(
    "nu,z,frozen",
    [
        (0.5, 1.0, 0.46106850444789454),
        (1.5, 2.0, 0.17990665795209218),
        (1.0, 1.0, 0.6019072301972346),
    ],
)
def test_bessel_spot_values_frozen_and_oracle(nu, z, frozen):
    got = bessel_k(nu, z)
    assert got == pytest.approx(frozen, rel=1e-12)
    assert got == pytest.approx(bessel_k_quad(nu, z), rel=1e-9)


@pytest.mark.parametrize("nu", [1.0, 2.0])
@pytest.mark.parametrize("z", [0.03, 0.7, 4.0, 9.5, 20.0])
def test_integer_orders_against_quadrature(nu, z):
    assert bessel_k(nu, z) == pytest.approx(bessel_k_quad(nu, z), rel=1e-9)


def test_series_asymptotic_seam_agreement():
    for n in (1, 2):
        series = _kn_series_mp(n, _SEAM)
        asym = float(_k_asymptotic(float(n), np.array([_SEAM]))[0])
        assert abs(series - asym) <= 1e-10 * series
        # internal float/extended handoff agrees too
        f = float(_kn_series_float(n, np.array([_FLOAT_SERIES_MAX]))[0])
        assert abs(f - _kn_series_mp(n, _FLOAT_SERIES_MAX)) < 1e-10 * f


@pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.0])
def test_monotone_decreasing(nu):
    z = np.geomspace(1e-3, 50.0, 100)
    vals = bessel_k(nu, z)
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("z", [0.01, 0.5, 2.0, 8.0, 15.0, 40.0])
def test_recurrence_links_orders(z):
    # K_{nu+1}(z) = K_{nu-1}(z) + (2 nu / z) K_nu(z) at nu = 1 and nu = 3/2
    k_half = bessel_k(0.5, z)
    k_one = bessel_k(1.0, z)
    k_three_half = bessel_k(1.5, z)
    k_two = bessel_k(2.0, z)
    assert k_three_half == pytest.approx(k_half + (2 * 1.0 / z) * k_one, rel=1e-9)
    assert k_two == pytest.approx(k_one + (2 * 1.5 / z) * k_three_half, rel=1e-9)


def test_bessel_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_k(1.0, 0.0)
    with pytest.raises(ValueError):
        bessel_k(1.0, -1.0)
    with pytest.raises(ValueError):
        bessel_k(3.0, 1.0)


def test_bessel_vectorized_matches_scalar():
    z = np.array([0.2, 1.0, 7.5, 30.0])
    vec = bessel_k(1.0, z)
    for i, zi in enumerate(z):
        assert vec[i] == bessel_k(1.0, float(zi))
