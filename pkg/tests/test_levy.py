import math

import numpy as np
import pytest
from scipy import stats

from relkernel.fields import make_grid
from relkernel.levy import (
    RngStream,
    levy_density,
    levy_density_radial,
    sample_path_skeleton,
    sample_relativistic_increment,
    sample_subordinator_increment,
    sample_subordinator_path,
    verify_levy_khinchin,
)
from relkernel.propagators import free_relativistic_kernel
from relkernel.symbols import symbol_of_norm
from _oracles import bessel_k_quad, normal_cdf


def test_density_spot_values():
    assert levy_density_radial(0, 1, 1.0) == pytest.approx(1 / math.pi, abs=1e-14)
    assert levy_density_radial(0, 3, 2.0) == pytest.approx(
        1 / (16 * math.pi**2), abs=1e-14
    )
    k1 = bessel_k_quad(1.0, 1.0)
    assert levy_density_radial(1, 1, 1.0) == pytest.approx(k1 / math.pi, rel=1e-9)
    # vector form agrees with the radial form
    assert levy_density(1, 2, np.array([0.6, 0.8])) == pytest.approx(
        levy_density_radial(1, 2, 1.0)
    )


def test_density_rejects_origin_and_bad_dim():
    with pytest.raises(ValueError):
        levy_density_radial(1, 1, 0.0)
    with pytest.raises(ValueError):
        levy_density_radial(1, 4, 1.0)


def test_density_small_mass_continuity():
    r = np.geomspace(0.5, 5.0, 9)
    for d in (1, 2, 3):
        small = levy_density_radial(1e-5, d, r)
        zero = levy_density_radial(0.0, d, r)
        assert np.max(np.abs(small / zero - 1.0)) < 1e-3


def test_levy_khinchin_zero_frequency():
    assert verify_levy_khinchin(1.0, 1, 0.0, 1e-6, 1e4) == 0.0


def test_levy_khinchin_examples():
    assert verify_levy_khinchin(0.0, 1, 1.0, 1e-6, 1e4) < 1e-4
    assert verify_levy_khinchin(1.0, 1, 2.0, 1e-6, 1e4) < 1e-4


def test_levy_khinchin_monotone_refinement():
    xis = (0.5, 1.0, 1.5, 2.0, 3.0)
    for m in (0.0, 1.0):
        for d in (1, 2):
            for xi in xis:
                res = [
                    verify_levy_khinchin(m, d, xi, 1e-6 / 2**k, 1e4 * 2**k)
                    for k in range(3)
                ]
                assert res[1] <= res[0] and res[2] <= res[1]


def test_levy_khinchin_d3():
    assert verify_levy_khinchin(1.0, 3, 1.0, 1e-6, 1e4) < 1e-4


def test_levy_khinchin_validates_truncation():
    with pytest.raises(ValueError):
        verify_levy_khinchin(1.0, 1, 1.0, 2.0, 1e4)


def test_subordinator_moments_m1():
    rng = RngStream(2024, 0).generator()
    draws = sample_subordinator_increment(1.0, 1.0, rng, size=(1_000_000,))
    mean, sd = draws.mean(), draws.std(ddof=1)
    # Wald: E[T(1)] = 1/m = 1, Var = 1/m^3 = 1
    assert abs(mean - 1.0) < 3 * sd / 1000
    assert abs(draws.var(ddof=1) - 1.0) < 0.02


def test_subordinator_laplace_transform_identity():
    # Fourier-side subordination: E[e^{-T(t) xi^2/2}] = e^{-t(sqrt(xi^2+m^2)-m)}
    rng = RngStream(99, 1).generator()
    t = 0.7
    draws = sample_subordinator_increment(1.0, t, rng, size=(1_000_000,))
    for xi in np.linspace(0.3, 4.0, 10):
        samples = np.exp(-draws * xi**2 / 2.0)
        se = samples.std(ddof=1) / 1000
        want = np.exp(-t * symbol_of_norm(1.0, xi))
        assert abs(samples.mean() - want) < 3 * se


def test_subordinator_massless_first_passage_law():
    # reflection principle: P(T(1) > 1) = 1 - 2 Phi(-1)
    rng = RngStream(5, 0).generator()
    draws = sample_subordinator_increment(0.0, 1.0, rng, size=(1_000_000,))
    p_hat = float(np.mean(draws > 1.0))
    want = 1.0 - 2.0 * normal_cdf(-1.0)
    assert abs(p_hat - want) < 3 * math.sqrt(want * (1 - want) / 1_000_000)


def test_subordinator_exchangeability():
    rng = RngStream(31, 0).generator()
    n = 400_000
    a = sample_subordinator_increment(1.0, 0.4, rng, size=(n,))
    b = sample_subordinator_increment(1.0, 0.6, rng, size=(n,))
    c = sample_subordinator_increment(1.0, 1.0, rng, size=(n,))
    se = math.sqrt(a.var() + b.var() + c.var()) / math.sqrt(n)
    assert abs((a + b).mean() - c.mean()) < 3 * se


def test_subordinator_path_trivial_and_monotone():
    rng = RngStream(0, 0).generator()
    p = sample_subordinator_path(1.0, [0.0], rng)
    assert p.values.tolist() == [0.0]
    # 1e5 paths, monotone by construction, asserted
    incs = sample_subordinator_increment(1.0, 0.5, rng, size=(100_000, 4))
    assert np.all(np.cumsum(incs, axis=1)[:, 1:] >= np.cumsum(incs, axis=1)[:, :-1])
    path = sample_subordinator_path(1.0, [0.0, 1.0, 2.0], rng)
    assert np.all(np.diff(path.values) >= 0)


def test_subordinator_path_additivity_mean():
    rng = RngStream(8, 0).generator()
    totals = [
        sample_subordinator_path(1.0, [0.0, 1.0, 2.0], rng).values[-1]
        for _ in range(20_000)
    ]
    totals = np.asarray(totals)
    assert abs(totals.mean() - 2.0) < 3 * totals.std(ddof=1) / math.sqrt(len(totals))


def test_relativistic_increment_characteristic_function():
    rng = RngStream(17, 0).generator()
    draws = sample_relativistic_increment(1.0, 1, 0.5, rng, size=1_000_000)[:, 0]
    phases = np.exp(1j * draws)
    want = math.exp(-0.5 * float(symbol_of_norm(1.0, 1.0)))
    se = phases.real.std(ddof=1) / 1000
    assert abs(phases.real.mean() - want) < 3 * se
    # isotropy: mean -> 0
    assert abs(draws.mean()) < 3 * draws.std(ddof=1) / 1000


def test_relativistic_increment_additivity_ks():
    rng = RngStream(23, 0).generator()
    n = 200_000
    halves = sample_relativistic_increment(1.0, 1, 0.25, rng, size=(n, 2)).sum(axis=1)[:, 0]
    whole = sample_relativistic_increment(1.0, 1, 0.5, rng, size=n)[:, 0]
    assert stats.ks_2samp(halves, whole).pvalue > 0.01


def test_path_skeleton_basics():
    rng = RngStream(4, 0).generator()
    sk = sample_path_skeleton(1.0, 2, [0.5, -0.5], 1.0, 1, rng)
    assert sk.positions.shape == (2, 2)
    assert sk.times.tolist() == [0.0, 1.0]
    assert np.allclose(sk.positions[0], [0.5, -0.5])


def test_massless_skeleton_is_cauchy():
    rng = RngStream(12, 0).generator()
    n = 400_000
    incs = sample_relativistic_increment(0.0, 1, 0.25, rng, size=(n, 4))
    endpoints = incs.sum(axis=1)[:, 0]
    t = 1.0
    med = np.median(endpoints)
    # median standard error for Cauchy: pi t / (2 sqrt(n))
    assert abs(med) < 3 * math.pi * t / (2 * math.sqrt(n))
    p_half = float(np.mean(np.abs(endpoints) < t))
    assert abs(p_half - 0.5) < 3 * math.sqrt(0.25 / n)


def test_skeleton_marginal_matches_kernel_histogram():
    m, t = 1.0, 0.8
    rng = RngStream(77, 0).generator()
    n = 200_000
    endpoints = sample_relativistic_increment(m, 1, t / 4, rng, size=(n, 4)).sum(axis=1)[:, 0]
    grid = make_grid(1, 256, 24.0)
    ker = free_relativistic_kernel(grid, m, t)
    disp = ker.displacements()[:, 0]
    order = np.argsort(disp)
    centers, dens = disp[order], ker.values[order]
    edges = np.linspace(-4.0, 4.0, 33)
    probs = np.empty(32)
    for i in range(32):
        inside = (centers >= edges[i]) & (centers < edges[i + 1])
        probs[i] = np.sum(dens[inside]) * grid.cell_volume
    counts, _ = np.histogram(endpoints, bins=edges)
    keep = probs * n >= 20
    chi2 = float(np.sum((counts[keep] - n * probs[keep]) ** 2 / (n * probs[keep])))
    dof = int(keep.sum()) - 1
    assert chi2 < stats.chi2.ppf(0.999, dof)


def test_rng_stream_determinism_and_independence():
    a1 = RngStream(123, 0).generator().standard_normal(16)
    a2 = RngStream(123, 0).generator().standard_normal(16)
    b = RngStream(123, 1).generator().standard_normal(16)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    p1 = sample_path_skeleton(1.0, 1, [0.0], 1.0, 8, RngStream(9, 3).generator())
    p2 = sample_path_skeleton(1.0, 1, [0.0], 1.0, 8, RngStream(9, 3).generator())
    assert np.array_equal(p1.positions, p2.positions)
