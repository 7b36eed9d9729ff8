import numpy as np
import pytest

from relkernel.fields import make_grid, grid_sites
from relkernel.potentials import (
    GaussianBumpVector,
    GradientVector,
    LinearVector,
    PotentialSpec,
    line_integral_a,
    potential_preset,
    sample_potential,
    scalar_preset,
    vector_preset,
)
from _oracles import line_average_quad


def test_sample_potential_zero():
    grid = make_grid(1, 16, 8.0)
    pots = potential_preset("zero", "zero", 0.0, 1)
    a, v = sample_potential(pots, grid)
    assert not a.any() and not v.any()


def test_linear_vector_pointwise():
    vec = LinearVector(matrix=((1.0,),))
    assert vec.a(np.array([0.5]))[0] == 0.5


def test_harmonic_scalar_example():
    sc = scalar_preset("harmonic")
    assert sc.v(np.array([2.0])) == pytest.approx(2.0)  # omega=1: x^2/2


def test_line_integral_linear_equals_midpoint():
    vec = LinearVector(matrix=((1.0,),))
    pots = PotentialSpec(vec, scalar_preset("zero"), 0.0)
    val = line_integral_a(pots, np.array([0.0]), np.array([2.0]))
    assert val[0] == 1.0  # A(midpoint) exactly
    rng = np.random.default_rng(7)
    mat = np.array([[0.7, 0.2], [0.2, -0.4]])
    vec2 = LinearVector(matrix=tuple(map(tuple, mat)))
    for _ in range(100):
        x, y = rng.uniform(-5, 5, size=(2, 2))
        diff = vec2.line_average(x, y) - vec2.a(0.5 * (x + y))
        assert np.max(np.abs(diff)) == 0.0


def test_line_integral_zero():
    pots = potential_preset("zero", "zero", 0.0, 2)
    assert not line_integral_a(pots, np.zeros(2), np.ones(2)).any()


@pytest.mark.parametrize("d", [1, 2, 3])
def test_bump_line_average_against_quadrature(d):
    vec = vector_preset("bump", d)
    rng = np.random.default_rng(d)
    pairs = [(-np.ones(d), np.ones(d))] + [
        tuple(rng.uniform(-3, 3, size=(2, d))) for _ in range(5)
    ]
    for x, y in pairs:
        got = vec.line_average(np.asarray(x, float), np.asarray(y, float))
        want = line_average_quad(vec.a, x, y, n=1024)
        assert np.max(np.abs(got - want)) < 1e-12


def test_bump_line_average_degenerate_pair():
    vec = vector_preset("bump", 2)
    x = np.array([0.3, -0.2])
    assert np.allclose(vec.line_average(x, x), vec.a(x), rtol=0, atol=1e-15)


def test_work_integral_antisymmetry():
    rng = np.random.default_rng(3)
    for name in ("bump", "linear", "gauge_cubic_bump"):
        vec = vector_preset(name, 2)
        for _ in range(20):
            x, y = rng.uniform(-3, 3, size=(2, 2))
            lhs = np.dot(vec.line_average(x, y), y - x)
            rhs = -np.dot(vec.line_average(y, x), x - y)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_gradient_preset_work_integral_is_phi_difference():
    gauge = vector_preset("gauge_cubic_bump", 2)
    rng = np.random.default_rng(11)
    for _ in range(50):
        x, y = rng.uniform(-3, 3, size=(2, 2))
        work = np.dot(gauge.line_average(x, y), y - x)
        assert work == pytest.approx(gauge.phi(y) - gauge.phi(x), abs=1e-13)


def test_gradient_preset_is_gradient_of_phi():
    gauge = vector_preset("gauge_cubic_bump", 1)
    x = np.linspace(-2.5, 2.5, 41)[:, None]
    h = 1e-6
    numeric = (gauge.phi(x + h) - gauge.phi(x - h)) / (2 * h)
    assert np.max(np.abs(gauge.a(x)[:, 0] - numeric)) < 1e-7


def test_gradient_line_average_against_quadrature():
    gauge = vector_preset("gauge_cubic_bump", 3)
    x = np.array([-1.0, 0.5, 0.2])
    y = np.array([1.5, -0.7, 0.9])
    want = line_average_quad(gauge.a, x, y, n=1024)
    assert np.max(np.abs(gauge.line_average(x, y) - want)) < 1e-12


def test_potential_spec_validation():
    with pytest.raises(ValueError):
        potential_preset("bump", "zero", -1.0, 1)
    with pytest.raises(ValueError):
        vector_preset("nope", 1)
    with pytest.raises(ValueError):
        scalar_preset("nope")
    with pytest.raises(ValueError):
        LinearVector(matrix=((0.0, 1.0), (0.5, 0.0)))


def test_bump_amplitudes_vectorized_shapes():
    vec = vector_preset("bump", 2)
    pts = np.zeros((5, 7, 2))
    assert vec.a(pts).shape == (5, 7, 2)
    assert vec.line_average(pts, pts + 0.1).shape == (5, 7, 2)


def test_sample_potential_grid_values():
    grid = make_grid(1, 64, 16.0)
    pots = potential_preset("bump", "harmonic", 1.0, 1)
    a, v = sample_potential(pots, grid)
    sites = grid_sites(grid)
    assert a.shape == (64, 1) and v.shape == (64,)
    assert v[0] == pytest.approx(0.5 * sites[0, 0] ** 2)
