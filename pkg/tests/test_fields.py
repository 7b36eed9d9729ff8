import numpy as np
import pytest

from relkernel.fields import (
    Field,
    PairBlock,
    field_from_function,
    fft_field,
    grid_freqs,
    grid_sites,
    ifft_coeffs,
    make_grid,
    pair_blocks,
    spectral_interpolate,
)


def test_grid_frequencies_exact():
    grid = make_grid(1, 8, 2 * np.pi)
    freqs = sorted(grid.axis_freqs())
    assert freqs == [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]


def test_grid_sites_and_spacing():
    grid = make_grid(2, 16, 10.0)
    assert grid.n_sites == 256
    assert grid.spacing == 0.625
    sites = grid_sites(grid)
    assert sites.shape == (256, 2)
    assert sites[0, 0] == -5.0
    # row-major: last axis varies fastest
    assert sites[1, 1] - sites[0, 1] == pytest.approx(0.625)


@pytest.mark.parametrize("d,n,length", [(1, 7, 1.0), (1, 4, 1.0), (4, 8, 1.0), (1, 8, 0.0)])
def test_make_grid_rejects(d, n, length):
    with pytest.raises(ValueError):
        make_grid(d, n, length)


def test_parseval_roundtrip():
    rng = np.random.default_rng(0)
    for d in (1, 2):
        grid = make_grid(d, 16, 5.0)
        vals = rng.standard_normal(grid.n_sites) + 1j * rng.standard_normal(grid.n_sites)
        f = Field(grid, vals)
        back = ifft_coeffs(grid, fft_field(f))
        assert np.max(np.abs(back.values - vals)) < 1e-12 * np.max(np.abs(vals))


def test_l2_norm_scaling():
    grid = make_grid(1, 8, 4.0)
    f = Field(grid, np.ones(8))
    # (L/N)^{1/2} * sqrt(8) = sqrt(L)
    assert f.l2_norm() == pytest.approx(2.0)


def test_field_validation():
    grid = make_grid(1, 8, 4.0)
    with pytest.raises(ValueError):
        Field(grid, np.ones(7))
    with pytest.raises(ValueError):
        Field(grid, np.array([np.nan] + [0.0] * 7))


def test_spectral_interpolation_matches_sites_and_modes():
    grid = make_grid(1, 16, 8.0)
    xi = 2 * np.pi * 2 / 8.0
    f = field_from_function(grid, lambda x: np.exp(1j * xi * x[..., 0]))
    sites = grid_sites(grid)
    at_sites = spectral_interpolate(f, sites)
    assert np.max(np.abs(at_sites - f.values)) < 1e-12
    x_off = np.array([[0.3], [-1.234]])
    assert np.max(np.abs(spectral_interpolate(f, x_off) - np.exp(1j * xi * x_off[:, 0]))) < 1e-12


def test_wrap_and_min_image():
    grid = make_grid(1, 8, 8.0)
    assert grid.wrap(np.array([4.0]))[0] == -4.0
    assert grid.min_image(np.array([5.0]))[0] == -3.0
    assert grid.min_image(np.array([-5.0]))[0] == 3.0


def test_pair_block_branches_differ_only_on_nyquist():
    grid = make_grid(1, 8, 8.0)
    rows = np.arange(grid.n_sites)
    pb = PairBlock(grid, rows)
    differ = np.any(pb.disp_a != pb.disp_b, axis=-1)
    # displacement L/2 = index shift n/2
    expect = np.abs(pb.disp_a[..., 0]) == 4.0
    assert np.array_equal(differ, expect)
    # wrapped midpoints stay in the box
    for mid in (pb.mid_a, pb.mid_b):
        assert mid.min() >= -4.0 and mid.max() < 4.0


def test_pair_blocks_cover_all_rows():
    grid = make_grid(2, 8, 8.0)
    seen = np.concatenate([rows for rows, _ in pair_blocks(grid, block_rows=24)])
    assert np.array_equal(seen, np.arange(64))
