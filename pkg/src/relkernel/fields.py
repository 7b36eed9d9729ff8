"""Periodic torus grids and complex grid functions.

Everything downstream (kernels, operator matrices, steppers) lives on a
d-dimensional torus [-L/2, L/2)^d with N sites per axis, diagonalized by the
DFT.  Sites are x_j = -L/2 + j L/N and the frequency set per axis is
{2 pi k / L : k = -N/2 .. N/2-1}, stored in FFT order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Torus discretization: `d` axes, `n` sites per axis, box length `length`."""

    d: int
    n: int
    length: float

    @property
    def n_sites(self) -> int:
        return self.n**self.d

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return (self.length / self.n) ** self.d

    def axis_coords(self) -> np.ndarray:
        return -0.5 * self.length + self.spacing * np.arange(self.n)

    def axis_freqs(self) -> np.ndarray:
        """Angular frequencies 2 pi k / L in FFT order (k = 0..N/2-1, -N/2..-1)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Reduce points into the fundamental box [-L/2, L/2)."""
        half = 0.5 * self.length
        return np.mod(np.asarray(x) + half, self.length) - half

    def min_image(self, disp: np.ndarray) -> np.ndarray:
        """Minimal-image representative of a displacement on the torus."""
        half = 0.5 * self.length
        return np.mod(np.asarray(disp) + half, self.length) - half


def make_grid(d: int, n: int, length: float) -> GridSpec:
    if d not in (1, 2, 3):
        raise ValueError(f"grid dimension must be 1, 2 or 3, got {d}")
    if n < 8 or (n & (n - 1)) != 0:
        raise ValueError(f"points per axis must be a power of two >= 8, got {n}")
    if not length > 0:
        raise ValueError(f"box length must be positive, got {length}")
    return GridSpec(d=d, n=n, length=float(length))


@lru_cache(maxsize=32)
def grid_sites(grid: GridSpec) -> np.ndarray:
    """All site coordinates, shape (n_sites, d), row-major axis ordering."""
    axes = [grid.axis_coords()] * grid.d
    mesh = np.meshgrid(*axes, indexing="ij")
    out = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def grid_freqs(grid: GridSpec) -> np.ndarray:
    """All frequency vectors in FFT order, shape (n_sites, d)."""
    axes = [grid.axis_freqs()] * grid.d
    mesh = np.meshgrid(*axes, indexing="ij")
    out = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Field:
    """Complex-valued grid function, values flattened row-major over sites."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.n_sites,):
            raise ValueError(
                f"field length {v.shape} does not match grid with {self.grid.n_sites} sites"
            )
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def l2_norm(self) -> float:
        """Continuum L2 norm: (L/N)^{d/2} times the euclidean norm."""
        return float(np.sqrt(self.grid.cell_volume) * np.linalg.norm(self.values))

    def l2_inner(self, other: "Field") -> complex:
        return complex(self.grid.cell_volume * np.vdot(self.values, other.values))


def field_from_function(grid: GridSpec, fn) -> Field:
    """Sample a closed-form function of position onto the grid."""
    return Field(grid, np.asarray(fn(grid_sites(grid)), dtype=np.complex128))


def fft_field(field: Field) -> np.ndarray:
    """Flattened FFT coefficients of a field (numpy convention, FFT order)."""
    g = field.grid
    shape = (g.n,) * g.d
    return np.fft.fftn(field.values.reshape(shape)).reshape(-1)


def ifft_coeffs(grid: GridSpec, coeffs: np.ndarray) -> Field:
    shape = (grid.n,) * grid.d
    vals = np.fft.ifftn(np.asarray(coeffs).reshape(shape)).reshape(-1)
    return Field(grid, vals)


def spectral_interpolate(field: Field, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of a field at arbitrary points.

    Exact on grid sites; the natural off-grid extension of the band-limited
    representation.  `points` has shape (..., d).
    """
    g = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = fft_field(field) / g.n_sites
    freqs = grid_freqs(g)
    # site x_j corresponds to phase exp(i xi . (x + L/2))
    phase = np.exp(1j * (pts + 0.5 * g.length) @ freqs.T)
    out = phase @ coeffs
    return out.reshape(np.asarray(points).shape[:-1])


class PairBlock:
    """Pair geometry for a block of matrix rows.

    For rows i in `rows` and all columns j: `shift` is the flat circulant
    index of the lattice displacement (for kernel-row lookup), and
    (`disp_a`, `mid_a`) / (`disp_b`, `mid_b`) are the two minimal-image
    resolutions of the segment from s_i to s_j.  They differ only on the
    Nyquist shell (displacement exactly L/2 along an axis), where the minimal
    image is ambiguous; entrywise quantities built from them must average the
    two branches, which restores exact Hermiticity of phase matrices.
    """

    __slots__ = ("shift", "disp_a", "disp_b", "mid_a", "mid_b")

    def __init__(self, grid: GridSpec, rows: np.ndarray):
        n, d = grid.n, grid.d
        multi = np.stack(np.unravel_index(np.arange(grid.n_sites), (n,) * d), axis=-1)
        rel = (multi[None, :, :] - multi[rows][:, None, :]) % n  # (nrows, ns, d)
        self.shift = np.ravel_multi_index(np.moveaxis(rel, -1, 0), (n,) * d)
        rel_a = np.where(rel >= n // 2, rel - n, rel).astype(float)
        rel_b = np.where(rel > n // 2, rel - n, rel).astype(float)
        self.disp_a = rel_a * grid.spacing
        self.disp_b = rel_b * grid.spacing
        sites = grid_sites(grid)
        self.mid_a = grid.wrap(sites[rows][:, None, :] + 0.5 * self.disp_a)
        self.mid_b = grid.wrap(sites[rows][:, None, :] + 0.5 * self.disp_b)


def pair_blocks(grid: GridSpec, block_rows: int = 256):
    """Iterate (row_indices, PairBlock) over the matrix rows in blocks."""
    ns = grid.n_sites
    for start in range(0, ns, block_rows):
        rows = np.arange(start, min(start + block_rows, ns))
        yield rows, PairBlock(grid, rows)
