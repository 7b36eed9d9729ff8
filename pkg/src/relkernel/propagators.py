"""Free semigroup kernels on the torus, by Fourier diagonalization.

The relativistic kernel k0(t, .) of exp(-t [sqrt(-Delta + m^2) - m]) and the
Gaussian heat kernel of exp(-t (-Delta/2)), both exact on the torus: the
symbol is sampled on the frequency grid and inverted with the FFT.  Kernels
are never computed by quadrature of the oscillatory integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, GridSpec, fft_field, grid_freqs, ifft_coeffs
from .symbols import symbol_value


@dataclass(frozen=True)
class KernelOnGrid:
    """Translation-invariant kernel row: density values over displacement sites.

    values[j] is the kernel at the lattice displacement with flat FFT index j
    (axis displacements j*h for j < N/2, (j-N)*h above).  The row sums to
    1/cell_volume, i.e. unit mass, because the symbol vanishes at xi = 0.
    """

    grid: GridSpec
    t: float
    values: np.ndarray

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def displacements(self) -> np.ndarray:
        ax = self.grid.spacing * np.arange(self.grid.n)
        ax = np.where(ax >= 0.5 * self.grid.length, ax - self.grid.length, ax)
        mesh = np.meshgrid(*([ax] * self.grid.d), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def spectral_row(grid: GridSpec, spectrum: np.ndarray) -> np.ndarray:
    """Real circulant row with the given (real, even) Fourier multiplier."""
    shape = (grid.n,) * grid.d
    row = np.fft.ifftn(np.asarray(spectrum, dtype=complex).reshape(shape)).reshape(-1)
    imag = np.max(np.abs(row.imag))
    if imag > 1e-12 * max(1.0, np.max(np.abs(row.real))):
        raise ValueError(f"kernel row has non-negligible imaginary part {imag:.2e}")
    return np.ascontiguousarray(row.real)


def _kernel(grid: GridSpec, multiplier: np.ndarray, t: float) -> KernelOnGrid:
    row = spectral_row(grid, multiplier) / grid.cell_volume
    return KernelOnGrid(grid=grid, t=t, values=row)


def free_relativistic_kernel(grid: GridSpec, m: float, t: float) -> KernelOnGrid:
    if t <= 0:
        raise ValueError("t must be positive")
    return _kernel(grid, np.exp(-t * symbol_value(m, grid_freqs(grid))), t)


def free_heat_kernel(grid: GridSpec, t: float) -> KernelOnGrid:
    if t <= 0:
        raise ValueError("t must be positive")
    xi2 = np.sum(grid_freqs(grid) ** 2, axis=-1)
    return _kernel(grid, np.exp(-0.5 * t * xi2), t)


def apply_free_semigroup(field: Field, m: float, t: float) -> Field:
    """exp(-t [sqrt(-Delta+m^2) - m]) acting on a field, exact on the torus."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    mult = np.exp(-t * symbol_value(m, grid_freqs(field.grid)))
    return ifft_coeffs(field.grid, mult * fft_field(field))


def apply_heat_semigroup(field: Field, t: float) -> Field:
    """exp(-t (-Delta/2)) acting on a field."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    xi2 = np.sum(grid_freqs(field.grid) ** 2, axis=-1)
    return ifft_coeffs(field.grid, np.exp(-0.5 * t * xi2) * fft_field(field))


def circle_poisson_kernel(t: float, x, length: float) -> np.ndarray:
    """Closed form of the massless d=1 kernel periodized to the circle.

    (1/L) sinh(2 pi t / L) / (cosh(2 pi t / L) - cos(2 pi x / L)); the
    geometric sum of exp(-t |xi|) over the circle frequencies.  Used as the
    independent oracle for the FFT kernel; its gap to the R^1 Cauchy density
    t / (pi (t^2 + x^2)) is the periodization error.
    """
    s = 2.0 * np.pi * t / length
    u = 2.0 * np.pi * np.asarray(x, dtype=float) / length
    return (1.0 / length) * np.sinh(s) / (np.cosh(s) - np.cos(u))
