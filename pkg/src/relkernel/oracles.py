"""Dense Hermitian discretizations of the four operators and their exact
semigroups.

H1 and H2 are assembled in the phase-factored form of their defining
pseudo-differential expressions: entry (x, y) is the free-symbol circulant
times exp(i (x-y).a(x,y)) with a the midpoint value of A (H1) or its exact
straight-line average (H2).  This keeps Hermiticity, the linear-A
coincidence H1 = H2, and discrete gauge covariance of H2 exact.  H3 and HNR
are built from spectral covariant derivatives D_a = (Fourier derivative) -
A_a(x); H3 is the matrix square root of sum_a D_a^2 + m^2 via its
eigendecomposition.  These dense matrices, eigendecomposed, are the ground
truth the Chernoff approximants and Monte Carlo estimators are judged
against.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .fields import Field, GridSpec, grid_freqs, grid_sites, pair_blocks
from .potentials import PotentialSpec
from .propagators import spectral_row

SIZE_CAP = 4096

KINDS = ("H1", "H2", "H3", "HNR")


class AssemblyError(RuntimeError):
    """Raised when an assembled matrix violates a structural invariant."""


@dataclass(frozen=True)
class OperatorMatrix:
    grid: GridSpec
    kind: str
    potentials: PotentialSpec
    matrix: np.ndarray
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray
    hermiticity_residual: float

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def semigroup_matrix(self, t: float, subtract_m: bool = True) -> np.ndarray:
        shift = self.potentials.mass if subtract_m else 0.0
        w = np.exp(-t * (self.eigenvalues - shift))
        return (self.eigenvectors * w) @ self.eigenvectors.conj().T

    def apply_semigroup(self, t: float, g: Field, subtract_m: bool = True) -> Field:
        if t < 0:
            raise ValueError("t must be nonnegative")
        shift = self.potentials.mass if subtract_m else 0.0
        w = np.exp(-t * (self.eigenvalues - shift))
        coeffs = self.eigenvectors.conj().T @ g.values
        return Field(g.grid, self.eigenvectors @ (w * coeffs))


def semigroup_apply(
    op: OperatorMatrix, t: float, g: Field, subtract_m: bool = True
) -> Field:
    return op.apply_semigroup(t, g, subtract_m=subtract_m)


def _finish(grid, kind, pots, matrix) -> OperatorMatrix:
    herm = float(np.max(np.abs(matrix - matrix.conj().T)))
    sym = 0.5 * (matrix + matrix.conj().T)
    vals, vecs = np.linalg.eigh(sym)
    return OperatorMatrix(
        grid=grid,
        kind=kind,
        potentials=pots,
        matrix=matrix,
        eigenvalues=vals,
        eigenvectors=vecs,
        hermiticity_residual=herm,
    )


def _check_size(grid: GridSpec):
    if grid.d > 2:
        raise ValueError("dense operator oracles support d = 1 or 2 only")
    if grid.n_sites > SIZE_CAP:
        raise ValueError(f"grid has {grid.n_sites} sites, oracle cap is {SIZE_CAP}")


def magnetic_phase_matrix(
    grid: GridSpec, pots: PotentialSpec, prescription: str
) -> np.ndarray:
    """Unimodular pair matrix exp(-i a(x,y).(y-x)) for a stepper/operator.

    prescription: 'midpoint' evaluates A at the wrapped segment midpoint,
    'line' uses the exact straight-line average, 'endpoint' (test canary)
    evaluates A at the row point, deliberately breaking the pair symmetry.
    The two Nyquist-shell branches of the minimal image are averaged, which
    is what makes the matrix exactly Hermitian.
    """
    ns = grid.n_sites
    out = np.empty((ns, ns), dtype=complex)
    vec = pots.vector
    sites = grid_sites(grid)
    for rows, pb in pair_blocks(grid):
        if prescription == "midpoint":
            wa = np.sum(vec.a(pb.mid_a) * pb.disp_a, axis=-1)
            wb = np.sum(vec.a(pb.mid_b) * pb.disp_b, axis=-1)
        elif prescription == "line":
            wa = np.sum(
                vec.line_average(pb.mid_a - 0.5 * pb.disp_a, pb.mid_a + 0.5 * pb.disp_a)
                * pb.disp_a,
                axis=-1,
            )
            wb = np.sum(
                vec.line_average(pb.mid_b - 0.5 * pb.disp_b, pb.mid_b + 0.5 * pb.disp_b)
                * pb.disp_b,
                axis=-1,
            )
        elif prescription == "endpoint":
            arow = vec.a(sites[rows])[:, None, :]
            wa = np.sum(arow * pb.disp_a, axis=-1)
            wb = np.sum(arow * pb.disp_b, axis=-1)
        else:
            raise ValueError(f"unknown magnetic prescription {prescription!r}")
        out[rows] = 0.5 * (np.exp(-1j * wa) + np.exp(-1j * wb))
    return out


def midpoint_scalar_matrix(grid: GridSpec, pots: PotentialSpec) -> np.ndarray:
    """Pair matrix V((x+y)/2), Nyquist branches averaged."""
    ns = grid.n_sites
    out = np.empty((ns, ns), dtype=float)
    for rows, pb in pair_blocks(grid):
        out[rows] = 0.5 * (pots.scalar.v(pb.mid_a) + pots.scalar.v(pb.mid_b))
    return out


def _free_symbol_circulant(grid: GridSpec, m: float) -> np.ndarray:
    freqs = grid_freqs(grid)
    spectrum = np.sqrt(np.sum(freqs * freqs, axis=-1) + m * m)
    row = spectral_row(grid, spectrum)
    ns = grid.n_sites
    out = np.empty((ns, ns), dtype=float)
    for rows, pb in pair_blocks(grid):
        out[rows] = row[pb.shift]
    return out


def _build_weyl(grid, pots, kind, prescription) -> OperatorMatrix:
    _check_size(grid)
    kin = _free_symbol_circulant(grid, pots.mass) * magnetic_phase_matrix(
        grid, pots, prescription
    )
    mat = kin + np.diag(pots.scalar.v(grid_sites(grid)).astype(complex))
    return _finish(grid, kind, pots, mat)


def build_h1(
    grid: GridSpec, pots: PotentialSpec, _magnetic_eval: str = "midpoint"
) -> OperatorMatrix:
    """Weyl (midpoint) quantization.  `_magnetic_eval` exists for the
    property-suite mutation canary and must stay at its default otherwise."""
    return _build_weyl(grid, pots, "H1", _magnetic_eval)


def build_h2(grid: GridSpec, pots: PotentialSpec) -> OperatorMatrix:
    """Line-integral (Iftimie-Mantoiu-Purice) quantization."""
    return _build_weyl(grid, pots, "H2", "line")


def covariant_derivative_matrices(grid: GridSpec, pots: PotentialSpec) -> list:
    """D_a = (Fourier derivative along axis a) - A_a(x), dense Hermitian."""
    _check_size(grid)
    freqs = grid_freqs(grid)
    a_vals = np.asarray(pots.vector.a(grid_sites(grid)), dtype=float)
    mats = []
    ns = grid.n_sites
    shape = (grid.n,) * grid.d
    for axis in range(grid.d):
        # forward transform / n_sites so the circulant acts as +xi on e^{i xi x};
        # ifftn would give the sign-flipped derivative (odd spectrum)
        row = np.fft.fftn(freqs[:, axis].reshape(shape)).reshape(-1) / ns
        d_mat = np.empty((ns, ns), dtype=complex)
        for rows, pb in pair_blocks(grid):
            d_mat[rows] = row[pb.shift]
        d_mat -= np.diag(a_vals[:, axis])
        mats.append(d_mat)
    return mats


def _kinetic_square(grid, pots) -> np.ndarray:
    mats = covariant_derivative_matrices(grid, pots)
    ns = grid.n_sites
    s0 = np.zeros((ns, ns), dtype=complex)
    for d_mat in mats:
        s0 += d_mat @ d_mat
    return s0


def build_h3(grid: GridSpec, pots: PotentialSpec) -> OperatorMatrix:
    """Operator square root sqrt((-i nabla - A)^2 + m^2) + V."""
    s_mat = _kinetic_square(grid, pots) + pots.mass**2 * np.eye(grid.n_sites)
    s_mat = 0.5 * (s_mat + s_mat.conj().T)
    vals, vecs = np.linalg.eigh(s_mat)
    if vals[0] < -1e-10:
        raise AssemblyError(
            f"kinetic square has negative eigenvalue {vals[0]:.3e}; assembly bug"
        )
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    mat = root + np.diag(pots.scalar.v(grid_sites(grid)).astype(complex))
    return _finish(grid, "H3", pots, mat)


def build_hnr(grid: GridSpec, pots: PotentialSpec) -> OperatorMatrix:
    """Nonrelativistic magnetic Schrodinger operator (1/2)(-i nabla - A)^2 + V."""
    mat = 0.5 * _kinetic_square(grid, pots) + np.diag(
        pots.scalar.v(grid_sites(grid)).astype(complex)
    )
    return _finish(grid, "HNR", pots, mat)


def build_operator(kind: str, grid: GridSpec, pots: PotentialSpec) -> OperatorMatrix:
    builder = {"H1": build_h1, "H2": build_h2, "H3": build_h3, "HNR": build_hnr}
    if kind not in builder:
        raise ValueError(f"unknown operator kind {kind!r}")
    return builder[kind](grid, pots)


def _describe_potentials(pots: PotentialSpec) -> dict:
    def describe(part):
        out = {"kind": part.kind}
        for name in ("matrix", "center", "width", "amplitudes", "amplitude", "beta", "omega"):
            if hasattr(part, name):
                val = getattr(part, name)
                out[name] = val if not isinstance(val, tuple) else list(
                    list(v) if isinstance(v, tuple) else v for v in val
                )
        return out

    return {
        "vector": describe(pots.vector),
        "scalar": describe(pots.scalar),
        "mass": pots.mass,
    }


def export_operator(op: OperatorMatrix, path_stem: str) -> tuple[str, str]:
    """Write the dense matrix to `<stem>.npy` with a JSON sidecar."""
    npy_path = path_stem + ".npy"
    np.save(npy_path, op.matrix)
    payload = np.ascontiguousarray(op.matrix).tobytes()
    sidecar = {
        "kind": op.kind,
        "grid": {"d": op.grid.d, "n": op.grid.n, "length": op.grid.length},
        "potentials": _describe_potentials(op.potentials),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "hermiticity_residual": op.hermiticity_residual,
        "eigenvalue_range": [float(op.eigenvalues[0]), float(op.eigenvalues[-1])],
    }
    json_path = path_stem + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return npy_path, json_path


def gauge_conjugation_residual(
    kind: str,
    grid: GridSpec,
    pots: PotentialSpec,
    gauge,
    on_field: Field | None = None,
) -> float:
    """Residual of H(A + grad phi) = e^{i phi} H(A) e^{-i phi}.

    Matrix operator norm when `on_field` is None, else the L2 residual of the
    identity applied to the given (normalized) field.  The field version is
    the meaningful one for H1/H3, where band-edge aliasing makes the plain
    matrix norm O(1) at any resolution.
    """
    from .potentials import add_gradient

    h_base = build_operator(kind, grid, pots)
    h_shift = build_operator(
        kind, grid, pots.with_vector(add_gradient(pots.vector, gauge))
    )
    phase = np.exp(1j * gauge.phi(grid_sites(grid)))
    # e^{-i phi} H(A + grad phi) e^{+i phi}, which should reproduce H(A)
    conj = phase[:, None].conj() * h_shift.matrix * phase[None, :]
    diff = conj - h_base.matrix
    if on_field is None:
        return float(np.linalg.norm(diff, 2))
    v = on_field.values / np.linalg.norm(on_field.values)
    return float(np.linalg.norm(diff @ v))
