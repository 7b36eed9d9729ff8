"""Time-sliced product approximants F(t/n)^n and their convergence rates.

One step is a free-kernel row times a potential phase, applied as a dense
matrix; iterating it n times with step t/n realizes the time-sliced path
integral, and the rate harness measures its distance to the spectrally exact
semigroup of the matching operator oracle in the operator norm, in L2 on a
fixed field, or entrywise (kernel pointwise).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fields import Field, GridSpec, grid_freqs, grid_sites, pair_blocks
from .oracles import (
    OperatorMatrix,
    build_operator,
    magnetic_phase_matrix,
    midpoint_scalar_matrix,
)
from .potentials import PotentialSpec, ZeroVector, ZeroScalar
from .propagators import spectral_row
from .symbols import symbol_value

STEPPER_KINDS = (
    "F1",
    "F2",
    "GNR_magnetic",
    "G_scalar",
    "G_scalar_symmetrized",
    "Split_H3",
)

# which oracle each stepper converges to, and whether the target semigroup
# is mass-shifted e^{-t[H-m]}
ORACLE_KIND = {
    "F1": ("H1", True),
    "F2": ("H2", True),
    "Split_H3": ("H3", True),
    "GNR_magnetic": ("HNR", False),
    "G_scalar": ("HNR", False),
    "G_scalar_symmetrized": ("HNR", False),
}


def _kernel_circulant(grid: GridSpec, spectrum: np.ndarray) -> np.ndarray:
    row = spectral_row(grid, spectrum)
    out = np.empty((grid.n_sites, grid.n_sites))
    for rows, pb in pair_blocks(grid):
        out[rows] = row[pb.shift]
    return out


@lru_cache(maxsize=8)
def _h3_free_part(grid: GridSpec, pots: PotentialSpec) -> OperatorMatrix:
    return build_operator("H3", grid, pots.with_scalar(ZeroScalar()))


def oracle_potentials(kind: str, pots: PotentialSpec) -> PotentialSpec:
    """Potentials of the generator a stepper kind actually discretizes."""
    if kind in ("G_scalar", "G_scalar_symmetrized"):
        return pots.with_vector(ZeroVector(d=pots.vector.d))
    return pots


def step_matrix(kind: str, grid: GridSpec, pots: PotentialSpec, tau: float) -> np.ndarray:
    """Dense matrix of one time-slice map of the given kind with step tau."""
    if tau <= 0:
        raise ValueError("step size must be positive")
    if kind not in STEPPER_KINDS:
        raise ValueError(f"unknown stepper kind {kind!r}")
    freqs = grid_freqs(grid)
    v_sites = np.asarray(pots.scalar.v(grid_sites(grid)), dtype=float)

    if kind == "Split_H3":
        free = _h3_free_part(grid, pots)
        return free.semigroup_matrix(tau, subtract_m=True) * np.exp(-tau * v_sites)[None, :]

    if kind in ("F1", "F2"):
        kern = _kernel_circulant(grid, np.exp(-tau * symbol_value(pots.mass, freqs)))
    else:
        kern = _kernel_circulant(grid, np.exp(-0.5 * tau * np.sum(freqs**2, axis=-1)))

    if kind == "G_scalar":
        return kern * np.exp(-tau * v_sites)[None, :]
    if kind == "G_scalar_symmetrized":
        half = np.exp(-0.5 * tau * v_sites)
        return half[:, None] * kern * half[None, :]

    prescription = "line" if kind == "F2" else "midpoint"
    phase = magnetic_phase_matrix(grid, pots, prescription)
    if kind == "F2":
        scalar = np.exp(-tau * v_sites)[None, :]  # V at the source endpoint
    else:
        scalar = np.exp(-tau * midpoint_scalar_matrix(grid, pots))
    return kern * phase * scalar


def step(kind: str, pots: PotentialSpec, tau: float, g: Field) -> Field:
    return Field(g.grid, step_matrix(kind, g.grid, pots, tau) @ g.values)


def iterate(kind: str, pots: PotentialSpec, t: float, n: int, g: Field) -> Field:
    if n < 1:
        raise ValueError("need n >= 1 steps")
    mat = step_matrix(kind, g.grid, pots, t / n)
    v = g.values
    for _ in range(n):
        v = mat @ v
    return Field(g.grid, v)


@dataclass(frozen=True)
class ConvergenceReport:
    stepper: str
    n_values: tuple
    errors_l2: tuple | None
    errors_opnorm: tuple | None
    slope: float
    slope_residual: float
    monotone: bool
    metadata: dict = field(default_factory=dict)

    def primary_errors(self) -> tuple:
        return self.errors_opnorm if self.errors_opnorm is not None else self.errors_l2

    def running_slopes(self) -> list:
        errs = self.primary_errors()
        out = [float("nan")]
        for i in range(1, len(self.n_values)):
            if errs[i] > 0 and errs[i - 1] > 0:
                out.append(
                    float(
                        np.log(errs[i] / errs[i - 1])
                        / np.log(self.n_values[i] / self.n_values[i - 1])
                    )
                )
            else:
                out.append(float("nan"))
        return out

    def write_csv(self, path: str):
        slopes = self.running_slopes()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "error_L2", "error_opnorm", "slope_running"])
            for i, n in enumerate(self.n_values):
                writer.writerow(
                    [
                        n,
                        repr(self.errors_l2[i]) if self.errors_l2 else "",
                        repr(self.errors_opnorm[i]) if self.errors_opnorm else "",
                        repr(slopes[i]),
                    ]
                )

    def write_meta(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "stepper": self.stepper,
                    "slope": self.slope,
                    "slope_residual": self.slope_residual,
                    "monotone": self.monotone,
                    **self.metadata,
                },
                fh,
                indent=2,
                sort_keys=True,
                default=str,
            )


def fit_slope(n_values, errors) -> tuple[float, float]:
    """Least-squares log-log slope over the last half of the sequence."""
    n_values = np.asarray(n_values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > 0
    n_values, errors = n_values[keep], errors[keep]
    if len(n_values) < 2:
        return float("nan"), float("nan")
    start = len(n_values) // 2 if len(n_values) > 3 else 0
    x = np.log(n_values[start:])
    y = np.log(errors[start:])
    design = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return float(coef[0]), residual


def rate_study(
    kind: str,
    grid: GridSpec,
    pots: PotentialSpec,
    t: float,
    n_list,
    norm: str = "operator",
    g: Field | None = None,
) -> ConvergenceReport:
    """Errors of F(t/n)^n against the oracle semigroup, with fitted slope."""
    if norm not in ("operator", "L2_on_g", "both"):
        raise ValueError("norm must be 'operator', 'L2_on_g' or 'both'")
    want_op = norm in ("operator", "both")
    want_l2 = norm in ("L2_on_g", "both")
    if want_l2 and g is None:
        raise ValueError("L2 errors need a reference field g")
    okind, shift = ORACLE_KIND[kind]
    oracle = build_operator(okind, grid, oracle_potentials(kind, pots))
    target = oracle.semigroup_matrix(t, subtract_m=shift)
    n_list = sorted(int(n) for n in n_list)
    errs_op, errs_l2 = [], []
    gn = None
    if g is not None:
        gn = g.values / (np.linalg.norm(g.values) * np.sqrt(grid.cell_volume))
    for n in n_list:
        mat_n = np.linalg.matrix_power(step_matrix(kind, grid, pots, t / n), n)
        diff = mat_n - target
        if want_op:
            errs_op.append(float(np.linalg.norm(diff, 2)))
        if want_l2:
            errs_l2.append(
                float(np.linalg.norm(diff @ gn) * np.sqrt(grid.cell_volume))
            )
    primary = errs_op if want_op else errs_l2
    slope, resid = fit_slope(n_list, primary)
    monotone = all(primary[i + 1] <= primary[i] * (1 + 1e-12) for i in range(len(primary) - 1))
    return ConvergenceReport(
        stepper=kind,
        n_values=tuple(n_list),
        errors_l2=tuple(errs_l2) if want_l2 else None,
        errors_opnorm=tuple(errs_op) if want_op else None,
        slope=slope,
        slope_residual=resid,
        monotone=monotone,
        metadata={
            "t": t,
            "norm": norm,
            "grid": {"d": grid.d, "n": grid.n, "length": grid.length},
            "oracle": okind,
            "non_monotone_flag": not monotone,
        },
    )


def pointwise_kernel_errors(
    kind: str, grid: GridSpec, pots: PotentialSpec, t: float, n_list, pairs
) -> dict:
    """|[F(t/n)^n](x,y) - [e^{-t...}](x,y)| at fixed site pairs, per n.

    Matrix entries are kernel values times the cell volume, so log-log slopes
    agree with those of the kernels themselves.
    """
    okind, shift = ORACLE_KIND[kind]
    oracle = build_operator(okind, grid, oracle_potentials(kind, pots))
    target = oracle.semigroup_matrix(t, subtract_m=shift)
    n_list = sorted(int(n) for n in n_list)
    out = {tuple(p): [] for p in pairs}
    for n in n_list:
        mat_n = np.linalg.matrix_power(step_matrix(kind, grid, pots, t / n), n)
        for p in pairs:
            i, j = p
            out[tuple(p)].append(float(np.abs(mat_n[i, j] - target[i, j])))
    return {"n_values": n_list, "errors": out}
