"""Reproducible experiment runner.

`relkernel <experiment> --config <file> [--seed S] [--out DIR]` executes one
experiment from a declarative JSON config and writes a CSV result plus a JSON
metadata sidecar (config echo, version, wall clock, seed, worker count).
Exit codes: 0 success, 2 config/schema error, 3 numerical property violation
(with the violated invariant named).  CSV bodies are byte-identical for
identical config and seed; timestamps live only in the metadata.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import subprocess
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .chernoff import rate_study, STEPPER_KINDS, ORACLE_KIND, oracle_potentials
from .fields import Field, field_from_function, make_grid
from .levy import verify_levy_khinchin
from .montecarlo import ESTIMATORS, GaussianData, oracle_probe, worker_count
from .oracles import (
    build_h1,
    build_h2,
    build_operator,
    export_operator,
    gauge_conjugation_residual,
)
from .potentials import potential_preset, vector_preset
from .propagators import free_heat_kernel, free_relativistic_kernel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROPERTY = 3


class ConfigError(ValueError):
    pass


def _req(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing required config key {key!r}")
    return cfg[key]


def _check_keys(cfg: dict, allowed: set, where: str):
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys in {where}: {sorted(unknown)}")


def _parse_grid(cfg: dict):
    _check_keys(cfg, {"d", "N", "L"}, "grid")
    return make_grid(int(_req(cfg, "d")), int(_req(cfg, "N")), float(_req(cfg, "L")))


def _parse_potentials(cfg: dict, d: int):
    _check_keys(cfg, {"vector", "scalar", "mass"}, "potentials")
    return potential_preset(
        _req(cfg, "vector"), _req(cfg, "scalar"), float(_req(cfg, "mass")), d
    )


def _parse_g(cfg: dict, d: int) -> GaussianData:
    _check_keys(cfg, {"center", "width", "momentum"}, "g")
    center = tuple(float(c) for c in cfg.get("center", (0.0,) * d))
    mom = cfg.get("momentum")
    return GaussianData(
        center=center,
        width=float(cfg.get("width", 1.0)),
        momentum=tuple(float(m) for m in mom) if mom is not None else None,
    )


TOP_KEYS = {
    "levy-check": {"experiment", "seed", "out", "d", "mass", "xi", "r_inner",
                   "R_outer", "refine_levels", "residual_tol"},
    "kernel": {"experiment", "seed", "out", "grid", "mass", "t", "kernel"},
    "oracle": {"experiment", "seed", "out", "grid", "potentials", "kind"},
    "chernoff-rate": {"experiment", "seed", "out", "grid", "potentials", "stepper",
                      "t", "n_list", "norm", "g", "slope_range"},
    "mc-compare": {"experiment", "seed", "out", "grid", "potentials", "estimator",
                   "g", "probes", "t", "n_paths", "n_slices", "k_slices", "k_inner"},
    "property-suite": {"experiment", "seed", "out", "corrupt", "checks"},
}


@dataclass
class CheckResult:
    check: str
    case: str
    value: float
    threshold: float
    comparator: str  # "<=" or ">="
    passed: bool


def _git_version() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=os.path.dirname(__file__),
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"relkernel-{__version__}+g{out.stdout.strip()}"
    except Exception:
        pass
    return f"relkernel-{__version__}"


def _write_csv(path: str, header: list, rows: list):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _write_meta(path: str, config: dict, seed: int, wall: float, extra: dict):
    meta = {
        "config": config,
        "seed": seed,
        "version": _git_version(),
        "wall_clock_s": wall,
        "workers": worker_count(),
        **extra,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)


def run_levy_check(cfg: dict, seed: int, out_dir: str):
    d = int(_req(cfg, "d"))
    mass = float(_req(cfg, "mass"))
    xi_values = [float(x) for x in cfg.get("xi", (0.5, 1.0, 1.5, 2.0, 3.0))]
    r0 = float(cfg.get("r_inner", 1e-6))
    big_r0 = float(cfg.get("R_outer", 1e4))
    levels = int(cfg.get("refine_levels", 2))
    tol = float(cfg.get("residual_tol", 1e-4))
    from .symbols import symbol_of_norm

    rows, failures = [], []
    prev = {}
    for level in range(levels + 1):
        r, big_r = r0 / 2**level, big_r0 * 2**level
        for xi in xi_values:
            res = verify_levy_khinchin(mass, d, xi, r, big_r)
            sym = float(symbol_of_norm(mass, xi))
            rows.append([level, r, big_r, xi, sym, sym - res, res])
            if level == 0 and res >= tol:
                failures.append(
                    f"levy-khinchin residual {res:.3e} >= {tol:g} at xi={xi} (m={mass}, d={d})"
                )
            if (xi in prev) and res > prev[xi]:
                failures.append(
                    f"levy-khinchin residual increased under refinement at xi={xi}"
                )
            prev[xi] = res
    _write_csv(
        os.path.join(out_dir, "levy-check.csv"),
        ["level", "r_inner", "R_outer", "xi", "symbol", "quadrature", "residual"],
        rows,
    )
    return failures, {"n_rows": len(rows)}


def run_kernel(cfg: dict, seed: int, out_dir: str):
    grid = _parse_grid(_req(cfg, "grid"))
    mass = float(_req(cfg, "mass"))
    t = float(_req(cfg, "t"))
    which = cfg.get("kernel", "relativistic")
    if which == "relativistic":
        ker = free_relativistic_kernel(grid, mass, t)
    elif which == "heat":
        ker = free_heat_kernel(grid, t)
    else:
        raise ConfigError(f"unknown kernel {which!r}")
    disp = ker.displacements()
    rows = [
        [i] + [float(c) for c in disp[i]] + [float(ker.values[i])]
        for i in range(grid.n_sites)
    ]
    _write_csv(
        os.path.join(out_dir, "kernel.csv"),
        ["index"] + [f"dx{a}" for a in range(grid.d)] + ["value"],
        rows,
    )
    failures = []
    mass_err = abs(ker.mass() - 1.0)
    if mass_err > 1e-8:
        failures.append(f"kernel mass deviates from 1 by {mass_err:.3e}")
    undershoot = float(ker.values.min())
    if undershoot < -1e-12 / grid.cell_volume:
        failures.append(f"kernel undershoots positivity: min {undershoot:.3e}")
    return failures, {"mass_error": mass_err, "min_value": undershoot}


def run_oracle(cfg: dict, seed: int, out_dir: str):
    grid = _parse_grid(_req(cfg, "grid"))
    pots = _parse_potentials(_req(cfg, "potentials"), grid.d)
    kind = _req(cfg, "kind")
    op = build_operator(kind, grid, pots)
    stem = os.path.join(out_dir, f"oracle_{kind}")
    export_operator(op, stem)
    rows = [[i, float(v)] for i, v in enumerate(op.eigenvalues)]
    _write_csv(os.path.join(out_dir, "oracle.csv"), ["index", "eigenvalue"], rows)
    failures = []
    if op.hermiticity_residual > 1e-10:
        failures.append(
            f"{kind} hermiticity residual {op.hermiticity_residual:.3e} > 1e-10"
        )
    return failures, {
        "hermiticity_residual": op.hermiticity_residual,
        "min_eigenvalue": op.min_eigenvalue,
        "exported": [stem + ".npy", stem + ".json"],
    }


def run_chernoff_rate(cfg: dict, seed: int, out_dir: str):
    grid = _parse_grid(_req(cfg, "grid"))
    pots = _parse_potentials(_req(cfg, "potentials"), grid.d)
    stepper = _req(cfg, "stepper")
    if stepper not in STEPPER_KINDS:
        raise ConfigError(f"unknown stepper {stepper!r}")
    t = float(_req(cfg, "t"))
    n_list = [int(n) for n in _req(cfg, "n_list")]
    norm = cfg.get("norm", "operator")
    g = None
    if norm in ("L2_on_g", "both"):
        gd = _parse_g(cfg.get("g", {}), grid.d)
        g = field_from_function(grid, gd)
    report = rate_study(stepper, grid, pots, t, n_list, norm=norm, g=g)
    report.write_csv(os.path.join(out_dir, "chernoff-rate.csv"))
    failures = []
    srange = cfg.get("slope_range")
    if srange is not None:
        lo, hi = float(srange[0]), float(srange[1])
        if not (lo <= report.slope <= hi):
            failures.append(
                f"{stepper} slope {report.slope:.3f} outside [{lo}, {hi}]"
            )
    if not report.monotone:
        failures.append(f"{stepper} error sequence is not monotone")
    return failures, {"slope": report.slope, "monotone": report.monotone}


def run_mc_compare(cfg: dict, seed: int, out_dir: str):
    grid = _parse_grid(_req(cfg, "grid"))
    pots = _parse_potentials(_req(cfg, "potentials"), grid.d)
    estimator = _req(cfg, "estimator")
    if estimator not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {estimator!r}")
    gd = _parse_g(_req(cfg, "g"), grid.d)
    probes = [tuple(float(c) for c in p) for p in _req(cfg, "probes")]
    t = float(_req(cfg, "t"))
    n_paths = int(_req(cfg, "n_paths"))
    oracle_kind = {"H1": "H1", "H2": "H2", "H3": "H3", "NR": "HNR"}[estimator]
    subtract = estimator != "NR"
    op = build_operator(oracle_kind, grid, pots)
    rows, failures = [], []
    for probe in probes:
        if estimator == "H3":
            est = ESTIMATORS[estimator](
                pots, gd, probe, t,
                k_slices=int(cfg.get("k_slices", 64)),
                n_paths=n_paths, seed=seed,
                k_inner=int(cfg.get("k_inner", 8)),
            )
        else:
            est = ESTIMATORS[estimator](
                pots, gd, probe, t,
                n_slices=int(cfg.get("n_slices", 64)),
                n_paths=n_paths, seed=seed,
            )
        ora = oracle_probe(op, gd, probe, t, subtract_m=subtract)
        ratio = abs(est.value - ora) / est.std_error if est.std_error else 0.0
        rows.append(
            list(probe)
            + [t, float(est.value.real), float(est.value.imag), est.std_error,
               float(ora.real), float(ora.imag), ratio, n_paths, est.n_slices, seed]
        )
        if ratio > 3.0:
            failures.append(
                f"{estimator} at x={probe}: |mc - oracle| = {ratio:.2f} SE > 3 SE"
            )
    _write_csv(
        os.path.join(out_dir, "mc-compare.csv"),
        [f"x{a}" for a in range(grid.d)]
        + ["t", "value_re", "value_im", "std_error", "oracle_re", "oracle_im",
           "abs_diff_over_se", "n_paths", "n_slices", "seed"],
        rows,
    )
    return failures, {"estimator": estimator, "probes": len(probes)}


def property_suite(corrupt: str = "none", checks=None) -> list[CheckResult]:
    """Fixed-preset invariant checks over the operator and kernel stack."""
    if corrupt not in ("none", "h1_endpoint"):
        raise ConfigError(f"unknown corruption {corrupt!r}")
    selected = set(checks) if checks else None
    h1_eval = "endpoint" if corrupt == "h1_endpoint" else "midpoint"
    results: list[CheckResult] = []

    def want(name):
        return selected is None or name in selected

    def add(check, case, value, threshold, comparator):
        ok = value <= threshold if comparator == "<=" else value >= threshold
        results.append(CheckResult(check, case, float(value), threshold, comparator, ok))

    grid = make_grid(1, 64, 16.0)
    pots_full = potential_preset("bump", "harmonic", 1.0, 1)

    if want("hermiticity"):
        for kind in ("H1", "H2", "H3", "HNR"):
            if kind == "H1":
                op = build_h1(grid, pots_full, _magnetic_eval=h1_eval)
            else:
                op = build_operator(kind, grid, pots_full)
            add("hermiticity", kind, op.hermiticity_residual, 1e-10, "<=")

    if want("lower_bound"):
        for m in (0.0, 1.0):
            p = potential_preset("bump", "zero", m, 1)
            for kind in ("H1", "H2", "H3"):
                if kind == "H1":
                    op = build_h1(grid, p, _magnetic_eval=h1_eval)
                else:
                    op = build_operator(kind, grid, p)
                add("lower_bound", f"{kind},m={m:g}", op.min_eigenvalue - m, -1e-6, ">=")

    if want("gauge_covariance"):
        ggrid = make_grid(1, 128, 16.0)
        gauge = vector_preset("gauge_cubic_bump", 1)
        ref = field_from_function(
            ggrid, lambda x: np.exp(-np.sum(x * x, -1) / 2.0)
        )
        add(
            "gauge_covariance", "H2,matrix",
            gauge_conjugation_residual("H2", ggrid, pots_full, gauge), 1e-8, "<=",
        )
        add(
            "gauge_covariance", "H3,field",
            gauge_conjugation_residual("H3", ggrid, pots_full, gauge, on_field=ref),
            1e-8, "<=",
        )
        add(
            "gauge_covariance", "H1,witness",
            _h1_gauge_witness(ggrid, pots_full, gauge, ref, h1_eval), 1e-3, ">=",
        )

    if want("coincidence"):
        plin = potential_preset("linear", "zero", 1.0, 1)
        h1 = build_h1(grid, plin, _magnetic_eval=h1_eval)
        h2 = build_h2(grid, plin)
        add("coincidence", "linear,H1=H2",
            float(np.max(np.abs(h1.matrix - h2.matrix))), 1e-12, "<=")
        pbump = potential_preset("bump", "zero", 1.0, 1)
        h1b = build_h1(grid, pbump, _magnetic_eval=h1_eval)
        h2b = build_h2(grid, pbump)
        add("coincidence", "bump,H1!=H2",
            float(np.max(np.abs(h1b.matrix - h2b.matrix))), 1e-6, ">=")

    if want("kernel_mass"):
        kgrid = make_grid(1, 256, 16.0)
        for m in (0.0, 1.0):
            for t in (0.5, 1.0):
                ker = free_relativistic_kernel(kgrid, m, t)
                add("kernel_mass", f"m={m:g},t={t:g}", abs(ker.mass() - 1.0), 1e-8, "<=")

    if want("levy_khinchin"):
        for m in (0.0, 1.0):
            res0 = verify_levy_khinchin(m, 1, 1.0, 1e-6, 1e4)
            res1 = verify_levy_khinchin(m, 1, 1.0, 5e-7, 2e4)
            add("levy_khinchin", f"m={m:g},residual", res0, 1e-4, "<=")
            add("levy_khinchin", f"m={m:g},refinement", res0 - res1, 0.0, ">=")

    return results


def _h1_gauge_witness(grid, pots, gauge, ref, h1_eval) -> float:
    from .oracles import OperatorMatrix  # noqa: F401  (typing aid only)
    from .potentials import add_gradient
    from .fields import grid_sites

    h_base = build_h1(grid, pots, _magnetic_eval=h1_eval)
    h_shift = build_h1(
        grid, pots.with_vector(add_gradient(pots.vector, gauge)), _magnetic_eval=h1_eval
    )
    phase = np.exp(1j * gauge.phi(grid_sites(grid)))
    conj = phase[:, None].conj() * h_shift.matrix * phase[None, :]
    v = ref.values / np.linalg.norm(ref.values)
    return float(np.linalg.norm((conj - h_base.matrix) @ v))


def run_property_suite(cfg: dict, seed: int, out_dir: str):
    results = property_suite(cfg.get("corrupt", "none"), cfg.get("checks"))
    rows = [
        [r.check, r.case, r.value, r.threshold, r.comparator, int(r.passed)]
        for r in results
    ]
    _write_csv(
        os.path.join(out_dir, "property-suite.csv"),
        ["check", "case", "value", "threshold", "comparator", "passed"],
        rows,
    )
    failures = [
        f"{r.check}[{r.case}]: value {r.value:.3e} violates {r.comparator} {r.threshold:g}"
        for r in results
        if not r.passed
    ]
    summary = {}
    for r in results:
        summary.setdefault(r.check, {"passed": 0, "failed": 0})
        summary[r.check]["passed" if r.passed else "failed"] += 1
    return failures, {"summary": summary}


RUNNERS = {
    "levy-check": run_levy_check,
    "kernel": run_kernel,
    "oracle": run_oracle,
    "chernoff-rate": run_chernoff_rate,
    "mc-compare": run_mc_compare,
    "property-suite": run_property_suite,
}


def run(config: dict, seed: int | None = None, out_dir: str | None = None) -> int:
    """Execute one experiment config; returns the process exit code."""
    try:
        experiment = _req(config, "experiment")
        if experiment not in RUNNERS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        _check_keys(config, TOP_KEYS[experiment], "config")
        eff_seed = int(seed if seed is not None else config.get("seed", 0))
        eff_out = out_dir if out_dir is not None else config.get("out", ".")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(eff_out, exist_ok=True)
    start = time.monotonic()
    try:
        failures, extra = RUNNERS[experiment](config, eff_seed, eff_out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wall = time.monotonic() - start
    _write_meta(
        os.path.join(eff_out, f"{experiment}.meta.json"),
        config,
        eff_seed,
        wall,
        {"failures": failures, **extra},
    )
    if failures:
        print(f"property violation: {failures[0]}", file=sys.stderr)
        for extra_failure in failures[1:]:
            print(f"  also: {extra_failure}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="relkernel",
        description="Numerical laboratory for imaginary-time magnetic "
        "relativistic Schrodinger semigroups",
    )
    parser.add_argument("experiment", choices=sorted(RUNNERS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="override output directory")
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.get("experiment", args.experiment) != args.experiment:
        print(
            f"config error: config names experiment {config.get('experiment')!r}, "
            f"command line says {args.experiment!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    config.setdefault("experiment", args.experiment)
    return run(config, seed=args.seed, out_dir=args.out)


if __name__ == "__main__":
    sys.exit(main())
