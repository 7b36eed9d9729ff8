"""Independent oracles for derived expected values.

Everything here is deliberately dumb and slow: quadrature of integral
representations and closed forms derived by hand, sharing no code path with
the implementations they check.
"""

import math

import numpy as np


def bessel_k_quad(nu: float, z: float, tol: float = 1e-11) -> float:
    """K_nu(z) by adaptive trapezoid of int_0^40 exp(-z cosh t) cosh(nu t) dt."""
    upper = 40.0

    def value(n):
        t = np.linspace(0.0, upper, n + 1)
        with np.errstate(over="ignore"):
            f = np.exp(-z * np.cosh(t)) * np.cosh(nu * t)
        f = np.where(np.isfinite(f), f, 0.0)
        return float(np.trapezoid(f, t))

    n = 512
    prev = value(n)
    for _ in range(16):
        n *= 2
        cur = value(n)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise RuntimeError("bessel quadrature did not converge")


def line_average_quad(a_fn, x, y, n: int = 1024) -> np.ndarray:
    """Gauss-Legendre theta-average of a vector field along the segment x->y."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * (nodes + 1.0)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pts = (1.0 - theta)[:, None] * x[None, :] + theta[:, None] * y[None, :]
    vals = np.asarray(a_fn(pts), dtype=float)
    return 0.5 * np.sum(weights[:, None] * vals, axis=0)


def inverse_gaussian_pdf(t, mean: float, shape: float):
    t = np.asarray(t, dtype=float)
    return np.sqrt(shape / (2.0 * np.pi * t**3)) * np.exp(
        -shape * (t - mean) ** 2 / (2.0 * mean**2 * t)
    )


def relativistic_kernel_subordination(m: float, t: float, x: float, n: int = 20001) -> float:
    """d=1 kernel of e^{-t[sqrt(-d^2+m^2)-m]} by quadrature over the
    subordinator law: int heat(T, x) IG(T; t/m, t^2) dT on a log grid."""
    u = np.linspace(-30.0, 12.0, n)
    big_t = np.exp(u)
    heat = np.exp(-x * x / (2.0 * big_t)) / np.sqrt(2.0 * np.pi * big_t)
    dens = inverse_gaussian_pdf(big_t, t / m, t * t)
    return float(np.trapezoid(heat * dens * big_t, u))


def circle_poisson(t: float, x, length: float):
    """Periodized Cauchy (circle Poisson) kernel, written out independently."""
    s = 2.0 * math.pi * t / length
    u = 2.0 * math.pi * np.asarray(x, dtype=float) / length
    return np.sinh(s) / (length * (np.cosh(s) - np.cos(u)))


def cauchy_density(t: float, x):
    x = np.asarray(x, dtype=float)
    return t / (math.pi * (t * t + x * x))


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
