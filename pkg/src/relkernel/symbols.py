"""Relativistic kinetic symbol and the modified Bessel functions K_nu.

Only the orders the Levy density needs are implemented: nu = (d+1)/2 for
d = 1, 2, 3, plus 1/2 for recurrence checks.  Half-integer orders are closed
elementary forms.  Integer orders use the ascending series for small z and
the large-z asymptotic expansion, with the switchover placed where the two
branches agree to 1e-10.  Inside 6.5 < z < 13 the series is evaluated in
extended precision: in float64 its log/psi terms cancel about e^{2z} of
headroom, which would otherwise force the seam into the asymptotic floor.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

EULER_GAMMA = 0.5772156649015328606

_SEAM = 13.0  # series/asymptotic switchover for integer orders
_FLOAT_SERIES_MAX = 6.5
# (d+1)/2 for d = 1, 2, 3, plus the neighbors the three-term recurrence
# checks need (it steps by whole orders, so it never crosses parity)
_SUPPORTED_ORDERS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5)


def symbol_of_norm(m: float, r) -> np.ndarray:
    """sqrt(r^2 + m^2) - m evaluated cancellation-safely (r = |xi|)."""
    if m < 0:
        raise ValueError("mass must be nonnegative")
    r = np.abs(np.asarray(r, dtype=float))
    den = np.hypot(r, m) + m
    with np.errstate(invalid="ignore"):
        out = np.where(den > 0.0, r * r / np.where(den > 0.0, den, 1.0), 0.0)
    return out


def symbol_value(m: float, xi) -> np.ndarray:
    """Kinetic symbol sqrt(|xi|^2 + m^2) - m for vectors xi (axis last)."""
    xi = np.asarray(xi, dtype=float)
    r = np.sqrt(np.sum(xi * xi, axis=-1)) if xi.ndim else np.abs(xi)
    return symbol_of_norm(m, r)


def _kn_series_float(n: int, z: np.ndarray) -> np.ndarray:
    """Ascending series for K_n, float64; accurate for z <= ~6.5."""
    z = np.asarray(z, dtype=float)
    x = z * z / 4.0
    half = 0.5 * z

    # finite sum: 1/2 (z/2)^{-n} sum_{k<n} ((n-k-1)!/k!) (-x)^k
    finite = np.zeros_like(z)
    for k in range(n):
        finite += (
            math.factorial(n - k - 1) / math.factorial(k) * (-x) ** k
        )
    finite *= 0.5 * half ** (-n)

    # I_n and the psi sum, accumulated together
    term = np.ones_like(z) / math.factorial(n)
    psi1 = -EULER_GAMMA
    psi2 = -EULER_GAMMA + sum(1.0 / j for j in range(1, n + 1))
    i_sum = term.copy()
    psi_sum = (psi1 + psi2) * term
    k = 0
    while True:
        k += 1
        term = term * x / (k * (n + k))
        psi1 += 1.0 / k
        psi2 += 1.0 / (n + k)
        i_sum += term
        psi_sum += (psi1 + psi2) * term
        if k > 5 and np.all(term <= 1e-18 * np.abs(i_sum)):
            break
    i_n = half**n * i_sum
    sign = (-1.0) ** (n + 1)
    return finite + sign * np.log(half) * i_n - sign * 0.5 * half**n * psi_sum


def _kn_series_mp(n: int, z: float) -> float:
    """Same ascending series at 40 digits; covers the cancellation zone."""
    with mpmath.workdps(40):
        zz = mpmath.mpf(z)
        x = zz * zz / 4
        half = zz / 2
        finite = mpmath.mpf(0)
        for k in range(n):
            finite += (
                mpmath.factorial(n - k - 1) / mpmath.factorial(k) * (-x) ** k
            )
        finite *= half ** (-n) / 2
        term = mpmath.mpf(1) / mpmath.factorial(n)
        psi1 = -mpmath.euler
        psi2 = -mpmath.euler + mpmath.fsum(mpmath.mpf(1) / j for j in range(1, n + 1))
        i_sum = term
        psi_sum = (psi1 + psi2) * term
        k = 0
        while True:
            k += 1
            term = term * x / (k * (n + k))
            psi1 += mpmath.mpf(1) / k
            psi2 += mpmath.mpf(1) / (n + k)
            i_sum += term
            psi_sum += (psi1 + psi2) * term
            if k > 5 and term < mpmath.mpf("1e-45") * i_sum:
                break
        i_n = half**n * i_sum
        sign = (-1) ** (n + 1)
        out = finite + sign * mpmath.log(half) * i_n - sign * half**n * psi_sum / 2
        return float(out)


def _k_asymptotic(nu: float, z: np.ndarray) -> np.ndarray:
    """Large-z expansion sqrt(pi/2z) e^{-z} sum_k a_k(nu) z^{-k}.

    Terms are added per element while they keep shrinking (optimal
    truncation); error is then at the e^{-2z} asymptotic floor.
    """
    z = np.asarray(z, dtype=float)
    acc = np.ones_like(z)
    term = np.ones_like(z)
    prev = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    mu = 4.0 * nu * nu
    for k in range(1, 30):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        shrinking = np.abs(term) < prev
        add = active & shrinking
        acc = np.where(add, acc + term, acc)
        active = add
        if not active.any():
            break
        prev = np.where(add, np.abs(term), prev)
    return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * acc


def _k_integer(n: int, z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = z < _SEAM
    if small.any():
        zs = z[small]
        res = np.empty_like(zs)
        easy = zs <= _FLOAT_SERIES_MAX
        if easy.any():
            res[easy] = _kn_series_float(n, zs[easy])
        hard = ~easy
        if hard.any():
            res[hard] = [_kn_series_mp(n, float(v)) for v in zs[hard]]
        out[small] = res
    if (~small).any():
        out[~small] = _k_asymptotic(float(n), z[~small])
    return out


def bessel_k(nu: float, z) -> np.ndarray:
    """Modified Bessel function of the second kind, half-integer and
    integer orders up to 5/2."""
    if float(nu) not in _SUPPORTED_ORDERS:
        raise ValueError(f"order {nu} not supported (need one of {_SUPPORTED_ORDERS})")
    z_arr = np.asarray(z, dtype=float)
    if not np.all(z_arr > 0.0):
        raise ValueError("bessel_k requires z > 0")
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    nu = float(nu)
    if nu == 0.5:
        out = np.sqrt(np.pi / (2.0 * z_arr)) * np.exp(-z_arr)
    elif nu == 1.5:
        out = np.sqrt(np.pi / (2.0 * z_arr)) * np.exp(-z_arr) * (1.0 + 1.0 / z_arr)
    elif nu == 2.5:
        out = (
            np.sqrt(np.pi / (2.0 * z_arr))
            * np.exp(-z_arr)
            * (1.0 + 3.0 / z_arr + 3.0 / z_arr**2)
        )
    else:
        out = _k_integer(int(nu), z_arr)
    return float(out[0]) if scalar else out
