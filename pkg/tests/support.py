"""Independent scalar oracles and cached dataset calibrations shared by the tests."""

from __future__ import annotations

import functools
import math

from fxsmile import dataset
from fxsmile.cli import RunConfig, run_calibration

SQRT2 = math.sqrt(2.0)


# ---- scalar oracles (math module only) -----------------------------------

def ncdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def npdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def black(eta: int, f: float, k: float, sigma: float, t: float, df: float = 1.0) -> float:
    s = sigma * math.sqrt(t)
    d1 = math.log(f / k) / s + 0.5 * s
    d2 = d1 - s
    return df * eta * (f * ncdf(eta * d1) - k * ncdf(eta * d2))


def fwd_pips_delta(eta, f, k, sigma, t):
    s = sigma * math.sqrt(t)
    return eta * ncdf(eta * (math.log(f / k) / s + 0.5 * s))


def fwd_pct_delta(eta, f, k, sigma, t):
    s = sigma * math.sqrt(t)
    return (k / f) * eta * ncdf(eta * (math.log(f / k) / s - 0.5 * s))


def natural_spline(xs, ys, x):
    """Textbook natural cubic spline: tridiagonal solve for second derivatives."""
    n = len(xs)
    h = [xs[i + 1] - xs[i] for i in range(n - 1)]
    # interior equations for M_1..M_{n-2}, M_0 = M_{n-1} = 0
    a = [h[i - 1] for i in range(1, n - 1)]
    b = [2.0 * (h[i - 1] + h[i]) for i in range(1, n - 1)]
    c = [h[i] for i in range(1, n - 1)]
    d = [6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]) for i in range(1, n - 1)]
    m = len(b)
    for i in range(1, m):  # Thomas forward sweep
        w = a[i] / b[i - 1]
        b[i] -= w * c[i - 1]
        d[i] -= w * d[i - 1]
    sol = [0.0] * m
    sol[-1] = d[-1] / b[-1]
    for i in range(m - 2, -1, -1):
        sol[i] = (d[i] - c[i] * sol[i + 1]) / b[i]
    M = [0.0] + sol + [0.0]
    x = min(max(x, xs[0]), xs[-1])
    j = max(i for i in range(n - 1) if xs[i] <= x) if x < xs[-1] else n - 2
    hj = h[j]
    u, v = xs[j + 1] - x, x - xs[j]
    return (M[j] * u**3 + M[j + 1] * v**3) / (6 * hj) + (ys[j] / hj - M[j] * hj / 6) * u + (ys[j + 1] / hj - M[j + 1] * hj / 6) * v


def sabr_lognormal_beta1(alpha, rho, nu, f, k, t):
    """Hagan expansion at beta = 1 with the Obloj leading term, written out directly."""
    atm_corr = 1.0 + (rho * nu * alpha / 4.0 + (2.0 - 3.0 * rho * rho) * nu * nu / 24.0) * t
    if k == f or nu == 0.0:
        return alpha * atm_corr
    lfk = math.log(f / k)
    z = nu * lfk / alpha
    if abs(z) < 1e-12:  # z/x(z) -> 1
        return alpha * atm_corr
    root = math.sqrt(1.0 - 2.0 * rho * z + z * z)
    x = math.log1p((root - 1.0 + z) / (1.0 - rho)) if abs(z) > 1e-3 else _x_series(z, rho)
    return alpha * (z / x) * atm_corr


def _x_series(z, rho):
    # Taylor series of x(z) about 0, to fifth order
    r2 = rho * rho
    return (z + rho * z**2 / 2 + (3 * r2 - 1) * z**3 / 6 + rho * (5 * r2 - 3) * z**4 / 8
            + (35 * r2 * r2 - 30 * r2 + 3) * z**5 / 40)


def ssvi_vol(theta, rho, phi, kappa, t):
    w = 0.5 * theta * (1.0 + rho * phi * kappa + math.sqrt((phi * kappa + rho) ** 2 + 1.0 - rho * rho))
    return math.sqrt(w / t)


# ---- datasets and cached calibrations ------------------------------------

@functools.lru_cache(maxsize=None)
def record(name: str, label: str | None = None):
    return dataset.load(dataset.bundled(name)).slice(label)


def market_and_quotes(name: str, label: str | None = None):
    r = record(name, label)
    return r.market_slice(), r.quote_slice()


@functools.lru_cache(maxsize=None)
def calibrated(name: str, label: str | None, model: str, method: str):
    return run_calibration(RunConfig(model, method), record(name, label))


SLICES = (("eurhkd_147d", "147d"), ("eurtry", "1y"), ("eurtry", "2y"))
