"""Smile parameterisations sigma(K) and the solvers that evaluate them.

Five shapes are supported: SABR (lognormal expansion with the Obloj
correction), the SSVI slice, natural cubic splines in log-moneyness or in
forward call delta, and the exponential polynomial in simple delta. The last
two are defined implicitly in delta, so evaluating them at a strike means
solving ``g(d) = Delta(K, sigma(d)) - d = 0``; that is done by bracketing on
``[0, 1]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtr

from .errors import ConvergenceError, InputError, NonPositiveVol, NoRoot, Unreachable
from .pricing import DeltaStyle, MarketSlice, delta_at, norm_pdf
from .roots import bracket_solve, brent

SCAN_POINTS = 241
SCAN_WIDTH = 12.0


class Family(enum.Enum):
    SABR = "sabr"
    XSSVI = "xssvi"
    SPLINE_LOGM = "spline-logm"
    SPLINE_DELTA = "spline-delta"
    POLY_DELTA = "poly-delta"

    @property
    def exact(self) -> bool:
        return self in (Family.SPLINE_LOGM, Family.SPLINE_DELTA, Family.POLY_DELTA)


# --------------------------------------------------------------------------
# parameter sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SabrParams:
    alpha: float
    rho: float
    nu: float
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("SABR alpha must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise InputError("SABR beta must be in [0, 1]")
        if not -1.0 < self.rho < 1.0:
            raise InputError("SABR rho must be in (-1, 1)")
        if not self.nu >= 0:
            raise InputError("SABR nu must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.rho, self.nu])


@dataclass(frozen=True)
class XssviParams:
    theta: float
    rho: float
    phi: float

    def __post_init__(self):
        if not self.theta > 0 or not self.phi > 0:
            raise InputError("XSSVI theta and phi must be positive")
        if not -1.0 < self.rho < 1.0:
            raise InputError("XSSVI rho must be in (-1, 1)")
        if not self.theta * self.phi * (1.0 + abs(self.rho)) < 4.0:
            raise InputError("XSSVI slice violates theta*phi*(1+|rho|) < 4")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.rho, self.phi])


@dataclass(frozen=True)
class SplineNodes:
    abscissae: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        x = np.asarray(self.abscissae, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.shape != y.shape or x.size < 2:
            raise InputError("spline needs matching abscissae and values")
        if np.any(np.diff(x) <= 0):
            raise InputError("spline abscissae must be strictly increasing (no duplicates)")
        if np.any(~(y > 0)) or not np.all(np.isfinite(x)):
            raise InputError("spline values must be positive and abscissae finite")


@dataclass(frozen=True)
class PolyDeltaParams:
    a: tuple[float, ...]

    def __post_init__(self):
        if len(self.a) != 5 or not np.all(np.isfinite(self.a)):
            raise InputError("polynomial in delta needs five finite coefficients")


# --------------------------------------------------------------------------
# closed-form smiles
# --------------------------------------------------------------------------


def _sabr_raw(p: SabrParams, f: float, k, t: float):
    k = np.asarray(k, dtype=float)
    lfk = np.log(f / k)
    omb = 1.0 - p.beta
    if omb == 0.0:
        q_ratio = np.ones_like(lfk)
        z = p.nu / p.alpha * lfk
        fk_pow = np.ones_like(lfk)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            q = -(f**omb) * np.expm1(-omb * lfk) / omb
            q_ratio = np.where(lfk == 0.0, f ** (-omb), lfk / q)
        z = p.nu / p.alpha * q
        fk_pow = (f * k) ** omb
    rho = p.rho
    root = np.sqrt(1.0 - 2.0 * rho * z + z * z)
    # log1p forms avoid cancellation near z = 0
    root_m1 = (z * z - 2.0 * rho * z) / (root + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_pos = np.log1p((root_m1 + z) / (1.0 - rho))
        x_neg = -np.log1p((root_m1 - z) / (1.0 + rho))
        xz = np.where(z >= 0, x_pos, x_neg)
        ratio = np.where(np.abs(z) < 1e-9, 1.0 - 0.5 * rho * z, z / xz)
    correction = 1.0 + t * (
        omb * omb * p.alpha * p.alpha / (24.0 * fk_pow)
        + rho * p.beta * p.nu * p.alpha / (4.0 * np.sqrt(fk_pow))
        + (2.0 - 3.0 * rho * rho) * p.nu * p.nu / 24.0
    )
    return p.alpha * q_ratio * ratio * correction


def sabr_vol(p: SabrParams, f: float, k, t: float):
    """Lognormal SABR implied vol (Hagan expansion, Obloj leading term)."""
    if not (f > 0 and t > 0) or np.any(np.asarray(k) <= 0):
        raise InputError("sabr_vol needs f, k, t > 0")
    vol = _sabr_raw(p, f, k, t)
    if np.any(~(vol > 0)):
        raise NonPositiveVol("SABR expansion produced a non-positive volatility")
    return float(vol) if np.ndim(vol) == 0 else vol


def xssvi_total_variance(p: XssviParams, kappa):
    kappa = np.asarray(kappa, dtype=float)
    pk = p.phi * kappa
    return 0.5 * p.theta * (1.0 + p.rho * pk + np.sqrt((pk + p.rho) ** 2 + 1.0 - p.rho**2))


def xssvi_vol(p: XssviParams, f: float, k, t: float):
    if not (f > 0 and t > 0) or np.any(np.asarray(k) <= 0):
        raise InputError("xssvi_vol needs f, k, t > 0")
    w = xssvi_total_variance(p, np.log(np.asarray(k, dtype=float) / f))
    vol = np.sqrt(w / t)
    return float(vol) if np.ndim(vol) == 0 else vol


# --------------------------------------------------------------------------
# smile models
# --------------------------------------------------------------------------


class SmileModel:
    """A smile anchored to one market slice. Subclasses are immutable."""

    family: Family
    mkt: MarketSlice
    delta_implicit = False

    def vol(self, k):
        """Implied vol at strike(s) ``k``; raises on undefined values."""
        vol = self._raw_vol(np.asarray(k, dtype=float))
        if np.any(~(vol > 0)):
            raise NonPositiveVol(f"{self.family.value} smile is non-positive at some strike")
        return float(vol) if np.ndim(vol) == 0 else vol

    def vol_or_nan(self, k) -> np.ndarray:
        """Vectorised evaluation that maps undefined points to NaN."""
        try:
            vol = np.asarray(self._raw_vol(np.asarray(k, dtype=float)), dtype=float)
        except (NoRoot, ConvergenceError):
            if np.size(k) == 1:
                return np.full(np.shape(k), np.nan)
            vols = [self.vol_or_nan(np.array([x]))[0] for x in np.ravel(k)]
            return np.asarray(vols).reshape(np.shape(k))
        return np.where(vol > 0, vol, np.nan)

    def _raw_vol(self, k):
        raise NotImplementedError

    def params_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class SabrSmile(SmileModel):
    params: SabrParams
    mkt: MarketSlice
    family = Family.SABR

    def _raw_vol(self, k):
        return _sabr_raw(self.params, self.mkt.forward, k, self.mkt.t)

    def params_dict(self) -> dict:
        p = self.params
        return {"alpha": p.alpha, "beta": p.beta, "rho": p.rho, "nu": p.nu}


@dataclass(frozen=True)
class XssviSmile(SmileModel):
    params: XssviParams
    mkt: MarketSlice
    family = Family.XSSVI

    def _raw_vol(self, k):
        w = xssvi_total_variance(self.params, np.log(k / self.mkt.forward))
        return np.sqrt(np.maximum(w, 0.0) / self.mkt.t)

    def params_dict(self) -> dict:
        p = self.params
        return {"theta": p.theta, "rho": p.rho, "phi": p.phi}


class _SplineMixin:
    nodes: SplineNodes
    _spline: CubicSpline

    def _init_spline(self):
        x = np.asarray(self.nodes.abscissae, dtype=float)
        y = np.asarray(self.nodes.values, dtype=float)
        object.__setattr__(self, "_spline", CubicSpline(x, y, bc_type="natural"))

    def node_vol(self, x):
        """Spline value with flat extrapolation beyond the end nodes."""
        x_lo, x_hi = self.nodes.abscissae[0], self.nodes.abscissae[-1]
        return self._spline(np.clip(x, x_lo, x_hi))

    def params_dict(self) -> dict:
        return {"abscissae": list(self.nodes.abscissae), "values": list(self.nodes.values)}


@dataclass(frozen=True)
class SplineLogMSmile(_SplineMixin, SmileModel):
    nodes: SplineNodes
    mkt: MarketSlice
    _spline: CubicSpline = field(init=False, repr=False, compare=False)
    family = Family.SPLINE_LOGM

    def __post_init__(self):
        self._init_spline()

    def _raw_vol(self, k):
        return self.node_vol(np.log(k / self.mkt.forward))


class _DeltaImplicit:
    """Shared machinery for smiles parameterised by a delta abscissa."""

    delta_implicit = True
    mkt: MarketSlice

    def vol_from_delta(self, d):
        raise NotImplementedError

    def dvol_ddelta(self, d):
        raise NotImplementedError

    def abscissa(self, k, sigma):
        raise NotImplementedError

    def dabscissa_dvol(self, k, sigma):
        raise NotImplementedError

    def g(self, k, d):
        return self.abscissa(k, self.vol_from_delta(d)) - d

    def solve_delta(self, k):
        """Root ``d`` of ``g(d) = abscissa(K, sigma(d)) - d`` on ``[0, 1]``."""
        k = np.asarray(k, dtype=float)
        flat = np.ravel(k)
        d = bracket_solve(lambda d: self.g(flat, d), np.zeros_like(flat), np.ones_like(flat),
                          xtol=1e-16, ftol=1e-15)
        return d.reshape(k.shape) if k.ndim else float(d[0])

    def _raw_vol(self, k):
        return self.vol_from_delta(self.solve_delta(k))


@dataclass(frozen=True)
class SplineDeltaSmile(_DeltaImplicit, _SplineMixin, SmileModel):
    """Natural cubic spline of vol against the forward pips call delta."""

    nodes: SplineNodes
    mkt: MarketSlice
    _spline: CubicSpline = field(init=False, repr=False, compare=False)
    family = Family.SPLINE_DELTA

    def __post_init__(self):
        self._init_spline()

    def vol_from_delta(self, d):
        return self.node_vol(d)

    def dvol_ddelta(self, d):
        x_lo, x_hi = self.nodes.abscissae[0], self.nodes.abscissae[-1]
        inside = (np.asarray(d) > x_lo) & (np.asarray(d) < x_hi)
        return np.where(inside, self._spline(np.clip(d, x_lo, x_hi), 1), 0.0)

    def abscissa(self, k, sigma):
        s = np.asarray(sigma) * self.mkt.sqrt_t
        return ndtr(np.log(self.mkt.forward / k) / s + 0.5 * s)

    def dabscissa_dvol(self, k, sigma):
        sqt = self.mkt.sqrt_t
        d1 = np.log(self.mkt.forward / k) / (sigma * sqt) + 0.5 * sigma * sqt
        return norm_pdf(d1) * (-np.log(self.mkt.forward / k) / (sigma * sigma * sqt) + 0.5 * sqt)


@dataclass(frozen=True)
class PolyDeltaSmile(_DeltaImplicit, SmileModel):
    """``sigma(d) = exp(sum a_i d^i)`` with ``d`` the simple delta."""

    params: PolyDeltaParams
    mkt: MarketSlice
    family = Family.POLY_DELTA

    def _log_poly(self, d):
        return np.polynomial.polynomial.polyval(d, self.params.a)

    def vol_from_delta(self, d):
        return np.exp(self._log_poly(d))

    def dvol_ddelta(self, d):
        deriv = np.polynomial.polynomial.polyder(self.params.a)
        return self.vol_from_delta(d) * np.polynomial.polynomial.polyval(d, deriv)

    def abscissa(self, k, sigma):
        return ndtr(np.log(self.mkt.forward / k) / (np.asarray(sigma) * self.mkt.sqrt_t))

    def dabscissa_dvol(self, k, sigma):
        sqt = self.mkt.sqrt_t
        lfk = np.log(self.mkt.forward / k)
        return norm_pdf(lfk / (sigma * sqt)) * (-lfk / (sigma * sigma * sqt))

    def params_dict(self) -> dict:
        return {"a": list(self.params.a)}


# --------------------------------------------------------------------------
# construction helpers
# --------------------------------------------------------------------------


def build_spline(family: Family, nodes: SplineNodes, mkt: MarketSlice) -> SmileModel:
    """Natural cubic spline smile; abscissae are ln(K/F) or forward pips call delta."""
    if family is Family.SPLINE_LOGM:
        return SplineLogMSmile(nodes, mkt)
    if family is Family.SPLINE_DELTA:
        return SplineDeltaSmile(nodes, mkt)
    raise InputError(f"{family.value} is not a spline family")


def model_from_params(family: Family, params: dict, mkt: MarketSlice) -> SmileModel:
    """Rebuild a smile from the mapping produced by ``params_dict``."""
    try:
        if family is Family.SABR:
            return SabrSmile(SabrParams(float(params["alpha"]), float(params["rho"]), float(params["nu"]),
                                        float(params.get("beta", 1.0))), mkt)
        if family is Family.XSSVI:
            return XssviSmile(XssviParams(float(params["theta"]), float(params["rho"]), float(params["phi"])), mkt)
        if family is Family.POLY_DELTA:
            return PolyDeltaSmile(PolyDeltaParams(tuple(float(a) for a in params["a"])), mkt)
        nodes = SplineNodes(tuple(float(x) for x in params["abscissae"]), tuple(float(v) for v in params["values"]))
        return build_spline(family, nodes, mkt)
    except KeyError as exc:
        raise InputError(f"{family.value} parameters need field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad {family.value} parameters: {exc}") from None


def exact_smile(family: Family, strikes, vols, mkt: MarketSlice) -> SmileModel:
    """Exact interpolation through the given (strike, vol) points."""
    k = np.asarray(strikes, dtype=float)
    v = np.asarray(vols, dtype=float)
    if np.any(~(v > 0)):
        raise NonPositiveVol("exact interpolation needs positive vols")
    sqt = mkt.sqrt_t
    if family is Family.SPLINE_LOGM:
        x = np.log(k / mkt.forward)
    elif family is Family.SPLINE_DELTA:
        s = v * sqt
        x = ndtr(np.log(mkt.forward / k) / s + 0.5 * s)
    elif family is Family.POLY_DELTA:
        x = ndtr(np.log(mkt.forward / k) / (v * sqt))
        coeffs = np.linalg.solve(np.vander(x, 5, increasing=True), np.log(v))
        return PolyDeltaSmile(PolyDeltaParams(tuple(float(c) for c in coeffs)), mkt)
    else:
        raise InputError(f"{family.value} is not an exact interpolation")
    order = np.argsort(x)
    nodes = SplineNodes(tuple(float(a) for a in x[order]), tuple(float(b) for b in v[order]))
    return build_spline(family, nodes, mkt)


def vol_at_strike(m: SmileModel, k):
    """Vol of ``m`` at strike(s) ``k``; delta-implicit smiles are solved by bracketing."""
    if np.any(~(np.asarray(k, dtype=float) > 0)):
        raise InputError("strike must be positive")
    return m.vol(k)


# --------------------------------------------------------------------------
# strike for a target delta under the smile
# --------------------------------------------------------------------------


def _scan_grid(m: SmileModel) -> np.ndarray:
    f = m.mkt.forward
    ref = m.vol_or_nan(np.array([f]))[0]
    if not np.isfinite(ref):
        ref = 0.2
    s = max(ref * m.mkt.sqrt_t, 1e-4)
    return np.linspace(-SCAN_WIDTH * s, SCAN_WIDTH * s, SCAN_POINTS)


def smile_delta_profile(m: SmileModel, style: DeltaStyle, eta: int, log_moneyness) -> np.ndarray:
    """Delta of strikes ``F exp(x)`` priced at the smile's own vol (NaN where undefined)."""
    x = np.asarray(log_moneyness, dtype=float)
    k = m.mkt.forward * np.exp(x)
    vol = m.vol_or_nan(k)
    out = np.full(x.shape, np.nan)
    ok = np.isfinite(vol)
    if ok.any():
        out[ok] = delta_at(style, eta, k[ok], m.mkt, vol[ok])
    return out


def vol_and_strike_for_delta(
    m: SmileModel, style: DeltaStyle, eta: int, target: float, *, leg: str | None = None
) -> tuple[float, float]:
    """Strike and smile vol whose delta, priced at that vol, equals ``target``.

    A dense log-strike scan locates the crossings; the most out-of-the-money
    one (highest strike for calls, lowest for puts) is refined by Brent. This
    also selects the right-hand branch of premium-adjusted call deltas.
    """
    if not (0 < abs(target) < 1) or math.copysign(1.0, target) != eta:
        raise InputError(f"target delta {target!r} must have sign of eta and |target| in (0, 1)")
    grid = _scan_grid(m)
    for widen in (1, 3):
        if widen > 1:
            grid = np.linspace(widen * grid[0], widen * grid[-1], widen * SCAN_POINTS)
        prof = smile_delta_profile(m, style, eta, grid)
        h = prof - target
        valid = np.isfinite(h)
        pairs = np.flatnonzero(valid[:-1] & valid[1:] & (h[:-1] > 0) & (h[1:] <= 0))
        if pairs.size:
            break
    else:
        # report the attainable delta nearest to the target
        gap = np.where(np.isfinite(prof), np.abs(prof - target), np.inf)
        nearest = float(prof[np.argmin(gap)]) if np.isfinite(gap).any() else float("nan")
        raise Unreachable(target, nearest, leg)
    i = pairs[-1] if eta == 1 else pairs[0]
    if h[i + 1] == 0:
        x = float(grid[i + 1])
    else:
        f = m.mkt.forward

        def resid(x):
            k = f * math.exp(x)
            return float(delta_at(style, eta, k, m.mkt, m.vol(k))) - target

        x = brent(resid, float(grid[i]), float(grid[i + 1]))
    k = m.mkt.forward * math.exp(x)
    sigma = m.vol(k)
    if abs(float(delta_at(style, eta, k, m.mkt, sigma)) - target) > 1e-10:
        raise ConvergenceError("smile strike solve did not meet the delta tolerance")
    return k, sigma


# --------------------------------------------------------------------------
# reference iterations for delta-implicit smiles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationResult:
    value: float
    converged: bool
    iterations: int


def fixed_point_vol(m: SmileModel, k: float, sigma0: float, tol: float = 1e-8,
                    max_iter: int = 100) -> IterationResult:
    """Plain fixed point ``sigma <- sigma(abscissa(K, sigma))``."""
    sigma = sigma0
    for n in range(1, max_iter + 1):
        nxt = float(m.vol_from_delta(m.abscissa(k, sigma)))
        if not (math.isfinite(nxt) and nxt > 0):
            return IterationResult(nxt, False, n)
        if abs(nxt - sigma) < tol:
            return IterationResult(nxt, True, n)
        sigma = nxt
    return IterationResult(sigma, False, max_iter)


def newton_vol(m: SmileModel, k: float, sigma0: float, tol: float = 1e-8,
               max_iter: int = 100) -> IterationResult:
    """Newton on ``f(v) = sigma(abscissa(K, v)) - v``."""
    v = sigma0
    for n in range(1, max_iter + 1):
        d = m.abscissa(k, v)
        fv = float(m.vol_from_delta(d)) - v
        dfv = float(m.dvol_ddelta(d) * m.dabscissa_dvol(k, v)) - 1.0
        if dfv == 0 or not math.isfinite(dfv):
            return IterationResult(v, False, n)
        step = fv / dfv
        v = v - step
        if not (math.isfinite(v) and v > 0):
            return IterationResult(v, False, n)
        if abs(step) < tol:
            return IterationResult(v, True, n)
    return IterationResult(v, False, max_iter)


def sigmoid_newton_delta(m: SmileModel, k: float, d0: float = 0.5, tol: float = 1e-14,
                         max_iter: int = 100) -> IterationResult:
    """Newton on ``g(h(y))`` with ``h`` the logistic map, so iterates stay in (0, 1)."""
    y = math.log(d0 / (1.0 - d0))
    for n in range(1, max_iter + 1):
        d = 1.0 / (1.0 + math.exp(-y))
        sigma = float(m.vol_from_delta(d))
        gval = float(m.abscissa(k, sigma)) - d
        dg = float(m.dabscissa_dvol(k, sigma) * m.dvol_ddelta(d)) - 1.0
        slope = dg * d * (1.0 - d)
        if slope == 0 or not math.isfinite(slope):
            return IterationResult(d, False, n)
        step = gval / slope
        y -= step
        if not math.isfinite(y):
            return IterationResult(d, False, n)
        if abs(step) < tol or abs(gval) < 1e-15:
            return IterationResult(1.0 / (1.0 + math.exp(-y)), True, n)
    return IterationResult(1.0 / (1.0 + math.exp(-y)), False, max_iter)
