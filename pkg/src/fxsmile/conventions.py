"""Broker quoting conventions and the strikes they imply at a flat volatility."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtri

from .errors import ConvergenceError, InputError, Unreachable
from .pricing import Adjustment, Basis, DeltaStyle, MarketSlice, delta_at
from .roots import brent

DELTA_TOL = 1e-12
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class AtmStyle(enum.Enum):
    DNS = "dns"
    FORWARD = "forward"


@dataclass(frozen=True)
class Convention:
    delta_style: DeltaStyle
    atm_style: AtmStyle = AtmStyle.DNS

    def __post_init__(self):
        if self.delta_style is DeltaStyle.SIMPLE:
            raise InputError("simple delta is not a market quoting convention")

    @property
    def premium_adjusted(self) -> bool:
        return self.delta_style.premium_adjusted


@dataclass(frozen=True)
class PairDescriptor:
    base_ccy: str
    quote_ccy: str
    premium_ccy: str
    maturity: float
    latam_atm_forward: bool = False
    both_oecd: bool = False

    def __post_init__(self):
        if self.premium_ccy not in (self.base_ccy, self.quote_ccy):
            raise InputError(
                f"premium currency {self.premium_ccy} is neither {self.base_ccy} nor {self.quote_ccy}"
            )


def resolve_convention(pair: PairDescriptor) -> Convention:
    """Pick the delta and ATM conventions a broker uses for ``pair``."""
    adjustment = Adjustment.PERCENT if pair.premium_ccy == pair.base_ccy else Adjustment.PIPS
    if pair.both_oecd and pair.maturity <= 1.0 and not pair.latam_atm_forward:
        basis = Basis.SPOT
    else:
        basis = Basis.FORWARD
    atm = AtmStyle.FORWARD if pair.latam_atm_forward else AtmStyle.DNS
    return Convention(DeltaStyle.of(basis, adjustment), atm)


def atm_strike(conv: Convention, mkt: MarketSlice, sigma_atm: float) -> float:
    if conv.atm_style is AtmStyle.FORWARD:
        return mkt.forward
    if not sigma_atm > 0 or not mkt.t > 0:
        raise InputError("delta-neutral straddle needs sigma_atm > 0 and t > 0")
    half_var = 0.5 * sigma_atm * sigma_atm * mkt.t
    if conv.premium_adjusted:
        return mkt.forward * math.exp(-half_var)
    return mkt.forward * math.exp(half_var)


def _delta_scale(style: DeltaStyle, mkt: MarketSlice) -> float:
    return mkt.df_for if style.basis is Basis.SPOT else 1.0


def _check_target(eta: int, target: float) -> None:
    if eta not in (1, -1):
        raise InputError("eta must be +1 or -1")
    if not (0 < abs(target) < 1) or math.copysign(1.0, target) != eta:
        raise InputError(f"target delta {target!r} must have sign of eta and |target| in (0, 1)")


def call_delta_max(style: DeltaStyle, mkt: MarketSlice, sigma: float) -> tuple[float, float]:
    """Strike and value of the maximum premium-adjusted call delta.

    The derivative of the delta in log-strike has the sign of
    ``N(d2) - pdf(d2) / s``; its single zero is located by a bracketing solve
    over ``ln F +/- 10 s``.
    """
    if not style.premium_adjusted:
        raise InputError("call delta maximum only exists for premium-adjusted deltas")
    s = sigma * mkt.sqrt_t
    if not s > 0:
        raise InputError("sigma*sqrt(t) must be positive")
    log_s = math.log(s)

    def slope_sign(x):
        d2 = -x / s - 0.5 * s
        # log(N(d2)/pdf(d2)) + log(s), monotone in x
        return float(log_ndtr(d2)) + 0.5 * d2 * d2 + _LOG_SQRT_2PI + log_s

    lo, hi = -10.0 * s, 10.0 * s
    while slope_sign(lo) <= 0:
        lo *= 2.0
    while slope_sign(hi) >= 0:
        hi *= 2.0
    x_star = brent(slope_sign, lo, hi, xtol=1e-14)
    k_star = mkt.forward * math.exp(x_star)
    return k_star, float(delta_at(style, 1, k_star, mkt, sigma))


def _log_strike_solve(fn, lo: float, hi: float, step: float, increasing: bool) -> float:
    """Expand ``[lo, hi]`` outward until ``fn`` changes sign, then solve."""
    for _ in range(200):
        f_lo, f_hi = fn(lo), fn(hi)
        if f_lo * f_hi <= 0:
            return brent(fn, lo, hi)
        if (f_lo > 0) == increasing:
            lo -= step
        else:
            hi += step
        step *= 2.0
    raise ConvergenceError("could not bracket the strike")


def strike_for_delta_flat_vol(
    style: DeltaStyle, eta: int, target: float, mkt: MarketSlice, sigma: float
) -> float:
    """Strike whose delta at the flat volatility ``sigma`` equals ``target``.

    Premium-adjusted calls have two solutions below the maximum delta; the
    out-of-the-money (higher) strike is returned.
    """
    _check_target(eta, target)
    if style is DeltaStyle.SIMPLE:
        raise InputError("use the smile solver for simple deltas")
    s = sigma * mkt.sqrt_t
    if not s > 0:
        raise InputError("sigma*sqrt(t) must be positive")
    scale = _delta_scale(style, mkt)
    f = mkt.forward

    def residual(x):
        return float(delta_at(style, eta, f * math.exp(x), mkt, sigma)) - target

    if style.adjustment is Adjustment.PIPS:
        p = eta * target / scale
        if not 0 < p < 1:
            raise Unreachable(target, eta * scale)
        x = -eta * s * float(ndtri(p)) + 0.5 * s * s
        if abs(residual(x)) < DELTA_TOL:
            return f * math.exp(x)
        # polishing only matters deep in the wings
        x = _log_strike_solve(residual, x - 1e-3 * s, x + 1e-3 * s, 1e-3 * s, increasing=False)
    elif eta == 1:
        k_star, d_star = call_delta_max(style, mkt, sigma)
        if target >= d_star:
            raise Unreachable(target, d_star)
        x_star = math.log(k_star / f)
        hi = x_star + s
        while residual(hi) > 0:
            hi += 2.0 * s
        x = brent(residual, x_star, hi)
    else:
        # premium-adjusted put delta decreases monotonically in strike
        x0 = s * float(ndtri(min(-target / scale, 0.999))) - 0.5 * s * s
        x = _log_strike_solve(residual, x0 - 0.1 * s, x0 + 0.1 * s, 0.1 * s, increasing=False)
    if abs(residual(x)) >= DELTA_TOL:
        raise ConvergenceError(f"strike solve residual {residual(x):.3g} above tolerance")
    return f * math.exp(x)


def market_strangle_strikes(
    x: float, conv: Convention, mkt: MarketSlice, sigma_atm: float, bf_market: float
) -> tuple[float, float]:
    """Put and call strikes of the broker strangle at the flat vol ``sigma_atm + bf``."""
    if x not in (0.10, 0.25):
        raise InputError(f"strangle delta level must be 0.10 or 0.25, got {x!r}")
    vol = sigma_atm + bf_market
    if not vol > 0:
        raise InputError("strangle flat vol must be positive")
    style = conv.delta_style
    k_put = strike_for_delta_flat_vol(style, -1, -x, mkt, vol)
    k_call = strike_for_delta_flat_vol(style, 1, x, mkt, vol)
    return k_put, k_call


def delta_is_monotone(values) -> bool:
    diff = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(diff < 0) or np.all(diff > 0))
