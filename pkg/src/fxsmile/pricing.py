"""Black-model vanilla pricing, the FX delta styles and vega.

Every function accepts scalars or numpy arrays for strikes and volatilities.
Volatilities are decimals (0.06575, not 6.575).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InputError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_CONSISTENCY_TOL = 1e-10


class Basis(enum.Enum):
    FORWARD = "forward"
    SPOT = "spot"


class Adjustment(enum.Enum):
    PIPS = "pips"
    PERCENT = "percent"


class DeltaStyle(enum.Enum):
    """Delta quoting style. ``SIMPLE`` is Clark's simple delta."""

    FORWARD_PIPS = (Basis.FORWARD, Adjustment.PIPS)
    FORWARD_PERCENT = (Basis.FORWARD, Adjustment.PERCENT)
    SPOT_PIPS = (Basis.SPOT, Adjustment.PIPS)
    SPOT_PERCENT = (Basis.SPOT, Adjustment.PERCENT)
    SIMPLE = (None, None)

    @property
    def basis(self) -> Basis | None:
        return self.value[0]

    @property
    def adjustment(self) -> Adjustment | None:
        return self.value[1]

    @property
    def premium_adjusted(self) -> bool:
        return self.adjustment is Adjustment.PERCENT

    @classmethod
    def of(cls, basis: Basis, adjustment: Adjustment) -> DeltaStyle:
        return cls((basis, adjustment))


@dataclass(frozen=True)
class MarketSlice:
    """Spot, forward and discount factors for one expiry.

    Use :meth:`build` to derive the missing quantity from the others.
    """

    spot: float
    forward: float
    df_dom: float
    df_for: float
    t: float

    def __post_init__(self):
        for name in ("spot", "forward", "df_dom", "df_for", "t"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"MarketSlice.{name} must be finite")
        if self.spot <= 0 or self.forward <= 0:
            raise InputError("spot and forward must be positive")
        if not (0 < self.df_dom <= 1.5 and 0 < self.df_for <= 1.5):
            raise InputError("discount factors must lie in (0, 1.5]")
        if self.t < 0:
            raise InputError("year fraction must be non-negative")
        implied = self.spot * self.df_for / self.df_dom
        if abs(self.forward - implied) / self.forward > _CONSISTENCY_TOL:
            raise InputError(
                f"forward {self.forward!r} inconsistent with spot*df_for/df_dom = {implied!r}"
            )

    @classmethod
    def build(
        cls,
        t: float,
        *,
        spot: float | None = None,
        forward: float | None = None,
        df_dom: float | None = None,
        df_for: float | None = None,
    ) -> MarketSlice:
        """Complete a market slice from any consistent subset of its fields.

        Accepted combinations: all four; ``forward`` alone (unit discount
        factors, spot = forward); ``forward`` with one or both discount
        factors; ``spot`` with both discount factors.
        """
        if forward is None:
            if spot is None or df_for is None or df_dom is None:
                raise InputError("need forward, or spot with df_dom and df_for")
            forward = spot * df_for / df_dom
        else:
            if df_dom is None and df_for is None:
                df_dom = df_for = 1.0
            if spot is None:
                if df_dom is None:
                    df_dom = 1.0
                if df_for is None:
                    df_for = 1.0
                spot = forward * df_dom / df_for
            elif df_for is None:
                df_for = forward * df_dom / spot
            elif df_dom is None:
                df_dom = spot * df_for / forward
        return cls(float(spot), float(forward), float(df_dom), float(df_for), float(t))

    @classmethod
    def from_rates(cls, t: float, spot: float, r_dom: float, r_for: float) -> MarketSlice:
        """Continuously compounded domestic/foreign rates."""
        return cls.build(t, spot=spot, df_dom=math.exp(-r_dom * t), df_for=math.exp(-r_for * t))

    @property
    def sqrt_t(self) -> float:
        return math.sqrt(self.t)


@dataclass(frozen=True)
class OptionSpec:
    eta: int
    strike: float

    def __post_init__(self):
        if self.eta not in (1, -1):
            raise InputError(f"eta must be +1 or -1, got {self.eta!r}")
        if not (self.strike > 0 and math.isfinite(self.strike)):
            raise InputError(f"strike must be positive and finite, got {self.strike!r}")


def gaussian(x):
    """Standard normal density and distribution at ``x``."""
    x = np.asarray(x, dtype=float)
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    cdf = ndtr(x)
    if pdf.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def norm_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.asarray(x, dtype=float) ** 2)


def _total_vol(sigma, t):
    s = np.asarray(sigma, dtype=float) * math.sqrt(t)
    if np.any(~(s > 0)):
        raise InputError("sigma*sqrt(t) must be positive")
    return s


def d12(f, k, sigma, t):
    """Black ``d1`` and ``d2``. Rejects a zero total volatility."""
    s = _total_vol(sigma, t)
    d1 = np.log(np.asarray(f, dtype=float) / np.asarray(k, dtype=float)) / s + 0.5 * s
    d2 = d1 - s
    if np.ndim(d1) == 0:
        return float(d1), float(d2)
    return d1, d2


def _as_out(x):
    return float(x) if np.ndim(x) == 0 else x


def black_forward(eta: int, f, k, sigma, t):
    """Undiscounted Black price. Returns intrinsic value when sigma*sqrt(t) == 0."""
    f = np.asarray(f, dtype=float)
    k = np.asarray(k, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0) or t < 0:
        raise InputError("sigma and t must be non-negative")
    s = sigma * math.sqrt(t)
    intrinsic = np.maximum(eta * (f - k), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.log(f / k) / s + 0.5 * s
        d2 = d1 - s
        price = eta * (f * ndtr(eta * d1) - k * ndtr(eta * d2))
    price = np.where(s > 0, np.maximum(price, intrinsic), intrinsic)
    return _as_out(price)


def vanilla_price(opt: OptionSpec, mkt: MarketSlice, sigma):
    """Discounted Black price of a European call (eta=+1) or put (eta=-1)."""
    if not np.all(np.isfinite(sigma)):
        raise InputError("sigma must be finite")
    return _as_out(mkt.df_dom * np.asarray(black_forward(opt.eta, mkt.forward, opt.strike, sigma, mkt.t)))


def delta_at(style: DeltaStyle, eta: int, k, mkt: MarketSlice, sigma):
    """Delta of an option with strike ``k`` (array friendly)."""
    s = _total_vol(sigma, mkt.t)
    k = np.asarray(k, dtype=float)
    log_fk = np.log(mkt.forward / k)
    if style is DeltaStyle.SIMPLE:
        return _as_out(ndtr(log_fk / s))
    d1 = log_fk / s + 0.5 * s
    if style.adjustment is Adjustment.PIPS:
        value = eta * ndtr(eta * d1)
    else:
        value = (k / mkt.forward) * eta * ndtr(eta * (d1 - s))
    if style.basis is Basis.SPOT:
        value = mkt.df_for * value
    return _as_out(value)


def delta(style: DeltaStyle, opt: OptionSpec, mkt: MarketSlice, sigma):
    return delta_at(style, opt.eta, opt.strike, mkt, sigma)


def simple_delta(f, k, sigma, t):
    """Clark's simple delta ``N(ln(F/K) / (sigma sqrt(t)))``; independent of call/put."""
    s = np.asarray(sigma, dtype=float) * math.sqrt(t)
    return _as_out(ndtr(np.log(np.asarray(f, dtype=float) / np.asarray(k, dtype=float)) / s))


def vega(k, mkt: MarketSlice, sigma):
    """Discounted Black vega ``df_dom * F * pdf(d1) * sqrt(t)``."""
    d1, _ = d12(mkt.forward, k, sigma, mkt.t)
    return _as_out(mkt.df_dom * mkt.forward * norm_pdf(d1) * mkt.sqrt_t)
