"""Calibration of smile families to broker quotes (ATM, risk reversals, strangles).

The nested algorithm treats the two smile butterfly vols as outer unknowns.
For each outer trial the vanilla vols follow from the simple smile convention,
their strikes are solved (at flat vol, or under the smile when the strike
lookup is merged into the fit), the family is fitted to the five vanilla vols,
and the market strangles are repriced. The objective holds the two
vega-weighted strangle errors, optionally extended by the ATM and the two
risk-reversal vol errors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .conventions import Convention, atm_strike, market_strangle_strikes, strike_for_delta_flat_vol
from .errors import FxSmileError, InputError, NonPositiveVol, NoRoot, NumericalError, Unreachable
from .lsq import LsqResult, least_squares_solve
from .pricing import MarketSlice, black_forward, norm_pdf
from .roots import brent
from .smiles import (
    Family,
    SabrParams,
    SabrSmile,
    SmileModel,
    XssviParams,
    XssviSmile,
    exact_smile,
    vol_and_strike_for_delta,
)

LEVELS = (0.25, 0.10)
LEG_LABELS = ("10P", "25P", "ATM", "25C", "10C")
UNREACHABLE_PENALTY = 1.0
OUTER_FD_STEP = 1e-6


class Mode(enum.Enum):
    STRIKES_UPFRONT = "strikes-upfront"
    MERGED_DELTA_LOOKUP = "merged-delta-lookup"


@dataclass(frozen=True)
class QuoteSlice:
    """One expiry of broker quotes, vols as decimals (RR signed, BF may be negative)."""

    sigma_atm: float
    rr25: float
    bf25: float
    rr10: float
    bf10: float
    convention: Convention
    maturity: float

    def __post_init__(self):
        if not self.sigma_atm > 0:
            raise InputError("ATM vol must be positive")
        if not self.maturity > 0:
            raise InputError("maturity must be positive")
        for label, vol in zip(LEG_LABELS, self.simple_vols()):
            if not vol > 0:
                raise NonPositiveVol(f"quote implies non-positive {label} vanilla vol {vol:.6g}", label)

    @classmethod
    def from_percent(cls, atm, rr25, bf25, rr10, bf10, convention: Convention, maturity: float):
        return cls(atm / 100, rr25 / 100, bf25 / 100, rr10 / 100, bf10 / 100, convention, maturity)

    def rr(self, x: float) -> float:
        return self.rr25 if x == 0.25 else self.rr10

    def bf(self, x: float) -> float:
        return self.bf25 if x == 0.25 else self.bf10

    def simple_vols(self) -> np.ndarray:
        return vanilla_vols_from_quotes(self, self.bf25, self.bf10, check=False)


@dataclass(frozen=True)
class StrikeSet:
    k_atm: float
    k_ms_put25: float
    k_ms_call25: float
    k_ms_put10: float
    k_ms_call10: float
    k_put25: float
    k_call25: float
    k_put10: float
    k_call10: float

    def vanilla(self) -> np.ndarray:
        """Strikes in leg order 10P, 25P, ATM, 25C, 10C."""
        return np.array([self.k_put10, self.k_put25, self.k_atm, self.k_call25, self.k_call10])

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ResidualVector:
    """Vol-unit errors; ``None`` marks a leg whose strike could not be solved."""

    ms25: float | None
    ms10: float | None
    rr25: float | None
    rr10: float | None
    atm: float | None

    def as_array(self, dim: int = 5) -> np.ndarray:
        vals = [self.ms25, self.ms10] if dim == 2 else [self.ms25, self.ms10, self.rr25, self.rr10, self.atm]
        return np.array([np.nan if v is None else v for v in vals])

    @property
    def missing(self) -> tuple[str, ...]:
        return tuple(k for k, v in self.as_dict().items() if v is None)

    def l2(self) -> float:
        arr = self.as_array(5)
        return float(np.linalg.norm(arr[np.isfinite(arr)]))

    def as_dict(self) -> dict:
        return {"ms25": self.ms25, "ms10": self.ms10, "rr25": self.rr25, "rr10": self.rr10, "atm": self.atm}


@dataclass(frozen=True)
class ImpliedVanilla:
    label: str
    strike: float | None
    vol: float | None
    error: str | None = None


@dataclass(frozen=True)
class ErrorReport:
    l2_fixed_strikes: float
    l2_fixed_deltas: float
    residuals_fixed_strikes: ResidualVector
    residuals_fixed_deltas: ResidualVector

    @property
    def complete(self) -> bool:
        return not self.residuals_fixed_deltas.missing


@dataclass(frozen=True)
class CalibrationReport:
    model: SmileModel
    strikes: StrikeSet
    residuals: ResidualVector
    l2_fixed_strikes: float
    l2_fixed_deltas: float
    implied_vanillas: tuple[ImpliedVanilla, ...]
    iterations: int
    converged: bool
    method: str = ""
    smile_bf: tuple[float, float] | None = None
    missing_legs: tuple[str, ...] = field(default=())

    def objective(self) -> float:
        """Half the squared norm of the calibration-mode dim-5 residuals."""
        r = self.residuals.as_array(5)
        return 0.5 * float(r @ r)


@dataclass(frozen=True)
class StrangleTarget:
    price: float
    k_put: float
    k_call: float
    weight: float


# --------------------------------------------------------------------------
# quote arithmetic
# --------------------------------------------------------------------------


def vanilla_vols_from_quotes(q: QuoteSlice, bf_smile25: float, bf_smile10: float, *, check: bool = True) -> np.ndarray:
    """Vanilla vols (10P, 25P, ATM, 25C, 10C) by the simple smile convention."""
    a = q.sigma_atm
    vols = np.array([
        a + bf_smile10 - 0.5 * q.rr10,
        a + bf_smile25 - 0.5 * q.rr25,
        a,
        a + bf_smile25 + 0.5 * q.rr25,
        a + bf_smile10 + 0.5 * q.rr10,
    ])
    if check:
        for label, vol in zip(LEG_LABELS, vols):
            if not vol > 0:
                raise NonPositiveVol(f"non-positive {label} vanilla vol {vol:.6g}", label)
    return vols


def _flat_strikes(q: QuoteSlice, mkt: MarketSlice, vols) -> np.ndarray:
    style = q.convention.delta_style
    return np.array([
        strike_for_delta_flat_vol(style, -1, -0.10, mkt, vols[0]),
        strike_for_delta_flat_vol(style, -1, -0.25, mkt, vols[1]),
        atm_strike(q.convention, mkt, q.sigma_atm),
        strike_for_delta_flat_vol(style, 1, 0.25, mkt, vols[3]),
        strike_for_delta_flat_vol(style, 1, 0.10, mkt, vols[4]),
    ])


def upfront_strikes(q: QuoteSlice, mkt: MarketSlice, bf_smile25: float | None = None,
                    bf_smile10: float | None = None) -> np.ndarray:
    """Vanilla strikes solved at the simple-convention vols (market BFs by default)."""
    bf25 = q.bf25 if bf_smile25 is None else bf_smile25
    bf10 = q.bf10 if bf_smile10 is None else bf_smile10
    return _flat_strikes(q, mkt, vanilla_vols_from_quotes(q, bf25, bf10))


def market_strangle_target(q: QuoteSlice, mkt: MarketSlice, x: float) -> StrangleTarget:
    """Broker strangle price at the flat vol ``atm + bf`` and its inverse-vega weight."""
    vol = q.sigma_atm + q.bf(x)
    if not vol > 0:
        raise NonPositiveVol(f"strangle flat vol {vol:.6g} is not positive")
    k_put, k_call = market_strangle_strikes(x, q.convention, mkt, q.sigma_atm, q.bf(x))
    f, t = mkt.forward, mkt.t
    price = mkt.df_dom * (black_forward(-1, f, k_put, vol, t) + black_forward(1, f, k_call, vol, t))
    s = vol * math.sqrt(t)
    d1p = math.log(f / k_put) / s + 0.5 * s
    d1c = math.log(f / k_call) / s + 0.5 * s
    weight = 1.0 / ((float(norm_pdf(d1p)) + float(norm_pdf(d1c))) * math.sqrt(t) * f)
    return StrangleTarget(price, k_put, k_call, weight)


def _strangle_error(m: SmileModel, mkt: MarketSlice, tgt: StrangleTarget) -> float:
    vols = m.vol(np.array([tgt.k_put, tgt.k_call]))
    f, t = mkt.forward, mkt.t
    model = mkt.df_dom * (black_forward(-1, f, tgt.k_put, vols[0], t) + black_forward(1, f, tgt.k_call, vols[1], t))
    # undiscounted price difference so that the weight is an exact inverse vega
    return tgt.weight * (model - tgt.price) / mkt.df_dom


# --------------------------------------------------------------------------
# residuals
# --------------------------------------------------------------------------


def _smile_strikes(m: SmileModel, q: QuoteSlice, *, strict: bool = True):
    """Vanilla (strike, vol) pairs solved under the smile; failures become None when not strict."""
    style = q.convention.delta_style
    out = {}
    for label, eta, target in (("10P", -1, -0.10), ("25P", -1, -0.25), ("25C", 1, 0.25), ("10C", 1, 0.10)):
        try:
            out[label] = vol_and_strike_for_delta(m, style, eta, target, leg=label)
        except (Unreachable, NoRoot, NonPositiveVol) as exc:
            if strict:
                raise
            out[label] = exc
    return out


def evaluate_residuals(
    m: SmileModel,
    q: QuoteSlice,
    mkt: MarketSlice,
    mode: Mode = Mode.STRIKES_UPFRONT,
    *,
    strikes=None,
    strict: bool = False,
) -> ResidualVector:
    """Dim-5 residuals of ``m`` against the quotes.

    With ``STRIKES_UPFRONT`` the vanilla strikes are taken from ``strikes``
    (leg order 10P, 25P, ATM, 25C, 10C), defaulting to the flat-vol strikes
    of the simple smile convention at market butterflies. With
    ``MERGED_DELTA_LOOKUP`` they are solved under the smile; legs that cannot
    be solved are reported as ``None`` unless ``strict``.
    """
    ms = [_strangle_error(m, mkt, market_strangle_target(q, mkt, x)) for x in LEVELS]
    k_atm = atm_strike(q.convention, mkt, q.sigma_atm)
    atm = m.vol(k_atm) - q.sigma_atm
    if mode is Mode.STRIKES_UPFRONT:
        ks = upfront_strikes(q, mkt) if strikes is None else np.asarray(strikes, dtype=float)
        v = m.vol(ks)
        rr25 = v[3] - v[1] - q.rr25
        rr10 = v[4] - v[0] - q.rr10
    else:
        legs = _smile_strikes(m, q, strict=strict)

        def rr(call, put, quote):
            if isinstance(legs[call], Exception) or isinstance(legs[put], Exception):
                return None
            return legs[call][1] - legs[put][1] - quote

        rr25 = rr("25C", "25P", q.rr25)
        rr10 = rr("10C", "10P", q.rr10)
    return ResidualVector(ms[0], ms[1], rr25, rr10, atm)


def implied_vanilla_quotes(m: SmileModel, q: QuoteSlice) -> tuple[ImpliedVanilla, ...]:
    """ATM at the convention strike; wings at the strikes of the quoted deltas under the smile."""
    legs = _smile_strikes(m, q, strict=False)
    k_atm = atm_strike(q.convention, m.mkt, q.sigma_atm)
    out = []
    for label in LEG_LABELS:
        if label == "ATM":
            out.append(ImpliedVanilla(label, k_atm, m.vol(k_atm)))
        elif isinstance(legs[label], Exception):
            out.append(ImpliedVanilla(label, None, None, legs[label].tag))
        else:
            out.append(ImpliedVanilla(label, *legs[label]))
    return tuple(out)


def error_report(m: SmileModel, q: QuoteSlice, mkt: MarketSlice, *, fixed_strikes=None) -> ErrorReport:
    """Dim-5 l2 errors with frozen vanilla strikes and with strikes re-solved from deltas."""
    fixed = evaluate_residuals(m, q, mkt, Mode.STRIKES_UPFRONT, strikes=fixed_strikes)
    merged = evaluate_residuals(m, q, mkt, Mode.MERGED_DELTA_LOOKUP)
    return ErrorReport(fixed.l2(), merged.l2(), fixed, merged)


# --------------------------------------------------------------------------
# fitting a family to vanilla vols
# --------------------------------------------------------------------------


@dataclass
class FamilySpec:
    """Parameter vector layout of a parametric family, with optional ATM pinning."""

    family: Family
    mkt: MarketSlice
    fix_atm: bool = False
    k_atm: float | None = None
    sigma_atm: float | None = None

    def bounds(self):
        if self.family is Family.SABR:
            lo, hi = np.array([1e-4, -0.999, 0.0]), np.array([10.0, 0.999, 25.0])
        else:
            lo, hi = np.array([1e-8, -0.999, 1e-6]), np.array([25.0, 0.999, 500.0])
        if self.fix_atm:
            return lo[1:], hi[1:]
        return lo, hi

    def starts(self, sigma_ref: float) -> list[np.ndarray]:
        t = self.mkt.t
        if self.family is Family.SABR:
            full = [np.array([sigma_ref, rho, nu]) for nu in (0.4, 1.5) for rho in (-0.5, 0.0, 0.5)]
        else:
            theta = sigma_ref**2 * t
            full = [np.array([theta, rho, phi / math.sqrt(theta)]) for phi in (0.3, 1.0) for rho in (-0.5, 0.0, 0.5)]
        return [x[1:] for x in full] if self.fix_atm else full

    def model(self, x) -> SmileModel:
        if self.fix_atm:
            return self._pinned(x)
        if self.family is Family.SABR:
            return SabrSmile(SabrParams(float(x[0]), float(x[1]), float(x[2])), self.mkt)
        return XssviSmile(XssviParams(float(x[0]), float(x[1]), float(x[2])), self.mkt)

    def _pinned(self, x) -> SmileModel:
        rho, third = float(x[0]), float(x[1])
        k, target = self.k_atm, self.sigma_atm
        if self.family is Family.XSSVI:
            # total variance is linear in theta
            unit = XssviSmile(XssviParams(1.0, rho, third), self.mkt)
            w1 = float(unit.vol(k)) ** 2 * self.mkt.t
            theta = target**2 * self.mkt.t / w1
            return XssviSmile(XssviParams(theta, rho, third), self.mkt)

        def gap(alpha):
            return float(SabrSmile(SabrParams(alpha, rho, third), self.mkt)._raw_vol(np.asarray(k))) - target

        # start from the ATM expansion alpha * (1 + t * (...)) = target
        corr = 1.0 + self.mkt.t * (2.0 - 3.0 * rho * rho) * third * third / 24.0
        guess = target / corr if corr > 0.1 else target
        lo, hi = 0.8 * guess, 1.25 * guess
        for _ in range(60):
            if gap(lo) < 0:
                break
            lo *= 0.5
        else:
            raise NoRoot("cannot pin SABR alpha to the ATM vol")
        for _ in range(60):
            if gap(hi) > 0:
                break
            hi *= 2.0
        else:
            raise NoRoot("cannot pin SABR alpha to the ATM vol")
        alpha = brent(gap, lo, hi, xtol=1e-15)
        return SabrSmile(SabrParams(alpha, rho, third), self.mkt)


def fit_family(spec: FamilySpec, strikes, vols, *, x0=None) -> tuple[SmileModel, LsqResult]:
    """Least-squares fit of a parametric family to (strike, vol) points."""
    strikes = np.asarray(strikes, dtype=float)
    vols = np.asarray(vols, dtype=float)
    lo, hi = spec.bounds()

    def resid(x):
        return spec.model(x).vol(strikes) - vols

    starts = [np.asarray(x0, dtype=float)] if x0 is not None else spec.starts(float(vols[2]))
    best = None
    for start in starts:
        res = least_squares_solve(resid, start, lo, hi)
        if np.all(np.isfinite(res.residuals)) and (best is None or res.cost < best.cost):
            best = res
    if best is None:
        raise NumericalError(f"{spec.family.value} fit failed from every starting point")
    return spec.model(best.x), best


def fit_family_merged(spec: FamilySpec, q: QuoteSlice, vols, x0, *, penalty=UNREACHABLE_PENALTY):
    """Fit where each wing vol is matched at the strike the smile itself assigns to the delta."""
    style = q.convention.delta_style
    k_atm = atm_strike(q.convention, spec.mkt, q.sigma_atm)
    legs = ((0, -1, -0.10), (1, -1, -0.25), (3, 1, 0.25), (4, 1, 0.10))
    lo, hi = spec.bounds()

    def resid(x):
        m = spec.model(x)
        out = np.empty(5)
        out[2] = m.vol(k_atm) - vols[2]
        for i, eta, target in legs:
            try:
                out[i] = vol_and_strike_for_delta(m, style, eta, target)[1] - vols[i]
            except (Unreachable, NoRoot, NonPositiveVol):
                out[i] = penalty
        return out

    res = least_squares_solve(resid, x0, lo, hi)
    return spec.model(res.x), res


# --------------------------------------------------------------------------
# nested calibration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationOptions:
    dim: int = 5
    mode: Mode = Mode.STRIKES_UPFRONT
    fix_atm: bool = False
    penalty: float = UNREACHABLE_PENALTY
    max_iter: int | None = None

    def __post_init__(self):
        if self.dim not in (2, 5):
            raise InputError("objective dimension must be 2 or 5")


class _Nested:
    def __init__(self, family: Family, q: QuoteSlice, mkt: MarketSlice, opts: CalibrationOptions):
        self.family, self.q, self.mkt, self.opts = family, q, mkt, opts
        self.targets = [market_strangle_target(q, mkt, x) for x in LEVELS]
        self.k_atm = atm_strike(q.convention, mkt, q.sigma_atm)
        self.spec = None
        if not family.exact:
            self.spec = FamilySpec(family, mkt, opts.fix_atm, self.k_atm, q.sigma_atm)
        self.anchor = None
        self.merged_anchor = None

    def inner(self, bf):
        """Steps 2-4: vanilla vols, their strikes and the family fit."""
        vols = vanilla_vols_from_quotes(self.q, bf[0], bf[1])
        ks = _flat_strikes(self.q, self.mkt, vols)
        if self.family.exact:
            return exact_smile(self.family, ks, vols, self.mkt), ks
        model, res = fit_family(self.spec, ks, vols, x0=self.anchor)
        if self.anchor is None:
            self.anchor = res.x
        if self.opts.mode is Mode.MERGED_DELTA_LOOKUP:
            model, res = fit_family_merged(self.spec, self.q, vols, self.merged_anchor if self.merged_anchor is not None else res.x,
                                           penalty=self.opts.penalty)
            if self.merged_anchor is None:
                self.merged_anchor = res.x
        return model, ks

    def residuals(self, m: SmileModel, ks) -> np.ndarray:
        ms = [_strangle_error(m, self.mkt, tgt) for tgt in self.targets]
        if self.opts.dim == 2:
            return np.array(ms)
        atm = m.vol(self.k_atm) - self.q.sigma_atm
        if self.opts.mode is Mode.STRIKES_UPFRONT or self.family.exact:
            v = m.vol(ks)
            rr25 = v[3] - v[1] - self.q.rr25
            rr10 = v[4] - v[0] - self.q.rr10
        else:
            legs = _smile_strikes(m, self.q, strict=False)
            p = self.opts.penalty

            def rr(call, put, quote):
                if isinstance(legs[call], Exception) or isinstance(legs[put], Exception):
                    return p
                return legs[call][1] - legs[put][1] - quote

            rr25 = rr("25C", "25P", self.q.rr25)
            rr10 = rr("10C", "10P", self.q.rr10)
        return np.array([ms[0], ms[1], rr25, rr10, atm])

    def objective(self, bf) -> np.ndarray:
        m, ks = self.inner(bf)
        return self.residuals(m, ks)

    def bounds(self):
        q = self.q
        lo = np.array([
            -q.sigma_atm + 0.5 * abs(q.rr25) + 1e-4,
            -q.sigma_atm + 0.5 * abs(q.rr10) + 1e-4,
        ])
        return lo, np.array([2.0, 2.0])


def _method_label(dim: int, mode: Mode) -> str:
    return f"nested{dim}" + ("-merged" if mode is Mode.MERGED_DELTA_LOOKUP else "")


def _report(model, q, mkt, *, calib_mode, vanilla_strikes, smile_bf, iterations, converged, method,
            fixed_strikes) -> CalibrationReport:
    k_atm = atm_strike(q.convention, mkt, q.sigma_atm)
    ms25 = market_strangle_strikes(0.25, q.convention, mkt, q.sigma_atm, q.bf25)
    ms10 = market_strangle_strikes(0.10, q.convention, mkt, q.sigma_atm, q.bf10)
    errs = error_report(model, q, mkt, fixed_strikes=fixed_strikes)
    vanillas = implied_vanilla_quotes(model, q)
    if calib_mode is Mode.STRIKES_UPFRONT:
        residuals = errs.residuals_fixed_strikes
        ks = vanilla_strikes
    else:
        residuals = errs.residuals_fixed_deltas
        by_label = {v.label: v.strike for v in vanillas}
        ks = [by_label["10P"], by_label["25P"], k_atm, by_label["25C"], by_label["10C"]]
        ks = [np.nan if k is None else k for k in ks]
    strikes = StrikeSet(k_atm, ms25[0], ms25[1], ms10[0], ms10[1], ks[1], ks[3], ks[0], ks[4])
    return CalibrationReport(
        model=model,
        strikes=strikes,
        residuals=residuals,
        l2_fixed_strikes=errs.l2_fixed_strikes,
        l2_fixed_deltas=errs.l2_fixed_deltas,
        implied_vanillas=vanillas,
        iterations=iterations,
        converged=converged,
        method=method,
        smile_bf=smile_bf,
        missing_legs=errs.residuals_fixed_deltas.missing,
    )


def calibrate_nested(family: Family, q: QuoteSlice, mkt: MarketSlice,
                     opts: CalibrationOptions = CalibrationOptions()) -> CalibrationReport:
    """Nested calibration with the two smile butterflies as outer unknowns.

    Exact interpolations reproduce the five vanilla vols, so their strike
    lookup under the smile coincides with the flat-vol lookup and ``mode``
    makes no difference for them.
    """
    problem = _Nested(family, q, mkt, opts)
    x0 = np.array([q.bf25, q.bf10])
    lo, hi = problem.bounds()
    x0 = np.clip(x0, lo, hi)
    problem.inner(x0)  # fixes the warm-start anchor before any finite differences
    res = least_squares_solve(problem.objective, x0, lo, hi, fd_step=OUTER_FD_STEP, max_iter=opts.max_iter)
    if not np.all(np.isfinite(res.residuals)):
        raise NumericalError(f"nested {family.value} calibration failed at the initial guess: {res.message}")
    model, ks = problem.inner(res.x)
    method = _method_label(opts.dim, opts.mode)
    return _report(model, q, mkt, calib_mode=opts.mode, vanilla_strikes=ks, smile_bf=(float(res.x[0]), float(res.x[1])),
                   iterations=res.iterations, converged=res.converged, method=method, fixed_strikes=ks)


def calibrate_direct(family: Family, q: QuoteSlice, mkt: MarketSlice, *, fix_atm: bool = False,
                     penalty: float = UNREACHABLE_PENALTY, max_iter: int | None = None) -> CalibrationReport:
    """Single minimisation over the smile parameters of the dim-5 merged-lookup objective.

    Exact families have no free parameters beyond the five vols; they are
    delegated to the nested solve, which is exact.
    """
    if family.exact:
        rep = calibrate_nested(family, q, mkt, CalibrationOptions(dim=5, mode=Mode.MERGED_DELTA_LOOKUP))
        return CalibrationReport(**{**rep.__dict__, "method": "direct"})
    vols = vanilla_vols_from_quotes(q, q.bf25, q.bf10)
    ks = _flat_strikes(q, mkt, vols)
    k_atm = ks[2]
    spec = FamilySpec(family, mkt, fix_atm, k_atm, q.sigma_atm)
    _, guess = fit_family(spec, ks, vols)
    targets = [market_strangle_target(q, mkt, x) for x in LEVELS]

    def resid(x):
        m = spec.model(x)
        legs = _smile_strikes(m, q, strict=False)

        def rr(call, put, quote):
            if isinstance(legs[call], Exception) or isinstance(legs[put], Exception):
                return penalty
            return legs[call][1] - legs[put][1] - quote

        return np.array([
            _strangle_error(m, mkt, targets[0]),
            _strangle_error(m, mkt, targets[1]),
            rr("25C", "25P", q.rr25),
            rr("10C", "10P", q.rr10),
            m.vol(k_atm) - q.sigma_atm,
        ])

    lo, hi = spec.bounds()
    res = least_squares_solve(resid, guess.x, lo, hi, max_iter=max_iter)
    model = spec.model(res.x)
    return _report(model, q, mkt, calib_mode=Mode.MERGED_DELTA_LOOKUP, vanilla_strikes=ks, smile_bf=None,
                   iterations=res.iterations, converged=res.converged, method="direct", fixed_strikes=ks)


def calibrate_via_exact(family: Family, exact_kind: Family, q: QuoteSlice, mkt: MarketSlice, *,
                        fix_atm: bool = False) -> CalibrationReport:
    """Fit ``family`` to the vanillas implied by an exact interpolation of the quotes."""
    if exact_kind not in (Family.SPLINE_LOGM, Family.SPLINE_DELTA):
        raise InputError("exact interpolation must be spline-logm or spline-delta")
    exact = calibrate_nested(exact_kind, q, mkt, CalibrationOptions(dim=5))
    ks = exact.strikes.vanilla()
    vols = exact.model.vol(ks)
    method = "via-spline" if exact_kind is Family.SPLINE_LOGM else "via-spline-delta"
    if family.exact:
        model = exact_smile(family, ks, vols, mkt)
        iterations, converged = 0, True
    else:
        spec = FamilySpec(family, mkt, fix_atm, ks[2], q.sigma_atm)
        model, res = fit_family(spec, ks, vols)
        iterations, converged = res.iterations, res.converged
    return _report(model, q, mkt, calib_mode=Mode.STRIKES_UPFRONT, vanilla_strikes=ks, smile_bf=exact.smile_bf,
                   iterations=iterations, converged=converged and exact.converged, method=method, fixed_strikes=ks)


def report_from_model(model: SmileModel, q: QuoteSlice, mkt: MarketSlice) -> CalibrationReport:
    """Report for a smile whose parameters were supplied rather than fitted."""
    ks = upfront_strikes(q, mkt)
    return _report(model, q, mkt, calib_mode=Mode.STRIKES_UPFRONT, vanilla_strikes=ks, smile_bf=None,
                   iterations=0, converged=True, method="no-fit", fixed_strikes=ks)


__all__ = [
    "CalibrationOptions",
    "CalibrationReport",
    "ErrorReport",
    "FamilySpec",
    "ImpliedVanilla",
    "Mode",
    "QuoteSlice",
    "ResidualVector",
    "StrikeSet",
    "calibrate_direct",
    "calibrate_nested",
    "calibrate_via_exact",
    "error_report",
    "evaluate_residuals",
    "fit_family",
    "implied_vanilla_quotes",
    "market_strangle_target",
    "report_from_model",
    "upfront_strikes",
    "vanilla_vols_from_quotes",
]
