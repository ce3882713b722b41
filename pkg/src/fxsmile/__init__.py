"""Continuous FX volatility smiles from broker ATM, risk-reversal and butterfly quotes."""

from .calibration import (
    CalibrationOptions,
    CalibrationReport,
    Mode,
    QuoteSlice,
    calibrate_direct,
    calibrate_nested,
    calibrate_via_exact,
    error_report,
    evaluate_residuals,
    implied_vanilla_quotes,
)
from .conventions import AtmStyle, Convention, PairDescriptor, atm_strike, resolve_convention
from .errors import (
    ConvergenceError,
    FxSmileError,
    InputError,
    NonPositiveVol,
    NoRoot,
    NumericalError,
    Unreachable,
)
from .pricing import DeltaStyle, MarketSlice, OptionSpec, delta, vanilla_price, vega
from .smiles import Family, model_from_params, vol_and_strike_for_delta, vol_at_strike

__version__ = "0.1.0"

__all__ = [
    "AtmStyle",
    "CalibrationOptions",
    "CalibrationReport",
    "Convention",
    "ConvergenceError",
    "DeltaStyle",
    "Family",
    "FxSmileError",
    "InputError",
    "MarketSlice",
    "Mode",
    "NoRoot",
    "NonPositiveVol",
    "NumericalError",
    "OptionSpec",
    "PairDescriptor",
    "QuoteSlice",
    "Unreachable",
    "atm_strike",
    "calibrate_direct",
    "calibrate_nested",
    "calibrate_via_exact",
    "delta",
    "error_report",
    "evaluate_residuals",
    "implied_vanilla_quotes",
    "model_from_params",
    "resolve_convention",
    "vanilla_price",
    "vega",
    "vol_and_strike_for_delta",
    "vol_at_strike",
]
