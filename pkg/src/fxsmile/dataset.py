"""JSON dataset files: quotes in percent, one document holding several slices.

Layout::

    {"schema_version": 1, "name": "...", "slices": [
        {"label": "1y", "maturity": 1.0,
         "pair": {"base": "EUR", "quote": "TRY", "premium": "EUR"},
         "convention": {"delta": "forward-percent", "atm": "dns"},   # optional
         "market": {"spot": 19.3483, "r_dom": 0.3773, "r_for": 0.01784},
         "quotes": {"atm": 22.12, "rr25": 9.385, "bf25": 2.187, "rr10": 21.148, "bf10": 7.633},
         "reference_vanillas": {"10P": 24.08, ...},                    # optional
         "models": [{"name": "Set I", "family": "sabr", "params": {...}}]}]}  # optional

``market`` takes either rates (``r_dom``/``r_for`` with ``spot``) or any subset
of ``spot``, ``forward``, ``df_dom``, ``df_for`` accepted by
:meth:`MarketSlice.build`. Only the fields present in the file are kept, so
writing a parsed file reproduces it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .calibration import QuoteSlice
from .conventions import AtmStyle, Convention, PairDescriptor, resolve_convention
from .errors import InputError, NonPositiveVol
from .pricing import DeltaStyle, MarketSlice
from .smiles import Family, SmileModel, model_from_params

SCHEMA_VERSION = 1
QUOTE_FIELDS = ("atm", "rr25", "bf25", "rr10", "bf10")
MARKET_FIELDS = ("spot", "forward", "df_dom", "df_for", "r_dom", "r_for")
VANILLA_LABELS = ("10P", "25P", "ATM", "25C", "10C")

DELTA_NAMES = {
    "forward-pips": DeltaStyle.FORWARD_PIPS,
    "forward-percent": DeltaStyle.FORWARD_PERCENT,
    "spot-pips": DeltaStyle.SPOT_PIPS,
    "spot-percent": DeltaStyle.SPOT_PERCENT,
}
_DELTA_LABEL = {v: k for k, v in DELTA_NAMES.items()}


class DatasetError(InputError):
    """Malformed dataset; the message names the offending field or line."""


@dataclass(frozen=True)
class Pair:
    base: str
    quote: str
    premium: str
    latam_atm_forward: bool = False
    both_oecd: bool = False


@dataclass(frozen=True)
class ModelEntry:
    name: str
    family: str
    params: dict


@dataclass(frozen=True)
class SliceRecord:
    label: str
    maturity: float
    pair: Pair
    market: dict
    quotes: dict
    convention: dict | None = None
    reference_vanillas: dict | None = None
    models: tuple[ModelEntry, ...] = ()

    def market_slice(self) -> MarketSlice:
        m = self.market
        if "r_dom" in m or "r_for" in m:
            return MarketSlice.from_rates(self.maturity, m["spot"], m["r_dom"], m["r_for"])
        return MarketSlice.build(self.maturity, **{k: m[k] for k in ("spot", "forward", "df_dom", "df_for") if k in m})

    def resolved_convention(self) -> Convention:
        if self.convention is not None:
            return Convention(DELTA_NAMES[self.convention["delta"]], AtmStyle(self.convention.get("atm", "dns")))
        p = self.pair
        return resolve_convention(PairDescriptor(p.base, p.quote, p.premium, self.maturity,
                                                 p.latam_atm_forward, p.both_oecd))

    def quote_slice(self) -> QuoteSlice:
        q = self.quotes
        return QuoteSlice.from_percent(*(q[k] for k in QUOTE_FIELDS), self.resolved_convention(), self.maturity)

    def model(self, name: str) -> SmileModel:
        for entry in self.models:
            if entry.name == name:
                return model_from_params(Family(entry.family), entry.params, self.market_slice())
        raise InputError(f"slice {self.label!r} has no model named {name!r}")


@dataclass(frozen=True)
class DatasetFile:
    name: str
    slices: tuple[SliceRecord, ...]
    description: str = ""
    schema_version: int = SCHEMA_VERSION

    def slice(self, label: str | None = None) -> SliceRecord:
        if label is None:
            return self.slices[0]
        for s in self.slices:
            if s.label == label:
                return s
        raise InputError(f"dataset {self.name!r} has no slice {label!r}; available: "
                         + ", ".join(s.label for s in self.slices))


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _need(obj, key, where):
    if not isinstance(obj, dict):
        raise DatasetError(f"{where}: expected an object")
    if key not in obj:
        raise DatasetError(f"{where}.{key}: missing field")
    return obj[key]


def _number(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise DatasetError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _string(value, where) -> str:
    if not isinstance(value, str) or not value:
        raise DatasetError(f"{where}: expected a non-empty string")
    return value


def _parse_slice(raw, where) -> SliceRecord:
    label = _string(_need(raw, "label", where), f"{where}.label")
    maturity = _number(_need(raw, "maturity", where), f"{where}.maturity")
    if maturity <= 0:
        raise DatasetError(f"{where}.maturity: must be positive")

    p = _need(raw, "pair", where)
    pair = Pair(
        _string(_need(p, "base", f"{where}.pair"), f"{where}.pair.base"),
        _string(_need(p, "quote", f"{where}.pair"), f"{where}.pair.quote"),
        _string(_need(p, "premium", f"{where}.pair"), f"{where}.pair.premium"),
        bool(p.get("latam_atm_forward", False)),
        bool(p.get("both_oecd", False)),
    )

    m = _need(raw, "market", where)
    if not isinstance(m, dict):
        raise DatasetError(f"{where}.market: expected an object")
    unknown = set(m) - set(MARKET_FIELDS)
    if unknown:
        raise DatasetError(f"{where}.market.{sorted(unknown)[0]}: unknown field")
    market = {k: _number(m[k], f"{where}.market.{k}") for k in MARKET_FIELDS if k in m}
    if ("r_dom" in market) != ("r_for" in market) or (("r_dom" in market) and "spot" not in market):
        raise DatasetError(f"{where}.market: rates need spot, r_dom and r_for together")

    q = _need(raw, "quotes", where)
    quotes = {k: _number(_need(q, k, f"{where}.quotes"), f"{where}.quotes.{k}") for k in QUOTE_FIELDS}

    conv = raw.get("convention")
    if conv is not None:
        delta = _need(conv, "delta", f"{where}.convention")
        if delta not in DELTA_NAMES:
            raise DatasetError(f"{where}.convention.delta: expected one of {', '.join(DELTA_NAMES)}")
        atm = conv.get("atm", "dns")
        if atm not in {a.value for a in AtmStyle}:
            raise DatasetError(f"{where}.convention.atm: expected dns or forward")
        conv = {"delta": delta, "atm": atm}

    ref = raw.get("reference_vanillas")
    if ref is not None:
        ref = {k: _number(_need(ref, k, f"{where}.reference_vanillas"), f"{where}.reference_vanillas.{k}")
               for k in VANILLA_LABELS}

    models = []
    for i, entry in enumerate(raw.get("models", [])):
        w = f"{where}.models[{i}]"
        family = _string(_need(entry, "family", w), f"{w}.family")
        if family not in {f.value for f in Family}:
            raise DatasetError(f"{w}.family: unknown family {family!r}")
        params = _need(entry, "params", w)
        if not isinstance(params, dict):
            raise DatasetError(f"{w}.params: expected an object")
        models.append(ModelEntry(_string(_need(entry, "name", w), f"{w}.name"), family, params))

    record = SliceRecord(label, maturity, pair, market, quotes, conv, ref, tuple(models))
    try:
        record.market_slice()
        record.quote_slice()
    except (InputError, NonPositiveVol) as exc:
        raise DatasetError(f"{where}: {exc}") from None
    return record


def parse_dataset(doc: dict) -> DatasetFile:
    version = _need(doc, "schema_version", "$")
    if version != SCHEMA_VERSION:
        raise DatasetError(f"$.schema_version: unsupported version {version!r}")
    slices = _need(doc, "slices", "$")
    if not isinstance(slices, list) or not slices:
        raise DatasetError("$.slices: expected a non-empty array")
    records = tuple(_parse_slice(s, f"$.slices[{i}]") for i, s in enumerate(slices))
    labels = [r.label for r in records]
    if len(set(labels)) != len(labels):
        raise DatasetError("$.slices: duplicate slice labels")
    return DatasetFile(_string(_need(doc, "name", "$"), "$.name"), records, str(doc.get("description", "")), version)


def loads(text: str) -> DatasetFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_dataset(doc)


def load(path) -> DatasetFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------


def slice_to_dict(s: SliceRecord) -> dict:
    out = {
        "label": s.label,
        "maturity": s.maturity,
        "pair": {"base": s.pair.base, "quote": s.pair.quote, "premium": s.pair.premium,
                 "latam_atm_forward": s.pair.latam_atm_forward, "both_oecd": s.pair.both_oecd},
        "market": dict(s.market),
        "quotes": dict(s.quotes),
    }
    if s.convention is not None:
        out["convention"] = dict(s.convention)
    if s.reference_vanillas is not None:
        out["reference_vanillas"] = dict(s.reference_vanillas)
    if s.models:
        out["models"] = [{"name": m.name, "family": m.family, "params": m.params} for m in s.models]
    return out


def to_dict(ds: DatasetFile) -> dict:
    return {
        "schema_version": ds.schema_version,
        "name": ds.name,
        "description": ds.description,
        "slices": [slice_to_dict(s) for s in ds.slices],
    }


def dumps(ds: DatasetFile) -> str:
    # repr-based float output is the shortest string that reads back exactly
    return json.dumps(to_dict(ds), indent=2, ensure_ascii=False) + "\n"


def dump(ds: DatasetFile, path) -> None:
    Path(path).write_text(dumps(ds), encoding="utf-8")


def bundled(name: str) -> Path:
    """Path of a dataset shipped with the package, e.g. ``bundled("eurtry")``."""
    path = Path(__file__).parent / "data" / f"{name}.json"
    if not path.exists():
        raise InputError(f"no bundled dataset {name!r}")
    return path


def convention_label(conv: Convention) -> str:
    return f"{_DELTA_LABEL[conv.delta_style]}/{conv.atm_style.value}"
