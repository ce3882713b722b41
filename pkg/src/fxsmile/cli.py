"""``fxsmile`` command line: calibrate, sample a smile, reproduce error tables.

Exit status is 0 when the calibration converged with every leg solvable, 1 on
bad input, and 2 on non-convergence or a numerical pathology (the report is
still written in that case).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset as ds
from .calibration import (
    CalibrationOptions,
    CalibrationReport,
    Mode,
    calibrate_direct,
    calibrate_nested,
    calibrate_via_exact,
    report_from_model,
)
from .errors import FxSmileError, InputError, NumericalError
from .pricing import DeltaStyle, delta_at
from .smiles import Family, model_from_params

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2

MODELS = {
    "sabr": (Family.SABR, False),
    "atm-sabr": (Family.SABR, True),
    "xssvi": (Family.XSSVI, False),
    "spline-logm": (Family.SPLINE_LOGM, False),
    "spline-delta": (Family.SPLINE_DELTA, False),
    "poly-delta": (Family.POLY_DELTA, False),
}
METHODS = ("nested2", "nested2-merged", "nested5", "nested5-merged", "direct", "via-spline", "via-spline-delta")
SPLINE_METHODS = ("via-spline", "via-spline-delta")


@dataclass(frozen=True)
class RunConfig:
    model: str = "sabr"
    method: str = "nested5"
    fix_atm: bool = False
    fmt: str = "json"

    def __post_init__(self):
        if self.model not in MODELS:
            raise InputError(f"unknown model {self.model!r}; valid: {', '.join(MODELS)}")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; valid: {', '.join(METHODS)}")
        if self.fmt not in ("json", "csv"):
            raise InputError("format must be json or csv")

    @property
    def family(self) -> Family:
        return MODELS[self.model][0]

    @property
    def pinned_atm(self) -> bool:
        return self.fix_atm or MODELS[self.model][1]


def run_calibration(cfg: RunConfig, record: ds.SliceRecord) -> CalibrationReport:
    q, mkt = record.quote_slice(), record.market_slice()
    family, fix_atm = cfg.family, cfg.pinned_atm
    if cfg.method == "direct":
        return calibrate_direct(family, q, mkt, fix_atm=fix_atm)
    if cfg.method in SPLINE_METHODS:
        exact = Family.SPLINE_LOGM if cfg.method == "via-spline" else Family.SPLINE_DELTA
        return calibrate_via_exact(family, exact, q, mkt, fix_atm=fix_atm)
    dim = 2 if cfg.method.startswith("nested2") else 5
    mode = Mode.MERGED_DELTA_LOOKUP if cfg.method.endswith("-merged") else Mode.STRIKES_UPFRONT
    return calibrate_nested(family, q, mkt, CalibrationOptions(dim=dim, mode=mode, fix_atm=fix_atm))


def _load_params(raw: str, record: ds.SliceRecord, family: Family):
    path = Path(raw)
    if raw.lstrip().startswith("{"):
        text = raw
    elif path.suffix == ".json" and path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        return record.model(raw)
    try:
        params = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--params: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(params, dict):
        raise InputError("--params must be a JSON object")
    return model_from_params(family, params, record.market_slice())


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def report_to_dict(rep: CalibrationReport, *, dataset: str, slice_label: str, model: str) -> dict:
    return {
        "dataset": dataset,
        "slice": slice_label,
        "model": model,
        "method": rep.method,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "params": rep.model.params_dict(),
        "smile_bf": None if rep.smile_bf is None else list(rep.smile_bf),
        "strikes": {k: _finite(v) for k, v in rep.strikes.as_dict().items()},
        "implied_vanillas": [
            {"label": v.label, "strike": _finite(v.strike), "vol": _finite(v.vol), "error": v.error}
            for v in rep.implied_vanillas
        ],
        "residuals": {k: _finite(v) for k, v in rep.residuals.as_dict().items()},
        "l2_fixed_strikes": _finite(rep.l2_fixed_strikes),
        "l2_fixed_deltas": _finite(rep.l2_fixed_deltas),
        "missing_legs": list(rep.missing_legs),
    }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _flatten(prefix: str, obj, rows: list) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, _fmt(obj)))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _resolve_data(spec: str) -> Path:
    path = Path(spec)
    if path.exists():
        return path
    return ds.bundled(spec)


def _report_status(rep: CalibrationReport) -> int:
    return EXIT_OK if rep.converged and not rep.missing_legs else EXIT_NUMERICAL


def _calibrated(args) -> tuple[CalibrationReport, ds.DatasetFile, ds.SliceRecord, RunConfig]:
    data = ds.load(_resolve_data(args.data))
    record = data.slice(args.slice)
    cfg = RunConfig(args.model, args.method, args.fix_atm, args.format)
    if args.no_fit:
        if not args.params:
            raise InputError("--no-fit needs --params")
        model = _load_params(args.params, record, cfg.family)
        rep = report_from_model(model, record.quote_slice(), record.market_slice())
    else:
        rep = run_calibration(cfg, record)
    return rep, data, record, cfg


def cmd_calibrate(args) -> int:
    rep, data, record, cfg = _calibrated(args)
    doc = report_to_dict(rep, dataset=data.name, slice_label=record.label, model=cfg.model)
    if cfg.fmt == "json":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        rows: list = []
        _flatten("", doc, rows)
        text = _csv_text(("field", "value"), rows)
    _emit(text, args.out)
    for leg in rep.missing_legs:
        print(f"warning: residual {leg} missing, a vanilla leg has no strike under the smile", file=sys.stderr)
    return _report_status(rep)


def parse_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(",")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise InputError(f"--grid expects lo,hi,n (K/F bounds and point count), got {text!r}") from None
    if not (0 < lo < hi and n >= 2):
        raise InputError("--grid needs 0 < lo < hi and n >= 2")
    return lo, hi, n


def sample_rows(model, lo: float, hi: float, n: int):
    mkt = model.mkt
    strikes = mkt.forward * np.linspace(lo, hi, n)
    vols = model.vol_or_nan(strikes)
    deltas = delta_at(DeltaStyle.FORWARD_PIPS, 1, strikes, mkt, vols)
    logm = np.log(strikes / mkt.forward)
    return [(_fmt(float(k)), _fmt(float(x)), _fmt(float(v)), _fmt(float(d)))
            for k, x, v, d in zip(strikes, logm, vols, deltas)]


SAMPLE_HEADER = ("strike", "log_moneyness", "vol", "call_forward_pips_delta")


def cmd_sample(args) -> int:
    lo, hi, n = parse_grid(args.grid)
    rep, *_ = _calibrated(args)
    _emit(_csv_text(SAMPLE_HEADER, sample_rows(rep.model, lo, hi, n)), args.out)
    return _report_status(rep)


TABLE_HEADER = ("dataset", "slice", "model", "method", "l2_fixed_strikes", "l2_fixed_deltas")


def error_table_rows(datasets, models, methods):
    """One row per dataset slice, model and method; failures become ``ERR(tag)`` cells."""
    rows, worst = [], EXIT_OK
    for data in datasets:
        for record in data.slices:
            for model in models:
                for method in methods:
                    cfg = RunConfig(model, method)
                    try:
                        rep = run_calibration(cfg, record)
                    except NumericalError as exc:
                        cell = f"ERR({exc.tag})"
                        rows.append((data.name, record.label, model, method, cell, cell))
                        worst = EXIT_NUMERICAL
                        continue
                    fixed_d = "" if method in SPLINE_METHODS else _fmt(_finite(rep.l2_fixed_deltas))
                    rows.append((data.name, record.label, model, method, _fmt(_finite(rep.l2_fixed_strikes)), fixed_d))
                    if not rep.converged:
                        worst = EXIT_NUMERICAL
    return rows, worst


def cmd_error_table(args) -> int:
    datasets = [ds.load(_resolve_data(p)) for p in args.data]
    if args.slice:
        datasets = [ds.DatasetFile(d.name, (d.slice(args.slice),), d.description) for d in datasets]
    models = _split(args.model, MODELS, "model")
    methods = _split(args.method, METHODS, "method")
    rows, status = error_table_rows(datasets, models, methods)
    _emit(_csv_text(TABLE_HEADER, rows), args.out)
    return status


def _split(text: str, valid, what: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    for s in items:
        if s not in valid:
            raise InputError(f"unknown {what} {s!r}; valid: {', '.join(valid)}")
    return items


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fxsmile", description="FX smile construction from broker quotes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, multi_data=False):
        if multi_data:
            p.add_argument("--data", action="append", required=True,
                           help="dataset path or bundled name; repeat for several")
        else:
            p.add_argument("--data", required=True, help="dataset path or bundled name")
        p.add_argument("--slice", help="slice label (default: first slice)")
        p.add_argument("--out", help="output file (default: stdout)")

    for name in ("calibrate", "sample"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--model", default="sabr", choices=list(MODELS))
        p.add_argument("--method", default="nested5", choices=list(METHODS))
        p.add_argument("--fix-atm", action="store_true")
        p.add_argument("--no-fit", action="store_true", help="use --params instead of calibrating")
        p.add_argument("--params", help="JSON object, .json file, or name of a model stored in the dataset")
        p.add_argument("--format", default="json" if name == "calibrate" else "csv", choices=("json", "csv"))
        if name == "sample":
            p.add_argument("--grid", default="0.8,1.25,101", help="lo,hi,n on K/F")
    p = sub.add_parser("error-table")
    common(p, multi_data=True)
    p.add_argument("--model", default="atm-sabr,xssvi", help="comma separated models")
    p.add_argument("--method", default=",".join(METHODS), help="comma separated methods")
    p.add_argument("--format", default="csv", choices=("csv",))
    return parser


COMMANDS = {"calibrate": cmd_calibrate, "sample": cmd_sample, "error-table": cmd_error_table}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"fxsmile: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FxSmileError as exc:
        print(f"fxsmile: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
