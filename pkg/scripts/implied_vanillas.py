"""Vanilla vols implied by each exact interpolation on the EUR/TRY slices.

    python scripts/implied_vanillas.py
"""

from fxsmile import dataset
from fxsmile.calibration import calibrate_nested
from fxsmile.smiles import Family

FAMILIES = (Family.SPLINE_LOGM, Family.SPLINE_DELTA, Family.POLY_DELTA)


def main():
    for name in ("eurtry", "eurtry_manufactured"):
        for record in dataset.load(dataset.bundled(name)).slices:
            q, mkt = record.quote_slice(), record.market_slice()
            print(f"{name} {record.label}")
            for fam in FAMILIES:
                rep = calibrate_nested(fam, q, mkt)
                vols = "  ".join(f"{v.label} {100 * v.vol:6.2f}" for v in rep.implied_vanillas)
                print(f"  {fam.value:13} {vols}")


if __name__ == "__main__":
    main()
