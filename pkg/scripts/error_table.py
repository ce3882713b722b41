"""Fixed-strike and fixed-delta l2 errors for the parametric smiles on the bundled datasets.

The fixed-strike column comes from the upfront-strike calibration and the fixed-delta
column from the merged delta-lookup calibration of the same dimension.

    python scripts/error_table.py
"""

from fxsmile import dataset
from fxsmile.cli import RunConfig, run_calibration
from fxsmile.errors import NumericalError

DATASETS = ("eurhkd_147d", "eurtry")
MODELS = ("sabr", "atm-sabr", "xssvi")


def l2(record, model, method, attr):
    try:
        return getattr(run_calibration(RunConfig(model, method), record), attr)
    except NumericalError as exc:
        return exc.tag


def cell(x):
    return f"{x:9.5f}" if isinstance(x, float) else f"{x:>9}"


def main():
    print(f"{'slice':14} {'model':9} {'dim':>12} {'fixed K':>9} {'fixed d':>9}")
    for name in DATASETS:
        for record in dataset.load(dataset.bundled(name)).slices:
            for model in MODELS:
                for dim in ("2", "5"):
                    fk = l2(record, model, f"nested{dim}", "l2_fixed_strikes")
                    fd = l2(record, model, f"nested{dim}-merged", "l2_fixed_deltas")
                    print(f"{name + ' ' + record.label:14} {model:9} {dim:>12} {cell(fk)} {cell(fd)}")
                if model == "xssvi":
                    for method in ("via-spline", "via-spline-delta"):
                        v = l2(record, model, method, "l2_fixed_strikes")
                        print(f"{name + ' ' + record.label:14} {model:9} {method[4:]:>12} {cell(v)}")


if __name__ == "__main__":
    main()
