"""Numerical pathologies: implicit delta lookups, degenerate SABR, premium-adjusted delta peak.

    python scripts/pathology_replay.py
"""

import numpy as np

from fxsmile import dataset
from fxsmile.conventions import call_delta_max
from fxsmile.errors import Unreachable
from fxsmile.pricing import DeltaStyle, MarketSlice, delta_at
from fxsmile.smiles import (PolyDeltaParams, PolyDeltaSmile, fixed_point_vol, newton_vol,
                            sigmoid_newton_delta, vol_and_strike_for_delta)


def implicit_lookup():
    m = PolyDeltaSmile(PolyDeltaParams((0.114, -11.8, 49.2, -84.1, 48.5)), MarketSlice.build(2.0, forward=39.51))
    print("polynomial-in-delta smile, F=39.51, T=2")
    for k in (10.0, 5.0):
        fp, nt, sg = fixed_point_vol(m, k, 0.3), newton_vol(m, k, 0.3), sigmoid_newton_delta(m, k)
        d = m.solve_delta(k)
        print(f"  K={k:4g}  fixed point {fp.converged!s:5} ({fp.iterations:3d} it)  newton {nt.converged!s:5}  "
              f"bracketed d={d:.10f} |g|={abs(float(m.g(k, d))):.1e}  sigmoid {sg.converged} d={sg.value:.10f}")


def degenerate_sabr():
    rec = dataset.load(dataset.bundled("sabr_pathological")).slice(None)
    for entry in rec.models:
        m = rec.model(entry.name)
        f = m.mkt.forward
        print(f"SABR {entry.name}: {m.params_dict()}")
        for x in (0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 5.0, 10.0, 20.0):
            k = x * f
            v = float(m.vol(k))
            print(f"  K/F {x:5.2f}  vol {v:.4f}  call fwd pips delta {float(delta_at(DeltaStyle.FORWARD_PIPS, 1, k, m.mkt, v)):.4f}")
        for target in (0.25, 0.10):
            try:
                vol_and_strike_for_delta(m, DeltaStyle.FORWARD_PIPS, 1, target)
                print(f"  {target:.2f} call: found")
            except Unreachable as exc:
                print(f"  {target:.2f} call: Unreachable ({exc})")


def delta_peak():
    mkt = MarketSlice.build(2.0, forward=1.0)
    k_star, d_star = call_delta_max(DeltaStyle.FORWARD_PERCENT, mkt, 1.25)
    ks = np.exp(np.linspace(-6.0, 4.0, 11))
    d = delta_at(DeltaStyle.FORWARD_PERCENT, 1, ks, mkt, 1.25)
    print(f"premium-adjusted call delta, sigma=1.25, T=2: peak {d_star:.5f} at K/F {k_star:.4f}")
    print("  " + "  ".join(f"{k:.3g}:{x:.3f}" for k, x in zip(ks, d)))


if __name__ == "__main__":
    implicit_lookup()
    degenerate_sabr()
    delta_peak()
