"""Reflection phase of a mushroom-type high-impedance surface.

A grounded dielectric slab covered with a grid of via-connected square
patches behaves as a parallel LC surface: the vias and substrate store
magnetic energy (L = mu0 * h), the patch edge gaps store electric energy
(coplanar-strip capacitance). At resonance the surface impedance diverges
and a normally incident wave reflects with 0 degrees phase -- an artificial
magnetic conductor (AMC). The useful band is where |phase| <= 90 deg.

The demo sweeps the lumped model, marks the band, and (with --fdtd) runs a
periodic-boundary FDTD unit cell to cross-check the resonance. The analytic
sweep is instantaneous; the FDTD cross-check takes a few minutes.
"""

import argparse

import numpy as np

from yeefield import amc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fdtd", action="store_true",
                    help="also run the periodic FDTD unit-cell cross-check")
    ap.add_argument("--gap-mm", type=float, default=None,
                    help="override the patch-to-patch gap")
    args = ap.parse_args()

    kw = {}
    if args.gap_mm is not None:
        kw["gap"] = args.gap_mm * 1e-3
    p = amc.AmcCellParams(**kw)
    print(f"cell: w = {p.w * 1e3:.3f} mm, gap = {p.gap * 1e3:.4f} mm, "
          f"h = {p.h * 1e3:.2f} mm, eps_r = {p.eps_r}")
    print(f"L = {p.inductance * 1e9:.3f} nH,  C = {p.capacitance * 1e15:.2f} fF")
    print(f"LC resonance f_res = {p.f_res / 1e9:.3f} GHz")

    f = np.linspace(0.3 * p.f_res, 1.9 * p.f_res, 600)
    curve = amc.phase_curve(p, f)
    band = amc.amc_band(p, f)
    if band:
        lo, hi = band
        print(f"+/-90 deg band   : {lo / 1e9:.2f} .. {hi / 1e9:.2f} GHz "
              f"({100 * (hi - lo) / p.f_res:.0f}% of f_res)")

    pc_fdtd = None
    if args.fdtd:
        fs = np.linspace(0.7 * p.f_res, 1.3 * p.f_res, 13)
        print("running periodic FDTD unit cell (a few minutes) ...")
        pc_fdtd = amc.reflection_phase_fdtd(p, fs, structure="mushroom",
                                            n_lat=24, nsteps=9000)
        for fk, ph in zip(fs, pc_fdtd.phase_deg):
            print(f"  {fk / 1e9:6.2f} GHz : {ph:8.2f} deg")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, ax = plt.subplots()
    ax.plot(f / 1e9, curve.phase_deg, label="LC model")
    if pc_fdtd is not None:
        ax.plot(pc_fdtd.freqs / 1e9, pc_fdtd.phase_deg, "o", label="FDTD")
    for y in (90, 0, -90):
        ax.axhline(y, color="0.8", lw=0.8)
    if band:
        ax.axvspan(band[0] / 1e9, band[1] / 1e9, alpha=0.15)
    ax.set_xlabel("frequency [GHz]")
    ax.set_ylabel("reflection phase [deg]")
    ax.legend()
    fig.savefig("demo02_amc_phase.png", dpi=120)
    print("wrote demo02_amc_phase.png")


if __name__ == "__main__":
    main()
