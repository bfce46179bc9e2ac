"""Command-line scenario runner.

    yeefield build   <scenario>   geometry + mesh report, no time stepping
    yeefield run     <scenario>   full pipeline: FDTD -> Touchstone, far-field
                                  CSVs, polar cuts, metrics summary
    yeefield metrics <scenario>   recompute metrics from existing output files
    yeefield sweep   <scenario>   repeat a run over a parameter list

All outputs are deterministic: identical invocations produce byte-identical
data files (wall-clock provenance lives only in the run manifest).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import C0
from . import scene as sc
from . import mesh as ms
from . import solver as sv
from . import network as nw
from . import farfield as ffd
from . import amc as am

ALL_SCENARIOS = sc.SCENARIOS + ("amc_cell",)

DISCLAIMER = ("coarse mesh mode: results are trend-accurate only; "
              "publication-grade values require fine mode and far more "
              "compute than a desktop run")

_AMC_KEYS = {"w_mm": "w", "gap_mm": "gap", "h_mm": "h",
             "via_radius_mm": "via_radius"}
_RUN_KEYS = ("max_steps", "pattern_step_deg", "amc_fdtd", "amc_nsteps",
             "amc_nlat")


@dataclass
class MetricsSummary:
    """Everything the run pipeline measures, JSON-serializable."""
    scenario: str = ""
    mesh_mode: str = "coarse"
    freq_ghz: float = 28.0
    port_bandwidth_ghz: dict = field(default_factory=dict)
    port_band_edges_ghz: dict = field(default_factory=dict)
    mean_bandwidth_ghz: float = None
    worst_isolation_db: float = None
    worst_isolation_pair: tuple = None
    isolation_band_ghz: tuple = None
    peak_gain_dbi: float = None
    peak_direction_deg: tuple = None
    hpbw_phi0_deg: float = None
    hpbw_phi90_deg: float = None
    aperture_efficiency: float = None
    aperture_area_m2: float = None
    xpd_phi0_db: float = None
    xpd_phi90_db: float = None
    converged: tuple = ()
    unavailable: dict = field(default_factory=dict)
    amc_band_ghz: tuple = None
    amc_f_res_ghz: float = None
    disclaimer: str = ""

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, tuple):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            return v
        return json.dumps({k: clean(v) for k, v in self.__dict__.items()},
                          indent=2, sort_keys=True) + "\n"


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(
        prog="yeefield",
        description="FDTD toolkit for a 28 GHz dual-polarized patch array")
    p.add_argument("command", choices=("build", "run", "metrics", "sweep"))
    p.add_argument("scenario", choices=ALL_SCENARIOS)
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--mesh", choices=("coarse", "fine"), default="coarse")
    p.add_argument("--freqs", default="24.25:29.5:0.025",
                   help="GHZ_START:GHZ_STOP:GHZ_STEP")
    p.add_argument("--weights", default="odd",
                   help="odd | even | all (co-polarized presets) | comma list "
                   "of raw complex weights")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   dest="overrides", help="parameter override; in sweep mode "
                   "one key may carry a comma list of values")
    p.add_argument("--out", default="out")
    return p


def _parse_freqs(spec: str) -> np.ndarray:
    try:
        start, stop, step = (float(tok) for tok in spec.split(":"))
    except ValueError:
        raise CliError(f"bad --freqs {spec!r}; expected START:STOP:STEP (GHz)")
    if step <= 0 or stop < start:
        raise CliError(f"bad --freqs {spec!r}: need step > 0 and stop >= start")
    n = int(round((stop - start) / step)) + 1
    return (start + step * np.arange(n)) * 1e9


def _parse_weights(spec: str, nports: int) -> np.ndarray:
    if spec == "odd":
        return np.array([1.0 if n % 2 == 1 else 0.0
                         for n in range(1, nports + 1)], dtype=complex)
    if spec == "even":
        return np.array([1.0 if n % 2 == 0 else 0.0
                         for n in range(1, nports + 1)], dtype=complex)
    if spec == "all":
        return np.ones(nports, dtype=complex)
    try:
        w = np.array([complex(tok) for tok in spec.split(",")])
    except ValueError:
        raise CliError(f"bad --weights {spec!r}")
    if len(w) != nports:
        raise CliError(
            f"--weights lists {len(w)} values for {nports} ports")
    return w


@dataclass
class RunSettings:
    max_steps: int = 40000
    pattern_step_deg: float = 1.0
    amc_fdtd: bool = True
    amc_nsteps: int = 9000
    amc_nlat: int = 48


def _apply_overrides(params, run_set, overrides, sweep=False):
    """Split --set pairs into element params, AMC params and run controls.

    Returns (params, amc_overrides dict, run settings, sweep key, values).
    """
    sweep_key = None
    sweep_vals = None
    amc_over = {}
    for item in overrides:
        if "=" not in item:
            raise CliError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        vals = [v.strip() for v in value.split(",")]
        if sweep and len(vals) > 1:
            if sweep_key is not None:
                raise CliError("sweep supports exactly one list-valued --set")
            sweep_key, sweep_vals = key, vals
            continue
        if key in _RUN_KEYS:
            if key == "pattern_step_deg":
                run_set.pattern_step_deg = float(value)
            elif key == "amc_fdtd":
                run_set.amc_fdtd = value.strip() not in ("0", "false", "no")
            else:
                setattr(run_set, key, int(value))
        elif key in _AMC_KEYS:
            amc_over[_AMC_KEYS[key]] = float(value) * 1e-3
        else:
            try:
                params = sc.set_param(params, key, value)
            except ValueError as e:
                raise CliError(str(e))
    return params, amc_over, run_set, sweep_key, sweep_vals


def _amc_from_element(p: sc.ElementParams) -> am.AmcCellParams:
    tiling = sc.frame_tiling(p)
    return am.AmcCellParams(w=p.l_EBG, gap=tiling["gap"], h=p.h,
                            eps_r=p.eps_r, via_radius=p.v_EBG / 2.0)


# ---------------------------------------------------------------------------
# shared pipeline pieces
# ---------------------------------------------------------------------------

def _load_params(args):
    if args.config:
        scenario, params = sc.params_from_config(args.config)
        if scenario and scenario != args.scenario:
            raise CliError(
                f"config selects scenario {scenario!r} but the command line "
                f"says {args.scenario!r}")
    else:
        params = sc.ElementParams()
    return params


def _policy(args) -> ms.MeshPolicy:
    return ms.MeshPolicy.fine() if args.mesh == "fine" else ms.MeshPolicy()


def huygens_box_indices(grid: ms.YeeGrid, scn: sc.Scene):
    """Node-index box halfway between the structure and the absorber."""
    (fx0, fy0), (fx1, fy1) = scn.footprint
    (bx0, by0, _), (bx1, by1, bz1) = scn.bounds
    z_top = 0.0
    for prim in scn.primitives:
        if isinstance(prim, sc.Cylinder):
            z_top = max(z_top, prim.z1)
        elif isinstance(prim, sc.Plate):
            z_top = max(z_top, prim.z)
        else:
            z_top = max(z_top, prim.hi[2])
    i0 = int(np.argmin(np.abs(grid.x - 0.5 * (fx0 + bx0))))
    i1 = int(np.argmin(np.abs(grid.x - 0.5 * (fx1 + bx1))))
    j0 = int(np.argmin(np.abs(grid.y - 0.5 * (fy0 + by0))))
    j1 = int(np.argmin(np.abs(grid.y - 0.5 * (fy1 + by1))))
    k1 = int(np.argmin(np.abs(grid.z - 0.5 * (z_top + bz1))))
    return (max(i0, 1), i1, max(j0, 1), j1, 0, k1)


def mesh_report(grid: ms.YeeGrid) -> str:
    nx, ny, nz = grid.shape
    dt = ms.cfl_timestep(grid)
    lines = [
        "cells %d x %d x %d = %d" % (nx, ny, nz, nx * ny * nz),
        "dt %.9g s" % dt,
        "dx min/max %.9g %.9g" % (grid.dx.min(), grid.dx.max()),
        "dy min/max %.9g %.9g" % (grid.dy.min(), grid.dy.max()),
        "dz min/max %.9g %.9g" % (grid.dz.min(), grid.dz.max()),
        "pml cells %d" % grid.npml,
        "max snap %.9g m" % (max((abs(v) for v in grid.snap_report.values()),
                                 default=0.0)),
    ]
    for comp, cnt in sorted(grid.pec_edge_count().items()):
        lines.append("pec edges %s %d" % (comp, cnt))
    for n, edge in enumerate(grid.port_edges, start=1):
        lines.append("port %d edge i=%d j=%d k=%d..%d" % (n, *edge))
    return "\n".join(lines) + "\n"


def _solve_all_ports(grid, scn, excitation, control):
    """One matched-load FDTD run per port; returns recordings in port order."""
    ports = [(p.index, edge) for p, edge in zip(scn.ports, grid.port_edges)]
    box = huygens_box_indices(grid, scn)
    recs = []
    for p in scn.ports:
        rec = sv.run(grid, ports, p.index, excitation, control,
                     huygens_box=box)
        recs.append(rec)
    return recs


def _incident_at(rec, freq):
    """Complex a-wave of the excited port at one frequency."""
    V, I = rec.port_spectra([freq])
    n = rec.excited_port - 1
    z0 = float(np.asarray(rec.port_zref).flat[n])
    return complex((V[n, 0] + z0 * I[n, 0]) / (2.0 * math.sqrt(z0)))


# ---------------------------------------------------------------------------
# file emitters (all deterministic)
# ---------------------------------------------------------------------------

def write_farfield_csv(path, ff, gain_db):
    with open(path, "w") as fh:
        fh.write("theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,"
                 "gain_dbi\n")
        for i, th in enumerate(ff.theta):
            for j, phv in enumerate(ff.phi):
                et, ep = ff.e_theta[i, j], ff.e_phi[i, j]
                fh.write("%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n"
                         % (th, phv, et.real, et.imag, ep.real, ep.imag,
                            gain_db[i, j]))


def read_farfield_csv(path):
    """Returns (FarField without power bookkeeping, gain grid dBi)."""
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except ValueError as e:
        raise CliError(f"{path}: cannot parse far-field CSV: {e}")
    if data.size == 0 or data.dtype.names is None or \
            "theta_deg" not in data.dtype.names:
        raise CliError(f"{path}: not a far-field CSV (missing header)")
    data = np.atleast_1d(data)
    theta = np.unique(data["theta_deg"])
    phi = np.unique(data["phi_deg"])
    sh = (len(theta), len(phi))
    if sh[0] * sh[1] != len(data):
        raise CliError(f"{path}: far-field grid is not rectangular")
    order = np.lexsort((data["phi_deg"], data["theta_deg"]))
    et = (data["re_etheta"] + 1j * data["im_etheta"])[order].reshape(sh)
    ep = (data["re_ephi"] + 1j * data["im_ephi"])[order].reshape(sh)
    gain = data["gain_dbi"][order].reshape(sh)
    ff = ffd.FarField(freq=0.0, theta=theta, phi=phi, e_theta=et, e_phi=ep)
    return ff, gain


def write_cut_csv(path, angles, gain_db):
    """gnuplot-ready polar cut: angle (deg) and gain (dB)."""
    with open(path, "w") as fh:
        fh.write("# angle_deg gain_dbi\n")
        for a, g in zip(angles, gain_db):
            fh.write("%.9g %.9g\n" % (a, g))


def write_phase_csv(path, curves):
    with open(path, "w") as fh:
        fh.write("freq_ghz,phase_deg,model\n")
        for pc in curves:
            for f, ph in zip(pc.freqs, pc.phase_deg):
                fh.write("%.9g,%.9g,%s\n" % (f / 1e9, ph, pc.model))


def _manifest(outdir, args, extra):
    payload = {
        "version": "0.1.0",
        "command": args.command,
        "scenario": args.scenario,
        "mesh": args.mesh,
        "freqs": args.freqs,
        "weights": args.weights,
        "overrides": sorted(args.overrides),
    }
    if args.config:
        with open(args.config, "rb") as fh:
            payload["config_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    payload.update(extra)
    import time
    payload["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ",
                                            time.gmtime())
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# metric computation shared by run and metrics
# ---------------------------------------------------------------------------

def network_metrics(summary: MetricsSummary, smat: nw.SMatrix):
    bands = {}
    for n in range(1, smat.nports + 1):
        bm = nw.bandwidth_at_threshold(smat.freqs, smat.s[:, n - 1, n - 1])
        if bm is not None:
            summary.port_bandwidth_ghz[str(n)] = bm.bandwidth / 1e9
            summary.port_band_edges_ghz[str(n)] = (bm.f_lo / 1e9,
                                                   bm.f_hi / 1e9)
            bands[n] = bm
        else:
            summary.port_bandwidth_ghz[str(n)] = None
            summary.unavailable.setdefault(
                "bandwidth_port_%d" % n, "no -10 dB band in the sweep")
    widths = [b.bandwidth for b in bands.values()]
    if widths:
        summary.mean_bandwidth_ghz = float(np.mean(widths)) / 1e9
    else:
        summary.unavailable["mean_bandwidth"] = "no port reaches -10 dB"
    if bands:
        f_lo = min(b.f_lo for b in bands.values())
        f_hi = max(b.f_hi for b in bands.values())
    else:                          # unmatched: fall back to the n257 band
        f_lo, f_hi = 24.25e9, 29.5e9
        f_lo = max(f_lo, smat.freqs[0])
        f_hi = min(f_hi, smat.freqs[-1])
    summary.isolation_band_ghz = (f_lo / 1e9, f_hi / 1e9)
    if smat.nports > 1:
        worst = None
        for n in range(1, smat.nports + 1):
            val = nw.worst_isolation(smat, n, (f_lo, f_hi))
            sel = (smat.freqs >= f_lo) & (smat.freqs <= f_hi)
            sub = np.abs(smat.s[sel, :, n - 1])
            sub[:, n - 1] = 0.0
            m = int(np.unravel_index(np.argmax(sub), sub.shape)[1]) + 1
            if worst is None or val > worst[0]:
                worst = (val, (m, n))
        summary.worst_isolation_db = worst[0]
        summary.worst_isolation_pair = worst[1]
    else:
        summary.unavailable["worst_isolation"] = "single-port structure"
    summary.converged = tuple(bool(c) for c in smat.converged)
    return summary


def pattern_metrics(summary: MetricsSummary, ff, gain_db, area):
    k = np.unravel_index(int(np.argmax(gain_db)), gain_db.shape)
    summary.peak_gain_dbi = float(gain_db[k])
    summary.peak_direction_deg = (float(ff.theta[k[0]]), float(ff.phi[k[1]]))
    summary.aperture_area_m2 = area
    if summary.freq_ghz:
        summary.aperture_efficiency = ffd.aperture_efficiency(
            summary.peak_gain_dbi, area, summary.freq_ghz * 1e9)
    for name, cut in (("hpbw_phi0_deg", 0.0), ("hpbw_phi90_deg", 90.0)):
        try:
            ang, et, ep = ffd.principal_cut(ff, cut)
            u = (np.abs(et) ** 2 + np.abs(ep) ** 2)
            cut_db = 10.0 * np.log10(np.maximum(u / max(u.max(), 1e-300),
                                                1e-30))
            setattr(summary, name, ffd.hpbw(ang, cut_db))
        except ffd.OneSidedBeamError as e:
            summary.unavailable[name] = str(e)
    for name, cut, ref in (("xpd_phi0_db", 0.0, "x"),
                           ("xpd_phi90_db", 90.0, "x")):
        try:
            setattr(summary, name, ffd.xpd(ff, cut, reference=ref))
        except (ffd.UndefinedXpdError, ValueError) as e:
            summary.unavailable[name] = str(e)
    return summary


def _summary_text(summary: MetricsSummary) -> str:
    d = summary.__dict__
    lines = ["scenario %s (mesh %s)" % (summary.scenario, summary.mesh_mode)]
    for key in ("mean_bandwidth_ghz", "worst_isolation_db", "peak_gain_dbi",
                "hpbw_phi0_deg", "hpbw_phi90_deg", "aperture_efficiency",
                "xpd_phi0_db", "xpd_phi90_db", "amc_f_res_ghz"):
        v = d.get(key)
        if v is not None:
            lines.append("%s = %.6g" % (key, v))
    for key, why in sorted(summary.unavailable.items()):
        lines.append("%s unavailable: %s" % (key, why))
    if summary.disclaimer:
        lines.append(summary.disclaimer)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_build(args) -> int:
    params = _load_params(args)
    params, amc_over, run_set, _, _ = _apply_overrides(
        params, RunSettings(), args.overrides)
    os.makedirs(args.out, exist_ok=True)
    if args.scenario == "amc_cell":
        cell = replace(_amc_from_element(params), **amc_over)
        report = ("amc cell w %.9g gap %.9g h %.9g eps_r %.9g via_r %.9g\n"
                  "L %.9g H  C %.9g F  f_res %.9g GHz\n"
                  % (cell.w, cell.gap, cell.h, cell.eps_r, cell.via_radius,
                     cell.inductance, cell.capacitance, cell.f_res / 1e9))
        with open(os.path.join(args.out, "cell.txt"), "w") as fh:
            fh.write(report)
        sys.stdout.write(report)
        _manifest(args.out, args, {})
        return 0
    scn = sc.build_scenario(args.scenario, params)
    issues = sc.validate_scene(scn)
    if issues:
        for msg in issues:
            print("error: %s" % msg, file=sys.stderr)
        return 1
    grid = ms.generate_mesh(scn, _policy(args))
    dump = sc.canonical_dump(scn)
    with open(os.path.join(args.out, "scene.txt"), "w") as fh:
        fh.write(dump)
    report = mesh_report(grid)
    with open(os.path.join(args.out, "mesh.txt"), "w") as fh:
        fh.write(report)
    sys.stdout.write(report)
    _manifest(args.out, args, {"cells": int(np.prod(grid.shape))})
    return 0


def _run_amc(args, params, amc_over, run_set) -> int:
    cell = replace(_amc_from_element(params), **amc_over)
    freqs = _parse_freqs(args.freqs)
    # default frequency window is tuned to the antenna band; widen it so the
    # cell resonance is visible unless the user asked for something else
    if args.freqs == "24.25:29.5:0.025":
        freqs = np.linspace(0.3 * cell.f_res, 1.9 * cell.f_res, 81)
    curves = [am.phase_curve(cell, freqs)]
    summary = MetricsSummary(scenario=args.scenario, mesh_mode=args.mesh,
                             freq_ghz=float(freqs[len(freqs) // 2] / 1e9),
                             disclaimer=DISCLAIMER
                             if args.mesh == "coarse" else "")
    band = am.amc_band(cell, freqs)
    if band is not None:
        summary.amc_band_ghz = (band[0] / 1e9, band[1] / 1e9)
    else:
        summary.unavailable["amc_band"] = "no 0-degree crossing in range"
    summary.amc_f_res_ghz = cell.f_res / 1e9
    if run_set.amc_fdtd:
        curves.append(am.reflection_phase_fdtd(
            cell, freqs, structure="mushroom", n_lat=run_set.amc_nlat,
            nsteps=run_set.amc_nsteps))
    write_phase_csv(os.path.join(args.out, "phase.csv"), curves)
    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        fh.write(summary.to_json())
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write(_summary_text(summary))
    _manifest(args.out, args, {"f_res_ghz": cell.f_res / 1e9})
    sys.stdout.write(_summary_text(summary))
    return 0


def cmd_run(args) -> int:
    params = _load_params(args)
    params, amc_over, run_set, _, _ = _apply_overrides(
        params, RunSettings(), args.overrides)
    os.makedirs(args.out, exist_ok=True)
    if args.scenario == "amc_cell":
        return _run_amc(args, params, amc_over, run_set)
    scn = sc.build_scenario(args.scenario, params)
    issues = sc.validate_scene(scn)
    if issues:
        for msg in issues:
            print("error: %s" % msg, file=sys.stderr)
        return 1
    grid = ms.generate_mesh(scn, _policy(args))
    freqs = _parse_freqs(args.freqs)
    f0 = params.f0
    weights = _parse_weights(args.weights, len(scn.ports))
    if args.weights in ("odd", "even", "all"):
        # presets mean "co-polarized": fold in the probe-mirroring parity so
        # quadrant-mirrored elements radiate in phase (broadside beam)
        weights = weights * np.array([p.orientation for p in scn.ports])
    excitation = sv.Excitation(f0=f0)
    control = sv.RunControl(max_steps=run_set.max_steps,
                            huygens_freqs=(f0,))
    with open(os.path.join(args.out, "scene.txt"), "w") as fh:
        fh.write(sc.canonical_dump(scn))
    with open(os.path.join(args.out, "mesh.txt"), "w") as fh:
        fh.write(mesh_report(grid))
    failures = []
    recs = []
    ports = [(p.index, edge) for p, edge in zip(scn.ports, grid.port_edges)]
    box = huygens_box_indices(grid, scn)
    for p in scn.ports:
        try:
            recs.append(sv.run(grid, ports, p.index, excitation, control,
                               huygens_box=box))
        except sv.DivergenceError as e:
            failures.append("port %d excitation diverged at step %d"
                            % (p.index, e.step))
    if failures:
        for msg in failures:
            print("error: %s" % msg, file=sys.stderr)
    if not recs:
        return 1
    smat = nw.extract_sparams(recs, freqs, nports=len(scn.ports))
    nw.write_touchstone(smat, os.path.join(
        args.out, "%s.s%dp" % (args.scenario, smat.nports)))
    # per-port far fields at f0, normalized to unit incident wave
    step = run_set.pattern_step_deg
    theta = np.arange(0.0, 180.0 + 0.5 * step, step)
    phi = np.arange(-180.0, 180.0, step)
    ffs = [ffd.ntff(rec.huygens, f0, theta, phi,
                    incident=_incident_at(rec, f0)) for rec in recs]
    smat_f0 = nw.extract_sparams(recs, [f0], nports=len(scn.ports))
    combined = ffd.superpose_excitations(ffs, weights, smat=smat_f0)
    gain_db = ffd.gain_pattern(combined)
    write_farfield_csv(os.path.join(args.out, "farfield.csv"),
                       combined, gain_db)
    for tag, cut in (("phi0", 0.0), ("phi90", 90.0)):
        ang, et, ep = ffd.principal_cut(combined, cut)
        u = (np.abs(et) ** 2 + np.abs(ep) ** 2) / (2.0 * 376.730313668)
        cut_db = 10.0 * np.log10(np.maximum(
            4.0 * math.pi * u / combined.accepted_power, 1e-30))
        write_cut_csv(os.path.join(args.out, "cut_%s.csv" % tag),
                      ang, cut_db)
    summary = MetricsSummary(scenario=args.scenario, mesh_mode=args.mesh,
                             freq_ghz=f0 / 1e9,
                             disclaimer=DISCLAIMER
                             if args.mesh == "coarse" else "")
    network_metrics(summary, smat)
    (fx0, fy0), (fx1, fy1) = scn.footprint
    area = (fx1 - fx0) * (fy1 - fy0)
    pattern_metrics(summary, combined, gain_db, area)
    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        fh.write(summary.to_json())
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write(_summary_text(summary))
    _manifest(args.out, args, {
        "cells": int(np.prod(grid.shape)),
        "dt": recs[0].dt,
        "steps": [int(r.steps) for r in recs],
        "converged": [bool(r.converged) for r in recs],
    })
    sys.stdout.write(_summary_text(summary))
    return 0 if not failures else 1


def cmd_metrics(args) -> int:
    """Recompute the metrics summary from files in --out (no solver)."""
    params = _load_params(args)
    params, _, _, _, _ = _apply_overrides(params, RunSettings(),
                                          args.overrides)
    outdir = args.out
    summary = MetricsSummary(scenario=args.scenario, mesh_mode=args.mesh,
                             freq_ghz=params.f0 / 1e9,
                             disclaimer=DISCLAIMER
                             if args.mesh == "coarse" else "")
    found = False
    for name in sorted(os.listdir(outdir)) if os.path.isdir(outdir) else []:
        if name.startswith(args.scenario) and name.split(".")[-1].startswith(
                "s") and name.endswith("p"):
            try:
                smat = nw.read_touchstone(os.path.join(outdir, name))
            except nw.TouchstoneParseError as e:
                print("error: %s" % e, file=sys.stderr)
                return 1
            network_metrics(summary, smat)
            found = True
            break
    ff_path = os.path.join(outdir, "farfield.csv")
    if os.path.exists(ff_path):
        try:
            ff, gain = read_farfield_csv(ff_path)
        except CliError as e:
            print("error: %s" % e, file=sys.stderr)
            return 1
        if args.scenario in sc.SCENARIOS:
            scn = sc.build_scenario(args.scenario, params)
            (fx0, fy0), (fx1, fy1) = scn.footprint
            area = (fx1 - fx0) * (fy1 - fy0)
        else:
            area = (2.0 * params.W_s) ** 2
        pattern_metrics(summary, ff, gain, area)
        found = True
    if not found:
        print("error: no %s Touchstone or farfield.csv under %s"
              % (args.scenario, outdir), file=sys.stderr)
        return 1
    with open(os.path.join(outdir, "metrics.json"), "w") as fh:
        fh.write(summary.to_json())
    sys.stdout.write(_summary_text(summary))
    return 0


def cmd_sweep(args) -> int:
    params = _load_params(args)
    params, amc_over, run_set, key, vals = _apply_overrides(
        params, RunSettings(), args.overrides, sweep=True)
    if key is None:
        raise CliError("sweep needs one --set KEY=V1,V2,... list")
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for v in vals:
        sub = argparse.Namespace(**vars(args))
        sub.overrides = [o for o in args.overrides if not
                         o.startswith(key + "=")] + ["%s=%s" % (key, v)]
        sub.out = os.path.join(args.out, "%s_%s" % (key, v))
        code = cmd_run(sub)
        if code != 0:
            return code
        with open(os.path.join(sub.out, "metrics.json")) as fh:
            rows.append((v, json.load(fh)))
    cols = ["mean_bandwidth_ghz", "worst_isolation_db", "peak_gain_dbi",
            "hpbw_phi0_deg", "hpbw_phi90_deg", "aperture_efficiency",
            "xpd_phi0_db", "xpd_phi90_db", "amc_band_ghz", "amc_f_res_ghz"]
    path = os.path.join(args.out, "sweep.csv")
    with open(path, "w") as fh:
        fh.write(key + "," + ",".join(cols) + "\n")
        for v, m in rows:
            cells = []
            for c in cols:
                x = m.get(c)
                if isinstance(x, list):
                    cells.append("%.9g:%.9g" % tuple(x))
                elif x is None:
                    cells.append("")
                else:
                    cells.append("%.9g" % x)
            fh.write(v + "," + ",".join(cells) + "\n")
    print("wrote %s (%d points)" % (path, len(rows)))
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "build":
            return cmd_build(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "metrics":
            return cmd_metrics(args)
        return cmd_sweep(args)
    except (CliError, sc.GeometryError, ms.UnmeshableFeatureError,
            ValueError, FileNotFoundError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
