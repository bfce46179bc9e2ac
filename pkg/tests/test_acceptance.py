"""End-to-end acceptance gate.

Each test here states a quantitative promise about the toolkit as a whole:
analytic oracles where closed forms exist, and coarse-mesh trend checks for
the full antenna scenarios (whose publication-grade numbers would need far
finer meshes than a desktop run allows).
"""

import json
import math
import os

import numpy as np
import pytest

from yeefield import amc
from yeefield import cli
from yeefield import farfield as ffd
from yeefield import mesh as ms
from yeefield import network as nw
from yeefield import scene as sc
from yeefield import solver as sv
from yeefield.constants import C0, ETA0

import oracles


# ---------------------------------------------------------------------------
# shared coarse-mesh pipeline runs (the expensive fixtures)
# ---------------------------------------------------------------------------

def _pipeline(tmp_root, scenario, *extra):
    out = os.path.join(str(tmp_root), scenario)
    code = cli.main(["run", scenario, "--out", out, *extra])
    assert code == 0, f"pipeline failed for {scenario}"
    return out


@pytest.fixture(scope="session")
def run_root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def single_no_frame(run_root):
    return _pipeline(run_root, "single_no_frame", "--set", "max_steps=8000")


@pytest.fixture(scope="session")
def single_with_frame(run_root):
    return _pipeline(run_root, "single_with_frame",
                     "--set", "max_steps=12000")


@pytest.fixture(scope="session")
def array_no_frame(run_root):
    return _pipeline(run_root, "array_no_frame", "--set", "max_steps=8000")


@pytest.fixture(scope="session")
def array_with_frame(run_root):
    return _pipeline(run_root, "array_with_frame", "--set", "max_steps=8000")


def _metrics(outdir):
    with open(os.path.join(outdir, "metrics.json")) as fh:
        return json.load(fh)


def _smat(outdir, scenario, nports):
    return nw.read_touchstone(
        os.path.join(outdir, "%s.s%dp" % (scenario, nports)))


# ---------------------------------------------------------------------------
# a small probe-fed half-wave patch with a documented closed-form resonance
# ---------------------------------------------------------------------------

PATCH_L = 3.0e-3                 # resonant length (x)
PATCH_W = 4.5e-3                 # radiating width (y)
PATCH_H = 0.25e-3                # thin substrate keeps the probe parasitic low
PATCH_EPS = 3.5


def halfwave_patch_scene(two_ports=False, tan_delta=0.0041):
    sub_half = 3.4e-3
    margin = 0.25 * C0 / 26.7e9
    substrate = sc.Box(lo=(-sub_half, -sub_half, 0.0),
                       hi=(sub_half, sub_half, PATCH_H),
                       material=sc.Material("sub", eps_r=PATCH_EPS,
                                            tan_delta=tan_delta),
                       tag="substrate")
    patch = sc.Plate(z=PATCH_H, x0=-PATCH_L / 2, x1=PATCH_L / 2,
                     y0=-PATCH_W / 2, y1=PATCH_W / 2, tag="patch")
    ports = [sc.PortDef(1, -1.0e-3, 0.0, 0.0, PATCH_H, "x")]
    if two_ports:
        # deliberately NOT symmetry-related to port 1, so S12 = S21 is a
        # genuine reciprocity statement rather than a mirror identity
        ports.append(sc.PortDef(2, 0.35e-3, 0.95e-3, 0.0, PATCH_H, "y"))
    return sc.Scene(
        primitives=(substrate, patch),
        ports=tuple(ports),
        bounds=((-sub_half - margin, -sub_half - margin, 0.0),
                (sub_half + margin, sub_half + margin, PATCH_H + margin)),
        f0=26.7e9,
        footprint=((-sub_half, -sub_half), (sub_half, sub_half)),
        name="halfwave_patch")


def _solve_ports(scene, max_steps=9000, f0=26e9, policy=None):
    grid = ms.generate_mesh(scene, policy or ms.MeshPolicy())
    ports = [(p.index, edge) for p, edge in zip(scene.ports,
                                                grid.port_edges)]
    ex = sv.Excitation(f0=f0)
    ctl = sv.RunControl(max_steps=max_steps)
    return [sv.run(grid, ports, p.index, ex, ctl) for p in scene.ports]


# ---------------------------------------------------------------------------
# 1. far-field transform against the exact dipole solution
# ---------------------------------------------------------------------------

def test_dipole_directivity():
    freq = 28e9
    lam = C0 / freq
    pts, J, M, dS = oracles.box_face_currents(
        0.6 * lam, 40, freq, lambda P: oracles.dipole_near_fields(P, freq))
    ff = ffd.ntff_from_currents(pts, J, M, dS, freq,
                                theta=np.arange(0.0, 181.0, 2.0),
                                phi=np.arange(-180.0, 180.0, 2.0))
    gain = ffd.gain_pattern(ff, oracles.dipole_radiated_power(freq))
    assert gain.max() == pytest.approx(1.76, abs=0.1)


# ---------------------------------------------------------------------------
# 2. discrete energy conservation once the source has rung out
# ---------------------------------------------------------------------------

def test_energy_conservation_after_turnoff():
    d = 0.5e-3
    ax = np.arange(21) * d
    grid = ms.grid_from_axes(ax, ax, ax, boundaries=("pec",) * 6)
    s = sv.FdtdSolver(grid)
    ex = sv.Excitation()
    s.add_soft_source(sv.SoftSource("Ez", (10, 10, 10), ex.waveform))
    warmup = int(2.5 * ex.t0 / s.dt) + 1      # envelope < 1e-9 after 2 t0
    for _ in range(warmup):
        s.step()
    energies = []
    for n in range(1000):
        s._h_prev = {k: a.copy() for k, a in s.H.items()}
        s.update_H()
        energies.append(s.field_energy())
        s.update_E((warmup + n + 0.5) * s.dt)
    energies = np.asarray(energies)
    assert np.ptp(energies) / energies[0] < 1e-3


# ---------------------------------------------------------------------------
# 3. absorbing-boundary quality at normal incidence
# ---------------------------------------------------------------------------

def test_cpml_reflection_below_minus_60db():
    """Plane wave down a periodic column; the reflected spectrum is isolated
    by subtracting a reference column whose far wall is much further away."""
    dz = 0.25e-3
    lat = np.arange(5) * dz
    ex = sv.Excitation()                       # covers 22-34 GHz

    def probe_series(nz, k_src, k_prb, nsteps):
        z = np.arange(nz + 1) * dz
        grid = ms.grid_from_axes(
            lat, lat, z,
            boundaries=("periodic",) * 4 + ("pml", "pml"), npml=10)
        s = sv.FdtdSolver(grid)
        s.add_soft_source(sv.SoftSource(
            "Ex", (slice(None), slice(None), k_src), ex.waveform))
        rec = np.zeros(nsteps)
        for n in range(nsteps):
            s.step()
            rec[n] = s.E["Ex"][0, 0, k_prb]
        return rec, s.dt

    nsteps = 2600
    test, dt = probe_series(nz=200, k_src=150, k_prb=60, nsteps=nsteps)
    ref, _ = probe_series(nz=600, k_src=550, k_prb=460, nsteps=nsteps)
    freqs = np.linspace(22e9, 34e9, 25)
    n = np.arange(nsteps)
    ph = np.exp(-2j * np.pi * freqs[:, None] * (n + 1.0) * dt)
    R = (ph @ (test - ref)) / (ph @ ref)
    level_db = 20.0 * np.log10(np.abs(R))
    assert level_db.max() < -60.0


# ---------------------------------------------------------------------------
# 4. reciprocity of an asymmetric coarse two-port patch
# ---------------------------------------------------------------------------

def test_two_port_patch_reciprocity():
    """Reciprocity must hold in lossy isotropic media too; the loss also
    damps the resonant ring-down so both runs decay fully inside the step
    budget, leaving no truncation asymmetry in the spectra."""
    recs = _solve_ports(
        halfwave_patch_scene(two_ports=True, tan_delta=0.10),
        max_steps=14000)
    freqs = np.linspace(22e9, 30e9, 17)
    m = nw.extract_sparams(recs, freqs, nports=2)
    assert all(r.converged for r in recs)
    assert np.abs(m.s[:, 0, 1] - m.s[:, 1, 0]).max() < 1e-3


# ---------------------------------------------------------------------------
# 5. resonance of a textbook half-wave patch vs the cavity-model oracle
# ---------------------------------------------------------------------------

def test_halfwave_patch_resonance():
    """The patch's open-end staircase error converges first-order with the
    in-plane cell size (measured: ~34%/mm against the cavity oracle), so this
    one fixture runs a finer lateral mesh than the antenna scenarios."""
    recs = _solve_ports(halfwave_patch_scene(), max_steps=12000,
                        policy=ms.MeshPolicy(max_cell=0.13e-3))
    freqs = np.linspace(20e9, 30e9, 401)
    m = nw.extract_sparams(recs, freqs, nports=1)
    db = m.db(1, 1)
    f_dip = m.freqs[int(np.argmin(db))]
    assert db.min() < -3.0, "no resonance dip found in the sweep"
    f_oracle = oracles.cavity_patch_resonance(PATCH_L, PATCH_W, PATCH_H,
                                              PATCH_EPS)
    assert abs(f_dip - f_oracle) / f_oracle < 0.05


# ---------------------------------------------------------------------------
# 6. aperture-efficiency arithmetic on the quoted design point
# ---------------------------------------------------------------------------

def test_aperture_efficiency_quoted_point():
    eta = ffd.aperture_efficiency(11.81, 14.178e-3 ** 2, 28e9)
    assert eta == pytest.approx(0.689, abs=0.005)


# ---------------------------------------------------------------------------
# 7. the cell frame turns a poorly matched element into a matched one
# ---------------------------------------------------------------------------

def test_frame_improves_single_element_match(single_no_frame,
                                             single_with_frame):
    bare = _smat(single_no_frame, "single_no_frame", 2)
    framed = _smat(single_with_frame, "single_with_frame", 2)
    assert framed.db(1, 1).min() <= bare.db(1, 1).min() - 3.0
    band = nw.bandwidth_at_threshold(framed.freqs, framed.s[:, 0, 0])
    if band is not None:
        assert band.f_lo <= 28e9 <= band.f_hi


# ---------------------------------------------------------------------------
# 8. framed array: symmetric beam, equal principal-plane beamwidths
# ---------------------------------------------------------------------------

def test_framed_array_beam_symmetry(array_with_frame):
    ff, gain = cli.read_farfield_csv(
        os.path.join(array_with_frame, "farfield.csv"))
    # G(theta, phi) == G(theta, -phi): mirror the phi axis onto itself
    phi = ff.phi
    j_map = {j: int(np.argmin(np.abs(phi - (-p))))
             for j, p in enumerate(phi) if -p >= phi.min() - 1e-9
             and -p <= phi.max() + 1e-9}
    upper = ff.theta <= 90.0       # ground plane blanks the lower half
    floor = gain.max() - 40.0      # compare only meaningful levels
    worst = 0.0
    for j, jm in j_map.items():
        if abs(phi[jm] + phi[j]) > 1e-6:
            continue
        a, b = gain[upper, j], gain[upper, jm]
        sel = (a > floor) | (b > floor)
        if sel.any():
            worst = max(worst, np.abs(a[sel] - b[sel]).max())
    assert worst < 0.2

    m = _metrics(array_with_frame)
    h0, h90 = m["hpbw_phi0_deg"], m["hpbw_phi90_deg"]
    assert h0 is not None and h90 is not None
    assert abs(h0 - h90) < 0.15 * (0.5 * (h0 + h90))


# ---------------------------------------------------------------------------
# 9. framed array does not lose isolation relative to the bare array
# ---------------------------------------------------------------------------

def test_framed_array_isolation_trend(array_no_frame, array_with_frame):
    framed = _metrics(array_with_frame)
    bare = _metrics(array_no_frame)
    w = framed["worst_isolation_db"]
    lo, hi = framed["isolation_band_ghz"]
    assert w is not None and math.isfinite(w)
    assert 24.25 <= lo < hi <= 29.5
    assert w <= bare["worst_isolation_db"] + 3.0


# ---------------------------------------------------------------------------
# 10. reflection-phase suite: analytic anchors and FDTD calibrations
# ---------------------------------------------------------------------------

def test_reflection_phase_suite():
    p = amc.AmcCellParams()
    # DC limit: inductive short, phase -> +180
    low = amc.reflection_phase(amc.surface_impedance(p, 1e6))
    assert abs(low) == pytest.approx(180.0, abs=0.01)
    # exact magnetic-wall point at resonance
    at_res = amc.reflection_phase(amc.surface_impedance(p, p.f_res))
    assert abs(float(at_res)) < 1e-6
    # band edges sit at +/-90 degrees by construction
    f = np.linspace(3e9, 20e9, 3000)
    lo, hi = amc.amc_band(p, f)
    edges = amc.reflection_phase(amc.surface_impedance(
        p, np.array([lo, hi])))
    assert edges[0] == pytest.approx(90.0, abs=0.2)
    assert edges[1] == pytest.approx(-90.0, abs=0.2)
    # FDTD periodic cell: PEC sheet calibration and slab model agreement
    fs = np.linspace(8e9, 15e9, 8)
    pec = amc.reflection_phase_fdtd(p, fs, structure="pec", nsteps=4000)
    assert np.abs(np.abs(pec.phase_deg) - 180.0).max() < 2.0
    slab = amc.reflection_phase_fdtd(p, fs, structure="slab", nsteps=6000)
    assert np.abs(slab.phase_deg
                  - amc.grounded_slab_phase(p, fs)).max() < 5.0


# ---------------------------------------------------------------------------
# 11. exact post-processing fixtures
# ---------------------------------------------------------------------------

def test_touchstone_8port_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    f = np.linspace(24e9, 30e9, 7)
    s = (rng.normal(size=(7, 8, 8)) + 1j * rng.normal(size=(7, 8, 8))) * 0.3
    path = tmp_path / "m.s8p"
    nw.write_touchstone(nw.SMatrix(freqs=f, s=s), path)
    back = nw.read_touchstone(path)
    assert np.abs(back.s - s).max() < 1e-12
    assert np.abs(back.freqs - f).max() < 1e-3


def test_hpbw_closed_form():
    th = np.arange(-90.0, 90.5, 1.0)
    for q in (1.0, 2.0, 4.0, 8.0):
        u = np.cos(np.deg2rad(th)) ** (2 * q)
        got = ffd.hpbw(th, 10 * np.log10(np.maximum(u, 1e-30)))
        assert got == pytest.approx(oracles.hpbw_cos_power(q), abs=0.1)


def test_bandwidth_hand_fixture():
    freqs = np.array([27.0, 27.5, 28.5, 29.0]) * 1e9
    db = np.array([-8.0, -12.0, -12.0, -8.0])
    band = nw.bandwidth_at_threshold(freqs, db)
    assert band.bandwidth == pytest.approx(1.5e9, rel=1e-12)


# ---------------------------------------------------------------------------
# 12. bit-for-bit determinism of the full pipeline
# ---------------------------------------------------------------------------

def test_run_outputs_are_deterministic(tmp_path):
    args = ["run", "single_no_frame", "--freqs", "27:29:0.5",
            "--set", "max_steps=600", "--set", "pattern_step_deg=30"]
    outs = []
    for tag in ("a", "b"):
        out = str(tmp_path / tag)
        assert cli.main(args + ["--out", out]) == 0
        outs.append(out)

    for name in ("single_no_frame.s2p", "farfield.csv", "cut_phi0.csv",
                 "cut_phi90.csv", "metrics.json"):
        with open(os.path.join(outs[0], name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(outs[1], name), "rb") as fh:
            second = fh.read()
        assert first == second, f"{name} differs between identical runs"
