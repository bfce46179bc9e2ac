"""Mushroom-cell artificial-magnetic-conductor analysis.

Analytic model: the patch grid over a grounded, via-connected substrate acts
as a parallel LC surface,

    L = mu0 * h,
    C = w eps0 (1 + eps_r) / pi * acosh((w + g) / g),
    Zs = j w L / (1 - w^2 L C),

whose reflection coefficient Gamma = (Zs - eta0)/(Zs + eta0) swings from
+180 deg (PEC-like, low f) through 0 deg at resonance to -180 deg. The
conventional AMC operating band is |phase| <= 90 deg.

The FDTD cross-check runs a laterally periodic unit cell under a normally
incident plane wave, subtracts an identical empty-domain run to isolate the
reflected wave, and de-embeds the probe-plane ratio to the patch surface
using the grid's numerical dispersion relation so that a bare PEC sheet
calibrates to 180 deg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C0, EPS0, MU0, ETA0
from . import mesh
from .solver import FdtdSolver, SoftSource


@dataclass
class AmcCellParams:
    """One square mushroom cell: patch width w, edge-to-edge gap, grounded
    substrate of height h, and a centered via."""
    w: float = 2.65e-3
    gap: float = 1.2195e-3         # coarse-mesh-resolvable showcase gap
    h: float = 2.5e-3
    eps_r: float = 3.5
    via_radius: float = 0.1e-3

    def __post_init__(self):
        if not self.gap > 0:
            raise ValueError("gap must be positive")
        if not self.w > self.gap:
            raise ValueError("patch width must exceed the gap")

    @property
    def period(self) -> float:
        return self.w + self.gap

    @property
    def inductance(self) -> float:
        return MU0 * self.h

    @property
    def capacitance(self) -> float:
        return self.w * EPS0 * (1.0 + self.eps_r) / math.pi \
            * math.acosh((self.w + self.gap) / self.gap)

    @property
    def f_res(self) -> float:
        return 1.0 / (2.0 * math.pi
                      * math.sqrt(self.inductance * self.capacitance))


@dataclass
class PhaseCurve:
    freqs: np.ndarray              # Hz
    phase_deg: np.ndarray          # wrapped to (-180, 180]
    model: str                     # "analytic" or "fdtd"


def surface_impedance(params: AmcCellParams, f):
    """Sheet impedance of the LC surface model (j omega L / (1 - w^2 LC));
    exactly at resonance the result is +/- inf j."""
    w = 2.0 * math.pi * np.asarray(f, dtype=float)
    L, C = params.inductance, params.capacitance
    den = 1.0 - w * w * L * C
    with np.errstate(divide="ignore"):
        return 1j * np.where(den != 0.0, w * L / den, math.inf)


def reflection_phase(zs) -> np.ndarray:
    """Phase (deg) of Gamma = (Zs - eta0)/(Zs + eta0), wrapped to
    (-180, 180]; |Zs| = inf maps to 0 (ideal magnetic wall)."""
    zs = np.asarray(zs, dtype=complex)
    with np.errstate(invalid="ignore"):
        gamma = np.where(np.isinf(zs), 1.0, (zs - ETA0) / (zs + ETA0))
    deg = np.degrees(np.angle(gamma))
    return np.where(deg <= -180.0 + 1e-12, deg + 360.0, deg)


def phase_curve(params: AmcCellParams, freqs) -> PhaseCurve:
    freqs = np.asarray(freqs, dtype=float)
    return PhaseCurve(freqs=freqs,
                      phase_deg=np.atleast_1d(
                          reflection_phase(surface_impedance(params, freqs))),
                      model="analytic")


def amc_band(params: AmcCellParams, freqs):
    """(f_lo, f_hi) where the analytic phase magnitude stays <= 90 deg,
    bracketing the 0-deg resonance; None when no crossing is in range."""
    freqs = np.asarray(freqs, dtype=float)
    if not (freqs[0] < params.f_res < freqs[-1]):
        return None
    phase = np.atleast_1d(
        reflection_phase(surface_impedance(params, freqs)))

    def edge(target):
        # analytic phase decreases monotonically; find the target crossing
        above = phase >= target
        if above.all() or not above.any():
            return freqs[0] if not above.any() else freqs[-1]
        k = int(np.argmin(above))           # first sample below target
        f0, f1 = freqs[k - 1], freqs[k]
        p0, p1 = phase[k - 1], phase[k]
        return f0 + (target - p0) / (p1 - p0) * (f1 - f0)

    return edge(90.0), edge(-90.0)


# ---------------------------------------------------------------------------
# periodic-cell FDTD cross-check
# ---------------------------------------------------------------------------

def _numerical_k(freq, dz, dt):
    """Axis-aligned numerical dispersion: sin(k dz/2) = dz/(c dt) sin(w dt/2)."""
    arg = dz / (C0 * dt) * np.sin(math.pi * freq * dt)
    return 2.0 / dz * np.arcsin(np.clip(arg, -1.0, 1.0))


def _build_cell_grid(params: AmcCellParams, structure: str, n_lat: int,
                     dz: float, air_cells: int, npml: int):
    """Uniform-spacing periodic column: substrate + air + top PML; bottom
    boundary PEC (the ground) except for the empty reference, which absorbs
    at both ends."""
    p = params.period
    d_lat = p / n_lat
    n_sub = max(2, round(params.h / dz))
    nz = n_sub + air_cells + npml
    x = np.arange(n_lat + 1) * d_lat
    z = np.arange(nz + 1) * dz
    g = mesh.grid_from_axes(x, x, z, npml=npml)
    for comp in g.e_idx.values():
        comp[:] = 1                     # start as vacuum
    if structure != "empty":
        eps_sub = 1.0 if structure == "pec" else params.eps_r
        # row 2: substrate; row 3: tangential edges in the substrate-air
        # interface plane see the arithmetic mean permittivity
        table_eps = np.array([1.0, 1.0, eps_sub, 0.5 * (1.0 + eps_sub)])
        table_sig = np.zeros(4)
        for comp, idx in g.e_idx.items():
            if comp == "Ez":
                idx[:, :, :n_sub] = 2
            else:
                idx[:, :, :n_sub] = 2
                idx[:, :, n_sub] = 3
        boundaries = ("periodic",) * 4 + ("pec", "pml")
    else:
        table_eps = np.array([1.0, 1.0, 1.0])
        table_sig = np.zeros(3)
        boundaries = ("periodic",) * 4 + ("pml", "pml")
    g.table_eps = table_eps
    g.table_sigma = table_sig
    g.boundaries = boundaries
    if structure == "pec":
        g.e_idx["Ex"][:, :, n_sub] = mesh.PEC_INDEX
        g.e_idx["Ey"][:, :, n_sub] = mesh.PEC_INDEX
    elif structure == "mushroom":
        # patch: PEC square of width w centered in the period, tangential
        # edges at the substrate top plane
        xm = 0.5 * (x[:-1] + x[1:])
        half = 0.5 * params.w
        cx = 0.5 * p
        on_x = np.abs(xm - cx) <= half + 1e-12        # Ex runs along x
        on_n = np.abs(x - cx) <= half + 1e-12         # node coordinate
        g.e_idx["Ex"][np.ix_(np.where(on_x)[0], np.where(on_n)[0],
                             [n_sub])] = mesh.PEC_INDEX
        g.e_idx["Ey"][np.ix_(np.where(on_n)[0], np.where(on_x)[0],
                             [n_sub])] = mesh.PEC_INDEX
        iv = int(np.argmin(np.abs(x - cx)))
        g.e_idx["Ez"][iv, iv, :n_sub] = mesh.PEC_INDEX
    return g, n_sub


def reflection_phase_fdtd(params: AmcCellParams, freqs,
                          structure: str = "mushroom", n_lat: int = 48,
                          dz: float = 0.1e-3, air_cells: int = 60,
                          npml: int = 10, nsteps: int = 6000,
                          f_center: float = None,
                          f_span: float = None) -> PhaseCurve:
    """Reflection phase of a periodic cell under a normally incident,
    x-polarized plane wave, de-embedded to the patch plane (substrate top).

    A second run of the same column with the structure removed and both ends
    absorbing measures the incident wave at the probe, so the reflected
    spectrum is (total - incident). ``structure`` selects the full mushroom
    cell, a bare PEC sheet (calibration), or the grounded bare slab.
    """
    freqs = np.asarray(freqs, dtype=float)
    if structure not in ("mushroom", "pec", "slab"):
        raise ValueError("structure must be mushroom, pec or slab")
    if structure in ("pec", "slab"):
        n_lat = 4                       # laterally invariant cases
    # the empty reference must reuse the exact same lateral grid: dt follows
    # the smallest cell, and mixing spectra from runs with different dt
    # corrupts the incident-wave normalization
    if f_center is None:
        f_center = 0.5 * (freqs[0] + freqs[-1])
    if f_span is None:
        f_span = max(freqs[-1] - freqs[0], 0.2 * f_center)
    tau = math.sqrt(math.log(2.0)) / (math.pi * f_span)
    t0 = 6.0 * tau

    def wf(t):
        u = t - t0
        return math.exp(-u * u / (2.0 * tau * tau)) \
            * math.sin(2.0 * math.pi * f_center * u)

    def run(struct):
        g, n_sub = _build_cell_grid(params, struct, n_lat, dz,
                                    air_cells, npml)
        s = FdtdSolver(g, courant=0.98)
        nz = g.shape[2]
        k_src = nz - npml - 6
        k_prb = n_sub + (k_src - n_sub) // 2
        s.add_soft_source(SoftSource(
            "Ex", (slice(None), slice(None), k_src), wf))
        rec = np.zeros(nsteps)
        for n in range(nsteps):
            s.update_H()
            s.update_E((n + 0.5) * s.dt)
            rec[n] = s.E["Ex"][:, :, k_prb].mean()
        s.check_finite()
        return rec, s.dt, g.z[k_prb], g.z[n_sub]

    tot, dt, z_prb, z_ref = run(structure)
    inc, _, _, _ = run("empty")
    refl = tot - inc
    n = np.arange(nsteps)
    ph = np.exp(-2j * math.pi * freqs[:, None] * (n[None, :] + 1.0) * dt)
    R = (ph @ refl) / (ph @ inc)
    # translate the reference plane from the probe down to the patch plane:
    # incident accrues e^{+jk dz_prop} travelling down, reflected the same
    # coming back, so divide by e^{2jk (z_prb - z_ref)} evaluated with the
    # numerical wavenumber of the discrete vacuum region.
    k_num = _numerical_k(freqs, dz, dt)
    R = R * np.exp(2j * k_num * (z_prb - z_ref))
    deg = np.degrees(np.angle(R))
    deg = np.where(deg <= -180.0 + 1e-12, deg + 360.0, deg)
    return PhaseCurve(freqs=freqs, phase_deg=deg, model="fdtd")


def grounded_slab_phase(params: AmcCellParams, freqs) -> np.ndarray:
    """Closed-form reflection phase (deg) of the bare grounded slab at its
    top surface: Z_in = j (eta0/sqrt(eps_r)) tan(k_d h)."""
    freqs = np.asarray(freqs, dtype=float)
    n1 = math.sqrt(params.eps_r)
    kd = 2.0 * math.pi * freqs * n1 / C0
    zin = 1j * (ETA0 / n1) * np.tan(kd * params.h)
    return np.atleast_1d(reflection_phase(zin))
