"""Time-domain Yee update loop: lossy dielectrics, PEC, CPML absorbing
boundaries, lumped resistive ports, and running-DFT observers.

Field staggering (cells Nx x Ny x Nz):
    Ex (Nx,   Ny+1, Nz+1)   at (i+1/2, j,     k)
    Ey (Nx+1, Ny,   Nz+1)   at (i,     j+1/2, k)
    Ez (Nx+1, Ny+1, Nz)     at (i,     j,     k+1/2)
    Hx (Nx+1, Ny,   Nz)     at (i,     j+1/2, k+1/2)
    Hy (Nx,   Ny+1, Nz)     at (i+1/2, j,     k+1/2)
    Hz (Nx,   Ny,   Nz+1)   at (i+1/2, j+1/2, k)

E is defined at integer time steps, H at half steps. The update is strictly
sequential and deterministic: identical inputs give bitwise-identical
recordings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C0, EPS0, MU0, ETA0
from .mesh import YeeGrid, PEC_INDEX, cfl_timestep


class DivergenceError(RuntimeError):
    def __init__(self, step):
        super().__init__(f"non-finite field value detected at step {step}")
        self.step = step


@dataclass
class CpmlSpec:
    thickness: int = 10
    m: int = 3
    sigma_scale: float = 1.0
    kappa_max: float = 5.0
    alpha_max: float = 0.05

    def __post_init__(self):
        if self.thickness < 4:
            raise ValueError("CPML thickness must be >= 4 cells")
        if self.m < 1:
            raise ValueError("CPML polynomial order must be >= 1")


@dataclass
class Excitation:
    """Gaussian-modulated sinusoid.

    The envelope is chosen so the spectrum stays within 3 dB of its peak over
    the n257 band (24.25-29.5 GHz) and well above -20 dB over 22-34 GHz.
    """
    f0: float = 28e9
    amplitude: float = 1.0
    resistance: float = 50.0
    bw_3db: float = 7.8e9          # two-sided -3 dB width

    @property
    def tau(self) -> float:
        return math.sqrt(math.log(2.0)) / (math.pi * self.bw_3db)

    @property
    def t0(self) -> float:
        return 6.0 * self.tau

    def waveform(self, t):
        u = t - self.t0
        return self.amplitude * np.exp(-u * u / (2.0 * self.tau ** 2)) \
            * np.sin(2.0 * math.pi * self.f0 * u)

    def spectrum_envelope(self, f):
        """Spectrum magnitude relative to its peak at f0."""
        df = np.asarray(f, dtype=float) - self.f0
        return np.exp(-2.0 * (math.pi * df * self.tau) ** 2)


@dataclass
class RunControl:
    max_steps: int = 40000
    convergence_threshold: float = 1e-5
    trailing: int = 1000
    check_interval: int = 200
    huygens_freqs: tuple = ()


@dataclass
class HuygensRecord:
    """Running-DFT tangential phasors on the six faces of an index box."""
    freqs: np.ndarray
    box: tuple                     # (i0, i1, j0, j1, k0, k1) node indices
    faces: dict                    # face name -> dict of component phasors
    grid: YeeGrid = None
    dt: float = 0.0


@dataclass
class Recordings:
    """Port time series plus optional surface phasors for one excitation."""
    dt: float
    v: np.ndarray                  # (nports, nsteps) at t = (n+1) dt
    i: np.ndarray                  # (nports, nsteps) at t = (n+1/2) dt
    excited_port: int
    src_samples: np.ndarray
    converged: bool = True
    steps: int = 0
    huygens: HuygensRecord = None
    port_zref: np.ndarray = None

    def port_spectra(self, freqs):
        """(V, I) complex spectra, (nports, nfreqs), time-aligned."""
        freqs = np.asarray(freqs, dtype=float)
        n = np.arange(self.steps)
        w = 2.0 * np.pi * freqs[:, None]
        ph_v = np.exp(-1j * w * (n[None, :] + 1.0) * self.dt)
        ph_i = np.exp(-1j * w * (n[None, :] + 0.5) * self.dt)
        V = np.einsum("pn,fn->pf", self.v[:, :self.steps], ph_v) * self.dt
        I = np.einsum("pn,fn->pf", self.i[:, :self.steps], ph_i) * self.dt
        return V, I


class LumpedPort:
    """Thevenin source (series R) stamped on one vertical Ez gap edge; the
    edges above the gap are PEC wire (stamped by the mesher)."""

    def __init__(self, index, edge, resistance=50.0, waveform=None):
        self.index = index
        self.i, self.j, self.k0, self.k1 = edge
        self.resistance = float(resistance)
        self.waveform = waveform       # callable v_src(t) or None (passive)


class SoftSource:
    """Additive E-field source over an index region (plane-wave injection)."""

    def __init__(self, component, region, waveform):
        self.component = component
        self.region = region
        self.waveform = waveform


class FdtdSolver:
    def __init__(self, grid: YeeGrid, cpml: CpmlSpec | None = None,
                 courant: float = 0.99, dt: float | None = None):
        self.grid = grid
        has_pml = any(b == "pml" for b in grid.boundaries)
        self.cpml = cpml or (CpmlSpec(thickness=grid.npml) if has_pml else None)
        if has_pml and self.cpml.thickness != grid.npml:
            raise ValueError("CPML thickness must match the grid's pml padding")
        self.dt = dt if dt is not None else cfl_timestep(grid, courant)
        nx, ny, nz = grid.shape
        self.nx, self.ny, self.nz = nx, ny, nz
        self.E = {
            "Ex": np.zeros((nx, ny + 1, nz + 1)),
            "Ey": np.zeros((nx + 1, ny, nz + 1)),
            "Ez": np.zeros((nx + 1, ny + 1, nz)),
        }
        self.H = {
            "Hx": np.zeros((nx + 1, ny, nz)),
            "Hy": np.zeros((nx, ny + 1, nz)),
            "Hz": np.zeros((nx, ny, nz + 1)),
        }
        self.step_index = 0
        self._setup_spacings()
        self._setup_coefficients()
        self._setup_pml()
        self.ports: list[LumpedPort] = []
        self.soft_sources: list[SoftSource] = []
        self._huygens = None
        self._h_prev = None

    # -- setup ------------------------------------------------------------

    def _setup_spacings(self):
        g = self.grid
        self.d = (g.dx, g.dy, g.dz)
        self.dd = (g.dual(0), g.dual(1), g.dual(2))
        self.periodic = tuple(
            g.boundaries[2 * ax] == "periodic" or g.boundaries[2 * ax + 1] == "periodic"
            for ax in range(3))
        for ax in range(3):
            if self.periodic[ax] and np.ptp(self.d[ax]) > 1e-12 * self.d[ax][0]:
                raise ValueError("periodic axes require uniform spacing")

    def _setup_coefficients(self):
        g, dt = self.grid, self.dt
        eps = g.table_eps * EPS0
        sig = g.table_sigma
        loss = sig * dt / (2.0 * eps)
        ca_t = (1.0 - loss) / (1.0 + loss)
        cb_t = (dt / eps) / (1.0 + loss)
        ca_t[PEC_INDEX] = 0.0
        cb_t[PEC_INDEX] = 0.0
        self.ca = {c: ca_t[idx] for c, idx in g.e_idx.items()}
        self.cb = {c: cb_t[idx] for c, idx in g.e_idx.items()}
        self.ch = dt / MU0

    def _pml_profile(self, axis, positions, inner, outer):
        """(b, a, 1/kappa) CPML profiles at the given coordinates."""
        spec = self.cpml
        L = abs(outer - inner)
        d = np.clip((positions - inner) / (outer - inner), 0.0, 1.0)
        dcell = L / spec.thickness
        smax = spec.sigma_scale * 0.8 * (spec.m + 1) / (ETA0 * dcell)
        sigma = smax * d ** spec.m
        kappa = 1.0 + (spec.kappa_max - 1.0) * d ** spec.m
        alpha = spec.alpha_max * (1.0 - d)
        b = np.exp(-(sigma / kappa + alpha) * self.dt / EPS0)
        denom = sigma * kappa + kappa ** 2 * alpha
        a = np.where(denom > 0, sigma * (b - 1.0) / np.where(denom > 0, denom, 1.0), 0.0)
        return b, a, 1.0 / kappa

    def _setup_pml(self):
        # terms[(field_comp, deriv_axis)] -> list of slabs
        self.pml_terms = {}
        g = self.grid
        if self.cpml is None:
            return
        n = self.cpml.thickness
        lines = (g.x, g.y, g.z)
        mids = tuple(0.5 * (ln[:-1] + ln[1:]) for ln in lines)
        # derivative arrays are indexed by the position of the *result* field
        # component along the derivative axis: half positions for H updates,
        # integer (interior) positions for E updates.
        for ax in range(3):
            N = len(lines[ax]) - 1
            for side in (0, 1):
                if g.boundaries[2 * ax + side] != "pml":
                    continue
                if side == 0:
                    inner, outer = lines[ax][n], lines[ax][0]
                    h_slab = slice(0, n)              # half positions 0..n-1
                    e_slab = slice(0, n)              # interior rows j=1..n
                    h_pos = mids[ax][:n]
                    e_pos = lines[ax][1:n + 1]
                else:
                    inner, outer = lines[ax][N - n], lines[ax][N]
                    h_slab = slice(N - n, N)
                    e_slab = slice(N - n - 1, N - 1)  # interior rows j=N-n..N-1
                    h_pos = mids[ax][N - n:]
                    e_pos = lines[ax][N - n:N]
                bh, ah, ikh = self._pml_profile(ax, h_pos, inner, outer)
                be, ae, ike = self._pml_profile(ax, e_pos, inner, outer)
                self.pml_terms.setdefault(("H", ax), []).append(
                    (h_slab, bh, ah, ikh, {}))
                self.pml_terms.setdefault(("E", ax), []).append(
                    (e_slab, be, ae, ike, {}))

    # -- sources and observers --------------------------------------------

    def add_port(self, port: LumpedPort):
        g, dt = self.grid, self.dt
        i, j, k0 = port.i, port.j, port.k0
        dz = g.dz[k0]
        area = self.dd[0][i] * self.dd[1][j]
        idx = g.e_idx["Ez"][i, j, k0]
        if idx == PEC_INDEX:
            raise ValueError(f"port {port.index}: gap edge is PEC-shorted")
        eps = g.table_eps[idx] * EPS0
        sig = g.table_sigma[idx]
        loss = sig * dt / (2.0 * eps)
        beta = dt * dz / (2.0 * eps * port.resistance * area)
        self.ca["Ez"][i, j, k0] = (1.0 - loss - beta) / (1.0 + loss + beta)
        self.cb["Ez"][i, j, k0] = (dt / eps) / (1.0 + loss + beta)
        port._cs = (dt / (eps * port.resistance * area)) / (1.0 + loss + beta)
        port._dz = dz
        self.ports.append(port)

    def add_soft_source(self, src: SoftSource):
        self.soft_sources.append(src)

    def add_huygens(self, box, freqs):
        """Register a running-DFT Huygens box; box = (i0,i1,j0,j1,k0,k1) nodes."""
        freqs = np.asarray(freqs, dtype=float)
        i0, i1, j0, j1, k0, k1 = box
        nf = len(freqs)

        def z0(*shape):
            return np.zeros((nf,) + shape, dtype=complex)

        faces = {}
        di, dj, dk = i1 - i0, j1 - j0, k1 - k0
        skip_bottom = k0 == 0 and self.grid.boundaries[4] == "pec"
        faces["z+"] = {"Ex": z0(di, dj + 1), "Ey": z0(di + 1, dj),
                       "Hx0": z0(di + 1, dj), "Hx1": z0(di + 1, dj),
                       "Hy0": z0(di, dj + 1), "Hy1": z0(di, dj + 1)}
        if not skip_bottom:
            faces["z-"] = {k: z0(*v.shape[1:]) for k, v in faces["z+"].items()}
        faces["x+"] = {"Ey": z0(dj, dk + 1), "Ez": z0(dj + 1, dk),
                       "Hy0": z0(dj + 1, dk), "Hy1": z0(dj + 1, dk),
                       "Hz0": z0(dj, dk + 1), "Hz1": z0(dj, dk + 1)}
        faces["x-"] = {k: z0(*v.shape[1:]) for k, v in faces["x+"].items()}
        faces["y+"] = {"Ex": z0(di, dk + 1), "Ez": z0(di + 1, dk),
                       "Hx0": z0(di + 1, dk), "Hx1": z0(di + 1, dk),
                       "Hz0": z0(di, dk + 1), "Hz1": z0(di, dk + 1)}
        faces["y-"] = {k: z0(*v.shape[1:]) for k, v in faces["y+"].items()}
        self._huygens = HuygensRecord(freqs=freqs, box=box, faces=faces,
                                      grid=self.grid, dt=self.dt)
        self._hu_skip_bottom = skip_bottom
        return self._huygens

    # -- update loop -------------------------------------------------------

    def _apply_pml(self, kind, ax, D, key):
        """CPML convolution for derivative array D along axis ax (in place)."""
        terms = self.pml_terms.get((kind, ax))
        if not terms:
            return D
        for slab, b, a, ikappa, psis in terms:
            sl = [slice(None)] * D.ndim
            sl[ax] = slab
            sl = tuple(sl)
            shape = [1] * D.ndim
            shape[ax] = -1
            bb = b.reshape(shape)
            aa = a.reshape(shape)
            kk = ikappa.reshape(shape)
            psi = psis.get(key)
            if psi is None or psi.shape != D[sl].shape:
                psi = np.zeros_like(D[sl])
                psis[key] = psi
            psi *= bb
            psi += aa * D[sl]
            D[sl] = D[sl] * kk + psi
        return D

    def _ddx(self, A, ax, dual, periodic):
        """Finite difference of A along ax divided by the spacing.

        dual=False: forward difference at half positions (H update), spacing =
        primary cells. dual=True: backward difference at integer interior
        positions (E update), spacing = dual cells; with periodic wrap the
        result covers positions 0..N-1.
        """
        d = self.d[ax] if not dual else self.dd[ax]
        if not dual:
            lo = [slice(None)] * A.ndim
            hi = [slice(None)] * A.ndim
            lo[ax] = slice(0, A.shape[ax] - 1)
            hi[ax] = slice(1, A.shape[ax])
            out = A[tuple(hi)] - A[tuple(lo)]
            shape = [1] * A.ndim
            shape[ax] = -1
            return out / d.reshape(shape)
        if periodic:
            rolled = np.roll(A, 1, axis=ax)
            out = A - rolled
            shape = [1] * A.ndim
            shape[ax] = -1
            dd = self.d[ax].copy()      # uniform; dual == primary
            return out / dd.reshape(shape)
        lo = [slice(None)] * A.ndim
        hi = [slice(None)] * A.ndim
        lo[ax] = slice(0, A.shape[ax] - 1)
        hi[ax] = slice(1, A.shape[ax])
        out = A[tuple(hi)] - A[tuple(lo)]
        shape = [1] * A.ndim
        shape[ax] = -1
        return out / d[1:-1].reshape(shape)

    def update_H(self):
        E, H = self.E, self.H
        dEz_dy = self._apply_pml("H", 1, self._ddx(E["Ez"], 1, False, False), "Hx_y")
        dEy_dz = self._apply_pml("H", 2, self._ddx(E["Ey"], 2, False, False), "Hx_z")
        H["Hx"] -= self.ch * (dEz_dy - dEy_dz)
        dEx_dz = self._apply_pml("H", 2, self._ddx(E["Ex"], 2, False, False), "Hy_z")
        dEz_dx = self._apply_pml("H", 0, self._ddx(E["Ez"], 0, False, False), "Hy_x")
        H["Hy"] -= self.ch * (dEx_dz - dEz_dx)
        dEy_dx = self._apply_pml("H", 0, self._ddx(E["Ey"], 0, False, False), "Hz_x")
        dEx_dy = self._apply_pml("H", 1, self._ddx(E["Ex"], 1, False, False), "Hz_y")
        H["Hz"] -= self.ch * (dEy_dx - dEx_dy)

    def update_E(self, t_half):
        E, H = self.E, self.H
        per = self.periodic

        def assign(comp, curl, tgt):
            E[comp][tgt] = self.ca[comp][tgt] * E[comp][tgt] \
                + self.cb[comp][tgt] * curl

        # Ex: transverse axes y (1), z (2)
        dHz_dy = self._apply_pml("E", 1, self._ddx(H["Hz"], 1, True, per[1]), "Ex_y")
        dHy_dz = self._apply_pml("E", 2, self._ddx(H["Hy"], 2, True, per[2]), "Ex_z")
        jsl = slice(0, self.ny) if per[1] else slice(1, self.ny)
        ksl = slice(0, self.nz) if per[2] else slice(1, self.nz)
        a = dHz_dy[:, :, ksl]
        b = dHy_dz[:, jsl, :]
        assign("Ex", a - b, (slice(None), jsl, ksl))
        if per[1]:
            E["Ex"][:, self.ny, :] = E["Ex"][:, 0, :]
        if per[2]:
            E["Ex"][:, :, self.nz] = E["Ex"][:, :, 0]

        # Ey: transverse axes z (2), x (0)
        dHx_dz = self._apply_pml("E", 2, self._ddx(H["Hx"], 2, True, per[2]), "Ey_z")
        dHz_dx = self._apply_pml("E", 0, self._ddx(H["Hz"], 0, True, per[0]), "Ey_x")
        isl = slice(0, self.nx) if per[0] else slice(1, self.nx)
        ksl = slice(0, self.nz) if per[2] else slice(1, self.nz)
        a = dHx_dz[isl, :, :]
        b = dHz_dx[:, :, ksl]
        assign("Ey", a - b, (isl, slice(None), ksl))
        if per[0]:
            E["Ey"][self.nx, :, :] = E["Ey"][0, :, :]
        if per[2]:
            E["Ey"][:, :, self.nz] = E["Ey"][:, :, 0]

        # Ez: transverse axes x (0), y (1)
        dHy_dx = self._apply_pml("E", 0, self._ddx(H["Hy"], 0, True, per[0]), "Ez_x")
        dHx_dy = self._apply_pml("E", 1, self._ddx(H["Hx"], 1, True, per[1]), "Ez_y")
        isl = slice(0, self.nx) if per[0] else slice(1, self.nx)
        jsl = slice(0, self.ny) if per[1] else slice(1, self.ny)
        a = dHy_dx[:, jsl, :]
        b = dHx_dy[isl, :, :]
        assign("Ez", a - b, (isl, jsl, slice(None)))
        if per[0]:
            E["Ez"][self.nx, :, :] = E["Ez"][0, :, :]
        if per[1]:
            E["Ez"][:, self.ny, :] = E["Ez"][:, 0, :]

        for port in self.ports:
            if port.waveform is not None:
                vs = port.waveform(t_half)
                E["Ez"][port.i, port.j, port.k0] -= port._cs * vs
        for src in self.soft_sources:
            E[src.component][src.region] += src.waveform(t_half)

    def step(self):
        """One full leapfrog step (H then E)."""
        n = self.step_index
        self.update_H()
        self.update_E((n + 0.5) * self.dt)
        self.step_index += 1

    # -- recording helpers --------------------------------------------------

    def port_voltage(self, port):
        return -self.E["Ez"][port.i, port.j, port.k0] * port._dz

    def port_current(self, port):
        """Ampere loop of H around the feed wire just above the source gap."""
        i, j = port.i, port.j
        k = min(port.k0 + 1, port.k1 - 1)
        H = self.H
        return (H["Hy"][i, j, k] - H["Hy"][i - 1, j, k]) * self.dd[1][j] \
            - (H["Hx"][i, j, k] - H["Hx"][i, j - 1, k]) * self.dd[0][i]

    def _accumulate_huygens(self, phases, which):
        hu = self._huygens
        if hu is None:
            return
        i0, i1, j0, j1, k0, k1 = hu.box
        E, H = self.E, self.H
        ph = phases[:, None, None]
        for name, f in hu.faces.items():
            k = k1 if name == "z+" else k0
            i = i1 if name == "x+" else i0
            j = j1 if name == "y+" else j0
            if which == "E":
                if name.startswith("z"):
                    f["Ex"] += ph * E["Ex"][i0:i1, j0:j1 + 1, k]
                    f["Ey"] += ph * E["Ey"][i0:i1 + 1, j0:j1, k]
                elif name.startswith("x"):
                    f["Ey"] += ph * E["Ey"][i, j0:j1, k0:k1 + 1]
                    f["Ez"] += ph * E["Ez"][i, j0:j1 + 1, k0:k1]
                else:
                    f["Ex"] += ph * E["Ex"][i0:i1, j, k0:k1 + 1]
                    f["Ez"] += ph * E["Ez"][i0:i1 + 1, j, k0:k1]
            else:
                if name.startswith("z"):
                    f["Hx0"] += ph * H["Hx"][i0:i1 + 1, j0:j1, k - 1]
                    f["Hx1"] += ph * H["Hx"][i0:i1 + 1, j0:j1, k]
                    f["Hy0"] += ph * H["Hy"][i0:i1, j0:j1 + 1, k - 1]
                    f["Hy1"] += ph * H["Hy"][i0:i1, j0:j1 + 1, k]
                elif name.startswith("x"):
                    f["Hy0"] += ph * H["Hy"][i - 1, j0:j1 + 1, k0:k1]
                    f["Hy1"] += ph * H["Hy"][i, j0:j1 + 1, k0:k1]
                    f["Hz0"] += ph * H["Hz"][i - 1, j0:j1, k0:k1 + 1]
                    f["Hz1"] += ph * H["Hz"][i, j0:j1, k0:k1 + 1]
                else:
                    f["Hx0"] += ph * H["Hx"][i0:i1 + 1, j - 1, k0:k1]
                    f["Hx1"] += ph * H["Hx"][i0:i1 + 1, j, k0:k1]
                    f["Hz0"] += ph * H["Hz"][i0:i1, j - 1, k0:k1 + 1]
                    f["Hz1"] += ph * H["Hz"][i0:i1, j, k0:k1 + 1]

    def field_energy(self):
        """Discrete EM energy (exactly conserved in the lossless closed case
        when H_prev tracking is on: uses H^(n-1/2).H^(n+1/2))."""
        g = self.grid
        tot = 0.0
        dv = {
            "Ex": (self.d[0], self.dd[1], self.dd[2]),
            "Ey": (self.dd[0], self.d[1], self.dd[2]),
            "Ez": (self.dd[0], self.dd[1], self.d[2]),
        }
        for comp, arr in self.E.items():
            eps = g.table_eps[g.e_idx[comp]] * EPS0
            dx, dy, dz = dv[comp]
            vol = dx[:, None, None] * dy[None, :, None] * dz[None, None, :]
            tot += 0.5 * np.sum(eps * arr * arr * vol)
        dvh = {
            "Hx": (self.dd[0], self.d[1], self.d[2]),
            "Hy": (self.d[0], self.dd[1], self.d[2]),
            "Hz": (self.d[0], self.d[1], self.dd[2]),
        }
        for comp, arr in self.H.items():
            other = self._h_prev[comp] if self._h_prev is not None else arr
            dx, dy, dz = dvh[comp]
            vol = dx[:, None, None] * dy[None, :, None] * dz[None, None, :]
            tot += 0.5 * MU0 * np.sum(arr * other * vol)
        return tot

    def check_finite(self):
        for arr in (*self.E.values(), *self.H.values()):
            if not np.isfinite(arr).all():
                raise DivergenceError(self.step_index)


def run(grid: YeeGrid, ports, excited_port, excitation: Excitation,
        control: RunControl, huygens_box=None, cpml: CpmlSpec | None = None,
        dt: float | None = None, courant: float = 0.99) -> Recordings:
    """Drive one excitation to convergence; all other ports are matched loads.

    ``ports`` is a list of (index, edge) pairs or scene PortDefs already
    mapped by the mesher (grid.port_edges aligned with the list order).
    """
    solver = FdtdSolver(grid, cpml=cpml, courant=courant, dt=dt)
    nports = len(ports)
    lumped = []
    for n, (pidx, edge) in enumerate(ports):
        wf = excitation.waveform if pidx == excited_port else None
        lp = LumpedPort(pidx, edge, resistance=excitation.resistance, waveform=wf)
        solver.add_port(lp)
        lumped.append(lp)
    hu = None
    if huygens_box is not None and len(control.huygens_freqs):
        hu = solver.add_huygens(huygens_box, control.huygens_freqs)
    dt = solver.dt
    nmax = control.max_steps
    v = np.zeros((nports, nmax))
    i = np.zeros((nports, nmax))
    src = np.zeros(nmax)
    w = 2.0 * np.pi * np.asarray(control.huygens_freqs, dtype=float)
    converged = False
    n_done = nmax
    for n in range(nmax):
        solver.update_H()
        if hu is not None:
            solver._accumulate_huygens(np.exp(-1j * w * (n + 0.5) * dt), "H")
        t_half = (n + 0.5) * dt
        solver.update_E(t_half)
        if hu is not None:
            solver._accumulate_huygens(np.exp(-1j * w * (n + 1.0) * dt), "E")
        for p, lp in enumerate(lumped):
            v[p, n] = solver.port_voltage(lp)
            i[p, n] = solver.port_current(lp)
        src[n] = excitation.waveform(t_half)
        solver.step_index += 1
        if (n + 1) % control.check_interval == 0:
            solver.check_finite()
            tr = control.trailing
            if n + 1 >= 2 * tr:
                e = np.sum(v[:, :n + 1] ** 2, axis=0)
                win = np.add.reduceat(e, np.arange(0, n + 1, tr))[:-1]
                if win.max() > 0 and e[n + 1 - tr:n + 1].sum() < \
                        control.convergence_threshold * win.max():
                    converged = True
                    n_done = n + 1
                    break
    else:
        n_done = nmax
    if hu is not None:
        # scale running sums into DFT integrals
        for f in hu.faces.values():
            for k in f:
                f[k] *= dt
    return Recordings(dt=dt, v=v[:, :n_done], i=i[:, :n_done],
                      excited_port=excited_port, src_samples=src[:n_done],
                      converged=converged, steps=n_done, huygens=hu,
                      port_zref=np.full(nports, excitation.resistance))
