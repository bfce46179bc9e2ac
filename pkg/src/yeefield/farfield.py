"""Near-to-far-field transform and pattern figures of merit.

The far field is obtained from equivalent surface currents on a closed
Huygens box surrounding the radiator:

    J_s = n x H,    M_s = -n x E

integrated into the radiation vectors (e^{jwt} time convention, suppressing
the spherical spreading factor e^{-jkr}/r):

    N = Int J_s exp(+j k r'.rhat) dS',   L = Int M_s exp(+j k r'.rhat) dS'
    E_theta = -(jk/4pi) (L_phi + eta0 N_theta)
    E_phi   = +(jk/4pi) (L_theta - eta0 N_phi)

so the stored E_theta/E_phi have units V (field times distance) and the
radiation intensity is U = (|E_theta|^2 + |E_phi|^2) / (2 eta0) W/sr.

Structures sitting on the bottom PEC boundary (the ground plane) record only
five faces; image currents mirrored through the ground plane are added
automatically and the lower hemisphere is forced to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import C0, ETA0


class OneSidedBeamError(ValueError):
    """The pattern never drops 3 dB below the peak on one side of it."""


class UndefinedXpdError(ValueError):
    """Co-polar field is identically zero on the requested cut."""


@dataclass
class FarField:
    """Complex far-field pattern on a (theta, phi) grid at one frequency."""
    freq: float
    theta: np.ndarray              # (nt,) degrees
    phi: np.ndarray                # (np,) degrees
    e_theta: np.ndarray            # (nt, np) complex, V
    e_phi: np.ndarray              # (nt, np) complex, V
    accepted_power: float = None   # W, set by the excitation bookkeeping
    radiated_power: float = None   # W, from pattern integration

    def intensity(self) -> np.ndarray:
        """Radiation intensity U(theta, phi) in W/sr."""
        return (np.abs(self.e_theta) ** 2 + np.abs(self.e_phi) ** 2) \
            / (2.0 * ETA0)


def default_grid():
    """1-degree full-sphere grid: theta 0..180, phi -180..179."""
    return np.arange(0.0, 181.0), np.arange(-180.0, 180.0)


# ---------------------------------------------------------------------------
# equivalent currents from a solver Huygens record
# ---------------------------------------------------------------------------

def _interp_h(h0, h1, d0, d1):
    """Linear interpolation of two half-step H slices onto the face plane."""
    return (d1 * h0 + d0 * h1) / (d0 + d1)


def assemble_currents(record, fk: int):
    """Flatten one frequency of a Huygens record into point-sampled currents.

    Returns (points (n,3), J (n,3), M (n,3), dS (n,)) at the face cell
    centers; E and H phasors are averaged/interpolated from their staggered
    positions to the centers first.
    """
    g = record.grid
    i0, i1, j0, j1, k0, k1 = record.box
    x, y, z = g.x, g.y, g.z
    dx, dy, dz = g.dx, g.dy, g.dz
    xm, ym, zm = (0.5 * (v[:-1] + v[1:]) for v in (x, y, z))
    pts, js, ms, ds = [], [], [], []

    def avg(a, axis):
        sl0 = [slice(None)] * a.ndim
        sl1 = [slice(None)] * a.ndim
        sl0[axis] = slice(0, a.shape[axis] - 1)
        sl1[axis] = slice(1, a.shape[axis])
        return 0.5 * (a[tuple(sl0)] + a[tuple(sl1)])

    def emit(px, py, pz, area, normal, et, eh):
        """Accumulate one face: et/eh are (E, H) 3-component center fields."""
        P = np.stack(np.broadcast_arrays(px, py, pz), axis=-1).reshape(-1, 3)
        n = np.asarray(normal, dtype=float)
        E = np.stack(np.broadcast_arrays(*et), axis=-1).reshape(-1, 3)
        H = np.stack(np.broadcast_arrays(*eh), axis=-1).reshape(-1, 3)
        pts.append(P)
        js.append(np.cross(n[None, :], H))
        ms.append(-np.cross(n[None, :], E))
        ds.append(np.broadcast_to(area, px.shape + np.broadcast_shapes(
            np.shape(py), np.shape(pz))[len(np.shape(px)):]).reshape(-1)
            if False else np.asarray(area).reshape(-1))

    zero = 0.0
    for name, f in record.faces.items():
        if name in ("z+", "z-"):
            k = k1 if name == "z+" else k0
            sign = 1.0 if name == "z+" else -1.0
            ex = avg(f["Ex"][fk], 1)           # (di, dj) at centers
            ey = avg(f["Ey"][fk], 0)
            hx = avg(_interp_h(f["Hx0"][fk], f["Hx1"][fk],
                               dz[k - 1], dz[k]), 0)
            hy = avg(_interp_h(f["Hy0"][fk], f["Hy1"][fk],
                               dz[k - 1], dz[k]), 1)
            px = xm[i0:i1][:, None] + 0.0 * ex.real
            py = ym[j0:j1][None, :] + 0.0 * ex.real
            pz = np.full_like(ex.real, z[k])
            area = (dx[i0:i1][:, None] * dy[j0:j1][None, :])
            emit(px, py, pz, area, (0, 0, sign),
                 (ex, ey, zero * ex), (hx, hy, zero * hx))
        elif name in ("x+", "x-"):
            i = i1 if name == "x+" else i0
            sign = 1.0 if name == "x+" else -1.0
            ey = avg(f["Ey"][fk], 1)           # (dj, dk)
            ez = avg(f["Ez"][fk], 0)
            hy = avg(_interp_h(f["Hy0"][fk], f["Hy1"][fk],
                               dx[i - 1], dx[i]), 0)
            hz = avg(_interp_h(f["Hz0"][fk], f["Hz1"][fk],
                               dx[i - 1], dx[i]), 1)
            py = ym[j0:j1][:, None] + 0.0 * ey.real
            pz = zm[k0:k1][None, :] + 0.0 * ey.real
            px = np.full_like(ey.real, x[i])
            area = (dy[j0:j1][:, None] * dz[k0:k1][None, :])
            emit(px, py, pz, area, (sign, 0, 0),
                 (zero * ey, ey, ez), (zero * hy, hy, hz))
        else:
            j = j1 if name == "y+" else j0
            sign = 1.0 if name == "y+" else -1.0
            ex = avg(f["Ex"][fk], 1)           # (di, dk)
            ez = avg(f["Ez"][fk], 0)
            hx = avg(_interp_h(f["Hx0"][fk], f["Hx1"][fk],
                               dy[j - 1], dy[j]), 0)
            hz = avg(_interp_h(f["Hz0"][fk], f["Hz1"][fk],
                               dy[j - 1], dy[j]), 1)
            px = xm[i0:i1][:, None] + 0.0 * ex.real
            pz = zm[k0:k1][None, :] + 0.0 * ex.real
            py = np.full_like(ex.real, y[j])
            area = (dx[i0:i1][:, None] * dz[k0:k1][None, :])
            emit(px, py, pz, area, (0, sign, 0),
                 (ex, zero * ex, ez), (hx, zero * hx, hz))
    points = np.concatenate(pts)
    J = np.concatenate(js)
    M = np.concatenate(ms)
    dS = np.concatenate([np.asarray(a, dtype=float).reshape(-1)
                         for a in ds])
    if "z-" not in record.faces:
        # ground plane at the bottom grid boundary: add image currents so the
        # PEC condition is satisfied; horizontal J flips, horizontal M keeps.
        z_gnd = g.z[0]
        pim = points.copy()
        pim[:, 2] = 2.0 * z_gnd - pim[:, 2]
        jim = J * np.array([-1.0, -1.0, 1.0])
        mim = M * np.array([1.0, 1.0, -1.0])
        points = np.concatenate([points, pim])
        J = np.concatenate([J, jim])
        M = np.concatenate([M, mim])
        dS = np.concatenate([dS, dS])
    return points, J, M, dS


def ntff_from_currents(points, J, M, dS, freq, theta=None, phi=None,
                       upper_half_only=False, block=1024) -> FarField:
    """Radiation integrals over explicit point currents (shape (n,3))."""
    if theta is None or phi is None:
        theta_d, phi_d = default_grid()
        theta = theta_d if theta is None else np.asarray(theta, float)
        phi = phi_d if phi is None else np.asarray(phi, float)
    else:
        theta = np.atleast_1d(np.asarray(theta, float))
        phi = np.atleast_1d(np.asarray(phi, float))
    k = 2.0 * math.pi * freq / C0
    th = np.deg2rad(theta)[:, None]
    ph = np.deg2rad(phi)[None, :]
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)
    rx = (st * cp).ravel()
    ry = (st * sp).ravel()
    rz = np.broadcast_to(ct, (len(theta), len(phi))).ravel()
    nang = rx.size
    Jw = J * dS[:, None]
    Mw = M * dS[:, None]
    N = np.empty((3, nang), dtype=complex)
    L = np.empty((3, nang), dtype=complex)
    for a0 in range(0, nang, block):
        a1 = min(a0 + block, nang)
        rhat = np.stack([rx[a0:a1], ry[a0:a1], rz[a0:a1]])
        phase = np.exp(1j * k * (points @ rhat))
        N[:, a0:a1] = Jw.T @ phase
        L[:, a0:a1] = Mw.T @ phase
    sh = (len(theta), len(phi))
    ctf = np.broadcast_to(ct, sh).ravel()
    stf = np.broadcast_to(st, sh).ravel()
    cpf = np.broadcast_to(cp, sh).ravel()
    spf = np.broadcast_to(sp, sh).ravel()
    n_th = N[0] * ctf * cpf + N[1] * ctf * spf - N[2] * stf
    n_ph = -N[0] * spf + N[1] * cpf
    l_th = L[0] * ctf * cpf + L[1] * ctf * spf - L[2] * stf
    l_ph = -L[0] * spf + L[1] * cpf
    c = 1j * k / (4.0 * math.pi)
    e_th = (-c * (l_ph + ETA0 * n_th)).reshape(sh)
    e_ph = (+c * (l_th - ETA0 * n_ph)).reshape(sh)
    if upper_half_only:
        mask = theta > 90.0 + 1e-9
        e_th[mask, :] = 0.0
        e_ph[mask, :] = 0.0
    ff = FarField(freq=freq, theta=theta, phi=phi, e_theta=e_th, e_phi=e_ph)
    ff.radiated_power = integrate_intensity(ff)
    return ff


def _freq_index(record, freq):
    freqs = np.asarray(record.freqs, dtype=float)
    k = int(np.argmin(np.abs(freqs - freq)))
    if abs(freqs[k] - freq) > max(1e-6 * freq, 1.0):
        raise ValueError(
            "frequency %.6g Hz not recorded; available: %s"
            % (freq, ", ".join("%.6g" % f for f in freqs)))
    return k


def ntff(record, freq, theta=None, phi=None, incident=None) -> FarField:
    """Far field of one recorded frequency; optional normalization by the
    complex incident wave amplitude (making the result per unit a-wave)."""
    fk = _freq_index(record, freq)
    points, J, M, dS = assemble_currents(record, fk)
    grounded = "z-" not in record.faces
    ff = ntff_from_currents(points, J, M, dS,
                            float(np.asarray(record.freqs)[fk]),
                            theta, phi, upper_half_only=grounded)
    if incident is not None:
        scale = 1.0 / incident
        ff.e_theta = ff.e_theta * scale
        ff.e_phi = ff.e_phi * scale
        ff.radiated_power = integrate_intensity(ff)
    return ff


def integrate_intensity(ff: FarField) -> float:
    """Total radiated power: full-sphere integral of U sin(theta)."""
    th = np.deg2rad(ff.theta)
    ph = np.deg2rad(ff.phi)
    U = ff.intensity() * np.sin(th)[:, None]
    inner = np.trapezoid(U, th, axis=0)
    if len(ph) > 1:
        dphi = ph[1] - ph[0]          # uniform periodic grid
        return float(inner.sum() * dphi)
    return float(inner[0] * 2.0 * math.pi)


def huygens_power(record, freq) -> float:
    """Real Poynting flux out through the Huygens surface (W)."""
    fk = _freq_index(record, freq)
    points, J, M, dS = assemble_currents(record, fk)
    # S.n dS = 0.5 Re(E x H*).n dS = -0.5 Re(M* . J) dS  since J = n x H,
    # M = -n x E  ->  (E x H*).n = (n x E).H* = -M.H* and J x n = -H_t.
    flux = -0.5 * np.real(np.sum(np.conj(M) * J, axis=1) * dS)
    if "z-" not in record.faces:
        flux = flux[:len(flux) // 2] * 2.0 / 2.0  # images carry no real flux
        return float(np.sum(flux))
    return float(np.sum(flux))


# ---------------------------------------------------------------------------
# figures of merit
# ---------------------------------------------------------------------------

def gain_pattern(ff: FarField, accepted_power: float = None) -> np.ndarray:
    """Gain grid G(theta, phi) in dBi: 4 pi U / P_accepted."""
    p = accepted_power if accepted_power is not None else ff.accepted_power
    if p is None or p <= 0:
        raise ValueError("accepted power must be positive")
    g = 4.0 * math.pi * ff.intensity() / p
    return 10.0 * np.log10(np.maximum(g, 1e-30))


def hpbw(angles_deg, pattern_db) -> float:
    """Half-power beamwidth of one pattern cut.

    Width between the two -3 dB crossings adjacent to the global peak, with
    linear interpolation of the dB curve between samples.
    """
    a = np.asarray(angles_deg, dtype=float)
    p = np.asarray(pattern_db, dtype=float)
    k = int(np.argmax(p))
    lvl = p[k] - 10.0 * math.log10(2.0)      # exact half power

    def cross(idx_range):
        prev = k
        for i in idx_range:
            if p[i] <= lvl:
                t = (lvl - p[prev]) / (p[i] - p[prev])
                return a[prev] + t * (a[i] - a[prev])
            prev = i
        raise OneSidedBeamError(
            "pattern never reaches -3 dB on one side of the peak")

    left = cross(range(k - 1, -1, -1))
    right = cross(range(k + 1, len(p)))
    return float(abs(right - left))


def aperture_efficiency(peak_gain_dbi: float, area: float,
                        freq: float) -> float:
    """eta = G lambda^2 / (4 pi A) relative to a uniform aperture."""
    if area <= 0:
        raise ValueError("aperture area must be positive")
    lam = C0 / freq
    return 10.0 ** (peak_gain_dbi / 10.0) * lam ** 2 / (4.0 * math.pi * area)


def xpd(ff: FarField, phi_cut_deg: float, reference: str = "x",
        cap_db: float = 60.0) -> float:
    """Cross-polarization discrimination on one principal cut (Ludwig-3).

    With an x-polarized reference, co = E_theta cos(phi) - E_phi sin(phi) and
    cross = E_theta sin(phi) + E_phi cos(phi); for a y-polarized reference
    the roles swap. Evaluated at the co-polar peak of the cut; capped.
    """
    j = int(np.argmin(np.abs(np.asarray(ff.phi) - phi_cut_deg)))
    if abs(ff.phi[j] - phi_cut_deg) > 1e-6:
        raise ValueError(f"phi = {phi_cut_deg} deg is not on the grid")
    pr = math.radians(ff.phi[j])
    et, ep = ff.e_theta[:, j], ff.e_phi[:, j]
    co_x = et * math.cos(pr) - ep * math.sin(pr)
    cx_x = et * math.sin(pr) + ep * math.cos(pr)
    if reference == "x":
        co, cross = co_x, cx_x
    elif reference == "y":
        co, cross = cx_x, co_x
    else:
        raise ValueError("reference must be 'x' or 'y'")
    k = int(np.argmax(np.abs(co)))
    if np.abs(co[k]) == 0.0:
        raise UndefinedXpdError("co-polar field is zero on this cut")
    if np.abs(cross[k]) == 0.0:
        return cap_db
    val = 20.0 * math.log10(np.abs(co[k]) / np.abs(cross[k]))
    return float(min(val, cap_db))


def accepted_power(smat, weights, freq) -> float:
    """Net power into the network for incident waves a = weights (sqrt(W)):
    P = (|a|^2 - |S a|^2) / 2."""
    w = np.asarray(weights, dtype=complex)
    if len(w) != smat.nports:
        raise ValueError("weight length must equal the port count")
    k = int(np.argmin(np.abs(smat.freqs - freq)))
    b = smat.s[k] @ w
    return float(0.5 * (np.vdot(w, w).real - np.vdot(b, b).real))


def superpose_excitations(ffs, weights, smat=None) -> FarField:
    """Coherent weighted sum of per-port unit-incident far fields.

    All inputs must share the frequency and angular grids. When an S-matrix
    is supplied the accepted power of the combination is recomputed from the
    weighted incident/reflected waves.
    """
    w = np.asarray(weights, dtype=complex)
    if len(w) != len(ffs):
        raise ValueError("weight length must equal the port count")
    ref = ffs[0]
    for f in ffs[1:]:
        if f.freq != ref.freq or not np.array_equal(f.theta, ref.theta) \
                or not np.array_equal(f.phi, ref.phi):
            raise ValueError("far fields must share frequency and grids")
    e_th = sum(wn * f.e_theta for wn, f in zip(w, ffs))
    e_ph = sum(wn * f.e_phi for wn, f in zip(w, ffs))
    out = FarField(freq=ref.freq, theta=ref.theta.copy(), phi=ref.phi.copy(),
                   e_theta=np.asarray(e_th, dtype=complex),
                   e_phi=np.asarray(e_ph, dtype=complex))
    out.radiated_power = integrate_intensity(out)
    if smat is not None:
        out.accepted_power = accepted_power(smat, w, ref.freq)
    return out


def principal_cut(ff: FarField, phi_cut_deg: float):
    """Signed-theta cut through broadside: theta < 0 maps to phi + 180.

    Returns (angles_deg, e_theta, e_phi) with angles running -max..+max.
    """
    phi = np.asarray(ff.phi, dtype=float)
    j_pos = int(np.argmin(np.abs(phi - phi_cut_deg)))
    opp = phi_cut_deg + 180.0
    if opp >= phi.max() + 1e-9:
        opp -= 360.0
    j_neg = int(np.argmin(np.abs(phi - opp)))
    th = np.asarray(ff.theta, dtype=float)
    pos = th
    neg = -th[1:]
    ang = np.concatenate([neg[::-1], pos])
    et = np.concatenate([ff.e_theta[1:, j_neg][::-1], ff.e_theta[:, j_pos]])
    ep = np.concatenate([ff.e_phi[1:, j_neg][::-1], ff.e_phi[:, j_pos]])
    order = np.argsort(ang, kind="stable")
    return ang[order], et[order], ep[order]
