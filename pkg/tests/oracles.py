"""Independent closed-form oracles used by the tests.

Everything here is computed from textbook formulas, not from the package
under test, so agreement is meaningful.
"""

import numpy as np

from yeefield.constants import C0, ETA0

# exact conductivity for (eps_r 3.5, tan_delta 0.0041, 28 GHz), computed by
# hand: 2 pi 28e9 * 8.8541878128e-12 * 3.5 * 0.0041
SIGMA_SUBSTRATE = 0.02235077


def dipole_near_fields(points, freq, il=1.0):
    """Exact fields of a z-directed Hertzian dipole at the origin.

    Balanis-style spherical-wave expansion, e^{jwt} convention; ``il`` is the
    current-moment I*l in ampere-meters. Returns (E, H) with shape (n, 3).
    """
    k = 2.0 * np.pi * freq / C0
    x, y, z = np.asarray(points, dtype=float).T
    r = np.sqrt(x * x + y * y + z * z)
    th = np.arccos(np.clip(z / r, -1.0, 1.0))
    ph = np.arctan2(y, x)
    kr = k * r
    e = np.exp(-1j * kr)
    er = ETA0 * il * np.cos(th) / (2.0 * np.pi * r * r) * (1 + 1 / (1j * kr)) * e
    et = 1j * ETA0 * k * il * np.sin(th) / (4.0 * np.pi * r) \
        * (1 + 1 / (1j * kr) - 1 / kr ** 2) * e
    hp = 1j * k * il * np.sin(th) / (4.0 * np.pi * r) * (1 + 1 / (1j * kr)) * e
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)
    rhat = np.stack([st * cp, st * sp, ct], axis=-1)
    that = np.stack([ct * cp, ct * sp, -st], axis=-1)
    phat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    E = er[:, None] * rhat + et[:, None] * that
    H = hp[:, None] * phat
    return E, H


def dipole_radiated_power(freq, il=1.0):
    """P = eta0 (k I l)^2 / (12 pi) for the Hertzian dipole."""
    k = 2.0 * np.pi * freq / C0
    return ETA0 * (k * il) ** 2 / (12.0 * np.pi)


def box_face_currents(half, n, freq, field_fn):
    """Equivalent currents on a cube [-half, half]^3 sampled at n x n cell
    centers per face from an analytic field function."""
    h = 2.0 * half / n
    c = (np.arange(n) + 0.5) * h - half
    pts, js, ms, ds = [], [], [], []
    for axis in range(3):
        for side in (-1.0, 1.0):
            u, v = np.meshgrid(c, c, indexing="ij")
            P = np.zeros((n * n, 3))
            others = [w for w in range(3) if w != axis]
            P[:, others[0]] = u.ravel()
            P[:, others[1]] = v.ravel()
            P[:, axis] = side * half
            nrm = np.zeros(3)
            nrm[axis] = side
            E, H = field_fn(P)
            pts.append(P)
            js.append(np.cross(nrm, H))
            ms.append(-np.cross(nrm, E))
            ds.append(np.full(n * n, h * h))
    return (np.concatenate(pts), np.concatenate(js),
            np.concatenate(ms), np.concatenate(ds))


def cavity_patch_resonance(length, width, h, eps_r):
    """Half-wave cavity estimate of the dominant patch mode.

    Hammerstad effective permittivity plus the fringing-length extension:

        eps_eff = (eps_r+1)/2 + (eps_r-1)/2 (1 + 12 h/W)^(-1/2)
        dL/h    = 0.412 (eps_eff+0.3)(W/h+0.264) / ((eps_eff-0.258)(W/h+0.8))
        f_res   = c / (2 (L + 2 dL) sqrt(eps_eff))
    """
    weff = width / h
    eps_eff = (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 \
        / np.sqrt(1.0 + 12.0 / weff)
    dl = 0.412 * h * (eps_eff + 0.3) * (weff + 0.264) \
        / ((eps_eff - 0.258) * (weff + 0.8))
    return C0 / (2.0 * (length + 2.0 * dl) * np.sqrt(eps_eff))


def hpbw_cos_power(q):
    """Closed-form half-power width of U = cos^(2q)(theta): 2 acos(2^(-1/2q))."""
    return 2.0 * np.degrees(np.arccos(2.0 ** (-1.0 / (2.0 * q))))
