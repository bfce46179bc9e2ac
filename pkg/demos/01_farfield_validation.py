"""Near-to-far-field transform validated against the Hertzian dipole.

The infinitesimal z-directed dipole is the one radiator whose near fields,
radiated power, and directivity are all known in closed form, which makes it
the canonical check for a near-to-far-field (NTFF) transform: we sample the
exact near fields on a box enclosing the dipole, convert them to equivalent
surface currents (J = n x H, M = -n x E), run the transform, and the far
field must reproduce the sin(theta) pattern with directivity
10*log10(1.5) = 1.76 dBi.

Runtime: well under a minute.
"""

import numpy as np

from yeefield import farfield as ffd
from yeefield.constants import C0, ETA0

FREQ = 28e9
IDL = 1e-3  # dipole moment I*dl [A m]


def dipole_near_fields(points, freq=FREQ, idl=IDL):
    """Exact fields of a z-directed Hertzian dipole at the origin.

    Full spherical-wave expressions including the 1/r^2 and 1/r^3 terms,
    so the sampling box may sit in the near field.
    """
    k = 2 * np.pi * freq / C0
    x, y, z = points.T
    r = np.sqrt(x * x + y * y + z * z)
    ct, st = z / r, np.sqrt(np.maximum(1 - (z / r) ** 2, 0.0))
    phi = np.arctan2(y, x)
    kr = k * r
    ex = np.exp(-1j * kr)
    e_r = ETA0 * idl * ct / (2 * np.pi * r * r) * (1 + 1 / (1j * kr)) * ex
    e_t = (1j * ETA0 * k * idl * st / (4 * np.pi * r)
           * (1 + 1 / (1j * kr) - 1 / kr ** 2) * ex)
    h_p = 1j * k * idl * st / (4 * np.pi * r) * (1 + 1 / (1j * kr)) * ex
    rx, ry, rz = st * np.cos(phi), st * np.sin(phi), ct
    tx, ty, tz = ct * np.cos(phi), ct * np.sin(phi), -st
    px, py = -np.sin(phi), np.cos(phi)
    E = np.stack([e_r * rx + e_t * tx, e_r * ry + e_t * ty,
                  e_r * rz + e_t * tz], axis=-1)
    H = np.stack([h_p * px, h_p * py, np.zeros_like(h_p)], axis=-1)
    return E, H


def box_currents(half, n, freq=FREQ):
    """Equivalent currents on the six faces of a cube of half-size `half`."""
    u = (np.arange(n) + 0.5) / n * 2 * half - half
    U, V = np.meshgrid(u, u, indexing="ij")
    dS = (2 * half / n) ** 2
    pts, J, M = [], [], []
    for axis in range(3):
        for sgn in (-1.0, 1.0):
            P = np.zeros((n * n, 3))
            P[:, axis] = sgn * half
            P[:, (axis + 1) % 3] = U.ravel()
            P[:, (axis + 2) % 3] = V.ravel()
            nrm = np.zeros(3)
            nrm[axis] = sgn
            E, H = dipole_near_fields(P, freq)
            J.append(np.cross(nrm, H))
            M.append(-np.cross(nrm, E))
            pts.append(P)
    return (np.concatenate(pts), np.concatenate(J), np.concatenate(M),
            np.full(6 * n * n, dS))


def main():
    lam = C0 / FREQ
    pts, J, M, dS = box_currents(0.6 * lam, 48)
    ff = ffd.ntff_from_currents(pts, J, M, dS, FREQ)
    k = 2 * np.pi / lam
    p_rad = ETA0 * k * k * IDL * IDL / (12 * np.pi)
    gain = ffd.gain_pattern(ff, p_rad)

    i, j = np.unravel_index(np.argmax(gain), gain.shape)
    print(f"peak directivity : {gain.max():7.3f} dBi  (exact: 1.761)")
    print(f"peak direction   : theta = {ff.theta[i]:.0f} deg "
          f"(exact: 90, any phi)")
    width = ffd.hpbw(ff.theta, gain[:, j])
    print(f"E-plane HPBW     : {width:7.2f} deg  (exact: 90.00)")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    th = np.deg2rad(ff.theta)
    fig, ax = plt.subplots(subplot_kw={"projection": "polar"})
    ax.plot(th, gain[:, j], label="NTFF")
    ax.plot(th, 10 * np.log10(1.5 * np.sin(th) ** 2 + 1e-12), "--",
            label="analytic")
    ax.set_ylim(-30, 5)
    ax.legend()
    fig.savefig("demo01_dipole_pattern.png", dpi=120)
    print("wrote demo01_dipole_pattern.png")


if __name__ == "__main__":
    main()
