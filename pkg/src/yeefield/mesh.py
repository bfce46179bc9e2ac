"""Scene -> nonuniform Yee grid with per-edge material coefficients.

Meshing strategy:

  * every primitive interface contributes a hard coordinate line per axis;
  * coarse mode spreads clusters of lines closer than ``min_cell`` apart so
    sub-cell gaps widen to one cell (the distortion is recorded per primitive
    as a snap error); fine mode refuses to mesh such features;
  * the gaps between hard lines are filled with geometric ramps and a plateau
    so adjacent cell sizes never differ by more than ``grading_ratio``;
  * open faces get ``pml_cells`` of uniform padding at the local edge size.

The fill is deterministic and mirror-symmetric: reflecting the hard lines
reflects the generated grid, which is what keeps symmetric scenes bitwise
symmetric on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C0, EPS0
from . import scene as sc

PEC_INDEX = 0


class UnmeshableFeatureError(ValueError):
    """A geometric feature is smaller than min_cell in fine mode."""


@dataclass
class MeshPolicy:
    max_cell: float | None = None      # default lambda0/15 in densest dielectric
    min_cell: float = 0.12e-3
    grading_ratio: float = 1.3
    min_cells_per_feature: int = 1
    courant: float = 0.99
    pml_cells: int = 10
    mode: str = "coarse"               # 'coarse' or 'fine'

    def __post_init__(self):
        if self.max_cell is not None and self.min_cell > self.max_cell:
            raise ValueError("min_cell must be <= max_cell")
        if self.grading_ratio < 1.0:
            raise ValueError("grading_ratio must be >= 1")
        if not 0.0 < self.courant <= 1.0:
            raise ValueError("courant must lie in (0, 1]")
        if self.mode not in ("coarse", "fine"):
            raise ValueError("mode must be 'coarse' or 'fine'")

    @classmethod
    def fine(cls, **kw):
        kw.setdefault("min_cell", 0.01e-3)
        kw.setdefault("min_cells_per_feature", 2)
        kw.setdefault("mode", "fine")
        return cls(**kw)

    def resolved_max_cell(self, f0: float, eps_r_max: float) -> float:
        if self.max_cell is not None:
            return self.max_cell
        return C0 / f0 / math.sqrt(eps_r_max) / 15.0


def conductivity_from_tan_delta(eps_r: float, tan_delta: float, f0: float) -> float:
    """Equivalent conductivity reproducing tan_delta at the design frequency."""
    if f0 <= 0:
        raise ValueError("f0 must be > 0")
    return 2.0 * math.pi * f0 * EPS0 * eps_r * tan_delta


# ---------------------------------------------------------------------------
# 1-D gap fill
# ---------------------------------------------------------------------------

def _ramp(start: float, hmax: float, ratio: float):
    sizes = [min(start, hmax)]
    while sizes[-1] * ratio < hmax * (1.0 - 1e-12):
        sizes.append(sizes[-1] * ratio)
    if sizes[-1] < hmax:
        sizes.append(hmax)
    return sizes


def grade_gap(length, cap_left, cap_right, hmax, ratio, nmin=1):
    """Cell sizes filling one gap: left ramp, uniform plateau, right ramp.

    The first (last) cell equals min(cap_left, ...) so that caps chosen as the
    neighbor's edge size keep the cross-gap ratio at 1. Returns sizes summing
    to ``length`` exactly (last element adjusted for roundoff).
    """
    tol = 1e-9 * length
    cl = min(cap_left, hmax, length)
    cr = min(cap_right, hmax, length)
    ramp_l = _ramp(cl, hmax, ratio)
    ramp_r = _ramp(cr, hmax, ratio)
    cums_l = np.concatenate([[0.0], np.cumsum(ramp_l)])
    cums_r = np.concatenate([[0.0], np.cumsum(ramp_r)])

    def violation(sizes):
        # internal conformity outranks the cap edges: fill_axis can always
        # relax a cap, but an internal ratio break is final
        v_int = max(max(sizes) / hmax, 1.0)
        for a, b in zip(sizes, sizes[1:]):
            v_int = max(v_int, _pair_ratio(a, b))
        v_cap = max(_pair_ratio(sizes[0], cl), _pair_ratio(sizes[-1], cr), 1.0)
        return v_int, v_cap

    def score(cand):
        kl, kr, sizes = cand
        v_int, v_cap = violation(sizes)
        return (round(math.log(max(v_int / ratio, 1.0)), 9),
                round(math.log(max(v_cap / ratio, 1.0)), 9),
                len(sizes), abs(kl - kr), min(kl, kr))

    best = None
    for kl in range(len(ramp_l) + 1):
        if cums_l[kl] > length + tol:
            break
        top_l = ramp_l[kl - 1] if kl else cl
        for kr in range(len(ramp_r) + 1):
            rem = length - cums_l[kl] - cums_r[kr]
            if rem < -tol:
                break
            top_r = ramp_r[kr - 1] if kr else cr
            if rem <= tol:
                if kl + kr < max(nmin, 1):
                    continue
                mm = [0]
            else:
                p_hi = min(hmax, top_l * ratio, top_r * ratio)
                m_lo = max(1, math.ceil(rem / p_hi - 1e-12),
                           max(nmin, 1) - kl - kr)
                mm = range(m_lo, m_lo + 6)
            for m in mm:
                plateau = [rem / m] * m if m else []
                sizes = ramp_l[:kl] + plateau + list(reversed(ramp_r[:kr]))
                if not sizes:
                    continue
                cand = (kl, kr, sizes)
                if best is None or score(cand) < score(best):
                    best = cand
    if best is None:           # degenerate: single cell
        best = (0, 0, [length])
    sizes = list(best[2])
    sizes[-1] += length - sum(sizes)
    return sizes


def _pair_ratio(a, b):
    return max(a / b, b / a)


def fill_axis(hard, hmax, ratio, nmin=1):
    """Insert graded lines between hard coordinate lines.

    Caps at each hard line are derived from the adjacent gap lengths and
    relaxed iteratively until every cross-gap ratio satisfies the invariant.
    """
    hard = np.asarray(hard, dtype=float)
    gaps = np.diff(hard)
    if np.any(gaps <= 0):
        raise ValueError("hard lines must be strictly increasing")
    ngap = len(gaps)
    caps = np.empty(ngap + 1)
    caps[0] = min(gaps[0], hmax)
    caps[-1] = min(gaps[-1], hmax)
    for j in range(1, ngap):
        caps[j] = min(gaps[j - 1], gaps[j], hmax)
    for _ in range(12):
        fills = [grade_gap(gaps[i], caps[i], caps[i + 1], hmax, ratio, nmin)
                 for i in range(ngap)]
        ok = True
        for j in range(1, ngap):
            a, b = fills[j - 1][-1], fills[j][0]
            if _pair_ratio(a, b) > ratio * (1 + 1e-9):
                caps[j] = min(a, b)
                ok = False
        for j in range(ngap):
            # a gap squeezed between a small cap and a large one may be unable
            # to honor both; shrinking the large cap lets it split conformingly
            if _pair_ratio(fills[j][0], caps[j]) > ratio * (1 + 1e-9):
                caps[j + 1] = min(caps[j + 1],
                                  max(gaps[j] - caps[j], caps[j] / ratio))
                ok = False
            if _pair_ratio(fills[j][-1], caps[j + 1]) > ratio * (1 + 1e-9):
                caps[j] = min(caps[j],
                              max(gaps[j] - caps[j + 1], caps[j + 1] / ratio))
                ok = False
        if ok:
            break
    lines = [hard[0]]
    for i, f in enumerate(fills):
        acc = hard[i]
        for s in f[:-1]:
            acc += s
            lines.append(acc)
        lines.append(hard[i + 1])
    return np.asarray(lines)


# ---------------------------------------------------------------------------
# hard-line collection and coarse-mode spreading
# ---------------------------------------------------------------------------

def _axis_points(scene: sc.Scene, axis: int):
    """(coordinate, owner index) pairs of material interfaces along one axis."""
    pts = []
    for i, prim in enumerate(scene.primitives):
        if isinstance(prim, sc.Box):
            pts += [(prim.lo[axis], i), (prim.hi[axis], i)]
        elif isinstance(prim, sc.Plate):
            ext = ((prim.x0, prim.x1), (prim.y0, prim.y1), (prim.z, prim.z))
            a, b = ext[axis]
            pts += [(a, i), (b, i)] if a != b else [(a, i)]
        else:
            cx, cy = prim.center
            if axis == 0:
                pts += [(cx - prim.radius, i), (cx, i), (cx + prim.radius, i)]
            elif axis == 1:
                pts += [(cy - prim.radius, i), (cy, i), (cy + prim.radius, i)]
            else:
                pts += [(prim.z0, i), (prim.z1, i)]
    for port in scene.ports:
        coord = (port.x, port.y, None)[axis] if axis < 2 else None
        if coord is not None:
            pts.append((coord, -port.index))
    lo, hi = scene.bounds
    pts += [(lo[axis], None), (hi[axis], None)]
    return pts


def _spread_clusters(coords, min_cell):
    """Spread runs of lines closer than min_cell to exactly min_cell pitch.

    Pool-adjacent-violators: lines closer than min_cell are pooled into a
    cluster re-emitted at min_cell pitch around the cluster mean; overlapping
    clusters merge. Deterministic and reflection-symmetric.
    """
    tol = min_cell * (1.0 - 1e-9)
    pools = []                     # (coord_sum, count)
    for c in coords:
        pools.append((c, 1))
        while len(pools) > 1:
            s1, n1 = pools[-2]
            s2, n2 = pools[-1]
            end1 = s1 / n1 + (n1 - 1) * min_cell / 2.0
            start2 = s2 / n2 - (n2 - 1) * min_cell / 2.0
            if start2 - end1 < tol:
                pools[-2:] = [(s1 + s2, n1 + n2)]
            else:
                break
    out = []
    for s, n in pools:
        center = s / n
        out.extend(center + (k - (n - 1) / 2.0) * min_cell for k in range(n))
    return out


@dataclass
class YeeGrid:
    """Nonuniform staggered grid with per-edge material indices.

    ``table_eps``/``table_sigma`` hold one row per distinct edge material;
    row 0 is reserved for PEC. ``e_idx`` maps component name -> int32 index
    array with Yee edge shapes Ex (Nx, Ny+1, Nz+1), Ey (Nx+1, Ny, Nz+1),
    Ez (Nx+1, Ny+1, Nz).
    """
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    e_idx: dict
    table_eps: np.ndarray
    table_sigma: np.ndarray
    boundaries: tuple = ("pml",) * 4 + ("pec", "pml")   # x-,x+,y-,y+,z-,z+
    npml: int = 10
    port_edges: tuple = ()         # (i, j, k_gap, k_top) per port
    snap_report: dict = field(default_factory=dict)

    @property
    def shape(self):
        return (len(self.x) - 1, len(self.y) - 1, len(self.z) - 1)

    @property
    def dx(self):
        return np.diff(self.x)

    @property
    def dy(self):
        return np.diff(self.y)

    @property
    def dz(self):
        return np.diff(self.z)

    def dual(self, axis):
        d = (self.dx, self.dy, self.dz)[axis]
        out = np.empty(len(d) + 1)
        out[1:-1] = 0.5 * (d[:-1] + d[1:])
        out[0] = 0.5 * d[0]
        out[-1] = 0.5 * d[-1]
        return out

    def pec_edge_count(self):
        return {c: int((idx == PEC_INDEX).sum()) for c, idx in self.e_idx.items()}

    def dump(self) -> str:
        lines = []
        for name, arr in zip("xyz", (self.x, self.y, self.z)):
            lines.append(f"axis {name} " + " ".join(f"{v:.9g}" for v in arr))
        for comp, cnt in sorted(self.pec_edge_count().items()):
            lines.append(f"pec_edges {comp} {cnt}")
        lines.append("materials " + " ".join(
            f"({e:.6g},{s:.6g})" for e, s in zip(self.table_eps, self.table_sigma)))
        return "\n".join(lines) + "\n"


def cfl_timestep(grid: YeeGrid, courant: float | None = None) -> float:
    """Stable timestep dt = courant / (c * sqrt(sum 1/dmin^2))."""
    if courant is None:
        courant = 0.99
    s = sum(1.0 / (d.min() ** 2) for d in (grid.dx, grid.dy, grid.dz))
    return courant / (C0 * math.sqrt(s))


# ---------------------------------------------------------------------------
# mesh generation
# ---------------------------------------------------------------------------

def _nearest(lines, v):
    i = np.searchsorted(lines, v)
    if i == 0:
        return 0
    if i == len(lines):
        return len(lines) - 1
    return i if lines[i] - v < v - lines[i - 1] else i - 1


def _snap(lines, v):
    return lines[_nearest(lines, v)]


def generate_mesh(scene: sc.Scene, policy: MeshPolicy) -> YeeGrid:
    diags = sc.validate_scene(scene)
    if diags:
        raise ValueError("scene does not validate: " + "; ".join(diags))
    eps_max = max((p.material.eps_r for p in scene.primitives
                   if isinstance(p, sc.Box) and p.material.kind == sc.DIELECTRIC),
                  default=1.0)
    hmax = policy.resolved_max_cell(scene.f0, eps_max)
    axes = []
    snap_report = {}
    for axis in range(3):
        pts = _axis_points(scene, axis)
        raw = sorted({round(c, 12) for c, _ in pts})
        merged = [raw[0]]
        for c in raw[1:]:
            if c - merged[-1] > 1e-9:
                merged.append(c)
        if policy.mode == "fine":
            for a, b in zip(merged, merged[1:]):
                if b - a < policy.min_cell * (1 - 1e-9):
                    owners = sorted({o for c, o in pts if o is not None
                                     and min(abs(c - a), abs(c - b)) < 1e-9})
                    raise UnmeshableFeatureError(
                        f"feature of size {b - a:.3e} m on axis {'xyz'[axis]} is "
                        f"smaller than min_cell = {policy.min_cell:.3e} m "
                        f"(primitives {owners})")
            hard = merged
        else:
            hard = _spread_clusters(merged, policy.min_cell)
        # keep the domain ends fixed: spreading may push them slightly
        hard[0] = min(hard[0], merged[0])
        hard[-1] = max(hard[-1], merged[-1])
        lines = fill_axis(hard, hmax, policy.grading_ratio,
                          policy.min_cells_per_feature)
        for c, owner in pts:
            if owner is None or owner < 0:
                continue
            err = abs(_snap(lines, c) - c)
            snap_report[owner] = max(snap_report.get(owner, 0.0), err)
        axes.append(np.asarray(lines))
    x, y, z = axes
    # absorbing-layer padding (uniform cells at the local edge size)
    n = policy.pml_cells
    x = np.concatenate([x[0] - np.arange(n, 0, -1) * (x[1] - x[0]), x,
                        x[-1] + np.arange(1, n + 1) * (x[-1] - x[-2])])
    y = np.concatenate([y[0] - np.arange(n, 0, -1) * (y[1] - y[0]), y,
                        y[-1] + np.arange(1, n + 1) * (y[-1] - y[-2])])
    z = np.concatenate([z, z[-1] + np.arange(1, n + 1) * (z[-1] - z[-2])])

    grid = _assign_materials(scene, x, y, z, policy)
    grid.snap_report = snap_report
    return grid


def _assign_materials(scene, x, y, z, policy):
    nx, ny, nz = len(x) - 1, len(y) - 1, len(z) - 1
    cx = 0.5 * (x[:-1] + x[1:])
    cy = 0.5 * (y[:-1] + y[1:])
    cz = 0.5 * (z[:-1] + z[1:])
    eps = np.ones((nx, ny, nz))
    sig = np.zeros((nx, ny, nz))
    boxes = sorted((p for p in scene.primitives if isinstance(p, sc.Box)),
                   key=lambda p: p.priority)
    for box in boxes:
        if box.material.kind != sc.DIELECTRIC:
            continue
        ix = (cx >= _snap(x, box.lo[0])) & (cx <= _snap(x, box.hi[0]))
        iy = (cy >= _snap(y, box.lo[1])) & (cy <= _snap(y, box.hi[1]))
        iz = (cz >= _snap(z, box.lo[2])) & (cz <= _snap(z, box.hi[2]))
        mask = np.ix_(np.where(ix)[0], np.where(iy)[0], np.where(iz)[0])
        eps[mask] = box.material.eps_r
        sig[mask] = conductivity_from_tan_delta(
            box.material.eps_r, box.material.tan_delta, scene.f0)

    # edge permittivity: arithmetic mean of the adjacent cells
    def edge_props(comp):
        if comp == "Ex":
            e = _avg4(eps, 1, 2)
            s = _avg4(sig, 1, 2)
        elif comp == "Ey":
            e = _avg4(eps, 0, 2)
            s = _avg4(sig, 0, 2)
        else:
            e = _avg4(eps, 0, 1)
            s = _avg4(sig, 0, 1)
        return e, s

    pec = {c: np.zeros(shape, dtype=bool) for c, shape in (
        ("Ex", (nx, ny + 1, nz + 1)),
        ("Ey", (nx + 1, ny, nz + 1)),
        ("Ez", (nx + 1, ny + 1, nz)))}
    xm = 0.5 * (x[:-1] + x[1:])
    ym = 0.5 * (y[:-1] + y[1:])
    zm = 0.5 * (z[:-1] + z[1:])
    tol = 1e-9
    for prim in scene.primitives:
        if isinstance(prim, sc.Plate):
            k = _nearest(z, prim.z)
            x0, x1 = _snap(x, prim.x0), _snap(x, prim.x1)
            y0, y1 = _snap(y, prim.y0), _snap(y, prim.y1)
            mx = (xm >= x0 - tol) & (xm <= x1 + tol)
            ly = (y >= y0 - tol) & (y <= y1 + tol)
            pec["Ex"][np.ix_(np.where(mx)[0], np.where(ly)[0], [k])] = True
            lx = (x >= x0 - tol) & (x <= x1 + tol)
            my = (ym >= y0 - tol) & (ym <= y1 + tol)
            pec["Ey"][np.ix_(np.where(lx)[0], np.where(my)[0], [k])] = True
        elif isinstance(prim, sc.Cylinder) and prim.material.kind == sc.PEC:
            cx0, cy0 = prim.center
            r = prim.radius
            nodes = (x[:, None] - _snap(x, cx0)) ** 2 + (y[None, :] - _snap(y, cy0)) ** 2
            sel = nodes <= r * r + tol
            if not sel.any():
                sel[_nearest(x, cx0), _nearest(y, cy0)] = True
            z0 = _snap(z, prim.z0)
            z1 = _snap(z, prim.z1)
            kz = np.where((z[:-1] >= z0 - tol) & (z[1:] <= z1 + tol))[0]
            ii, jj = np.where(sel)
            for i, j in zip(ii, jj):
                pec["Ez"][i, j, kz] = True

    # port feed wires: PEC above the source gap (gap edge stays dielectric)
    port_edges = []
    for port in scene.ports:
        i = _nearest(x, port.x)
        j = _nearest(y, port.y)
        k0 = _nearest(z, port.z0)
        k1 = _nearest(z, port.z1)
        if k1 <= k0:
            raise ValueError(f"port {port.index}: degenerate feed span")
        if pec["Ez"][i, j, k0]:
            raise ValueError(f"port {port.index}: source gap edge is PEC-shorted")
        pec["Ez"][i, j, k0 + 1:k1] = True
        port_edges.append((i, j, k0, k1))

    # quantize (eps, sigma) pairs into the coefficient table
    e_idx = {}
    table = {(-1.0, -1.0): PEC_INDEX}       # sentinel row for PEC
    rows_eps, rows_sig = [1.0], [0.0]
    for comp in ("Ex", "Ey", "Ez"):
        e, s = edge_props(comp)
        pair = np.stack([np.round(e, 9), np.round(s, 9)], axis=-1)
        flat = pair.reshape(-1, 2)
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        idx_map = np.empty(len(uniq), dtype=np.int32)
        for r, (ev, sv) in enumerate(uniq):
            key = (float(ev), float(sv))
            if key not in table:
                table[key] = len(rows_eps)
                rows_eps.append(float(ev))
                rows_sig.append(float(sv))
            idx_map[r] = table[key]
        idx = idx_map[inv].reshape(e.shape).astype(np.int32)
        idx[pec[comp]] = PEC_INDEX
        e_idx[comp] = idx

    return YeeGrid(x=x, y=y, z=z, e_idx=e_idx,
                   table_eps=np.asarray(rows_eps),
                   table_sigma=np.asarray(rows_sig),
                   npml=policy.pml_cells,
                   port_edges=tuple(port_edges))


def _avg4(cell, ax_a, ax_b):
    """Average a cell array over the two axes transverse to an edge component."""
    pad = [(0, 0)] * 3
    pad[ax_a] = (1, 1)
    pad[ax_b] = (1, 1)
    c = np.pad(cell, pad, mode="edge")
    sl = [slice(None)] * 3

    def pair_mean(a, axis):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, a.shape[axis] - 1)
        hi[axis] = slice(1, a.shape[axis])
        return 0.5 * (a[tuple(lo)] + a[tuple(hi)])

    return pair_mean(pair_mean(c, ax_a), ax_b)


def grid_from_axes(x, y, z, eps_r=1.0, sigma=0.0,
                   boundaries=("pml",) * 6, npml=10) -> YeeGrid:
    """Uniform-material grid helper for canonical test problems."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    shapes = {
        "Ex": (len(x) - 1, len(y), len(z)),
        "Ey": (len(x), len(y) - 1, len(z)),
        "Ez": (len(x), len(y), len(z) - 1),
    }
    e_idx = {c: np.ones(sh, dtype=np.int32) for c, sh in shapes.items()}
    return YeeGrid(x=x, y=y, z=z, e_idx=e_idx,
                   table_eps=np.asarray([1.0, float(eps_r)]),
                   table_sigma=np.asarray([0.0, float(sigma)]),
                   boundaries=tuple(boundaries), npml=npml)
