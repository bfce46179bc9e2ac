"""Parametric antenna geometry: single dual-polarized patch element and 2x2 array,
with or without the mushroom-cell (AMC) frame ring.

All geometry is in meters, double precision. Scenes are immutable value objects;
building the same parameters twice yields byte-identical canonical dumps.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .constants import C0

DIELECTRIC = "dielectric"
PEC = "perfect-conductor"

SCENARIOS = (
    "single_no_frame",
    "single_with_frame",
    "array_no_frame",
    "array_with_frame",
)


class GeometryError(ValueError):
    """Raised when requested dimensions cannot be realized (names the dimension)."""


@dataclass(frozen=True)
class Material:
    name: str
    kind: str = DIELECTRIC
    eps_r: float = 1.0
    tan_delta: float = 0.0

    def __post_init__(self):
        if self.kind not in (DIELECTRIC, PEC):
            raise ValueError(f"unknown material kind {self.kind!r}")
        if self.kind == DIELECTRIC:
            if self.eps_r < 1.0:
                raise ValueError(f"dielectric {self.name}: eps_r must be >= 1")
            if not 0.0 <= self.tan_delta < 1.0:
                raise ValueError(f"dielectric {self.name}: tan_delta out of [0, 1)")


AIR = Material("air")
METAL = Material("pec", kind=PEC)


@dataclass(frozen=True)
class Box:
    """Axis-aligned dielectric or conductor volume."""
    lo: tuple
    hi: tuple
    material: Material
    priority: int = 0
    tag: str = ""

    def __post_init__(self):
        for a, b in zip(self.lo, self.hi):
            if not b > a:
                raise ValueError("box extents must be strictly positive")


@dataclass(frozen=True)
class Cylinder:
    """z-axis circular cylinder (vias)."""
    center: tuple          # (x, y)
    radius: float
    z0: float
    z1: float
    material: Material
    priority: int = 0
    tag: str = ""

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("cylinder radius must be > 0")
        if not self.z1 > self.z0:
            raise ValueError("cylinder z-span must be strictly positive")


@dataclass(frozen=True)
class Plate:
    """Zero-thickness rectangular conductor on a z = const plane."""
    z: float
    x0: float
    x1: float
    y0: float
    y1: float
    material: Material = METAL
    priority: int = 0
    tag: str = ""

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("plate extents must be strictly positive")


@dataclass(frozen=True)
class PortDef:
    """Vertical coaxial-probe feed reduced to a wire + lumped 50 ohm source gap."""
    index: int             # 1-based
    x: float
    y: float
    z0: float
    z1: float
    polarization: str      # 'x' or 'y'
    z_ref: float = 50.0
    orientation: float = 1.0   # +1/-1: probe offset sign along the pol axis;
                               # mirrored probes radiate with flipped polarity

    def __post_init__(self):
        odd = self.index % 2 == 1
        if odd != (self.polarization == "x"):
            raise ValueError(
                f"port {self.index}: odd ports are x-polarized, even are y-polarized")


@dataclass
class ElementParams:
    """Element dimensions (meters); defaults reproduce the 28 GHz design."""
    W_s: float = 7.089e-3
    h: float = 2.5e-3
    l_p: float = 3.115e-3
    w_p: float = 0.354e-3
    s: float = 0.177e-3
    g: float = 0.027e-3
    w_pa: float = 2.478e-3
    l_f: float = 0.354e-3
    w_EBG: float = 0.8e-3
    l_EBG: float = 2.65e-3
    v_EBG: float = 0.2e-3
    frame_margin: float = 1.0e-3
    eps_r: float = 3.5
    tan_delta: float = 0.0041
    f0: float = 28e9

    LENGTH_FIELDS = ("W_s", "h", "l_p", "w_p", "s", "g", "w_pa", "l_f",
                     "w_EBG", "l_EBG", "v_EBG", "frame_margin")

    def problems(self) -> list:
        """Return a list of violated invariants (empty when valid)."""
        out = []
        for name in self.LENGTH_FIELDS:
            if getattr(self, name) <= 0:
                out.append(f"{name} must be > 0")
        chain = ("g", "s", "w_p", "w_pa", "l_p", "W_s")
        vals = [getattr(self, n) for n in chain]
        for (na, va), (nb, vb) in zip(zip(chain, vals), zip(chain[1:], vals[1:])):
            if not va < vb:
                out.append(f"expected {na} < {nb}, got {va:g} >= {vb:g}")
        if not self.v_EBG < self.w_EBG < self.l_EBG:
            out.append("expected v_EBG < w_EBG < l_EBG")
        target = 0.66 * C0 / self.f0
        if abs(self.W_s - target) > 0.01 * target:
            out.append(
                f"W_s = {self.W_s:g} deviates more than 1% from 0.66*lambda0 = {target:g}")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ValueError("invalid element parameters: " + "; ".join(problems))


@dataclass(frozen=True)
class Scene:
    """Immutable geometric truth for one simulation.

    ``bounds`` includes the quarter-wavelength air margin on the five open
    faces; z = 0 is the ground plane (closed face).
    """
    primitives: tuple
    ports: tuple
    bounds: tuple          # ((x0, y0, z0), (x1, y1, z1))
    f0: float
    footprint: tuple       # ((x0, y0), (x1, y1)) of the substrate
    name: str = ""

    @property
    def air_margin(self) -> float:
        return 0.25 * C0 / self.f0


# ---------------------------------------------------------------------------
# element metallization
# ---------------------------------------------------------------------------

def _patch_rects(p: ElementParams):
    """Radiator metallization of one element, centered at the origin.

    Geometric legend (the one place the inner topology is defined, so it can
    be corrected in isolation):

      * a solid central square of side ``w_pa`` carrying both feed probes;
      * a coupled ring of width ``w_p`` at gap ``g`` around the square, made
        of strips of length ``l_p`` centered on each side (the strips fuse at
        the ring corners, leaving small corner notches because
        ``l_p < w_pa + 2 g + 2 w_p``);
      * the ring is broken at the middle of each side by a slot of width
        ``s`` aligned with the feed axes.

    Returns a list of (x0, x1, y0, y1) rectangles.
    """
    half = p.w_pa / 2.0
    rects = [(-half, half, -half, half)]
    a = half + p.g                       # ring inner radius
    b = a + p.w_p                        # ring outer radius
    lo, hi = p.s / 2.0, p.l_p / 2.0
    for sign in (1.0, -1.0):
        # strips parallel to the y axis (ring sides at x = +-a..b)
        rects.append((sign * a, sign * b, lo, hi) if sign > 0
                     else (sign * b, sign * a, lo, hi))
        rects.append((min(sign * a, sign * b), max(sign * a, sign * b), -hi, -lo))
        # strips parallel to the x axis
        rects.append((lo, hi, min(sign * a, sign * b), max(sign * a, sign * b)))
        rects.append((-hi, -lo, min(sign * a, sign * b), max(sign * a, sign * b)))
    # normalize ordering of the first entries added with explicit sign handling
    return [(min(x0, x1), max(x0, x1), min(y0, y1), max(y0, y1))
            for (x0, x1, y0, y1) in rects]


def frame_tiling(p: ElementParams) -> dict:
    """Derived mushroom-frame tiling for one element.

    Each side of the frame annulus carries the maximum whole number of
    l_EBG-long cells separated by the strip-separation parameter ``s`` (the
    only small clearance the design documents that a coarse grid still
    resolves).  A row of n cells spans ``n*l_EBG + (n-1)*s``; the four rows
    are pushed radially outward far enough that rows on adjacent sides never
    claim the same corner region, which keeps the frame metal invariant under
    both axis mirrors and the x<->y swap.  No extra corner cells are added.
    Returns cell rectangles (local coordinates), via centers and the
    inter-cell gap.
    """
    if p.w_EBG > p.frame_margin:
        raise GeometryError(
            f"frame cell width w_EBG = {p.w_EBG:g} exceeds frame_margin = "
            f"{p.frame_margin:g}: frame does not fit in the margin")
    hi_inner = p.W_s / 2.0 - p.frame_margin
    clr = (p.frame_margin - p.w_EBG) / 2.0

    def row_span(n):
        return n * p.l_EBG + (n - 1) * p.s

    def inner_radius(n):
        # centered radially in the margin unless the row is long enough to
        # collide with the adjacent sides' rows, then pushed outward
        return max(hi_inner + clr, row_span(n) / 2.0)

    def fits(n):
        return inner_radius(n) + p.w_EBG <= p.W_s / 2.0

    if not fits(1):
        raise GeometryError(
            f"frame cell length l_EBG = {p.l_EBG:g} does not fit on a side of "
            f"the frame annulus (W_s = {p.W_s:g})")
    n = 1
    while fits(n + 1):
        n += 1
    usable = row_span(n)
    r0 = inner_radius(n)
    r1 = r0 + p.w_EBG
    centers = [-usable / 2.0 + p.l_EBG / 2.0 + i * (p.l_EBG + p.s)
               for i in range(n)]
    rects = []
    for c in centers:
        le = p.l_EBG / 2.0
        rects.append((r0, r1, c - le, c + le))        # +x side
        rects.append((-r1, -r0, c - le, c + le))      # -x side
        rects.append((c - le, c + le, r0, r1))        # +y side
        rects.append((c - le, c + le, -r1, -r0))      # -y side
    vias = [((x0 + x1) / 2.0, (y0 + y1) / 2.0) for (x0, x1, y0, y1) in rects]
    return {
        "cells_per_side": n,
        "gap": p.s,
        "radial_center": (r0 + r1) / 2.0,
        "rects": rects,
        "via_centers": vias,
    }


def _element_primitives(p: ElementParams, with_frame: bool, cx: float, cy: float):
    """Metal primitives of one element translated to center (cx, cy)."""
    prims = []
    for (x0, x1, y0, y1) in _patch_rects(p):
        prims.append(Plate(p.h, cx + x0, cx + x1, cy + y0, cy + y1,
                           priority=20, tag="patch"))
    if with_frame:
        tiling = frame_tiling(p)
        for (x0, x1, y0, y1) in tiling["rects"]:
            prims.append(Plate(p.h, cx + x0, cx + x1, cy + y0, cy + y1,
                               priority=20, tag="frame"))
        for (vx, vy) in tiling["via_centers"]:
            prims.append(Cylinder((cx + vx, cy + vy), p.v_EBG / 2.0, 0.0, p.h,
                                  METAL, priority=30, tag="frame-via"))
    return prims


def _assemble(p: ElementParams, prims, ports, half_w: float, name: str) -> Scene:
    substrate = Material("substrate", DIELECTRIC, p.eps_r, p.tan_delta)
    base = [
        Box((-half_w, -half_w, 0.0), (half_w, half_w, p.h), substrate,
            priority=10, tag="substrate"),
        Plate(0.0, -half_w, half_w, -half_w, half_w, priority=20, tag="ground"),
    ]
    margin = 0.25 * C0 / p.f0
    bounds = ((-half_w - margin, -half_w - margin, 0.0),
              (half_w + margin, half_w + margin, p.h + margin))
    return Scene(primitives=tuple(base + prims), ports=tuple(ports),
                 bounds=bounds, f0=p.f0,
                 footprint=((-half_w, -half_w), (half_w, half_w)), name=name)


def build_single_element(p: ElementParams, with_frame: bool) -> Scene:
    """Single dual-polarized element; two ports at +-l_f from the center."""
    p.validate()
    prims = _element_primitives(p, with_frame, 0.0, 0.0)
    ports = [
        PortDef(1, p.l_f, 0.0, 0.0, p.h, "x"),
        PortDef(2, 0.0, p.l_f, 0.0, p.h, "y"),
    ]
    name = "single_with_frame" if with_frame else "single_no_frame"
    return _assemble(p, prims, ports, p.W_s / 2.0, name)


def build_array_2x2(p: ElementParams, with_frame: bool) -> Scene:
    """2x2 array at pitch W_s over one merged substrate and ground.

    Element (row, col) owns ports (2k-1, 2k) with k = 2 row + col + 1; odd
    ports are x-polarized. Feed probes are mirrored per quadrant so the whole
    array maps onto itself under either axis mirror (with port relabeling),
    which is what restores the pattern symmetry the frame is meant to provide.
    """
    p.validate()
    prims = []
    ports = []
    pitch = p.W_s
    for row in range(2):
        for col in range(2):
            cx = (col - 0.5) * pitch
            cy = (row - 0.5) * pitch
            sx = 1.0 if col == 1 else -1.0
            sy = 1.0 if row == 1 else -1.0
            prims.extend(_element_primitives(p, with_frame, cx, cy))
            k = 2 * row + col + 1
            ports.append(PortDef(2 * k - 1, cx + sx * p.l_f, cy, 0.0, p.h,
                                 "x", orientation=sx))
            ports.append(PortDef(2 * k, cx, cy + sy * p.l_f, 0.0, p.h,
                                 "y", orientation=sy))
    ports.sort(key=lambda q: q.index)
    name = "array_with_frame" if with_frame else "array_no_frame"
    return _assemble(p, prims, ports, pitch, name)


def build_scenario(name: str, p: ElementParams) -> Scene:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    single = name.startswith("single")
    with_frame = name.endswith("with_frame")
    build = build_single_element if single else build_array_2x2
    return build(p, with_frame)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _rects_overlap(a, b, tol=1e-12):
    return (min(a[1], b[1]) - max(a[0], b[0]) > tol
            and min(a[3], b[3]) - max(a[2], b[2]) > tol)


def _extent(prim):
    if isinstance(prim, Box):
        return prim.lo, prim.hi
    if isinstance(prim, Plate):
        return (prim.x0, prim.y0, prim.z), (prim.x1, prim.y1, prim.z)
    cx, cy = prim.center
    return ((cx - prim.radius, cy - prim.radius, prim.z0),
            (cx + prim.radius, cy + prim.radius, prim.z1))


def validate_scene(scene: Scene) -> list:
    """Diagnostics list; empty iff every scene invariant holds."""
    out = []
    (fx0, fy0), (fx1, fy1) = scene.footprint
    for port in scene.ports:
        if not (fx0 <= port.x <= fx1 and fy0 <= port.y <= fy1):
            out.append(f"port {port.index}: feed position ({port.x:g}, {port.y:g}) "
                       "outside substrate footprint")
    margin = scene.air_margin
    (bx0, by0, bz0), (bx1, by1, bz1) = scene.bounds
    inner_lo = (bx0 + margin, by0 + margin, bz0)       # z- face is closed (ground)
    inner_hi = (bx1 - margin, by1 - margin, bz1 - margin)
    tol = 1e-12
    for i, prim in enumerate(scene.primitives):
        lo, hi = _extent(prim)
        for ax, (v0, v1, a0, a1) in enumerate(zip(lo, hi, inner_lo, inner_hi)):
            if v0 < a0 - tol or v1 > a1 + tol:
                out.append(f"primitive {i} ({prim.tag or type(prim).__name__}): "
                           f"violates quarter-wave air margin on axis {'xyz'[ax]}")
                break
    frames = [(i, prim) for i, prim in enumerate(scene.primitives)
              if isinstance(prim, Plate) and prim.tag == "frame"]
    others = [(i, prim) for i, prim in enumerate(scene.primitives)
              if isinstance(prim, Plate) and prim.tag == "patch"]
    for n, (i, a) in enumerate(frames):
        ra = (a.x0, a.x1, a.y0, a.y1)
        for j, b in frames[n + 1:] + others:
            if abs(a.z - b.z) < tol and _rects_overlap(ra, (b.x0, b.x1, b.y0, b.y1)):
                out.append(f"primitive {i} ({a.tag}): overlaps primitive {j} ({b.tag})")
    return out


# ---------------------------------------------------------------------------
# canonical dump and config I/O
# ---------------------------------------------------------------------------

def _prim_key(prim):
    lo, hi = _extent(prim)
    return (type(prim).__name__, prim.tag, lo, hi)


def canonical_dump(scene: Scene) -> str:
    """Deterministic text dump (sorted primitives) for golden-file tests."""
    lines = [f"scene {scene.name}",
             "bounds " + " ".join(f"{v:.9g}" for pt in scene.bounds for v in pt),
             f"f0 {scene.f0:.9g}"]
    for prim in sorted(scene.primitives, key=_prim_key):
        if isinstance(prim, Box):
            geo = " ".join(f"{v:.9g}" for v in (*prim.lo, *prim.hi))
            mat = f"{prim.material.kind} eps_r={prim.material.eps_r:.9g} " \
                  f"tan_delta={prim.material.tan_delta:.9g}"
            lines.append(f"box {prim.tag} {geo} {mat} priority={prim.priority}")
        elif isinstance(prim, Plate):
            geo = " ".join(f"{v:.9g}"
                           for v in (prim.z, prim.x0, prim.x1, prim.y0, prim.y1))
            lines.append(f"plate {prim.tag} {geo} priority={prim.priority}")
        else:
            geo = " ".join(f"{v:.9g}" for v in (*prim.center, prim.radius,
                                                prim.z0, prim.z1))
            lines.append(f"cylinder {prim.tag} {geo} priority={prim.priority}")
    for port in scene.ports:
        lines.append(f"port {port.index} {port.x:.9g} {port.y:.9g} "
                     f"{port.z0:.9g} {port.z1:.9g} {port.polarization} "
                     f"zref={port.z_ref:.9g}")
    return "\n".join(lines) + "\n"


_MM_KEYS = {name.lower() + "_mm": name for name in ElementParams.LENGTH_FIELDS}


def params_from_config(path) -> tuple:
    """Read a scene config file; returns (scenario name or None, ElementParams).

    INI-style sections [material], [element], [array], [ports] with length
    keys carrying a ``_mm`` suffix (e.g. ``w_s_mm = 7.089``); a ``scenario``
    key (any section, or a [scenario] section) picks the built structure.
    """
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    kwargs = {}
    scenario = None
    for section in cp.sections():
        for key, value in cp.items(section):
            if key == "scenario" or (section == "scenario" and key == "name"):
                scenario = value.strip()
            elif key in _MM_KEYS:
                kwargs[_MM_KEYS[key]] = float(value) * 1e-3
            elif key in ("eps_r", "tan_delta"):
                kwargs[key] = float(value)
            elif key == "f0_ghz":
                kwargs["f0"] = float(value) * 1e9
            else:
                raise ValueError(f"unknown config key [{section}] {key}")
    if scenario is not None and scenario not in SCENARIOS + ("amc_cell",):
        raise ValueError(f"unknown scenario {scenario!r}")
    return scenario, ElementParams(**kwargs)


def set_param(p: ElementParams, key: str, value: str) -> ElementParams:
    """Apply a CLI ``--set key=value`` override (mm-suffixed keys as in configs)."""
    if key in _MM_KEYS:
        return replace(p, **{_MM_KEYS[key]: float(value) * 1e-3})
    if key in ("eps_r", "tan_delta"):
        return replace(p, **{key: float(value)})
    if key == "f0_ghz":
        return replace(p, f0=float(value) * 1e9)
    valid = sorted(_MM_KEYS) + ["eps_r", "tan_delta", "f0_ghz"]
    raise ValueError(f"unknown parameter {key!r}; valid names: {', '.join(valid)}")
