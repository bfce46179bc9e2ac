"""Port-network post-processing: scattering parameters from time-domain port
recordings, matching/isolation metrics, and Touchstone v1 file I/O.

Wave variables use the pseudo-wave convention with a real 50-ohm reference:

    a_n = (V_n + Z0 I_n) / (2 sqrt(Z0)),   b_n = (V_n - Z0 I_n) / (2 sqrt(Z0))

so |a|^2 and |b|^2 are incident and reflected powers in watts. S_mn is the
ratio b_m / a_n with port n excited and all other ports terminated in Z0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class IncompleteMatrixError(ValueError):
    """Raised when the per-port excitation sets do not cover every port."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(
            "missing excitation recordings for port(s) "
            + ", ".join(str(p) for p in self.missing))


class TouchstoneParseError(ValueError):
    def __init__(self, path, lineno, reason):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {reason}")


@dataclass
class SMatrix:
    """Frequency-sampled N-port scattering matrix, 50-ohm reference."""
    freqs: np.ndarray              # (nf,) Hz, strictly increasing
    s: np.ndarray                  # (nf, N, N) complex
    z0: float = 50.0
    converged: tuple = ()          # per-excitation convergence flags
    warnings: tuple = ()

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.s = np.asarray(self.s, dtype=complex)
        if self.s.ndim != 3 or self.s.shape[1] != self.s.shape[2]:
            raise ValueError("s must have shape (nf, N, N)")
        if len(self.freqs) != self.s.shape[0]:
            raise ValueError("frequency list length must match s")
        if len(self.freqs) > 1 and not np.all(np.diff(self.freqs) > 0):
            raise ValueError("frequencies must be strictly increasing")

    @property
    def nports(self) -> int:
        return self.s.shape[1]

    def db(self, m: int, n: int) -> np.ndarray:
        """|S_mn| in dB (ports are 1-based, matching the usual notation)."""
        mag = np.abs(self.s[:, m - 1, n - 1])
        return 20.0 * np.log10(np.maximum(mag, 1e-300))


@dataclass
class BandMetric:
    """Contiguous frequency interval where a reflection coefficient stays at
    or below a dB threshold."""
    f_lo: float
    f_hi: float
    threshold_db: float

    def __post_init__(self):
        if not self.f_lo < self.f_hi:
            raise ValueError("band requires f_lo < f_hi")

    @property
    def bandwidth(self) -> float:
        return self.f_hi - self.f_lo

    @property
    def center(self) -> float:
        return 0.5 * (self.f_lo + self.f_hi)


def check_passivity(smat: SMatrix, tol: float = 1e-6) -> tuple:
    """Largest-singular-value passivity screen.

    A passive N-port cannot amplify: every singular value of S must be <= 1.
    Violations (beyond ``tol``) are returned as human-readable warnings and
    attached to the matrix; they usually indicate an unconverged run or a
    too-coarse mesh rather than real gain.
    """
    msgs = []
    sv = np.linalg.svd(smat.s, compute_uv=False)
    worst = sv.max(axis=1)
    bad = np.where(worst > 1.0 + tol)[0]
    for k in bad:
        msgs.append("passivity violated at %.6g GHz: max singular value %.6f"
                    % (smat.freqs[k] / 1e9, worst[k]))
    if msgs:
        smat.warnings = tuple(list(smat.warnings) + msgs)
        warnings.warn(msgs[0], stacklevel=2)
    return tuple(msgs)


def extract_sparams(recordings, freqs, nports=None) -> SMatrix:
    """Assemble an SMatrix from one time-domain recording per excited port.

    ``recordings`` maps (or lists) per-excitation solver outputs; each entry
    must expose ``excited_port``, ``port_spectra(freqs)`` returning aligned
    (V, I) spectra of shape (N, nf), ``port_zref`` and ``converged``. Each run
    contributes one column of incident waves a = V + Z0 I and reflected waves
    b = V - Z0 I, and the definition b = S a is solved for the whole matrix:

        S = B A^{-1}

    The matched terminations make A strongly diagonally dominant, but its
    off-diagonal entries are not exactly zero: the port current is sampled one
    cell away from the load resistor, so a passive port registers a small
    residual incident wave. Dividing column-wise by a_n alone would fold that
    residual into S and break reciprocity at the percent level; the full solve
    removes it. The common factor 1/(2 sqrt(Z0)) cancels, so the result is
    independent of the excitation amplitude.
    """
    freqs = np.asarray(freqs, dtype=float)
    if hasattr(recordings, "values"):
        recordings = list(recordings.values())
    by_port = {rec.excited_port: rec for rec in recordings}
    if nports is None:
        nports = max(len(rec.v) for rec in recordings)
    missing = [n for n in range(1, nports + 1) if n not in by_port]
    if missing:
        raise IncompleteMatrixError(missing)
    z0 = float(np.asarray(recordings[0].port_zref).flat[0])
    A = np.empty((len(freqs), nports, nports), dtype=complex)
    B = np.empty_like(A)
    conv = []
    for n in range(1, nports + 1):
        rec = by_port[n]
        V, I = rec.port_spectra(freqs)
        A[:, :, n - 1] = (V + z0 * I).T
        B[:, :, n - 1] = (V - z0 * I).T
        conv.append(bool(rec.converged))
    s = B @ np.linalg.inv(A)
    smat = SMatrix(freqs=freqs, s=s, z0=z0, converged=tuple(conv))
    check_passivity(smat)
    return smat


def bandwidth_at_threshold(freqs, s_nn, threshold_db: float = -10.0):
    """Widest contiguous band where |S_nn| stays at or below threshold_db.

    Band edges are found by linear interpolation of the dB curve between
    samples; returns None when no sample qualifies.
    """
    freqs = np.asarray(freqs, dtype=float)
    s_nn = np.asarray(s_nn)
    if len(freqs) < 2:
        raise ValueError("need at least 2 frequency samples")
    if np.iscomplexobj(s_nn):
        db = 20.0 * np.log10(np.maximum(np.abs(s_nn), 1e-300))
    else:
        db = s_nn.astype(float)
    below = db <= threshold_db
    if not below.any():
        return None
    best = None
    k = 0
    n = len(freqs)
    while k < n:
        if not below[k]:
            k += 1
            continue
        j = k
        while j + 1 < n and below[j + 1]:
            j += 1
        f_lo = freqs[k]
        if k > 0 and db[k - 1] != db[k]:
            t = (threshold_db - db[k - 1]) / (db[k] - db[k - 1])
            f_lo = freqs[k - 1] + t * (freqs[k] - freqs[k - 1])
        f_hi = freqs[j]
        if j + 1 < n and db[j + 1] != db[j]:
            t = (threshold_db - db[j]) / (db[j + 1] - db[j])
            f_hi = freqs[j] + t * (freqs[j + 1] - freqs[j])
        if f_hi > f_lo and (best is None or f_hi - f_lo > best.bandwidth):
            best = BandMetric(f_lo=f_lo, f_hi=f_hi, threshold_db=threshold_db)
        k = j + 1
    return best


def worst_isolation(smat: SMatrix, port: int, band) -> float:
    """Worst (largest) in-band coupling |S_m,port| in dB over all m != port.

    ``band`` is (f_lo, f_hi) in Hz or a BandMetric. 'Worst' means the value
    closest to 0 dB; more negative results mean better isolation.
    """
    if hasattr(band, "f_lo"):
        f_lo, f_hi = band.f_lo, band.f_hi
    else:
        f_lo, f_hi = band
    sel = (smat.freqs >= f_lo) & (smat.freqs <= f_hi)
    if not sel.any():
        raise ValueError("band contains no frequency samples")
    col = np.abs(smat.s[sel, :, port - 1])
    col = np.delete(col, port - 1, axis=1)
    if col.size == 0:
        raise ValueError("isolation undefined for a 1-port")
    return float(20.0 * np.log10(max(col.max(), 1e-300)))


# ---------------------------------------------------------------------------
# Touchstone v1
# ---------------------------------------------------------------------------

_UNIT_SCALE = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def write_touchstone(smat: SMatrix, path) -> None:
    """Write Touchstone v1; option line `# GHz S RI R 50`.

    N <= 2 uses the single-line row layout (1-port: S11; 2-port order
    S11 S21 S12 S22). N > 2 uses the matrix layout, one row of the matrix
    per logical line wrapped at four complex pairs per physical line.
    """
    n = smat.nports
    lines = ["! %d-port S-parameters" % n, "# GHz S RI R 50"]
    for k, f in enumerate(smat.freqs):
        s = smat.s[k]
        if n == 1:
            lines.append("%.12g %.12g %.12g" % (f / 1e9, s[0, 0].real,
                                                s[0, 0].imag))
        elif n == 2:
            lines.append("%.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g"
                         % (f / 1e9,
                            s[0, 0].real, s[0, 0].imag, s[1, 0].real,
                            s[1, 0].imag, s[0, 1].real, s[0, 1].imag,
                            s[1, 1].real, s[1, 1].imag))
        else:
            for row in range(n):
                vals = []
                for col in range(n):
                    vals += [s[row, col].real, s[row, col].imag]
                head = "%.12g " % (f / 1e9) if row == 0 else ""
                for c0 in range(0, n, 4):
                    chunk = vals[2 * c0:2 * (c0 + 4)]
                    lines.append((head if c0 == 0 else "")
                                 + " ".join("%.12g" % v for v in chunk))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_touchstone(path) -> SMatrix:
    """Read a Touchstone v1 file; handles Hz/kHz/MHz/GHz units and RI/MA/DB
    data formats, any reference resistance, and both row layouts."""
    unit = 1e9
    fmt = "RI"
    z0 = 50.0
    numbers = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                toks = line[1:].upper().split()
                i = 0
                while i < len(toks):
                    t = toks[i]
                    if t in _UNIT_SCALE:
                        unit = _UNIT_SCALE[t]
                    elif t in ("RI", "MA", "DB"):
                        fmt = t
                    elif t == "R" and i + 1 < len(toks):
                        z0 = float(toks[i + 1])
                        i += 1
                    elif t == "S":
                        pass
                    else:
                        raise TouchstoneParseError(
                            path, lineno, f"unknown option token {t!r}")
                    i += 1
                continue
            try:
                numbers.extend((lineno, float(tok)) for tok in line.split())
            except ValueError:
                raise TouchstoneParseError(
                    path, lineno, f"non-numeric data: {line!r}") from None
    if not numbers:
        raise TouchstoneParseError(path, 0, "no data lines")
    # infer port count N: each frequency block is 1 + 2 N^2 values
    total = len(numbers)
    n = None
    for cand in range(1, 40):
        blk = 1 + 2 * cand * cand
        if total % blk == 0:
            vals = [numbers[k][1] for k in range(0, total, blk)]
            if not all(a < b for a, b in zip(vals, vals[1:])):
                continue
            n = cand
            break
    if n is None:
        raise TouchstoneParseError(path, numbers[-1][0],
                                   "data size fits no port count")
    blk = 1 + 2 * n * n
    nf = total // blk
    freqs = np.empty(nf)
    s = np.empty((nf, n, n), dtype=complex)
    for k in range(nf):
        chunk = [v for _, v in numbers[k * blk:(k + 1) * blk]]
        freqs[k] = chunk[0] * unit
        pairs = np.asarray(chunk[1:]).reshape(-1, 2)
        if fmt == "RI":
            c = pairs[:, 0] + 1j * pairs[:, 1]
        elif fmt == "MA":
            c = pairs[:, 0] * np.exp(1j * np.deg2rad(pairs[:, 1]))
        else:                      # DB
            c = 10.0 ** (pairs[:, 0] / 20.0) * np.exp(
                1j * np.deg2rad(pairs[:, 1]))
        if n == 2:                 # row layout order S11 S21 S12 S22
            s[k] = np.array([[c[0], c[2]], [c[1], c[3]]])
        else:
            s[k] = c.reshape(n, n)
    return SMatrix(freqs=freqs, s=s, z0=z0)
