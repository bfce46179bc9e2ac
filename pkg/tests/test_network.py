"""S-parameter extraction, band metrics and Touchstone I/O."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from yeefield import network as nw


def smat(freqs, s, **kw):
    s = np.asarray(s, dtype=complex)
    if s.ndim == 1:
        s = s[:, None, None]
    return nw.SMatrix(freqs=np.asarray(freqs, dtype=float), s=s, **kw)


class TestBandwidth:
    # hand fixture: linear-in-dB segments crossing -10 dB at 27.25 / 28.75
    FREQS = np.array([27.0, 27.5, 28.5, 29.0]) * 1e9
    DB = np.array([-8.0, -12.0, -12.0, -8.0])

    def test_hand_fixture_edges(self):
        band = nw.bandwidth_at_threshold(self.FREQS, self.DB)
        assert band.f_lo == pytest.approx(27.25e9, rel=1e-12)
        assert band.f_hi == pytest.approx(28.75e9, rel=1e-12)
        assert band.bandwidth == pytest.approx(1.5e9, rel=1e-12)

    def test_accepts_complex_reflection(self):
        s = 10.0 ** (self.DB / 20.0) * np.exp(1j * 0.3)
        band = nw.bandwidth_at_threshold(self.FREQS, s)
        assert band.f_lo == pytest.approx(27.25e9, rel=1e-9)

    def test_none_when_never_matched(self):
        assert nw.bandwidth_at_threshold(self.FREQS,
                                         np.full(4, -6.0)) is None

    def test_widest_interval_wins(self):
        f = np.arange(10) * 1e9 + 20e9
        db = np.array([-5, -12, -5, -12, -12, -12, -5, -12, -5, -5.0])
        band = nw.bandwidth_at_threshold(f, db)
        assert 23e9 < band.center < 25e9

    @given(st.integers(1, 6))
    @settings(max_examples=20, deadline=None)
    def test_refinement_invariance(self, factor):
        """Linear-in-dB resampling of the curve must not move the edges."""
        f = np.unique(np.concatenate(
            [np.linspace(a, b, factor + 1)
             for a, b in zip(self.FREQS, self.FREQS[1:])]))
        db = np.interp(f, self.FREQS, self.DB)
        band = nw.bandwidth_at_threshold(f, db)
        assert band.f_lo == pytest.approx(27.25e9, rel=1e-6)
        assert band.f_hi == pytest.approx(28.75e9, rel=1e-6)

    def test_custom_threshold(self):
        band = nw.bandwidth_at_threshold(self.FREQS, self.DB,
                                         threshold_db=-11.0)
        assert band.bandwidth < 1.5e9


class TestIsolation:
    def test_worst_coupling_found(self):
        f = np.array([27.0e9, 28.0e9, 29.0e9])
        s = np.zeros((3, 2, 2), complex)
        s[:, 1, 0] = s[:, 0, 1] = [0.01, 0.05, 0.02]     # -26 dB worst
        worst = nw.worst_isolation(smat(f, s), port=1,
                                   band=(27.0e9, 29.0e9))
        assert worst == pytest.approx(20 * np.log10(0.05))

    def test_band_restriction(self):
        f = np.array([27.0e9, 28.0e9, 29.0e9])
        s = np.zeros((3, 2, 2), complex)
        s[:, 1, 0] = [0.5, 0.01, 0.01]
        worst = nw.worst_isolation(smat(f, s), port=1,
                                   band=(27.5e9, 29.0e9))
        assert worst == pytest.approx(-40.0)

    def test_diagonal_excluded(self):
        f = np.array([28e9])
        s = np.zeros((1, 2, 2), complex)
        s[0] = [[0.9, 0.0], [0.001, 0.0]]
        worst = nw.worst_isolation(smat(f, s), port=1, band=(27e9, 29e9))
        assert worst == pytest.approx(-60.0)


class TestPassivity:
    def test_passive_matrix_clean(self):
        f = np.array([28e9])
        s = np.zeros((1, 2, 2), complex)
        s[0] = [[0.3, 0.2], [0.2, 0.3]]
        m = smat(f, s)
        assert nw.check_passivity(m) == ()
        assert m.warnings == ()

    def test_active_matrix_warns(self):
        f = np.array([28e9])
        s = np.zeros((1, 2, 2), complex)
        s[0] = [[1.2, 0.0], [0.0, 0.3]]
        m = smat(f, s)
        with pytest.warns(UserWarning):
            msgs = nw.check_passivity(m)
        assert msgs and m.warnings


class TestTouchstone:
    @pytest.mark.parametrize("nports", [1, 2, 3, 8])
    def test_round_trip(self, tmp_path, nports):
        rng = np.random.default_rng(7)
        f = np.linspace(24e9, 30e9, 5)
        s = (rng.normal(size=(5, nports, nports))
             + 1j * rng.normal(size=(5, nports, nports))) * 0.3
        path = tmp_path / f"a.s{nports}p"
        nw.write_touchstone(smat(f, s), path)
        back = nw.read_touchstone(path)
        assert np.allclose(back.freqs, f)
        assert np.allclose(back.s, s, atol=1e-10)
        assert back.z0 == 50.0

    def test_option_line(self, tmp_path):
        path = tmp_path / "a.s1p"
        nw.write_touchstone(smat(np.array([28e9]),
                                 np.array([[[0.1]]])), path)
        lines = [l for l in path.read_text().splitlines()
                 if l.startswith("#")]
        assert lines == ["# GHz S RI R 50"]

    def test_reads_magnitude_angle(self, tmp_path):
        path = tmp_path / "ma.s1p"
        path.write_text("# MHz S MA R 50\n28000 0.5 90\n")
        m = nw.read_touchstone(path)
        assert m.freqs[0] == pytest.approx(28e9)
        assert m.s[0, 0, 0] == pytest.approx(0.5j)

    def test_reads_db_angle(self, tmp_path):
        path = tmp_path / "db.s1p"
        path.write_text("# GHz S DB R 50\n28 -20 0\n")
        m = nw.read_touchstone(path)
        assert m.s[0, 0, 0] == pytest.approx(0.1)

    def test_two_port_row_order(self, tmp_path):
        # Touchstone v1 two-port rows are S11 S21 S12 S22
        path = tmp_path / "o.s2p"
        path.write_text("# GHz S RI R 50\n28 0.11 0 0.21 0 0.12 0 0.22 0\n")
        m = nw.read_touchstone(path)
        assert m.s[0, 1, 0] == pytest.approx(0.21)
        assert m.s[0, 0, 1] == pytest.approx(0.12)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.s2p"
        path.write_text("# GHz S RI R 50\n28 0.1 0 0.2 0\n")
        with pytest.raises(nw.TouchstoneParseError):
            nw.read_touchstone(path)

    def test_garbage_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.s1p"
        path.write_text("# GHz S RI R 50\n28 0.1 0\nnot numbers here\n")
        with pytest.raises(nw.TouchstoneParseError) as err:
            nw.read_touchstone(path)
        assert err.value.lineno == 3

    def test_db_accessor_is_one_based(self):
        f = np.array([28e9])
        s = np.zeros((1, 2, 2), complex)
        s[0, 0, 0] = 0.1
        assert smat(f, s).db(1, 1)[0] == pytest.approx(-20.0)


class FakeRecordings:
    """Stand-in exposing the spectra interface of a solver run."""

    def __init__(self, v, i, excited_port, z0=50.0):
        self.v = np.asarray(v, dtype=complex)
        self._i = np.asarray(i, dtype=complex)
        self.excited_port = excited_port
        self.port_zref = z0
        self.converged = True

    def port_spectra(self, freqs):
        nf = len(freqs)
        return (np.repeat(self.v[:, None], nf, axis=1),
                np.repeat(self._i[:, None], nf, axis=1))


class TestExtraction:
    def test_matched_termination_wave_ratios(self):
        """Hand-built V/I phasors. At an ideally matched passive port
        V = -Z0 I, so its incident wave a = V + Z0 I vanishes and the solve
        degenerates to the column ratio b_m / a_n."""
        f = np.array([28e9])
        runs = [FakeRecordings([1.0, 0.25], [(1.0 - 0.5) / 50.0,
                                             -0.25 / 50.0], 1),
                FakeRecordings([0.25, 1.0], [-0.25 / 50.0,
                                             (1.0 - 0.5) / 50.0], 2)]
        m = nw.extract_sparams(runs, f, 2)
        # run 1: V + Z0 I = [1.5, 0.0], V - Z0 I = [0.5, 0.5]
        assert m.s[0, 0, 0] == pytest.approx(0.5 / 1.5)
        assert m.s[0, 1, 0] == pytest.approx(0.5 / 1.5)

    def test_residual_incident_wave_is_solved_out(self):
        """The port current is sampled a cell away from the load, so a passive
        port sees a small incident wave; the extraction must solve b = S a
        rather than divide by the driven port's a alone. Hand numbers:
        A = [[1.5, 0.3], [0.3, 1.5]], B = [[0.5, 0.45], [0.45, 0.5]],
        S = B A^{-1} = [[0.615, 0.525], [0.525, 0.615]] / 2.16."""
        f = np.array([28e9])

        def rec(a, b, port):
            v = [(ai + bi) / 2.0 for ai, bi in zip(a, b)]
            i = [(ai - bi) / 100.0 for ai, bi in zip(a, b)]
            return FakeRecordings(v, i, port)

        runs = [rec([1.5, 0.3], [0.5, 0.45], 1),
                rec([0.3, 1.5], [0.45, 0.5], 2)]
        m = nw.extract_sparams(runs, f, 2)
        assert m.s[0, 0, 0] == pytest.approx(0.615 / 2.16)
        assert m.s[0, 1, 0] == pytest.approx(0.525 / 2.16)
        assert m.s[0, 0, 1] == pytest.approx(m.s[0, 1, 0])

    def test_amplitude_invariance(self):
        f = np.array([28e9])

        def make(scale):
            runs = [FakeRecordings([scale * 0.8, scale * 0.1],
                                   [scale * 0.004, scale * 0.002], 1),
                    FakeRecordings([scale * 0.1, scale * 0.8],
                                   [scale * 0.002, scale * 0.004], 2)]
            return nw.extract_sparams(runs, f, 2)

        assert np.allclose(make(1.0).s, make(37.0).s)

    def test_missing_port_rejected(self):
        with pytest.raises(nw.IncompleteMatrixError) as err:
            nw.extract_sparams([FakeRecordings([1.0, 0.1],
                                               [0.02, 0.002], 1)],
                               np.array([28e9]), 2)
        assert err.value.missing == (2,)
