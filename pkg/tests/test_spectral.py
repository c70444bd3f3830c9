import numpy as np
import pytest

from podwind.exceptions import ConfigError, DataQualityError
from podwind.records import RecordSet
from podwind.spectral import (
    CpsdMatrix,
    FilterSpec,
    WelchConfig,
    lowpass,
    raw_periodogram,
    target_cpsd,
    truncate_to_cutoff,
    welch_cpsd,
)


def make_rs(data, fs=100.0):
    data = np.asarray(data, dtype=float)
    return RecordSet(
        components=data - data.mean(0),
        sample_rate=fs,
        labels=tuple(f"c{i}" for i in range(data.shape[1])),
        means=data.mean(0),
    )


def spectrum_variance(s):
    """Symmetric integral of the stored half-spectrum diagonal."""
    diag = np.einsum("kii->ki", s.values).real
    return 2.0 * np.trapezoid(diag, s.frequencies, axis=0)


class TestWelchConfig:
    def test_segment_count_formula(self):
        cfg = WelchConfig(segment_length=256, shift=128)
        # K = floor((n - M) / Q) + 1
        assert cfg.n_segments(1024) == (1024 - 256) // 128 + 1
        assert cfg.n_segments(256) == 1
        assert cfg.n_segments(255 + 256) == 2

    def test_from_seconds(self):
        cfg = WelchConfig.from_seconds(4.0, 625.0, overlap=0.5)
        assert cfg.segment_length == 2500
        assert cfg.shift == 1250

    def test_invalid_settings(self):
        with pytest.raises(ConfigError):
            WelchConfig(segment_length=64, shift=0)
        with pytest.raises(ConfigError):
            WelchConfig(segment_length=64, shift=65)
        with pytest.raises(ConfigError):
            WelchConfig(segment_length=64, shift=32, window="blackman")
        with pytest.raises(ConfigError):
            WelchConfig(segment_length=64, shift=32, zero_pad_to=32)

    def test_too_short_record(self):
        cfg = WelchConfig(segment_length=512, shift=256)
        with pytest.raises(ConfigError):
            cfg.n_segments(100)

    def test_hanning_window_power(self):
        w = WelchConfig(segment_length=1000, shift=500).window_values()
        # periodic Hann has mean-square exactly 3/8
        assert np.sum(w**2) == pytest.approx(375.0)


class TestCpsdMatrix:
    def grid(self, n=16):
        return np.arange(n) * 0.5

    def test_validation_catches_non_hermitian(self):
        vals = np.ones((4, 2, 2), dtype=complex)
        vals[2, 0, 1] = 1.0 + 0.5j  # conjugate partner stays 1.0
        s = CpsdMatrix(self.grid(4), vals)
        with pytest.raises(DataQualityError, match="line 2"):
            s.validate()
        s.hermitized().validate()

    def test_validation_catches_negative_diagonal(self):
        vals = np.tile(np.eye(2, dtype=complex), (4, 1, 1))
        vals[1, 1, 1] = -0.3
        with pytest.raises(DataQualityError, match="negative"):
            CpsdMatrix(self.grid(4), vals).validate()

    def test_nonuniform_grid_rejected(self):
        freq = np.array([0.0, 1.0, 3.0])
        with pytest.raises(ConfigError, match="uniform"):
            CpsdMatrix(freq, np.zeros((3, 1, 1), dtype=complex))

    def test_delta_omega(self):
        s = CpsdMatrix(self.grid(8), np.zeros((8, 1, 1), dtype=complex))
        assert s.delta_omega == pytest.approx(0.5)


class TestPeriodogram:
    def test_single_cosine_power(self):
        # x(t) = A cos(w0 t) has variance A^2/2; all of it sits on one line
        fs, n = 100.0, 1000
        t = np.arange(n) / fs
        a = 1.7
        k0 = 40  # w0 = k0 * 2 pi fs / n
        x = a * np.cos(2 * np.pi * fs * k0 / n * t)
        s = raw_periodogram(make_rs(x[:, None], fs), detrend="none")
        diag = s.values[:, 0, 0].real
        assert np.argmax(diag) == k0
        assert spectrum_variance(s)[0] == pytest.approx(a**2 / 2, rel=1e-12)

    def test_parseval_even_length(self):
        rng = np.random.default_rng(11)
        rs = make_rs(rng.normal(size=(4096, 3)))
        s = raw_periodogram(rs)
        np.testing.assert_allclose(
            spectrum_variance(s), rs.components.var(axis=0), rtol=1e-12
        )

    def test_parseval_odd_length(self):
        # without a Nyquist bin the trapezoidal half-weighting of the last
        # line costs about one bin of power; exactness holds for even lengths
        rng = np.random.default_rng(12)
        rs = make_rs(rng.normal(size=(4097, 2)))
        s = raw_periodogram(rs)
        np.testing.assert_allclose(
            spectrum_variance(s), rs.components.var(axis=0), rtol=5e-3
        )

    def test_cross_term_is_conjugate_product(self):
        rng = np.random.default_rng(13)
        rs = make_rs(rng.normal(size=(512, 2)), fs=10.0)
        s = raw_periodogram(rs, detrend="none")
        x = np.fft.rfft(rs.components, axis=0)
        norm = 1.0 / (512 * 10.0 * 2.0 * np.pi)
        expected = x[:, 0] * np.conj(x[:, 1]) * norm
        np.testing.assert_allclose(s.values[:, 0, 1], expected, rtol=1e-12)

    def test_zero_padding_refines_grid(self):
        rng = np.random.default_rng(14)
        rs = make_rs(rng.normal(size=(500, 1)), fs=10.0)
        s = raw_periodogram(rs, zero_pad_to=1000)
        assert s.n_lines == 501
        assert s.delta_omega == pytest.approx(2 * np.pi * 10.0 / 1000)


class TestWelch:
    def test_white_noise_level(self):
        # white noise sampled at fs has flat two-sided density
        # sigma^2 / (2 pi fs) in rad/s
        fs, sigma = 50.0, 1.3
        rng = np.random.default_rng(21)
        rs = make_rs(sigma * rng.normal(size=(64 * 256, 1)), fs)
        cfg = WelchConfig(segment_length=256, shift=256, window="rectangular")
        s = welch_cpsd(rs, cfg)
        level = sigma**2 / (2 * np.pi * fs)
        interior = s.values[1:-1, 0, 0].real
        assert np.mean(interior) == pytest.approx(level, rel=0.05)

    def test_hanning_preserves_integrated_power(self):
        rng = np.random.default_rng(22)
        rs = make_rs(rng.normal(size=(200 * 128, 1)), fs=20.0)
        cfg = WelchConfig(segment_length=128, shift=64, window="hanning")
        var = spectrum_variance(welch_cpsd(rs, cfg))[0]
        assert var == pytest.approx(rs.components.var(), rel=0.05)

    def test_hermitian_by_construction(self):
        rng = np.random.default_rng(23)
        rs = make_rs(rng.normal(size=(2048, 3)))
        s = welch_cpsd(rs, WelchConfig(segment_length=256, shift=128))
        s.validate()

    def test_coherent_pair_cross_spectrum(self):
        # c1 lags c0 by `delay` samples; with S_01 = X_0 conj(X_1) the
        # cross-phase is +w * delay
        fs, n, delay = 200.0, 1 << 15, 3
        rng = np.random.default_rng(24)
        base = rng.normal(size=n + delay)
        data = np.column_stack([base[delay:], base[:-delay]])
        s = welch_cpsd(make_rs(data, fs), WelchConfig(512, 256))
        mid = slice(5, 100)
        coh = np.abs(s.values[mid, 0, 1]) / np.sqrt(
            s.values[mid, 0, 0].real * s.values[mid, 1, 1].real
        )
        assert np.median(coh) > 0.95
        phase = np.unwrap(np.angle(s.values[:, 0, 1]))[mid]
        expected = s.frequencies[mid] * delay / fs
        np.testing.assert_allclose(phase, expected, atol=0.15)

    def test_averaging_reduces_variance(self):
        rng = np.random.default_rng(25)
        rs = make_rs(rng.normal(size=(64 * 256, 1)))
        few = welch_cpsd(rs, WelchConfig(4096, 4096, window="rectangular"))
        many = welch_cpsd(rs, WelchConfig(256, 256, window="rectangular"))
        spread_few = np.std(few.values[1:-1, 0, 0].real)
        spread_many = np.std(many.values[1:-1, 0, 0].real)
        assert spread_many < 0.5 * spread_few


class TestTargetCpsd:
    def make_records(self, n_records, n=256, seed=0):
        rng = np.random.default_rng(seed)
        return [make_rs(rng.normal(size=(n, 2))) for _ in range(n_records)]

    def test_mean_of_raw_periodograms(self):
        recs = self.make_records(5)
        s = target_cpsd(recs)
        manual = sum(raw_periodogram(r).values for r in recs) / 5
        np.testing.assert_allclose(s.values, manual, rtol=1e-14)

    def test_needs_two_records(self):
        with pytest.raises(ConfigError, match="at least 2"):
            target_cpsd(self.make_records(1))

    def test_mismatched_records_rejected(self):
        recs = self.make_records(2)
        rng = np.random.default_rng(1)
        recs.append(make_rs(rng.normal(size=(128, 2))))
        with pytest.raises(ConfigError, match="share"):
            target_cpsd(recs)

    def test_converges_to_flat_density(self):
        fs = 50.0
        rng = np.random.default_rng(31)
        recs = [make_rs(rng.normal(size=(200, 1)), fs) for _ in range(400)]
        s = target_cpsd(recs)
        level = 1.0 / (2 * np.pi * fs)
        assert np.mean(s.values[1:-1, 0, 0].real) == pytest.approx(level, rel=0.05)


class TestLowpassAndTruncate:
    def test_attenuation_profile(self):
        # forward-backward 2nd-order Butterworth: |H|^2, i.e. -6 dB at cutoff
        fs, n = 1000.0, 1 << 16
        rng = np.random.default_rng(41)
        rs = make_rs(rng.normal(size=(n, 1)), fs)
        out = lowpass(rs, FilterSpec(cutoff_hz=50.0))
        s_in = welch_cpsd(rs, WelchConfig(4096, 2048))
        s_out = welch_cpsd(out, WelchConfig(4096, 2048))
        ratio = s_out.values[:, 0, 0].real / s_in.values[:, 0, 0].real
        f = s_in.frequencies / (2 * np.pi)
        k_cut = np.argmin(np.abs(f - 50.0))
        assert ratio[k_cut] == pytest.approx(0.25, abs=0.05)
        assert np.median(ratio[f < 10.0]) == pytest.approx(1.0, abs=0.03)
        assert np.all(ratio[f > 200.0] < 1e-3)

    def test_zero_phase(self):
        fs = 1000.0
        t = np.arange(4096) / fs
        x = np.cos(2 * np.pi * 5.0 * t)
        out = lowpass(make_rs(x[:, None], fs), FilterSpec(50.0))
        core = slice(500, 3500)
        np.testing.assert_allclose(
            out.components[core, 0], x[core] - x.mean(), atol=2e-3
        )

    def test_bad_cutoff(self):
        rs = make_rs(np.random.default_rng(0).normal(size=(100, 1)), fs=100.0)
        with pytest.raises(ConfigError):
            lowpass(rs, FilterSpec(60.0))

    def test_truncate_keeps_boundary_line(self):
        freqs = np.arange(101) * (2 * np.pi)  # lines at 0..100 Hz
        s = CpsdMatrix(freqs, np.zeros((101, 1, 1), dtype=complex))
        cut = truncate_to_cutoff(s, 50.0)
        assert cut.n_lines == 51
        assert cut.frequencies[-1] == pytest.approx(2 * np.pi * 50.0)
        assert cut.delta_omega == pytest.approx(s.delta_omega)

    def test_truncate_below_grid(self):
        freqs = np.arange(1, 11) * 10.0
        with pytest.raises(ConfigError):
            truncate_to_cutoff(CpsdMatrix(freqs, np.zeros((10, 1, 1), complex)), 0.1)
