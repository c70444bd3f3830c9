"""Welch PSD/CPSD estimation and the frequency-indexed CPSD matrix container.

Conventions
-----------
All spectra are two-sided densities in (signal units)^2 * s / rad, stored on
the non-negative half of the grid (omega_k = k * delta_omega); the negative
half is implied by Hermitian symmetry S(-w) = conj(S(w)).  With that
convention the symmetric trapezoidal integral 2 * trapz(S, w) over the stored
half equals the discrete Parseval sum exactly, so the diagonal of a raw
periodogram integrates to the signal variance to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .exceptions import ConfigError, DataQualityError, NumericalError
from .records import RecordSet

_WINDOWS = ("rectangular", "hanning")


@dataclass(frozen=True)
class FilterSpec:
    """Second-order Butterworth lowpass specification."""

    cutoff_hz: float
    order: int = 2


@dataclass(frozen=True)
class WelchConfig:
    """Segmentation and windowing settings for Welch averaging.

    ``shift`` is the sample shift Q between successive segments, so the
    overlap fraction is 1 - Q/M.  ``zero_pad_to`` pads each segment (after
    windowing) to reach a finer frequency spacing; the window normalization
    W = sum(w^2) always uses the unpadded window.
    """

    segment_length: int
    shift: int
    window: str = "hanning"
    zero_pad_to: int | None = None
    detrend: str = "mean"

    def __post_init__(self):
        if self.window not in _WINDOWS:
            raise ConfigError(f"window must be one of {_WINDOWS}")
        if not 1 <= self.shift <= self.segment_length:
            raise ConfigError("shift must satisfy 1 <= Q <= M")
        if self.zero_pad_to is not None and self.zero_pad_to < self.segment_length:
            raise ConfigError("zero_pad_to must be >= segment_length")
        if self.detrend not in ("none", "mean"):
            raise ConfigError("detrend must be 'none' or 'mean'")

    @classmethod
    def from_seconds(
        cls,
        segment_seconds: float,
        sample_rate: float,
        overlap: float = 0.5,
        window: str = "hanning",
        **kw,
    ) -> "WelchConfig":
        m = int(round(segment_seconds * sample_rate))
        q = max(1, int(round(m * (1.0 - overlap))))
        return cls(segment_length=m, shift=q, window=window, **kw)

    def window_values(self) -> np.ndarray:
        if self.window == "rectangular":
            return np.ones(self.segment_length)
        return sps.get_window("hann", self.segment_length, fftbins=True)

    def n_segments(self, n_samples: int) -> int:
        if n_samples < self.segment_length:
            raise ConfigError(
                f"segment length {self.segment_length} exceeds record "
                f"length {n_samples}"
            )
        return (n_samples - self.segment_length) // self.shift + 1


@dataclass(frozen=True)
class CpsdMatrix:
    """Frequency-indexed N x N Hermitian cross-spectral matrix.

    ``values`` has shape [n_lines, N, N]; ``frequencies`` is the uniform
    non-negative grid in rad/s starting at 0.
    """

    frequencies: np.ndarray
    values: np.ndarray
    sided: str = "two"
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        freq = np.asarray(self.frequencies, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise ConfigError("values must be [n_lines x N x N]")
        if freq.shape != (vals.shape[0],):
            raise ConfigError("frequency grid does not match value lines")
        if freq.size >= 2:
            steps = np.diff(freq)
            if np.any(steps <= 0) or not np.allclose(
                steps, steps[0], rtol=1e-9, atol=0
            ):
                raise ConfigError("frequency grid must be strictly increasing and uniform")
        object.__setattr__(self, "frequencies", freq)
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            if len(self.labels) != vals.shape[1]:
                raise ConfigError("label count does not match matrix size")
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_lines(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    @property
    def delta_omega(self) -> float:
        if self.n_lines < 2:
            raise ConfigError("grid spacing undefined for a single line")
        return float(self.frequencies[1] - self.frequencies[0])

    def validate(self, rtol: float = 1e-12) -> None:
        """Assert Hermitian symmetry and non-negative real diagonal per line."""
        herm = np.abs(self.values - np.conj(self.values.transpose(0, 2, 1)))
        scale = np.abs(self.values).max(axis=(1, 2))
        scale[scale == 0.0] = 1.0
        if np.any(herm.max(axis=(1, 2)) > rtol * scale):
            k = int(np.argmax(herm.max(axis=(1, 2)) / scale))
            raise DataQualityError(f"CPSD not Hermitian at frequency line {k}")
        diag = np.einsum("kii->ki", self.values)
        if np.any(np.abs(diag.imag) > rtol * np.maximum(scale[:, None], 1e-300)):
            raise DataQualityError("CPSD diagonal has imaginary part")
        if np.any(diag.real < -1e-12 * scale[:, None]):
            raise DataQualityError("CPSD diagonal is negative")

    def hermitized(self) -> "CpsdMatrix":
        """Return a copy with exact Hermitian symmetry enforced."""
        sym = 0.5 * (self.values + np.conj(self.values.transpose(0, 2, 1)))
        return replace(self, values=sym)


def lowpass(rs: RecordSet, spec: FilterSpec) -> RecordSet:
    """Zero-phase Butterworth lowpass (forward-backward, |H|^2 magnitude).

    Forward-backward filtering keeps the pre-filter from adding phase
    distortion to the cross-spectra; edge transients are absorbed by
    reflective padding of about three filter time constants.
    """
    nyquist = rs.sample_rate / 2.0
    if not 0 < spec.cutoff_hz < nyquist:
        raise ConfigError(
            f"cutoff {spec.cutoff_hz} Hz outside (0, {nyquist}) Hz"
        )
    b, a = sps.butter(spec.order, spec.cutoff_hz, fs=rs.sample_rate)
    padlen = min(rs.n_samples - 1, int(3 * rs.sample_rate / spec.cutoff_hz))
    filtered = sps.filtfilt(b, a, rs.components, axis=0, padlen=padlen)
    return replace(rs, components=filtered)


def _segment_ffts(rs: RecordSet, cfg: WelchConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """FFT all windowed segments.

    Returns (X, frequencies, norm) with X of shape [K, N, n_bins] and
    ``norm`` the factor turning conj(Xi) * Xj into a two-sided density in
    rad/s.
    """
    k_segments = cfg.n_segments(rs.n_samples)
    m = cfg.segment_length
    n_fft = cfg.zero_pad_to or m
    w = cfg.window_values()
    w_norm = float(np.sum(w**2))
    if w_norm <= 0:
        raise ConfigError("window normalization must be positive")
    starts = np.arange(k_segments) * cfg.shift
    # [K, M, N] stack of segments
    segs = np.stack([rs.components[s : s + m] for s in starts])
    if cfg.detrend == "mean":
        segs = segs - segs.mean(axis=1, keepdims=True)
    segs = segs * w[None, :, None]
    x = np.fft.rfft(segs, n=n_fft, axis=1).transpose(0, 2, 1)  # [K, N, bins]
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n_fft, d=1.0 / rs.sample_rate)
    norm = 1.0 / (w_norm * rs.sample_rate * 2.0 * np.pi)
    return x, freqs, norm


def welch_cpsd(rs: RecordSet, cfg: WelchConfig) -> CpsdMatrix:
    """Welch-averaged two-sided CPSD matrix of a record.

    Averages the cross-periodograms FFT(w*P_i) * conj(FFT(w*P_j)) / (W fs)
    over the K windowed segments; Hermitian by construction, and the diagonal
    integrates to (an estimate of) the component variances.  The (i, j)
    phase sign is chosen so a cosine series synthesized with the eigenvector
    phase angles of this matrix re-estimates to the same matrix.
    """
    x, freqs, norm = _segment_ffts(rs, cfg)
    vals = np.einsum("kib,kjb->bij", x, np.conj(x)) * (norm / x.shape[0])
    return CpsdMatrix(frequencies=freqs, values=vals, labels=rs.labels)


def raw_periodogram(rs: RecordSet, zero_pad_to: int | None = None,
                    detrend: str = "mean") -> CpsdMatrix:
    """Single-segment rectangular-window cross-periodogram of a whole record."""
    cfg = WelchConfig(
        segment_length=rs.n_samples,
        shift=rs.n_samples,
        window="rectangular",
        zero_pad_to=zero_pad_to,
        detrend=detrend,
    )
    return welch_cpsd(rs, cfg)


def target_cpsd(
    records: list[RecordSet], zero_pad_to: int | None = None
) -> CpsdMatrix:
    """Ensemble-average raw cross-periodograms over many equal-length records.

    Rectangular window, zero overlap: each record contributes one raw
    periodogram so segment ends are not smoothed away.  Zero padding is
    allowed to land on the simulation frequency grid.
    """
    if len(records) < 2:
        raise ConfigError("target estimation needs at least 2 records")
    first = records[0]
    acc = None
    freqs = None
    for rs in records:
        if rs.n_samples != first.n_samples or rs.sample_rate != first.sample_rate:
            raise ConfigError("target records must share length and sampling")
        pg = raw_periodogram(rs, zero_pad_to=zero_pad_to)
        freqs = pg.frequencies
        acc = pg.values if acc is None else acc + pg.values
    return CpsdMatrix(
        frequencies=freqs, values=acc / len(records), labels=first.labels
    )


def truncate_to_cutoff(s: CpsdMatrix, cutoff_hz: float) -> CpsdMatrix:
    """Drop frequency lines above the cutoff; grid spacing is unchanged."""
    omega_c = 2.0 * np.pi * cutoff_hz
    keep = s.frequencies <= omega_c * (1.0 + 1e-12)
    if not np.any(keep):
        raise ConfigError(f"cutoff {cutoff_hz} Hz lies below the first grid line")
    return replace(s, frequencies=s.frequencies[keep], values=s.values[keep])
