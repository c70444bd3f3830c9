"""Gaussian wind-load synthesis from calibrated spectral modes.

Each mode contributes a cosine series over the frequency grid with amplitude
2|Psi| sqrt(Lambda * delta_omega) (two-sided spectrum convention: each
positive-frequency line carries a variance of 2 * Lambda * delta_omega), a
deterministic eigenvector phase, and one uniform random phase per
(mode, frequency).  Realizations are exactly periodic with period
2*pi/delta_omega.

Random phases come from a counter-based Philox stream keyed by
(seed, realization), with the (mode, line) array drawn row-major, so any
realization is reproducible in isolation and truncating the mode count does
not shift the phases of the retained modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataQualityError
from .pod import SpectralModes
from .records import RecordSet
from .spectral import CpsdMatrix

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SimulationPlan:
    """Everything needed to generate reproducible realizations.

    ``duration`` may not exceed one period 2*pi/delta_omega of the cosine
    series.  ``means`` and ``scale`` (from standardization) are re-applied at
    the output boundary; both default to trivial values.
    """

    modes: SpectralModes
    n_modes: int
    duration: float
    dt: float
    n_realizations: int
    seed: int
    means: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        m = self.modes
        if not 1 <= self.n_modes <= m.n_components:
            raise ConfigError(f"n_modes must lie in [1, {m.n_components}]")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if self.dt <= 0 or self.duration <= 0:
            raise ConfigError("dt and duration must be positive")
        if abs(m.frequencies[0]) > 1e-12:
            raise ConfigError("mode grid must start at omega = 0")
        if self.duration > self.period * (1.0 + 1e-9):
            raise ConfigError(
                f"duration {self.duration} s exceeds one period "
                f"{self.period:.6g} s of the frequency grid"
            )
        if m.frequencies[-1] > np.pi / self.dt * (1.0 + 1e-9):
            raise ConfigError("dt too coarse for the highest frequency line")
        for name in ("means", "scale"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (m.n_components,):
                    raise ConfigError(f"{name} must have length N")
                object.__setattr__(self, name, v)

    @property
    def period(self) -> float:
        return _TWO_PI / self.modes.delta_omega

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def random_phases(seed: int, realization: int, n_modes: int, n_lines: int) -> np.ndarray:
    """Uniform [0, 2*pi) phases, shape [n_modes x n_lines], keyed (seed, r)."""
    bits = np.random.Philox(key=np.array([seed, realization], dtype=np.uint64))
    gen = np.random.Generator(bits)
    return gen.random((n_modes, n_lines)) * _TWO_PI


def _amplitudes(modes: SpectralModes, n_modes: int) -> np.ndarray:
    """Complex per-line coefficients T[k, i, c] = 2 sqrt(Lambda dw) Psi.

    |T| is the cosine amplitude and arg(T) the deterministic eigenvector
    phase.  The DC line is zeroed: the process is zero-mean and any constant
    offset is carried by the stored means.
    """
    lam = np.maximum(modes.eigenvalues[:, :n_modes], 0.0)
    lam = lam.copy()
    lam[0] = 0.0
    amp = 2.0 * np.sqrt(lam * modes.delta_omega)
    return amp[:, :, None] * modes.eigenvectors[:, :n_modes, :]


def simulate_subprocess(
    modes: SpectralModes,
    mode_index: int,
    phases: np.ndarray,
    dt: float,
    n_steps: int,
) -> np.ndarray:
    """Direct cosine-sum synthesis of one zero-mean subprocess.

    Reference implementation (O(n_steps * n_lines) per component); the batch
    generator uses an FFT path that must agree with this sample-exactly.
    Returns [n_steps x N].
    """
    if np.any(modes.eigenvalues[:, mode_index] < 0):
        raise DataQualityError("negative eigenvalue; re-run the decomposition")
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (modes.n_lines,):
        raise ConfigError("one random phase per frequency line is required")
    t = np.arange(n_steps) * dt
    coeff = _amplitudes(modes, mode_index + 1)[:, mode_index, :]  # [Nl, N]
    rotator = np.exp(1j * np.outer(t, modes.frequencies))  # [n_steps, Nl]
    return np.real(rotator @ (coeff * np.exp(1j * phases)[:, None]))


def _synthesize(coeffs: np.ndarray, n_steps: int, dt: float, delta_omega: float) -> np.ndarray:
    """Render summed complex line coefficients C[..., N, Nl] to time series.

    Uses an inverse FFT when the grid step divides the sampling step exactly
    (sample-exact vs the cosine sum); otherwise falls back to the direct sum.
    Returns [..., n_steps, N].
    """
    n_lines = coeffs.shape[-1]
    n_fft_f = _TWO_PI / (delta_omega * dt)
    n_fft = int(round(n_fft_f))
    if abs(n_fft_f - n_fft) < 1e-9 and n_fft >= 2 * (n_lines - 1):
        half = np.zeros(coeffs.shape[:-1] + (n_fft // 2 + 1,), dtype=complex)
        half[..., :n_lines] = coeffs / 2.0
        if n_lines - 1 == n_fft // 2:  # Nyquist line carries cos(pi n) only
            half[..., n_lines - 1] = coeffs[..., -1].real
        series = np.fft.irfft(half, n=n_fft, axis=-1) * n_fft
        return np.swapaxes(series[..., :n_steps], -1, -2)
    t = np.arange(n_steps) * dt
    rotator = np.exp(1j * np.outer(t, np.arange(n_lines) * delta_omega))
    return np.real(np.einsum("sk,...ck->...sc", rotator, coeffs))


def _batch_fluctuations(plan: SimulationPlan, realizations: np.ndarray) -> np.ndarray:
    """Zero-mean component time series for a batch, [B x n_steps x N]."""
    m = plan.modes
    t_coef = _amplitudes(m, plan.n_modes)  # [Nl, Nm, N]
    theta = np.stack(
        [random_phases(plan.seed, int(r), plan.n_modes, m.n_lines) for r in realizations]
    )
    summed = np.einsum("kic,bik->bck", t_coef, np.exp(1j * theta))
    series = _synthesize(summed, plan.n_steps, plan.dt, m.delta_omega)
    if plan.scale is not None:
        series = series * plan.scale
    return series


def simulate_realization(plan: SimulationPlan, realization: int = 0) -> RecordSet:
    """One reproducible realization, de-standardized if a scale is present."""
    series = _batch_fluctuations(plan, np.array([realization]))[0]
    n = plan.modes.n_components
    labels = plan.modes.labels or tuple(f"comp_{i+1:03d}" for i in range(n))
    means = plan.means if plan.means is not None else np.zeros(n)
    return RecordSet(
        components=series,
        sample_rate=1.0 / plan.dt,
        labels=labels,
        means=means,
        scale=None,
    )


def stream_realizations(plan: SimulationPlan):
    """Yield the plan's realizations one RecordSet at a time."""
    for r in range(plan.n_realizations):
        yield simulate_realization(plan, r)


class EnsembleAccumulator:
    """Single-pass ensemble statistics over simulated realizations.

    Folds each realization's raw rectangular periodogram (on the simulation
    grid, trimmed to the calibration lines), its sample mean, and its sample
    (co)variance into running sums; memory is independent of the realization
    count.  Requires full-period realizations so the periodogram grid
    coincides with the mode grid.
    """

    def __init__(self, frequencies: np.ndarray, sample_rate: float,
                 labels: tuple[str, ...] | None = None):
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.sample_rate = sample_rate
        self.labels = labels
        n_lines = self.frequencies.size
        self.count = 0
        self._spec_sum: np.ndarray | None = None
        self._mean_sum: np.ndarray | None = None
        self._cov_sum: np.ndarray | None = None
        self._n_lines = n_lines

    def add(self, series: np.ndarray) -> None:
        """Fold a batch of realizations, shape [B x n_steps x N]."""
        b, n_steps, n = series.shape
        x = np.fft.rfft(series, axis=1)[:, : self._n_lines, :]
        norm = 1.0 / (n_steps * self.sample_rate * _TWO_PI)
        spec = np.einsum("bki,bkj->kij", x, np.conj(x)) * norm
        mean = series.mean(axis=1)
        fluct = series - mean[:, None, :]
        cov = np.einsum("bsi,bsj->ij", fluct, fluct) / n_steps
        if self._spec_sum is None:
            self._spec_sum = spec
            self._mean_sum = mean.sum(axis=0)
            self._cov_sum = cov
        else:
            self._spec_sum += spec
            self._mean_sum += mean.sum(axis=0)
            self._cov_sum += cov
        self.count += b

    def spectra(self) -> CpsdMatrix:
        if self.count == 0:
            raise ConfigError("accumulator is empty")
        return CpsdMatrix(
            frequencies=self.frequencies,
            values=self._spec_sum / self.count,
            labels=self.labels,
        )

    def mean(self) -> np.ndarray:
        return self._mean_sum / self.count

    def covariance(self) -> np.ndarray:
        return self._cov_sum / self.count


def simulate_batch(
    plan: SimulationPlan,
    batch_size: int = 256,
    collect: bool = False,
) -> tuple[EnsembleAccumulator, list[RecordSet]]:
    """Generate all planned realizations, folding them into an accumulator.

    With ``collect=True`` the realizations are also returned as RecordSets
    (two-pass verification and small runs only).
    """
    if abs(plan.n_steps * plan.dt - plan.period) > 1e-9 * plan.period:
        raise ConfigError(
            "ensemble accumulation requires duration = one full period "
            "so the periodogram grid matches the calibration grid"
        )
    acc = EnsembleAccumulator(
        plan.modes.frequencies, 1.0 / plan.dt, plan.modes.labels
    )
    kept: list[RecordSet] = []
    n = plan.modes.n_components
    labels = plan.modes.labels or tuple(f"comp_{i+1:03d}" for i in range(n))
    means = plan.means if plan.means is not None else np.zeros(n)
    for start in range(0, plan.n_realizations, batch_size):
        idx = np.arange(start, min(start + batch_size, plan.n_realizations))
        series = _batch_fluctuations(plan, idx)
        acc.add(series)
        if collect:
            kept.extend(
                RecordSet(
                    components=series[b],
                    sample_rate=1.0 / plan.dt,
                    labels=labels,
                    means=means,
                )
                for b in range(series.shape[0])
            )
    return acc, kept
