"""Per-frequency eigendecomposition of the CPSD matrix into spectral modes.

Each frequency line is an independent Hermitian eigenproblem; modes are
sorted by descending eigenvalue per line (no continuity tracking across
frequency).  The eigenvector gauge is deterministic: each vector is rotated
so its largest-magnitude entry is real and positive, which makes the phase
angles consumed by the simulator reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataQualityError, NumericalError, ConfigError
from .spectral import CpsdMatrix

# eigenvalues below -CLAMP_REL * lambda_max are an error; above, round-off,
# clamped to zero so sqrt(lambda) is defined in the simulator
CLAMP_REL = 1e-10


@dataclass(frozen=True)
class SpectralModes:
    """Eigenvalues and phase-fixed eigenvectors of a CpsdMatrix per line.

    ``eigenvalues`` is [n_lines x N] sorted descending; ``eigenvectors`` is
    [n_lines x N(mode) x N(component)], i.e. row i of a line holds the unit
    eigenvector of mode i.
    """

    frequencies: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple[str, ...] | None = None
    phase_convention: str = "max-entry-real-positive"

    @property
    def n_lines(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n_components(self) -> int:
        return self.eigenvalues.shape[1]

    @property
    def delta_omega(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector so its largest-|.| entry is real positive.

    ``vectors`` is [n_modes x N] (rows are eigenvectors).  Ties in magnitude
    break toward the lowest component index, which argmax already does.
    """
    idx = np.argmax(np.abs(vectors), axis=1)
    pivots = vectors[np.arange(vectors.shape[0]), idx]
    mags = np.abs(pivots)
    mags[mags == 0.0] = 1.0
    return vectors * np.conj(pivots / mags)[:, None]


def decompose(s: CpsdMatrix) -> SpectralModes:
    """Solve the Hermitian eigenproblem of the CPSD matrix at every line."""
    s.validate(rtol=1e-9)
    n_lines, n = s.values.shape[0], s.values.shape[1]
    sym = 0.5 * (s.values + np.conj(s.values.transpose(0, 2, 1)))
    try:
        lam, vec = np.linalg.eigh(sym)  # ascending, columns are vectors
    except np.linalg.LinAlgError as exc:
        # retry line by line to name the offender
        for k in range(n_lines):
            try:
                np.linalg.eigh(sym[k])
            except np.linalg.LinAlgError:
                raise NumericalError(
                    f"eigensolver failed at frequency line {k}"
                ) from exc
        raise NumericalError("eigensolver failed") from exc
    lam = lam[:, ::-1]
    vec = vec[:, :, ::-1].transpose(0, 2, 1)  # [line, mode, component]

    lam_max = np.maximum(lam[:, 0], 0.0)
    floor = -CLAMP_REL * np.maximum(lam_max, 1e-300)
    if np.any(lam < floor[:, None]):
        k = int(np.argwhere(lam < floor[:, None])[0, 0])
        raise DataQualityError(
            f"CPSD is indefinite at frequency line {k} "
            f"(min eigenvalue {lam[k].min():.3e})"
        )
    lam = np.maximum(lam, 0.0)

    fixed = np.empty_like(vec)
    for k in range(n_lines):
        fixed[k] = _fix_phase(vec[k])
        # stable ordering under exact eigenvalue ties
        ties = np.flatnonzero(
            np.abs(np.diff(lam[k])) < 1e-12 * max(lam[k, 0], 1e-300)
        )
        if ties.size:
            real = np.round(fixed[k].real, 12)
            keys = tuple(real[:, c] for c in reversed(range(n))) + (-lam[k],)
            order = np.lexsort(keys)
            lam[k] = lam[k][order]
            fixed[k] = fixed[k][order]
    return SpectralModes(
        frequencies=s.frequencies,
        eigenvalues=lam,
        eigenvectors=fixed,
        labels=s.labels,
    )


def reconstruct(m: SpectralModes, n_modes: int | None = None) -> CpsdMatrix:
    """Sum of the first ``n_modes`` rank-1 mode contributions per line."""
    n = m.n_components
    n_modes = n if n_modes is None else n_modes
    if not 1 <= n_modes <= n:
        raise ConfigError(f"n_modes must lie in [1, {n}]")
    lam = m.eigenvalues[:, :n_modes]
    vec = m.eigenvectors[:, :n_modes, :]
    vals = np.einsum("km,kmi,kmj->kij", lam, vec, np.conj(vec))
    return CpsdMatrix(frequencies=m.frequencies, values=vals, labels=m.labels)


def captured_energy(m: SpectralModes, n_modes: int) -> tuple[np.ndarray, float]:
    """Variance fraction carried by the first ``n_modes`` modes.

    Returns (per-line fraction, frequency-integrated total fraction); the
    total weights every line by its trapezoidal quadrature weight, matching
    the spectral-integral definition of variance.
    """
    if not 1 <= n_modes <= m.n_components:
        raise ConfigError(f"n_modes must lie in [1, {m.n_components}]")
    lead = m.eigenvalues[:, :n_modes].sum(axis=1)
    total = m.eigenvalues.sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    per_line = np.where(total > 0, lead / safe, 1.0)
    weights = np.ones(m.n_lines)
    weights[0] = weights[-1] = 0.5
    denom = float(np.sum(weights * total))
    overall = float(np.sum(weights * lead) / denom) if denom > 0 else 1.0
    return per_line, overall
