"""Error measures between target and typical/simulated/approximated spectra.

Variance errors are relative percentages per component; covariance errors are
expressed as differences of correlation coefficients (target minus test),
never as percentages, because weakly correlated pairs have near-zero target
covariances.  Covariances come from the cospectrum only: the quad-spectrum
integrates out of the covariance by definition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataQualityError
from .spectral import CpsdMatrix, truncate_to_cutoff


@dataclass(frozen=True)
class SpectralMoments:
    """Spectral-integral variances and covariances up to a cutoff."""

    variances: np.ndarray  # sigma^2_ii, length N
    covariances: np.ndarray  # sigma_ij, N x N symmetric (diag = variances)
    cutoff_hz: float | None = None

    def __post_init__(self):
        var = np.asarray(self.variances, dtype=float)
        cov = np.asarray(self.covariances, dtype=float)
        if cov.shape != (var.size, var.size):
            raise ConfigError("covariance matrix shape mismatch")
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "covariances", cov)

    @property
    def n_components(self) -> int:
        return self.variances.size

    def correlations(self) -> np.ndarray:
        sig = np.sqrt(self.variances)
        if np.any(sig <= 0):
            raise DataQualityError("zero variance; correlations undefined")
        return self.covariances / np.outer(sig, sig)


def moments(s: CpsdMatrix, cutoff_hz: float | None = None) -> SpectralMoments:
    """Integrate the CPSD matrix into (co)variances.

    Trapezoidal rule over the symmetric two-sided grid (+-cutoff), which for
    the stored non-negative half is 2 * trapz; on an even-length FFT grid
    this reproduces the discrete Parseval sum exactly.
    """
    if s.n_lines == 0:
        raise ConfigError("cannot integrate an empty spectrum")
    if cutoff_hz is not None:
        s = truncate_to_cutoff(s, cutoff_hz)
    if s.n_lines < 2:
        raise ConfigError("integration needs at least two frequency lines")
    cov = 2.0 * np.trapezoid(s.values.real, s.frequencies, axis=0)
    cov = 0.5 * (cov + cov.T)
    return SpectralMoments(
        variances=np.diag(cov).copy(), covariances=cov, cutoff_hz=cutoff_hz
    )


def variance_error(test: SpectralMoments, target: SpectralMoments) -> np.ndarray:
    """Per-component relative variance error in percent vs the target."""
    if test.n_components != target.n_components:
        raise ConfigError("component counts differ")
    if np.any(target.variances <= 0):
        bad = np.flatnonzero(target.variances <= 0)
        raise DataQualityError(f"target variance is zero for components {bad}")
    return 100.0 * (test.variances - target.variances) / target.variances


def correlation_difference(test: SpectralMoments, target: SpectralMoments) -> np.ndarray:
    """phi_ij = rho_target - rho_test; zero on the diagonal."""
    phi = target.correlations() - test.correlations()
    np.fill_diagonal(phi, 0.0)
    return phi


@dataclass(frozen=True)
class ErrorReport:
    """Per-record errors plus their ensemble statistics.

    ``epsilon`` is [R x N] (percent), ``phi`` is [R x N x N].  Expectations
    are unweighted means over components (epsilon) or off-diagonal pairs
    (phi).
    """

    epsilon: np.ndarray
    phi: np.ndarray
    labels: tuple[str, ...] | None = None
    direction: float = 0.0
    configuration: str = "SM"

    def __post_init__(self):
        eps = np.atleast_2d(np.asarray(self.epsilon, dtype=float))
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim == 2:
            phi = phi[None, :, :]
        if phi.shape[0] != eps.shape[0] or phi.shape[1] != eps.shape[1]:
            raise ConfigError("epsilon and phi record/component counts differ")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "phi", phi)

    @property
    def n_records(self) -> int:
        return self.epsilon.shape[0]

    @property
    def n_components(self) -> int:
        return self.epsilon.shape[1]

    # --- per-component / per-pair statistics over records ---

    @property
    def mu_epsilon(self) -> np.ndarray:
        return self.epsilon.mean(axis=0)

    @property
    def sigma_epsilon(self) -> np.ndarray:
        return self.epsilon.std(axis=0, ddof=1)

    @property
    def mu_phi(self) -> np.ndarray:
        return self.phi.mean(axis=0)

    @property
    def sigma_phi(self) -> np.ndarray:
        return self.phi.std(axis=0, ddof=1)

    # --- expectations over components / pairs ---

    def _offdiag(self, mat: np.ndarray) -> np.ndarray:
        n = self.n_components
        mask = ~np.eye(n, dtype=bool)
        return mat[mask]

    def summary(self) -> dict[str, float]:
        """Scalar summary statistics (expectations and extrema)."""
        out = {
            "E_mu_epsilon": float(self.mu_epsilon.mean()),
            "min_mu_epsilon": float(self.mu_epsilon.min()),
            "max_mu_epsilon": float(self.mu_epsilon.max()),
            "E_mu_phi": float(self._offdiag(self.mu_phi).mean()),
            "min_mu_phi": float(self._offdiag(self.mu_phi).min()),
            "max_mu_phi": float(self._offdiag(self.mu_phi).max()),
        }
        if self.n_records >= 2:
            out.update(
                E_sigma_epsilon=float(self.sigma_epsilon.mean()),
                min_sigma_epsilon=float(self.sigma_epsilon.min()),
                max_sigma_epsilon=float(self.sigma_epsilon.max()),
                E_sigma_phi=float(self._offdiag(self.sigma_phi).mean()),
                min_sigma_phi=float(self._offdiag(self.sigma_phi).min()),
                max_sigma_phi=float(self._offdiag(self.sigma_phi).max()),
            )
        return out

    def error_correlation(self) -> np.ndarray:
        """Sample correlation matrix of the variance errors across records."""
        if self.n_records < 2:
            raise DataQualityError("error correlation needs at least 2 records")
        with np.errstate(invalid="ignore"):
            rho = np.corrcoef(self.epsilon, rowvar=False)
        return np.atleast_2d(rho)


def evaluate_record(
    test_moments: SpectralMoments, target_moments: SpectralMoments
) -> tuple[np.ndarray, np.ndarray]:
    """(epsilon, phi) of a single test spectra set against the target."""
    eps = variance_error(test_moments, target_moments)
    phi = correlation_difference(test_moments, target_moments)
    return eps, phi


def aggregate(
    per_record: list[tuple[np.ndarray, np.ndarray]],
    labels: tuple[str, ...] | None = None,
    direction: float = 0.0,
    configuration: str = "SM",
) -> ErrorReport:
    """Stack per-record (epsilon, phi) pairs into an ErrorReport."""
    if not per_record:
        raise ConfigError("no records to aggregate")
    if len(per_record) < 2:
        warnings.warn("single record: standard deviations unavailable")
    eps = np.stack([e for e, _ in per_record])
    phi = np.stack([p for _, p in per_record])
    return ErrorReport(
        epsilon=eps,
        phi=phi,
        labels=labels,
        direction=direction,
        configuration=configuration,
    )
