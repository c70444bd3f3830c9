"""Data-driven POD spectral-representation modeling of stochastic wind loads.

Pipeline: ingest pressure-tap records into floor force coefficients, estimate
smoothed and ensemble-target PSD/CPSD matrices, decompose them into spectral
modes, simulate Gaussian load realizations, and quantify record-variability,
model, and mode-truncation errors.
"""

from .exceptions import ConfigError, DataQualityError, NumericalError, PodwindError
from .records import BuildingGeometry, GAMMA_R, RecordSet, destandardize, split_records, standardize
from .ingest import Tap, TapRecord, force_coefficients, ingest, integrate_floor_forces, pressure_coefficients
from .spectral import (
    CpsdMatrix,
    FilterSpec,
    WelchConfig,
    lowpass,
    raw_periodogram,
    target_cpsd,
    truncate_to_cutoff,
    welch_cpsd,
)
from .pod import SpectralModes, captured_energy, decompose, reconstruct
from .simulate import (
    EnsembleAccumulator,
    SimulationPlan,
    random_phases,
    simulate_batch,
    simulate_realization,
    simulate_subprocess,
    stream_realizations,
)
from .metrics import (
    ErrorReport,
    SpectralMoments,
    aggregate,
    correlation_difference,
    moments,
    variance_error,
)
from .synthetic import SyntheticSpec, analytic_cpsd, sample_records, simulation_grid
from .studies import StudyConfig, run_model_error, run_study, run_truncation, run_variability

__version__ = "0.1.0"
