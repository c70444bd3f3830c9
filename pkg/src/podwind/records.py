"""Core time-series containers: building geometry and force-coefficient records.

A RecordSet holds the fluctuating (zero-mean) force-coefficient time series for
one wind direction and tunnel configuration.  Component ordering is fixed:
the x-force block first (one column per floor), then the y-force block, then
the z-torque block, so N = 3 * n_floors always.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConfigError, DataQualityError

# Reduced variate approximating the expected peak of a standardized Gaussian
# process; divides each zero-mean component together with its sample std.
GAMMA_R = 3.5


@dataclass(frozen=True)
class BuildingGeometry:
    """Plan dimensions and floor layout of the building model (model scale, m)."""

    n_floors: int
    height: float
    b_x: float
    b_y: float
    floor_elevations: np.ndarray

    def __post_init__(self):
        if self.n_floors < 1:
            raise ConfigError("geometry requires at least one floor")
        if self.height <= 0 or self.b_x <= 0 or self.b_y <= 0:
            raise ConfigError("geometry dimensions must be positive")
        elev = np.asarray(self.floor_elevations, dtype=float)
        if elev.shape != (self.n_floors,):
            raise ConfigError("floor_elevations must have one entry per floor")
        if np.any(np.diff(elev) <= 0):
            raise ConfigError("floor elevations must be strictly increasing")
        object.__setattr__(self, "floor_elevations", elev)

    @property
    def b_max(self) -> float:
        return max(self.b_x, self.b_y)


def component_labels(n_floors: int) -> list[str]:
    """Ordered labels CF_x_1..CF_x_nf, CF_y_1.., CT_z_1.. (x, y, z blocks)."""
    out = []
    for prefix in ("CF_x", "CF_y", "CT_z"):
        out.extend(f"{prefix}_{n+1}" for n in range(n_floors))
    return out


@dataclass(frozen=True)
class RecordSet:
    """Multi-channel fluctuating force-coefficient record.

    ``components`` is [n_samples x N] and zero-mean per column; the removed
    means live in ``means``.  After standardization the per-column scale
    (sigma * gamma_r) is retained in ``scale`` so the transform is an exact
    bijection.
    """

    components: np.ndarray
    sample_rate: float
    labels: tuple[str, ...]
    means: np.ndarray
    direction: float = 0.0
    configuration: str = "SM"
    scale: np.ndarray | None = None

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if comp.ndim != 2:
            raise ConfigError("components must be a 2-D [n_samples x N] array")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if len(self.labels) != comp.shape[1]:
            raise ConfigError(
                f"{len(self.labels)} labels for {comp.shape[1]} components"
            )
        means = np.asarray(self.means, dtype=float)
        if means.shape != (comp.shape[1],):
            raise ConfigError("means must have one entry per component")
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.scale is not None:
            scale = np.asarray(self.scale, dtype=float)
            if scale.shape != (comp.shape[1],):
                raise ConfigError("scale must have one entry per component")
            object.__setattr__(self, "scale", scale)

    @property
    def n_samples(self) -> int:
        return self.components.shape[0]

    @property
    def n_components(self) -> int:
        return self.components.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate


def standardize(rs: RecordSet) -> RecordSet:
    """Rescale each zero-mean component by sigma * gamma_r (gamma_r = 3.5).

    The scale vector is stored on the returned RecordSet so
    :func:`destandardize` inverts the transform exactly.  Components with
    zero sample variance abort: downstream correlation coefficients would be
    undefined.
    """
    if rs.scale is not None:
        raise DataQualityError("record is already standardized")
    sigma = rs.components.std(axis=0, ddof=0)
    bad = np.flatnonzero(sigma == 0.0)
    if bad.size:
        names = ", ".join(rs.labels[i] for i in bad)
        raise DataQualityError(f"degenerate (zero-variance) components: {names}")
    scale = sigma * GAMMA_R
    return replace(rs, components=rs.components / scale, scale=scale)


def destandardize(rs: RecordSet) -> RecordSet:
    """Exact inverse of :func:`standardize` given the stored scale vector."""
    if rs.scale is None:
        raise DataQualityError("record carries no scale vector")
    return replace(rs, components=rs.components * rs.scale, scale=None)


def _chop(rs: RecordSet, start: int, stop: int) -> RecordSet:
    """Slice a sample range into a new RecordSet with per-segment mean removal."""
    block = rs.components[start:stop]
    seg_means = block.mean(axis=0)
    return replace(
        rs,
        components=block - seg_means,
        means=rs.means + seg_means,
    )


def split_records(
    rs: RecordSet,
    target_duration: float = 600.0,
    record_duration: float = 32.0,
) -> tuple[RecordSet, list[RecordSet]]:
    """Split a long repetition into a target-defining part and testing records.

    The first ``target_duration`` seconds are reserved for target-spectra
    estimation; the remainder is chopped into non-overlapping
    ``record_duration`` segments treated as independent records.  A trailing
    partial segment is discarded.  Mean removal is applied per segment.
    """
    n_target = int(round(target_duration * rs.sample_rate))
    n_record = int(round(record_duration * rs.sample_rate))
    if n_target <= 0 or n_record <= 0:
        raise ConfigError("durations must be positive")
    if rs.n_samples < n_target + n_record:
        raise DataQualityError(
            f"split needs {(n_target + n_record) / rs.sample_rate:.1f} s, "
            f"record has {rs.duration:.1f} s"
        )
    target = _chop(rs, 0, n_target)
    n_testing = (rs.n_samples - n_target) // n_record
    testing = [
        _chop(rs, n_target + k * n_record, n_target + (k + 1) * n_record)
        for k in range(n_testing)
    ]
    if not testing:
        warnings.warn("no full testing record fits after the target split")
    return target, testing


def split_target_segments(target: RecordSet, segment_duration: float = 4.0) -> list[RecordSet]:
    """Chop the target part into non-overlapping segments for ensemble averaging."""
    n_seg = int(round(segment_duration * target.sample_rate))
    if n_seg <= 0 or n_seg > target.n_samples:
        raise ConfigError("segment duration out of range")
    count = target.n_samples // n_seg
    return [_chop(target, k * n_seg, (k + 1) * n_seg) for k in range(count)]
