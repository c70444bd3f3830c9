"""Pressure-tap ingestion: raw tunnel pressures -> floor force coefficients.

The chain is pressure_coefficients -> integrate_floor_forces ->
force_coefficients, all linear in the raw pressures.  Tributary integration
uses piecewise-constant pressure per tap polygon: each tap contributes
pressure * area * direction cosine to the floor forces and
pressure * area * lever arm to the floor torque.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataQualityError
from .records import BuildingGeometry, RecordSet, component_labels


@dataclass(frozen=True)
class Tap:
    """One pressure tap with its tributary influence on a floor resultant."""

    tap_id: str
    floor: int  # zero-based floor index
    area: float  # tributary polygon area, m^2
    nx: float  # outward-normal direction cosine, x
    ny: float  # outward-normal direction cosine, y
    lever_arm: float  # signed lever arm about the floor centroid, m


@dataclass(frozen=True)
class TapRecord:
    """Raw simultaneous pressure record plus the reference flow conditions."""

    taps: tuple[Tap, ...]
    pressures: np.ndarray  # [n_samples x n_taps], Pa
    sample_rate: float
    p0: float  # mean reference static pressure, Pa
    air_density: float  # kg/m^3
    u_h: float  # mean wind speed at model height, m/s
    direction: float = 0.0
    configuration: str = "SM"

    def __post_init__(self):
        p = np.asarray(self.pressures, dtype=float)
        if p.ndim != 2 or p.shape[1] != len(self.taps):
            raise ConfigError("pressures must be [n_samples x n_taps]")
        if not self.taps:
            raise ConfigError("record has no taps")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        object.__setattr__(self, "pressures", p)
        object.__setattr__(self, "taps", tuple(self.taps))

    @property
    def dynamic_pressure(self) -> float:
        """q = rho * U_H^2 / 2, Pa."""
        return 0.5 * self.air_density * self.u_h**2


def pressure_coefficients(raw: TapRecord) -> np.ndarray:
    """External pressure coefficients C_p,e(t) = (p(t) - p0) / q per tap."""
    q = raw.dynamic_pressure
    if q <= 0:
        raise DataQualityError(f"non-positive dynamic pressure q={q}")
    bad = np.argwhere(np.isnan(raw.pressures))
    if bad.size:
        s, t = bad[0]
        raise DataQualityError(
            f"NaN pressure at tap {raw.taps[t].tap_id!r}, sample {s}"
        )
    return (raw.pressures - raw.p0) / q


def integrate_floor_forces(
    cp: np.ndarray, geom: BuildingGeometry, taps: tuple[Tap, ...], q: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate tap pressures into per-floor resultants (F_x, F_y, T_z).

    Returns three [n_samples x n_floors] arrays in N (forces) and N*m
    (torque).  ``cp`` are pressure coefficients; ``q`` converts them back to
    pressures.
    """
    cp = np.asarray(cp, dtype=float)
    if cp.shape[1] != len(taps):
        raise ConfigError("coefficient matrix does not match tap count")
    floors = np.array([t.floor for t in taps])
    if floors.min() < 0 or floors.max() >= geom.n_floors:
        raise ConfigError("tap assigned to a floor outside the geometry")
    missing = set(range(geom.n_floors)) - set(floors.tolist())
    if missing:
        raise ConfigError(f"floors with no taps: {sorted(missing)}")
    areas = np.array([t.area for t in taps])
    if np.any(areas <= 0):
        bad = [t.tap_id for t, a in zip(taps, areas) if a <= 0]
        raise ConfigError(f"taps without positive tributary area: {bad}")

    pressures = q * cp  # back to Pa
    # per-tap weights for each resultant
    wx = areas * np.array([t.nx for t in taps])
    wy = areas * np.array([t.ny for t in taps])
    wt = areas * np.array([t.lever_arm for t in taps])
    n_samples = cp.shape[0]
    fx = np.zeros((n_samples, geom.n_floors))
    fy = np.zeros((n_samples, geom.n_floors))
    tz = np.zeros((n_samples, geom.n_floors))
    for n in range(geom.n_floors):
        sel = floors == n
        fx[:, n] = pressures[:, sel] @ wx[sel]
        fy[:, n] = pressures[:, sel] @ wy[sel]
        tz[:, n] = pressures[:, sel] @ wt[sel]
    return fx, fy, tz


def force_coefficients(
    fx: np.ndarray,
    fy: np.ndarray,
    tz: np.ndarray,
    geom: BuildingGeometry,
    q: float,
    sample_rate: float,
    direction: float = 0.0,
    configuration: str = "SM",
) -> RecordSet:
    """Normalize floor resultants into a zero-mean force-coefficient RecordSet.

    CF_x = F_x / (q B_x H), CF_y = F_y / (q B_y H),
    CT_z = T_z / (q H B_max^2 / 2).  Column means are removed and stored
    separately on the RecordSet.
    """
    if q <= 0:
        raise ConfigError("dynamic pressure must be positive")
    cfx = fx / (q * geom.b_x * geom.height)
    cfy = fy / (q * geom.b_y * geom.height)
    ctz = tz / (q * geom.height * geom.b_max**2 / 2.0)
    comp = np.hstack([cfx, cfy, ctz])
    means = comp.mean(axis=0)
    return RecordSet(
        components=comp - means,
        sample_rate=sample_rate,
        labels=component_labels(geom.n_floors),
        means=means,
        direction=direction,
        configuration=configuration,
    )


def ingest(raw: TapRecord, geom: BuildingGeometry) -> RecordSet:
    """Full chain from a raw tap record to a force-coefficient RecordSet."""
    cp = pressure_coefficients(raw)
    q = raw.dynamic_pressure
    fx, fy, tz = integrate_floor_forces(cp, geom, raw.taps, q)
    return force_coefficients(
        fx, fy, tz, geom, q, raw.sample_rate, raw.direction, raw.configuration
    )
