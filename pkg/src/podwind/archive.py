"""On-disk formats: delimited record archives, binary spectra archives, and
plain-text key=value sidecars.

The CPSD and modes archives are a UTF-8 key=value header terminated by a
``---BINARY---`` line, followed by flat little-endian float64 data.  Complex
arrays are interleaved (Re, Im), ordered frequency-major then row-major, and
round-trip bit-exactly.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DataQualityError
from .ingest import Tap, TapRecord
from .pod import SpectralModes
from .records import RecordSet
from .spectral import CpsdMatrix

_BINARY_MARK = b"---BINARY---\n"


# ---------------------------------------------------------------- key=value


def write_keyvalues(path: str | Path, data: dict) -> None:
    with open(path, "w") as fh:
        for key, value in data.items():
            fh.write(f"{key}={_fmt(value)}\n")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        # repr of the builtin float is shortest-exact; numpy scalars are not
        return repr(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def read_keyvalues(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def parse_floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v != ""])


# ------------------------------------------------------------ record archive


def save_recordset(path: str | Path, rs: RecordSet) -> None:
    """Write the delimited time series plus a .meta sidecar."""
    path = Path(path)
    header = "time," + ",".join(
        f"comp_{i+1:03d}" for i in range(rs.n_components)
    )
    t = rs.time()[:, None]
    np.savetxt(
        path,
        np.hstack([t, rs.components]),
        delimiter=",",
        header=header,
        comments="",
        fmt="%.17g",
    )
    meta = {
        "sample_rate_hz": rs.sample_rate,
        "direction_deg": rs.direction,
        "configuration": rs.configuration,
        "labels": list(rs.labels),
        "means": rs.means,
    }
    if rs.scale is not None:
        meta["scale"] = rs.scale
    write_keyvalues(path.with_suffix(path.suffix + ".meta"), meta)


def load_recordset(path: str | Path) -> RecordSet:
    path = Path(path)
    meta = read_keyvalues(path.with_suffix(path.suffix + ".meta"))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    scale = parse_floats(meta["scale"]) if "scale" in meta else None
    return RecordSet(
        components=data[:, 1:],
        sample_rate=float(meta["sample_rate_hz"]),
        labels=tuple(meta["labels"].split(",")),
        means=parse_floats(meta["means"]),
        direction=float(meta.get("direction_deg", "0")),
        configuration=meta.get("configuration", "SM"),
        scale=scale,
    )


# ----------------------------------------------------------- spectra archive


def _write_header(fh, kind: str, fields: dict) -> None:
    fh.write(f"PODWIND-{kind} 1\n".encode())
    for key, value in fields.items():
        fh.write(f"{key}={_fmt(value)}\n".encode())
    fh.write(_BINARY_MARK)


def _read_header(fh, kind: str) -> dict[str, str]:
    magic = fh.readline()
    if magic != f"PODWIND-{kind} 1\n".encode():
        raise ConfigError(f"not a {kind} archive (magic {magic!r})")
    fields: dict[str, str] = {}
    while True:
        line = fh.readline()
        if not line:
            raise ConfigError("truncated archive header")
        if line == _BINARY_MARK:
            return fields
        key, _, value = line.decode().rstrip("\n").partition("=")
        fields[key] = value


def _interleave(values: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(values, dtype=complex).ravel()
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def _deinterleave(raw: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    return (raw[0::2] + 1j * raw[1::2]).reshape(shape)


def save_cpsd(path: str | Path, s: CpsdMatrix) -> None:
    fields = {
        "n_components": s.n_components,
        "n_lines": s.n_lines,
        "delta_omega_rad_s": s.delta_omega if s.n_lines > 1 else 0.0,
        "omega_start_rad_s": float(s.frequencies[0]),
        "sided": s.sided,
        "labels": list(s.labels) if s.labels else "",
    }
    with open(path, "wb") as fh:
        _write_header(fh, "CPSD", fields)
        fh.write(_interleave(s.values).astype("<f8").tobytes())


def load_cpsd(path: str | Path) -> CpsdMatrix:
    with open(path, "rb") as fh:
        fields = _read_header(fh, "CPSD")
        n = int(fields["n_components"])
        n_lines = int(fields["n_lines"])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    expected = 2 * n_lines * n * n
    if raw.size != expected:
        raise DataQualityError(
            f"archive payload has {raw.size} floats, expected {expected}"
        )
    values = _deinterleave(raw, (n_lines, n, n))
    start = float(fields.get("omega_start_rad_s", "0"))
    freqs = start + np.arange(n_lines) * float(fields["delta_omega_rad_s"])
    labels = tuple(fields["labels"].split(",")) if fields.get("labels") else None
    s = CpsdMatrix(
        frequencies=freqs, values=values, sided=fields["sided"], labels=labels
    )
    s.validate(rtol=1e-9)
    return s


def save_modes(path: str | Path, m: SpectralModes) -> None:
    fields = {
        "n_components": m.n_components,
        "n_lines": m.n_lines,
        "delta_omega_rad_s": m.delta_omega,
        "omega_start_rad_s": float(m.frequencies[0]),
        "phase_convention": m.phase_convention,
        "labels": list(m.labels) if m.labels else "",
    }
    with open(path, "wb") as fh:
        _write_header(fh, "MODES", fields)
        fh.write(
            np.ascontiguousarray(m.eigenvalues).astype("<f8").tobytes()
        )
        fh.write(_interleave(m.eigenvectors).astype("<f8").tobytes())


def load_modes(path: str | Path) -> SpectralModes:
    with open(path, "rb") as fh:
        fields = _read_header(fh, "MODES")
        n = int(fields["n_components"])
        n_lines = int(fields["n_lines"])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    n_lam = n_lines * n
    expected = n_lam + 2 * n_lines * n * n
    if raw.size != expected:
        raise DataQualityError(
            f"archive payload has {raw.size} floats, expected {expected}"
        )
    lam = raw[:n_lam].reshape(n_lines, n).copy()
    vec = _deinterleave(raw[n_lam:], (n_lines, n, n))
    start = float(fields.get("omega_start_rad_s", "0"))
    freqs = start + np.arange(n_lines) * float(fields["delta_omega_rad_s"])
    labels = tuple(fields["labels"].split(",")) if fields.get("labels") else None
    return SpectralModes(
        frequencies=freqs,
        eigenvalues=lam,
        eigenvectors=vec,
        labels=labels,
        phase_convention=fields.get("phase_convention", ""),
    )


# ------------------------------------------------------------- tap ingestion


def load_tap_layout(path: str | Path) -> tuple[Tap, ...]:
    """Delimited layout: tap_id, floor, area_m2, nx, ny, lever_arm_m."""
    taps = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#") or line.lower().startswith("tap_id"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 6:
            raise ConfigError(f"{path}:{lineno}: expected 6 columns")
        taps.append(
            Tap(
                tap_id=parts[0],
                floor=int(parts[1]),
                area=float(parts[2]),
                nx=float(parts[3]),
                ny=float(parts[4]),
                lever_arm=float(parts[5]),
            )
        )
    if not taps:
        raise ConfigError(f"{path}: no taps found")
    return tuple(taps)


def load_tap_record(
    pressures_path: str | Path, layout_path: str | Path
) -> TapRecord:
    """Pressure CSV (`time,tap_...` header, Pa) plus its key=value sidecar."""
    pressures_path = Path(pressures_path)
    taps = load_tap_layout(layout_path)
    meta = read_keyvalues(
        pressures_path.with_suffix(pressures_path.suffix + ".meta")
    )
    data = np.loadtxt(pressures_path, delimiter=",", skiprows=1, ndmin=2)
    return TapRecord(
        taps=taps,
        pressures=data[:, 1:],
        sample_rate=float(meta["sample_rate_hz"]),
        p0=float(meta["p0_pa"]),
        air_density=float(meta["rho_kg_m3"]),
        u_h=float(meta["uh_m_s"]),
        direction=float(meta.get("direction_deg", "0")),
        configuration=meta.get("configuration", "SM"),
    )
