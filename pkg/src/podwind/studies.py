"""Study orchestration: record variability, model error, and mode truncation.

Each run reads a plain-text key=value config, executes one of the three
studies against the synthetic ground-truth model (or ingested record
archives), and emits delimited tables, rendered figures, and a manifest
sufficient to reproduce the run bit-identically.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from . import plots
from .archive import load_recordset, read_keyvalues, save_cpsd, write_keyvalues
from .exceptions import ConfigError, DataQualityError
from .metrics import (
    ErrorReport,
    aggregate,
    correlation_difference,
    evaluate_record,
    moments,
    variance_error,
)
from .pod import captured_energy, decompose
from .records import GAMMA_R, RecordSet, split_records, split_target_segments
from .simulate import SimulationPlan, simulate_batch
from .spectral import CpsdMatrix, WelchConfig, target_cpsd, truncate_to_cutoff, welch_cpsd
from .synthetic import SyntheticSpec, analytic_cpsd, sample_records, simulation_grid

_TWO_PI = 2.0 * np.pi

STUDIES = ("variability", "model-error", "truncation")


@dataclass
class StudyConfig:
    study: str = "variability"
    source: str = "synthetic"  # or "records"
    record_paths: tuple[str, ...] = ()
    directions: tuple[float, ...] = (0.0,)
    configurations: tuple[str, ...] = ("SM",)
    window: str = "hanning"
    overlap: float = 0.5
    segment_seconds: float = 4.0
    cutoff_hz: float = 50.0
    record_seconds: float = 32.0
    target_seconds: float = 600.0
    n_target_segments: int = 750
    n_records: int = 45
    sample_sizes: tuple[int, ...] = (1000, 5000, 20000)
    mode_ladder: tuple[int, ...] = ()
    n_samples: int = 5000
    seed: int = 20240
    out_dir: str = "podwind-out"
    outlier_sigma: float = 5.0
    drop_outliers: bool = False
    # synthetic model overrides
    n_floors: int = 4
    sample_rate: float = 625.0
    psd_family: str = "kaimal"
    coherence_lambda: float = 0.04

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ConfigError(f"study must be one of {STUDIES}")
        if self.source not in ("synthetic", "records"):
            raise ConfigError("source must be 'synthetic' or 'records'")
        for ladder in (self.sample_sizes, self.mode_ladder):
            if ladder and np.any(np.diff(ladder) <= 0):
                raise ConfigError("ladders must be strictly increasing")
        if self.source == "records":
            missing = [p for p in self.record_paths if not Path(p).exists()]
            if missing:
                raise ConfigError(f"missing record archives: {missing}")

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            n_floors=self.n_floors,
            sample_rate=self.sample_rate,
            cutoff_hz=self.cutoff_hz,
            psd_family=self.psd_family,
            coherence_lambda=self.coherence_lambda,
        )

    def welch(self, sample_rate: float) -> WelchConfig:
        window = "hanning" if self.window in ("hann", "hanning") else "rectangular"
        return WelchConfig.from_seconds(
            self.segment_seconds, sample_rate, overlap=self.overlap, window=window
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "StudyConfig":
        raw = read_keyvalues(path)
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "StudyConfig":
        kwargs = {}
        by_name = {f.name: f for f in dc_fields(cls)}
        for key, value in raw.items():
            if key not in by_name:
                raise ConfigError(f"unknown config key {key!r}")
            default = by_name[key].default
            if key in ("record_paths", "configurations"):
                kwargs[key] = tuple(v for v in value.split(",") if v)
            elif key == "directions":
                kwargs[key] = tuple(float(v) for v in value.split(",") if v)
            elif key in ("sample_sizes", "mode_ladder"):
                kwargs[key] = tuple(int(v) for v in value.split(",") if v)
            elif isinstance(default, bool):
                kwargs[key] = value.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                kwargs[key] = int(value)
            elif isinstance(default, float):
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)

    def as_mapping(self) -> dict:
        out = {}
        for f in dc_fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


def _subseed(seed: int, *salt: int) -> int:
    return int(np.random.SeedSequence([seed, *salt]).generate_state(1)[0])


def standardize_cpsd(s: CpsdMatrix, gamma_r: float = GAMMA_R) -> tuple[CpsdMatrix, np.ndarray]:
    """Rescale a CPSD so every component integrates to 1/gamma_r^2.

    Mirrors the time-domain standardization: the scale vector is
    sigma * gamma_r with sigma from the spectral integral of this very grid,
    so the standardized variances are exactly equal.
    """
    mom = moments(s)
    if np.any(mom.variances <= 0):
        raise DataQualityError("cannot standardize a zero-variance component")
    scale = np.sqrt(mom.variances) * gamma_r
    vals = s.values / np.outer(scale, scale)[None, :, :]
    return CpsdMatrix(s.frequencies, vals, labels=s.labels), scale


def _zero_dc(s: CpsdMatrix) -> CpsdMatrix:
    """Zero the DC line: means are modeled separately from the fluctuations."""
    vals = s.values.copy()
    if abs(s.frequencies[0]) < 1e-12:
        vals[0] = 0.0
    return CpsdMatrix(s.frequencies, vals, labels=s.labels)


def flag_outlier_records(
    records: list[RecordSet], n_sigma: float
) -> list[int]:
    """Indices of records whose total variance deviates > n_sigma from the rest."""
    totals = np.array([rs.components.var(axis=0, ddof=0).sum() for rs in records])
    if totals.size < 3:
        return []
    mu, sd = totals.mean(), totals.std(ddof=1)
    if sd == 0:
        return []
    return np.flatnonzero(np.abs(totals - mu) > n_sigma * sd).tolist()


# -------------------------------------------------------------- output layer


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_grid(path: Path, matrix: np.ndarray) -> None:
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g")


def _write_manifest(out_dir: Path, cfg: StudyConfig, outputs: list[str],
                    notes: list[str] | None = None) -> None:
    mapping = cfg.as_mapping()
    canon = "\n".join(f"{k}={mapping[k]}" for k in sorted(mapping))
    digest = hashlib.sha256(canon.encode()).hexdigest()
    manifest = dict(mapping)
    manifest["config_sha256"] = digest
    for p in cfg.record_paths:
        manifest[f"input_sha256_{Path(p).name}"] = hashlib.sha256(
            Path(p).read_bytes()
        ).hexdigest()
    manifest["outputs"] = outputs
    if notes:
        manifest["notes"] = "; ".join(notes)
    write_keyvalues(out_dir / "run.manifest", manifest)


# ------------------------------------------------------------------- studies


def _load_case_records(cfg: StudyConfig, direction: float, configuration: str
                       ) -> tuple[list[RecordSet], list[RecordSet], list[str]]:
    """(target segments, testing records, notes) for one direction/config."""
    notes: list[str] = []
    if cfg.source == "synthetic":
        spec = cfg.synthetic_spec()
        salt = int(direction * 10)
        targets = sample_records(
            spec,
            _subseed(cfg.seed, 1, salt),
            cfg.n_target_segments,
            cfg.segment_seconds,
            direction=direction,
            configuration=configuration,
        )
        testing = sample_records(
            spec,
            _subseed(cfg.seed, 2, salt),
            cfg.n_records,
            cfg.record_seconds,
            direction=direction,
            configuration=configuration,
        )
        return targets, testing, notes
    targets, testing = [], []
    for path in cfg.record_paths:
        rs = load_recordset(path)
        if rs.direction != direction or rs.configuration != configuration:
            continue
        tgt, tests = split_records(rs, cfg.target_seconds, cfg.record_seconds)
        targets.extend(split_target_segments(tgt, cfg.segment_seconds))
        testing.extend(tests)
    return targets, testing, notes


def run_variability(cfg: StudyConfig, out_dir: str | Path | None = None
                    ) -> dict[tuple[float, str], ErrorReport]:
    """Record-variability study: typical spectra vs an ensemble target."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: dict[tuple[float, str], ErrorReport] = {}
    outputs: list[str] = []
    notes: list[str] = []
    for configuration in cfg.configurations:
        for direction in cfg.directions:
            targets, testing, case_notes = _load_case_records(
                cfg, direction, configuration
            )
            notes.extend(case_notes)
            if not testing:
                notes.append(
                    f"skipped {configuration} {direction}: no testing records"
                )
                warnings.warn(notes[-1])
                continue
            flagged = flag_outlier_records(testing, cfg.outlier_sigma)
            if flagged:
                notes.append(
                    f"{configuration} {direction}: flagged records {flagged}"
                )
                if cfg.drop_outliers:
                    testing = [r for i, r in enumerate(testing) if i not in flagged]
            target = truncate_to_cutoff(target_cpsd(targets), cfg.cutoff_hz)
            target_mom = moments(target)
            welch = cfg.welch(testing[0].sample_rate)
            per_record = []
            typical_psds = []
            for rs in testing:
                typ = truncate_to_cutoff(welch_cpsd(rs, welch), cfg.cutoff_hz)
                per_record.append(evaluate_record(moments(typ), target_mom))
                if len(typical_psds) < 8:
                    typical_psds.append(np.real(typ.values[:, 0, 0]))
            report = aggregate(
                per_record,
                labels=testing[0].labels,
                direction=direction,
                configuration=configuration,
            )
            results[(direction, configuration)] = report
            tag = f"{configuration}_d{direction:g}"
            outputs += _emit_variability(out, tag, report, target, typical_psds)
    if not results:
        raise DataQualityError("variability study produced no results")
    _write_manifest(out, cfg, outputs, notes)
    return results


def _emit_variability(out: Path, tag: str, report: ErrorReport,
                      target: CpsdMatrix, typical_psds: list[np.ndarray]
                      ) -> list[str]:
    labels = report.labels or tuple(
        f"comp_{i+1:03d}" for i in range(report.n_components)
    )
    rows = [
        [i + 1, labels[i], report.mu_epsilon[i], report.sigma_epsilon[i],
         report.epsilon[:, i].min(), report.epsilon[:, i].max()]
        for i in range(report.n_components)
    ]
    t1 = out / f"variance_error_{tag}.csv"
    _write_table(t1, ["component", "label", "mu_epsilon_pct",
                      "sigma_epsilon_pct", "min_pct", "max_pct"], rows)
    t2 = out / f"summary_{tag}.csv"
    _write_table(t2, ["statistic", "value"],
                 [[k, v] for k, v in report.summary().items()])
    g1 = out / f"phi_mu_{tag}.csv"
    _write_grid(g1, report.mu_phi)
    g2 = out / f"phi_sigma_{tag}.csv"
    _write_grid(g2, report.sigma_phi)
    g3 = out / f"rho_epsilon_{tag}.csv"
    _write_grid(g3, report.error_correlation())
    g4 = out / f"rho_target_{tag}.csv"
    _write_grid(g4, moments(target).correlations())
    f1 = plots.error_bars(report.mu_epsilon, report.sigma_epsilon,
                          out / f"variance_error_{tag}.png",
                          ylabel=r"$\varepsilon$ [%]",
                          title="variance error per component")
    f2 = plots.matrix_map(report.mu_phi, out / f"phi_mu_{tag}.png",
                          title=r"mean $\varphi$")
    f3 = plots.matrix_map(report.sigma_phi, out / f"phi_sigma_{tag}.png",
                          title=r"std of $\varphi$", symmetric=False)
    f4 = plots.matrix_map(report.error_correlation(),
                          out / f"rho_epsilon_{tag}.png",
                          title=r"$\rho_\varepsilon$")
    f5 = plots.psd_overlay(target.frequencies,
                           np.real(target.values[:, 0, 0]), typical_psds,
                           out / f"psd_overlay_{tag}.png", label=labels[0])
    files = [t1, t2, g1, g2, g3, g4, f1, f2, f3, f4, f5]
    return [str(p.name) for p in files]


def _calibrated_modes(cfg: StudyConfig, direction: float, configuration: str):
    """Standardized target spectra and their spectral modes for simulation."""
    if cfg.source == "synthetic":
        spec = cfg.synthetic_spec()
        grid = simulation_grid(spec, cfg.segment_seconds)
        target = analytic_cpsd(spec, grid)
    else:
        targets, _, _ = _load_case_records(cfg, direction, configuration)
        if len(targets) < 2:
            raise DataQualityError("not enough target segments in record archives")
        target = truncate_to_cutoff(target_cpsd(targets), cfg.cutoff_hz)
    target = _zero_dc(target)
    target_std, scale = standardize_cpsd(target)
    modes = decompose(target_std)
    return target_std, scale, modes


def _simulated_errors(cfg: StudyConfig, modes, target_mom, n_samples: int,
                      n_modes: int, salt: int) -> tuple[np.ndarray, np.ndarray]:
    plan = SimulationPlan(
        modes=modes,
        n_modes=n_modes,
        duration=cfg.segment_seconds,
        dt=1.0 / cfg.sample_rate,
        n_realizations=n_samples,
        seed=_subseed(cfg.seed, 3, salt),
    )
    acc, _ = simulate_batch(plan)
    sim_mom = moments(acc.spectra())
    eps = variance_error(sim_mom, target_mom)
    phi = correlation_difference(sim_mom, target_mom)
    return eps, phi


def run_model_error(cfg: StudyConfig, out_dir: str | Path | None = None) -> dict:
    """Model-error convergence over the sample-size ladder (all modes)."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    direction = cfg.directions[0]
    configuration = cfg.configurations[0]
    target_std, _, modes = _calibrated_modes(cfg, direction, configuration)
    target_mom = moments(target_std)
    rows, eps_rms, e_mu_eps, e_mu_phi = [], [], [], []
    reports = {}
    for i, n in enumerate(cfg.sample_sizes):
        eps, phi = _simulated_errors(
            cfg, modes, target_mom, n, modes.n_components, salt=i
        )
        report = ErrorReport(epsilon=eps, phi=phi, labels=modes.labels,
                             direction=direction, configuration=configuration)
        reports[n] = report
        s = report.summary()
        rms = float(np.sqrt(np.mean(eps**2)))
        eps_rms.append(rms)
        e_mu_eps.append(s["E_mu_epsilon"])
        e_mu_phi.append(s["E_mu_phi"])
        rows.append([n, s["E_mu_epsilon"], s["min_mu_epsilon"],
                     s["max_mu_epsilon"], rms, s["E_mu_phi"],
                     s["min_mu_phi"], s["max_mu_phi"]])
    table = out / "convergence.csv"
    _write_table(table, ["n_samples", "E_mu_epsilon_pct", "min_mu_epsilon_pct",
                         "max_mu_epsilon_pct", "rms_mu_epsilon_pct",
                         "E_mu_phi", "min_mu_phi", "max_mu_phi"], rows)
    fig = plots.convergence_curves(
        np.array(cfg.sample_sizes),
        {
            r"RMS $\mu_\varepsilon$ [%]": np.array(eps_rms),
            r"|E[$\mu_\varepsilon$]| [%]": np.array(e_mu_eps),
            r"|E[$\mu_\varphi$]|": np.array(e_mu_phi),
        },
        out / "convergence.png",
        ylabel="error magnitude",
    )
    save_cpsd(out / "target_standardized.cpsd", target_std)
    _write_manifest(out, cfg, [table.name, fig.name, "target_standardized.cpsd"])
    return {"table": rows, "reports": reports, "rms_mu_epsilon": eps_rms}


def run_truncation(cfg: StudyConfig, out_dir: str | Path | None = None) -> dict:
    """Truncation study over the mode ladder at a fixed sample size."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    direction = cfg.directions[0]
    configuration = cfg.configurations[0]
    target_std, _, modes = _calibrated_modes(cfg, direction, configuration)
    target_mom = moments(target_std)
    ladder = cfg.mode_ladder or tuple(
        sorted({1, 2, modes.n_components // 4, modes.n_components // 2,
                3 * modes.n_components // 4, modes.n_components} - {0})
    )
    rows, fractions, e_mu = [], [], []
    outputs = []
    reports = {}
    for i, n_m in enumerate(ladder):
        _, frac = captured_energy(modes, n_m)
        eps, phi = _simulated_errors(
            cfg, modes, target_mom, cfg.n_samples, n_m, salt=100 + i
        )
        report = ErrorReport(epsilon=eps, phi=phi, labels=modes.labels,
                             direction=direction, configuration=configuration)
        reports[n_m] = report
        s = report.summary()
        fractions.append(frac)
        e_mu.append(s["E_mu_epsilon"])
        rows.append([n_m, frac, s["E_mu_epsilon"], s["min_mu_epsilon"],
                     s["max_mu_epsilon"], s["E_mu_phi"], s["min_mu_phi"],
                     s["max_mu_phi"]])
        grid = out / f"phi_mu_modes_{n_m:02d}.csv"
        _write_grid(grid, report.mu_phi)
        outputs.append(grid.name)
    table = out / "truncation.csv"
    _write_table(table, ["n_modes", "captured_energy_fraction",
                         "E_mu_epsilon_pct", "min_mu_epsilon_pct",
                         "max_mu_epsilon_pct", "E_mu_phi", "min_mu_phi",
                         "max_mu_phi"], rows)
    fig = plots.truncation_curve(np.array(ladder), np.array(e_mu),
                                 np.array(fractions), out / "truncation.png")
    _write_manifest(out, cfg, [table.name, fig.name] + outputs)
    return {"table": rows, "ladder": ladder, "captured": fractions,
            "E_mu_epsilon": e_mu, "reports": reports}


def run_study(cfg: StudyConfig, out_dir: str | Path | None = None):
    if cfg.study == "variability":
        return run_variability(cfg, out_dir)
    if cfg.study == "model-error":
        return run_model_error(cfg, out_dir)
    return run_truncation(cfg, out_dir)
