"""Command-line entry point.

Subcommands: ingest, spectra, target, decompose, simulate, errors, study.
Exit codes: 0 success, 2 configuration error, 3 data-quality error,
4 numerical failure.

Heavy imports happen after argument parsing so --threads can cap the BLAS
thread pools via environment variables before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="podwind",
        description="Data-driven POD spectral-representation wind-load toolkit",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/FFT worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="pressure records -> force-coefficient archive")
    p.add_argument("--layout", required=True, help="tap layout CSV")
    p.add_argument("--pressures", required=True, help="pressure record CSV (+ .meta)")
    p.add_argument("--geometry", required=True, help="building geometry key=value file")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", required=True, help="output RecordSet archive")

    p = sub.add_parser("spectra", help="Welch CPSD of one record archive")
    p.add_argument("--record", required=True)
    p.add_argument("--window", choices=["rect", "hann"], default="hann")
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--segment-seconds", type=float, default=4.0)
    p.add_argument("--cutoff-hz", type=float, default=None)
    p.add_argument("--lowpass-hz", type=float, default=None,
                   help="apply the zero-phase Butterworth pre-filter first")
    p.add_argument("--out", required=True)

    p = sub.add_parser("target", help="ensemble-average target CPSD over records")
    p.add_argument("--records", nargs="+", required=True)
    p.add_argument("--cutoff-hz", type=float, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("decompose", help="CPSD archive -> spectral modes archive")
    p.add_argument("--cpsd", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="generate realizations from a modes archive")
    p.add_argument("--modes-file", required=True)
    p.add_argument("--n-modes", type=int, default=None)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration-s", type=float, default=None,
                   help="default: one full period of the frequency grid")
    p.add_argument("--dt-s", type=float, required=True)
    p.add_argument("--summary-only", action="store_true",
                   help="emit only the ensemble CPSD, not the realizations")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("errors", help="error measures of test spectra vs a target")
    p.add_argument("--test", nargs="+", required=True, help="test CPSD archives")
    p.add_argument("--target", required=True, help="target CPSD archive")
    p.add_argument("--cutoff-hz", type=float, default=None)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("study", help="run a configured study end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out-dir", default=None, help="override config out_dir")

    return parser


def _cmd_ingest(args) -> int:
    from .archive import load_tap_record, read_keyvalues, parse_floats, save_recordset
    from .ingest import ingest
    from .records import BuildingGeometry, standardize

    geo = read_keyvalues(args.geometry)
    geom = BuildingGeometry(
        n_floors=int(geo["n_floors"]),
        height=float(geo["height_m"]),
        b_x=float(geo["b_x_m"]),
        b_y=float(geo["b_y_m"]),
        floor_elevations=parse_floats(geo["floor_elevations_m"]),
    )
    raw = load_tap_record(args.pressures, args.layout)
    rs = ingest(raw, geom)
    if args.standardize:
        rs = standardize(rs)
    save_recordset(args.out, rs)
    print(f"wrote {args.out} ({rs.n_components} components, "
          f"{rs.n_samples} samples)")
    return 0


def _cmd_spectra(args) -> int:
    from .archive import load_recordset, save_cpsd
    from .spectral import FilterSpec, WelchConfig, lowpass, truncate_to_cutoff, welch_cpsd

    rs = load_recordset(args.record)
    if args.lowpass_hz:
        rs = lowpass(rs, FilterSpec(cutoff_hz=args.lowpass_hz))
    cfg = WelchConfig.from_seconds(
        args.segment_seconds,
        rs.sample_rate,
        overlap=args.overlap,
        window="hanning" if args.window == "hann" else "rectangular",
    )
    s = welch_cpsd(rs, cfg)
    if args.cutoff_hz:
        s = truncate_to_cutoff(s, args.cutoff_hz)
    save_cpsd(args.out, s)
    print(f"wrote {args.out} ({s.n_lines} lines x {s.n_components}^2)")
    return 0


def _cmd_target(args) -> int:
    from .archive import load_recordset, save_cpsd
    from .spectral import target_cpsd, truncate_to_cutoff

    records = [load_recordset(p) for p in args.records]
    s = target_cpsd(records)
    if args.cutoff_hz:
        s = truncate_to_cutoff(s, args.cutoff_hz)
    save_cpsd(args.out, s)
    print(f"wrote {args.out} from {len(records)} records")
    return 0


def _cmd_decompose(args) -> int:
    from .archive import load_cpsd, save_modes
    from .pod import decompose

    modes = decompose(load_cpsd(args.cpsd))
    save_modes(args.out, modes)
    print(f"wrote {args.out} ({modes.n_lines} lines, "
          f"{modes.n_components} modes)")
    return 0


def _cmd_simulate(args) -> int:
    from .archive import load_modes, save_cpsd, save_recordset
    from .simulate import SimulationPlan, simulate_batch, simulate_realization

    modes = load_modes(args.modes_file)
    duration = args.duration_s or 2.0 * 3.141592653589793 / modes.delta_omega
    plan = SimulationPlan(
        modes=modes,
        n_modes=args.n_modes or modes.n_components,
        duration=duration,
        dt=args.dt_s,
        n_realizations=args.samples,
        seed=args.seed,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.summary_only:
        acc, _ = simulate_batch(plan)
        save_cpsd(out / "ensemble.cpsd", acc.spectra())
        print(f"wrote {out / 'ensemble.cpsd'} over {acc.count} realizations")
    else:
        for r in range(plan.n_realizations):
            save_recordset(out / f"realization_{r:05d}.csv",
                           simulate_realization(plan, r))
        print(f"wrote {plan.n_realizations} realizations to {out}")
    return 0


def _cmd_errors(args) -> int:
    from .archive import load_cpsd
    from .metrics import aggregate, evaluate_record, moments
    from .plots import error_bars, matrix_map
    from .studies import _write_grid, _write_table

    target = moments(load_cpsd(args.target), cutoff_hz=args.cutoff_hz)
    per_record = [
        evaluate_record(moments(load_cpsd(p), cutoff_hz=args.cutoff_hz), target)
        for p in args.test
    ]
    report = aggregate(per_record)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_table(
        out / "summary.csv",
        ["statistic", "value"],
        [[k, v] for k, v in report.summary().items()],
    )
    _write_grid(out / "phi_mu.csv", report.mu_phi)
    error_bars(report.mu_epsilon,
               report.sigma_epsilon if report.n_records >= 2 else None,
               out / "variance_error.png", ylabel="epsilon [%]")
    matrix_map(report.mu_phi, out / "phi_mu.png", title="mean phi")
    for key, value in report.summary().items():
        print(f"{key}={value}")
    return 0


def _cmd_study(args) -> int:
    from .studies import StudyConfig, run_study

    cfg = StudyConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    run_study(cfg)
    print(f"study '{cfg.study}' complete; outputs in {cfg.out_dir}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "spectra": _cmd_spectra,
    "target": _cmd_target,
    "decompose": _cmd_decompose,
    "simulate": _cmd_simulate,
    "errors": _cmd_errors,
    "study": _cmd_study,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from .exceptions import ConfigError, DataQualityError, NumericalError

    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataQualityError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
