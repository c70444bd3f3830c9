"""Report figures rendered next to the delimited study outputs.

Everything draws on the Agg backend and writes straight to file; no figure is
ever shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.dpi": 120,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "savefig.bbox": "tight",
    }
)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def error_bars(mu: np.ndarray, sigma: np.ndarray | None, path: str | Path,
               ylabel: str, title: str = "") -> Path:
    """Per-component mean error with +-1 std whiskers."""
    x = np.arange(1, mu.size + 1)
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    if sigma is not None:
        ax.errorbar(x, mu, yerr=sigma, fmt="o", ms=3.5, capsize=2.5, lw=1)
    else:
        ax.plot(x, mu, "o", ms=3.5)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("component")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def matrix_map(matrix: np.ndarray, path: str | Path, title: str = "",
               symmetric: bool = True) -> Path:
    """Heat map of a component-pair matrix (phi maps, correlation maps)."""
    fig, ax = plt.subplots(figsize=(4.4, 3.8))
    if symmetric:
        limit = np.abs(matrix).max() or 1.0
        im = ax.imshow(matrix, cmap="RdBu_r", vmin=-limit, vmax=limit,
                       origin="lower")
    else:
        im = ax.imshow(matrix, cmap="viridis", origin="lower")
    ax.set_xlabel("component j")
    ax.set_ylabel("component i")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.grid(False)
    return _save(fig, path)


def psd_overlay(frequencies: np.ndarray, target_psd: np.ndarray,
                typical_psds: list[np.ndarray], path: str | Path,
                label: str = "") -> Path:
    """Target PSD against a handful of single-record estimates."""
    f_hz = frequencies / (2.0 * np.pi)
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for k, psd in enumerate(typical_psds):
        ax.loglog(f_hz[1:], psd[1:], color="0.7", lw=0.7,
                  label="typical" if k == 0 else None)
    ax.loglog(f_hz[1:], target_psd[1:], color="C3", lw=1.6, label="target")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel(f"PSD {label}".strip())
    ax.legend(loc="lower left")
    return _save(fig, path)


def convergence_curves(sample_sizes: np.ndarray, series: dict[str, np.ndarray],
                       path: str | Path, ylabel: str) -> Path:
    """Error statistics against Monte Carlo sample size (log-log)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for name, values in series.items():
        ax.loglog(sample_sizes, np.abs(values), "o-", ms=4, label=name)
    ax.set_xlabel("sample size")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)


def truncation_curve(n_modes: np.ndarray, e_mu_eps: np.ndarray,
                     captured: np.ndarray, path: str | Path) -> Path:
    """Expected variance error and captured energy against mode count."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(n_modes, e_mu_eps, "o-", color="C0", ms=4)
    ax.set_xlabel("contributing modes")
    ax.set_ylabel(r"E[$\mu_\varepsilon$] [%]", color="C0")
    ax2 = ax.twinx()
    ax2.plot(n_modes, 100.0 * captured, "s--", color="C1", ms=4)
    ax2.set_ylabel("captured energy [%]", color="C1")
    ax2.grid(False)
    return _save(fig, path)
