"""Figure rendering for the report path.

Each function writes one PNG next to the delimited output it illustrates
and returns the path. Rendering always uses the Agg backend so the CLI
works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .hamiltonian import HARTREE_TO_EV

_VALENCE_COLOR = "#1f6fb4"
_CONDUCTION_COLOR = "#c23b22"


def band_figure(bands, path: str | Path) -> Path:
    """Quasiparticle bands along the k-path with error bars."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for kind, color in (("valence", _VALENCE_COLOR), ("conduction", _CONDUCTION_COLOR)):
        xs, ys, errs = [], [], []
        for pt in bands.points:
            energies = getattr(pt, kind)
            errors = getattr(pt, f"{kind}_err")
            for e, s in zip(energies, errors):
                xs.append(pt.kpoint.path_distance)
                ys.append(e)
                errs.append(s)
        ax.errorbar(
            xs, ys, yerr=errs, fmt="o-", ms=5, lw=1.2, capsize=2.5,
            color=color, label=kind,
        )
    ticks = sorted({pt.kpoint.path_distance: pt.kpoint.label for pt in bands.points}.items())
    ax.set_xticks([t for t, _ in ticks])
    ax.set_xticklabels([l for _, l in ticks])
    ax.axhline(0.0, color="0.6", lw=0.8, ls=":")
    ax.set_ylabel("quasiparticle energy (eV)")
    ax.set_xlabel("k-path")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def trace_figure(trace, exact_energy: float, path: str | Path, title: str = "") -> Path:
    """Optimization energy per parameter update against the exact value."""
    path = Path(path)
    energies = np.array([pt.energy for pt in trace.points])
    errors = np.array([pt.stderr for pt in trace.points])
    rel = (energies - exact_energy) * HARTREE_TO_EV
    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    ax.errorbar(
        np.arange(1, rel.size + 1), rel, yerr=errors * HARTREE_TO_EV,
        fmt="o-", ms=4, lw=1.0, color=_VALENCE_COLOR,
    )
    ax.axhline(0.0, color="0.3", lw=0.9)
    for bound in (0.0434, -0.0434):
        ax.axhline(bound, color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("parameter update")
    ax.set_ylabel("energy above exact (eV)")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def histogram_figure(
    samples: dict[str, list[float]],
    exact_levels: dict[str, list[float]],
    path: str | Path,
    title: str = "",
) -> Path:
    """Distribution of repeat outcomes against the ideal values."""
    path = Path(path)
    kinds = [k for k in ("valence_ev", "conduction_ev") if samples.get(k)]
    fig, axes = plt.subplots(1, max(len(kinds), 1), figsize=(5.2 * max(len(kinds), 1), 3.6))
    if len(kinds) <= 1:
        axes = [axes]
    for ax, kind in zip(axes, kinds):
        values = samples[kind]
        color = _VALENCE_COLOR if kind.startswith("valence") else _CONDUCTION_COLOR
        ax.hist(values, bins=12, color=color, alpha=0.75)
        ax.axvline(float(np.mean(values)), color="k", lw=1.4, label="mean")
        for ideal in exact_levels.get(kind, []):
            ax.axvline(ideal, color="0.35", lw=1.2, ls="--", label="ideal")
        ax.set_xlabel(f"{kind.replace('_ev', '')} energy (eV)")
        ax.set_ylabel("repeats")
        handles, labels = ax.get_legend_handles_labels()
        seen: dict[str, object] = {}
        for h, l in zip(handles, labels):
            seen.setdefault(l, h)
        ax.legend(seen.values(), seen.keys(), frameon=False, fontsize=8)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def zne_figure(record: dict, path: str | Path) -> Path:
    """Measured energies versus fold factor with the linear extrapolation."""
    path = Path(path)
    exact = record["exact_hartree"]
    lams = [p["lambda"] for p in record["points"]]
    vals = [(p["energy_hartree"] - exact) * HARTREE_TO_EV for p in record["points"]]
    errs = [p["stderr_hartree"] * HARTREE_TO_EV for p in record["points"]]
    v0 = (record["extrapolated_hartree"] - exact) * HARTREE_TO_EV
    s0 = record["extrapolated_stderr_hartree"] * HARTREE_TO_EV

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.errorbar(lams, vals, yerr=errs, fmt="s", ms=6, color=_CONDUCTION_COLOR,
                capsize=3, label="measured")
    ax.errorbar([0], [v0], yerr=[s0], fmt="*", ms=12, color=_VALENCE_COLOR,
                capsize=3, label="extrapolated")
    fit_x = np.linspace(0, max(lams), 20)
    slope = (vals[-1] - v0) / lams[-1] if lams[-1] else 0.0
    ax.plot(fit_x, v0 + slope * fit_x, color="0.5", lw=0.9, ls="--")
    ax.axhline(0.0, color="0.3", lw=0.9)
    ax.set_xlabel("noise amplification factor")
    ax.set_ylabel("energy above exact (eV)")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path
