"""Headless matplotlib rendering of the standard report figures.

Every function writes one PNG next to the delimited output it visualizes and
returns the path.  The Agg backend is forced so rendering works in batch
environments without a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import units
from .analysis import PhaseSweepResult, ScanResult, cosine_fit
from .optimize import OptimizationRun
from .propagator import PropagationResult
from .pulse import PulseTrain, field as pulse_field, train_field
from .regime import RegimeMap
from .spectrum import BoundSpectrum, MissingRungReport, TdmMatrix


def save_level_diagram(
    path, spectrum: BoundSpectrum, tdm: TdmMatrix, rung: MissingRungReport | None = None
):
    """Bound-level energies beside the adjacent and two-step TDM magnitudes."""
    fig, (ax_e, ax_t) = plt.subplots(1, 2, figsize=(9, 4.5), sharey=False)
    n = spectrum.n_bound
    ax_e.hlines(spectrum.bound_energies(), 0, 1, lw=1.0)
    ax_e.set_xticks([])
    ax_e.set_ylabel("energy [a.u.]")
    ax_e.set_title(f"{n} bound levels")

    j_adj = np.arange(n - 1)
    ax_t.semilogy(j_adj, tdm.adjacent(), "o-", label=r"$|\mu_{j,j+1}|$")
    j_two = np.arange(n - 2)
    ax_t.semilogy(j_two, np.abs(tdm.double_step()), "s--", label=r"$|\mu_{j,j+2}|$")
    if rung is not None and rung.is_missing:
        ax_t.axvline(rung.rung_index, color="crimson", ls=":", label=f"rung {rung.rung_index}")
    ax_t.set_xlabel("lower level j")
    ax_t.set_ylabel("TDM [a.u.]")
    ax_t.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_population_map(path, result: PropagationResult):
    """Level populations over time plus norm/flux traces."""
    fig, (ax_p, ax_n) = plt.subplots(
        2, 1, figsize=(8, 6), sharex=True, height_ratios=[3, 1]
    )
    t_fs = result.times * units.FS_PER_ATOMIC_TIME
    if result.populations.size:
        nb = result.populations.shape[1]
        mesh = ax_p.pcolormesh(
            t_fs,
            np.arange(nb),
            result.populations.T,
            shading="nearest",
            cmap="viridis",
        )
        fig.colorbar(mesh, ax=ax_p, label="population")
        ax_p.set_ylabel("vibrational level")
    ax_n.plot(t_fs, result.norm2, label="norm$^2$")
    ax_n.plot(t_fs, result.continuum, label="continuum")
    ax_n.set_xlabel("t [fs]")
    ax_n.legend(loc="center left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_field_plot(path, train: PulseTrain, times):
    times = np.asarray(times, float)
    t_fs = times * units.FS_PER_ATOMIC_TIME
    fig, ax = plt.subplots(figsize=(8, 3.2))
    if len(train) > 1:
        for p, label in zip(train.pulses, train.labels):
            ax.plot(t_fs, pulse_field(p, times), lw=0.6, alpha=0.7, label=label)
    ax.plot(t_fs, train_field(train, times), lw=0.8, color="k", label="total")
    ax.set_xlabel("t [fs]")
    ax.set_ylabel("E [a.u.]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_regime_map(path, rmap: RegimeMap):
    fig, ax = plt.subplots(figsize=(6, 4.8))
    e0 = units.from_au(rmap.e0_values, "MV/cm")
    alpha = units.from_au(rmap.alpha_values, "fs^-2")
    mesh = ax.pcolormesh(alpha, e0, rmap.margin, shading="auto", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax, label=r"$P_2 - (P_1 + 1)$")
    if rmap.in_region.any():
        ax.contour(
            alpha, e0, rmap.in_region.astype(float), levels=[0.5], colors="k", linewidths=1.0
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\alpha$ [fs$^{-2}$]")
    ax.set_ylabel(r"$E_0$ [MV/cm]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_scan_maps(path, result: ScanResult):
    """Dissociation, argmax-level, and efficiency heatmaps for one scan."""
    n_e, n_a = len(result.e0_values), len(result.alpha_values)

    def grid_of(key):
        g = np.full((n_e, n_a), np.nan)
        for cell in result.cells:
            if cell.get("ok") and key in cell:
                g[cell["i"], cell["j"]] = cell[key]
        return g

    maps = [
        ("dissociation", grid_of("dissociation"), "viridis"),
        ("argmax level", grid_of("argmax_level"), "plasma"),
        ("efficiency [mol/J]", grid_of("efficiency_mol_per_j"), "cividis"),
    ]
    e0 = units.from_au(result.e0_values, "MV/cm")
    alpha = units.from_au(result.alpha_values, "fs^-2")
    fig, axes = plt.subplots(1, 3, figsize=(14, 4))
    for ax, (label, g, cmap) in zip(axes, maps):
        mesh = ax.pcolormesh(alpha, e0, g, shading="auto", cmap=cmap)
        fig.colorbar(mesh, ax=ax, label=label)
        if n_a > 1:
            ax.set_xscale("log")
        if n_e > 1:
            ax.set_yscale("log")
        ax.set_xlabel(r"$\alpha$ [fs$^{-2}$]")
        ax.set_ylabel(r"$E_0$ [MV/cm]")
    fig.suptitle(f"{result.mode} scan")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_phase_sweep(path, result: PhaseSweepResult):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(result.phases, result.dissociations, "o", label="propagated")
    if len(result.phases) >= 3:
        dense = np.linspace(0, 2 * np.pi, 200)
        ax.plot(
            dense,
            result.fit_offset
            + result.fit_amplitude * np.cos(dense - result.fit_phi0),
            "-",
            label=f"cosine fit (R$^2$={result.r_squared:.3f})",
        )
    ax.set_xlabel("relative phase [rad]")
    ax.set_ylabel("dissociation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_history_plot(path, run: OptimizationRun):
    scores = np.array([rec["score"] for rec in run.history])
    finite = np.where(np.isfinite(scores), scores, np.nan)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(finite, ".", ms=4, label="evaluations")
    ax.plot(np.fmax.accumulate(np.nan_to_num(finite, nan=-np.inf)), "-", label="best so far")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("score")
    ax.set_title(run.method)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_contribution_plot(path, result: PropagationResult, j: int, top: int = 6):
    from .propagator import contributions

    records = contributions(result, j)
    records = sorted(records, key=lambda r: -np.max(np.abs(r.series)))[:top]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for rec in records:
        t_fs = rec.times * units.FS_PER_ATOMIC_TIME
        ax.plot(t_fs, rec.series, label=f"from {rec.k} ({rec.field_label})")
    ax.set_xlabel("t [fs]")
    ax.set_ylabel(rf"cumulative $\Delta C_{{{j}}}$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
