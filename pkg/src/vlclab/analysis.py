"""Energy-efficiency estimates, relative-phase sweeps, and (E0, alpha) scans.

Pulse energies are computed from an exact SI chain (irradiance x FWHM
duration x cross-section).  The literature's rounded shortcut coefficients
(0.002 and its reciprocal 478) are reproduced only as a cross-check of the
internally consistent ratio; the published absolute scale does not survive a
literal SI evaluation of the stated unit convention, so it is never used for
values here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import units
from .model import MolecularModel
from .propagator import PropagationConfig, propagate, propagate_many
from .pulse import PulseTrain, single
from .spectrum import BoundSpectrum


class AnalysisError(ValueError):
    pass


# --------------------------------------------------------------------------
# Pulse energy and dissociation efficiency
# --------------------------------------------------------------------------


def pulse_energy(e0_mv_cm: float, alpha_fs2: float, s_cm2: float) -> float:
    """Energy [J] of one Gaussian pulse: e = S * T * I.

    I = (c eps0 / 2) E0^2 is the peak irradiance (vacuum, n = 1) and
    T = 2 sqrt(2 ln 2) sigma is the field-envelope FWHM with
    sigma = 1/sqrt(2 alpha).
    """
    if e0_mv_cm <= 0 or alpha_fs2 <= 0 or s_cm2 <= 0:
        raise AnalysisError("pulse energy needs positive E0, alpha, and S")
    e0_v_m = e0_mv_cm * 1e6 * 100.0
    irradiance = 0.5 * units.SPEED_OF_LIGHT_M_S * units.VACUUM_PERMITTIVITY * e0_v_m**2
    sigma_s = 1.0 / np.sqrt(2.0 * alpha_fs2) * 1e-15
    t_fwhm = 2.0 * np.sqrt(2.0 * np.log(2.0)) * sigma_s
    return float(s_cm2 * 1e-4 * t_fwhm * irradiance)


def sm_coefficient_cross_check() -> tuple[float, float]:
    """(coefficient, reciprocal) of the rounded shortcut e ~ coef E0^2 S/sqrt(a).

    Uses the published rounding T ~ 2.23/sqrt(2 alpha) together with
    c eps0 / 2; the reciprocal lands within 0.5% of the published 478.
    """
    coef = (2.23 / np.sqrt(2.0)) * (
        0.5 * units.SPEED_OF_LIGHT_M_S * units.VACUUM_PERMITTIVITY
    )
    return float(coef), float(1.0 / coef)


@dataclass(frozen=True)
class EfficiencyInputs:
    e0_mv_cm: float
    alpha_fs2: float
    s_cm2: float = 1.0
    rho_mol_cm2: float = 1.0
    d: float = 0.0

    def __post_init__(self):
        if min(self.e0_mv_cm, self.alpha_fs2, self.s_cm2, self.rho_mol_cm2) < 0:
            raise AnalysisError("efficiency inputs must be non-negative")
        if not 0.0 <= self.d <= 1.0:
            raise AnalysisError(f"dissociation probability {self.d} outside [0, 1]")


def energy_efficiency(inputs: EfficiencyInputs, extra_pulses=()) -> float:
    """Dissociated amount per joule, P = rho S d / sum of pulse energies.

    ``extra_pulses`` lists (E0 [MV/cm], alpha [fs^-2]) of additional pulses
    sharing the cross-section S; S cancels exactly in P.
    """
    total = pulse_energy(inputs.e0_mv_cm, inputs.alpha_fs2, inputs.s_cm2)
    for e0, alpha in extra_pulses:
        total += pulse_energy(e0, alpha, inputs.s_cm2)
    if total <= 0:
        raise AnalysisError("total pulse energy must be positive")
    return float(inputs.rho_mol_cm2 * inputs.s_cm2 * inputs.d / total)


# --------------------------------------------------------------------------
# Relative-phase sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseSweepResult:
    phases: np.ndarray
    dissociations: np.ndarray
    fit_offset: float        # a in a + b cos(phi - phi0)
    fit_amplitude: float     # b >= 0
    fit_phi0: float
    fit_residual: float      # rms residual of the cosine fit
    r_squared: float


def cosine_fit(phases, values) -> tuple[float, float, float, float, float]:
    """Least-squares a + b cos(phi - phi0); returns (a, b, phi0, rms, R^2)."""
    phases = np.asarray(phases, float)
    values = np.asarray(values, float)
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    a, p, q = coef
    b = float(np.hypot(p, q))
    phi0 = float(np.arctan2(q, p))
    resid = design @ coef - values
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(a), b, phi0, float(np.sqrt(ss_res / len(values))), r2


def phase_sweep(
    model: MolecularModel,
    spectrum: BoundSpectrum,
    train_for_phase,
    phases,
    config: PropagationConfig,
) -> PhaseSweepResult:
    """Dissociation vs relative phase, one propagation per phase point.

    ``train_for_phase`` maps a phase [rad] to the PulseTrain to propagate.
    """
    phases = np.asarray(phases, float)
    if phases.size == 0:
        raise AnalysisError("phase sweep needs at least one phase")
    trains = [train_for_phase(float(p)) for p in phases]
    summaries = propagate_many(model, spectrum, trains, config)
    d = np.array([s.dissociation_probability for s in summaries])
    a, b, phi0, rms, r2 = cosine_fit(phases, d) if phases.size >= 3 else (
        float(d.mean()), 0.0, 0.0, 0.0, 1.0,
    )
    return PhaseSweepResult(
        phases=phases,
        dissociations=d,
        fit_offset=a,
        fit_amplitude=b,
        fit_phi0=phi0,
        fit_residual=rms,
        r_squared=r2,
    )


def export_phase_sweep_csv(path, result: PhaseSweepResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase_rad", "dissociation"])
        for p, d in zip(result.phases, result.dissociations):
            writer.writerow([repr(float(p)), repr(float(d))])


# --------------------------------------------------------------------------
# (E0, alpha) scan orchestration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanSettings:
    mode: str = "single"                  # "single" | "dsp"
    bo_iterations: int = 50
    cma_generations: int = 150
    cma_lam: int = 16
    dsp_e0: float = units.to_au(3.0, "MV/cm")
    dsp_alpha: float = units.to_au(8.0e-8, "fs^-2")
    s_cm2: float = 1.0
    rho_mol_cm2: float = 1.0

    def __post_init__(self):
        if self.mode not in ("single", "dsp"):
            raise AnalysisError(f"unknown scan mode {self.mode!r}")


@dataclass(frozen=True, eq=False)
class ScanResult:
    e0_values: np.ndarray        # [a.u.]
    alpha_values: np.ndarray     # [a.u.^-2]
    mode: str
    cells: list                  # row-major dicts, one per (e0, alpha)


def _cell_seed(master_seed: int, i: int, j: int) -> int:
    """Order-independent per-cell seed keyed by the cell coordinates."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(i, j))
    return int(ss.generate_state(1)[0])


def _argmax_excited(pops: np.ndarray) -> int:
    """Most occupied vibrational level excluding the ground state."""
    if pops.size < 2:
        raise AnalysisError("need at least two levels for the excited argmax")
    return int(np.argmax(pops[1:]) + 1)


def scan(
    model: MolecularModel,
    spectrum: BoundSpectrum,
    e0_values,
    alpha_values,
    config: PropagationConfig,
    settings: ScanSettings | None = None,
    seed: int = 0,
    checkpoint_dir=None,
    progress=None,
) -> ScanResult:
    """Per-cell chirp optimization plus a final propagation on each optimum.

    Cells are checkpointed as JSON files when ``checkpoint_dir`` is given;
    re-running with the same directory resumes, recomputing only missing
    cells.  Per-cell seeds are keyed on (seed, i, j), so results do not
    depend on execution order.
    """
    from .optimize import dsp_train, optimize_dsp, optimize_single_pulse, _main_pulse

    settings = settings or ScanSettings()
    e0_values = np.asarray(e0_values, float)
    alpha_values = np.asarray(alpha_values, float)
    if e0_values.size == 0 or alpha_values.size == 0:
        raise AnalysisError("scan needs non-empty E0 and alpha ranges")
    ckpt = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if ckpt is not None:
        ckpt.mkdir(parents=True, exist_ok=True)

    cells = []
    for i, e0 in enumerate(e0_values):
        for j, alpha in enumerate(alpha_values):
            cell_path = ckpt / f"cell_{i}_{j}.json" if ckpt is not None else None
            if cell_path is not None and cell_path.exists():
                cells.append(json.loads(cell_path.read_text()))
                continue
            cell = _scan_cell(
                model, spectrum, float(e0), float(alpha), config, settings,
                _cell_seed(seed, i, j),
            )
            cell.update({"i": i, "j": j})
            if cell_path is not None:
                cell_path.write_text(json.dumps(cell, sort_keys=True))
            cells.append(cell)
            if progress is not None:
                progress(i, j, cell)
    return ScanResult(
        e0_values=e0_values, alpha_values=alpha_values, mode=settings.mode, cells=cells
    )


def _scan_cell(model, spectrum, e0, alpha, config, settings, cell_seed) -> dict:
    from .optimize import dsp_train, optimize_dsp, optimize_single_pulse, _main_pulse
    from .spectrum import detect_missing_rung, transition_dipoles

    cell: dict = {
        "e0_mv_cm": units.from_au(e0, "MV/cm"),
        "alpha_fs2": units.from_au(alpha, "fs^-2"),
        "seed": cell_seed,
    }
    extra = []
    try:
        if settings.mode == "single":
            opt = optimize_single_pulse(
                model, spectrum, e0, alpha, config,
                seed=cell_seed, iterations=settings.bo_iterations,
            )
            train = single(
                _main_pulse(e0, alpha, opt.gamma1, opt.gamma2, opt.omega0)
            )
            cell["params"] = {"gamma1": opt.gamma1, "gamma2": opt.gamma2}
        else:
            rung = detect_missing_rung(transition_dipoles(spectrum, model), spectrum)
            opt = optimize_dsp(
                model, spectrum, e0, alpha, settings.dsp_e0, settings.dsp_alpha,
                rung, config, seed=cell_seed,
                generations=settings.cma_generations, lam=settings.cma_lam,
            )
            train = dsp_train(
                e0, alpha, opt.gamma1_main, opt.gamma2_main, opt.omega0_main,
                settings.dsp_e0, settings.dsp_alpha, opt.gamma1_dsp, opt.gamma2_dsp,
                opt.omega0_dsp, opt.delta_t0,
            )
            cell["params"] = {
                "gamma1_main": opt.gamma1_main,
                "gamma2_main": opt.gamma2_main,
                "gamma1_dsp": opt.gamma1_dsp,
                "gamma2_dsp": opt.gamma2_dsp,
                "delta_t0": opt.delta_t0,
            }
            extra = [
                (
                    units.from_au(settings.dsp_e0, "MV/cm"),
                    units.from_au(settings.dsp_alpha, "fs^-2"),
                )
            ]
        summary = propagate_many(model, spectrum, [train], config)[0]
        d = summary.dissociation_probability
        cell.update(
            {
                "dissociation": d,
                "argmax_level": _argmax_excited(summary.final_populations),
                "efficiency_mol_per_j": energy_efficiency(
                    EfficiencyInputs(
                        e0_mv_cm=cell["e0_mv_cm"],
                        alpha_fs2=cell["alpha_fs2"],
                        s_cm2=settings.s_cm2,
                        rho_mol_cm2=settings.rho_mol_cm2,
                        d=min(1.0, max(0.0, d)),
                    ),
                    extra_pulses=extra,
                ),
                "ok": True,
            }
        )
    except Exception as exc:  # record and continue: one bad cell must not kill a scan
        cell.update({"ok": False, "error": f"{type(exc).__name__}: {exc}"})
    return cell


def export_scan_csv(path, result: ScanResult) -> None:
    """One row per cell: inputs, optimized parameters, and the three maps."""
    param_keys: list = []
    for cell in result.cells:
        for k in cell.get("params", {}):
            if k not in param_keys:
                param_keys.append(k)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["E0_MV_cm", "alpha_fs^-2"]
            + param_keys
            + ["dissociation", "argmax_level", "efficiency_mol_per_J", "ok", "error"]
        )
        for cell in result.cells:
            params = cell.get("params", {})
            writer.writerow(
                [repr(cell["e0_mv_cm"]), repr(cell["alpha_fs2"])]
                + [repr(params[k]) if k in params else "" for k in param_keys]
                + [
                    repr(cell["dissociation"]) if "dissociation" in cell else "",
                    cell.get("argmax_level", ""),
                    repr(cell["efficiency_mol_per_j"])
                    if "efficiency_mol_per_j" in cell
                    else "",
                    int(cell.get("ok", False)),
                    cell.get("error", ""),
                ]
            )
