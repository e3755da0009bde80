"""Command-line frontend.

Every subcommand reads one YAML run configuration, writes CSV results plus
rendered PNG figures into --out-dir, and records a manifest JSON with the
config hash, seed, package versions, and wall time.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, units
from .analysis import (
    AnalysisError,
    EfficiencyInputs,
    ScanSettings,
    energy_efficiency,
    export_phase_sweep_csv,
    export_scan_csv,
    phase_sweep,
    pulse_energy,
    scan,
    sm_coefficient_cross_check,
)
from .config import ConfigError, RunConfig, load_config
from .model import ModelError
from .optimize import (
    OptimizeError,
    dsp_train,
    export_history_csv,
    load_cmaes_checkpoint,
    optimize_dsp,
    optimize_single_pulse,
)
from .propagator import (
    PropagationError,
    export_contributions_csv,
    export_snapshots_csv,
    propagate,
)
from .pulse import PulseError, PulseTrain, export_field_csv, simulation_window, single
from .regime import RegimeError, export_regime_csv, log_range, regime_map
from .spectrum import (
    SpectrumError,
    detect_missing_rung,
    export_level_csv,
    fit_anharmonicity,
    solve_bound_states,
    transition_dipoles,
)

_CONFIG_ERRORS = (ConfigError, ModelError, units.UnitError, PulseError, FileNotFoundError)
_NUMERICAL_ERRORS = (
    PropagationError,
    SpectrumError,
    OptimizeError,
    AnalysisError,
    RegimeError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


class _Runner:
    """Shared per-command plumbing: config, output dir, seed, manifest."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.monotonic()
        self.config: RunConfig = load_config(args.config)
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = (
            args.seed
            if args.seed is not None
            else self.config.get("optimizer", "seed", 0)
        )
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.outputs.append(str(p))
        return p

    def write_json(self, name: str, payload: dict) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return p

    def finish(self, command: str, extra: dict | None = None) -> int:
        manifest = {
            "command": command,
            "config_file": str(self.args.config),
            "config_hash": self.config.config_hash(),
            "seed": int(self.seed),
            "parallelism": self.args.parallelism,
            "versions": {
                "vlclab": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": round(time.monotonic() - self.t0, 3),
            "outputs": self.outputs,
        }
        if extra:
            manifest.update(extra)
        (self.out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        return 0

    # --- shared model plumbing ---

    def model_and_spectrum(self):
        model = self.config.build_model()
        spectrum = solve_bound_states(model, n_max=min(64, model.grid.n_points))
        return model, spectrum

    def reference_omega0(self, spectrum) -> float:
        hi = min(10, spectrum.n_dissoc - 1)
        w0, _, _ = fit_anharmonicity(spectrum, fit_range=(0, hi))
        return w0

    def build_train(self, spectrum) -> PulseTrain:
        """Main pulse, plus the double-stepping pulse when configured."""
        w0 = self.reference_omega0(spectrum)
        main = self.config.build_pulse(w0, "pulse")
        if not self.config.section("dsp"):
            return single(main)
        dsp_sec = self.config.pulse_params("dsp")
        if "omega0" not in dsp_sec:
            raise ConfigError(
                "dsp.omega0 is required for direct propagation "
                "(optimize-dsp derives it from the detected rung)"
            )
        from .pulse import ChirpedPulse

        dsp = ChirpedPulse(
            e0=dsp_sec["e0"],
            alpha=dsp_sec["alpha"],
            t0=main.t0 + dsp_sec.get("delta_t0", 0.0),
            omega0=dsp_sec["omega0"],
            gamma1=dsp_sec.get("gamma1", 0.0),
            gamma2=dsp_sec.get("gamma2", 0.0),
            phase=dsp_sec.get("phase", 0.0),
        )
        return PulseTrain(pulses=(main, dsp), labels=("main", "dsp"))


def _cmd_eigen(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    tdm = transition_dipoles(spectrum, model)
    export_level_csv(run.path("levels.csv"), spectrum, tdm)
    report = None
    if spectrum.n_bound >= 4:
        report = detect_missing_rung(tdm, spectrum)
        run.write_json(
            "rung.json",
            {
                "rung_index": report.rung_index,
                "min_tdm": report.min_tdm,
                "median_adjacent_tdm": report.median_adjacent_tdm,
                "is_missing": report.is_missing,
                "threshold": report.threshold,
            },
        )
        flag = "MISSING RUNG" if report.is_missing else "no missing rung"
        print(
            f"{model.name}: {spectrum.n_bound} bound levels; {flag} "
            f"(weakest adjacent TDM {report.min_tdm:.3e} a.u. at level "
            f"{report.rung_index}, median {report.median_adjacent_tdm:.3e})"
        )
    else:
        print(f"{model.name}: {spectrum.n_bound} bound levels; too few for rung analysis")
    from .plots import save_level_diagram

    save_level_diagram(run.path("level_diagram.png"), spectrum, tdm, report)
    return run.finish("eigen")


def _cmd_propagate(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    train = run.build_train(spectrum)
    result = propagate(model, spectrum, train, run.config.propagation_config())
    export_snapshots_csv(run.path("populations.csv"), result)
    t0, t1 = simulation_window(train)
    times = np.linspace(t0, t1, 2000)
    export_field_csv(run.path("field.csv"), train, times)
    pops = result.final_populations()
    summary = {
        "dissociation_probability": result.dissociation_probability,
        "dissociation_flux": result.dissociation_flux,
        "absorbed_norm": result.absorbed_norm,
        "final_norm2": float(result.norm2[-1]),
        "final_populations": [float(p) for p in pops],
    }
    if spectrum.n_bound >= 4:
        report = detect_missing_rung(transition_dipoles(spectrum, model), spectrum)
        if report.is_missing:
            r = report.trap_level
            summary["trap_level"] = r
            summary["trap_level_population"] = float(pops[r])
            summary["population_at_or_below_trap"] = float(np.sum(pops[: r + 1]))
    run.write_json("summary.json", summary)
    from .plots import save_field_plot, save_population_map

    save_population_map(run.path("population_map.png"), result)
    save_field_plot(run.path("field.png"), train, times)
    print(
        f"dissociation {result.dissociation_probability:.6f} "
        f"(flux integral {result.dissociation_flux:.6f}, "
        f"absorbed {result.absorbed_norm:.6f})"
    )
    return run.finish("propagate")


def _cmd_optimize_single(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    pulse = run.config.pulse_params("pulse")
    opt_sec = run.config.section("optimizer")
    opt = optimize_single_pulse(
        model,
        spectrum,
        pulse["e0"],
        pulse["alpha"],
        run.config.propagation_config(),
        seed=run.seed,
        iterations=opt_sec.get("bo_iterations", 50),
        kappa=opt_sec.get("kappa", 2.0),
    )
    export_history_csv(
        run.path("history.csv"), opt.run, param_names=["gamma1", "gamma2"]
    )
    run.write_json(
        "best.json",
        {
            "gamma1": opt.gamma1,
            "gamma2": opt.gamma2,
            "score": opt.score,
            "omega0_au": opt.omega0,
            "metadata": opt.run.metadata,
        },
    )
    from .plots import save_history_plot

    save_history_plot(run.path("history.png"), opt.run)
    print(f"best (gamma1, gamma2) = ({opt.gamma1:.2f}, {opt.gamma2:.2f}), score {opt.score:.6f}")
    return run.finish("optimize-single")


def _cmd_optimize_dsp(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    pulse = run.config.pulse_params("pulse")
    dsp_sec = run.config.pulse_params("dsp")
    opt_sec = run.config.section("optimizer")
    rung = detect_missing_rung(transition_dipoles(spectrum, model), spectrum)
    ckpt = run.out_dir / "cma_state.txt"
    state = None
    if run.args.resume and ckpt.exists():
        state = load_cmaes_checkpoint(ckpt)
    opt = optimize_dsp(
        model,
        spectrum,
        pulse["e0"],
        pulse["alpha"],
        dsp_sec["e0"],
        dsp_sec["alpha"],
        rung,
        run.config.propagation_config(),
        seed=run.seed,
        generations=opt_sec.get("cma_generations", 150),
        lam=opt_sec.get("cma_lambda", 16),
        initial_gammas=(
            run.config.get("pulse", "gamma1", 0.5),
            run.config.get("pulse", "gamma2", 0.5),
        ),
        state=state,
        checkpoint_path=ckpt,
    )
    run.outputs.append(str(ckpt))
    export_history_csv(
        run.path("history.csv"),
        opt.run,
        param_names=["gamma1_main", "gamma2_main", "gamma1_dsp", "gamma2_dsp", "delta_t0_scaled"],
    )
    run.write_json(
        "best.json",
        {
            "gamma1_main": opt.gamma1_main,
            "gamma2_main": opt.gamma2_main,
            "gamma1_dsp": opt.gamma1_dsp,
            "gamma2_dsp": opt.gamma2_dsp,
            "delta_t0_au": opt.delta_t0,
            "score": opt.score,
            "omega0_main_au": opt.omega0_main,
            "omega0_dsp_au": opt.omega0_dsp,
            "rung_index": rung.rung_index,
        },
    )
    from .plots import save_history_plot

    save_history_plot(run.path("history.png"), opt.run)
    print(f"best dissociation {opt.score:.6f} at delta_t0 = {opt.delta_t0:.1f} a.u.")
    return run.finish("optimize-dsp", {"resumed": bool(state)})


def _cmd_scan(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    scan_sec = run.config.section("scan")
    for key in ("e0_min", "e0_max", "n_e0", "alpha_min", "alpha_max", "n_alpha"):
        if key not in scan_sec:
            raise ConfigError(f"missing required config key scan.{key}")
    opt_sec = run.config.section("optimizer")
    settings = ScanSettings(
        mode=scan_sec.get("mode", "single"),
        bo_iterations=opt_sec.get("bo_iterations", 50),
        cma_generations=opt_sec.get("cma_generations", 150),
        cma_lam=opt_sec.get("cma_lambda", 16),
        dsp_e0=run.config.get("dsp", "e0", units.to_au(3.0, "MV/cm")),
        dsp_alpha=run.config.get("dsp", "alpha", units.to_au(8.0e-8, "fs^-2")),
        s_cm2=run.config.get("efficiency", "s_cm2", 1.0),
        rho_mol_cm2=run.config.get("efficiency", "rho_mol_cm2", 1.0),
    )
    cells_dir = run.out_dir / "cells"
    if not run.args.resume and cells_dir.exists():
        for old in cells_dir.glob("cell_*.json"):
            old.unlink()
    result = scan(
        model,
        spectrum,
        log_range(scan_sec["e0_min"], scan_sec["e0_max"], scan_sec["n_e0"]),
        log_range(scan_sec["alpha_min"], scan_sec["alpha_max"], scan_sec["n_alpha"]),
        run.config.propagation_config(),
        settings=settings,
        seed=run.seed,
        checkpoint_dir=cells_dir,
        progress=lambda i, j, cell: print(
            f"cell ({i},{j}): d={cell.get('dissociation', float('nan')):.4f}"
            if cell.get("ok")
            else f"cell ({i},{j}): FAILED {cell.get('error')}"
        ),
    )
    export_scan_csv(run.path("scan.csv"), result)
    from .plots import save_scan_maps

    save_scan_maps(run.path("scan_maps.png"), result)
    return run.finish("scan", {"mode": settings.mode, "cells": len(result.cells)})


def _cmd_regime_map(run: _Runner) -> int:
    reg = run.config.section("regime")
    scan_sec = run.config.section("scan")
    for key in ("omega0", "beta", "dipole_slope", "reduced_mass"):
        if key not in reg:
            raise ConfigError(f"missing required config key regime.{key}")
    for key in ("e0_min", "e0_max", "n_e0", "alpha_min", "alpha_max", "n_alpha"):
        if key not in scan_sec:
            raise ConfigError(f"missing required config key scan.{key}")
    rmap = regime_map(
        reg["reduced_mass"],
        reg["omega0"],
        reg["beta"],
        reg["dipole_slope"],
        log_range(scan_sec["e0_min"], scan_sec["e0_max"], scan_sec["n_e0"]),
        log_range(scan_sec["alpha_min"], scan_sec["alpha_max"], scan_sec["n_alpha"]),
    )
    export_regime_csv(run.path("regime.csv"), rmap)
    from .plots import save_regime_map

    save_regime_map(run.path("regime_map.png"), rmap)
    n_in = int(rmap.in_region.sum())
    print(f"{n_in}/{rmap.in_region.size} cells satisfy the ladder-climbing conditions")
    return run.finish("regime-map")


def _cmd_phase_sweep(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    pulse = run.config.pulse_params("pulse")
    dsp_sec = run.config.pulse_params("dsp")
    if "omega0" not in dsp_sec:
        raise ConfigError("phase-sweep requires dsp.omega0 (from the optimized run)")
    w0 = run.reference_omega0(spectrum)
    n_phases = run.config.get("phase_sweep", "n_phases", 9)
    phases = np.linspace(0.0, 2.0 * np.pi, n_phases, endpoint=False)

    def train_for(phase: float):
        return dsp_train(
            pulse["e0"],
            pulse["alpha"],
            pulse.get("gamma1", 0.0),
            pulse.get("gamma2", 0.0),
            pulse.get("omega0", w0),
            dsp_sec["e0"],
            dsp_sec["alpha"],
            dsp_sec.get("gamma1", 0.0),
            dsp_sec.get("gamma2", 0.0),
            dsp_sec["omega0"],
            dsp_sec.get("delta_t0", 0.0),
            phase_dsp=phase,
        )

    result = phase_sweep(
        model, spectrum, train_for, phases, run.config.propagation_config()
    )
    export_phase_sweep_csv(run.path("phase_sweep.csv"), result)
    run.write_json(
        "phase_fit.json",
        {
            "offset": result.fit_offset,
            "amplitude": result.fit_amplitude,
            "phi0": result.fit_phi0,
            "rms_residual": result.fit_residual,
            "r_squared": result.r_squared,
        },
    )
    from .plots import save_phase_sweep

    save_phase_sweep(run.path("phase_sweep.png"), result)
    print(
        f"cosine fit R^2 = {result.r_squared:.3f}, "
        f"max near phi = {result.fit_phi0:.3f} rad"
    )
    return run.finish("phase-sweep")


def _cmd_efficiency(run: _Runner) -> int:
    eff = run.config.section("efficiency")
    if "dissociation" not in eff:
        raise ConfigError("missing required config key efficiency.dissociation")
    pulse = run.config.pulse_params("pulse")
    pulses_mv = [
        (
            units.from_au(pulse["e0"], "MV/cm"),
            units.from_au(pulse["alpha"], "fs^-2"),
        )
    ]
    if run.config.section("dsp"):
        dsp_sec = run.config.pulse_params("dsp")
        pulses_mv.append(
            (
                units.from_au(dsp_sec["e0"], "MV/cm"),
                units.from_au(dsp_sec["alpha"], "fs^-2"),
            )
        )
    s = eff.get("s_cm2", 1.0)
    inputs = EfficiencyInputs(
        e0_mv_cm=pulses_mv[0][0],
        alpha_fs2=pulses_mv[0][1],
        s_cm2=s,
        rho_mol_cm2=eff.get("rho_mol_cm2", 1.0),
        d=eff["dissociation"],
    )
    p = energy_efficiency(inputs, extra_pulses=pulses_mv[1:])
    energies = [pulse_energy(e0, a, s) for e0, a in pulses_mv]
    coef, recip = sm_coefficient_cross_check()
    run.write_json(
        "efficiency.json",
        {
            "pulse_energies_J": energies,
            "total_energy_J": sum(energies),
            "efficiency_mol_per_J": p,
            "shortcut_coefficient": coef,
            "shortcut_reciprocal": recip,
        },
    )
    print(f"efficiency {p:.6g} mol/J over {len(energies)} pulse(s)")
    return run.finish("efficiency")


def _cmd_contributions(run: _Runner) -> int:
    model, spectrum = run.model_and_spectrum()
    train = run.build_train(spectrum)
    if run.args.levels is not None:
        levels = tuple(run.args.levels)
    else:
        levels = tuple(run.config.get("contributions", "levels", range(spectrum.n_bound)))
    base = run.config.propagation_config()
    from dataclasses import replace

    cfg = replace(base, record_contributions=True, contribution_levels=levels)
    result = propagate(model, spectrum, train, cfg)
    export_contributions_csv(run.path("contributions.csv"), result)
    from .plots import save_contribution_plot

    for j in levels:
        save_contribution_plot(run.path(f"contributions_level{j}.png"), result, j)
    print(f"recorded contributions for levels {list(levels)}")
    return run.finish("contributions")


_COMMANDS = {
    "eigen": _cmd_eigen,
    "propagate": _cmd_propagate,
    "optimize-single": _cmd_optimize_single,
    "optimize-dsp": _cmd_optimize_dsp,
    "scan": _cmd_scan,
    "regime-map": _cmd_regime_map,
    "phase-sweep": _cmd_phase_sweep,
    "efficiency": _cmd_efficiency,
    "contributions": _cmd_contributions,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlclab",
        description="Vibrational ladder climbing laboratory: eigenstates, "
        "wavepacket propagation, pulse optimization, and parameter maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("config", help="YAML run-configuration file")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override optimizer.seed")
        p.add_argument(
            "--parallelism",
            type=int,
            default=1,
            help="worker budget hint (results are identical for any value)",
        )
        p.add_argument(
            "--resume",
            action="store_true",
            help="reuse checkpoints (scan cells, CMA-ES state)",
        )
        if name == "contributions":
            p.add_argument(
                "-j",
                "--levels",
                type=int,
                nargs="+",
                default=None,
                help="target levels (overrides contributions.levels)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.parallelism < 1:
        print("error: --parallelism must be >= 1", file=sys.stderr)
        return 2
    try:
        runner = _Runner(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    try:
        return _COMMANDS[args.command](runner)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
