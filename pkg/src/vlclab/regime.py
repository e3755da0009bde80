"""Quantum ladder climbing vs classical autoresonance characterization.

Chirp-driven excitation is classified by three time scales built from the
molecular constants and the drive: the Rabi time T_R = sqrt(2 m hbar w0)/eps,
the frequency-sweep time T_S = 1/sqrt(Gamma), and the nonlinearity time
T_NL = 2 w0 beta / Gamma, where eps = (dmu/dx at r_e) * E0 is the effective
drive strength and Gamma the linear chirp rate.  The dimensionless pair
P1 = T_S/T_R and P2 = T_NL/T_S separates the regimes: phase-locked quantum
ladder climbing requires P2 > P1 + 1 and P1 > 0.79.

This map is a screening tool taken from an idealized two-parameter analysis,
not a validated phase boundary for a specific molecule; treat the classified
region as indicative.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import units


class RegimeError(ValueError):
    pass


@dataclass(frozen=True)
class RegimeParams:
    t_r: float          # Rabi time scale [a.u.]
    t_s: float          # sweep time scale [a.u.]
    t_nl: float         # nonlinearity time scale [a.u.]
    p1: float
    p2: float
    gamma: float        # chirp rate [a.u.^-2]
    epsilon_eff: float  # effective drive [a.u.]
    # echoed inputs
    e0: float
    alpha: float
    omega0: float
    beta: float
    dipole_slope: float
    reduced_mass: float

    @property
    def in_region(self) -> bool:
        """Both phase-locked ladder-climbing conditions satisfied."""
        return self.p2 > self.p1 + 1.0 and self.p1 > 0.79

    @property
    def margin(self) -> float:
        """P2 - (P1 + 1); positive where the first condition holds."""
        return self.p2 - (self.p1 + 1.0)


def regime_params(
    reduced_mass: float,
    omega0: float,
    beta: float,
    dipole_slope: float,
    e0: float,
    alpha: float,
    omega01: float | None = None,
) -> RegimeParams:
    """Characterization parameters for one (E0, alpha) drive, all in a.u.

    ``omega01`` is the 0 -> 1 transition frequency used in the chirp rate
    Gamma = omega01 / (4 sigma); by default it is taken from the fitted
    ladder law, omega01 = omega0 (1 - 2 beta).  Pass the exact spectral value
    (eps1 - eps0) when a solved spectrum is at hand.
    """
    if min(reduced_mass, omega0, dipole_slope, e0, alpha) <= 0 or beta < 0:
        raise RegimeError("regime inputs must be positive (beta >= 0)")
    if omega01 is None:
        omega01 = omega0 * (1.0 - 2.0 * beta)
    if omega01 <= 0:
        raise RegimeError("omega01 must be positive")
    sigma = 1.0 / np.sqrt(2.0 * alpha)
    gamma = omega01 / (4.0 * sigma)
    eps = dipole_slope * e0
    t_r = np.sqrt(2.0 * reduced_mass * omega0) / eps
    t_s = 1.0 / np.sqrt(gamma)
    t_nl = 2.0 * omega0 * beta / gamma
    return RegimeParams(
        t_r=float(t_r),
        t_s=float(t_s),
        t_nl=float(t_nl),
        p1=float(t_s / t_r),
        p2=float(t_nl / t_s),
        gamma=float(gamma),
        epsilon_eff=float(eps),
        e0=e0,
        alpha=alpha,
        omega0=omega0,
        beta=beta,
        dipole_slope=dipole_slope,
        reduced_mass=reduced_mass,
    )


def log_range(lo: float, hi: float, n: int) -> np.ndarray:
    """Logarithmically spaced scan axis (matches the log-scaled map figures)."""
    if lo <= 0 or hi <= lo or n < 1:
        raise RegimeError("need 0 < lo < hi and n >= 1")
    if n == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True, eq=False)
class RegimeMap:
    e0_values: np.ndarray       # [a.u.]
    alpha_values: np.ndarray    # [a.u.^-2]
    p1: np.ndarray              # (n_e0, n_alpha), row-major over e0 then alpha
    p2: np.ndarray
    margin: np.ndarray          # p2 - (p1 + 1)
    in_region: np.ndarray       # bool


def regime_map(
    reduced_mass: float,
    omega0: float,
    beta: float,
    dipole_slope: float,
    e0_values,
    alpha_values,
    omega01: float | None = None,
) -> RegimeMap:
    e0_values = np.asarray(e0_values, float)
    alpha_values = np.asarray(alpha_values, float)
    if e0_values.size == 0 or alpha_values.size == 0:
        raise RegimeError("regime map needs non-empty axis ranges")
    shape = (e0_values.size, alpha_values.size)
    p1 = np.empty(shape)
    p2 = np.empty(shape)
    for i, e0 in enumerate(e0_values):
        for j, alpha in enumerate(alpha_values):
            rp = regime_params(
                reduced_mass, omega0, beta, dipole_slope, e0, alpha, omega01=omega01
            )
            p1[i, j] = rp.p1
            p2[i, j] = rp.p2
    margin = p2 - (p1 + 1.0)
    return RegimeMap(
        e0_values=e0_values,
        alpha_values=alpha_values,
        p1=p1,
        p2=p2,
        margin=margin,
        in_region=(margin > 0) & (p1 > 0.79),
    )


def export_regime_csv(path, rmap: RegimeMap) -> None:
    """One row per (E0, alpha) cell, field in MV/cm and alpha in fs^-2."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["E0_MV_cm", "alpha_fs^-2", "P1", "P2", "P2_minus_P1_plus_1", "in_region"]
        )
        for i, e0 in enumerate(rmap.e0_values):
            for j, alpha in enumerate(rmap.alpha_values):
                writer.writerow(
                    [
                        repr(units.from_au(float(e0), "MV/cm")),
                        repr(units.from_au(float(alpha), "fs^-2")),
                        repr(float(rmap.p1[i, j])),
                        repr(float(rmap.p2[i, j])),
                        repr(float(rmap.margin[i, j])),
                        int(rmap.in_region[i, j]),
                    ]
                )
