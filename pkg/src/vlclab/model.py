"""Spatial grid and molecular models (potential + dipole curves).

All quantities are in Hartree atomic units unless a function argument says
otherwise.  Curves are immutable; evaluation is vectorized over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import units


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform position grid with the matching DFT momentum grid.

    The ``k`` array (standard discrete-Fourier ordering) is the single source
    of truth for momentum space throughout the package.
    """

    n_points: int
    x_min: float
    x_max: float
    x: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    dx: float

    def index_of(self, x_point: float) -> int:
        """Index of the grid point nearest to ``x_point``."""
        if not (self.x_min <= x_point <= self.x_max):
            raise ModelError(f"x={x_point} outside grid [{self.x_min}, {self.x_max}]")
        return min(int(round((x_point - self.x_min) / self.dx)), self.n_points - 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpatialGrid):
            return NotImplemented
        return (
            self.n_points == other.n_points
            and self.x_min == other.x_min
            and self.x_max == other.x_max
        )


def build_grid(n_points: int, x_min: float, x_max: float) -> SpatialGrid:
    """Grid of ``n_points`` (power of two) on [x_min, x_max) in bohr."""
    if n_points < 2 or (n_points & (n_points - 1)) != 0:
        raise ModelError(f"n_points must be a power of two, got {n_points}")
    if not x_min < x_max:
        raise ModelError(f"need x_min < x_max, got [{x_min}, {x_max}]")
    dx = (x_max - x_min) / n_points
    x = x_min + dx * np.arange(n_points)
    k = 2.0 * np.pi * np.fft.fftfreq(n_points, dx)
    x.setflags(write=False)
    k.setflags(write=False)
    return SpatialGrid(n_points=n_points, x_min=x_min, x_max=x_max, x=x, k=k, dx=dx)


# --------------------------------------------------------------------------
# Potential curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicPotential:
    """V(r) = k/2 (r - r_e)^2 with force constant k = m omega^2."""

    force_constant: float
    r_e: float

    def __call__(self, r):
        return 0.5 * self.force_constant * (np.asarray(r, float) - self.r_e) ** 2


@dataclass(frozen=True)
class MorsePotential:
    """V(r) = D_e (1 - exp(-a (r - r_e)))^2 - D_e, so V(inf) -> 0."""

    d_e: float
    a: float
    r_e: float

    def __post_init__(self):
        if self.d_e <= 0 or self.a <= 0 or self.r_e <= 0:
            raise ModelError("Morse parameters must all be positive")

    def __call__(self, r):
        y = 1.0 - np.exp(-self.a * (np.asarray(r, float) - self.r_e))
        return self.d_e * (y * y - 1.0)

    @property
    def omega_e(self) -> float:
        """Harmonic frequency at the well bottom, for unit reduced mass 1.

        Callers divide by sqrt(m): omega_e = a * sqrt(2 D_e / m).
        """
        return self.a * np.sqrt(2.0 * self.d_e)


@dataclass(frozen=True)
class TabulatedCurve:
    """Cubic-spline interpolant of sorted (x, value) samples.

    Evaluation outside the sampled range is an error: extrapolating a fitted
    curve into the absorbing-boundary region would silently change the
    physics there.
    """

    x_samples: np.ndarray
    values: np.ndarray
    source: str = "<memory>"
    _spline: CubicSpline = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        xs = np.asarray(self.x_samples, float)
        vs = np.asarray(self.values, float)
        if xs.size < 4:
            raise ModelError(f"tabulated curve needs >= 4 rows, got {xs.size}")
        if not np.all(np.diff(xs) > 0):
            raise ModelError("tabulated x samples must be strictly increasing")
        object.__setattr__(self, "x_samples", xs)
        object.__setattr__(self, "values", vs)
        object.__setattr__(self, "_spline", CubicSpline(xs, vs))

    def __call__(self, r):
        r = np.asarray(r, float)
        lo, hi = self.x_samples[0], self.x_samples[-1]
        if np.any(r < lo) or np.any(r > hi):
            raise ModelError(
                f"evaluation outside tabulated range [{lo}, {hi}] (source {self.source})"
            )
        return self._spline(r)


# --------------------------------------------------------------------------
# Dipole curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearDipole:
    """mu(r) = slope * r + intercept."""

    slope: float
    intercept: float

    def __call__(self, r):
        return self.slope * np.asarray(r, float) + self.intercept


@dataclass(frozen=True)
class MeckeDipole:
    """mu(r) = q r exp(-r / r_star).

    Single interior maximum at r = r_star, decaying to zero at large r: the
    polarization-relaxation shape responsible for the vanishing adjacent
    transition dipole.
    """

    q: float
    r_star: float

    def __post_init__(self):
        if self.q <= 0 or self.r_star <= 0:
            raise ModelError("Mecke parameters must be positive")

    def __call__(self, r):
        r = np.asarray(r, float)
        return self.q * r * np.exp(-r / self.r_star)


# --------------------------------------------------------------------------
# Molecular model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MolecularModel:
    name: str
    reduced_mass: float
    potential: object
    dipole: object
    grid: SpatialGrid
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.reduced_mass <= 0:
            raise ModelError("reduced_mass must be positive")
        # fail fast if the curves cannot cover the grid
        self.potential(self.grid.x)
        self.dipole(self.grid.x)

    def potential_on_grid(self) -> np.ndarray:
        return np.asarray(self.potential(self.grid.x), float)

    def dipole_on_grid(self) -> np.ndarray:
        return np.asarray(self.dipole(self.grid.x), float)


def eval_potential(model: MolecularModel, x) -> np.ndarray:
    return model.potential(x)


def eval_dipole(model: MolecularModel, x) -> np.ndarray:
    return model.dipole(x)


def morse_from_spectroscopy(
    d0_ev: float, omega_e_cm: float, r_e_angstrom: float, reduced_mass: float
) -> MorsePotential:
    """Morse well from spectroscopic constants.

    D_e = D0 + hbar*omega_e/2 (harmonic zero-point correction, since tables
    list the dissociation energy from the lowest vibrational state) and
    a = omega_e * sqrt(m / (2 D_e)).
    """
    if d0_ev <= 0 or omega_e_cm <= 0 or r_e_angstrom <= 0 or reduced_mass <= 0:
        raise ModelError("spectroscopic constants must all be positive")
    omega_e = units.to_au(omega_e_cm, "cm^-1")
    d_e = units.to_au(d0_ev, "eV") + 0.5 * omega_e
    a = omega_e * np.sqrt(reduced_mass / (2.0 * d_e))
    r_e = units.to_au(r_e_angstrom, "angstrom")
    return MorsePotential(d_e=d_e, a=a, r_e=r_e)


def load_tabulated(path, kind: str = "potential") -> TabulatedCurve:
    """Two-column numeric text (x [bohr], value [a.u.]); '#' comments allowed."""
    if kind not in ("potential", "dipole"):
        raise ModelError(f"kind must be 'potential' or 'dipole', got {kind!r}")
    path = Path(path)
    xs, vs = [], []
    for ln, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ModelError(f"{path}:{ln}: expected two columns, got {len(parts)}")
        try:
            xs.append(float(parts[0]))
            vs.append(float(parts[1]))
        except ValueError as exc:
            raise ModelError(f"{path}:{ln}: non-numeric value") from exc
    curve = TabulatedCurve(np.array(xs), np.array(vs), source=str(path))
    return curve


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------

# Isotopic masses [u] (AME2020): 7Li, 1H, 19F
_M_LI7 = 7.0160034366
_M_H1 = 1.00782503207
_M_F19 = 18.99840316273


def _reduced_mass_au(m1_u: float, m2_u: float) -> float:
    return (m1_u * m2_u) / (m1_u + m2_u) * units.ELECTRON_MASSES_PER_AMU


# Spectroscopic rows (calculated values) and dipole-model parameters.
#
# The Mecke pair (q, r_star) is fixed by two documented conditions:
#   * mu(r_e) equals the tabulated equilibrium dipole moment;
#   * r_star places the dipole maximum, chosen per molecule so that the
#     Morse/Mecke model shows the characteristic ladder-interruption
#     structure (adjacent transition dipole collapsing at an interior level
#     while the two-step transition dipole is locally maximal there).
# The resulting rung index is a property of this analytic model, not a
# claim about the ab-initio molecule.
_PRESETS = {
    "LiH": dict(
        d0_ev=2.496,
        omega_e_cm=1422.22,
        r_e_angstrom=1.5710,
        mu_e_debye=5.792,
        r_star=3.9,
        reduced_mass=_reduced_mass_au(_M_LI7, _M_H1),
        grid=(1024, 1.5, 15.0),
    ),
    "HF": dict(
        d0_ev=5.848,
        omega_e_cm=4103.48,
        r_e_angstrom=0.9168,
        mu_e_debye=1.791,
        r_star=2.5,
        reduced_mass=_reduced_mass_au(_M_H1, _M_F19),
        grid=(1024, 0.9, 12.0),
    ),
}


def preset(name: str) -> MolecularModel:
    """Built-in Morse/Mecke model for "LiH" or "HF"."""
    if name not in _PRESETS:
        raise ModelError(f"unknown preset {name!r}; available: {sorted(_PRESETS)}")
    p = _PRESETS[name]
    m = p["reduced_mass"]
    pot = morse_from_spectroscopy(p["d0_ev"], p["omega_e_cm"], p["r_e_angstrom"], m)
    mu_e = units.to_au(p["mu_e_debye"], "debye")
    r_star = p["r_star"]
    q = mu_e / (pot.r_e * np.exp(-pot.r_e / r_star))
    dip = MeckeDipole(q=q, r_star=r_star)
    grid = build_grid(*p["grid"])
    meta = {
        "source": "spectroscopic table (calc. row)",
        "d0_ev": p["d0_ev"],
        "omega_e_cm": p["omega_e_cm"],
        "mu_e_debye": p["mu_e_debye"],
        "dipole_fit": "q from mu(r_e); r_star fixes dipole-peak location",
    }
    return MolecularModel(
        name=name, reduced_mass=m, potential=pot, dipole=dip, grid=grid, metadata=meta
    )
