"""Physical constants and unit conversions.

Everything inside the package works in Hartree atomic units; conversions
happen only at I/O boundaries.  Constants are CODATA 2018 values quoted to
at least 10 significant digits.
"""

from __future__ import annotations

# --- CODATA 2018 reference constants (SI) ---
HARTREE_J = 4.3597447222071e-18        # Hartree energy [J]
BOHR_M = 5.29177210903e-11             # Bohr radius [m]
ATOMIC_TIME_S = 2.4188843265857e-17    # atomic unit of time [s]
ATOMIC_FIELD_V_PER_M = 5.14220674763e11   # atomic unit of electric field [V/m]
ELECTRON_MASSES_PER_AMU = 1822.888486209  # m_u / m_e
ELEMENTARY_CHARGE_C = 1.602176634e-19  # exact
PLANCK_J_S = 6.62607015e-34            # exact
SPEED_OF_LIGHT_M_S = 299792458.0       # exact
VACUUM_PERMITTIVITY = 8.8541878128e-12  # [F/m]
AVOGADRO = 6.02214076e23               # exact

# Derived exactly from the above
ATOMIC_FIELD_V_PER_CM = ATOMIC_FIELD_V_PER_M / 100.0
ATOMIC_DIPOLE_C_M = ELEMENTARY_CHARGE_C * BOHR_M
DEBYE_C_M = 1e-21 / SPEED_OF_LIGHT_M_S
EV_J = ELEMENTARY_CHARGE_C * 1.0       # 1 eV in joules (exact)
# hc * (1 cm^-1), i.e. the energy of one wavenumber
WAVENUMBER_J = PLANCK_J_S * SPEED_OF_LIGHT_M_S * 100.0

FS_PER_ATOMIC_TIME = ATOMIC_TIME_S / 1e-15


class UnitError(ValueError):
    """Raised for unknown unit tags or dimensionally incompatible conversions."""


# Each unit tag maps to (dimension, scale) where scale converts *to* atomic
# units: value_au = value * scale.
_UNITS: dict[str, tuple[str, float]] = {
    # energy
    "hartree": ("energy", 1.0),
    "au_energy": ("energy", 1.0),
    "eV": ("energy", EV_J / HARTREE_J),
    "cm^-1": ("energy", WAVENUMBER_J / HARTREE_J),
    "J": ("energy", 1.0 / HARTREE_J),
    # length
    "bohr": ("length", 1.0),
    "angstrom": ("length", 1e-10 / BOHR_M),
    "m": ("length", 1.0 / BOHR_M),
    # time
    "au_time": ("time", 1.0),
    "fs": ("time", 1e-15 / ATOMIC_TIME_S),
    "ps": ("time", 1e-12 / ATOMIC_TIME_S),
    "s": ("time", 1.0 / ATOMIC_TIME_S),
    # electric field
    "au_field": ("field", 1.0),
    "V/m": ("field", 1.0 / ATOMIC_FIELD_V_PER_M),
    "V/cm": ("field", 1.0 / ATOMIC_FIELD_V_PER_CM),
    "MV/cm": ("field", 1e6 / ATOMIC_FIELD_V_PER_CM),
    # inverse time squared (Gaussian spreading parameter)
    "au_time^-2": ("inverse_time_squared", 1.0),
    "fs^-2": ("inverse_time_squared", (ATOMIC_TIME_S / 1e-15) ** 2),
    "s^-2": ("inverse_time_squared", ATOMIC_TIME_S**2),
    # dipole moment
    "au_dipole": ("dipole", 1.0),
    "debye": ("dipole", DEBYE_C_M / ATOMIC_DIPOLE_C_M),
    "C*m": ("dipole", 1.0 / ATOMIC_DIPOLE_C_M),
    # mass
    "au_mass": ("mass", 1.0),
    "u": ("mass", ELECTRON_MASSES_PER_AMU),
    # angular frequency
    "au_frequency": ("frequency", 1.0),
    "rad/fs": ("frequency", ATOMIC_TIME_S / 1e-15),
    # dimensionless passthrough
    "dimensionless": ("dimensionless", 1.0),
    "rad": ("dimensionless", 1.0),
}

# Convenience aliases seen in configs and the literature.
_ALIASES = {
    "Eh": "hartree",
    "ev": "eV",
    "a.u.": "dimensionless",
    "Angstrom": "angstrom",
    "A": "angstrom",
    "Debye": "debye",
    "D": "debye",
    "amu": "u",
    "au": "dimensionless",
}


def _lookup(tag: str) -> tuple[str, float]:
    t = _ALIASES.get(tag, tag)
    if t not in _UNITS:
        raise UnitError(f"unknown unit tag {tag!r}")
    return _UNITS[t]


def dimension_of(tag: str) -> str:
    """Dimension name ('energy', 'field', ...) for a unit tag."""
    return _lookup(tag)[0]


def convert(value: float, from_unit: str, to_unit: str) -> float:
    """Convert ``value`` between two dimensionally compatible units.

    Pure linear scaling by CODATA constants; raises :class:`UnitError` if the
    units live in different dimensions.
    """
    dim_f, scale_f = _lookup(from_unit)
    dim_t, scale_t = _lookup(to_unit)
    if dim_f != dim_t:
        raise UnitError(
            f"cannot convert {from_unit!r} ({dim_f}) to {to_unit!r} ({dim_t})"
        )
    return value * (scale_f / scale_t)


def to_au(value: float, unit: str) -> float:
    """Convert ``value`` in ``unit`` to atomic units of the same dimension."""
    return value * _lookup(unit)[1]


def from_au(value: float, unit: str) -> float:
    """Convert an atomic-unit ``value`` to ``unit``."""
    return value / _lookup(unit)[1]
