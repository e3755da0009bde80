import numpy as np
import pytest
from hypothesis import given, strategies as st

from vlclab import units


def test_known_field_conversion():
    # atomic field unit is 5.14220674763e9 V/cm
    assert units.from_au(1.0, "V/cm") == pytest.approx(5.14220674763e9, rel=1e-12)
    assert units.to_au(5.14220674763e3, "MV/cm") == pytest.approx(1.0, rel=1e-12)


def test_known_time_conversion():
    assert units.from_au(1.0, "fs") == pytest.approx(0.024188843265857, rel=1e-12)
    assert units.to_au(1.0, "fs") == pytest.approx(41.341373335, rel=1e-9)


def test_known_energy_conversions():
    assert units.to_au(27.211386245988, "eV") == pytest.approx(1.0, rel=1e-11)
    # one wavenumber in hartree
    assert units.to_au(1.0, "cm^-1") == pytest.approx(4.5563352529e-6, rel=1e-9)


def test_known_dipole_conversion():
    assert units.to_au(1.0, "debye") == pytest.approx(0.3934302695, rel=1e-9)


def test_mass_conversion():
    assert units.to_au(1.0, "u") == pytest.approx(1822.888486209, rel=1e-12)


def test_alpha_fs2_conversion():
    # alpha [fs^-2] shrinks by the square of the time-unit ratio
    alpha_au = units.to_au(1e-8, "fs^-2")
    sigma_au = 1.0 / np.sqrt(2.0 * alpha_au)
    sigma_fs = 1.0 / np.sqrt(2.0 * 1e-8)
    assert units.from_au(sigma_au, "fs") == pytest.approx(sigma_fs, rel=1e-12)


def test_dimension_of():
    assert units.dimension_of("MV/cm") == "field"
    assert units.dimension_of("fs^-2") == "inverse_time_squared"
    assert units.dimension_of("D") == "dipole"  # alias


def test_incompatible_dimensions_rejected():
    with pytest.raises(units.UnitError):
        units.convert(1.0, "eV", "bohr")


def test_unknown_tag_rejected():
    with pytest.raises(units.UnitError):
        units.to_au(1.0, "furlongs")


@given(
    st.floats(min_value=1e-12, max_value=1e12, allow_nan=False),
    st.sampled_from(["eV", "cm^-1", "hartree", "fs", "MV/cm", "debye", "angstrom"]),
)
def test_round_trip(value, tag):
    back = units.from_au(units.to_au(value, tag), tag)
    assert back == pytest.approx(value, rel=1e-12)


@given(st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
def test_convert_chain_consistency(value):
    # eV -> cm^-1 -> hartree equals eV -> hartree
    via = units.convert(units.convert(value, "eV", "cm^-1"), "cm^-1", "hartree")
    direct = units.convert(value, "eV", "hartree")
    assert via == pytest.approx(direct, rel=1e-12)
