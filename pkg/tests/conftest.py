import numpy as np
import pytest

from vlclab.model import MolecularModel, build_grid, preset
from vlclab.spectrum import solve_bound_states, transition_dipoles


@pytest.fixture(scope="session")
def lih_model():
    return preset("LiH")


@pytest.fixture(scope="session")
def lih_spectrum(lih_model):
    return solve_bound_states(lih_model, n_max=40)


@pytest.fixture(scope="session")
def lih_tdm(lih_model, lih_spectrum):
    return transition_dipoles(lih_spectrum, lih_model)


@pytest.fixture(scope="session")
def lih_model_512(lih_model):
    """Half-resolution LiH for propagation-heavy tests."""
    return MolecularModel(
        name="LiH",
        reduced_mass=lih_model.reduced_mass,
        potential=lih_model.potential,
        dipole=lih_model.dipole,
        grid=build_grid(512, 1.5, 15.0),
    )


@pytest.fixture(scope="session")
def lih_spectrum_512(lih_model_512):
    return solve_bound_states(lih_model_512, n_max=40)


def morse_levels(d_e: float, a: float, mass: float, n: np.ndarray) -> np.ndarray:
    """Closed-form Morse eigenvalues for V(inf) = 0 (i.e. minimum at -D_e)."""
    omega = a * np.sqrt(2.0 * d_e / mass)
    return -d_e + omega * (n + 0.5) - (omega**2 / (4.0 * d_e)) * (n + 0.5) ** 2
