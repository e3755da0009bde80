import numpy as np
import pytest

from conftest import morse_levels
from vlclab.model import (
    HarmonicPotential,
    LinearDipole,
    MolecularModel,
    build_grid,
)
from vlclab.spectrum import (
    SpectrumError,
    detect_missing_rung,
    export_level_csv,
    fit_anharmonicity,
    kinetic_matrix,
    solve_bound_states,
    transition_dipoles,
)


def harmonic_model(mass=100.0, omega=0.05, slope=1.0, n=512, span=12.0, r_e=6.0):
    grid = build_grid(n, 0.0, span)
    return MolecularModel(
        name="harmonic",
        reduced_mass=mass,
        potential=HarmonicPotential(force_constant=mass * omega**2, r_e=r_e),
        dipole=LinearDipole(slope=slope, intercept=0.0),
        grid=grid,
    )


def test_kinetic_matrix_symmetric_positive():
    grid = build_grid(64, 0.0, 5.0)
    t = kinetic_matrix(grid, 2.0)
    assert np.allclose(t, t.T)
    evals = np.linalg.eigvalsh(t)
    assert evals.min() > -1e-12


def test_harmonic_oracle():
    mass, omega = 100.0, 0.05
    m = harmonic_model(mass, omega)
    s = solve_bound_states(m, n_max=20)
    n = np.arange(12)
    exact = omega * (n + 0.5)
    assert np.max(np.abs(s.energies[:12] - exact)) < 1e-7


def test_morse_oracle_lih(lih_model, lih_spectrum):
    pot = lih_model.potential
    n = np.arange(21)
    exact = morse_levels(pot.d_e, pot.a, lih_model.reduced_mass, n)
    assert np.max(np.abs(lih_spectrum.energies[:21] - exact)) < 1e-6


def test_lih_bound_count(lih_spectrum):
    assert lih_spectrum.n_bound >= 24
    assert lih_spectrum.n_dissoc == lih_spectrum.n_bound - 1
    # bound energies strictly below the grid-edge asymptote and ascending
    be = lih_spectrum.bound_energies()
    assert np.all(np.diff(be) > 0)
    assert be[-1] < lih_spectrum.asymptote


def test_wavefunctions_orthonormal(lih_spectrum):
    phi = lih_spectrum.bound_states()
    overlap = phi.T @ phi * lih_spectrum.grid.dx
    assert np.max(np.abs(overlap - np.eye(phi.shape[1]))) < 1e-9


def test_sign_convention_deterministic(lih_model):
    s1 = solve_bound_states(lih_model, n_max=10)
    s2 = solve_bound_states(lih_model, n_max=10)
    assert np.array_equal(s1.wavefunctions, s2.wavefunctions)
    # ground state is nodeless and positive
    assert s1.wavefunctions[:, 0].min() > -1e-8


def test_parity_law_linear_dipole():
    # harmonic + linear dipole: mu_{n,n+1} = slope sqrt((n+1)/(2 m w)),
    # mu_{n,n+2} forbidden
    mass, omega, slope = 100.0, 0.05, 0.7
    m = harmonic_model(mass, omega, slope)
    s = solve_bound_states(m, n_max=12)
    tdm = transition_dipoles(s, m)
    n = np.arange(8)
    exact = slope * np.sqrt((n + 1) / (2 * mass * omega))
    assert np.max(np.abs(tdm.adjacent()[:8] - exact) / exact) < 1e-6
    assert np.max(np.abs(tdm.double_step()[:8])) < 1e-8


def test_parity_law_even_dipole():
    mass, omega = 100.0, 0.05
    grid = build_grid(512, 0.0, 12.0)
    m = MolecularModel(
        name="even",
        reduced_mass=mass,
        potential=HarmonicPotential(force_constant=mass * omega**2, r_e=6.0),
        dipole=lambda r: 0.3 * (np.asarray(r, float) - 6.0) ** 2,
        grid=grid,
    )
    s = solve_bound_states(m, n_max=10)
    tdm = transition_dipoles(s, m)
    assert np.max(tdm.adjacent()[:6]) < 1e-8


def test_tdm_symmetric(lih_tdm):
    assert np.allclose(lih_tdm.values, lih_tdm.values.T)


def test_tdm_grid_mismatch(lih_spectrum):
    other = harmonic_model()
    with pytest.raises(SpectrumError):
        transition_dipoles(lih_spectrum, other)


def test_missing_rung_lih(lih_spectrum, lih_tdm):
    report = detect_missing_rung(lih_tdm, lih_spectrum)
    assert report.is_missing
    assert 0 < report.rung_index < lih_spectrum.n_dissoc
    assert report.min_tdm < 0.05 * report.median_adjacent_tdm
    assert report.trap_level == report.rung_index


def test_no_missing_rung_harmonic():
    m = harmonic_model()
    s = solve_bound_states(m, n_max=30)
    tdm = transition_dipoles(s, m)
    report = detect_missing_rung(tdm, s)
    assert not report.is_missing


def test_missing_rung_needs_levels():
    m = harmonic_model()
    s = solve_bound_states(m, n_max=30)
    shallow = type(s)(
        energies=s.energies,
        wavefunctions=s.wavefunctions,
        n_bound=3,
        grid=s.grid,
        asymptote=s.asymptote,
    )
    with pytest.raises(SpectrumError):
        detect_missing_rung(transition_dipoles(s, m), shallow)


def test_fit_anharmonicity_harmonic_is_zero():
    m = harmonic_model()
    s = solve_bound_states(m, n_max=20)
    w0, beta, resid = fit_anharmonicity(s, fit_range=(0, 8))
    assert w0 == pytest.approx(0.05, rel=1e-6)
    assert abs(beta) < 1e-6


def test_fit_anharmonicity_morse_exact(lih_model, lih_spectrum):
    # Morse ladder w_n = w (1 - (w/2De)(n+1)) is exactly linear in n:
    # the fit must recover w and beta = w/(4 De) to rounding
    pot = lih_model.potential
    w = pot.a * np.sqrt(2 * pot.d_e / lih_model.reduced_mass)
    w0, beta, resid = fit_anharmonicity(lih_spectrum, fit_range=(0, 10))
    assert w0 == pytest.approx(w, rel=1e-4)
    assert beta == pytest.approx(w / (4 * pot.d_e), rel=1e-3)
    assert resid < 1e-8


def test_fit_range_validation(lih_spectrum):
    with pytest.raises(SpectrumError):
        fit_anharmonicity(lih_spectrum, fit_range=(0, 200))


def test_export_level_csv(tmp_path, lih_spectrum, lih_tdm):
    path = tmp_path / "levels.csv"
    export_level_csv(path, lih_spectrum, lih_tdm)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "level,energy_au,tdm_up1_au,tdm_up2_au"
    assert len(lines) == lih_spectrum.n_bound + 1
