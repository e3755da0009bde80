"""Bound vibrational eigenstates and transition dipole moments.

The eigensolver builds the dense Fourier-grid Hamiltonian: the kinetic
operator is exact in momentum space (constructed via the DFT of the identity)
and the potential is diagonal in position space.  On a 1024-point grid the
dense symmetric eigensolve takes well under a second.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .model import MolecularModel, SpatialGrid


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundSpectrum:
    """Ascending eigenenergies and grid eigenfunctions of the molecular well.

    ``wavefunctions[:, j]`` is the j-th eigenfunction, normalized under the
    grid inner product (sum * dx) and sign-fixed so the leftmost antinode is
    positive, which keeps transition-dipole signs deterministic.
    """

    energies: np.ndarray
    wavefunctions: np.ndarray = field(repr=False)
    n_bound: int
    grid: SpatialGrid
    asymptote: float

    @property
    def n_dissoc(self) -> int:
        """Index of the highest bound level."""
        return self.n_bound - 1

    def bound_energies(self) -> np.ndarray:
        return self.energies[: self.n_bound]

    def bound_states(self) -> np.ndarray:
        return self.wavefunctions[:, : self.n_bound]


@dataclass(frozen=True, eq=False)
class TdmMatrix:
    """Symmetric matrix <phi_j| mu(x) |phi_k> over bound states, in a.u."""

    values: np.ndarray

    def adjacent(self) -> np.ndarray:
        """|mu_{j,j+1}| for j = 0 .. n_bound-2."""
        return np.abs(np.diag(self.values, 1))

    def double_step(self) -> np.ndarray:
        """mu_{j,j+2} for j = 0 .. n_bound-3 (signed)."""
        return np.diag(self.values, 2).copy()


@dataclass(frozen=True)
class MissingRungReport:
    rung_index: int
    min_tdm: float
    median_adjacent_tdm: float
    is_missing: bool
    threshold: float

    @property
    def trap_level(self) -> int:
        """Level beneath the interrupted transition where population piles up."""
        return self.rung_index


def _fix_signs(phi: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so the leftmost antinode is positive."""
    out = phi.copy()
    n, m = phi.shape
    for j in range(m):
        col = out[:, j]
        absc = np.abs(col)
        floor = 0.05 * absc.max()
        idx = None
        for i in range(1, n - 1):
            if absc[i] > floor and absc[i] >= absc[i - 1] and absc[i] >= absc[i + 1]:
                idx = i
                break
        if idx is None:
            idx = int(np.argmax(absc))
        if col[idx] < 0:
            out[:, j] = -col
    return out


def kinetic_matrix(grid: SpatialGrid, reduced_mass: float) -> np.ndarray:
    """Dense spectral kinetic-energy matrix T = F^-1 diag(k^2/2m) F."""
    fwd = np.fft.fft(np.eye(grid.n_points), axis=0)
    t = np.fft.ifft((grid.k**2 / (2.0 * reduced_mass))[:, None] * fwd, axis=0)
    t = np.real(t)
    return 0.5 * (t + t.T)


def solve_bound_states(model: MolecularModel, n_max: int | None = None) -> BoundSpectrum:
    """Lowest eigenpairs of the Fourier-grid Hamiltonian.

    Bound/unbound classification is against the potential at the grid edge,
    V(x_max-dx), which is the asymptote seen by the propagation grid.
    """
    grid = model.grid
    if n_max is None:
        n_max = grid.n_points
    if n_max < 1 or n_max > grid.n_points:
        raise SpectrumError(f"n_max must be in [1, {grid.n_points}], got {n_max}")
    v = model.potential_on_grid()
    h = kinetic_matrix(grid, model.reduced_mass) + np.diag(v)
    energies, vectors = np.linalg.eigh(h)
    if not np.all(np.isfinite(energies)):
        raise SpectrumError("eigensolve did not converge to finite energies")
    energies = energies[:n_max]
    vectors = vectors[:, :n_max] / np.sqrt(grid.dx)
    asymptote = float(v[-1])
    n_bound = int(np.sum(energies < asymptote))
    vectors = _fix_signs(vectors)
    return BoundSpectrum(
        energies=energies,
        wavefunctions=vectors,
        n_bound=n_bound,
        grid=grid,
        asymptote=asymptote,
    )


def transition_dipoles(spectrum: BoundSpectrum, model: MolecularModel) -> TdmMatrix:
    """Grid-quadrature TDM matrix over the bound states."""
    if spectrum.grid != model.grid:
        raise SpectrumError("spectrum and model grids differ")
    phi = spectrum.bound_states()
    mu = model.dipole_on_grid()
    values = (phi * mu[:, None]).T @ phi * model.grid.dx
    return TdmMatrix(values=0.5 * (values + values.T))


def detect_missing_rung(
    tdm: TdmMatrix, spectrum: BoundSpectrum, threshold: float = 0.05
) -> MissingRungReport:
    """Interior minimum of the adjacent TDMs, flagged against the median.

    The rung index labels the lower level of the weakest adjacent transition;
    tie-break to the smallest index.
    """
    if spectrum.n_bound < 4:
        raise SpectrumError(f"need >= 4 bound levels, got {spectrum.n_bound}")
    adj = tdm.adjacent()
    interior = np.arange(1, spectrum.n_dissoc)
    j = int(interior[np.argmin(adj[interior])])
    med = float(np.median(adj))
    return MissingRungReport(
        rung_index=j,
        min_tdm=float(adj[j]),
        median_adjacent_tdm=med,
        is_missing=bool(adj[j] < threshold * med),
        threshold=threshold,
    )


def fit_anharmonicity(
    spectrum: BoundSpectrum, fit_range: tuple[int, int] = (0, 10)
) -> tuple[float, float, float]:
    """Least-squares fit of transition frequencies to w0 * (1 - 2 beta (n+1)).

    ``fit_range`` selects transition indices n (inclusive).  Returns
    (omega0, beta, residual_norm).  A perfectly harmonic ladder gives
    beta = 0 exactly.
    """
    lo, hi = fit_range
    if lo < 0 or hi >= spectrum.n_dissoc or hi < lo + 1:
        raise SpectrumError(f"fit_range {fit_range} needs >= 2 transitions inside bound levels")
    n = np.arange(lo, hi + 1)
    w = np.diff(spectrum.bound_energies())[lo : hi + 1]
    if np.allclose(w, w[0], rtol=0, atol=1e-14):
        return float(w[0]), 0.0, 0.0
    # model w_n = w0 - c (n+1) with c = 2 w0 beta
    design = np.column_stack([np.ones_like(n, dtype=float), -(n + 1.0)])
    coef, *_ = np.linalg.lstsq(design, w, rcond=None)
    w0, c = float(coef[0]), float(coef[1])
    beta = c / (2.0 * w0)
    resid = float(np.linalg.norm(design @ coef - w))
    return w0, beta, resid


def export_level_csv(path, spectrum: BoundSpectrum, tdm: TdmMatrix) -> None:
    """One row per bound level: index, energy, adjacent TDM, double-step TDM."""
    adj = tdm.adjacent()
    d2 = tdm.double_step()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "energy_au", "tdm_up1_au", "tdm_up2_au"])
        for j in range(spectrum.n_bound):
            a = adj[j] if j < adj.size else ""
            b = d2[j] if j < d2.size else ""
            writer.writerow([j, repr(float(spectrum.energies[j])), a, b])
