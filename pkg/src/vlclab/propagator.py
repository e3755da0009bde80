"""Split-operator time evolution under the laser-driven Hamiltonian.

Second-order Suzuki-Trotter steps: half kinetic (momentum space), full
potential phase evaluated at the midpoint time, half kinetic.  Adjacent
half-kinetic factors of consecutive steps are fused, which leaves the physics
identical (same factorization) while halving the FFT count.

A complex absorbing potential (CAP) near the right edge removes outgoing
flux; dissociation is accounted both by time-integrating the probability
flux at a monitoring point and by tracking the norm absorbed by the CAP.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import MolecularModel
from .pulse import PulseTrain, field as pulse_field, simulation_window
from .spectrum import BoundSpectrum


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Wavefunction:
    amplitudes: np.ndarray
    time: float

    def norm2(self, dx: float) -> float:
        a = self.amplitudes
        return float(np.real(np.vdot(a, a)) * dx)


@dataclass(frozen=True)
class CapSpec:
    """-i xi ((x - x_onset) / (x_max - x_onset))^4 for x > x_onset, else 0.

    The quartic coordinate is measured from the onset and normalized by the
    CAP width; a CAP covering the whole grid would absorb bound states.
    """

    xi: float = 1.0
    x_onset: float = 12.0

    def magnitudes(self, x: np.ndarray, x_max: float) -> np.ndarray:
        """Non-negative s(x) such that V_abs = -i s(x)."""
        if self.x_onset >= x_max:
            raise PropagationError("CAP onset must lie inside the grid")
        s = np.zeros_like(x)
        mask = x > self.x_onset
        s[mask] = self.xi * ((x[mask] - self.x_onset) / (x_max - self.x_onset)) ** 4
        return s


@dataclass(frozen=True)
class PropagationConfig:
    dt: float = 1.0
    cap: CapSpec | None = CapSpec()
    flux_point: float | None = None       # default: CAP onset (or grid edge)
    record_stride: int | None = None      # default: <= 4000 snapshots per run
    record_contributions: bool = False
    contribution_levels: tuple | None = None   # target levels j; None = all bound
    t_start: float | None = None          # override the pulse-train window
    t_end: float | None = None
    max_snapshots: int = 4000

    def __post_init__(self):
        if self.dt <= 0:
            raise PropagationError("dt must be positive")

    def resolved_flux_point(self, x_max: float) -> float:
        if self.flux_point is not None:
            if self.cap is not None and self.flux_point > self.cap.x_onset:
                raise PropagationError("flux_point must not exceed the CAP onset")
            return self.flux_point
        return self.cap.x_onset if self.cap is not None else x_max


@dataclass(frozen=True)
class ContributionRecord:
    j: int
    k: int
    field_label: str
    times: np.ndarray
    series: np.ndarray    # cumulative contribution to |c_j| up to each time


@dataclass(eq=False)
class PropagationResult:
    times: np.ndarray                 # snapshot times
    populations: np.ndarray           # (n_snap, n_bound) |c_j|^2
    amplitudes: np.ndarray | None     # (n_snap, n_bound) c_j, if recorded
    continuum: np.ndarray             # norm2 - sum populations
    norm2: np.ndarray                 # total norm^2 at snapshots
    flux: np.ndarray                  # J(flux_point) at snapshots
    flux_point: float
    dissociation_flux: float          # time integral of J
    absorbed_norm: float              # norm lost to the CAP
    dissociation_probability: float   # absorbed + norm beyond flux point at end
    final: Wavefunction
    spectrum: BoundSpectrum | None
    contribution_data: dict | None = None   # {"labels", "targets", "times", "series"}

    def final_populations(self) -> np.ndarray:
        return self.populations[-1] if self.populations.size else np.empty(0)


def initialize_ground_state(spectrum: BoundSpectrum) -> Wavefunction:
    if spectrum.n_bound < 1:
        raise PropagationError("spectrum has no bound states")
    psi = spectrum.wavefunctions[:, 0].astype(complex)
    return Wavefunction(amplitudes=psi, time=0.0)


def flux(psi: np.ndarray, model: MolecularModel, x_point: float) -> float:
    """Probability density flux J = (hbar/m) Im(psi* dpsi/dx) at x_point.

    The derivative is spectral: IFFT(i k FFT(psi)).
    """
    grid = model.grid
    idx = grid.index_of(x_point)
    dpsi = np.fft.ifft(1j * grid.k * np.fft.fft(psi))
    return float(np.imag(np.conj(psi[idx]) * dpsi[idx]) / model.reduced_mass)


def step(
    psi: Wavefunction,
    model: MolecularModel,
    train: PulseTrain,
    config: PropagationConfig,
    t: float | None = None,
) -> Wavefunction:
    """One second-order split step of length config.dt starting at time t."""
    grid = model.grid
    if psi.amplitudes.shape != (grid.n_points,):
        raise PropagationError("wavefunction does not match the model grid")
    t = psi.time if t is None else t
    h = config.dt
    v = model.potential_on_grid()
    mu = model.dipole_on_grid()
    s = config.cap.magnitudes(grid.x, grid.x_max) if config.cap else 0.0
    kin = np.exp(-1j * grid.k**2 / (2.0 * model.reduced_mass) * (h / 2.0))
    e_mid = float(np.sum([pulse_field(p, t + h / 2.0) for p in train.pulses]))
    pot = np.exp(-1j * (v - mu * e_mid) * h - s * h)
    out = np.fft.ifft(kin * np.fft.fft(psi.amplitudes))
    out *= pot
    out = np.fft.ifft(kin * np.fft.fft(out))
    return Wavefunction(amplitudes=out, time=t + h)


def _steps_for_window(t_start: float, t_end: float, dt: float):
    """Uniform steps of dt plus a trailing partial step if needed."""
    span = t_end - t_start
    n_full = int(np.floor(span / dt + 1e-12))
    rem = span - n_full * dt
    widths = [dt] * n_full
    if rem > 1e-9 * dt:
        widths.append(rem)
    return np.asarray(widths)


class _Engine:
    """Precomputed factors shared by propagation loops on one model."""

    def __init__(self, model: MolecularModel, config: PropagationConfig):
        grid = model.grid
        self.model = model
        self.config = config
        self.grid = grid
        self.v = model.potential_on_grid()
        self.mu = model.dipole_on_grid()
        self.cap_mag = (
            config.cap.magnitudes(grid.x, grid.x_max)
            if config.cap is not None
            else np.zeros(grid.n_points)
        )
        self.flux_x = config.resolved_flux_point(grid.x_max)
        self.flux_idx = grid.index_of(self.flux_x)
        m = model.reduced_mass
        self.kin_half = {}  # step width -> half-kinetic factor
        self._kin_arg = -1j * grid.k**2 / (2.0 * m)
        # spectral evaluation of psi and dpsi at the flux index from FFT(psi):
        # psi_m = (1/n) sum_j F_j e^{i k_j m dx}
        n = grid.n_points
        phase = np.exp(1j * grid.k * (self.flux_idx * grid.dx)) / n
        self.w_psi = phase
        self.w_dpsi = 1j * grid.k * phase
        self.beyond_mask = grid.x > self.flux_x

    def kin(self, h: float) -> np.ndarray:
        key = round(h, 15)
        if key not in self.kin_half:
            self.kin_half[key] = np.exp(self._kin_arg * (h / 2.0))
        return self.kin_half[key]

    def pot_phase(self, h: float) -> np.ndarray:
        """Field-free potential phase including CAP decay."""
        return np.exp(-1j * self.v * h - self.cap_mag * h)

    def flux_from_spectrum(self, psi_hat: np.ndarray) -> float:
        a = self.w_psi @ psi_hat
        b = self.w_dpsi @ psi_hat
        return float(np.imag(np.conj(a) * b) / self.model.reduced_mass)


def _component_fields(train: PulseTrain, times: np.ndarray) -> np.ndarray:
    return np.array([pulse_field(p, times) for p in train.pulses])


def propagate(
    model: MolecularModel,
    spectrum: BoundSpectrum | None,
    train: PulseTrain,
    config: PropagationConfig,
    psi0: Wavefunction | None = None,
) -> PropagationResult:
    """Full time loop over the pulse-train window."""
    eng = _Engine(model, config)
    grid = model.grid
    if config.t_start is not None and config.t_end is not None:
        t_start, t_end = config.t_start, config.t_end
    else:
        t_start, t_end = simulation_window(train)
        if config.t_start is not None:
            t_start = config.t_start
        if config.t_end is not None:
            t_end = config.t_end
    widths = _steps_for_window(t_start, t_end, config.dt)
    n_steps = len(widths)
    t_edges = t_start + np.concatenate([[0.0], np.cumsum(widths)])
    t_mids = t_edges[:-1] + widths / 2.0

    if psi0 is None:
        if spectrum is None:
            raise PropagationError("need a spectrum or an explicit initial state")
        psi0 = replace(initialize_ground_state(spectrum), time=t_start)
    psi = psi0.amplitudes.astype(complex)
    if psi.shape != (grid.n_points,):
        raise PropagationError("initial state does not match the model grid")
    norm0 = float(np.real(np.vdot(psi, psi)) * grid.dx)

    e_mid_comp = _component_fields(train, t_mids)       # (P, n_steps)
    e_mid = e_mid_comp.sum(axis=0)

    stride = config.record_stride
    if stride is None:
        stride = max(1, int(np.ceil(n_steps / config.max_snapshots)))
    snap_steps = list(range(0, n_steps + 1, stride))
    if snap_steps[-1] != n_steps:
        snap_steps.append(n_steps)
    snap_set = set(snap_steps)

    phi = spectrum.bound_states() if spectrum is not None else None
    nb = phi.shape[1] if phi is not None else 0
    dx = grid.dx

    record_contrib = config.record_contributions
    if record_contrib:
        if spectrum is None:
            raise PropagationError("contribution recording requires a spectrum")
        targets = (
            tuple(config.contribution_levels)
            if config.contribution_levels is not None
            else tuple(range(nb))
        )
        for j in targets:
            if not 0 <= j < nb:
                raise PropagationError(f"contribution level {j} outside bound range")
        tdm_rows = None  # filled below
        from .spectrum import transition_dipoles

        tdm_rows = transition_dipoles(spectrum, model).values
        e_edge_comp = _component_fields(train, t_edges)  # (P, n_steps+1)
        n_comp = len(train)
        contrib = np.zeros((len(targets), nb, n_comp))
        contrib_series = np.zeros((len(snap_steps), len(targets), nb, n_comp))
        theta_frozen = np.zeros(len(targets))
        prev_integrand = np.zeros((len(targets), nb, n_comp))

    times_out, pops_out, amps_out, norm_out, flux_out = [], [], [], [], []

    def project(p):
        return (phi.T @ p) * dx if phi is not None else np.empty(0)

    def contrib_integrand(c, i_edge):
        """Integrand of the per-level contribution integral at edge i."""
        out = np.empty((len(targets), nb, n_comp))
        for a, j in enumerate(targets):
            cj = c[j]
            if abs(cj) >= 1e-8:
                theta_frozen[a] = np.angle(cj)
            rot = np.exp(-1j * theta_frozen[a])
            base = 1j * tdm_rows[j] * c * rot        # (nb,) before field factor
            for pcomp in range(n_comp):
                out[a, :, pcomp] = np.real(base * e_edge_comp[pcomp, i_edge])
            out[a, j, :] = 0.0
        return out

    def snapshot(i_step, psi_pos, fl):
        c = project(psi_pos)
        pops = np.abs(c) ** 2
        n2 = float(np.real(np.vdot(psi_pos, psi_pos)) * dx)
        if not np.isfinite(n2) or n2 > norm0 * (1.0 + 1e-6) + 1e-6:
            mx = float(np.max(np.abs(psi_pos)))
            if not np.isfinite(mx) or not np.isfinite(n2):
                raise PropagationError(
                    f"non-finite wavefunction at step {i_step} (max|psi|={mx})"
                )
        times_out.append(t_edges[i_step])
        pops_out.append(pops)
        amps_out.append(c)
        norm_out.append(n2)
        flux_out.append(fl)
        return c

    # --- time loop (fused half-kinetic steps) ---
    c0 = snapshot(0, psi, flux(psi, model, eng.flux_x))
    if record_contrib:
        prev_integrand = contrib_integrand(c0, 0)
        contrib_series[0] = contrib
    snap_i = 1

    flux_integral = 0.0
    prev_flux = flux_out[0]
    psi_hat = np.fft.fft(psi)
    for i in range(n_steps):
        h = widths[i]
        kin = eng.kin(h)
        psi_hat = psi_hat * kin
        psi = np.fft.ifft(psi_hat)
        psi *= eng.pot_phase(h)
        psi *= np.exp((1j * h * e_mid[i]) * eng.mu)
        psi_hat = np.fft.fft(psi)
        psi_hat *= kin
        fl = eng.flux_from_spectrum(psi_hat)
        flux_integral += 0.5 * (prev_flux + fl) * h
        prev_flux = fl
        need_pos = ((i + 1) in snap_set) or record_contrib
        if need_pos:
            psi_pos = np.fft.ifft(psi_hat)
            if record_contrib:
                c = project(psi_pos)
                integ = contrib_integrand(c, i + 1)
                contrib += 0.5 * h * (prev_integrand + integ)
                prev_integrand = integ
            if (i + 1) in snap_set:
                snapshot(i + 1, psi_pos, fl)
                if record_contrib:
                    contrib_series[snap_i] = contrib
                snap_i += 1

    psi_final = np.fft.ifft(psi_hat)
    norm_final = float(np.real(np.vdot(psi_final, psi_final)) * dx)
    absorbed = max(0.0, norm0 - norm_final)
    beyond = float(np.real(np.vdot(psi_final[eng.beyond_mask], psi_final[eng.beyond_mask])) * dx)
    dissociation = min(1.0, absorbed + beyond)

    result = PropagationResult(
        times=np.asarray(times_out),
        populations=np.asarray(pops_out),
        amplitudes=np.asarray(amps_out) if nb else None,
        continuum=np.asarray(norm_out) - np.sum(np.asarray(pops_out), axis=1)
        if nb
        else np.asarray(norm_out),
        norm2=np.asarray(norm_out),
        flux=np.asarray(flux_out),
        flux_point=eng.flux_x,
        dissociation_flux=flux_integral,
        absorbed_norm=absorbed,
        dissociation_probability=dissociation,
        final=Wavefunction(amplitudes=psi_final, time=t_edges[-1]),
        spectrum=spectrum,
    )
    if record_contrib:
        result.contribution_data = {
            "labels": train.labels,
            "targets": targets,
            "times": np.asarray(times_out),
            "series": contrib_series,
        }
    return result


def contributions(result: PropagationResult, j: int) -> list[ContributionRecord]:
    """Per-source-level, per-field-component cumulative contributions to |c_j|."""
    data = result.contribution_data
    if data is None:
        raise PropagationError("propagation did not record contributions")
    if j not in data["targets"]:
        raise PropagationError(f"level {j} was not a recorded contribution target")
    a = data["targets"].index(j)
    series = data["series"]          # (n_snap, T, nb, P)
    nb = series.shape[2]
    records = []
    for k in range(nb):
        if k == j:
            continue
        for p, label in enumerate(data["labels"]):
            records.append(
                ContributionRecord(
                    j=j,
                    k=k,
                    field_label=label,
                    times=data["times"],
                    series=series[:, a, k, p],
                )
            )
    return records


# --------------------------------------------------------------------------
# Light-weight batched propagation for optimizers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunSummary:
    dissociation_probability: float
    dissociation_flux: float
    absorbed_norm: float
    final_populations: np.ndarray


def propagate_many(
    model: MolecularModel,
    spectrum: BoundSpectrum,
    trains: list[PulseTrain],
    config: PropagationConfig,
) -> list[RunSummary]:
    """Propagate several pulse trains in one vectorized loop.

    All trains share the union of their windows.  Only end-of-run summaries
    are recorded; results match ``propagate`` up to floating-point
    reassociation.
    """
    if not trains:
        return []
    eng = _Engine(model, config)
    grid = model.grid
    windows = [simulation_window(tr) for tr in trains]
    t_start = min(w[0] for w in windows)
    t_end = max(w[1] for w in windows)
    if config.t_start is not None:
        t_start = config.t_start
    if config.t_end is not None:
        t_end = config.t_end
    widths = _steps_for_window(t_start, t_end, config.dt)
    n_steps = len(widths)
    t_mids = t_start + np.concatenate([[0.0], np.cumsum(widths)])[:-1] + widths / 2.0

    e_mid = np.array([_component_fields(tr, t_mids).sum(axis=0) for tr in trains])

    psi0 = initialize_ground_state(spectrum).amplitudes
    b = len(trains)
    psi = np.tile(psi0, (b, 1)).astype(complex)
    dx = grid.dx

    flux_integral = np.zeros(b)
    psi_hat = np.fft.fft(psi, axis=1)
    prev_flux = np.zeros(b)
    mu = eng.mu
    for i in range(n_steps):
        h = widths[i]
        kin = eng.kin(h)
        psi_hat *= kin
        psi = np.fft.ifft(psi_hat, axis=1)
        psi *= eng.pot_phase(h)
        psi *= np.exp(1j * h * np.outer(e_mid[:, i], mu))
        psi_hat = np.fft.fft(psi, axis=1)
        psi_hat *= kin
        a = psi_hat @ eng.w_psi
        d = psi_hat @ eng.w_dpsi
        fl = np.imag(np.conj(a) * d) / model.reduced_mass
        flux_integral += 0.5 * (prev_flux + fl) * h
        prev_flux = fl
    psi = np.fft.ifft(psi_hat, axis=1)
    if not np.all(np.isfinite(psi)):
        bad = [int(r) for r in np.where(~np.all(np.isfinite(psi), axis=1))[0]]
        raise PropagationError(f"non-finite wavefunction in batch rows {bad}")
    norm_final = np.real(np.einsum("ij,ij->i", np.conj(psi), psi)) * dx
    beyond = (
        np.real(
            np.einsum(
                "ij,ij->i", np.conj(psi[:, eng.beyond_mask]), psi[:, eng.beyond_mask]
            )
        )
        * dx
    )
    absorbed = np.clip(1.0 - norm_final, 0.0, None)
    phi = spectrum.bound_states()
    cs = psi @ phi * dx
    pops = np.abs(cs) ** 2
    return [
        RunSummary(
            dissociation_probability=float(min(1.0, absorbed[r] + beyond[r])),
            dissociation_flux=float(flux_integral[r]),
            absorbed_norm=float(absorbed[r]),
            final_populations=pops[r],
        )
        for r in range(b)
    ]


def export_snapshots_csv(path, result: PropagationResult) -> None:
    """(t, level populations..., continuum, flux, cumulative dissociation est.)."""
    nb = result.populations.shape[1] if result.populations.size else 0
    with open(path, "w", newline="") as fh:
        head = ["t_au"] + [f"pop_{j}" for j in range(nb)] + ["continuum", "flux_au", "norm2"]
        fh.write(",".join(head) + "\n")
        for i, t in enumerate(result.times):
            row = [repr(float(t))]
            row += [repr(float(v)) for v in result.populations[i]]
            row += [
                repr(float(result.continuum[i])),
                repr(float(result.flux[i])),
                repr(float(result.norm2[i])),
            ]
            fh.write(",".join(row) + "\n")


def export_contributions_csv(path, result: PropagationResult) -> None:
    data = result.contribution_data
    if data is None:
        raise PropagationError("no contribution records to export")
    with open(path, "w", newline="") as fh:
        fh.write("t_au,j,k,field_label,delta_c\n")
        series = data["series"]
        for a, j in enumerate(data["targets"]):
            for k in range(series.shape[2]):
                if k == j:
                    continue
                for p, label in enumerate(data["labels"]):
                    for i, t in enumerate(data["times"]):
                        fh.write(
                            f"{float(t)!r},{j},{k},{label},{float(series[i, a, k, p])!r}\n"
                        )


def save_checkpoint(path, psi: Wavefunction, model: MolecularModel) -> None:
    """Binary wavefunction checkpoint.

    Layout (little-endian): magic 'VLWF', uint32 n_points, float64 x_min,
    x_max, time, then n interleaved (real, imag) float64 pairs.
    """
    grid = model.grid
    with open(path, "wb") as fh:
        fh.write(b"VLWF")
        fh.write(np.array([grid.n_points], dtype="<u4").tobytes())
        fh.write(
            np.array([grid.x_min, grid.x_max, psi.time], dtype="<f8").tobytes()
        )
        inter = np.empty(2 * grid.n_points)
        inter[0::2] = psi.amplitudes.real
        inter[1::2] = psi.amplitudes.imag
        fh.write(inter.astype("<f8").tobytes())


def load_checkpoint(path, model: MolecularModel) -> Wavefunction:
    raw = open(path, "rb").read()
    if raw[:4] != b"VLWF":
        raise PropagationError(f"{path} is not a wavefunction checkpoint")
    n = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    x_min, x_max, t = np.frombuffer(raw[8:32], dtype="<f8")
    grid = model.grid
    if n != grid.n_points or x_min != grid.x_min or x_max != grid.x_max:
        raise PropagationError("checkpoint grid does not match the model grid")
    inter = np.frombuffer(raw[32:], dtype="<f8")
    if inter.size != 2 * n:
        raise PropagationError("truncated checkpoint payload")
    return Wavefunction(amplitudes=inter[0::2] + 1j * inter[1::2], time=float(t))
