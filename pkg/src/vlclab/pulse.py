"""Chirped Gaussian laser pulses and pulse trains.

The electric field is E0 exp(-alpha (t-t0)^2) cos(w(t) (t-t0) + phase) with a
linear frequency law fixed by the two dimensionless chirp parameters:
w(t0 - 2 sigma) = w0 (1 + gamma1) and w(t0 + 2 sigma) = w0 (1 - gamma2).

The cosine argument w(t) (t-t0) is the literal published form and the
default.  Because w(t) is itself linear in t, the instantaneous frequency
d/dt [w(t)(t-t0)] differs from w(t) by a factor-of-two chirp-slope term; an
integrated-phase carrier cos(int w dt') is available via ``carrier`` for
users who want the instantaneous frequency to equal w(t).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class PulseError(ValueError):
    pass


@dataclass(frozen=True)
class ChirpedPulse:
    e0: float                 # peak field [a.u.]
    alpha: float              # Gaussian spreading [a.u.^-2]
    t0: float                 # envelope center [a.u.]
    omega0: float             # reference angular frequency [a.u.]
    gamma1: float = 0.0
    gamma2: float = 0.0
    phase: float = 0.0        # additive carrier phase [rad]
    carrier: str = "literal"  # "literal" or "integrated"

    def __post_init__(self):
        if self.e0 < 0:
            raise PulseError("e0 must be >= 0")
        if self.alpha <= 0:
            raise PulseError("alpha must be > 0")
        if self.omega0 <= 0:
            raise PulseError("omega0 must be > 0")
        if self.carrier not in ("literal", "integrated"):
            raise PulseError(f"unknown carrier mode {self.carrier!r}")

    @property
    def sigma(self) -> float:
        """Envelope standard deviation, 1/sqrt(2 alpha)."""
        return 1.0 / np.sqrt(2.0 * self.alpha)

    def with_phase(self, phase: float) -> "ChirpedPulse":
        return replace(self, phase=phase)


def chirp_frequency(p: ChirpedPulse, t) -> np.ndarray:
    """Linear chirp law w(t), exact in the two-point parameterization."""
    tau = np.asarray(t, float) - p.t0
    return p.omega0 * (
        -(p.gamma1 + p.gamma2) * tau / (4.0 * p.sigma)
        + 1.0
        + 0.5 * (p.gamma1 - p.gamma2)
    )


def field(p: ChirpedPulse, t) -> np.ndarray:
    """Electric field at time(s) t [a.u.]."""
    tau = np.asarray(t, float) - p.t0
    envelope = p.e0 * np.exp(-p.alpha * tau * tau)
    if p.carrier == "literal":
        arg = chirp_frequency(p, t) * tau
    else:
        # int_{t0}^{t} w dt' for the linear law
        slope = -p.omega0 * (p.gamma1 + p.gamma2) / (4.0 * p.sigma)
        const = p.omega0 * (1.0 + 0.5 * (p.gamma1 - p.gamma2))
        arg = 0.5 * slope * tau * tau + const * tau
    return envelope * np.cos(arg + p.phase)


@dataclass(frozen=True)
class PulseTrain:
    """Ordered pulses whose total field is the pointwise sum of members."""

    pulses: tuple
    labels: tuple = ()

    def __post_init__(self):
        if not isinstance(self.pulses, tuple):
            object.__setattr__(self, "pulses", tuple(self.pulses))
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(f"pulse{i}" for i in range(len(self.pulses)))
            )
        elif len(self.labels) != len(self.pulses):
            raise PulseError("labels and pulses length mismatch")
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.pulses)


def single(p: ChirpedPulse, label: str = "main") -> PulseTrain:
    return PulseTrain(pulses=(p,), labels=(label,))


def train_field(train: PulseTrain, t) -> np.ndarray:
    total = np.zeros_like(np.asarray(t, float))
    for p in train.pulses:
        total = total + field(p, t)
    return total


def simulation_window(train: PulseTrain) -> tuple[float, float]:
    """[min(t0 - 4 sigma), max(t0 + 4 sigma)] over members (8 sigma per pulse)."""
    if len(train) == 0:
        raise PulseError("empty pulse train has no simulation window")
    starts = [p.t0 - 4.0 * p.sigma for p in train.pulses]
    ends = [p.t0 + 4.0 * p.sigma for p in train.pulses]
    return min(starts), max(ends)


def export_field_csv(path, train: PulseTrain, times) -> None:
    """(t, E) trace plus one column per labelled component."""
    times = np.asarray(times, float)
    cols = [field(p, times) for p in train.pulses]
    total = np.sum(cols, axis=0)
    with open(path, "w", newline="") as fh:
        fh.write("t_au,E_total_au," + ",".join(f"E_{l}_au" for l in train.labels) + "\n")
        for i, t in enumerate(times):
            parts = [repr(float(t)), repr(float(total[i]))]
            parts += [repr(float(c[i])) for c in cols]
            fh.write(",".join(parts) + "\n")
