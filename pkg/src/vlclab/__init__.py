"""vlclab: a numerical laboratory for vibrational ladder climbing.

One-dimensional quantum wavepacket dynamics of diatomic molecules driven by
chirped laser pulses: Fourier-grid eigensolver, split-operator propagation
with an absorbing boundary, missing-rung detection in the transition-dipole
ladder, double-pulse restoration of the interrupted ladder, black-box pulse
optimization, and parameter-map orchestration.

All internal quantities are in Hartree atomic units; see :mod:`vlclab.units`
for I/O conversions.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    analysis,
    config,
    model,
    optimize,
    propagator,
    pulse,
    regime,
    spectrum,
    units,
)
