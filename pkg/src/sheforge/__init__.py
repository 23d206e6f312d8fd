"""Selective harmonic elimination for cascaded H-bridge inverters.

Switching-angle solver, a small neural surrogate for the modulation index to
angle map, and a behavioral inverter simulator with harmonic analysis.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    ExtrapolationError,
    FormatError,
    InfeasibleError,
    NumericalError,
    SheforgeError,
)
from .harmonics import (  # noqa: E402
    SwitchingAngleSet,
    WaveformTrace,
    analytic_thd,
    harmonic_amplitude,
    modulation_index_from_fundamental,
    synthesize_staircase,
)
from .solver import HarmonicSet, newton_solve, sweep_solutions  # noqa: E402
from .spectrum import harmonic_spectrum, thd  # noqa: E402
