"""Quench dynamics of trapped particles hit by a delta defect.

Loschmidt echoes, Kirkwood-Dirac work quasiprobabilities and the
coherence-dependent orthogonalization law, in units hbar = omega = 1.
"""

from .echo import QuasiprobTable, EchoSeries, kdq_table, echo_series, echo_closed_form_two_level, detect_cusps
from .output import VERSION as __version__
from .spectrum import PerturbedSpectrum, build_spectrum, build_strong_spectrum, build_finite_spectrum
from .states import InitialState, parse_state_spec

__all__ = [
    "__version__",
    "InitialState",
    "parse_state_spec",
    "PerturbedSpectrum",
    "build_spectrum",
    "build_strong_spectrum",
    "build_finite_spectrum",
    "QuasiprobTable",
    "EchoSeries",
    "kdq_table",
    "echo_series",
    "echo_closed_form_two_level",
    "detect_cusps",
]
