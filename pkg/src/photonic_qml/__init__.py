"""Photonic quantum machine learning on simulated linear-optical circuits."""

from .errors import (
    ConfigError,
    DataError,
    NotPositiveDefiniteError,
    NumericalError,
    PhotonicError,
    RankDeficientError,
)
from .fock import (
    BeamSplitter,
    CircuitSpec,
    DiagonalObservable,
    FockState,
    ModeUnitary,
    PhaseShifter,
    compile_circuit,
    enumerate_fock,
    expectation,
    output_distribution,
    permanent,
    transition_probability,
)

__version__ = "0.1.0"
