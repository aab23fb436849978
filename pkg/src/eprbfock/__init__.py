"""Exact and perturbative EPRB spin correlations for two fermions, in first
quantization, in finite Fock spaces, and in a first-order field theory with
Gaussian wavepackets (hbar = 1)."""

from .eprb import AnalyzerPair, correlation_1q, correlation_closed_form, correlation_fock, fit_two_gamma
from .field import FieldScenario, PointImpulse, SampledGrid, UniformInSpace, Wavepacket
from .fock import FockOperator, FockSpace, FockVector, Mode

__version__ = "0.1.0"

__all__ = [
    "AnalyzerPair", "FieldScenario", "FockOperator", "FockSpace", "FockVector", "Mode",
    "PointImpulse", "SampledGrid", "UniformInSpace", "Wavepacket", "correlation_1q",
    "correlation_closed_form", "correlation_fock", "fit_two_gamma",
]
