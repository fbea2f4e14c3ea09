"""Spectral analysis on finite admissible systems, directed pairs and coupled spaces."""

__version__ = "0.1.0"

from .filters import LowPassFilter, make_cutoff_filter, make_filter
from .system import (
    AdmissibleSystem,
    build_undirected_system,
    coefficients,
    heat_kernel,
    synthesize,
)
from .digraph import DirectedPair, build_directed_pair, polar_decompose, sigma, tau_pyramid
from .twosys import ConnectionMatrix, JointDistance, LandmarkSet
from .tauber import DiscreteMeasure
from .jacobi import build_circle_system, build_hemisphere_disc_pair

__all__ = [
    "__version__",
    "LowPassFilter",
    "make_filter",
    "make_cutoff_filter",
    "AdmissibleSystem",
    "build_undirected_system",
    "coefficients",
    "synthesize",
    "heat_kernel",
    "DirectedPair",
    "build_directed_pair",
    "polar_decompose",
    "sigma",
    "tau_pyramid",
    "ConnectionMatrix",
    "JointDistance",
    "LandmarkSet",
    "DiscreteMeasure",
    "build_circle_system",
    "build_hemisphere_disc_pair",
]
