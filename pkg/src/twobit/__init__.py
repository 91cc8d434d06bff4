"""Two-qubit phase-error detection code: simulation and analysis of the NMR
coding and control experiments."""

__version__ = "0.1.0"
