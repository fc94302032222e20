"""Deterministic LOCC transformations of pure states in cyclic qubit networks."""
from .errors import NetLoccError
from .network import NetworkGraph, build_network_state
from .standard_form import DegeneracyClass, bell_diagonalize, classify, stabilizer

__all__ = ["NetLoccError", "NetworkGraph", "build_network_state", "DegeneracyClass", "bell_diagonalize", "classify", "stabilizer"]
__version__ = "0.1.0"
