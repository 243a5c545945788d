"""Simulation and Bell-test analysis for four-photon frustrated interference."""

from . import bell, dsl, fock, gaussian, layout, vacuum_bound

__version__ = "0.1.0"

__all__ = [
    "bell",
    "dsl",
    "fock",
    "gaussian",
    "layout",
    "vacuum_bound",
    "__version__",
]
