"""Pseudo-spectral lab for compressible capillary flow on periodic domains.

Four model variants of the isothermal compressible Navier-Stokes system
differing only in their capillary operator (none, local Laplacian, Gaussian
non-local, Bessel/order-parameter non-local), a dyadic frequency analyzer
computing Besov / hybrid / time-sliced norms, and a sweep harness that
measures convergence rates between the variants.
"""

from capns.grid import Grid, make_grid
from capns.kernels import CapillaryModel, Potential
from capns.pressure import PressureLaw
from capns.solver import PhysParams, State, StepperConfig, Trajectory, simulate

__all__ = [
    "Grid",
    "make_grid",
    "CapillaryModel",
    "Potential",
    "PressureLaw",
    "PhysParams",
    "State",
    "StepperConfig",
    "Trajectory",
    "simulate",
]

__version__ = "0.1.0"
