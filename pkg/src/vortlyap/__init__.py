"""Numerical monitors for Lyapunov functionals of the 3-D vorticity equation on the torus."""

from .spectral import GridSpec, PhysicalField, SpectralField, make_grid
from .littlewood_paley import build_partition, decompose, reconstruct
from .functionals import BesovParams, FunctionalReport, besov_norm, lp_norm, q_p
from .vorticity import biot_savart, dissipativity_pairing, nonlinear_term
from .solver import SolverConfig, run, step

__all__ = [
    "GridSpec",
    "PhysicalField",
    "SpectralField",
    "make_grid",
    "build_partition",
    "decompose",
    "reconstruct",
    "BesovParams",
    "FunctionalReport",
    "besov_norm",
    "lp_norm",
    "q_p",
    "biot_savart",
    "dissipativity_pairing",
    "nonlinear_term",
    "SolverConfig",
    "run",
    "step",
]

__version__ = "0.1.0"
