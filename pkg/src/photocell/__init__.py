"""Steady-state and transient kinetics of an exciton-coupled donor-pair photocell."""

from __future__ import annotations

from .kinetics import build_generator, evolve, steady_state
from .observables import current, voltage
from .physics import K_B, ModelParams, build_occupations, dimer_eigensystem, planck_occupation

__version__ = "0.1.0"

__all__ = [
    "K_B",
    "ModelParams",
    "build_generator",
    "build_occupations",
    "current",
    "dimer_eigensystem",
    "evolve",
    "planck_occupation",
    "steady_state",
    "voltage",
]
