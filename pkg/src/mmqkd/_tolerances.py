"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    symmetry: float = 1e-12
    physicality: float = 1e-9
    purity: float = 1e-9
    pairing: float = 1e-9
    weights: float = 1e-12
    entropy_floor: float = 1e-12


TOL = Tolerances()
