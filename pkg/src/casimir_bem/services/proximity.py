"""
Proximity-force estimates for perfect conductors at zero temperature, in
ħc units with lengths in L. Used as physics oracles for trends and signs.
"""

import math
from typing import Sequence, Tuple

import numpy as np

from casimir_bem.core.errors import InvalidArgumentError


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise InvalidArgumentError(f"{name} must be positive, got {value}")
    return float(value)


def plate_energy_per_area(gap: float) -> float:
    """-π²/(720 d³)."""
    d = _positive("gap", gap)
    return -(math.pi**2) / (720.0 * d**3)


def plate_pressure(gap: float) -> float:
    """-π²/(240 d⁴); negative means attraction."""
    d = _positive("gap", gap)
    return -(math.pi**2) / (240.0 * d**4)


def effective_radius(radius_a: float, radius_b: float) -> float:
    a, b = _positive("radius_a", radius_a), _positive("radius_b", radius_b)
    return a * b / (a + b)


def sphere_sphere_energy(radius_a: float, radius_b: float, gap: float) -> float:
    """-π³ R_eff / (720 d²)."""
    d = _positive("gap", gap)
    return -(math.pi**3) * effective_radius(radius_a, radius_b) / (720.0 * d**2)


def sphere_sphere_force(radius_a: float, radius_b: float, gap: float) -> float:
    """-π³ R_eff / (360 d³), the gap derivative of the energy with a minus sign."""
    d = _positive("gap", gap)
    return -(math.pi**3) * effective_radius(radius_a, radius_b) / (360.0 * d**3)


def fit_power_law(gaps: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares fit |value| ≈ A·gap^n in log-log space.

    Returns (n, A).
    """
    x = np.log(np.asarray(gaps, dtype=np.float64))
    y = np.log(np.abs(np.asarray(values, dtype=np.float64)))
    if x.size < 2 or x.shape != y.shape:
        raise InvalidArgumentError("power-law fit needs at least two matching samples")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(math.exp(intercept))
