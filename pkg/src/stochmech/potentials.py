"""External potentials and their forces.

Each potential exposes value(x) and force(x) with force = -dV/dx, plus a
variant tag used by config files and manifests.  check_force_consistency
verifies the analytic force against a finite-difference derivative so a new
potential cannot ship with a sign error.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class HarmonicPotential:
    """V(x) = (m omega^2 / 2) x^2."""

    omega: float
    mass: float = 1.0
    variant = "harmonic"

    def __post_init__(self) -> None:
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise ValueError("omega must be positive and finite")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * self.mass * self.omega**2 * x**2

    def force(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -self.mass * self.omega**2 * x


@dataclass(frozen=True)
class DoubleWellPotential:
    """V(x) = a x^4 - b x^2; b = 0 gives a pure quartic well."""

    a: float
    b: float = 0.0
    variant = "double_well"

    def __post_init__(self) -> None:
        if not (self.a > 0 and np.isfinite(self.a)):
            raise ValueError("quartic coefficient a must be positive and finite")
        if not (self.b >= 0 and np.isfinite(self.b)):
            raise ValueError("quadratic coefficient b must be non-negative and finite")

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.a * x**4 - self.b * x**2

    def force(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -4.0 * self.a * x**3 + 2.0 * self.b * x


@dataclass(frozen=True)
class BarrierPotential:
    """Smooth barrier V(x) = height / cosh^2((x - center) / width)."""

    height: float
    width: float
    center: float = 0.0
    variant = "barrier"

    def __post_init__(self) -> None:
        if not (self.height > 0 and np.isfinite(self.height)):
            raise ValueError("barrier height must be positive and finite")
        if not (self.width > 0 and np.isfinite(self.width)):
            raise ValueError("barrier width must be positive and finite")
        if not np.isfinite(self.center):
            raise ValueError("barrier center must be finite")

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = (x - self.center) / self.width
        return self.height / np.cosh(z) ** 2

    def force(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = (x - self.center) / self.width
        sech2 = 1.0 / np.cosh(z) ** 2
        return (2.0 * self.height / self.width) * sech2 * np.tanh(z)


@dataclass(frozen=True)
class FreePotential:
    """V(x) = 0."""

    variant = "free"

    def value(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def force(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))


Potential = Union[HarmonicPotential, DoubleWellPotential, BarrierPotential, FreePotential]

_VARIANTS = {
    "harmonic": HarmonicPotential,
    "double_well": DoubleWellPotential,
    "barrier": BarrierPotential,
    "free": FreePotential,
}


def make_potential(variant: str, **params) -> Potential:
    """Construct a potential by variant name; unknown names raise ValueError."""
    if variant == "quartic":
        # quartic is the b = 0 slice of the double well
        return DoubleWellPotential(b=0.0, **params)
    try:
        cls = _VARIANTS[variant]
    except KeyError:
        names = sorted(_VARIANTS) + ["quartic"]
        raise ValueError(
            f"unknown potential variant {variant!r}; expected one of {names}"
        ) from None
    return cls(**params)


def check_force_consistency(potential: Potential, x_samples, rel_tol: float = 1e-6) -> float:
    """Verify force == -dV/dx on the given samples via a 5-point stencil.

    Returns the worst relative deviation (scaled by the largest force
    magnitude among the samples) and raises ValueError if it exceeds rel_tol.
    """
    x = np.asarray(x_samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("need at least one sample point")
    h = 1e-3 * np.maximum(1.0, np.abs(x))
    v = potential.value
    deriv = (-v(x + 2 * h) + 8 * v(x + h) - 8 * v(x - h) + v(x - 2 * h)) / (12 * h)
    f = potential.force(x)
    scale = max(float(np.max(np.abs(f))), 1.0)
    worst = float(np.max(np.abs(f + deriv))) / scale
    if worst > rel_tol:
        raise ValueError(
            f"force inconsistent with -dV/dx: relative deviation {worst:.3e} > {rel_tol:.1e}"
        )
    return worst
