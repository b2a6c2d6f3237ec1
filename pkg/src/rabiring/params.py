"""Physical parameters and unit conventions for the three-cavity Rabi ring.

Conventions used throughout the package:

* sites are labelled 1..3 with periodic arithmetic (n+1 mod 3),
* the hopping phase theta is stored canonically in (-pi, pi],
* the three ring quasi-momenta are q in {0, +2pi/3, -2pi/3},
* all energies are reported in the same absolute units as the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

#: Admissible ring quasi-momenta.
Q_ZERO = 0.0
Q_PLUS = TWO_PI / 3.0
Q_MINUS = -TWO_PI / 3.0
MOMENTA = (Q_ZERO, Q_PLUS, Q_MINUS)


def wrap_angle(x: float) -> float:
    """Wrap an angle (radians) to the canonical interval (-pi, pi]."""
    y = math.fmod(x, TWO_PI)
    if y > math.pi:
        y -= TWO_PI
    elif y <= -math.pi:
        y += TWO_PI
    return y


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the Rabi ring Hamiltonian.

    omega: cavity frequency (> 0)
    delta: atomic gap (> 0)
    g1:    scaled atom-photon coupling g / sqrt(delta * omega) (>= 0)
    j:     photon hopping amplitude (>= 0)
    theta: hopping phase in radians, wrapped to (-pi, pi] on construction
    """

    omega: float
    delta: float
    g1: float
    j: float
    theta: float

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.g1 < 0:
            raise ValueError(f"g1 must be >= 0, got {self.g1}")
        if self.j < 0:
            raise ValueError(f"j must be >= 0, got {self.j}")
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @property
    def eta(self) -> float:
        """Frequency ratio delta/omega."""
        return self.delta / self.omega


@dataclass(frozen=True)
class FrequencyRatio:
    """Dimensionless frequency ratio eta = delta/omega (> 0)."""

    eta: float

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")

    def params(self, omega: float, g1: float, j: float, theta: float) -> ModelParams:
        """Build ModelParams at this ratio, holding g1 fixed."""
        return ModelParams(omega=omega, delta=self.eta * omega, g1=g1, j=j, theta=theta)


def bare_coupling(p: ModelParams) -> float:
    """Bare atom-photon coupling g = g1 * sqrt(delta * omega)."""
    return p.g1 * math.sqrt(p.delta * p.omega)


def flux(p: ModelParams) -> float:
    """Effective magnetic flux through the ring, 3*theta wrapped to (-pi, pi]."""
    return wrap_angle(3.0 * p.theta)
