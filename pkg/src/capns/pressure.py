"""Pressure laws and the pointwise nonlinear coefficient functions.

Two laws are supported:

    gamma-law:      P(rho) = A rho^gamma              (A > 0, gamma >= 1)
    van der Waals:  P(rho) = RT rho / (1 - b rho) - a rho^2

No stability assumption is made at the reference state rho = 1: P'(1) may be
negative (van der Waals between phases), in which case the solver treats the
pressure gradient fully explicitly.

The enthalpy-like primitive H solves H'(x) = P'(x) / x in closed form:

    gamma-law:      H = A gamma/(gamma-1) rho^(gamma-1)   (A log rho if gamma=1)
    van der Waals:  H = RT (log(rho/(1-b rho)) + 1/(1-b rho)) - 2 a rho

and K(q) = P'(1) - P'(1+q)/(1+q), I(q) = q/(1+q) are the coefficient
functions multiplying the explicit pressure and viscous remainders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PressureLaw:
    kind: str  # "gamma" | "vdw"
    A: float = 1.0
    gamma: float = 2.0
    a: float = 0.0
    b: float = 0.0
    RT: float = 1.0

    def __post_init__(self):
        if self.kind == "gamma":
            if not (self.A > 0 and self.gamma >= 1):
                raise ValueError(f"gamma-law needs A > 0 and gamma >= 1, got A={self.A}, gamma={self.gamma}")
        elif self.kind == "vdw":
            if self.a < 0 or self.b < 0 or not self.RT > 0:
                raise ValueError("van der Waals needs a, b >= 0 and RT > 0")
        else:
            raise ValueError(f"unknown pressure law {self.kind!r}")

    def check_range(self, rho_min: float, rho_max: float) -> None:
        if rho_min <= 0:
            raise ValueError(f"density must stay positive, got min {rho_min}")
        if self.kind == "vdw" and self.b * rho_max >= 1.0:
            raise ValueError(
                f"van der Waals covolume saturated: b*rho = {self.b * rho_max:.3g} >= 1"
            )

    def P(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "gamma":
            return self.A * rho**self.gamma
        return self.RT * rho / (1.0 - self.b * rho) - self.a * rho**2

    def dP(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "gamma":
            return self.A * self.gamma * rho ** (self.gamma - 1.0)
        return self.RT / (1.0 - self.b * rho) ** 2 - 2.0 * self.a * rho

    def H(self, rho):
        """Primitive of P'(x)/x (defined up to a constant; differences matter)."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == "gamma":
            if self.gamma == 1.0:
                return self.A * np.log(rho)
            g = self.gamma
            return self.A * g / (g - 1.0) * rho ** (g - 1.0)
        brho = self.b * rho
        return self.RT * (np.log(rho / (1.0 - brho)) + 1.0 / (1.0 - brho)) - 2.0 * self.a * rho

    @property
    def dP1(self) -> float:
        """P'(1): sign decides whether the acoustic term can be made implicit."""
        return float(self.dP(1.0))


def K_coeff(law: PressureLaw, q):
    """K(q) = P'(1) - P'(1+q)/(1+q); identically zero for the gamma=2 law."""
    rho = 1.0 + np.asarray(q, dtype=float)
    return law.dP1 - law.dP(rho) / rho


def I_coeff(q):
    """I(q) = q/(1+q), the relative density fluctuation."""
    q = np.asarray(q, dtype=float)
    return q / (1.0 + q)


def pressure_terms(law: PressureLaw, q, floor: float, ceiling: float) -> dict:
    """Pointwise coefficient fields at density rho = 1+q.

    Returns P'(rho)/rho, H(rho) - H(1), K(q) and I(q).  The admissible range
    [floor, ceiling] is enforced before any evaluation.
    """
    rho = 1.0 + np.asarray(q, dtype=float)
    rmin, rmax = float(rho.min()), float(rho.max())
    if rmin < floor or rmax > ceiling:
        raise ValueError(
            f"density range [{rmin:.6g}, {rmax:.6g}] leaves admissible [{floor:.6g}, {ceiling:.6g}]"
        )
    law.check_range(rmin, rmax)
    return {
        "dP_over_rho": law.dP(rho) / rho,
        "H_diff": law.H(rho) - law.H(1.0),
        "K": K_coeff(law, q),
        "I": I_coeff(q),
    }
