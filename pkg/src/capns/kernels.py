"""Interaction potentials and the four capillary operators.

The capillary operator D acts on the density fluctuation q and is diagonal
in Fourier space:

    baseline (NSC):        0
    local (NSK):           -|k|^2
    Gaussian (NSRW_eps):   (exp(-eps^2 |k|^2) - 1) / eps^2
    Bessel (NSOP_alpha):   -alpha^2 |k|^2 / (alpha^2 + |k|^2)

All symbols vanish at k=0 (constants are annihilated), are real and even,
and converge to the local symbol -|k|^2 as eps -> 0 or alpha -> infinity
with the mode-wise defects

    |sigma_RW + |k|^2|  <= eps^2 |k|^4 / 2,
    |sigma_OP + |k|^2|   = |k|^4 / (alpha^2 + |k|^2) <= |k|^4 / alpha^2.

Real-space kernels exist only for validation; the solve path is entirely
spectral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from capns.grid import Grid, apply_symbol_real, forward, inverse

VARIANTS = ("NSC", "NSK", "NSRW", "NSOP")


@dataclass(frozen=True)
class Potential:
    """Mass-one interaction potential: Gaussian (scale eps) or Bessel (scale alpha)."""

    kind: str  # "gaussian" | "bessel"
    scale: float  # eps for gaussian, alpha for bessel

    def __post_init__(self):
        if self.kind not in ("gaussian", "bessel"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError(f"{self.kind} potential requires a positive scale, got {self.scale}")

    def symbol(self, kmag) -> np.ndarray:
        if self.kind == "gaussian":
            return gaussian_symbol(kmag, self.scale)
        return bessel_symbol(kmag, self.scale)


@dataclass(frozen=True)
class CapillaryModel:
    """Model variant plus its capillary coupling strength kappa."""

    variant: str  # NSC | NSK | NSRW | NSOP
    kappa: float = 0.0
    epsilon: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.variant == "NSRW" and not (self.epsilon and self.epsilon > 0):
            raise ValueError("NSRW requires epsilon > 0")
        if self.variant == "NSOP" and not (self.alpha and self.alpha > 0):
            raise ValueError("NSOP requires alpha > 0")

    @property
    def beta(self) -> float:
        """Hybrid-norm threshold attached to the variant: 1/eps or alpha."""
        if self.variant == "NSRW":
            return 1.0 / self.epsilon
        if self.variant == "NSOP":
            return self.alpha
        raise ValueError(f"{self.variant} has no hybrid threshold")

    def check_resolved(self, grid: Grid) -> None:
        """Require the transition frequency to sit inside the resolved band.

        Outside of it the non-local operator is indistinguishable from the
        local one (or from zero) on the grid and sweeps are meaningless.
        """
        if self.variant in ("NSRW", "NSOP"):
            b = self.beta
            if not (grid.kmin <= b <= grid.kmax_axis):
                raise ValueError(
                    f"transition frequency {b:g} outside resolved band "
                    f"[{grid.kmin:g}, {grid.kmax_axis:g}]"
                )


def gaussian_symbol(kmag, epsilon: float):
    """Fourier symbol of the mass-one Gaussian mollifier: exp(-eps^2 |k|^2)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    kmag = np.asarray(kmag, dtype=float)
    return np.exp(-(epsilon**2) * kmag**2)


def bessel_symbol(kmag, alpha: float):
    """Fourier symbol of the Bessel potential: alpha^2 / (alpha^2 + |k|^2).

    This is the resolvent (-Lap + alpha^2)^{-1} alpha^2 coupling the order
    parameter c to the density, Lap(c) + alpha^2 (rho - c) = 0.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    kmag = np.asarray(kmag, dtype=float)
    return alpha**2 / (alpha**2 + kmag**2)


def capillary_symbol(kmag, model: CapillaryModel):
    """Symbol of D for the given model variant (0 at k=0, real, <= 0)."""
    kmag = np.asarray(kmag, dtype=float)
    if model.variant == "NSC":
        return np.zeros_like(kmag)
    if model.variant == "NSK":
        return -(kmag**2)
    if model.variant == "NSRW":
        e2 = model.epsilon**2
        return np.expm1(-e2 * kmag**2) / e2
    # NSOP: alpha^2 (bessel_symbol - 1) = -alpha^2 |k|^2 / (alpha^2 + |k|^2)
    a2 = model.alpha**2
    return -a2 * kmag**2 / (a2 + kmag**2)


def capillary_D(grid: Grid, q: np.ndarray, model: CapillaryModel) -> np.ndarray:
    """Apply the capillary operator D[q] spectrally."""
    return apply_symbol_real(grid, q, capillary_symbol(grid.kmag, model))


def order_parameter(grid: Grid, rho: np.ndarray, alpha: float) -> np.ndarray:
    """Solve Lap(c) + alpha^2 (rho - c) = 0 for c (diagonal resolvent solve)."""
    return apply_symbol_real(grid, rho, bessel_symbol(grid.kmag, alpha))


def remainder_symbol(kmag, epsilon: float):
    """Scalar factor of the local-vs-Gaussian defect:

    (exp(-eps^2 k^2) - 1 + eps^2 k^2) / eps^2, bounded by eps^2 k^4 / 2.
    """
    kmag = np.asarray(kmag, dtype=float)
    e2 = epsilon**2
    x = e2 * kmag**2
    return (np.expm1(-x) + x) / e2


def remainder_R_eps(grid: Grid, q: np.ndarray, epsilon: float, kappa: float) -> np.ndarray:
    """Defect force R_eps = -(kappa/eps^2) grad(phi_eps*q - q - eps^2 Lap q).

    Vector field; per mode -(kappa/eps^2) i k (e^{-eps^2 k^2} - 1 + eps^2 k^2) q_hat.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    fac = -kappa * remainder_symbol(grid.kmag, epsilon)
    Q = forward(grid, q) * fac
    out = np.empty((grid.dim,) + grid.shape)
    for i, kc in enumerate(grid.k_deriv):
        out[i] = inverse(grid, (1j * kc) * Q)
    return out


def kernel_realspace(potential: Potential, grid: Grid, tail_tol: float = 1e-8) -> np.ndarray:
    """Periodized real-space kernel on the grid, for validation only.

    Gaussian: heat kernel (4 pi eps^2)^{-d/2} exp(-|x|^2 / (4 eps^2)), whose
    transform is exp(-eps^2 |k|^2).  Bessel is built in d=1 only, where it is
    elementary: (alpha/2) exp(-alpha |x|) with transform alpha^2/(alpha^2+k^2).
    The d=2 Bessel kernel has a log singularity at 0 and is never needed in
    real space.

    Raises if the kernel tail at L/2 exceeds tail_tol of the peak (domain
    too small for the scale).
    """
    L = grid.length
    if potential.kind == "gaussian":
        eps = potential.scale
        tail = np.exp(-((L / 2.0) ** 2) / (4.0 * eps**2))
        if tail > tail_tol:
            raise ValueError(
                f"gaussian tail {tail:.3e} at L/2 exceeds {tail_tol:.1e}; increase L or shrink eps"
            )
        xs = grid.meshgrid()
        r2 = sum(np.minimum(x, L - x) ** 2 for x in xs)
        return (4.0 * np.pi * eps**2) ** (-grid.dim / 2.0) * np.exp(-r2 / (4.0 * eps**2))

    if grid.dim != 1:
        raise ValueError("bessel real-space kernel is validated in d=1 only")
    alpha = potential.scale
    tail = np.exp(-alpha * L / 2.0)
    if tail > tail_tol:
        raise ValueError(
            f"bessel tail {tail:.3e} at L/2 exceeds {tail_tol:.1e}; increase L or alpha"
        )
    (x,) = grid.meshgrid()
    r = np.minimum(x, L - x)
    return 0.5 * alpha * np.exp(-alpha * r)


def kernel_transform_quadrature(
    potential: Potential, length: float, kvals: np.ndarray
) -> np.ndarray:
    """Continuum Fourier transform of the d=1 kernel truncated to [-L/2, L/2].

    Independent oracle for the symbol formulas: adaptive quadrature of
    2 * int_0^{L/2} kernel(x) cos(kx) dx, so the only systematic error is the
    dropped tail beyond L/2.
    """
    half = length / 2.0
    if potential.kind == "gaussian":
        eps = potential.scale
        f = lambda t: (4.0 * np.pi * eps**2) ** -0.5 * np.exp(-(t**2) / (4.0 * eps**2))
    else:
        alpha = potential.scale
        f = lambda t: 0.5 * alpha * np.exp(-alpha * t)
    out = np.empty(len(kvals))
    for i, k in enumerate(kvals):
        val, _ = quad(f, 0.0, half, weight="cos", wvar=float(k), limit=400)
        out[i] = 2.0 * val
    return out
