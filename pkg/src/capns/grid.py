"""Periodic grid, spectral transforms, and Fourier-multiplier machinery.

Conventions fixed once here and relied on everywhere else:

* forward transform is the unnormalized FFT, the inverse carries 1/n^dim
  (numpy's default), pinned by the Parseval test;
* signed first-derivative wavenumbers zero the unpaired Nyquist mode so
  that i*k multipliers preserve Hermitian symmetry; even symbols (|k|^2)
  keep the true Nyquist magnitude;
* scalar fields are arrays of shape (n,)*dim, vector fields carry a
  leading component axis of length dim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Periodic d-dimensional lattice with precomputed wavenumber tables."""

    dim: int
    n: int
    length: float
    # per-axis signed frequencies 2*pi*m/L, m in {-n/2, ..., n/2-1}
    wavenumbers: np.ndarray = field(repr=False, compare=False, default=None)
    # broadcastable signed wavevector components, Nyquist zeroed (for i*k)
    k_deriv: tuple = field(repr=False, compare=False, default=None)
    # |k|^2 with the true (unzeroed) Nyquist magnitude
    k2: np.ndarray = field(repr=False, compare=False, default=None)
    # |k_deriv|^2, used where consistency with i*k factors matters
    k2_deriv: np.ndarray = field(repr=False, compare=False, default=None)
    kmag: np.ndarray = field(repr=False, compare=False, default=None)
    dealias_mask: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def kmin(self) -> float:
        """Smallest nonzero |k| on the grid: 2*pi/L."""
        return 2.0 * np.pi / self.length

    @property
    def kmax_axis(self) -> float:
        """Per-axis Nyquist frequency pi*n/L."""
        return np.pi * self.n / self.length

    @property
    def kmax(self) -> float:
        """Largest resolved modulus (corner mode in 2D)."""
        return np.sqrt(self.dim) * self.kmax_axis

    def axes(self) -> list:
        """Physical coordinates along each axis, x_j = j*L/n."""
        x = np.arange(self.n) * self.dx
        return [x] * self.dim

    def meshgrid(self) -> list:
        return list(np.meshgrid(*self.axes(), indexing="ij"))


def make_grid(dim: int, n: int, length: float) -> Grid:
    """Build a periodic grid with wavenumber tables.

    n must be a power of two >= 16 and dim one of {1, 2}.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if n < 16 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 16, got {n}")
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")

    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    k1_deriv = k1.copy()
    k1_deriv[n // 2] = 0.0  # unpaired Nyquist mode breaks symmetry under i*k

    if dim == 1:
        comps = (k1_deriv,)
        k2 = k1**2
        k2d = k1_deriv**2
    else:
        kx = k1[:, None]
        ky = k1[None, :]
        comps = (k1_deriv[:, None], k1_deriv[None, :])
        k2 = kx**2 + ky**2
        k2d = comps[0] ** 2 + comps[1] ** 2

    m = np.fft.fftfreq(n, d=1.0 / n)  # integer mode indices
    keep1 = np.abs(m) <= n / 3.0
    if dim == 1:
        mask = keep1
    else:
        mask = keep1[:, None] & keep1[None, :]

    return Grid(
        dim=dim,
        n=n,
        length=float(length),
        wavenumbers=k1,
        k_deriv=comps,
        k2=k2,
        k2_deriv=k2d,
        kmag=np.sqrt(k2),
        dealias_mask=mask,
    )


def _check_scalar(grid: Grid, f: np.ndarray) -> None:
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")


def _check_vector(grid: Grid, u: np.ndarray) -> None:
    if u.shape != (grid.dim,) + grid.shape:
        raise ValueError(
            f"vector field shape {u.shape} does not match grid {(grid.dim,) + grid.shape}"
        )


def forward(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Unnormalized forward transform of a real scalar field."""
    _check_scalar(grid, f)
    return np.fft.fftn(f)


def inverse(grid: Grid, F: np.ndarray) -> np.ndarray:
    """Inverse transform back to a real field (imaginary part discarded)."""
    _check_scalar(grid, F)
    return np.fft.ifftn(F).real


def forward_vec(grid: Grid, u: np.ndarray) -> np.ndarray:
    _check_vector(grid, u)
    return np.fft.fftn(u, axes=tuple(range(1, grid.dim + 1)))


def inverse_vec(grid: Grid, U: np.ndarray) -> np.ndarray:
    _check_vector(grid, U)
    return np.fft.ifftn(U, axes=tuple(range(1, grid.dim + 1))).real


def multiplier_is_hermitian(grid: Grid, m: np.ndarray, tol: float = 1e-12) -> bool:
    """Check m(-k) == conj(m(k)) on the grid (Nyquist rows self-paired)."""
    mm = np.asarray(m, dtype=complex)
    flipped = mm
    for ax in range(mm.ndim):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    scale = np.max(np.abs(mm)) or 1.0
    return bool(np.max(np.abs(flipped - np.conj(mm))) <= tol * scale)


def apply_multiplier(
    grid: Grid, F: np.ndarray, m: np.ndarray, require_real: bool = False
) -> np.ndarray:
    """Multiply spectral coefficients mode-by-mode: coeffs'(k) = m(k) coeffs(k).

    With require_real=True the multiplier is checked for the Hermitian
    symmetry that keeps real fields real.
    """
    _check_scalar(grid, F)
    if require_real and not multiplier_is_hermitian(grid, m):
        raise ValueError("multiplier violates m(-k) = conj(m(k)); result would not be real")
    return F * m


def apply_symbol_real(grid: Grid, f: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Real field -> real field through a Fourier multiplier."""
    return inverse(grid, forward(grid, f) * m)


def gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Spectral gradient of a scalar field, returned as a vector field."""
    F = forward(grid, f)
    out = np.empty((grid.dim,) + grid.shape)
    for i, kc in enumerate(grid.k_deriv):
        out[i] = inverse(grid, (1j * kc) * F)
    return out


def divergence(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Spectral divergence of a vector field."""
    _check_vector(grid, u)
    D = np.zeros(grid.shape, dtype=complex)
    for i, kc in enumerate(grid.k_deriv):
        D += (1j * kc) * np.fft.fftn(u[i])
    return inverse(grid, D)


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    return apply_symbol_real(grid, f, -grid.k2)


def diffusion_A(grid: Grid, u: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Viscous diffusion mu*Lap(u) + (lam+mu)*grad(div u), evaluated spectrally.

    Per mode: -mu |k|^2 u_hat - (lam+mu) k (k . u_hat).  Requires
    min(mu, 2mu+lam) > 0.
    """
    if min(mu, 2.0 * mu + lam) <= 0:
        raise ValueError(f"need min(mu, 2mu+lambda) > 0, got mu={mu}, lambda={lam}")
    _check_vector(grid, u)
    U = forward_vec(grid, u)
    kdotU = np.zeros(grid.shape, dtype=complex)
    for i, kc in enumerate(grid.k_deriv):
        kdotU += kc * U[i]
    out = np.empty_like(u)
    for i, kc in enumerate(grid.k_deriv):
        out[i] = np.fft.ifftn(-mu * grid.k2 * U[i] - (lam + mu) * kc * kdotU).real
    return out


def dealias(grid: Grid, F: np.ndarray) -> np.ndarray:
    """Zero all modes with any index |m| > n/3 (2/3 rule); idempotent."""
    _check_scalar(grid, F)
    return F * grid.dealias_mask


def dealias_field(grid: Grid, f: np.ndarray) -> np.ndarray:
    """2/3-rule filter applied to a real field."""
    return inverse(grid, dealias(grid, forward(grid, f)))


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    """L^2 norm with the physical cell measure, for scalar or vector fields."""
    return float(np.sqrt(np.sum(f * f) * grid.cell_volume))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """L^2 inner product with the physical cell measure."""
    return float(np.sum(f * g) * grid.cell_volume)


def spectral_l2_weight(grid: Grid) -> float:
    """Factor w such that ||f||_{L^2}^2 = w * sum_k |f_hat(k)|^2."""
    return grid.length**grid.dim / grid.n ** (2 * grid.dim)
