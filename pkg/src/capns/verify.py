"""Standalone certification checks for the exact spectral identities.

These are the pure-math guarantees the simulator rests on (no time stepping
involved): partition of unity, symbol values and parities, the mode-wise
Taylor brackets tying the non-local operators to the local one, the
defect-force assembly identity, kernel mass and the d=1 Fourier pair, and
the hybrid-norm equivalence bracket.  Each check returns a record with a
pass flag and a measured detail so failures are machine readable.
"""

from __future__ import annotations

import numpy as np

from capns.besov import build_partition, hybrid_equivalence_ratio, partition_unity_defect
from capns.grid import Grid, apply_symbol_real, gradient, l2_norm, laplacian, make_grid
from capns.kernels import (
    CapillaryModel,
    Potential,
    bessel_symbol,
    capillary_symbol,
    gaussian_symbol,
    kernel_realspace,
    kernel_transform_quadrature,
    order_parameter,
    remainder_R_eps,
)

FP_SLACK = 1e-12
EQUIV_BRACKET = (1.0 / 8.0, 8.0)


def _record(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def check_partition_unity(grid: Grid, tol: float = 1e-12) -> dict:
    defect = partition_unity_defect(build_partition(grid))
    return _record(
        f"partition_unity_d{grid.dim}_n{grid.n}",
        defect < tol,
        f"max interior defect {defect:.3e} (tol {tol:.1e})",
    )


def check_gaussian_symbol() -> dict:
    ks = np.linspace(0.0, 30.0, 301)
    ok = abs(gaussian_symbol(0.0, 0.3) - 1.0) < FP_SLACK
    ok &= np.allclose(gaussian_symbol(ks, 0.1), gaussian_symbol(-ks, 0.1), rtol=0, atol=0)
    ok &= bool(np.all((gaussian_symbol(ks, 0.2) > 0) & (gaussian_symbol(ks, 0.2) <= 1.0)))
    val = float(gaussian_symbol(1.0, 0.1))
    ok &= abs(val - np.exp(-0.01)) < FP_SLACK
    return _record("gaussian_symbol", ok, f"symbol(|k|=1, eps=0.1) = {val:.12f}")


def check_bessel_symbol() -> dict:
    ok = abs(bessel_symbol(0.0, 3.0) - 1.0) < FP_SLACK
    ok &= abs(bessel_symbol(2.0, 2.0) - 0.5) < FP_SLACK
    ks = np.linspace(0.0, 50.0, 101)
    prev = bessel_symbol(ks, 1.0)
    for a in (2.0, 4.0, 8.0, 16.0):
        cur = bessel_symbol(ks, a)
        ok &= bool(np.all(cur >= prev - FP_SLACK)) and bool(np.all(cur <= 1.0 + FP_SLACK))
        prev = cur
    return _record("bessel_symbol", ok, "mass-1, closed form, resolvent monotone in alpha")


def check_capillary_taylor(grid: Grid, eps_list=(0.2, 0.1, 0.05), alpha_list=(5.0, 10.0, 20.0)) -> dict:
    """Mode-wise brackets |sigma_RW + k^2| <= eps^2 k^4/2 and
    |sigma_OP + k^2| <= k^4/alpha^2 on every resolved mode."""
    k = grid.kmag
    worst = 0.0
    ok = True
    for eps in eps_list:
        sig = capillary_symbol(k, CapillaryModel("NSRW", epsilon=eps))
        defect = np.abs(sig + k**2)
        bound = 0.5 * eps**2 * k**4
        excess = np.max(defect - bound * (1 + FP_SLACK) - FP_SLACK)
        worst = max(worst, float(excess))
        ok &= excess <= 0
    for alpha in alpha_list:
        sig = capillary_symbol(k, CapillaryModel("NSOP", alpha=alpha))
        defect = np.abs(sig + k**2)
        bound = k**4 / alpha**2
        excess = np.max(defect - bound * (1 + FP_SLACK) - FP_SLACK)
        worst = max(worst, float(excess))
        ok &= excess <= 0
    return _record("capillary_taylor_brackets", ok, f"worst bound excess {worst:.3e}")


def check_capillary_baseline(grid: Grid) -> dict:
    for model in (
        CapillaryModel("NSC"),
        CapillaryModel("NSK"),
        CapillaryModel("NSRW", epsilon=0.1),
        CapillaryModel("NSOP", alpha=8.0),
    ):
        sig = capillary_symbol(grid.kmag, model)
        at0 = float(np.abs(sig.flat[0]))
        if at0 > 0:
            return _record("capillary_annihilates_constants", False, f"{model.variant}: {at0}")
        if model.variant == "NSC" and np.any(sig != 0):
            return _record("capillary_annihilates_constants", False, "NSC symbol not zero")
    return _record("capillary_annihilates_constants", True, "sigma(0) = 0 for all variants")


def check_remainder_assembly(grid: Grid, eps: float = 0.1, kappa: float = 0.7) -> dict:
    rng = np.random.default_rng(11)
    q = rng.standard_normal(grid.shape)
    direct = remainder_R_eps(grid, q, eps, kappa)
    conv = apply_symbol_real(grid, q, gaussian_symbol(grid.kmag, eps))
    inner_part = conv - q - eps**2 * laplacian(grid, q)
    composed = -(kappa / eps**2) * gradient(grid, inner_part)
    scale = max(float(np.max(np.abs(direct))), 1e-300)
    diff = float(np.max(np.abs(direct - composed))) / scale
    return _record("remainder_two_path", diff < 1e-13, f"relative gap {diff:.3e}")


def check_order_parameter_residual(grid: Grid, alpha: float = 7.0) -> dict:
    rng = np.random.default_rng(5)
    rho = 1.0 + 0.3 * rng.standard_normal(grid.shape)
    c = order_parameter(grid, rho, alpha)
    residual = laplacian(grid, c) + alpha**2 * (rho - c)
    rel = l2_norm(grid, residual) / (alpha**2 * l2_norm(grid, rho))
    return _record("order_parameter_residual", rel < 1e-10, f"relative residual {rel:.3e}")


def _band_limited_fields(grid: Grid, count: int, seed: int = 42):
    p = build_partition(grid)
    lo = p.j_min + 2
    hi = p.j_max - 2
    rng = np.random.default_rng(seed)
    sel = (grid.kmag >= 2.0**lo) & (grid.kmag <= 2.0**hi)
    for _ in range(count):
        noise = rng.standard_normal(grid.shape)
        yield np.fft.ifftn(np.fft.fftn(noise) * sel).real


def check_hybrid_equivalence(grid: Grid, count: int = 20, s: float = 0.5) -> dict:
    p = build_partition(grid)
    lo, hi = EQUIV_BRACKET
    worst_lo, worst_hi = np.inf, 0.0
    ok = True
    models = [
        CapillaryModel("NSRW", epsilon=1.0 / 8.0),
        CapillaryModel("NSOP", alpha=8.0),
    ]
    for f in _band_limited_fields(grid, count):
        for model in models:
            hn, dn = hybrid_equivalence_ratio(p, f, s, model)
            if dn == 0:
                continue
            ratio = hn / dn
            worst_lo = min(worst_lo, ratio)
            worst_hi = max(worst_hi, ratio)
            ok &= lo <= ratio <= hi
    return _record(
        "hybrid_equivalence_bracket",
        ok,
        f"ratios within [{worst_lo:.4f}, {worst_hi:.4f}] (bracket [{lo:g}, {hi:g}])",
    )


def check_gaussian_kernel_mass(eps: float = 0.5) -> dict:
    grid = make_grid(1, 256, 16.0)
    ker = kernel_realspace(Potential("gaussian", eps), grid)
    mass = float(np.sum(ker) * grid.cell_volume)
    nonneg = bool(np.all(ker >= 0))
    return _record(
        "gaussian_kernel_mass",
        abs(mass - 1.0) < 1e-6 and nonneg,
        f"discrete mass {mass:.10f}",
    )


def check_bessel_fourier_pair(tol: float = 1e-6) -> dict:
    """d=1 pair (alpha/2) e^{-alpha|x|} <-> alpha^2/(alpha^2+k^2) at alpha=1.

    The forward transform is realized by adaptive quadrature of the kernel
    truncated to [-L/2, L/2], so the dropped tail (about e^{-L/2}) is the
    dominant error; compared against the closed form on |k| <= 10.
    """
    grid = make_grid(1, 1024, 40.0)
    pot = Potential("bessel", 1.0)
    ker = kernel_realspace(pot, grid)
    nonneg = bool(np.all(ker >= 0))
    kvals = grid.wavenumbers[(np.abs(grid.wavenumbers) <= 10.0)]
    kvals = np.unique(np.abs(kvals))
    approx = kernel_transform_quadrature(pot, grid.length, kvals)
    exact = 1.0 / (1.0 + kvals**2)
    rel = float(np.max(np.abs(approx - exact) / exact))
    return _record(
        "bessel_fourier_pair", rel < tol and nonneg, f"max relative error {rel:.3e} (tol {tol:.1e})"
    )


def run_all(grid: Grid | None = None) -> list:
    """The full certification list; grid defaults to 1D n=256, L=2pi."""
    if grid is None:
        grid = make_grid(1, 256, 2.0 * np.pi)
    checks = [
        check_partition_unity(grid),
        check_gaussian_symbol(),
        check_bessel_symbol(),
        check_capillary_taylor(grid),
        check_capillary_baseline(grid),
        check_remainder_assembly(grid),
        check_order_parameter_residual(grid),
        check_hybrid_equivalence(grid),
        check_gaussian_kernel_mass(),
        check_bessel_fourier_pair(),
    ]
    return checks
