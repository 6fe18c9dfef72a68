"""Per-block energy diagnostics for the coupled (q, u) system.

For each dyadic block j the monitored quadratic form is

    h_j^2 = (u_j | c_m u_j) + kappa (q_j | -D[q_j])
            + eta ( 2 (u_j | grad q_j) + nu (grad q_j | (b_m/c_m) grad q_j) ),

built from the smoothed coefficient fields

    c = 1 + q,  b = 1/(1+q),  c_m = 1 + S_m(c - 1),  b_m = 1 + S_m(b - 1),

where S_m is the smooth low-pass at level m.  The capillary form uses the
positive orientation (q_j | -D[q_j]) >= 0, which for the Gaussian variant is
the quantity (q_j | (q_j - phi_eps * q_j)/eps^2) the energy argument runs on.

With density bounds 0 < c_* <= 1+q <= c^*, b_* = 1/c^*, b^* = 1/c_*, the
mixing weight is admissible when

    eta <= min(1, nu b_* c_* / (8 (2 c^* + c_*))),

and then h_j^2 >= (c_*/4) ||u_j||^2 provided the smoothed coefficients stay
inside [c_*/2, c^* + c_*/2] and [b_*/2, b^* + b_*/2] (checked pointwise).

The running supremum aggregates into

    g^s(t) = sum_j 2^{j(s-1)} sup_{t' <= t} ( ||u_j(t')|| + h_j(t') ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from capns.besov import DyadicPartition, low_freq_truncate
from capns.grid import Grid, forward, inner, inverse, l2_norm
from capns.kernels import CapillaryModel, capillary_symbol
from capns.solver import PhysParams, State, Trajectory


def density_bound_box(floor: float, ceiling: float) -> dict:
    """Bounds for c = 1+q and b = 1/(1+q) from configured density bounds."""
    if not 0 < floor < ceiling:
        raise ValueError("need 0 < floor < ceiling")
    return {"c_star": floor, "c_ceil": ceiling, "b_star": 1.0 / ceiling, "b_ceil": 1.0 / floor}


def eta_bound(params: PhysParams, floor: float, ceiling: float) -> float:
    """Largest admissible mixing weight for the given density bounds."""
    bb = density_bound_box(floor, ceiling)
    return min(1.0, params.nu * bb["b_star"] * bb["c_star"] / (8.0 * (2.0 * ceiling + floor)))


def default_eta(params: PhysParams, floor: float, ceiling: float) -> float:
    return 0.9 * eta_bound(params, floor, ceiling)


@dataclass
class EnergyDiagnostics:
    """Block diagnostics of one state (plus flags for the guarantees)."""

    js: np.ndarray
    h: np.ndarray  # h_j
    hsq: np.ndarray  # h_j^2 before the square root (sign preserved)
    u_block: np.ndarray  # ||u_j||_{L^2}
    m: int
    eta: float
    s: float
    eta_admissible: bool
    coeff_bounds_ok: bool

    @property
    def positivity_guaranteed(self) -> bool:
        return self.eta_admissible and self.coeff_bounds_ok

    def g_contribution(self) -> np.ndarray:
        """Per-block 2^{j(s-1)} (||u_j|| + h_j)."""
        return 2.0 ** (self.js * (self.s - 1.0)) * (self.u_block + self.h)


def smoothed_coefficients(p: DyadicPartition, q: np.ndarray, m: int) -> tuple:
    """(c_m, b_m) from the density fluctuation."""
    c_m = 1.0 + low_freq_truncate(p, q, m)
    b_minus_1 = -q / (1.0 + q)
    b_m = 1.0 + low_freq_truncate(p, b_minus_1, m)
    return c_m, b_m


def _coeff_bounds_ok(c_m, b_m, floor, ceiling) -> bool:
    bb = density_bound_box(floor, ceiling)
    ok_c = (c_m.min() >= bb["c_star"] / 2.0) and (c_m.max() <= ceiling + bb["c_star"] / 2.0)
    ok_b = (b_m.min() >= bb["b_star"] / 2.0) and (b_m.max() <= bb["b_ceil"] + bb["b_star"] / 2.0)
    return bool(ok_c and ok_b)


def state_diagnostics(
    p: DyadicPartition,
    state: State,
    model: CapillaryModel,
    params: PhysParams,
    m: int,
    eta: float,
    s: float,
    floor: float,
    ceiling: float,
    warn=None,
) -> EnergyDiagnostics:
    """Evaluate h_j on every block of one state.

    An inadmissible eta is reported (and optionally warned about through the
    `warn` callback) but the diagnostics are still computed.
    """
    grid: Grid = p.grid
    q, u = state.q, state.u
    admissible = eta <= eta_bound(params, floor, ceiling) + 1e-15
    if not admissible and warn is not None:
        warn(f"eta={eta:g} exceeds the admissible bound; h_j positivity not guaranteed")

    c_m, b_m = smoothed_coefficients(p, q, m)
    bounds_ok = _coeff_bounds_ok(c_m, b_m, floor, ceiling)
    bc_ratio = b_m / c_m

    Q = forward(grid, q)
    Us = [forward(grid, u[i]) for i in range(grid.dim)]
    negD = -capillary_symbol(grid.kmag, model)

    js = p.js
    h = np.empty(len(js))
    hsq = np.empty(len(js))
    ub = np.empty(len(js))
    for idx, j in enumerate(js):
        w = p.weight(j)
        qj = inverse(grid, Q * w)
        uj = [inverse(grid, Uc * w) for Uc in Us]
        gqj = [inverse(grid, (1j * kc) * (Q * w)) for kc in grid.k_deriv]
        negDqj = inverse(grid, Q * w * negD)

        t_visc = sum(inner(grid, uj[i], c_m * uj[i]) for i in range(grid.dim))
        t_cap = model.kappa * inner(grid, qj, negDqj)
        t_cross = 2.0 * sum(inner(grid, uj[i], gqj[i]) for i in range(grid.dim))
        t_grad = params.nu * sum(
            inner(grid, gqj[i], bc_ratio * gqj[i]) for i in range(grid.dim)
        )
        val = t_visc + t_cap + eta * (t_cross + t_grad)
        hsq[idx] = val
        h[idx] = np.sqrt(max(val, 0.0))
        ub[idx] = np.sqrt(sum(l2_norm(grid, uj[i]) ** 2 for i in range(grid.dim)))

    return EnergyDiagnostics(
        js=js.copy(),
        h=h,
        hsq=hsq,
        u_block=ub,
        m=m,
        eta=eta,
        s=s,
        eta_admissible=admissible,
        coeff_bounds_ok=bounds_ok,
    )


def trajectory_diagnostics(
    p: DyadicPartition,
    traj: Trajectory,
    m: int,
    s: float,
    eta: float | None = None,
    warn=None,
) -> dict:
    """g^s(t) over sampled history plus per-sample block diagnostics.

    g^s carries the running supremum over samples inside each block before
    the weighted j-sum, so it is nondecreasing in t by construction.
    """
    if eta is None:
        eta = default_eta(traj.params, traj.floor, traj.ceiling)
    per_sample = []
    running = None
    g = np.empty(traj.n_samples)
    for i in range(traj.n_samples):
        diag = state_diagnostics(
            p,
            traj.state(i),
            traj.model,
            traj.params,
            m,
            eta,
            s,
            traj.floor,
            traj.ceiling,
            warn=warn if i == 0 else None,
        )
        per_sample.append(diag)
        contrib = diag.u_block + diag.h
        running = contrib if running is None else np.maximum(running, contrib)
        g[i] = float(np.sum(2.0 ** (diag.js * (s - 1.0)) * running))
    return {"g_s": g, "per_sample": per_sample, "eta": eta, "m": m, "s": s}
