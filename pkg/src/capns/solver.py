"""The four fluctuation-form models and their pseudo-spectral time stepper.

All variants share

    dq/dt = -u.grad(q) - (1+q) div(u)
    du/dt = -u.grad(u) + A(u)/(1+q) - (P'(1+q)/(1+q)) grad(q) + kappa grad(D[q])

with A(u) = mu Lap(u) + (lam+mu) grad(div u) and D the variant's capillary
operator.  The capillary term is stiff (third-order derivatives in the local
variant, 1/eps^2 factors in the Gaussian one), so the constant-coefficient
linearization about (q, u) = (0, 0),

    dq/dt = -div(u),
    du/dt = A(u) + kappa grad(D[q]) - P'(1) grad(q)   [pressure only if P'(1) > 0],

is advanced implicitly by an exact per-mode solve; everything else is
explicit (first-order IMEX).  In Fourier the implicit block is diagonal over
modes and couples q_hat with the longitudinal velocity through the divergence
variable w = i k . u_hat:

    q' = q_r - dt w',
    w' = (w_r + dt G q_r) / (1 + dt nu_w + dt^2 G),

with G(k) = |k|^2 (kappa |sigma_D| + max(P'(1), 0)) >= 0, so the solve never
degenerates.  The explicit remainder (1/(1+q) - 1) A(u) stays stable without
a parabolic step restriction as long as the density keeps 1+q >= 1/2.

The k = 0 mode of dq/dt is zero analytically (the equation is -div((1+q)u));
it is pinned to zero so the mean density is conserved exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from capns.grid import Grid, diffusion_A, divergence, gradient
from capns.kernels import CapillaryModel, bessel_symbol, capillary_symbol
from capns.pressure import PressureLaw


class SolverHalt(RuntimeError):
    """Run left the admissible regime; carries a diagnostic snapshot."""

    def __init__(self, message: str, snapshot: dict):
        super().__init__(message)
        self.snapshot = snapshot


@dataclass(frozen=True)
class PhysParams:
    """Constant viscosities; requires nu0 = min(mu, 2mu+lambda) > 0."""

    mu: float
    lam: float

    def __post_init__(self):
        if self.nu0 <= 0:
            raise ValueError(
                f"need min(mu, 2mu+lambda) > 0, got mu={self.mu}, lambda={self.lam}"
            )

    @property
    def nu(self) -> float:
        return self.lam + 2.0 * self.mu

    @property
    def nu0(self) -> float:
        return min(self.mu, self.nu)

    @property
    def nubar(self) -> float:
        return self.mu + abs(self.lam + self.mu)


@dataclass
class State:
    """Density fluctuation q (rho = 1 + q) and velocity u at time t."""

    t: float
    q: np.ndarray
    u: np.ndarray

    def validate(self, grid: Grid, floor: float = 0.0) -> None:
        if self.q.shape != grid.shape or self.u.shape != (grid.dim,) + grid.shape:
            raise ValueError("state field shapes do not match grid")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.u))):
            raise ValueError("state contains non-finite values")
        rho_min = float(1.0 + self.q.min())
        if rho_min <= floor:
            raise ValueError(f"density {rho_min:.6g} at or below floor {floor:.6g}")


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    sample_every: int = 1
    dealias: bool = True
    density_floor: float | None = None  # default: half the initial minimum
    density_ceiling: float | None = None  # default: double the initial maximum
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class TwoPhase:
    """Two constant densities joined by tanh interfaces of the given width.

    1D: two interfaces at L/4 and 3L/4 (periodized with wrapped images);
    2D: a disk of radius L/4 holding rho2 inside a rho1 background.
    """

    rho1: float
    rho2: float
    interface_width: float


@dataclass(frozen=True)
class Harmonic:
    """Single-mode data q = q_amp cos(k.x), u_j = u_amp sin(k.x)."""

    q_amp: float
    u_amp: float
    mode: tuple = (1,)


@dataclass(frozen=True)
class RandomBand:
    """Seeded random field band-limited to integer mode indices [lo, hi]."""

    seed: int
    mode_lo: int
    mode_hi: int
    q_amp: float
    u_amp: float = 0.0


def _band_noise(grid: Grid, rng: np.random.Generator, lo: int, hi: int) -> np.ndarray:
    m = np.abs(np.fft.fftfreq(grid.n, d=1.0 / grid.n))
    if grid.dim == 1:
        sel = (m >= lo) & (m <= hi)
    else:
        mm = np.sqrt(m[:, None] ** 2 + m[None, :] ** 2)
        sel = (mm >= lo) & (mm <= hi)
    noise = rng.standard_normal(grid.shape)
    f = np.fft.ifftn(np.fft.fftn(noise) * sel).real
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def make_initial_data(grid: Grid, profile) -> State:
    """Build the initial state for one of the supported profiles."""
    if isinstance(profile, TwoPhase):
        if not (profile.rho1 > 0 and profile.rho2 > 0):
            raise ValueError("two-phase densities must be positive")
        w = profile.interface_width
        if w < 4.0 * grid.dx:
            raise ValueError(
                f"interface width {w:g} below 4 grid cells ({4 * grid.dx:g})"
            )
        L = grid.length
        if grid.dim == 1:
            (x,) = grid.meshgrid()
            cut = np.zeros(grid.shape)
            for mshift in (-1.0, 0.0, 1.0):  # wrapped images keep the profile periodic
                xs = x + mshift * L
                cut += 0.5 * (np.tanh((xs - L / 4) / w) - np.tanh((xs - 3 * L / 4) / w))
        else:
            X, Y = grid.meshgrid()
            r = np.sqrt((X - L / 2) ** 2 + (Y - L / 2) ** 2)
            cut = 0.5 * (1.0 - np.tanh((r - L / 4) / w))
        rho = profile.rho1 + (profile.rho2 - profile.rho1) * cut
        q = rho - 1.0
        u = np.zeros((grid.dim,) + grid.shape)
    elif isinstance(profile, Harmonic):
        xs = grid.meshgrid()
        phase = np.zeros(grid.shape)
        for mi, x in zip(profile.mode, xs):
            phase = phase + 2.0 * np.pi * mi * x / grid.length
        q = profile.q_amp * np.cos(phase)
        u = np.empty((grid.dim,) + grid.shape)
        for i in range(grid.dim):
            u[i] = profile.u_amp * np.sin(phase)
    elif isinstance(profile, RandomBand):
        rng = np.random.default_rng(profile.seed)
        q = profile.q_amp * _band_noise(grid, rng, profile.mode_lo, profile.mode_hi)
        u = np.empty((grid.dim,) + grid.shape)
        for i in range(grid.dim):
            u[i] = profile.u_amp * _band_noise(grid, rng, profile.mode_lo, profile.mode_hi)
    else:
        raise TypeError(f"unknown profile {profile!r}")

    state = State(t=0.0, q=q, u=u)
    state.validate(grid)
    if float(1.0 + q.min()) <= 0:
        raise ValueError("profile produces vacuum")
    return state


# ---------------------------------------------------------------------------
# right-hand side (reference assembly, used by tests and oracles)


def rhs(
    grid: Grid,
    state: State,
    model: CapillaryModel,
    params: PhysParams,
    law: PressureLaw,
    dealias_products: bool = True,
) -> tuple:
    """Full instantaneous right-hand side (dq/dt, du/dt).

    Straightforward term-by-term assembly; the stepper uses a fused
    implicit/explicit split that is tested against this function.
    """
    q, u = state.q, state.u
    rho = 1.0 + q
    if rho.min() <= 0:
        raise ValueError("vacuum state in rhs")
    gq = gradient(grid, q)
    divu = divergence(grid, u)
    Au = diffusion_A(grid, u, params.mu, params.lam)
    sig = capillary_symbol(grid.kmag, model)
    Dq_hat = np.fft.fftn(q) * sig
    gradD = np.empty_like(u)
    for i, kc in enumerate(grid.k_deriv):
        gradD[i] = np.fft.ifftn(1j * kc * Dq_hat).real

    dq = -rho * divu
    du = model.kappa * gradD + Au / rho - (law.dP(rho) / rho) * gq
    for i in range(grid.dim):
        dq -= u[i] * gq[i]
        gu_i = gradient(grid, u[i])
        for j in range(grid.dim):
            du[i] -= u[j] * gu_i[j]

    if dealias_products:
        mask = grid.dealias_mask
        dq = np.fft.ifftn(np.fft.fftn(dq) * mask).real
        for i in range(grid.dim):
            du[i] = np.fft.ifftn(np.fft.fftn(du[i]) * mask).real
    if not (np.all(np.isfinite(dq)) and np.all(np.isfinite(du))):
        raise ValueError("non-finite right-hand side")
    return dq, du


# ---------------------------------------------------------------------------
# IMEX stepper


def implicit_pressure_coeff(law: PressureLaw) -> float:
    """P'(1) joins the implicit block only when positive (stable acoustics)."""
    return law.dP1 if law.dP1 > 0 else 0.0


def linear_block_matrix(
    kmag: float, model: CapillaryModel, params: PhysParams, law: PressureLaw
) -> np.ndarray:
    """2x2 generator of the implicit block at one mode, in (q_hat, w) variables
    with w = i k . u_hat:

        d/dt [q, w] = [[0, -1], [G, -nu k^2]] [q, w],
        G = k^2 (kappa |sigma_D(k)| + max(P'(1), 0)).
    """
    k2 = kmag**2
    sig = float(capillary_symbol(np.array([kmag]), model)[0])
    G = k2 * (model.kappa * (-sig) + implicit_pressure_coeff(law))
    return np.array([[0.0, -1.0], [G, -params.nu * k2]])


class Stepper:
    """Precomputed per-mode tables for the first-order IMEX scheme."""

    def __init__(
        self,
        grid: Grid,
        model: CapillaryModel,
        params: PhysParams,
        law: PressureLaw,
        cfg: StepperConfig,
        floor: float,
        ceiling: float,
    ):
        self.grid = grid
        self.model = model
        self.params = params
        self.law = law
        self.cfg = cfg
        self.floor = floor
        self.ceiling = ceiling
        dt = cfg.dt

        self.ik = [1j * kc * np.ones(grid.shape) for kc in grid.k_deriv]
        k2s = grid.k2_deriv
        self.inv_k2s = np.where(k2s > 0, 1.0 / np.where(k2s > 0, k2s, 1.0), 0.0)
        self.p_imp = implicit_pressure_coeff(law)
        sig = capillary_symbol(grid.kmag, model)
        G = k2s * (model.kappa * (-sig) + self.p_imp)
        nu_w = params.mu * grid.k2 + (params.lam + params.mu) * k2s
        self.dtG = dt * G
        self.den_w = 1.0 + dt * nu_w + dt * dt * G
        self.den_perp = 1.0 + dt * params.mu * grid.k2
        self.mask = grid.dealias_mask if cfg.dealias else 1.0

    def explicit_terms(self, q, u, Q, U):
        """Nonlinear/explicit forcing (N_q, N_u) in real space."""
        grid, params, law = self.grid, self.params, self.law
        d = grid.dim
        gq = [np.fft.ifftn(self.ik[i] * Q).real for i in range(d)]
        gu = [[np.fft.ifftn(self.ik[i] * U[j]).real for i in range(d)] for j in range(d)]
        divu = gu[0][0].copy()
        for i in range(1, d):
            divu += gu[i][i]
        # viscous operator, spectral
        kdotU = np.zeros(grid.shape, dtype=complex)
        for i in range(d):
            kdotU += grid.k_deriv[i] * U[i]
        Au = [
            np.fft.ifftn(
                -params.mu * grid.k2 * U[j] - (params.lam + params.mu) * grid.k_deriv[j] * kdotU
            ).real
            for j in range(d)
        ]
        rho = 1.0 + q
        Jm1 = -q / rho  # 1/(1+q) - 1
        p_exp = law.dP(rho) / rho - self.p_imp  # -K(q) when P'(1) > 0
        Nq = -q * divu
        for i in range(d):
            Nq -= u[i] * gq[i]
        Nu = []
        for j in range(d):
            t = Jm1 * Au[j] - p_exp * gq[j]
            for i in range(d):
                t -= u[i] * gu[j][i]
            Nu.append(t)
        return Nq, Nu

    def check_state(self, q, u):
        """Halt on non-finite values or a density-bound breach."""
        rho_min = 1.0 + q.min()
        rho_max = 1.0 + q.max()
        if not np.isfinite(rho_min) or not np.isfinite(rho_max):
            raise SolverHalt("non-finite state", {"q": q, "u": u})
        if rho_min <= self.floor or rho_max >= self.ceiling:
            raise SolverHalt(
                f"density [{rho_min:.6g}, {rho_max:.6g}] left "
                f"[{self.floor:.6g}, {self.ceiling:.6g}]",
                {"q": q, "u": u, "rho_min": rho_min, "rho_max": rho_max},
            )

    def step(self, Q, U):
        """One IMEX step on spectral coefficients (Q, U). Returns new (Q, U)."""
        grid, dt = self.grid, self.cfg.dt
        d = grid.dim
        q = np.fft.ifftn(Q).real
        u = [np.fft.ifftn(U[j]).real for j in range(d)]
        self.check_state(q, u)

        Nq, Nu = self.explicit_terms(q, u, Q, U)
        NQ = np.fft.fftn(Nq) * self.mask
        NQ.flat[0] = 0.0  # dq/dt is a divergence: exact mean conservation
        rq = Q + dt * NQ
        ru = [U[j] + dt * (np.fft.fftn(Nu[j]) * self.mask) for j in range(d)]

        wr = self.ik[0] * ru[0]
        for j in range(1, d):
            wr += self.ik[j] * ru[j]
        wp = (wr + self.dtG * rq) / self.den_w
        Qn = rq - dt * wp
        Un = []
        for j in range(d):
            r_par = -self.ik[j] * wr * self.inv_k2s  # longitudinal part of ru
            Un.append((ru[j] - r_par) / self.den_perp - self.ik[j] * wp * self.inv_k2s)
        return Qn, Un


@dataclass
class Trajectory:
    """Sampled run output; immutable after the run."""

    grid: Grid
    model: CapillaryModel
    params: PhysParams
    law: PressureLaw
    cfg: StepperConfig
    times: np.ndarray
    qs: list
    us: list
    cs: list | None
    floor: float
    ceiling: float
    manifest: dict = field(default_factory=dict)

    def state(self, i: int) -> State:
        return State(t=float(self.times[i]), q=self.qs[i], u=self.us[i])

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def mean_rho(self, i: int) -> float:
        return float(1.0 + np.mean(self.qs[i]))


def _resolve_bounds(cfg: StepperConfig, q0: np.ndarray) -> tuple:
    rho_min = float(1.0 + q0.min())
    rho_max = float(1.0 + q0.max())
    floor = cfg.density_floor if cfg.density_floor is not None else 0.5 * rho_min
    ceiling = cfg.density_ceiling if cfg.density_ceiling is not None else 2.0 * rho_max
    if not 0 < floor < ceiling:
        raise ValueError(f"bad density bounds [{floor}, {ceiling}]")
    if not floor < rho_min and rho_max < ceiling:
        raise ValueError("initial data violates the density bounds")
    return floor, ceiling


def _manifest(grid, model, params, law, cfg, floor, ceiling) -> dict:
    man = {
        "grid": {"dim": grid.dim, "n": grid.n, "length": grid.length},
        "model": {
            "variant": model.variant,
            "kappa": model.kappa,
            "epsilon": model.epsilon,
            "alpha": model.alpha,
        },
        "params": {"mu": params.mu, "lambda": params.lam},
        "law": {
            "kind": law.kind,
            "A": law.A,
            "gamma": law.gamma,
            "a": law.a,
            "b": law.b,
            "RT": law.RT,
        },
        "stepper": {
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "sample_every": cfg.sample_every,
            "dealias": cfg.dealias,
            "density_floor": floor,
            "density_ceiling": ceiling,
        },
    }
    blob = json.dumps(man, sort_keys=True).encode()
    man["config_sha256"] = hashlib.sha256(blob).hexdigest()
    return man


def simulate(
    grid: Grid,
    initial: State,
    model: CapillaryModel,
    params: PhysParams,
    law: PressureLaw,
    cfg: StepperConfig,
) -> Trajectory:
    """Run the IMEX scheme to t_end, sampling every cfg.sample_every steps.

    Halts (SolverHalt) on density-bound breach or non-finite values; the
    exception carries the offending snapshot.
    """
    initial.validate(grid)
    floor, ceiling = _resolve_bounds(cfg, initial.q)
    law.check_range(max(floor, 1e-12), ceiling)

    umax = float(np.max(np.abs(initial.u)))
    if cfg.dt * umax / grid.dx > 1.0:
        raise ValueError(
            f"dt={cfg.dt:g} violates the advective CFL bound dx/max|u0| = "
            f"{grid.dx / umax:g}"
        )

    n_steps = int(round(cfg.t_end / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
        raise ValueError("t_end must be an integer number of steps")
    if n_steps > cfg.max_steps:
        raise ValueError(f"{n_steps} steps exceed max_steps={cfg.max_steps}")

    stepper = Stepper(grid, model, params, law, cfg, floor, ceiling)
    mask = grid.dealias_mask if cfg.dealias else 1.0
    Q = np.fft.fftn(initial.q) * mask
    U = [np.fft.fftn(initial.u[j]) * mask for j in range(grid.dim)]

    times, qs, us = [], [], []

    def take_sample(step):
        t = step * cfg.dt
        qf = np.fft.ifftn(Q).real
        uf = np.stack([np.fft.ifftn(U[j]).real for j in range(grid.dim)])
        times.append(t)
        qs.append(qf)
        us.append(uf)

    take_sample(0)
    done = 0  # steps fully advanced; step() checks its input, at time done*dt
    try:
        for step in range(1, n_steps + 1):
            Q, U = stepper.step(Q, U)
            done = step
            if step % cfg.sample_every == 0 or step == n_steps:
                take_sample(step)
        stepper.check_state(qs[-1], us[-1])  # terminal state, never an input to step
    except SolverHalt as halt:
        halt.snapshot.setdefault("t", done * cfg.dt)
        halt.snapshot.setdefault("step", done)
        raise

    cs = None
    if model.variant == "NSOP":
        bsym = bessel_symbol(grid.kmag, model.alpha)
        cs = [1.0 + np.fft.ifftn(np.fft.fftn(qf) * bsym).real for qf in qs]

    traj = Trajectory(
        grid=grid,
        model=model,
        params=params,
        law=law,
        cfg=cfg,
        times=np.array(times),
        qs=qs,
        us=us,
        cs=cs,
        floor=floor,
        ceiling=ceiling,
        manifest=_manifest(grid, model, params, law, cfg, floor, ceiling),
    )
    for i in range(traj.n_samples):
        traj.state(i).validate(grid, floor=0.0)
    return traj


def linear_oracle_evolution(
    kmag: float,
    model: CapillaryModel,
    params: PhysParams,
    law: PressureLaw,
    qw0: np.ndarray,
    times: np.ndarray,
) -> np.ndarray:
    """Exact evolution exp(t M) qw0 of the implicit block at one mode.

    Independent reference for the scheme's linear dynamics (dense matrix
    exponential per sample time).
    """
    from scipy.linalg import expm

    M = linear_block_matrix(kmag, model, params, law)
    return np.array([expm(t * M) @ qw0 for t in times])
