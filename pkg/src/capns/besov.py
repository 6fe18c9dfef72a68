"""Dyadic frequency decomposition and the norms built on it.

The decomposition uses a radial profile chi that is 1 on |xi| <= 3/4, 0 on
|xi| >= 4/3, radially nonincreasing and C-infinity (assembled from the
standard exp(-1/x) glue).  The annulus bump is chi(xi/2) - chi(xi), so the
shifted bumps telescope:

    sum_{j=a..b} bump(2^{-j} xi) = chi(2^{-(b+1)} xi) - chi(2^{-a} xi),

which equals 1 exactly whenever 2^a * 4/3 <= |xi| <= 2^b * 3/2.  The block
range [j_min, j_max] therefore keeps every j whose annulus intersects the
resolved band, so the partition of unity is exact on all nonzero grid modes
and sum_j block_j(f) reconstructs any mean-zero field.

Norms (always with the zero mode excluded, which the bumps do on their own):

    besov(f, s)          = sum_j 2^{js} ||block_j f||_{L^2}
    hybrid(f, s, beta)   = sum_j min(beta^2, 2^{2j}) 2^{js} ||block_j f||_{L^2}
    time-sliced L^rho    = sum_j 2^{js} || ||block_j f(t)||_{L^2} ||_{L^rho_t}

with the time norm taken inside each block before the j-sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from capns.grid import Grid, forward, inverse, spectral_l2_weight
from capns.kernels import CapillaryModel, capillary_symbol


def _glue(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    p = x > 0
    out[p] = np.exp(-1.0 / x[p])
    return out


def chi_profile(r) -> np.ndarray:
    """Smooth radial cutoff: 1 for r <= 3/4, 0 for r >= 4/3, nonincreasing."""
    r = np.asarray(r, dtype=float)
    t = np.clip((r - 0.75) / (4.0 / 3.0 - 0.75), 0.0, 1.0)
    g1 = _glue(1.0 - t)
    g0 = _glue(t)
    return g1 / (g1 + g0 + np.finfo(float).tiny)


def lp_bump(r) -> np.ndarray:
    """Annulus bump chi(r/2) - chi(r), supported in 3/4 <= r <= 8/3."""
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass(frozen=True)
class DyadicPartition:
    """Dyadic block machinery bound to one grid."""

    grid: Grid
    j_min: int
    j_max: int
    # bump weights per block, evaluated on the grid's |k| table
    weights: tuple

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def weight(self, j: int) -> np.ndarray:
        if not self.j_min <= j <= self.j_max:
            raise ValueError(f"block index {j} outside [{self.j_min}, {self.j_max}]")
        return self.weights[j - self.j_min]

    def chi_at_level(self, m: int) -> np.ndarray:
        """Low-pass multiplier chi(2^-m |k|) on the grid."""
        return chi_profile(self.grid.kmag / 2.0**m)


def build_partition(grid: Grid) -> DyadicPartition:
    """All dyadic blocks whose annulus meets the resolved band [2pi/L, |k|_max]."""
    j_min = int(np.ceil(np.log2(grid.kmin * 3.0 / 8.0)))
    j_max = int(np.floor(np.log2(grid.kmax * 4.0 / 3.0)))
    if j_max - j_min + 1 < 3:
        raise ValueError(
            f"grid resolves only {j_max - j_min + 1} dyadic blocks; need at least 3"
        )
    weights = tuple(lp_bump(grid.kmag / 2.0**j) for j in range(j_min, j_max + 1))
    return DyadicPartition(grid=grid, j_min=j_min, j_max=j_max, weights=weights)


def partition_unity_defect(p: DyadicPartition) -> float:
    """max over nonzero grid modes of |sum_j bump(2^-j k) - 1|."""
    total = np.zeros(p.grid.shape)
    for w in p.weights:
        total += w
    mask = p.grid.kmag > 0
    return float(np.max(np.abs(total[mask] - 1.0)))


def dyadic_block(p: DyadicPartition, f: np.ndarray, j: int) -> np.ndarray:
    """Frequency-localized piece block_j f (annulus |k| ~ 2^j)."""
    return inverse(p.grid, forward(p.grid, f) * p.weight(j))


def low_freq_truncate(p: DyadicPartition, f: np.ndarray, m: int) -> np.ndarray:
    """Smooth low-pass chi(2^-m D) f; identity for m above the resolved band."""
    return inverse(p.grid, forward(p.grid, f) * p.chi_at_level(m))


def block_l2_norms(p: DyadicPartition, f: np.ndarray) -> np.ndarray:
    """||block_j f||_{L^2} for every j, computed spectrally (Parseval).

    Accepts a scalar field or a vector field with a leading component axis;
    components are combined in quadrature.
    """
    grid = p.grid
    w = spectral_l2_weight(grid)
    if f.shape == grid.shape:
        comps = [f]
    elif f.shape == (grid.dim,) + grid.shape:
        comps = list(f)
    else:
        raise ValueError(f"field shape {f.shape} fits neither scalar nor vector layout")
    power = np.zeros(grid.shape)
    for c in comps:
        power += np.abs(forward(grid, c)) ** 2
    out = np.empty(len(p.weights))
    for i, wj in enumerate(p.weights):
        out[i] = np.sqrt(w * np.sum(wj**2 * power))
    return out


@dataclass
class BlockDecomposition:
    """Per-block L^2 norms of one field plus the norm weights they enter."""

    js: np.ndarray
    block_l2: np.ndarray
    s: float
    beta: float | None = None

    @property
    def weight_s(self) -> np.ndarray:
        return 2.0 ** (self.js * self.s)

    @property
    def weight_hybrid(self) -> np.ndarray:
        if self.beta is None:
            return np.full(len(self.js), np.nan)
        return np.minimum(self.beta**2, 4.0**self.js) * 2.0 ** (self.js * self.s)

    def to_csv(self) -> str:
        lines = ["# schema=1", "j,block_l2,weight_s,weight_hybrid"]
        wh = self.weight_hybrid
        for i, j in enumerate(self.js):
            lines.append(f"{j},{self.block_l2[i]!r},{self.weight_s[i]!r},{wh[i]!r}")
        return "\n".join(lines) + "\n"


def block_decomposition(
    p: DyadicPartition, f: np.ndarray, s: float, beta: float | None = None
) -> BlockDecomposition:
    return BlockDecomposition(js=p.js.copy(), block_l2=block_l2_norms(p, f), s=s, beta=beta)


def besov_norm(p: DyadicPartition, f: np.ndarray, s: float) -> float:
    """Homogeneous dyadic norm sum_j 2^{js} ||block_j f||_{L^2} (zero mode dropped)."""
    b = block_l2_norms(p, f)
    return float(np.sum(2.0 ** (p.js * s) * b))


def hybrid_norm(p: DyadicPartition, f: np.ndarray, s: float, beta: float) -> float:
    """Two-regime norm with weight min(beta^2, 2^{2j}) 2^{js} per block.

    Parabolic weight 2^{j(s+2)} below the threshold beta, damped weight
    beta^2 2^{js} above; monotone nondecreasing in beta and bounded by
    besov_norm(f, s+2).
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    b = block_l2_norms(p, f)
    w = np.minimum(beta**2, 4.0 ** p.js.astype(float)) * 2.0 ** (p.js * s)
    return float(np.sum(w * b))


def hybrid_equivalence_ratio(
    p: DyadicPartition, f: np.ndarray, s: float, model: CapillaryModel
) -> tuple:
    """(hybrid norm of f, dyadic norm of -D[f]) with the model's threshold.

    The two are equivalent norms; the caller checks their ratio against a
    fixed bracket ([1/8, 8] absorbs the block-edge slack).
    """
    if model.variant not in ("NSRW", "NSOP"):
        raise ValueError("equivalence is defined for the non-local variants only")
    beta = model.beta
    h = hybrid_norm(p, f, s, beta)
    sym = -capillary_symbol(p.grid.kmag, model)
    g = inverse(p.grid, forward(p.grid, f) * sym)
    return h, besov_norm(p, g, s)


def _check_samples(times, fields) -> None:
    if len(fields) < 2 or len(times) != len(fields):
        raise ValueError("need >= 2 time samples with matching times")
    dts = np.diff(np.asarray(times, dtype=float))
    if np.any(dts <= 0) or (np.max(dts) - np.min(dts)) > 1e-9 * max(np.max(dts), 1e-300):
        raise ValueError("time samples must be strictly increasing and uniformly spaced")


def block_history(p: DyadicPartition, fields) -> np.ndarray:
    """Matrix B[i, j] = ||block_j f(t_i)||_{L^2} over a sample sequence."""
    return np.array([block_l2_norms(p, f) for f in fields])


def chemin_lerner_norm(
    p: DyadicPartition, times, fields, s: float, time_exponent: float
) -> float:
    """Time-inside-block norm over a uniformly sampled sequence.

    time_exponent = inf: sum_j 2^{js} max_t ||block_j f(t)||_{L^2};
    time_exponent = 1:   sum_j 2^{js} trapezoid_t ||block_j f(t)||_{L^2}.
    """
    _check_samples(times, fields)
    B = block_history(p, fields)
    if time_exponent == np.inf:
        per_block = B.max(axis=0)
    elif time_exponent == 1:
        per_block = np.trapezoid(B, np.asarray(times, dtype=float), axis=0)
    else:
        raise ValueError("time_exponent must be 1 or inf")
    return float(np.sum(2.0 ** (p.js * s) * per_block))


@dataclass
class TrajectoryNorms:
    """Components of the trajectory norms for (q, u[, c]) sample sequences.

    sup-in-time terms use the time-inside-block (tilde) norm; integrated
    terms use trapezoidal quadrature at the sampling cadence.
    """

    u_sup: float  # tilde-L^inf dyadic norm of u at index s-1
    q_sup: float  # tilde-L^inf dyadic norm of q at index s
    u_int: float  # L^1-in-time dyadic norm of u at index s+1
    q_int: float  # L^1-in-time norm of q: index s+2, hybrid when beta given
    c_sup: float = 0.0
    c_int: float = 0.0

    @property
    def total(self) -> float:
        return self.u_sup + self.q_sup + self.u_int + self.q_int + self.c_sup + self.c_int


def _l1_time_weighted(p, times, fields, weights) -> float:
    B = block_history(p, fields)
    per_block = np.trapezoid(B, np.asarray(times, dtype=float), axis=0)
    return float(np.sum(weights * per_block))


def l1_time_besov(p: DyadicPartition, times, fields, s: float) -> float:
    """Time-integrated dyadic norm (trapezoid in t, weight 2^{js} over blocks)."""
    _check_samples(times, fields)
    return _l1_time_weighted(p, times, fields, 2.0 ** (p.js * s))


def trajectory_norm(
    p: DyadicPartition,
    times,
    q_fields,
    u_fields,
    s: float,
    beta: float | None = None,
    c_fields=None,
) -> TrajectoryNorms:
    """Assemble the trajectory norm of (q, u[, c]) samples.

    beta None gives the fully parabolic flavor (q integrated at index s+2);
    beta set switches the q (and c) time integrals to the hybrid weight.
    c_fields requires beta (the three-component flavor is hybrid by design).
    """
    _check_samples(times, q_fields)
    if c_fields is not None and beta is None:
        raise ValueError("the (q, c, u) flavor requires beta")
    js = p.js
    if beta is None:
        wq = 2.0 ** (js * (s + 2.0))
    else:
        if not beta > 0:
            raise ValueError("beta must be > 0")
        wq = np.minimum(beta**2, 4.0 ** js.astype(float)) * 2.0 ** (js * s)
    out = TrajectoryNorms(
        u_sup=chemin_lerner_norm(p, times, u_fields, s - 1.0, np.inf),
        q_sup=chemin_lerner_norm(p, times, q_fields, s, np.inf),
        u_int=_l1_time_weighted(p, times, u_fields, 2.0 ** (js * (s + 1.0))),
        q_int=_l1_time_weighted(p, times, q_fields, wq),
    )
    if c_fields is not None:
        out.c_sup = chemin_lerner_norm(p, times, c_fields, s, np.inf)
        out.c_int = _l1_time_weighted(p, times, c_fields, wq)
    return out
