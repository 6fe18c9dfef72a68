"""Cross-checks in the less-traveled parameter regimes: negative lam+mu,
spinodal instability growth, real-space vs spectral block norms."""

import numpy as np
import pytest
from scipy.linalg import expm

from capns.besov import block_l2_norms, build_partition, dyadic_block
from capns.grid import l2_norm, make_grid
from capns.kernels import CapillaryModel
from capns.pressure import PressureLaw
from capns.solver import (
    Harmonic,
    PhysParams,
    StepperConfig,
    linear_oracle_evolution,
    make_initial_data,
    simulate,
)


def test_block_norms_two_paths(grid1d, rng):
    # spectral Parseval path vs real-space reconstruction, scalar and vector
    p = build_partition(grid1d)
    f = rng.standard_normal(grid1d.shape)
    spectral = block_l2_norms(p, f)
    for i, j in enumerate(p.js):
        direct = l2_norm(grid1d, dyadic_block(p, f, j))
        assert spectral[i] == pytest.approx(direct, rel=1e-12, abs=1e-15)
    u = rng.standard_normal((1,) + grid1d.shape)
    spectral_u = block_l2_norms(p, u)
    for i, j in enumerate(p.js):
        direct = l2_norm(grid1d, dyadic_block(p, u[0], j))
        assert spectral_u[i] == pytest.approx(direct, rel=1e-12, abs=1e-15)


def test_negative_bulk_viscosity_oracle():
    # lam + mu < 0 with nu = 2mu + lam > 0 is admissible; the longitudinal
    # damping nu k^2 still matches the matrix-exponential oracle
    par = PhysParams(mu=0.5, lam=-0.6)  # nu = 0.4, lam+mu = -0.1
    assert par.nu0 == pytest.approx(0.4)
    g = make_grid(1, 64, 2.0 * np.pi)
    law = PressureLaw(kind="gamma", A=0.5, gamma=2.0)
    model = CapillaryModel("NSK", kappa=1.0)
    amp = 1e-6
    ini = make_initial_data(g, Harmonic(q_amp=amp, u_amp=amp, mode=(1,)))
    cfg = StepperConfig(dt=5e-4, t_end=0.5, sample_every=100)
    traj = simulate(g, ini, model, par, law, cfg)
    qw = []
    for i in range(traj.n_samples):
        Q = np.fft.fft(traj.qs[i])
        U = np.fft.fft(traj.us[i][0])
        qw.append([Q[1], 1j * g.wavenumbers[1] * U[1]])
    qw = np.array(qw)
    oracle = linear_oracle_evolution(1.0, model, par, law, qw[0], traj.times)
    rel = float((np.abs(qw - oracle).max(axis=1) / np.abs(oracle).max(axis=1)).max())
    assert rel < 0.01


def test_spinodal_growth_rate_matches_full_linearization():
    # van der Waals with P'(1) < 0 and weak capillarity: the k=1 mode is
    # genuinely unstable (kappa k^4 + P'(1) k^2 < 0); the simulated growth
    # must match exp(t M_full) with the explicit pressure included
    law = PressureLaw(kind="vdw", a=1.0, b=1.0 / 3.0, RT=0.8)  # P'(1) = -0.2
    par = PhysParams(mu=0.2, lam=0.0)
    kappa = 0.1
    model = CapillaryModel("NSK", kappa=kappa)
    k = 1.0
    G_full = kappa * k**4 + law.dP1 * k**2
    assert G_full < 0
    M_full = np.array([[0.0, -1.0], [G_full, -par.nu * k**2]])
    growth = np.max(np.linalg.eigvals(M_full).real)
    assert growth > 0.05

    g = make_grid(1, 64, 2.0 * np.pi)
    amp = 1e-6
    # data on the growing eigenvector (q, w) ~ (1, -growth): u_amp = -growth*amp
    ini = make_initial_data(g, Harmonic(q_amp=amp, u_amp=-growth * amp, mode=(1,)))
    cfg = StepperConfig(dt=2e-4, t_end=2.0, sample_every=500)
    traj = simulate(g, ini, model, par, law, cfg)
    qw = []
    for i in range(traj.n_samples):
        Q = np.fft.fft(traj.qs[i])
        U = np.fft.fft(traj.us[i][0])
        qw.append([Q[1], 1j * g.wavenumbers[1] * U[1]])
    qw = np.array(qw)
    oracle = np.array([expm(t * M_full) @ qw[0] for t in traj.times])
    rel = float((np.abs(qw - oracle).max(axis=1) / np.abs(oracle).max(axis=1)).max())
    assert rel < 0.02
    # amplitude grows at the predicted e-folding rate
    amps = np.abs(qw[:, 0])
    assert amps[-1] == pytest.approx(amps[0] * np.exp(growth * traj.times[-1]), rel=0.02)
    rate = np.polyfit(traj.times, np.log(amps), 1)[0]
    assert rate == pytest.approx(growth, rel=0.02)


def test_verify_symbols_2d_grid():
    from capns.cli import main

    assert main(["verify-symbols", "--grid", "2,64,6.283185307179586"]) == 0


def test_sweep_reports_bit_identical_across_runs(tmp_path):
    # two executions of the same sweep spec write byte-identical CSVs
    from capns.cli import main

    cfg = """
[grid]
n = 64

[model]
variant = NSK
kappa = 1.0

[physics]
mu = 0.5

[stepper]
dt = 1e-3
t_end = 0.02
sample_every = 10

[initial]
profile = random_band
seed = 11
mode_lo = 1
mode_hi = 5
q_amp = 0.1
u_amp = 0.05

[sweep]
family = NSRW
values = 0.2, 0.1, 0.05
h = 0.5
"""
    p = tmp_path / "s.cfg"
    p.write_text(cfg)
    assert main(["sweep", str(p), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", str(p), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    b = (tmp_path / "b" / "sweep.csv").read_bytes()
    assert a == b


def test_config_output_directory_used(tmp_path):
    from capns.cli import main

    cfg = f"""
[grid]
n = 64

[model]
variant = NSK
kappa = 1.0

[physics]
mu = 0.5

[stepper]
dt = 1e-3
t_end = 0.005
sample_every = 5

[initial]
profile = harmonic
q_amp = 0.05

[output]
directory = {tmp_path}/from_config
"""
    p = tmp_path / "cfg.cfg"
    p.write_text(cfg)
    assert main(["simulate", str(p)]) == 0
    import os

    assert os.path.exists(tmp_path / "from_config" / "manifest.json")
