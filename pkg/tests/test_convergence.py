import numpy as np
import pytest

from capns.besov import besov_norm, build_partition, hybrid_norm
from capns.convergence import (
    SweepSpec,
    fit_slope,
    order_parameter_gap,
    order_parameter_gap_sweep,
    remainder_norms,
    remainder_study,
    run_alpha_sweep,
    run_epsilon_sweep,
    trajectory_difference_norm,
    difference_fields,
)
from capns.grid import make_grid
from capns.kernels import CapillaryModel, bessel_symbol
from capns.pressure import PressureLaw
from capns.solver import (
    PhysParams,
    StepperConfig,
    Trajectory,
    TwoPhase,
    simulate,
)

PAR = PhysParams(mu=0.2, lam=0.0)
LAW = PressureLaw(kind="gamma", A=0.5, gamma=2.0)


def small_spec(family="NSRW", values=(0.2, 0.1, 0.05), kappa=1.0, h=0.5, n=128):
    grid = make_grid(1, n, 2.0 * np.pi)
    return SweepSpec(
        family=family,
        values=values,
        h=h,
        kappa=kappa,
        grid=grid,
        params=PAR,
        law=LAW,
        cfg=StepperConfig(dt=1e-3, t_end=0.03, sample_every=10),
        profile=TwoPhase(rho1=0.9, rho2=1.1, interface_width=0.5),
    )


class TestFitSlope:
    def test_exact_square_law(self):
        xs = np.array([1.0, 2.0, 4.0, 8.0])
        f = fit_slope(xs, xs**2)
        assert f["slope"] == pytest.approx(2.0, abs=1e-12)
        assert f["r2"] == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        f = fit_slope([1.0, 2.0, 4.0], [3.0, 3.0, 3.0])
        assert f["slope"] == pytest.approx(0.0, abs=1e-12)

    def test_noisy_power(self, rng):
        xs = np.logspace(-2, 0, 12)
        ys = 3.0 * xs**1.5 * (1.0 + 0.01 * rng.standard_normal(12))
        f = fit_slope(xs, ys)
        assert 1.4 <= f["slope"] <= 1.6

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            fit_slope([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            fit_slope([1.0, -2.0, 3.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            fit_slope([1.0, 2.0, 3.0], [0.0, 2.0, 3.0])


class TestSweepSpec:
    def test_requires_three_points(self):
        with pytest.raises(ValueError, match=">= 3"):
            small_spec(values=(0.2, 0.1))

    def test_requires_monotone(self):
        with pytest.raises(ValueError, match="decreasing"):
            small_spec(values=(0.1, 0.2, 0.05))

    def test_transition_inside_band(self):
        with pytest.raises(ValueError, match="resolved band"):
            small_spec(values=(0.2, 0.1, 1e-4))  # 1/eps = 10^4 above Nyquist

    def test_alpha_family_small_param(self):
        spec = small_spec(family="NSOP", values=(5.0, 10.0, 20.0))
        assert np.allclose(spec.small_params, [0.2, 0.1, 0.05])


class TestDifferenceNorm:
    def _tiny_traj(self, grid, qs, us, times, cs=None):
        cfg = StepperConfig(dt=1e-3, t_end=1e-3)
        return Trajectory(
            grid=grid,
            model=CapillaryModel("NSK", kappa=1.0),
            params=PAR,
            law=LAW,
            cfg=cfg,
            times=np.asarray(times, dtype=float),
            qs=qs,
            us=us,
            cs=cs,
            floor=0.5,
            ceiling=2.0,
        )

    def test_identical_zero(self, grid1d):
        z = np.zeros(grid1d.shape)
        zu = np.zeros((1,) + grid1d.shape)
        p = build_partition(grid1d)
        a = self._tiny_traj(grid1d, [z, z], [zu, zu], [0.0, 0.1])
        assert trajectory_difference_norm(p, a, a, 0.5, beta=8.0) == 0.0

    def test_constant_in_time_harmonic_closed_form(self, grid1d):
        (x,) = grid1d.meshgrid()
        p = build_partition(grid1d)
        z = np.zeros(grid1d.shape)
        zu = np.zeros((1,) + grid1d.shape)
        dq = 0.3 * np.cos(4.0 * x)
        T, s, beta = 0.5, 0.25, 8.0
        ref = self._tiny_traj(grid1d, [z, z], [zu, zu], [0.0, T])
        pert = self._tiny_traj(grid1d, [dq, dq], [zu, zu], [0.0, T])
        got = trajectory_difference_norm(p, ref, pert, s, beta)
        expect = besov_norm(p, dq, s) + T * hybrid_norm(p, dq, s, beta)
        assert got == pytest.approx(expect, rel=1e-12)

    def test_homogeneity(self, grid1d, rng):
        p = build_partition(grid1d)
        z = np.zeros(grid1d.shape)
        zu = np.zeros((1,) + grid1d.shape)
        dq = rng.standard_normal(grid1d.shape)
        du = rng.standard_normal((1,) + grid1d.shape)
        ref = self._tiny_traj(grid1d, [z, z], [zu, zu], [0.0, 0.1])
        p1 = self._tiny_traj(grid1d, [dq, dq], [du, du], [0.0, 0.1])
        p2 = self._tiny_traj(grid1d, [2 * dq, 2 * dq], [2 * du, 2 * du], [0.0, 0.1])
        n1 = trajectory_difference_norm(p, ref, p1, 0.5, 4.0)
        n2 = trajectory_difference_norm(p, ref, p2, 0.5, 4.0)
        assert n2 == pytest.approx(2.0 * n1, rel=1e-12)

    def test_mismatched_times_rejected(self, grid1d):
        z = np.zeros(grid1d.shape)
        zu = np.zeros((1,) + grid1d.shape)
        p = build_partition(grid1d)
        a = self._tiny_traj(grid1d, [z, z], [zu, zu], [0.0, 0.1])
        b = self._tiny_traj(grid1d, [z, z], [zu, zu], [0.0, 0.2])
        with pytest.raises(ValueError, match="sample times"):
            trajectory_difference_norm(p, a, b, 0.5, 4.0)


class TestSweeps:
    def test_epsilon_sweep_passes(self):
        rep = run_epsilon_sweep(small_spec())
        assert rep.verdict == "PASS"
        assert rep.monotone
        assert rep.slope >= 0.4
        assert rep.extrapolation  # 1D runs are flagged as outside the d >= 2 setting

    def test_epsilon_sweep_flavor_ordering(self):
        # the fully parabolic flavor dominates the hybrid flavor pointwise
        spec = small_spec()
        rep = run_epsilon_sweep(spec, keep_trajectories=True)
        p = build_partition(spec.grid)
        ref = rep.trajectories["reference"]
        for v, member in rep.trajectories["members"].items():
            d = difference_fields(ref, member)
            from capns.besov import trajectory_norm

            full = trajectory_norm(p, d["times"], d["dq"], d["du"], rep.s, beta=None).total
            hyb = trajectory_norm(
                p, d["times"], d["dq"], d["du"], rep.s, beta=1.0 / v
            ).total
            assert full >= hyb - 1e-12

    def test_degenerate_kappa_zero(self):
        rep = run_epsilon_sweep(small_spec(kappa=0.0))
        assert rep.verdict == "degenerate: models identical"
        assert all(e == 0.0 for e in rep.errors)
        assert rep.slope is None

    def test_halted_members_marked_fit_on_survivors(self, monkeypatch):
        # members that leave the admissible regime are marked failed and the
        # fit proceeds on the survivors when >= 3 remain
        import capns.convergence as conv
        from capns.solver import SolverHalt

        real_simulate = conv.simulate
        halted_eps = {0.1}

        def flaky(grid, ini, model, params, law, cfg):
            if model.variant == "NSRW" and model.epsilon in halted_eps:
                raise SolverHalt("density [0, 3] left [0.5, 2]", {})
            return real_simulate(grid, ini, model, params, law, cfg)

        monkeypatch.setattr(conv, "simulate", flaky)
        spec = small_spec(values=(0.2, 0.1, 0.05, 0.025))
        rep = run_epsilon_sweep(spec)
        assert rep.point_status[1].startswith("halted")
        assert np.isnan(rep.errors[1])
        assert rep.slope is not None and rep.verdict == "PASS"

        halted_eps.update({0.2, 0.05, 0.025})
        rep2 = run_epsilon_sweep(spec)
        assert rep2.verdict == "all parameter points halted"
        assert not rep2.passed

    def test_alpha_sweep_passes(self):
        rep = run_alpha_sweep(small_spec(family="NSOP", values=(8.0, 16.0, 32.0)))
        assert rep.verdict == "PASS"
        assert rep.norm_flavor == "F_beta"

    def test_reeval_at_other_rate_index(self):
        from capns.convergence import reeval_at_h

        spec = small_spec()
        rep = run_epsilon_sweep(spec, keep_trajectories=True)
        rep25 = reeval_at_h(spec, rep, 0.25)
        assert rep25.h == 0.25 and rep25.s == pytest.approx(0.25)
        assert rep25.passed
        # same solves, different norm index: errors differ from the h=0.5 ones
        assert rep25.errors != rep.errors
        # identical spec evaluated directly must agree exactly
        from dataclasses import replace

        direct = run_epsilon_sweep(replace(spec, h=0.25))
        assert np.allclose(rep25.errors, direct.errors, rtol=0, atol=0)
        with pytest.raises(ValueError, match="keep_trajectories"):
            reeval_at_h(spec, direct, 0.1)

    def test_h_zero_checks_monotone_only(self):
        from dataclasses import replace

        spec = replace(small_spec(), h=0.0)
        rep = run_epsilon_sweep(spec)
        assert rep.verdict == "PASS" and rep.monotone
        assert rep.manifest["rate_target"] == 0.0
        with pytest.raises(ValueError, match="h must be >= 0"):
            small_spec(h=-0.5)

    def test_default_h_menu(self):
        from capns.convergence import default_h_menu

        assert default_h_menu(1) == (0.25, 0.5, 1.0)
        assert default_h_menu(2) == (0.25, 0.5, 0.9)

    def test_family_guard(self):
        with pytest.raises(ValueError):
            run_alpha_sweep(small_spec(family="NSRW"))
        with pytest.raises(ValueError):
            run_epsilon_sweep(small_spec(family="NSOP", values=(8.0, 16.0, 32.0)))

    def test_determinism(self):
        r1 = run_epsilon_sweep(small_spec())
        r2 = run_epsilon_sweep(small_spec())
        assert r1.errors == r2.errors
        assert r1.slope == r2.slope

    def test_linearized_regime_matches_semigroup_difference(self):
        # amplitude-1e-6 single harmonic: per mode the model difference is
        # (exp(t M_eps) - exp(t M_loc)) v0, so the measured sweep error must
        # match the norm of that closed-form difference trajectory to 5%
        from capns.solver import Harmonic, linear_oracle_evolution, make_initial_data, simulate
        from capns.besov import trajectory_norm

        grid = make_grid(1, 64, 2.0 * np.pi)
        amp = 1e-6
        profile = Harmonic(q_amp=amp, u_amp=amp, mode=(1,))
        cfg = StepperConfig(dt=2e-4, t_end=0.05, sample_every=25)
        kappa, h = 1.0, 0.5
        s = 0.5 - h
        ini = make_initial_data(grid, profile)
        ref = simulate(grid, ini, CapillaryModel("NSK", kappa=kappa), PAR, LAW, cfg)
        p = build_partition(grid)
        Q0 = np.fft.fft(ini.q)
        U0 = np.fft.fft(ini.u[0])
        v0 = np.array([Q0[1], 1j * grid.wavenumbers[1] * U0[1]])
        for eps in (0.2, 0.1):
            model = CapillaryModel("NSRW", kappa=kappa, epsilon=eps)
            member = simulate(grid, ini, model, PAR, LAW, cfg)
            measured = trajectory_difference_norm(p, ref, member, s, 1.0 / eps)
            sol_e = linear_oracle_evolution(1.0, model, PAR, LAW, v0, ref.times)
            sol_k = linear_oracle_evolution(
                1.0, CapillaryModel("NSK", kappa=kappa), PAR, LAW, v0, ref.times
            )
            dq_fields, du_fields = [], []
            for dv in sol_e - sol_k:
                Q = np.zeros(grid.shape, dtype=complex)
                Q[1], Q[-1] = dv[0], np.conj(dv[0])
                du_hat = dv[1] / (1j * grid.wavenumbers[1])
                U = np.zeros(grid.shape, dtype=complex)
                U[1], U[-1] = du_hat, np.conj(du_hat)
                dq_fields.append(np.fft.ifft(Q).real)
                du_fields.append(np.fft.ifft(U).real[None, :])
            predicted = trajectory_norm(
                p, ref.times, dq_fields, du_fields, s, beta=1.0 / eps
            ).total
            assert measured == pytest.approx(predicted, rel=0.05)


class TestOrderParameterGap:
    def test_constant_density_zero_gap(self, grid1d):
        cfg = StepperConfig(dt=1e-3, t_end=0.01, sample_every=5)
        model = CapillaryModel("NSOP", kappa=1.0, alpha=8.0)
        from capns.solver import State

        st = State(t=0.0, q=np.zeros(grid1d.shape), u=np.zeros((1,) + grid1d.shape))
        traj = simulate(grid1d, st, model, PAR, LAW, cfg)
        p = build_partition(grid1d)
        g = order_parameter_gap(p, traj)
        assert g["sup_norm"] < 1e-14 and g["integral_norm"] < 1e-14

    def test_frozen_harmonic_resolvent_defect(self, grid1d):
        # gap per mode is exactly (k^2/(alpha^2+k^2)) |rho_hat|: alpha
        # doubling shrinks it ~4x
        p = build_partition(grid1d)
        (x,) = grid1d.meshgrid()
        rho = 1.0 + 0.2 * np.cos(2.0 * x)
        gaps = {}
        for alpha in (8.0, 16.0):
            c = 1.0 + np.fft.ifftn(
                np.fft.fftn(rho - 1.0) * bessel_symbol(grid1d.kmag, alpha)
            ).real
            gaps[alpha] = besov_norm(p, c - rho, 0.5)
            k0 = 2.0
            per_mode = k0**2 / (alpha**2 + k0**2)
            assert gaps[alpha] == pytest.approx(
                per_mode * besov_norm(p, rho - 1.0, 0.5), rel=1e-10
            )
        # exact ratio (alpha2^2 + k^2)/(alpha1^2 + k^2) = 260/68, approx 4
        ratio = gaps[8.0] / gaps[16.0]
        assert ratio == pytest.approx(260.0 / 68.0, rel=1e-10)
        assert 3.5 < ratio <= 4.0

    def test_gap_sweep_slope(self):
        spec = small_spec(family="NSOP", values=(8.0, 16.0, 32.0))
        rep = run_alpha_sweep(spec, keep_trajectories=True)
        p = build_partition(spec.grid)
        out = order_parameter_gap_sweep(p, rep.trajectories["members"])
        assert out["slope"] >= 1.8
        assert out["passed"]
        assert out["sup_decaying"]  # plain convergence of the sup norm

    def test_requires_order_parameter(self, grid1d):
        cfg = StepperConfig(dt=1e-3, t_end=0.01)
        from capns.solver import State

        st = State(t=0.0, q=np.zeros(grid1d.shape), u=np.zeros((1,) + grid1d.shape))
        traj = simulate(grid1d, st, CapillaryModel("NSK", kappa=1.0), PAR, LAW, cfg)
        with pytest.raises(ValueError):
            order_parameter_gap(build_partition(grid1d), traj)


class TestRemainderStudy:
    def _frozen_harmonic_traj(self, grid, k0=2.0, amp=0.3):
        (x,) = grid.meshgrid()
        q = amp * np.cos(k0 * x)
        cfg = StepperConfig(dt=1e-3, t_end=1e-3)
        return Trajectory(
            grid=grid,
            model=CapillaryModel("NSK", kappa=1.0),
            params=PAR,
            law=LAW,
            cfg=cfg,
            times=np.array([0.0, 1.0]),
            qs=[q, q],
            us=[np.zeros((1,) + grid.shape)] * 2,
            cs=None,
            floor=0.5,
            ceiling=2.0,
        )

    def test_zero_trajectory(self, grid1d):
        p = build_partition(grid1d)
        traj = self._frozen_harmonic_traj(grid1d, amp=0.0)
        out = remainder_norms(p, traj, 0.1, 1.0, 0.5)
        assert out["raw"] == 0.0

    def test_single_harmonic_closed_form(self, grid1d):
        # one mode k0: normalized value is the per-mode factor
        # (e^{-eps^2 k0^2} - 1 + eps^2 k0^2)/eps^2 * k0 * 2^{j(d/2-h-1)} ...
        # computed here directly from the same block weights
        p = build_partition(grid1d)
        k0, eps, kappa, h = 2.0, 0.1, 2.0, 0.5
        traj = self._frozen_harmonic_traj(grid1d, k0=k0)
        out = remainder_norms(p, traj, eps, kappa, h)
        factor = (np.exp(-(eps * k0) ** 2) - 1.0 + (eps * k0) ** 2) / eps**2
        num_expect = kappa * factor * k0 * sum(
            float(np.abs(w.flat[2])) * 2.0 ** (j * (0.5 - h - 1.0))
            for j, w in zip(p.js, p.weights)
        )
        den_expect = kappa * sum(
            float(np.abs(w.flat[2])) * 2.0 ** (j * 2.5) for j, w in zip(p.js, p.weights)
        )
        assert out["normalized"] == pytest.approx(num_expect / den_expect, rel=1e-9)

    def test_smooth_eps_halving(self, grid1d):
        p = build_partition(grid1d)
        traj = self._frozen_harmonic_traj(grid1d)
        a = remainder_norms(p, traj, 0.05, 1.0, 0.5)["normalized"]
        b = remainder_norms(p, traj, 0.025, 1.0, 0.5)["normalized"]
        assert a / b == pytest.approx(4.0, rel=0.05)

    def test_study_slopes_and_h0(self, grid1d):
        p = build_partition(grid1d)
        traj = self._frozen_harmonic_traj(grid1d)
        for h in (0.25, 0.5, 1.0):
            out = remainder_study(p, traj, [0.2, 0.1, 0.05, 0.025], h, 1.0)
            assert out["passed"] and out["slope"] >= h
        out0 = remainder_study(p, traj, [0.2, 0.1, 0.05, 0.025], 0.0, 1.0)
        assert out0["passed"] and out0["monotone"] and out0["slope"] is None
