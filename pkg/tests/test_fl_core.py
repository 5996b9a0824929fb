import numpy as np
import pytest

from otafl.aircomp import AirCompConfig, Beamformer
from otafl.channel import ArrayGeometry, ChannelSet, RicianParams, fpa_layout, sample_channel
from otafl.env import MobilityModel
from otafl.fl_core import (
    BoundTracker,
    CommRound,
    FLConfig,
    TaskSpec,
    global_grad,
    global_loss,
    ideal_aggregate,
    local_grad,
    local_update,
    make_synthetic_task,
    run_fl,
    unrolled_gap_bound,
)


def task_1d():
    # single user, A=[1], b=[2], one sample: smoothness=pl=1, optimum 2, loss 0
    return TaskSpec.from_data(np.array([[[1.0]]]), np.array([[2.0]]))


def small_task(seed=0, n_users=4, samples=10, dim=6, cond=10.0):
    return make_synthetic_task(n_users, samples, dim, cond, np.random.default_rng(seed))


class TestTaskConstruction:
    def test_trivial_1d(self):
        task = task_1d()
        assert task.smoothness == pytest.approx(1.0)
        assert task.pl_constant == pytest.approx(1.0)
        np.testing.assert_allclose(task.optimum, [2.0])
        assert task.optimal_loss == pytest.approx(0.0)

    def test_condition_number_hits_target(self):
        task = small_task(cond=10.0)
        assert task.smoothness / task.pl_constant == pytest.approx(10.0, rel=0.05)

    def test_optimum_gradient_vanishes(self):
        for seed in range(5):
            task = small_task(seed)
            assert np.linalg.norm(global_grad(task, task.optimum)) < 1e-8

    def test_contraction_in_unit_interval(self):
        for seed in range(5):
            task = small_task(seed, cond=3.0)
            assert 0.0 <= task.contraction < 1.0

    def test_heterogeneity_changes_users(self):
        uniform = make_synthetic_task(3, 8, 4, 5.0, np.random.default_rng(1))
        shifted = make_synthetic_task(3, 8, 4, 5.0, np.random.default_rng(1), heterogeneity=2.0)
        assert not np.allclose(uniform.b_vecs, shifted.b_vecs)
        assert shifted.optimal_loss > 0


class TestLocalUpdate:
    def test_fixed_point_at_local_minimizer(self):
        task = small_task(2)
        a, b = task.a_mats[0], task.b_vecs[0]
        w_star, *_ = np.linalg.lstsq(a, b, rcond=None)
        stepped = local_update(w_star, (a, b), learn_rate=0.7)
        np.testing.assert_allclose(stepped, w_star, atol=1e-12)

    def test_exact_scalar_step(self):
        got = local_update(np.array([1.0]), (np.array([[1.0]]), np.array([0.0])), 1.0)
        np.testing.assert_allclose(got, [0.0], atol=1e-15)

    def test_gradient_matches_finite_differences(self):
        task = small_task(3)
        w = np.random.default_rng(8).standard_normal(task.model_dim)
        eps = 1e-6
        for k in range(task.n_users):
            grad = local_grad(task, k, w)
            fd = np.empty_like(grad)
            for i in range(w.size):
                up, down = w.copy(), w.copy()
                up[i] += eps
                down[i] -= eps
                a, b = task.a_mats[k], task.b_vecs[k]
                loss_up = np.sum((a @ up - b) ** 2) / (2 * task.samples_per_user)
                loss_down = np.sum((a @ down - b) ** 2) / (2 * task.samples_per_user)
                fd[i] = (loss_up - loss_down) / (2 * eps)
            np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-8)


class TestIdealAggregate:
    def test_identical_inputs(self):
        v = np.array([1.0, 2.0])
        np.testing.assert_allclose(ideal_aggregate([v, v, v]), v)

    def test_two_vectors(self):
        got = ideal_aggregate([np.zeros(3), np.full(3, 2.0)])
        np.testing.assert_allclose(got, np.ones(3))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ideal_aggregate([])


class TestUnrolledBound:
    def test_two_step_hand_value(self):
        # 0.25*1 + 0.5*0.1 + 0.1 = 0.4
        assert unrolled_gap_bound(1.0, 0.5, [0.1, 0.1]) == pytest.approx(0.4)

    def test_pure_geometric_decay(self):
        assert unrolled_gap_bound(2.0, 0.3, [0.0] * 7) == pytest.approx(2.0 * 0.3**7)

    def test_constant_penalty_closed_form(self):
        psi, theta, t = 0.85, 0.2, 40
        got = unrolled_gap_bound(1.5, psi, [theta] * t)
        expect = psi**t * 1.5 + theta * (1 - psi**t) / (1 - psi)
        assert got == pytest.approx(expect, abs=1e-12)

    def test_recursion_agrees_with_unrolled_sum(self):
        rng = np.random.default_rng(4)
        thetas = rng.uniform(0, 0.5, 30)
        tracker = BoundTracker(contraction=0.9, initial_gap=2.0, smoothness=1.0, n_users=2)
        for theta in thetas:
            tracker.observe_norms(np.array([1.0]))
            tracker.record_round(misalign_sum=0.0, noise_term=float(theta), measured_gap=0.0)
        for t in range(1, 31):
            unrolled = unrolled_gap_bound(2.0, 0.9, thetas[:t])
            assert tracker.bound_history[t - 1] == pytest.approx(unrolled, abs=1e-12)


def zero_noise_provider(task, geometry_seed=0):
    """Fixed well-conditioned channels and beam for deterministic aggregation."""
    rng = np.random.default_rng(geometry_seed)
    geo = fpa_layout(4, 8.0, 0.5)
    mat = rng.standard_normal((task.n_users, 4)) + 1j * rng.standard_normal((task.n_users, 4))
    channels = ChannelSet(matrix=mat, geometry=geo)
    m = Beamformer(weights=rng.standard_normal(4) + 1j * rng.standard_normal(4))

    def provider(t, prng):
        return CommRound(beamformer=m, channels=channels)

    return provider


class TestRunFl:
    def test_noiseless_matches_centralized_descent(self):
        task = small_task(5)
        rounds = 30
        air = AirCompConfig(max_power=1.0, noise_var=0.0, scaling=1.0)
        result = run_fl(
            task,
            FLConfig(rounds=rounds, n_users=task.n_users),
            zero_noise_provider(task),
            air,
            np.random.default_rng(0),
        )
        # oracle: plain gradient descent on the global loss
        w = np.zeros(task.model_dim)
        for _ in range(rounds):
            w = w - (1.0 / task.smoothness) * global_grad(task, w)
        assert abs(result.gaps[-1] - (global_loss(task, w) - task.optimal_loss)) < 1e-8
        np.testing.assert_allclose(result.final_model, w, atol=1e-8)

    def test_noiseless_contracts_by_factor_psi(self):
        task = small_task(6)
        air = AirCompConfig(max_power=1.0, noise_var=0.0, scaling=1.0)
        result = run_fl(
            task,
            FLConfig(rounds=25, n_users=task.n_users),
            zero_noise_provider(task),
            air,
            np.random.default_rng(0),
        )
        gaps = np.concatenate([[result.tracker.initial_gap], result.gaps])
        psi = task.contraction
        assert np.all(gaps[1:] <= psi * gaps[:-1] + 1e-10)

    def test_first_round_recursion_base(self):
        task = small_task(7)
        air = AirCompConfig(max_power=1.0, noise_var=0.05, scaling=1.0)
        result = run_fl(
            task,
            FLConfig(rounds=1, n_users=task.n_users),
            zero_noise_provider(task),
            air,
            np.random.default_rng(1),
        )
        tr = result.tracker
        expect = tr.contraction * tr.initial_gap + tr.penalties[0]
        assert tr.bound_history[0] == pytest.approx(expect, abs=1e-15)

    def test_bound_holds_across_seeds(self):
        task = small_task(8, dim=8, samples=12)
        params = RicianParams()
        geo = fpa_layout(4, 8.0, 0.5)
        mobility = MobilityModel()
        air = AirCompConfig(max_power=1.0, noise_var=1e-5, scaling=1.0)

        def provider(t, prng):
            state = mobility.initial(task.n_users, prng)
            channels = sample_channel(params, state.users(), geo, prng)
            summed = channels.matrix.sum(axis=0)
            m = Beamformer(weights=summed / np.linalg.norm(summed))
            return CommRound(beamformer=m, channels=channels)

        for seed in range(5):
            result = run_fl(
                task,
                FLConfig(rounds=40, n_users=task.n_users),
                provider,
                air,
                np.random.default_rng(seed),
            )
            assert result.tracker.holds()

    def test_degenerate_round_skips_upload_and_charges_full_penalty(self):
        task = small_task(9)
        geo = fpa_layout(2, 8.0, 0.5)
        # channel orthogonal to the beam for user 0: zero forcing must fail
        mat = np.array([[0.0, 1.0]] + [[1.0, 1.0]] * (task.n_users - 1), dtype=complex)
        channels = ChannelSet(matrix=mat, geometry=geo)
        m = Beamformer(weights=[1.0, 0.0])

        def provider(t, prng):
            return CommRound(beamformer=m, channels=channels, scaling=1.0)

        air = AirCompConfig(max_power=1.0, noise_var=0.1, scaling=1.0)
        result = run_fl(
            task, FLConfig(rounds=3, n_users=task.n_users), provider, air,
            np.random.default_rng(0),
        )
        # model never moves, so the gap stays at the initial value
        assert np.allclose(result.gaps, result.tracker.initial_gap)
        k = task.n_users
        for cap, penalty in zip(result.tracker.caps_used, result.tracker.penalties):
            assert penalty == pytest.approx(task.smoothness * cap / (2 * k))

    def test_cross_module_ideal_aggregate_consistency(self):
        task = small_task(10)
        rng = np.random.default_rng(3)
        from otafl.aircomp import ota_aggregate, zero_forcing_coeffs

        provider = zero_noise_provider(task)
        comm = provider(1, rng)
        models = rng.standard_normal((task.n_users, task.model_dim))
        coeffs = zero_forcing_coeffs(comm.beamformer, comm.channels, 1.0)
        cfg = AirCompConfig(max_power=1.0, noise_var=0.0, scaling=1.0)
        via_air = ota_aggregate(comm.beamformer, comm.channels, coeffs, models, cfg, rng)
        np.testing.assert_allclose(via_air, ideal_aggregate(models), atol=1e-10)


class TestBoundTracker:
    def test_cap_tracks_running_max_with_margin(self):
        tracker = BoundTracker(contraction=0.5, initial_gap=1.0, smoothness=1.0, n_users=2)
        tracker.observe_norms(np.array([2.0, 1.0]))
        assert tracker.norm_cap == pytest.approx(2.5)
        tracker.observe_norms(np.array([1.5]))
        assert tracker.norm_cap == pytest.approx(2.5)
        tracker.observe_norms(np.array([4.0]))
        assert tracker.norm_cap == pytest.approx(5.0)

    def test_rebuild_with_final_cap(self):
        tracker = BoundTracker(contraction=0.5, initial_gap=1.0, smoothness=2.0, n_users=2)
        tracker.observe_norms(np.array([1.0]))
        tracker.record_round(misalign_sum=1.0, noise_term=0.1, measured_gap=0.5)
        tracker.observe_norms(np.array([10.0]))
        tracker.record_round(misalign_sum=1.0, noise_term=0.1, measured_gap=0.5)
        assert not tracker.cap_valid
        rebuilt = tracker.rebuilt_bounds()
        # both rounds recharged at cap 12.5: penalty = 2*12.5/8 + 0.1
        penalty = 2.0 * 12.5 / 8.0 + 0.1
        assert rebuilt[0] == pytest.approx(0.5 * 1.0 + penalty)
        assert rebuilt[1] == pytest.approx(0.5 * rebuilt[0] + penalty)
