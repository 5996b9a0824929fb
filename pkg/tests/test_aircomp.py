import numpy as np
import pytest

from otafl.aircomp import (
    AirCompConfig,
    Beamformer,
    DegenerateChannelError,
    minimax_gap_objective,
    ota_aggregate,
    ota_aggregate_complex,
    power_check,
    round_error_penalty,
    scaling_cap,
    worst_inverse_gain,
    zero_forcing_coeffs,
)
from otafl.channel import ArrayGeometry, ChannelSet


def make_channels(matrix, aperture=8.0, min_spacing=0.5):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    n = matrix.shape[1]
    positions = np.linspace(1.0, aperture - 1.0, n) if n > 1 else np.array([4.0])
    geo = ArrayGeometry(positions=positions, aperture=aperture, min_spacing=min_spacing)
    return ChannelSet(matrix=matrix, geometry=geo)


def random_instance(rng, n_users=4, n_ant=4, min_gain=0.1):
    """(m, channels) with every effective gain bounded away from zero."""
    while True:
        m = Beamformer(weights=rng.standard_normal(n_ant) + 1j * rng.standard_normal(n_ant))
        mat = rng.standard_normal((n_users, n_ant)) + 1j * rng.standard_normal((n_users, n_ant))
        channels = make_channels(mat)
        if np.min(np.abs(channels.matrix @ np.conj(m.weights))) > min_gain:
            return m, channels


class TestZeroForcing:
    def test_real_scalar_case(self):
        coeffs = zero_forcing_coeffs(
            Beamformer(weights=[1.0]), make_channels([[2.0]]), scaling=1.0
        )
        np.testing.assert_allclose(coeffs.per_user, [0.5])

    def test_phase_cancellation(self):
        coeffs = zero_forcing_coeffs(
            Beamformer(weights=[1.0]), make_channels([[1.0j]]), scaling=4.0
        )
        np.testing.assert_allclose(coeffs.per_user, [-2.0j])
        align = (1.0 / 2.0) * np.conj(1.0) * (-2.0j) * 1.0j
        np.testing.assert_allclose(align, 1.0)

    def test_alignment_identity_random(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            m, channels = random_instance(rng)
            coeffs = zero_forcing_coeffs(m, channels, scaling=2.0)
            align = (
                (channels.matrix @ np.conj(m.weights)) * coeffs.per_user / np.sqrt(2.0)
            )
            assert np.max(np.abs(align - 1.0)) < 1e-10

    def test_degenerate_channel_raises(self):
        m = Beamformer(weights=[1.0, 0.0])
        channels = make_channels([[0.0, 1.0]])  # orthogonal to m
        with pytest.raises(DegenerateChannelError):
            zero_forcing_coeffs(m, channels, scaling=1.0)

    def test_zero_beam_raises(self):
        with pytest.raises(DegenerateChannelError):
            zero_forcing_coeffs(
                Beamformer(weights=[0.0, 0.0]), make_channels([[1.0, 1.0]]), 1.0
            )


class TestScalingCap:
    def test_hand_arithmetic(self):
        # |m^H h_k|^2 = [4, 1], d=10, max_power=2, norms=[5, 5] -> min(16, 4)
        m = Beamformer(weights=[1.0])
        channels = make_channels([[2.0], [1.0]])
        got = scaling_cap(m, channels, np.array([5.0, 5.0]), max_power=2.0, model_dim=10)
        assert got == pytest.approx(4.0)

    def test_single_user_unit(self):
        got = scaling_cap(
            Beamformer(weights=[1.0]), make_channels([[1.0]]), np.array([1.0]), 1.0, 1
        )
        assert got == pytest.approx(1.0)

    def test_linear_in_power(self):
        rng = np.random.default_rng(3)
        m, channels = random_instance(rng)
        norms = rng.uniform(0.5, 2.0, channels.n_users)
        one = scaling_cap(m, channels, norms, 1.0, 7)
        two = scaling_cap(m, channels, norms, 2.0, 7)
        assert two == pytest.approx(2 * one)

    def test_monotone_in_power_and_gains(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            m, channels = random_instance(rng)
            norms = rng.uniform(0.5, 2.0, channels.n_users)
            base = scaling_cap(m, channels, norms, 1.0, 5)
            assert scaling_cap(m, channels, norms, 1.5, 5) >= base
            boosted = ChannelSet(matrix=channels.matrix * 2.0, geometry=channels.geometry)
            assert scaling_cap(m, boosted, norms, 1.0, 5) >= base


class TestPowerCheck:
    def test_boundary_passes(self):
        assert power_check(1.0, model_sq_norm=3.0 * 2.0, model_dim=3, max_power=2.0)

    def test_just_over_fails(self):
        assert not power_check(1.0, 3.0 * 2.0 * (1 + 1e-3), model_dim=3, max_power=2.0)

    def test_zero_forcing_at_cap_passes_all_users(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            m, channels = random_instance(rng)
            norms = rng.uniform(0.5, 3.0, channels.n_users)
            cap = scaling_cap(m, channels, norms, max_power=1.3, model_dim=6)
            coeffs = zero_forcing_coeffs(m, channels, cap)
            checks = [
                power_check(coeffs.per_user[k], norms[k], 6, 1.3)
                for k in range(channels.n_users)
            ]
            assert all(checks)
            # the binding user sits exactly at the limit
            used = np.abs(coeffs.per_user) ** 2 * norms / 6
            assert np.max(used) == pytest.approx(1.3, rel=1e-9)


class TestAggregate:
    def test_noiseless_zero_forcing_is_exact_average(self):
        rng = np.random.default_rng(2)
        m, channels = random_instance(rng)
        models = rng.standard_normal((channels.n_users, 6))
        coeffs = zero_forcing_coeffs(m, channels, scaling=1.5)
        cfg = AirCompConfig(max_power=1.0, noise_var=0.0, scaling=1.5)
        got = ota_aggregate(m, channels, coeffs, models, cfg, rng)
        np.testing.assert_allclose(got, models.mean(axis=0), atol=1e-10)

    def test_single_user_misaligned_scale(self):
        m = Beamformer(weights=[1.0])
        channels = make_channels([[1.0]])
        # coefficient doubled relative to zero forcing
        from otafl.aircomp import TransmitCoeffs

        coeffs = TransmitCoeffs(per_user=[2.0])
        cfg = AirCompConfig(max_power=1.0, noise_var=0.0, scaling=1.0)
        w = np.array([[1.0, -2.0, 3.0]])
        got = ota_aggregate(m, channels, coeffs, w, cfg, np.random.default_rng(0))
        np.testing.assert_allclose(got, 2.0 * w[0], atol=1e-12)

    def test_noise_power_matches_decomposition(self):
        # complex error power d*sigma2*||m||^2/(K^2 eta); real projection half
        rng = np.random.default_rng(17)
        m, channels = random_instance(rng, n_users=3, n_ant=4)
        dim, sigma2, eta = 8, 1.0, 2.0
        models = rng.standard_normal((3, dim))
        coeffs = zero_forcing_coeffs(m, channels, eta)
        cfg = AirCompConfig(max_power=1.0, noise_var=sigma2, scaling=eta)
        wbar = models.mean(axis=0)
        n_draws = 10_000
        err_c = np.empty(n_draws)
        err_r = np.empty(n_draws)
        for i in range(n_draws):
            agg = ota_aggregate_complex(m, channels, coeffs, models, cfg, rng)
            err_c[i] = np.sum(np.abs(agg - wbar) ** 2)
            err_r[i] = np.sum((agg.real - wbar) ** 2)
        expect = dim * sigma2 * m.norm**2 / (3**2 * eta)
        assert abs(err_c.mean() - expect) < 3 * err_c.std() / np.sqrt(n_draws)
        assert abs(err_r.mean() - expect / 2) < 4 * err_r.std() / np.sqrt(n_draws)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(1)
        m, channels = random_instance(rng)
        coeffs = zero_forcing_coeffs(m, channels, 1.0)
        cfg = AirCompConfig(max_power=1.0, noise_var=0.0, scaling=1.0)
        with pytest.raises(ValueError):
            ota_aggregate(m, channels, coeffs, np.zeros((2, 5)), cfg, rng)


class TestRoundErrorPenalty:
    def test_zero_forcing_leaves_noise_term(self):
        rng = np.random.default_rng(9)
        m, channels = random_instance(rng)
        coeffs = zero_forcing_coeffs(m, channels, 2.0)
        got = round_error_penalty(
            m, channels, coeffs, 2.0, smoothness=1.5, norm_cap=3.0, model_dim=10,
            noise_var=0.5,
        )
        k = channels.n_users
        expect = 1.5 * 10 * 0.5 / (2 * k**2 * 2.0) * m.norm**2
        assert got == pytest.approx(expect, rel=1e-9)

    def test_zero_noise_zero_forcing_vanishes(self):
        rng = np.random.default_rng(10)
        m, channels = random_instance(rng)
        coeffs = zero_forcing_coeffs(m, channels, 1.0)
        got = round_error_penalty(
            m, channels, coeffs, 1.0, smoothness=1.0, norm_cap=1.0, model_dim=4,
            noise_var=0.0,
        )
        assert got == pytest.approx(0.0, abs=1e-18)

    def test_all_silent_users(self):
        # every |0 - 1|^2 term contributes 1: total smoothness*cap/(2K)
        from otafl.aircomp import TransmitCoeffs

        rng = np.random.default_rng(12)
        m, channels = random_instance(rng)
        k = channels.n_users
        coeffs = TransmitCoeffs(per_user=np.zeros(k, dtype=complex))
        got = round_error_penalty(
            m, channels, coeffs, 1.0, smoothness=2.0, norm_cap=3.0, model_dim=4,
            noise_var=0.0,
        )
        assert got == pytest.approx(2.0 * 3.0 / (2 * k), rel=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(13)
        from otafl.aircomp import TransmitCoeffs

        for _ in range(100):
            m, channels = random_instance(rng)
            coeffs = TransmitCoeffs(
                per_user=rng.standard_normal(channels.n_users)
                + 1j * rng.standard_normal(channels.n_users)
            )
            got = round_error_penalty(
                m, channels, coeffs, 1.7, 1.0, 1.0, 4, noise_var=0.3
            )
            assert got >= 0


class TestMinimaxObjective:
    def test_scale_invariance(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            m, channels = random_instance(rng)
            base = minimax_gap_objective(m, channels, 1.0, 1.0, 1.0, 1.0)
            c = rng.standard_normal() + 1j * rng.standard_normal()
            scaled = minimax_gap_objective(
                Beamformer(weights=c * m.weights), channels, 1.0, 1.0, 1.0, 1.0
            )
            assert abs(scaled - base) <= 1e-10 * max(1.0, abs(base))

    def test_hand_value(self):
        # K=1, N=1, m=1, h=2: (1/2) * (1/4) = 0.125
        got = minimax_gap_objective(
            Beamformer(weights=[1.0]), make_channels([[2.0]]), 1.0, 1.0, 1.0, 1.0
        )
        assert got == pytest.approx(0.125)

    def test_matches_penalty_through_zero_forcing_and_cap(self):
        # substituting the optimal coefficients and the largest feasible
        # scaling at uniform norms reduces the penalty to this objective
        rng = np.random.default_rng(15)
        smoothness, cap, sigma2, p_max, dim = 1.3, 2.5, 0.7, 1.1, 9
        for _ in range(100):
            m, channels = random_instance(rng)
            eta = scaling_cap(
                m, channels, np.full(channels.n_users, cap), p_max, dim
            )
            coeffs = zero_forcing_coeffs(m, channels, eta)
            penalty = round_error_penalty(
                m, channels, coeffs, eta, smoothness, cap, dim, sigma2
            )
            objective = minimax_gap_objective(m, channels, smoothness, cap, sigma2, p_max)
            assert penalty == pytest.approx(objective, abs=1e-9, rel=1e-9)

    def test_worst_inverse_gain_degenerate(self):
        with pytest.raises(DegenerateChannelError):
            worst_inverse_gain(Beamformer(weights=[1.0, 0.0]), make_channels([[0.0, 1.0]]))
