import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otafl.channel import (
    ArrayGeometry,
    InfeasibleLayoutError,
    RicianParams,
    UserGeometry,
    fpa_layout,
    los_steering,
    mean_channel,
    sample_channel,
    sample_channel_batch,
)


def test_steering_single_antenna_is_phase_free():
    np.testing.assert_allclose(los_steering([0.0], 0.7, 1.0), [1.0 + 0.0j])


def test_steering_half_wavelength_broadside():
    np.testing.assert_allclose(
        los_steering([0.0, 0.5], 0.0, 1.0), [1.0, -1.0], atol=1e-12
    )


def test_steering_sixty_degrees():
    # cos(pi/3) = 1/2 gives phases 0, pi/2, pi
    got = los_steering([0.0, 0.5, 1.0], np.pi / 3, 1.0)
    np.testing.assert_allclose(got, [1.0, 1.0j, -1.0], atol=1e-12)


def test_steering_rejects_bad_input():
    with pytest.raises(ValueError):
        los_steering([], 0.0, 1.0)
    with pytest.raises(ValueError):
        los_steering([0.0], 0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=12),
    st.floats(-np.pi / 2, np.pi / 2),
    st.floats(0.1, 10),
)
def test_steering_entries_unit_modulus(positions, aoa, wavelength):
    vec = los_steering(positions, aoa, wavelength)
    np.testing.assert_allclose(np.abs(vec), 1.0, atol=1e-12)


class TestArrayGeometry:
    def test_valid(self):
        geo = ArrayGeometry(positions=[1.0, 2.0, 3.0], aperture=8.0, min_spacing=0.5)
        assert geo.n_antennas == 3

    def test_rejects_descending(self):
        with pytest.raises(ValueError):
            ArrayGeometry(positions=[2.0, 1.0], aperture=8.0, min_spacing=0.5)

    def test_rejects_out_of_aperture(self):
        with pytest.raises(ValueError):
            ArrayGeometry(positions=[1.0, 9.0], aperture=8.0, min_spacing=0.5)

    def test_rejects_tight_gap(self):
        with pytest.raises(InfeasibleLayoutError):
            ArrayGeometry(positions=[1.0, 1.4], aperture=8.0, min_spacing=0.5)

    def test_rejects_infeasible_count(self):
        with pytest.raises(InfeasibleLayoutError):
            ArrayGeometry(positions=np.linspace(0, 2, 6), aperture=2.0, min_spacing=0.5)


class TestFpaLayout:
    def test_three_antennas(self):
        geo = fpa_layout(3, 8.0, 0.5)
        np.testing.assert_allclose(geo.positions, [2.0, 4.0, 6.0])

    def test_single_antenna(self):
        np.testing.assert_allclose(fpa_layout(1, 8.0, 0.5).positions, [4.0])

    def test_spacing_violation(self):
        # gap would be 8/17 ~ 0.47 < 0.5
        with pytest.raises(InfeasibleLayoutError):
            fpa_layout(16, 8.0, 0.5)


def _flat_params(k_factor):
    # unit reference loss, no distance decay: moments depend only on k_factor
    return RicianParams(
        k_factor=k_factor, loss_los_db=0.0, loss_nlos_db=0.0, exp_los=0.0, exp_nlos=0.0
    )


def test_same_seed_bit_reproducible():
    params = RicianParams()
    geo = fpa_layout(4, 8.0, 0.5)
    users = [UserGeometry(50.0, 0.3), UserGeometry(80.0, -1.0)]
    a = sample_channel(params, users, geo, np.random.default_rng(123))
    b = sample_channel(params, users, geo, np.random.default_rng(123))
    assert np.array_equal(a.matrix, b.matrix)


def test_huge_k_factor_collapses_to_los():
    params = _flat_params(1e12)
    geo = fpa_layout(3, 8.0, 0.5)
    users = [UserGeometry(1.0, 0.4)]
    got = sample_channel(params, users, geo, np.random.default_rng(0)).matrix
    los = mean_channel(params, users, geo.positions)
    assert np.max(np.abs(got - los)) / np.max(np.abs(los)) < 1e-4


def test_zero_k_factor_is_pure_scatter():
    params = _flat_params(0.0)
    geo = fpa_layout(3, 8.0, 0.5)
    users = [UserGeometry(1.0, 0.4)]
    draws = np.random.default_rng(7).standard_normal((1, 3)) * (1 + 0j)
    got = sample_channel(params, users, geo, np.random.default_rng(0), nlos=draws)
    # los weight is zero and nlos gain is 1, so the entries are the draws
    np.testing.assert_allclose(got.matrix, draws, atol=1e-15)


def test_moment_checks_against_analytic_mean_and_variance():
    # k=10, d=1, unit loss, zero exponents: E||h||^2 per entry = 1, so N total.
    params = _flat_params(10.0)
    geo = fpa_layout(4, 8.0, 0.5)
    users = [UserGeometry(1.0, 0.25)]
    n_draws = 100_000
    batch = sample_channel_batch(params, users, geo, np.random.default_rng(42), n_draws)
    # total power: N * (k/(k+1) + 1/(k+1)) = N
    power = np.sum(np.abs(batch) ** 2, axis=(1, 2))
    se = power.std() / np.sqrt(n_draws)
    assert abs(power.mean() - geo.n_antennas) < 3 * se

    # entrywise mean matches the los component within 4 standard errors
    mean = batch.mean(axis=0)[0]
    los = mean_channel(params, users, geo.positions)[0]
    nlos_std = params.nlos_gain(1.0)  # per-entry complex std
    se_part = nlos_std / np.sqrt(2 * n_draws)  # real/imag parts separately
    assert np.all(np.abs(mean.real - los.real) < 4 * se_part)
    assert np.all(np.abs(mean.imag - los.imag) < 4 * se_part)

    # entrywise variance matches nlos_gain^2 within 4 standard errors
    centered = np.abs(batch[:, 0, :] - los) ** 2
    var_se = centered.std(axis=0) / np.sqrt(n_draws)
    assert np.all(np.abs(centered.mean(axis=0) - nlos_std**2) < 4 * var_se)


def test_sample_rejects_empty_users():
    with pytest.raises(ValueError):
        sample_channel(RicianParams(), [], fpa_layout(2, 8.0, 0.5), np.random.default_rng(0))


def test_user_geometry_bounds():
    with pytest.raises(ValueError):
        UserGeometry(distance=-1.0, aoa=0.0)
    with pytest.raises(ValueError):
        UserGeometry(distance=10.0, aoa=2.0)


def test_db_conversion_is_linear_power_ratio():
    params = RicianParams(loss_los_db=-2.14)
    np.testing.assert_allclose(params.loss_los, 10 ** (-2.14 / 10))
