"""Over-the-air model aggregation through a shared multiple-access channel.

All users transmit their model vectors simultaneously; the access point
post-processes the superimposed signal with a receive beam ``m`` and an
amplitude scaling ``eta``:

    w_hat = m^H y / (K * sqrt(eta))

Zero-forcing transmit scalars invert each user's effective channel m^H h_k
exactly, so the aggregate equals the ideal average plus scaled receiver
noise.  The module also provides the per-round error penalty that drives
the convergence bound and the equivalent beam/layout objective obtained by
substituting the optimal transmit scalars and the largest feasible scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, complex_normal

__all__ = [
    "AirCompConfig",
    "Beamformer",
    "DegenerateChannelError",
    "TransmitCoeffs",
    "DEGENERACY_RTOL",
    "effective_gains",
    "minimax_gap_objective",
    "ota_aggregate",
    "ota_aggregate_complex",
    "power_check",
    "round_error_penalty",
    "scaling_cap",
    "worst_inverse_gain",
    "zero_forcing_coeffs",
]

# Effective channels with |m^H h_k| below this fraction of ||m||*||h_k|| are
# treated as un-invertible; callers fall back to the degenerate-reward path.
DEGENERACY_RTOL = 1e-6


class DegenerateChannelError(RuntimeError):
    """A user's effective channel m^H h_k is too close to zero to invert."""


@dataclass(frozen=True)
class AirCompConfig:
    """Transmit power limit, receiver noise variance, and amplitude scaling."""

    max_power: float
    noise_var: float
    scaling: float

    def __post_init__(self) -> None:
        if self.max_power <= 0:
            raise ValueError("max_power must be positive")
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")
        if self.scaling <= 0:
            raise ValueError("scaling must be positive")


@dataclass(frozen=True)
class Beamformer:
    """Receive combining weights at the access point."""

    weights: np.ndarray  # (N,) complex

    def __post_init__(self) -> None:
        w = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        object.__setattr__(self, "weights", w)
        if not np.all(np.isfinite(w.view(float))):
            raise ValueError("beamformer weights must be finite")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    def is_degenerate(self, tol: float = DEGENERACY_RTOL) -> bool:
        return self.norm < tol


@dataclass(frozen=True)
class TransmitCoeffs:
    """Per-user complex transmit scalars."""

    per_user: np.ndarray  # (K,) complex

    def __post_init__(self) -> None:
        p = np.atleast_1d(np.asarray(self.per_user, dtype=complex))
        object.__setattr__(self, "per_user", p)
        if not np.all(np.isfinite(p.view(float))):
            raise ValueError("transmit coefficients must be finite")


def effective_gains(m: Beamformer, channels: ChannelSet) -> np.ndarray:
    """Per-user effective channel after receive combining: m^H h_k, shape (K,)."""
    return channels.matrix @ np.conj(m.weights)


def _check_degeneracy(m: Beamformer, channels: ChannelSet) -> np.ndarray:
    gains = effective_gains(m, channels)
    floor = DEGENERACY_RTOL * m.norm * np.linalg.norm(channels.matrix, axis=1)
    if m.is_degenerate() or np.any(np.abs(gains) <= floor):
        raise DegenerateChannelError("effective channel too weak to invert")
    return gains


def zero_forcing_coeffs(m: Beamformer, channels: ChannelSet, scaling: float) -> TransmitCoeffs:
    """Transmit scalars that invert each effective channel exactly.

    p_k = sqrt(scaling) * (m^H h_k)^* / |m^H h_k|^2, which makes
    (1/sqrt(scaling)) * m^H p_k h_k = 1 for every user.
    """
    if scaling <= 0:
        raise ValueError("scaling must be positive")
    gains = _check_degeneracy(m, channels)
    coeffs = np.sqrt(scaling) * np.conj(gains) / np.abs(gains) ** 2
    return TransmitCoeffs(per_user=coeffs)


def scaling_cap(
    m: Beamformer,
    channels: ChannelSet,
    model_sq_norms: np.ndarray,
    max_power: float,
    model_dim: int,
) -> float:
    """Largest amplitude scaling that keeps every zero-forcing user within power.

    Returns min_k  model_dim * max_power * |m^H h_k|^2 / E[||w_k||^2]; with this
    value the per-user power constraint binds for the minimizing user.
    """
    norms = np.asarray(model_sq_norms, dtype=float)
    if np.any(norms <= 0):
        raise ValueError("model_sq_norms entries must be positive")
    gains = _check_degeneracy(m, channels)
    return float(np.min(model_dim * max_power * np.abs(gains) ** 2 / norms))


def power_check(
    coeff: complex, model_sq_norm: float, model_dim: int, max_power: float
) -> bool:
    """True when (1/d) |p_k|^2 E[||w_k||^2] <= max_power, with 1e-9 slack."""
    if model_dim < 1:
        raise ValueError("model_dim must be >= 1")
    used = abs(coeff) ** 2 * model_sq_norm / model_dim
    return bool(used <= max_power + 1e-9 * max(1.0, max_power))


def ota_aggregate_complex(
    m: Beamformer,
    channels: ChannelSet,
    coeffs: TransmitCoeffs,
    local_models: np.ndarray,
    config: AirCompConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Post-processed aggregate before projection onto the reals, shape (d,).

    Computes (1/K) sum_k (1/sqrt(eta)) m^H p_k h_k w_k + m^H Z / (K sqrt(eta))
    with Z an (N, d) matrix of i.i.d. CN(0, noise_var) entries.
    """
    models = np.asarray(local_models, dtype=float)
    if models.ndim != 2:
        raise ValueError("local_models must be (K, d)")
    k_users, dim = models.shape
    if k_users != channels.n_users or coeffs.per_user.size != k_users:
        raise ValueError("user count mismatch between models, channels, coeffs")
    root_eta = np.sqrt(config.scaling)
    gains = effective_gains(m, channels)  # m^H h_k
    align = gains * coeffs.per_user / root_eta  # (1/sqrt(eta)) m^H p_k h_k
    signal = align @ models / k_users
    if config.noise_var > 0:
        z = complex_normal(rng, (channels.n_antennas, dim), var=config.noise_var)
        noise = np.conj(m.weights) @ z / (k_users * root_eta)
    else:
        noise = 0.0
    return signal + noise


def ota_aggregate(
    m: Beamformer,
    channels: ChannelSet,
    coeffs: TransmitCoeffs,
    local_models: np.ndarray,
    config: AirCompConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Aggregated model estimate: real part of the post-processed receive."""
    return ota_aggregate_complex(m, channels, coeffs, local_models, config, rng).real


def round_error_penalty(
    m: Beamformer,
    channels: ChannelSet,
    coeffs: TransmitCoeffs,
    scaling: float,
    smoothness: float,
    norm_cap: float,
    model_dim: int,
    noise_var: float,
) -> float:
    """Per-round contribution to the optimality-gap recursion.

    (smoothness * norm_cap / (2 K^2)) * sum_k |(1/sqrt(eta)) m^H p_k h_k - 1|^2
    + (smoothness * d * noise_var / (2 K^2 eta)) * ||m||^2.
    Nonnegative; zero exactly when channels are zero-forced and noise-free.
    """
    if scaling <= 0:
        raise ValueError("scaling must be positive")
    if smoothness <= 0:
        raise ValueError("smoothness must be positive")
    k_users = channels.n_users
    align = effective_gains(m, channels) * coeffs.per_user / np.sqrt(scaling)
    misalign = float(np.sum(np.abs(align - 1.0) ** 2))
    first = smoothness * norm_cap / (2.0 * k_users**2) * misalign
    second = (
        smoothness * model_dim * noise_var / (2.0 * k_users**2 * scaling) * m.norm**2
    )
    return first + second


def worst_inverse_gain(m: Beamformer, channels: ChannelSet) -> float:
    """max_k ||m||^2 / |m^H h_k|^2 - invariant under rescaling of m."""
    gains = _check_degeneracy(m, channels)
    return float(np.max(m.norm**2 / np.abs(gains) ** 2))


def minimax_gap_objective(
    m: Beamformer,
    channels: ChannelSet,
    smoothness: float,
    norm_cap: float,
    noise_var: float,
    max_power: float,
) -> float:
    """Beam/layout objective after substituting zero-forcing and the scaling cap.

    (smoothness * noise_var * norm_cap / (2 K^2 max_power))
        * max_k ||m||^2 / |m^H h_k|^2.
    Equals round_error_penalty evaluated at the zero-forcing coefficients with
    the largest feasible scaling for uniform model norms ``norm_cap``.
    """
    k_users = channels.n_users
    const = smoothness * noise_var * norm_cap / (2.0 * k_users**2 * max_power)
    return const * worst_inverse_gain(m, channels)
