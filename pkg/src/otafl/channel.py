"""Position-dependent Rician fading channels for a line array of movable antennas.

The access point carries N antennas that slide along a segment of length
``aperture`` (wavelength units).  Each user's channel is a Rician mix of a
deterministic line-of-sight steering vector, whose per-antenna phase depends
on the antenna position, and an i.i.d. complex-Gaussian scattered component:

    h_k = sqrt(A_L * d_k**-a_L * kf / (kf + 1)) * steer(x, aoa_k)
        + sqrt(A_N * d_k**-a_N / (kf + 1)) * g_k,   g_k ~ CN(0, I)

Far-field geometry is assumed: user distance and angle of arrival do not
change when antennas move within the aperture.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ChannelSet",
    "InfeasibleLayoutError",
    "RicianParams",
    "UserGeometry",
    "complex_normal",
    "fpa_layout",
    "los_steering",
    "mean_channel",
    "sample_channel",
    "sample_channel_batch",
]


class InfeasibleLayoutError(ValueError):
    """Requested antenna layout cannot satisfy aperture/spacing constraints."""


@dataclass(frozen=True)
class ArrayGeometry:
    """Ordered antenna positions on the segment [0, aperture], wavelength units.

    Invariants: positions strictly ascending, every position inside the
    aperture, adjacent gaps strictly larger than ``min_spacing``, and the
    aperture long enough to hold all antennas at minimum spacing.
    """

    positions: np.ndarray
    aperture: float
    min_spacing: float

    def __post_init__(self) -> None:
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        n = pos.size
        if n == 0:
            raise ValueError("at least one antenna position required")
        if not np.all(np.isfinite(pos)):
            raise ValueError("antenna positions must be finite")
        if self.aperture <= 0:
            raise ValueError("aperture must be positive")
        if self.min_spacing < 0:
            raise ValueError("min_spacing must be nonnegative")
        if (n - 1) * self.min_spacing >= self.aperture:
            raise InfeasibleLayoutError(
                f"{n} antennas at spacing >{self.min_spacing} do not fit in "
                f"aperture {self.aperture}"
            )
        if pos[0] < 0 or pos[-1] > self.aperture:
            raise ValueError("positions must lie in [0, aperture]")
        gaps = np.diff(pos)
        if n > 1 and not np.all(gaps > 0):
            raise ValueError("positions must be strictly ascending")
        if n > 1 and not np.all(gaps > self.min_spacing):
            raise InfeasibleLayoutError(
                "adjacent antennas closer than the minimum spacing"
            )

    @property
    def n_antennas(self) -> int:
        return self.positions.size


@dataclass(frozen=True)
class RicianParams:
    """Fading-model constants.

    ``loss_los_db`` / ``loss_nlos_db`` are reference-distance path losses in
    dB, converted to linear gain via 10**(dB/10).  ``k_factor`` is the ratio
    of line-of-sight to scattered power.
    """

    k_factor: float = 10.0
    loss_los_db: float = -2.14
    loss_nlos_db: float = -2.14
    exp_los: float = 2.09
    exp_nlos: float = 2.09
    wavelength: float = 1.0

    def __post_init__(self) -> None:
        if self.k_factor < 0:
            raise ValueError("k_factor must be nonnegative")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.exp_los < 0 or self.exp_nlos < 0:
            raise ValueError("path-loss exponents must be nonnegative")

    @property
    def loss_los(self) -> float:
        return 10.0 ** (self.loss_los_db / 10.0)

    @property
    def loss_nlos(self) -> float:
        return 10.0 ** (self.loss_nlos_db / 10.0)

    def los_gain(self, distance: float) -> float:
        """Amplitude of the deterministic component at the given distance."""
        k = self.k_factor
        return float(np.sqrt(self.loss_los * distance**-self.exp_los * k / (k + 1.0)))

    def nlos_gain(self, distance: float) -> float:
        """Amplitude of the scattered component at the given distance."""
        return float(
            np.sqrt(self.loss_nlos * distance**-self.exp_nlos / (self.k_factor + 1.0))
        )


@dataclass(frozen=True)
class UserGeometry:
    """Distance (meters) and line-of-sight angle of arrival (radians)."""

    distance: float
    aoa: float

    def __post_init__(self) -> None:
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if not -np.pi / 2 <= self.aoa <= np.pi / 2:
            raise ValueError("aoa must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class ChannelSet:
    """Per-user channel vectors, one row per user, plus the generating layout."""

    matrix: np.ndarray  # (K, N) complex
    geometry: ArrayGeometry

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        if mat.ndim != 2:
            raise ValueError("channel matrix must be 2-D (users x antennas)")
        if mat.shape[1] != self.geometry.n_antennas:
            raise ValueError("channel matrix width must match antenna count")
        if not np.all(np.isfinite(mat.view(float))):
            raise ValueError("channel entries must be finite")

    @property
    def n_users(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[1]

    @property
    def per_user(self) -> list[np.ndarray]:
        return [self.matrix[k] for k in range(self.n_users)]


def complex_normal(rng: np.random.Generator, shape: tuple[int, ...], var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian draws with total variance ``var``.

    Real and imaginary parts are each N(0, var/2).
    """
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def los_steering(positions: Sequence[float] | np.ndarray, aoa: float, wavelength: float) -> np.ndarray:
    """Line-of-sight steering vector: entry n is exp(j*(2*pi/wl)*x_n*cos(aoa)).

    All entries have unit modulus.
    """
    pos = np.atleast_1d(np.asarray(positions, dtype=float))
    if pos.size == 0:
        raise ValueError("positions must be nonempty")
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    phase = (2.0 * np.pi / wavelength) * pos * np.cos(aoa)
    return np.exp(1j * phase)


def mean_channel(
    params: RicianParams, users: Sequence[UserGeometry], positions: np.ndarray
) -> np.ndarray:
    """Deterministic (line-of-sight) part of each user's channel, shape (K, N)."""
    rows = [
        params.los_gain(u.distance) * los_steering(positions, u.aoa, params.wavelength)
        for u in users
    ]
    return np.stack(rows)


def sample_channel(
    params: RicianParams,
    users: Sequence[UserGeometry],
    geometry: ArrayGeometry,
    rng: np.random.Generator,
    nlos: np.ndarray | None = None,
) -> ChannelSet:
    """Draw one Rician channel realization for every user.

    ``nlos`` optionally supplies the unit-variance scattered draws (K, N) so
    that callers can reuse common random numbers across candidate layouts;
    by default fresh draws are taken from ``rng``.
    """
    if len(users) == 0:
        raise ValueError("users must be nonempty")
    k, n = len(users), geometry.n_antennas
    if nlos is None:
        nlos = complex_normal(rng, (k, n))
    else:
        nlos = np.asarray(nlos, dtype=complex)
        if nlos.shape != (k, n):
            raise ValueError(f"nlos draws must have shape {(k, n)}")
    gains = np.array([params.nlos_gain(u.distance) for u in users])
    matrix = mean_channel(params, users, geometry.positions) + gains[:, None] * nlos
    return ChannelSet(matrix=matrix, geometry=geometry)


def sample_channel_batch(
    params: RicianParams,
    users: Sequence[UserGeometry],
    geometry: ArrayGeometry,
    rng: np.random.Generator,
    n_draws: int,
) -> np.ndarray:
    """Vectorized channel draws, shape (n_draws, K, N); same model as sample_channel."""
    if len(users) == 0:
        raise ValueError("users must be nonempty")
    k, n = len(users), geometry.n_antennas
    nlos = complex_normal(rng, (n_draws, k, n))
    gains = np.array([params.nlos_gain(u.distance) for u in users])
    return mean_channel(params, users, geometry.positions)[None] + gains[None, :, None] * nlos


def fpa_layout(n_antennas: int, aperture: float, min_spacing: float = 0.0) -> ArrayGeometry:
    """Fixed-position reference layout: x_n = aperture * n / (N + 1), n = 1..N.

    Raises InfeasibleLayoutError when the implied uniform gap does not exceed
    ``min_spacing``.
    """
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    if aperture <= 0:
        raise ValueError("aperture must be positive")
    gap = aperture / (n_antennas + 1)
    if n_antennas > 1 and gap <= min_spacing:
        raise InfeasibleLayoutError(
            f"uniform gap {gap:.4g} does not exceed the minimum spacing {min_spacing:.4g}"
        )
    positions = aperture * np.arange(1, n_antennas + 1) / (n_antennas + 1)
    return ArrayGeometry(positions=positions, aperture=aperture, min_spacing=min_spacing)
