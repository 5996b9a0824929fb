"""One communication round viewed as a decision-process step.

State is the users' geometry (distances and angles of arrival); the action
is a raw vector in [-1, 1] that decodes into a receive beam and a feasible
antenna layout; the reward is the negative worst-user inverse beamforming
gain, which is proportional to the per-round optimality-gap penalty under
zero-forcing, so maximizing reward minimizes that penalty.

Action decoding is constraint-safe by construction: beam entries pair into
complex weights (normalized unless essentially zero), and position entries
map to positive inter-antenna gaps that are rescaled to end exactly at the
aperture edge, so ordering, bounds, and minimum spacing always hold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .aircomp import Beamformer
from .channel import (
    ArrayGeometry,
    ChannelSet,
    InfeasibleLayoutError,
    RicianParams,
    UserGeometry,
    sample_channel,
)

__all__ = [
    "CommEnv",
    "EnvState",
    "MobilityModel",
    "RawAction",
    "RewardConfig",
    "decode_action",
    "normalize_state",
    "reward_from_channels",
    "step",
]

# Floor added to the decoded gap weights; keeps every gap strictly above the
# minimum spacing even when all raw entries sit at -1.
GAP_FLOOR = 1e-3


@dataclass(frozen=True)
class EnvState:
    """Per-user distances (meters) and angles of arrival (radians)."""

    distances: np.ndarray  # (K,)
    aoas: np.ndarray  # (K,)

    def __post_init__(self) -> None:
        d = np.atleast_1d(np.asarray(self.distances, dtype=float))
        a = np.atleast_1d(np.asarray(self.aoas, dtype=float))
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "aoas", a)
        if d.shape != a.shape:
            raise ValueError("distances and aoas must have equal length")

    @property
    def n_users(self) -> int:
        return self.distances.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.distances, self.aoas])

    def users(self) -> list[UserGeometry]:
        return [
            UserGeometry(distance=float(d), aoa=float(a))
            for d, a in zip(self.distances, self.aoas)
        ]


@dataclass(frozen=True)
class RawAction:
    """Actor output: interleaved real/imag beam entries plus gap weights."""

    beam_raw: np.ndarray  # (2N,)
    pos_raw: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        b = np.atleast_1d(np.asarray(self.beam_raw, dtype=float))
        p = np.atleast_1d(np.asarray(self.pos_raw, dtype=float))
        object.__setattr__(self, "beam_raw", b)
        object.__setattr__(self, "pos_raw", p)
        if b.size != 2 * p.size:
            raise ValueError("beam_raw must hold two entries per antenna")
        if np.any(np.abs(b) > 1.0 + 1e-12) or np.any(np.abs(p) > 1.0 + 1e-12):
            raise ValueError("raw action entries must lie in [-1, 1]")

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_antennas: int) -> "RawAction":
        vec = np.asarray(vec, dtype=float)
        if vec.size != 3 * n_antennas:
            raise ValueError("action vector must have length 3N")
        return cls(beam_raw=vec[: 2 * n_antennas], pos_raw=vec[2 * n_antennas :])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.beam_raw, self.pos_raw])


@dataclass(frozen=True)
class RewardConfig:
    """Negative reward constants and the beam-degeneracy tolerance.

    ``degenerate_reward`` applies when the beam is essentially zero;
    otherwise the reward is ``ratio_weight`` times the worst-user inverse
    gain.  Both constants must be negative.
    """

    degenerate_reward: float = -100.0
    ratio_weight: float = -1e-5
    degeneracy_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.degenerate_reward >= 0 or self.ratio_weight >= 0:
            raise ValueError("reward constants must be negative")
        if self.degeneracy_tol <= 0:
            raise ValueError("degeneracy_tol must be positive")


@dataclass(frozen=True)
class MobilityModel:
    """User placement ranges and the round-to-round transition rule.

    kind 'iid' redraws every user uniformly each round; 'walk' applies
    clipped Gaussian increments, which makes consecutive states correlated.
    """

    d_min: float = 20.0
    d_max: float = 100.0
    aoa_min: float = -np.pi / 2
    aoa_max: float = np.pi / 2
    kind: str = "iid"
    walk_distance_step: float = 4.0
    walk_aoa_step: float = 0.15

    def __post_init__(self) -> None:
        if self.kind not in ("iid", "walk"):
            raise ValueError("mobility kind must be 'iid' or 'walk'")
        if not self.d_min < self.d_max:
            raise ValueError("need d_min < d_max")

    def initial(self, n_users: int, rng: np.random.Generator) -> EnvState:
        return EnvState(
            distances=rng.uniform(self.d_min, self.d_max, n_users),
            aoas=rng.uniform(self.aoa_min, self.aoa_max, n_users),
        )

    def advance(self, state: EnvState, rng: np.random.Generator) -> EnvState:
        if self.kind == "iid":
            return self.initial(state.n_users, rng)
        d = state.distances + self.walk_distance_step * rng.standard_normal(state.n_users)
        a = state.aoas + self.walk_aoa_step * rng.standard_normal(state.n_users)
        return EnvState(
            distances=np.clip(d, self.d_min, self.d_max),
            aoas=np.clip(a, self.aoa_min, self.aoa_max),
        )


def reset(mobility: MobilityModel, n_users: int, rng: np.random.Generator) -> EnvState:
    """Draw a fresh state: distances and angles i.i.d. uniform per user."""
    return mobility.initial(n_users, rng)


def normalize_state(state: EnvState, mobility: MobilityModel) -> np.ndarray:
    """Map state features into [-1, 1] for network consumption.

    The angle enters as cos(aoa): steering phases depend on the angle only
    through its cosine, so this is the sufficient statistic and spares the
    networks from synthesizing an even trigonometric map.
    """
    d_span = mobility.d_max - mobility.d_min
    d = 2.0 * (state.distances - mobility.d_min) / d_span - 1.0
    a = 2.0 * np.cos(state.aoas) - 1.0
    return np.concatenate([d, a])


def decode_action(
    raw: RawAction, aperture: float, min_spacing: float
) -> tuple[Beamformer, ArrayGeometry]:
    """Map a raw action onto a receive beam and a feasible antenna layout.

    Beam: complex pairs, normalized to unit norm unless essentially zero (the
    zero beam passes through so the degenerate-reward branch can see it).

    Positions: the aperture is split into one cell per antenna and entry n
    slides antenna n inside its own cell, with enough margin that adjacent
    gaps stay strictly above the minimum spacing.  The mapping is local (one
    raw entry moves one antenna), which keeps the action's effect on the
    steering phases well-conditioned; the uniform reference layout lies in
    its image.  When the cells would be narrower than the minimum spacing
    (tightly packed arrays), positions fall back to a cumulative-gap
    construction: x_n = min_spacing*(n-1) + scale*cumsum(g) with positive
    weights g = (1 + pos_raw)/2 + GAP_FLOOR, scaled to end on the aperture
    edge.  Both branches satisfy the box and spacing constraints for every
    input in [-1, 1]^N.
    """
    n = raw.pos_raw.size
    if (n - 1) * min_spacing >= aperture:
        raise InfeasibleLayoutError(
            f"{n} antennas at spacing >{min_spacing} do not fit in aperture {aperture}"
        )
    weights = raw.beam_raw[0::2] + 1j * raw.beam_raw[1::2]
    norm = np.linalg.norm(weights)
    if norm >= 1e-12:
        weights = weights / norm
    cell = aperture / n
    if cell > min_spacing * (1.0 + 1e-9):
        sliver = 0.01 * cell
        radius = max(0.0, (cell - min_spacing) / 2.0 - sliver)
        positions = (np.arange(n) + 0.5) * cell + raw.pos_raw * radius
    else:
        gaps = (1.0 + raw.pos_raw) / 2.0 + GAP_FLOOR
        scale = (aperture - (n - 1) * min_spacing) / np.sum(gaps)
        positions = min_spacing * np.arange(n) + scale * np.cumsum(gaps)
        positions[-1] = aperture
    geometry = ArrayGeometry(
        positions=positions, aperture=aperture, min_spacing=min_spacing
    )
    return Beamformer(weights=weights), geometry


def reward_from_channels(
    m: Beamformer, channels: ChannelSet, cfg: RewardConfig
) -> float:
    """Reward for a beam against realized channels; always negative.

    The degenerate branch applies only to an (essentially) zero beam; a
    nonzero beam that happens to be near-orthogonal to some user simply
    scores a very large ratio.  Denominators are floored at the smallest
    normal float so the value stays finite.
    """
    if m.norm < cfg.degeneracy_tol:
        return cfg.degenerate_reward
    gains_sq = np.abs(channels.matrix @ np.conj(m.weights)) ** 2
    ratio = float(np.max(m.norm**2 / np.maximum(gains_sq, np.finfo(float).tiny)))
    return cfg.ratio_weight * ratio


def step(
    state: EnvState,
    raw: RawAction,
    channel_params: RicianParams,
    reward_cfg: RewardConfig,
    mobility: MobilityModel,
    rng: np.random.Generator,
    aperture: float,
    min_spacing: float,
    fixed_geometry: ArrayGeometry | None = None,
) -> tuple[EnvState, float, ChannelSet]:
    """Decode the action, realize channels for the current state, and score it.

    ``fixed_geometry`` overrides the decoded layout (fixed-position antenna
    mode); the beam part of the action still applies.  Returns the next
    state from the mobility model and the realized channels for logging.
    """
    m, geometry = decode_action(raw, aperture, min_spacing)
    if fixed_geometry is not None:
        geometry = fixed_geometry
    channels = sample_channel(channel_params, state.users(), geometry, rng)
    reward = reward_from_channels(m, channels, reward_cfg)
    return mobility.advance(state, rng), reward, channels


class CommEnv:
    """Stateful wrapper bundling the per-round configuration for trainers.

    One instance is driven sequentially by one agent; independent instances
    (with independent generators) may run in parallel.
    """

    def __init__(
        self,
        n_users: int,
        n_antennas: int,
        aperture: float,
        min_spacing: float,
        channel_params: RicianParams,
        reward_cfg: RewardConfig,
        mobility: MobilityModel,
        rng: np.random.Generator,
        fixed_geometry: ArrayGeometry | None = None,
    ):
        if (n_antennas - 1) * min_spacing >= aperture:
            raise InfeasibleLayoutError(
                f"{n_antennas} antennas at spacing >{min_spacing} do not fit in "
                f"aperture {aperture}"
            )
        self.n_users = n_users
        self.n_antennas = n_antennas
        self.aperture = aperture
        self.min_spacing = min_spacing
        self.channel_params = channel_params
        self.reward_cfg = reward_cfg
        self.mobility = mobility
        self.rng = rng
        self.fixed_geometry = fixed_geometry
        self.state: EnvState | None = None

    @property
    def state_dim(self) -> int:
        return 2 * self.n_users

    @property
    def action_dim(self) -> int:
        return 3 * self.n_antennas

    def observe(self) -> np.ndarray:
        return normalize_state(self.state, self.mobility)

    def reset(self) -> EnvState:
        self.state = self.mobility.initial(self.n_users, self.rng)
        return self.state

    def step(self, raw: RawAction) -> tuple[EnvState, float, ChannelSet]:
        nxt, reward, channels = step(
            self.state,
            raw,
            self.channel_params,
            self.reward_cfg,
            self.mobility,
            self.rng,
            self.aperture,
            self.min_spacing,
            self.fixed_geometry,
        )
        self.state = nxt
        return nxt, reward, channels
