"""Actor-critic trainers, replay memory, and a random-search oracle.

The two trainable agents share every update equation and differ only in the
network trunk: the recurrent agent consumes the trailing window of states
through a memory cell, the dense baseline sees only the current state.  The
critic receives the action concatenated onto every step of the state window.

The oracle estimates each candidate's reward by averaging over scattered-
component draws and supports common-random-number evaluation (a shared draw
bank) so that sweeps across antenna counts, user counts, and layout modes
compare candidates on identical noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .aircomp import Beamformer
from .channel import (
    ArrayGeometry,
    RicianParams,
    complex_normal,
    fpa_layout,
    los_steering,
)
from .env import CommEnv, EnvState, RawAction, RewardConfig, decode_action
from .neuralnet import (
    AdamState,
    Network,
    actor_network,
    adam_step,
    critic_network,
    load_container,
    save_container,
    network_from_state,
    network_state,
    soft_update,
)

__all__ = [
    "AgentConfig",
    "Episode",
    "OracleCandidate",
    "OracleResult",
    "ReplayMemory",
    "Trainer",
    "TrainLog",
    "Transition",
    "critic_target",
    "embed_candidate",
    "evaluate_candidates",
    "matched_filter_candidates",
    "nlos_bank",
    "random_candidates",
    "random_search_oracle",
    "run_random_policy",
    "select_action",
    "train",
    "update_actor",
    "update_critic",
]


@dataclass(frozen=True)
class Transition:
    """One replayed step; state vectors are the normalized observations."""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


@dataclass(frozen=True)
class Episode:
    states: np.ndarray  # (T+1, S)
    actions: np.ndarray  # (T, A)
    rewards: np.ndarray  # (T,)

    def __len__(self) -> int:
        return self.rewards.size


@dataclass(frozen=True)
class AgentConfig:
    step_size: float = 5e-4
    capacity: int = 10_000
    batch: int = 64
    tau: float = 1e-3
    discount: float = 0.9
    noise_start: float = 0.3
    noise_end: float = 0.05
    window: int = 8
    hidden: int = 64
    target_noise_scale: float = 0.05
    target_noise_clip: float = 0.1
    updates_per_episode: int = 1
    bootstrap_at_horizon: bool = False
    # global-norm gradient clip (0 disables); rare deep-tail rewards otherwise
    # poison the optimizer moments for hundreds of updates
    grad_clip: float = 10.0
    # fraction of training over which the noise decays before holding at the
    # floor; 1.0 means the floor is reached only on the last episode
    noise_decay_frac: float = 1.0
    # actor (and target) updates happen every this many critic updates
    actor_every: int = 1
    # differentiate the slowly-tracking target critic in the actor update
    # instead of the online critic; damps policy oscillation
    actor_uses_target: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must lie in [0, 1]")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if self.batch > self.capacity:
            raise ValueError("batch must not exceed capacity")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class WindowBatch:
    seq: np.ndarray  # (J, B, S)
    mask: np.ndarray  # (J, B)
    actions: np.ndarray  # (B, A)
    rewards: np.ndarray  # (B,)
    next_seq: np.ndarray  # (J, B, S)
    next_mask: np.ndarray  # (J, B)
    terminal: np.ndarray  # (B,) bool


class ReplayMemory:
    """Episode store with FIFO eviction counted in transitions.

    Whole episodes are evicted from the front once the total number of
    stored transitions exceeds the capacity; sampling is uniform over
    transitions.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.episodes: list[Episode] = []
        self.evicted = 0  # lifetime count, serves as the ring cursor

    def __len__(self) -> int:
        return sum(len(ep) for ep in self.episodes)

    def add_episode(self, episode: Episode) -> None:
        if np.any(np.abs(episode.actions) > 1.0 + 1e-12):
            raise ValueError("stored actions must lie in [-1, 1]")
        self.episodes.append(episode)
        while len(self) > self.capacity and len(self.episodes) > 1:
            self.episodes.pop(0)
            self.evicted += 1

    def sample_indices(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Uniform (episode, step) pairs over all stored transitions."""
        lengths = np.array([len(ep) for ep in self.episodes])
        ends = np.cumsum(lengths)
        flat = rng.integers(0, ends[-1], size=n)
        ep_idx = np.searchsorted(ends, flat, side="right")
        step_idx = flat - (ends[ep_idx] - lengths[ep_idx])
        return ep_idx, step_idx

    def sample_windows(self, n: int, window: int, rng: np.random.Generator) -> WindowBatch:
        """Fixed-length trailing windows ending at sampled transitions.

        Windows reaching past an episode start are left-padded with zeros and
        masked out.
        """
        ep_idx, step_idx = self.sample_indices(n, rng)
        state_dim = self.episodes[0].states.shape[1]
        action_dim = self.episodes[0].actions.shape[1]
        seq = np.zeros((window, n, state_dim))
        nxt = np.zeros((window, n, state_dim))
        mask = np.zeros((window, n))
        nxt_mask = np.zeros((window, n))
        actions = np.empty((n, action_dim))
        rewards = np.empty(n)
        terminal = np.empty(n, dtype=bool)
        for b, (e, t) in enumerate(zip(ep_idx, step_idx)):
            ep = self.episodes[e]
            valid = min(window, t + 1)
            seq[window - valid :, b] = ep.states[t + 1 - valid : t + 1]
            mask[window - valid :, b] = 1.0
            nvalid = min(window, t + 2)
            nxt[window - nvalid :, b] = ep.states[t + 2 - nvalid : t + 2]
            nxt_mask[window - nvalid :, b] = 1.0
            actions[b] = ep.actions[t]
            rewards[b] = ep.rewards[t]
            terminal[b] = t == len(ep) - 1
        return WindowBatch(seq, mask, actions, rewards, nxt, nxt_mask, terminal)


def _with_action(seq: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Concatenate one action per batch item onto every step of the window."""
    tiled = np.broadcast_to(actions, (seq.shape[0],) + actions.shape)
    return np.concatenate([seq, tiled], axis=2)


def select_action(
    actor: Network,
    state_history: Sequence[np.ndarray],
    window: int,
    noise_scale: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Actor output on the trailing state window plus exploration noise, clipped."""
    if len(state_history) == 0:
        raise ValueError("state history must be nonempty")
    trail = list(state_history)[-window:]
    seq = np.stack(trail)[:, None, :]
    action, _ = actor.forward(seq)
    action = action[0]
    if noise_scale > 0:
        action = action + noise_scale * rng.standard_normal(action.shape)
    return np.clip(action, -1.0, 1.0)


def critic_target(
    rewards: np.ndarray,
    next_seq: np.ndarray,
    next_mask: np.ndarray,
    target_actor: Network,
    target_critic: Network,
    discount: float,
    terminal: np.ndarray | None = None,
    noise_scale: float = 0.0,
    noise_clip: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Bootstrapped regression target: r + discount * Q'(s', pi'(s') + noise).

    Bootstrapping is suppressed where ``terminal`` is set.
    """
    next_action, _ = target_actor.forward(next_seq, next_mask)
    if noise_scale > 0:
        if rng is None:
            raise ValueError("rng required when target smoothing noise is on")
        jitter = np.clip(
            noise_scale * rng.standard_normal(next_action.shape),
            -noise_clip,
            noise_clip,
        )
        next_action = np.clip(next_action + jitter, -1.0, 1.0)
    q_next, _ = target_critic.forward(_with_action(next_seq, next_action), next_mask)
    boot = discount * q_next[:, 0]
    if terminal is not None:
        boot = np.where(terminal, 0.0, boot)
    return np.asarray(rewards, dtype=float) + boot


def clip_gradients(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Scale the gradient list so its global norm is at most ``max_norm``."""
    if max_norm <= 0:
        return grads
    total = np.sqrt(sum(float(np.sum(g**2)) for g in grads))
    if total <= max_norm:
        return grads
    factor = max_norm / total
    return [g * factor for g in grads]


def update_critic(
    critic: Network,
    adam: AdamState,
    seq: np.ndarray,
    mask: np.ndarray | None,
    actions: np.ndarray,
    targets: np.ndarray,
    grad_clip: float = 0.0,
) -> float:
    """One Adam step on mean squared error to the targets; returns pre-step loss."""
    q, trace = critic.forward(_with_action(seq, actions), mask)
    err = q[:, 0] - targets
    loss = float(np.mean(err**2))
    dout = (2.0 / err.size) * err[:, None]
    grads, _ = critic.backward(trace, dout)
    flat = clip_gradients(critic.grads_flat(grads), grad_clip)
    adam_step(critic.params_flat(), flat, adam)
    return loss


def update_actor(
    actor: Network,
    adam: AdamState,
    critic,
    seq: np.ndarray,
    mask: np.ndarray | None,
    grad_clip: float = 0.0,
) -> float:
    """One Adam ascent step on mean Q(s, pi(s)); returns the pre-step estimate.

    The action gradient is read off the critic's input-sequence gradient
    (summed over the window steps the action was tiled onto) and chained
    through the actor.
    """
    actions, actor_trace = actor.forward(seq, mask)
    q, critic_trace = critic.forward(_with_action(seq, actions), mask)
    objective = float(np.mean(q[:, 0]))
    dout = np.full((q.shape[0], 1), -1.0 / q.shape[0])  # minimize -mean Q
    _, dseq = critic.backward(critic_trace, dout)
    d_action = dseq[:, :, seq.shape[2] :].sum(axis=0)
    grads, _ = actor.backward(actor_trace, d_action)
    flat = clip_gradients(actor.grads_flat(grads), grad_clip)
    adam_step(actor.params_flat(), flat, adam)
    return objective


@dataclass
class TrainLog:
    mean_rewards: list[float] = field(default_factory=list)
    actor_losses: list[float] = field(default_factory=list)
    critic_losses: list[float] = field(default_factory=list)

    def ravg(self, window: int = 100) -> np.ndarray:
        """Trailing mean over up to ``window`` episodes, partial at the start."""
        rewards = np.asarray(self.mean_rewards)
        out = np.empty_like(rewards)
        for i in range(rewards.size):
            out[i] = rewards[max(0, i + 1 - window) : i + 1].mean()
        return out


class Trainer:
    """Owns the four networks, optimizers, replay memory, and one environment."""

    def __init__(self, env: CommEnv, kind: str, config: AgentConfig, rng: np.random.Generator):
        if kind not in ("rdpg", "ddpg"):
            raise ValueError("kind must be 'rdpg' or 'ddpg'")
        self.env = env
        self.kind = kind
        self.config = config
        recurrent = kind == "rdpg"
        init_rng, self.noise_rng, self.sample_rng = rng.spawn(3)
        s_dim, a_dim = env.state_dim, env.action_dim
        self.actor = actor_network(s_dim, a_dim, recurrent, config.hidden, init_rng)
        self.critic = critic_network(s_dim + a_dim, recurrent, config.hidden, init_rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_adam = AdamState.for_network(self.actor, config.step_size)
        self.critic_adam = AdamState.for_network(self.critic, config.step_size)
        self.replay = ReplayMemory(config.capacity)
        self.episodes_seen = 0
        self.updates_done = 0

    def _noise_scale(self, episode: int, total: int) -> float:
        cfg = self.config
        span = max(1.0, (total - 1) * cfg.noise_decay_frac)
        frac = min(1.0, episode / span)
        return cfg.noise_start + frac * (cfg.noise_end - cfg.noise_start)

    def _update_once(self) -> tuple[float, float]:
        cfg = self.config
        batch = self.replay.sample_windows(cfg.batch, cfg.window, self.sample_rng)
        targets = critic_target(
            batch.rewards,
            batch.next_seq,
            batch.next_mask,
            self.target_actor,
            self.target_critic,
            cfg.discount,
            terminal=None if cfg.bootstrap_at_horizon else batch.terminal,
            noise_scale=cfg.target_noise_scale,
            noise_clip=cfg.target_noise_clip,
            rng=self.sample_rng,
        )
        critic_loss = update_critic(
            self.critic, self.critic_adam, batch.seq, batch.mask, batch.actions,
            targets, grad_clip=cfg.grad_clip,
        )
        self.updates_done += 1
        actor_obj = 0.0
        if self.updates_done % max(1, cfg.actor_every) == 0:
            value_net = self.target_critic if cfg.actor_uses_target else self.critic
            actor_obj = update_actor(
                self.actor, self.actor_adam, value_net, batch.seq, batch.mask,
                grad_clip=cfg.grad_clip,
            )
            soft_update(self.target_actor, self.actor, cfg.tau)
        soft_update(self.target_critic, self.critic, cfg.tau)
        return critic_loss, -actor_obj

    def run(self, episodes: int, horizon: int) -> TrainLog:
        cfg = self.config
        log = TrainLog()
        for episode in range(episodes):
            self.env.reset()
            history = [self.env.observe()]
            scale = self._noise_scale(self.episodes_seen, episodes)
            states = [history[0]]
            actions, rewards = [], []
            for _ in range(horizon):
                action = select_action(
                    self.actor, history, cfg.window, scale, self.noise_rng
                )
                _, reward, _ = self.env.step(
                    RawAction.from_vector(action, self.env.n_antennas)
                )
                obs = self.env.observe()
                history.append(obs)
                states.append(obs)
                actions.append(action)
                rewards.append(reward)
            self.replay.add_episode(
                Episode(np.stack(states), np.stack(actions), np.asarray(rewards))
            )
            if len(self.replay) >= cfg.batch:
                closses, alosses = [], []
                for _ in range(cfg.updates_per_episode):
                    cl, al = self._update_once()
                    closses.append(cl)
                    alosses.append(al)
                log.critic_losses.append(float(np.mean(closses)))
                log.actor_losses.append(float(np.mean(alosses)))
            else:
                log.critic_losses.append(float("nan"))
                log.actor_losses.append(float("nan"))
            log.mean_rewards.append(float(np.mean(rewards)))
            self.episodes_seen += 1
        return log

    def save(self, path) -> None:
        arrays: dict[str, np.ndarray] = {}
        nets = {
            "actor": self.actor,
            "critic": self.critic,
            "target_actor": self.target_actor,
            "target_critic": self.target_critic,
        }
        for name, net in nets.items():
            arrays.update(network_state(net, prefix=name))
        for name, adam in (("actor_adam", self.actor_adam), ("critic_adam", self.critic_adam)):
            for i, (m, v) in enumerate(zip(adam.m, adam.v)):
                arrays[f"{name}.m.{i}"] = m
                arrays[f"{name}.v.{i}"] = v
        manifest = {
            "kind": self.kind,
            "layers": {n: [l.manifest() for l in net.layers] for n, net in nets.items()},
            "adam": {
                "actor_adam": {"count": self.actor_adam.count, "n": len(self.actor_adam.m)},
                "critic_adam": {"count": self.critic_adam.count, "n": len(self.critic_adam.m)},
            },
            "replay_cursor": self.replay.evicted,
            "episodes_seen": self.episodes_seen,
        }
        save_container(path, arrays, manifest)

    def load(self, path) -> None:
        arrays, manifest = load_container(path)
        if manifest["kind"] != self.kind:
            raise ValueError("checkpoint agent kind does not match")
        self.actor = network_from_state(manifest["layers"]["actor"], arrays, "actor")
        self.critic = network_from_state(manifest["layers"]["critic"], arrays, "critic")
        self.target_actor = network_from_state(
            manifest["layers"]["target_actor"], arrays, "target_actor"
        )
        self.target_critic = network_from_state(
            manifest["layers"]["target_critic"], arrays, "target_critic"
        )
        for name, adam, net in (
            ("actor_adam", self.actor_adam, self.actor),
            ("critic_adam", self.critic_adam, self.critic),
        ):
            meta = manifest["adam"][name]
            adam.count = meta["count"]
            adam.m = [arrays[f"{name}.m.{i}"] for i in range(meta["n"])]
            adam.v = [arrays[f"{name}.v.{i}"] for i in range(meta["n"])]
        self.replay.evicted = manifest["replay_cursor"]
        self.episodes_seen = manifest["episodes_seen"]


def train(
    env: CommEnv,
    kind: str,
    config: AgentConfig,
    episodes: int,
    horizon: int,
    rng: np.random.Generator,
) -> tuple[TrainLog, Trainer]:
    """Full training loop; seed-reproducible given fresh env and rng."""
    trainer = Trainer(env, kind, config, rng)
    log = trainer.run(episodes, horizon)
    return log, trainer


def run_random_policy(
    env: CommEnv, episodes: int, horizon: int, rng: np.random.Generator
) -> TrainLog:
    """Uniform-random actions; the untrained baseline for learning checks."""
    log = TrainLog()
    for _ in range(episodes):
        env.reset()
        rewards = []
        for _ in range(horizon):
            vec = rng.uniform(-1.0, 1.0, env.action_dim)
            _, reward, _ = env.step(RawAction.from_vector(vec, env.n_antennas))
            rewards.append(reward)
        log.mean_rewards.append(float(np.mean(rewards)))
        log.actor_losses.append(float("nan"))
        log.critic_losses.append(float("nan"))
    return log


# ---------------------------------------------------------------------------
# Random-search oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleCandidate:
    """A beam plus slot-ordered positions (not necessarily ascending).

    Slot order is kept stable so zero-padded extensions of a candidate reuse
    the same draw-bank columns for the original antennas; ``geometry``
    re-sorts positions (with the beam permuted identically) for consumers
    that need a valid layout.
    """

    weights: np.ndarray  # (N,) complex
    positions: np.ndarray  # (N,)
    raw: Optional[RawAction] = None

    def geometry(self, aperture: float, min_spacing: float) -> tuple[Beamformer, ArrayGeometry]:
        order = np.argsort(self.positions)
        return (
            Beamformer(weights=self.weights[order]),
            ArrayGeometry(
                positions=self.positions[order],
                aperture=aperture,
                min_spacing=min_spacing,
            ),
        )


@dataclass(frozen=True)
class OracleResult:
    best: OracleCandidate
    best_reward: float
    rewards: np.ndarray
    candidates: list


def nlos_bank(
    rng: np.random.Generator, n_draws: int, n_users: int, n_antennas: int
) -> np.ndarray:
    """Unit-variance scattered draws shared across candidate evaluations."""
    return complex_normal(rng, (n_draws, n_users, n_antennas))


def random_candidates(
    budget: int,
    n_antennas: int,
    aperture: float,
    min_spacing: float,
    rng: np.random.Generator,
    fixed_geometry: ArrayGeometry | None = None,
    raws: np.ndarray | None = None,
) -> list[OracleCandidate]:
    """Decode ``budget`` uniform raw actions; positions fixed when requested.

    ``raws`` optionally supplies the raw draws so paired comparisons can
    evaluate identical beams under different layout modes.
    """
    if raws is None:
        raws = rng.uniform(-1.0, 1.0, (budget, 3 * n_antennas))
    else:
        raws = np.asarray(raws, dtype=float)[:budget]
    out = []
    for row in raws:
        raw = RawAction.from_vector(row, n_antennas)
        beam, geometry = decode_action(raw, aperture, min_spacing)
        positions = (
            fixed_geometry.positions if fixed_geometry is not None else geometry.positions
        )
        out.append(OracleCandidate(weights=beam.weights, positions=positions, raw=raw))
    return out


def matched_filter_candidates(
    state: EnvState, params: RicianParams, geometry: ArrayGeometry, n_users: int | None = None
) -> list[OracleCandidate]:
    """Per-user beams aligned with the line-of-sight steering vector."""
    n_users = state.n_users if n_users is None else n_users
    out = []
    for k in range(n_users):
        steer = los_steering(geometry.positions, float(state.aoas[k]), params.wavelength)
        out.append(
            OracleCandidate(
                weights=steer / np.sqrt(steer.size), positions=geometry.positions
            )
        )
    return out


def embed_candidate(
    cand: OracleCandidate, n_total: int, aperture: float, min_spacing: float
) -> OracleCandidate:
    """Extend a candidate with zero-weight antennas at feasible free positions.

    The original antennas keep their slots (and therefore their draw-bank
    columns), so the extended candidate's reward is bit-identical under a
    shared bank.
    """
    n_extra = n_total - cand.positions.size
    if n_extra < 0:
        raise ValueError("n_total smaller than the candidate's antenna count")
    if n_extra == 0:
        return cand
    slots = np.arange(0.0, aperture + 1e-9, 1.1 * min_spacing if min_spacing > 0 else aperture / (2 * n_total))
    extras = []
    occupied = list(cand.positions)
    for slot in slots:
        if len(extras) == n_extra:
            break
        if all(abs(slot - p) > min_spacing for p in occupied):
            extras.append(slot)
            occupied.append(slot)
    if len(extras) < n_extra:
        raise ValueError("no feasible free positions for the extra antennas")
    positions = np.concatenate([cand.positions, extras])
    # validates feasibility of the combined layout
    ArrayGeometry(positions=np.sort(positions), aperture=aperture, min_spacing=min_spacing)
    weights = np.concatenate([cand.weights, np.zeros(n_extra, dtype=complex)])
    return OracleCandidate(weights=weights, positions=positions, raw=None)


def evaluate_candidates(
    candidates: Sequence[OracleCandidate],
    state: EnvState,
    params: RicianParams,
    reward_cfg: RewardConfig,
    bank: np.ndarray,
    n_users: int | None = None,
) -> np.ndarray:
    """Mean reward of each candidate over the draw bank, shape (C,).

    Vectorized across candidates, draws, and users; draws where any user's
    effective channel is essentially zero score the degenerate reward.
    """
    n_users = state.n_users if n_users is None else n_users
    n_ant = candidates[0].positions.size
    if bank.shape[1] < n_users or bank.shape[2] < n_ant:
        raise ValueError("draw bank too small for this evaluation")
    weights = np.stack([c.weights for c in candidates])  # (C, N)
    positions = np.stack([c.positions for c in candidates])  # (C, N)
    dists = state.distances[:n_users]
    aoas = state.aoas[:n_users]
    los_g = np.array([params.los_gain(d) for d in dists])
    nlos_g = np.array([params.nlos_gain(d) for d in dists])
    alpha = 2.0 * np.pi / params.wavelength * np.cos(aoas)  # (K,)
    steer = np.exp(1j * positions[:, None, :] * alpha[None, :, None])  # (C, K, N)
    h = (
        los_g[None, None, :, None] * steer[:, None, :, :]
        + nlos_g[None, None, :, None] * bank[None, :, :n_users, :n_ant]
    )  # (C, D, K, N)
    inner = np.einsum("cn,cdkn->cdk", np.conj(weights), h)
    m_norms = np.linalg.norm(weights, axis=1)  # (C,)
    gains_sq = np.maximum(np.abs(inner) ** 2, np.finfo(float).tiny)
    ratio = (m_norms[:, None, None] ** 2) / gains_sq
    per_draw = reward_cfg.ratio_weight * np.max(ratio, axis=2)  # (C, D)
    degenerate = m_norms < reward_cfg.degeneracy_tol  # (C,)
    per_draw = np.where(degenerate[:, None], reward_cfg.degenerate_reward, per_draw)
    return per_draw.mean(axis=1)


def random_search_oracle(
    state: EnvState,
    channel_params: RicianParams,
    reward_cfg: RewardConfig,
    budget: int,
    rng: np.random.Generator,
    n_antennas: int,
    aperture: float,
    min_spacing: float,
    n_draws: int = 32,
    fixed_geometry: ArrayGeometry | None = None,
    extra_candidates: Sequence[OracleCandidate] = (),
    include_matched: bool = True,
    bank: np.ndarray | None = None,
) -> OracleResult:
    """Best of ``budget`` random feasible actions under Monte-Carlo reward estimates.

    Matched-filter per-user beams at the reference layout are appended as
    seeds; callers may inject further candidates (e.g. zero-padded bests from
    a smaller array) and a shared draw bank for paired comparisons.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if bank is None:
        bank = nlos_bank(rng, n_draws, state.n_users, n_antennas)
    cands = random_candidates(
        budget, n_antennas, aperture, min_spacing, rng, fixed_geometry
    )
    if include_matched:
        ref = fixed_geometry if fixed_geometry is not None else fpa_layout(
            n_antennas, aperture, min_spacing
        )
        cands += matched_filter_candidates(state, channel_params, ref)
    cands += list(extra_candidates)
    rewards = evaluate_candidates(cands, state, channel_params, reward_cfg, bank)
    best = int(np.argmax(rewards))
    return OracleResult(
        best=cands[best],
        best_reward=float(rewards[best]),
        rewards=rewards,
        candidates=cands,
    )
