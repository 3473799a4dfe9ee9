"""Deterministic policy-gradient agent trained from replayed transitions.

Actor and critic are two-hidden-layer networks with target copies blended
softly every update.  Actions are produced in normalized [-1, 1] units
(scaled by the command bound at the environment boundary), explored with
additive Gaussian noise, and stored normalized in a uniform-sampling ring
buffer.  One gradient update runs per environment step once the buffer can
fill a batch, after an initial uniform-random warm-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import CarFollowingEnv, EnvConfig, RolloutResult, rollout
from .nn import (
    AdamState,
    Mlp,
    MlpConfig,
    ShapeMismatchError,
    adam_update,
    backward,
    forward,
    init_mlp,
    soft_update,
)
from .plant import DEFAULT_U_MAX

__all__ = [
    "CASE_WIDTH_STEPS",
    "AdapterError",
    "BufferUnderflowError",
    "TrainingDivergedError",
    "AgentConfig",
    "Transition",
    "ReplayBuffer",
    "Agent",
    "LearningCurve",
    "TrainResult",
    "EvalResult",
    "act",
    "act_normalized",
    "bellman_targets",
    "train_step",
    "train",
    "greedy_policy",
    "evaluate",
    "evaluate_policy",
    "cross_case_adapter",
]

# case -> (hidden width, maximum training steps)
CASE_WIDTH_STEPS = {
    1: (64, 1_000_000),
    2: (128, 1_500_000),
    3: (64, 1_000_000),
    4: (128, 1_500_000),
}


class AdapterError(ValueError):
    """Raised for observation transfers outside the supported protocol."""


class BufferUnderflowError(RuntimeError):
    """Raised when sampling a batch larger than the stored transitions."""


class TrainingDivergedError(RuntimeError):
    """Raised on a non-finite loss; carries the agent for a diagnostic dump."""

    def __init__(self, message: str, agent: "Agent | None" = None, step: int = 0):
        super().__init__(message)
        self.agent = agent
        self.step = step


@dataclass(frozen=True)
class AgentConfig:
    """Training hyperparameters; width and step budget are fixed per case."""

    case: int
    seed: int
    hidden: int
    total_steps: int
    blend: float = 0.001
    gamma: float = 0.99
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    replay_capacity: int = 500_000
    batch_size: int = 64
    noise_std: float = 0.02
    warmup_steps: int = 10_000
    # Linearly anneal exploration noise to zero across the post-warmup
    # budget so the late replay data sharpens the equilibrium behavior.
    anneal_noise: bool = True
    # Greedy-evaluate every N steps on a separate environment and return the
    # best-scoring parameters as the trained actor (0 disables selection).
    # The evaluation consumes no training randomness, so the training
    # trajectory is identical either way.
    eval_every: int = 10_000
    # Batch-statistics normalization destabilizes this task (the executed
    # inference-mode policy diverges from the batch-stat policy being
    # optimized, and replay statistics drift with the behavior policy), so
    # the agent's networks default to plain MLPs.
    batch_norm: bool = False

    def __post_init__(self) -> None:
        if self.case not in CASE_WIDTH_STEPS:
            raise ValueError(f"case must be 1..4, got {self.case}")
        width, budget = CASE_WIDTH_STEPS[self.case]
        if self.hidden != width:
            raise ValueError(f"case {self.case} trains {width}-wide nets, got {self.hidden}")
        if not 0 < self.total_steps <= budget:
            raise ValueError(
                f"case {self.case} allows at most {budget} training steps, got {self.total_steps}"
            )
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must be at least the batch size")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")

    @classmethod
    def for_case(cls, case: int, seed: int, total_steps: int | None = None, **overrides) -> "AgentConfig":
        width, budget = CASE_WIDTH_STEPS[case]
        return cls(
            case=case,
            seed=seed,
            hidden=width,
            total_steps=budget if total_steps is None else total_steps,
            **overrides,
        )


@dataclass
class Transition:
    """One replayed step; the action is stored in normalized [-1, 1] units."""

    obs: np.ndarray
    action: float
    reward: float
    next_obs: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.empty((capacity, obs_dim))
        self.action = np.empty((capacity, 1))
        self.reward = np.empty((capacity, 1))
        self.next_obs = np.empty((capacity, obs_dim))
        self.done = np.empty((capacity, 1))
        self.size = 0
        self.cursor = 0
        self.inserted = 0

    def __len__(self) -> int:
        return self.size

    def push(self, tr: Transition) -> None:
        if not -1.0 <= tr.reward <= 0.0:
            raise ValueError(f"reward {tr.reward} outside [-1, 0]")
        if not -1.0 <= tr.action <= 1.0:
            raise ValueError(f"normalized action {tr.action} outside [-1, 1]")
        i = self.cursor
        self.obs[i] = tr.obs
        self.action[i, 0] = tr.action
        self.reward[i, 0] = tr.reward
        self.next_obs[i] = tr.next_obs
        self.done[i, 0] = 1.0 if tr.done else 0.0
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def sample(self, rng: np.random.Generator, batch: int):
        if self.size < batch:
            raise BufferUnderflowError(f"buffer holds {self.size} < batch {batch}")
        idx = rng.integers(0, self.size, size=batch)
        return (
            self.obs[idx],
            self.action[idx],
            self.reward[idx],
            self.next_obs[idx],
            self.done[idx],
        )


def _actor_config(obs_dim: int, hidden: int, batch_norm: bool) -> MlpConfig:
    return MlpConfig(
        sizes=(obs_dim, hidden, hidden, 1),
        output="tanh",
        normalize_input=batch_norm,
        normalize_hidden=(batch_norm, batch_norm),
    )


def _critic_config(obs_dim: int, hidden: int, batch_norm: bool) -> MlpConfig:
    # The action joins at the second layer and is never normalized.
    return MlpConfig(
        sizes=(obs_dim, hidden, hidden, 1),
        output="linear",
        side_input=1,
        normalize_input=batch_norm,
        normalize_hidden=(batch_norm, False),
    )


class Agent:
    """Actor/critic pair with target copies, optimizers, replay, and rng."""

    def __init__(self, env_cfg: EnvConfig, cfg: AgentConfig):
        if env_cfg.case != cfg.case:
            raise ValueError(f"env case {env_cfg.case} != agent case {cfg.case}")
        self.env_cfg = env_cfg
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        obs_dim = env_cfg.obs_len
        self.actor = init_mlp(_actor_config(obs_dim, cfg.hidden, cfg.batch_norm), self.rng)
        self.critic = init_mlp(_critic_config(obs_dim, cfg.hidden, cfg.batch_norm), self.rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamState.for_params(self.actor.params, cfg.actor_lr)
        self.critic_opt = AdamState.for_params(self.critic.params, cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.replay_capacity, obs_dim)


def act_normalized(
    actor: Mlp, obs: np.ndarray, noise_std: float, rng: np.random.Generator | None = None
) -> float:
    """Actor output plus Gaussian exploration noise, clamped to [-1, 1]."""
    obs = np.asarray(obs, dtype=np.float64)
    n = float(forward(actor, obs.reshape(1, -1), mode="infer")[0, 0])
    if noise_std > 0:
        if rng is None:
            raise ValueError("exploration noise requires an rng")
        n += rng.normal(0.0, noise_std)
    return min(max(n, -1.0), 1.0)


def act(
    actor: Mlp,
    obs: np.ndarray,
    noise_std: float,
    rng: np.random.Generator | None = None,
    u_max: float = DEFAULT_U_MAX,
) -> float:
    """Exploration action in physical units (m/s^2)."""
    return act_normalized(actor, obs, noise_std, rng) * u_max


def bellman_targets(
    rewards: np.ndarray, dones: np.ndarray, q_next: np.ndarray, gamma: float
) -> np.ndarray:
    """One-step targets ``r + gamma*Q'``, with bootstrap masked at done."""
    return rewards + gamma * q_next * (1.0 - dones)


def train_step(agent: Agent, batch) -> tuple[float, float]:
    """One critic regression step and one actor ascent step, then target blends."""
    obs, act_n, rew, nobs, done = batch
    cfg = agent.cfg

    a_next = forward(agent.actor_target, nobs, mode="infer")
    q_next = forward(agent.critic_target, nobs, side=a_next, mode="infer")
    y = bellman_targets(rew, done, q_next, cfg.gamma)
    q = forward(agent.critic, obs, side=act_n, mode="train")
    diff = q - y
    critic_loss = float(np.mean(diff * diff))
    grads = backward(agent.critic, diff * (2.0 / diff.shape[0]))
    adam_update(agent.critic.params, grads.flat, agent.critic_opt)

    a_pred = forward(agent.actor, obs, mode="train")
    q_actor = forward(agent.critic, obs, side=a_pred, mode="train", update_running=False)
    actor_objective = float(np.mean(q_actor))
    through_critic = backward(
        agent.critic, np.full_like(q_actor, -1.0 / q_actor.shape[0]), need_param_grads=False
    )
    actor_grads = backward(agent.actor, through_critic.d_side)
    adam_update(agent.actor.params, actor_grads.flat, agent.actor_opt)

    soft_update(agent.actor_target, agent.actor, cfg.blend)
    soft_update(agent.critic_target, agent.critic, cfg.blend)
    return critic_loss, actor_objective


@dataclass
class LearningCurve:
    """Per-episode undiscounted rewards with the cumulative step counter."""

    episode: np.ndarray
    reward: np.ndarray
    steps: np.ndarray

    def moving_average(self, window: int = 100) -> np.ndarray:
        out = np.empty_like(self.reward)
        csum = np.concatenate([[0.0], np.cumsum(self.reward)])
        for i in range(len(self.reward)):
            lo = max(0, i + 1 - window)
            out[i] = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
        return out

    def save_csv(self, path: str) -> None:
        ma = self.moving_average()
        with open(path, "w") as fh:
            fh.write("episode,reward,steps,reward_ma100\n")
            for i in range(len(self.reward)):
                fh.write(
                    f"{int(self.episode[i])},{float(self.reward[i])!r},"
                    f"{int(self.steps[i])},{float(ma[i])!r}\n"
                )

    @classmethod
    def load_csv(cls, path: str) -> "LearningCurve":
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != "episode,reward,steps,reward_ma100":
            raise ValueError(f"{path} is not a learning-curve CSV")
        rows = [line.split(",") for line in lines[1:] if line]
        return cls(
            episode=np.array([int(r[0]) for r in rows]),
            reward=np.array([float(r[1]) for r in rows]),
            steps=np.array([int(r[2]) for r in rows]),
        )


@dataclass
class TrainResult:
    agent: Agent
    curve: LearningCurve
    selected_step: int
    selected_cost: float


def _greedy_cost(actor: Mlp, env_cfg: EnvConfig) -> float:
    env = CarFollowingEnv(env_cfg)
    return rollout(env, greedy_policy(actor, env_cfg.plant.u_max)).episode_cost


def exploration_std(cfg: AgentConfig, step: int) -> float:
    """Noise schedule: constant during warm-up, then (optionally) linear to 0."""
    if not cfg.anneal_noise:
        return cfg.noise_std
    span = max(1, cfg.total_steps - cfg.warmup_steps)
    progress = max(0, step - cfg.warmup_steps) / span
    return cfg.noise_std * max(0.0, 1.0 - progress)


def train(env_cfg: EnvConfig, agent_cfg: AgentConfig) -> TrainResult:
    """Run the full training loop; fully determined by the agent seed.

    When checkpoint selection is enabled the returned agent's actor holds the
    parameters whose deterministic greedy rollout scored the lowest episode
    cost across the periodic evaluations (ties keep the earliest).  The
    evaluations run on separate environments and draw no randomness, so the
    training trajectory itself is identical with selection on or off.
    """
    agent = Agent(env_cfg, agent_cfg)
    env = CarFollowingEnv(env_cfg)
    rng = agent.rng
    u_max = env_cfg.plant.u_max
    obs = env.reset()
    episodes: list[tuple[int, float, int]] = []
    ep_reward = 0.0
    ep_idx = 0
    best: tuple[float, int, np.ndarray, np.ndarray] | None = None
    for step in range(1, agent_cfg.total_steps + 1):
        if step <= agent_cfg.warmup_steps:
            n = float(rng.uniform(-1.0, 1.0))
        else:
            n = act_normalized(agent.actor, obs, exploration_std(agent_cfg, step), rng)
        res = env.step(n * u_max)
        agent.buffer.push(Transition(obs, n, res.reward, res.observation, res.done))
        ep_reward += res.reward
        obs = res.observation
        if res.done:
            episodes.append((ep_idx, ep_reward, step))
            ep_idx += 1
            ep_reward = 0.0
            obs = env.reset()
        if step > agent_cfg.warmup_steps and len(agent.buffer) >= agent_cfg.batch_size:
            critic_loss, _ = train_step(agent, agent.buffer.sample(rng, agent_cfg.batch_size))
            if not math.isfinite(critic_loss):
                raise TrainingDivergedError(
                    f"non-finite critic loss at step {step}", agent=agent, step=step
                )
        if (
            agent_cfg.eval_every
            and step > agent_cfg.warmup_steps
            and (step % agent_cfg.eval_every == 0 or step == agent_cfg.total_steps)
        ):
            cost = _greedy_cost(agent.actor, env_cfg)
            if best is None or cost < best[0]:
                best = (cost, step, agent.actor.params.copy(), agent.actor.stats.copy())
    if best is not None:
        selected_cost, selected_step, params, stats = best
        agent.actor.params[...] = params
        agent.actor.stats[...] = stats
    else:
        selected_step = agent_cfg.total_steps
        selected_cost = _greedy_cost(agent.actor, env_cfg)
    curve = LearningCurve(
        episode=np.array([e for e, _, _ in episodes], dtype=np.int64),
        reward=np.array([r for _, r, _ in episodes]),
        steps=np.array([s for _, _, s in episodes], dtype=np.int64),
    )
    return TrainResult(agent, curve, selected_step, selected_cost)


def greedy_policy(actor: Mlp, u_max: float = DEFAULT_U_MAX):
    """Deterministic inference-mode policy in physical units."""

    def policy(obs: np.ndarray) -> float:
        return act_normalized(actor, obs, 0.0) * u_max

    return policy


@dataclass
class EvalResult:
    rollout: RolloutResult
    metrics: dict


def _last_window_stats(traj, dt: float, seconds: float = 5.0) -> dict:
    n = min(len(traj), int(round(seconds / dt)))
    tail = traj.e[-n:]
    return {
        "last5s_mean_e": float(tail.mean()),
        "last5s_mean_abs_e": float(np.abs(tail).mean()),
        "last5s_max_e": float(tail.max()),
        "last5s_min_e": float(tail.min()),
    }


def evaluate_policy(policy, env_cfg: EnvConfig) -> EvalResult:
    """Deterministic rollout of any policy plus steady-state statistics."""
    env = CarFollowingEnv(env_cfg)
    ro = rollout(env, policy)
    metrics = {
        "episode_reward": ro.episode_reward,
        "episode_cost": ro.episode_cost,
    }
    metrics.update(_last_window_stats(ro.trajectory, env_cfg.plant.dt))
    return EvalResult(ro, metrics)


def evaluate(actor: Mlp, env_cfg: EnvConfig) -> EvalResult:
    """Greedy evaluation of an actor on a matching-case environment."""
    if actor.cfg.sizes[0] != env_cfg.obs_len:
        raise ShapeMismatchError(
            f"actor takes {actor.cfg.sizes[0]} features but case {env_cfg.case} "
            f"observations have {env_cfg.obs_len}; use cross_case_adapter"
        )
    return evaluate_policy(greedy_policy(actor, env_cfg.plant.u_max), env_cfg)


def cross_case_adapter(actor: Mlp, source_case: int, env_cfg: EnvConfig):
    """Policy that feeds a richer observation into a leaner-case actor.

    Supported transfers: identity (matching cases) and the kinematic-trained
    actor driving any richer case by reading only [e, e_dot].
    """
    if source_case == env_cfg.case:
        return greedy_policy(actor, env_cfg.plant.u_max)
    if source_case != 1:
        raise AdapterError(
            f"transfer case {source_case} -> {env_cfg.case} is outside the protocol"
        )
    if actor.cfg.sizes[0] != 2:
        raise ShapeMismatchError("kinematic actor must take 2 features")
    base = greedy_policy(actor, env_cfg.plant.u_max)

    def policy(obs: np.ndarray) -> float:
        return base(obs[:2])

    return policy
