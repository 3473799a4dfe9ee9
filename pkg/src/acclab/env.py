"""MDP wrapper over the plant: observations, clipped reward, fixed episodes.

Four observation designs are supported, mirroring which plant effects the
agent is told about:

1. kinematic:      [e, e_dot]
2. delay only:     [e, e_dot, pending commands oldest first]
3. lag only:       [e, e_dot, a]
4. delay and lag:  [e, e_dot, a, pending commands oldest first]

The per-step reward is the negated stage cost, clipped to [-1, 0]:
``max(-1, -(alpha*|e'|/e_nmax + beta*|u|/u_max))`` with ``e'`` the post-step
error.  Episodes run a fixed number of steps; there is no early termination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .plant import PlantConfig, PlantState, ScenarioConfig, initial_state, plant_step
from .trajectory import Trajectory

__all__ = [
    "CASE_FLAGS",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "DEFAULT_E_NMAX",
    "EnvConfig",
    "EpisodeFinishedError",
    "StepResult",
    "CarFollowingEnv",
    "RolloutResult",
    "step_reward",
    "rollout",
]

DEFAULT_ALPHA = 0.8
DEFAULT_BETA = 0.2
DEFAULT_E_NMAX = 10.0

# case id -> (lag_enabled, delay_enabled)
CASE_FLAGS = {1: (False, False), 2: (False, True), 3: (True, False), 4: (True, True)}


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an environment whose episode already ended."""


@dataclass(frozen=True)
class EnvConfig:
    """Environment configuration: observation case, cost weights, plant, scenario."""

    case: int = 1
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    e_nmax: float = DEFAULT_E_NMAX
    plant: PlantConfig = field(default_factory=PlantConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    randomize_start: bool = False

    def __post_init__(self) -> None:
        if self.case not in CASE_FLAGS:
            raise ValueError(f"case must be 1..4, got {self.case}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if not math.isclose(self.alpha + self.beta, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")
        if self.e_nmax <= 0:
            raise ValueError(f"e_nmax must be positive, got {self.e_nmax}")
        lag, delay = CASE_FLAGS[self.case]
        if (self.plant.lag_enabled, self.plant.delay_enabled) != (lag, delay):
            raise ValueError(
                f"case {self.case} requires lag_enabled={lag}, delay_enabled={delay}"
            )

    @classmethod
    def for_case(cls, case: int, **overrides) -> "EnvConfig":
        """Build a config whose plant switches follow the case convention."""
        if case not in CASE_FLAGS:
            raise ValueError(f"case must be 1..4, got {case}")
        lag, delay = CASE_FLAGS[case]
        plant = overrides.pop("plant", PlantConfig())
        plant = replace(plant, lag_enabled=lag, delay_enabled=delay)
        return cls(case=case, plant=plant, **overrides)

    @property
    def obs_len(self) -> int:
        k = self.plant.k
        return {1: 2, 2: 2 + k, 3: 3, 4: 3 + k}[self.case]


@dataclass
class StepResult:
    """Outcome of one environment step."""

    observation: np.ndarray
    reward: float
    done: bool
    info: dict


def step_reward(e_next: float, u: float, cfg: EnvConfig) -> float:
    """Clipped reward for landing at error ``e_next`` after command ``u``."""
    cost = cfg.alpha * abs(e_next) / cfg.e_nmax + cfg.beta * abs(u) / cfg.plant.u_max
    return max(-1.0, -cost)


class CarFollowingEnv:
    """Single-agent car-following environment with fixed-length episodes.

    Instances are single-threaded; run independent copies for parallel work.
    """

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self._state: PlantState | None = None
        self._step_idx = 0

    @property
    def state(self) -> PlantState:
        if self._state is None:
            raise RuntimeError("environment not reset")
        return self._state

    @property
    def step_idx(self) -> int:
        return self._step_idx

    @property
    def done(self) -> bool:
        return self._step_idx >= self.cfg.scenario.episode_len

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Start a new episode and return the initial observation.

        With ``randomize_start`` set and an ``rng`` supplied, the initial error
        and error rate are drawn uniformly from +/- their scenario magnitudes.
        """
        scenario = self.cfg.scenario
        self._state = initial_state(scenario, self.cfg.plant)
        if self.cfg.randomize_start and rng is not None:
            e0 = rng.uniform(-abs(scenario.e0), abs(scenario.e0))
            edot0 = rng.uniform(-abs(scenario.e_dot0), abs(scenario.e_dot0))
            self._state = replace(self._state, e=e0, e_dot=edot0)
        self._step_idx = 0
        return self._observe()

    def step(self, action: float) -> StepResult:
        """Clamp the action, advance the plant, and score the landing error."""
        if self.done:
            raise EpisodeFinishedError(
                f"episode finished after {self._step_idx} steps; call reset()"
            )
        cfg = self.cfg
        u = float(min(max(action, -cfg.plant.u_max), cfg.plant.u_max))
        pre = self.state
        new = plant_step(pre, u, cfg.plant)
        cost = cfg.alpha * abs(new.e) / cfg.e_nmax + cfg.beta * abs(u) / cfg.plant.u_max
        reward = max(-1.0, -cost)
        t = self._step_idx * cfg.plant.dt
        info = {
            "t": t,
            "e": pre.e,
            "e_dot": pre.e_dot,
            "v": cfg.scenario.v_lead - pre.e_dot,
            "u": u,
            "a": new.a,
            "cost": cost,
        }
        self._state = new
        self._step_idx += 1
        return StepResult(self._observe(), reward, self.done, info)

    def _observe(self) -> np.ndarray:
        s = self.state
        case = self.cfg.case
        if case == 1:
            vals = (s.e, s.e_dot)
        elif case == 2:
            vals = (s.e, s.e_dot) + s.pending
        elif case == 3:
            vals = (s.e, s.e_dot, s.a)
        else:
            vals = (s.e, s.e_dot, s.a) + s.pending
        return np.array(vals, dtype=np.float64)


@dataclass
class RolloutResult:
    """Full-episode record plus its two scalar summaries."""

    trajectory: Trajectory
    episode_reward: float
    episode_cost: float


def rollout(env: CarFollowingEnv, policy: Callable[[np.ndarray], float]) -> RolloutResult:
    """Run one full episode under ``policy`` and collect the time series."""
    obs = env.reset()
    n = env.cfg.scenario.episode_len
    cols = {name: np.empty(n) for name in ("t", "e", "e_dot", "v", "u", "a", "reward")}
    costs = np.empty(n)
    for i in range(n):
        res = env.step(policy(obs))
        obs = res.observation
        info = res.info
        for name in ("t", "e", "e_dot", "v", "u", "a"):
            cols[name][i] = info[name]
        cols["reward"][i] = res.reward
        costs[i] = info["cost"]
    traj = Trajectory(**cols)
    return RolloutResult(traj, float(cols["reward"].sum()), float(costs.sum()))
