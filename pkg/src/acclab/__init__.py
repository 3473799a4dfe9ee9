"""Car-following control laboratory.

Simulates a follower vehicle with optional actuation delay and first-order
command lag, benchmarks it with finite-horizon dynamic programming, and
trains a from-scratch DDPG agent under four observation designs.
"""

from .plant import (
    CommandBoundsError,
    PlantConfig,
    PlantState,
    ScenarioConfig,
    delay_steps,
    initial_state,
    kinematic_step,
    lag_step,
    plant_step,
)
from .env import (
    CarFollowingEnv,
    EnvConfig,
    EpisodeFinishedError,
    RolloutResult,
    StepResult,
    rollout,
    step_reward,
)
from .trajectory import CsvFormatError, Trajectory

__all__ = [
    "CommandBoundsError",
    "PlantConfig",
    "PlantState",
    "ScenarioConfig",
    "delay_steps",
    "initial_state",
    "kinematic_step",
    "lag_step",
    "plant_step",
    "CarFollowingEnv",
    "EnvConfig",
    "EpisodeFinishedError",
    "RolloutResult",
    "StepResult",
    "rollout",
    "step_reward",
    "CsvFormatError",
    "Trajectory",
]
