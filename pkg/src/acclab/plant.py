"""Discrete-time follower-vehicle plant in gap-error coordinates.

The plant tracks the gap-keeping error ``e`` (actual inter-vehicle distance
minus desired headway), its rate ``e_dot``, and the follower's actual
acceleration ``a``.  Two realism switches exist independently:

* a pure actuation delay, modeled as a FIFO pipeline of the last ``k``
  commands (``k`` = number of whole steps fitting in the delay), and
* a first-order command lag with time constant ``tau``, by which the actual
  acceleration approaches the (delayed) command instead of jumping to it.

With both switches off the plant collapses to a point-mass kinematic model
whose acceleration equals the command.  Integration is forward Euler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

__all__ = [
    "DEFAULT_DT",
    "DEFAULT_TAU",
    "DEFAULT_PHI",
    "DEFAULT_U_MAX",
    "CommandBoundsError",
    "PlantConfig",
    "PlantState",
    "ScenarioConfig",
    "delay_steps",
    "kinematic_step",
    "lag_step",
    "plant_step",
    "initial_state",
]

# Nominal vehicle/controller constants (seconds, m/s^2).
DEFAULT_DT = 0.1
DEFAULT_TAU = 0.5
DEFAULT_PHI = 0.2
DEFAULT_U_MAX = 2.6


class CommandBoundsError(ValueError):
    """Raised when a command exceeds the configured magnitude bound."""


@dataclass(frozen=True)
class PlantConfig:
    """Static plant parameters and realism switches.

    dt: integration step, s.  tau: lag time constant, s.  phi: actuation
    delay, s.  u_max: command magnitude bound, m/s^2.
    """

    dt: float = DEFAULT_DT
    tau: float = DEFAULT_TAU
    phi: float = DEFAULT_PHI
    u_max: float = DEFAULT_U_MAX
    lag_enabled: bool = False
    delay_enabled: bool = False

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.lag_enabled and self.tau <= 0:
            raise ValueError(f"tau must be positive when lag is enabled, got {self.tau}")
        if self.phi < 0:
            raise ValueError(f"phi must be nonnegative, got {self.phi}")
        if self.u_max <= 0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")
        if self.delay_enabled and self.phi <= 0:
            raise ValueError("delay_enabled requires phi > 0")

    @property
    def k(self) -> int:
        """Pipeline depth: delay steps when the delay switch is on, else 0."""
        return delay_steps(self.phi, self.dt) if self.delay_enabled else 0


@dataclass(frozen=True)
class PlantState:
    """Plant state: error coordinates, actual acceleration, pending commands.

    ``pending`` holds exactly ``k`` not-yet-executed commands, oldest first.
    In kinematic mode ``a`` simply records the last applied command so that
    trajectories log uniformly across plant variants.
    """

    e: float
    e_dot: float
    a: float = 0.0
    pending: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class ScenarioConfig:
    """Fixed car-following scenario: constant-speed leader, one follower."""

    v_lead: float = 30.0
    v_follow0: float = 27.5
    e0: float = 2.5
    episode_len: int = 200

    def __post_init__(self) -> None:
        if self.episode_len <= 0:
            raise ValueError(f"episode_len must be positive, got {self.episode_len}")

    @property
    def e_dot0(self) -> float:
        """Initial error rate: leader speed minus follower speed, m/s."""
        return self.v_lead - self.v_follow0


def delay_steps(phi: float, dt: float) -> int:
    """Largest integer k with k*dt <= phi.

    The small epsilon absorbs binary-representation noise so that e.g.
    phi=0.3, dt=0.1 yields 3 rather than 2.
    """
    if phi < 0:
        raise ValueError(f"phi must be nonnegative, got {phi}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return int(math.floor(phi / dt + 1e-9))


def _check_command(u: float, u_max: float) -> None:
    if not abs(u) <= u_max:
        raise CommandBoundsError(f"command {u} outside [-{u_max}, {u_max}]")


def kinematic_step(
    state: PlantState, u: float, dt: float, u_max: float = DEFAULT_U_MAX
) -> PlantState:
    """One Euler step of the point-mass model: the command is the acceleration."""
    _check_command(u, u_max)
    return replace(
        state,
        e=state.e + dt * state.e_dot,
        e_dot=state.e_dot - dt * u,
        a=u,
    )


def lag_step(a: float, u_delayed: float, dt: float, tau: float) -> float:
    """One Euler step of the first-order command lag toward ``u_delayed``."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return a + dt * (u_delayed - a) / tau


def plant_step(state: PlantState, u: float, cfg: PlantConfig) -> PlantState:
    """Advance the full plant one step under command ``u``.

    Order within the step: the delay pipeline shifts (push ``u``, pop the
    oldest as the effective command), the lag updates the acceleration from
    the effective command, then the error coordinates integrate using the
    updated acceleration.
    """
    _check_command(u, cfg.u_max)
    if cfg.delay_enabled and cfg.k > 0:
        if len(state.pending) != cfg.k:
            raise ValueError(
                f"pending queue holds {len(state.pending)} commands, expected {cfg.k}"
            )
        u_eff = state.pending[0]
        pending = state.pending[1:] + (u,)
    else:
        u_eff = u
        pending = state.pending
    if cfg.lag_enabled:
        a = lag_step(state.a, u_eff, cfg.dt, cfg.tau)
    else:
        a = u_eff
    return PlantState(
        e=state.e + cfg.dt * state.e_dot,
        e_dot=state.e_dot - cfg.dt * a,
        a=a,
        pending=pending,
    )


def initial_state(scenario: ScenarioConfig, cfg: PlantConfig) -> PlantState:
    """Rest state at t=0: scenario initial error, zero acceleration, zero-filled queue."""
    return PlantState(
        e=scenario.e0,
        e_dot=scenario.e_dot0,
        a=0.0,
        pending=(0.0,) * cfg.k,
    )
