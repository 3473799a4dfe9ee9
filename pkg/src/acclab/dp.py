"""Finite-horizon dynamic programming benchmark on a discretized state grid.

Backward induction minimizes the accumulated stage cost
``alpha*|e'|/e_nmax + beta*|u|/u_max`` (unclipped) over a uniform grid in
the continuous coordinates (error, error rate, and acceleration when the
lag is modeled) with one extra exact axis per pending delayed command.
Off-grid next states are valued by multilinear interpolation; states
escaping the grid are clamped to the boundary and counted in diagnostics.

Pending-command axes always hold exactly the action values, so the delay
pipeline shifts are pure re-indexing and never interpolate.  A brute-force
enumerator over action sequences provides the exact oracle for small
instances, and ``exact_reachable_grid`` builds lattices on which the two
agree bitwise (all reachable states are grid nodes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import CarFollowingEnv, EnvConfig, RolloutResult, rollout
from .plant import PlantState, initial_state, plant_step

__all__ = [
    "BudgetExceededError",
    "GridEscapeError",
    "Axis",
    "ActionSet",
    "Grid",
    "DpDiagnostics",
    "DpSolution",
    "DpRollout",
    "uniform_points",
    "interpolate",
    "backward_induction",
    "naive_backward_induction",
    "brute_force_cost",
    "greedy_action",
    "dp_rollout",
    "default_grid",
    "exact_reachable_grid",
    "save_solution",
    "load_solution",
]


class BudgetExceededError(RuntimeError):
    """Raised when an enumeration or table would exceed its resource budget."""


class GridEscapeError(ValueError):
    """Raised when a grid/config mismatch makes the solve ill-posed."""


def uniform_points(lo: float, spacing: float, n: int) -> np.ndarray:
    """The one way axis/action point values are materialized everywhere.

    Using a single formula keeps action values and pending-axis grid points
    bitwise identical, which is what makes delay transitions exact.
    """
    return lo + np.arange(n, dtype=np.float64) * spacing


@dataclass(frozen=True)
class Axis:
    """Uniformly spaced grid axis defined by origin, spacing, and point count."""

    lo: float
    spacing: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"axis needs >= 2 points, got {self.n}")
        if self.spacing <= 0:
            raise ValueError(f"axis spacing must be positive, got {self.spacing}")

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    @property
    def points(self) -> np.ndarray:
        return uniform_points(self.lo, self.spacing, self.n)

    @classmethod
    def from_range(cls, lo: float, hi: float, n: int) -> "Axis":
        return cls(lo, (hi - lo) / (n - 1), n)


@dataclass(frozen=True)
class ActionSet:
    """Odd count of evenly spaced commands spanning [-u_max, u_max]."""

    u_max: float
    m: int

    def __post_init__(self) -> None:
        if self.u_max <= 0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")
        if self.m < 3 or self.m % 2 == 0:
            raise ValueError(f"need an odd action count >= 3, got {self.m}")
        vals = self.values
        if vals[self.m // 2] != 0.0:
            raise ValueError(
                f"action set ({self.u_max}, {self.m}) does not hit 0 exactly; "
                "pick u_max/count whose midpoint is representable"
            )
        if vals[-1] != self.u_max or vals[0] != -self.u_max:
            raise ValueError(
                f"action set ({self.u_max}, {self.m}) endpoints round off u_max; "
                "pick u_max/count with exact endpoints"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.u_max / (self.m - 1)

    @property
    def values(self) -> np.ndarray:
        return uniform_points(-self.u_max, self.spacing, self.m)

    @property
    def axis(self) -> Axis:
        return Axis(-self.u_max, self.spacing, self.m)

    def evaluation_order(self) -> list[int]:
        """Index order used to break cost ties: smallest |u|, negative first."""
        vals = self.values
        return sorted(range(self.m), key=lambda j: (abs(vals[j]), vals[j]))


@dataclass(frozen=True)
class Grid:
    """State grid: error and error-rate axes, optional acceleration axis,
    and one exact axis per pending delayed command (oldest first)."""

    e: Axis
    v: Axis
    a: Axis | None = None
    pending: tuple[Axis, ...] = ()

    @property
    def axes(self) -> tuple[Axis, ...]:
        cont = (self.e, self.v) + ((self.a,) if self.a is not None else ())
        return cont + self.pending

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.shape))

    def state_at(self, idx: tuple[int, ...]) -> PlantState:
        """The plant state a grid node represents (a=0 when unmodeled)."""
        pts = [ax.points for ax in self.axes]
        ncont = 3 if self.a is not None else 2
        e, v = float(pts[0][idx[0]]), float(pts[1][idx[1]])
        a = float(pts[2][idx[2]]) if self.a is not None else 0.0
        pend = tuple(float(pts[ncont + i][idx[ncont + i]]) for i in range(len(self.pending)))
        return PlantState(e=e, e_dot=v, a=a, pending=pend)

    def coords(self, state: PlantState) -> np.ndarray:
        vals = [state.e, state.e_dot]
        if self.a is not None:
            vals.append(state.a)
        vals.extend(state.pending)
        if len(vals) != len(self.axes):
            raise ValueError(
                f"state has {len(vals)} coordinates, grid has {len(self.axes)} axes"
            )
        return np.asarray(vals, dtype=np.float64)

    def describe(self) -> dict:
        return {
            "axes": [{"lo": ax.lo, "spacing": ax.spacing, "n": ax.n} for ax in self.axes],
            "has_accel": self.a is not None,
            "n_pending": len(self.pending),
        }


def _locate(axis: Axis, q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fractional grid position of queries, clamped; also the escape mask."""
    t = (np.asarray(q, dtype=np.float64) - axis.lo) / axis.spacing
    escaped = (t < 0.0) | (t > axis.n - 1)
    t = np.clip(t, 0.0, float(axis.n - 1))
    lo = np.minimum(t.astype(np.int64), axis.n - 2)
    frac = t - lo
    return lo, frac, escaped


def interpolate(values: np.ndarray, axes: tuple[Axis, ...], point) -> tuple[float, int]:
    """Multilinear interpolation of a table at one point.

    Returns the value and the number of axes on which the point had to be
    clamped into range.  Blends run last axis first with the (1-f)*lo + f*hi
    form, matching the solver kernel exactly.
    """
    point = np.asarray(point, dtype=np.float64)
    if point.shape != (len(axes),):
        raise ValueError(f"point has shape {point.shape}, expected ({len(axes)},)")
    los, fracs, clamped = [], [], 0
    for ax, q in zip(axes, point):
        lo, frac, esc = _locate(ax, q)
        los.append(int(lo))
        fracs.append(float(frac))
        clamped += int(esc)
    sub = values
    for i in reversed(range(len(axes))):
        lo, f = los[i], fracs[i]
        sub = (1.0 - f) * sub[..., lo] + f * sub[..., lo + 1]
    return float(sub), clamped


@dataclass
class DpDiagnostics:
    """Solve-time accounting of transitions clamped at the grid boundary."""

    escaped_transitions_per_step: int
    transitions_per_step: int
    horizon: int

    @property
    def escape_fraction(self) -> float:
        return self.escaped_transitions_per_step / self.transitions_per_step


@dataclass
class DpSolution:
    """Backward-induction output: per-step cost-to-go and greedy-action tables.

    ``values[t]`` is the cost-to-go at the start of step t (``values[horizon]``
    is identically zero); ``policy[t]`` holds action indices into
    ``actions.values``.
    """

    grid: Grid
    actions: ActionSet
    env_cfg: EnvConfig
    horizon: int
    values: np.ndarray
    policy: np.ndarray
    diagnostics: DpDiagnostics

    def start_value(self, state: PlantState | None = None) -> float:
        """Interpolated cost-to-go of (by default) the scenario start state."""
        if state is None:
            state = initial_state(self.env_cfg.scenario, self.env_cfg.plant)
        val, _ = interpolate(
            np.asarray(self.values[0], dtype=np.float64), self.grid.axes, self.grid.coords(state)
        )
        return val


def _check_setup(grid: Grid, actions: ActionSet, cfg: EnvConfig) -> None:
    plant = cfg.plant
    if (grid.a is not None) != plant.lag_enabled:
        raise GridEscapeError("grid acceleration axis must match lag_enabled")
    if len(grid.pending) != plant.k:
        raise GridEscapeError(
            f"grid has {len(grid.pending)} pending axes, plant delay needs {plant.k}"
        )
    if actions.u_max != plant.u_max:
        raise GridEscapeError("action set u_max must equal the plant command bound")
    for ax in grid.pending:
        if not np.array_equal(ax.points, actions.values):
            raise GridEscapeError("pending axes must hold exactly the action values")


def _lerp_take(arr: np.ndarray, axis: int, lo: np.ndarray, w0: np.ndarray, w1: np.ndarray) -> np.ndarray:
    """Blend ``arr`` along ``axis`` at fractional positions (lo + frac).

    ``lo``/``w0``/``w1`` must be shaped to broadcast against ``arr`` with the
    gathered axis in place.
    """
    a0 = np.take_along_axis(arr, lo, axis=axis)
    a1 = np.take_along_axis(arr, lo + 1, axis=axis)
    return a0 * w0 + a1 * w1


def backward_induction(
    grid: Grid,
    actions: ActionSet,
    horizon: int,
    cfg: EnvConfig,
    value_dtype=np.float64,
    max_table_bytes: int = 3_000_000_000,
) -> DpSolution:
    """Solve the finite-horizon problem over the grid.

    Stores the full per-step value and policy stacks so that greedy rollouts
    can interpolate per-action Q-values at any later time without re-solving.
    """
    _check_setup(grid, actions, cfg)
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    plant = cfg.plant
    dt, tau = plant.dt, plant.tau
    shape = grid.shape
    ncells = grid.npoints
    m = actions.m
    k = len(grid.pending)
    has_a = grid.a is not None
    ncont = 3 if has_a else 2

    pol_dtype = np.uint8 if m <= 255 else np.uint16
    need = (horizon + 1) * ncells * np.dtype(value_dtype).itemsize
    need += horizon * ncells * np.dtype(pol_dtype).itemsize
    if need > max_table_bytes:
        raise BudgetExceededError(
            f"tables need {need / 1e9:.2f} GB > budget {max_table_bytes / 1e9:.2f} GB; "
            "coarsen the grid or raise max_table_bytes"
        )

    e_pts = grid.e.points
    v_pts = grid.v.points
    a_pts = grid.a.points if has_a else None
    order = actions.evaluation_order()
    u_ord = actions.values[order]
    eff_ord = cfg.beta * np.abs(u_ord) / plant.u_max

    # Next-state coordinates never depend on time, so all interpolation
    # indices/weights are precomputed once.
    e_next = e_pts[:, None] + dt * v_pts[None, :]
    stage_err = cfg.alpha * np.abs(e_next) / cfg.e_nmax
    le, fe, esc_e = _locate(grid.e, e_next)
    we0, we1 = 1.0 - fe, fe

    values = np.zeros((horizon + 1,) + shape, dtype=value_dtype)
    policy = np.zeros((horizon,) + shape, dtype=pol_dtype)

    # One plan per effective command: per action when there is no delay,
    # per pending-head value when there is (the head is what executes).
    plans = []
    escaped = 0
    if k == 0:
        heads = [float(u) for u in u_ord]
    else:
        heads = [float(u) for u in grid.pending[0].points]
    for u_eff in heads:
        if has_a:
            a_new = a_pts + dt * (u_eff - a_pts) / tau
            la, fa, esc_a = _locate(grid.a, a_new)
            v_new = v_pts[:, None] - dt * a_new[None, :]
            lv, fv, esc_v = _locate(grid.v, v_new)
            esc = esc_e[:, :, None] | esc_v[None, :, :] | esc_a[None, None, :]
        else:
            a_new = None
            v_new = v_pts - dt * u_eff
            lv, fv, esc_v = _locate(grid.v, v_new)
            esc = esc_e | esc_v[None, :]
        escaped += int(esc.sum()) * (m ** k if k else 1)
        plans.append((la if has_a else None, fa if has_a else None, lv, fv))

    def blend_continuous(vol: np.ndarray, plan) -> np.ndarray:
        """Interpolate ``vol`` over the continuous axes; trailing axes ride along."""
        la, fa, lv, fv = plan
        trail = vol.ndim - ncont
        if has_a:
            idx = la.reshape((1, 1, -1) + (1,) * trail)
            vol = _lerp_take(
                vol, 2, idx,
                (1.0 - fa).reshape((1, 1, -1) + (1,) * trail),
                fa.reshape((1, 1, -1) + (1,) * trail),
            )
            lv_idx = lv.reshape((1,) + lv.shape + (1,) * trail)
            vol = _lerp_take(
                vol, 1, lv_idx,
                (1.0 - fv).reshape((1,) + fv.shape + (1,) * trail),
                fv.reshape((1,) + fv.shape + (1,) * trail),
            )
        else:
            lv_idx = lv.reshape((1, -1) + (1,) * trail)
            vol = _lerp_take(
                vol, 1, lv_idx,
                (1.0 - fv).reshape((1, -1) + (1,) * trail),
                fv.reshape((1, -1) + (1,) * trail),
            )
        le_idx = le.reshape(le.shape + (1,) * (vol.ndim - 2))
        return _lerp_take(
            vol, 0, le_idx,
            we0.reshape(we0.shape + (1,) * (vol.ndim - 2)),
            we1.reshape(we1.shape + (1,) * (vol.ndim - 2)),
        )

    if k == 0:
        stage = [stage_err + eff for eff in eff_ord]  # (Ne,Nv) per ordered action
        for t in range(horizon - 1, -1, -1):
            v_next = np.asarray(values[t + 1], dtype=np.float64)
            best = None
            pol = None
            for rank in range(m):
                blended = blend_continuous(v_next, plans[rank])
                if has_a:
                    q = stage[rank][:, :, None] + blended
                else:
                    q = stage[rank] + blended
                if best is None:
                    best = q
                    pol = np.full(shape, order[rank], dtype=pol_dtype)
                else:
                    better = q < best
                    np.copyto(best, q, where=better)
                    np.copyto(pol, pol_dtype(order[rank]), where=better)
            values[t] = best
            policy[t] = pol
    else:
        order_arr = np.asarray(order, dtype=pol_dtype)
        # stage cost broadcast over every axis except (e, v) and the final
        # command axis j (in evaluation order).
        mid_ones = (1,) * (ncont - 2 + k - 1)
        stage = stage_err.reshape(stage_err.shape + mid_ones + (1,)) + eff_ord.reshape(
            (1, 1) + mid_ones + (m,)
        )
        for t in range(horizon - 1, -1, -1):
            # Last pending axis doubles as the fresh-command axis; put it in
            # evaluation order so ties resolve by preference.
            v_next = np.asarray(values[t + 1], dtype=np.float64)[..., order]
            for ip1 in range(m):
                q = stage + blend_continuous(v_next, plans[ip1])
                amin = np.argmin(q, axis=-1)
                vt = np.take_along_axis(q, amin[..., None], axis=-1)[..., 0]
                sel = (slice(None),) * ncont + (ip1,)
                values[(t,) + sel] = vt
                policy[(t,) + sel] = order_arr[amin]

    diags = DpDiagnostics(
        escaped_transitions_per_step=escaped,
        transitions_per_step=ncells * m,
        horizon=horizon,
    )
    return DpSolution(grid, actions, cfg, horizon, values, policy, diags)


def naive_backward_induction(
    grid: Grid, actions: ActionSet, horizon: int, cfg: EnvConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Reference scalar implementation of the same recursion (tests only).

    Loops over every grid node and action through the real plant step and the
    generic interpolator; bitwise-comparable to the vectorized kernel.
    """
    _check_setup(grid, actions, cfg)
    shape = grid.shape
    order = actions.evaluation_order()
    vals = actions.values
    values = np.zeros((horizon + 1,) + shape, dtype=np.float64)
    policy = np.zeros((horizon,) + shape, dtype=np.int64)
    for t in range(horizon - 1, -1, -1):
        v_next = values[t + 1]
        for idx in np.ndindex(shape):
            state = grid.state_at(idx)
            best = math.inf
            best_j = 0
            for j in order:
                u = float(vals[j])
                nxt = plant_step(state, u, cfg.plant)
                stage = (
                    cfg.alpha * abs(nxt.e) / cfg.e_nmax
                    + cfg.beta * abs(u) / cfg.plant.u_max
                )
                tail, _ = interpolate(v_next, grid.axes, grid.coords(nxt))
                q = stage + tail
                if q < best:
                    best, best_j = q, j
            values[(t,) + idx] = best
            policy[(t,) + idx] = best_j
    return values, policy


def brute_force_cost(
    start: PlantState,
    actions: ActionSet,
    horizon: int,
    cfg: EnvConfig,
    max_sequences: int = 1_000_000,
) -> tuple[float, tuple[int, ...]]:
    """Exhaustive minimum over all action-index sequences through the exact plant.

    The recursion accumulates stage costs back-to-front, matching the DP
    summation order exactly; ties pick the lexicographically smallest index
    sequence.
    """
    total = actions.m**horizon
    if total > max_sequences:
        raise BudgetExceededError(
            f"{actions.m}^{horizon} = {total} sequences exceeds budget {max_sequences}"
        )
    vals = actions.values
    plant = cfg.plant

    def rec(state: PlantState, t: int) -> tuple[float, tuple[int, ...]]:
        if t == horizon:
            return 0.0, ()
        best = math.inf
        best_seq: tuple[int, ...] = ()
        for j in range(actions.m):
            u = float(vals[j])
            nxt = plant_step(state, u, plant)
            stage = cfg.alpha * abs(nxt.e) / cfg.e_nmax + cfg.beta * abs(u) / plant.u_max
            tail, seq = rec(nxt, t + 1)
            q = stage + tail
            if q < best:
                best, best_seq = q, (j,) + seq
        return best, best_seq

    return rec(start, 0)


def greedy_action(solution: DpSolution, state: PlantState, t: int) -> tuple[float, int]:
    """Interpolated-Q argmin at a continuous state; returns (command, clamps)."""
    if not 0 <= t < solution.horizon:
        raise ValueError(f"step {t} outside horizon {solution.horizon}")
    cfg = solution.env_cfg
    plant = cfg.plant
    vals = solution.actions.values
    v_next = np.asarray(solution.values[t + 1], dtype=np.float64)
    best = math.inf
    best_u = 0.0
    clamps = 0
    for j in solution.actions.evaluation_order():
        u = float(vals[j])
        nxt = plant_step(state, u, plant)
        stage = cfg.alpha * abs(nxt.e) / cfg.e_nmax + cfg.beta * abs(u) / plant.u_max
        tail, esc = interpolate(v_next, solution.grid.axes, solution.grid.coords(nxt))
        clamps += esc
        q = stage + tail
        if q < best:
            best, best_u = q, u
    return best_u, clamps


@dataclass
class DpRollout:
    """Greedy rollout of a solved table plus boundary-clamp accounting."""

    result: RolloutResult
    clamped_lookups: int


def dp_rollout(solution: DpSolution) -> DpRollout:
    """Run the greedy interpolated-Q policy through the exact plant."""
    episode_len = solution.env_cfg.scenario.episode_len
    if solution.horizon != episode_len:
        raise ValueError(
            f"solution horizon {solution.horizon} != episode length {episode_len}"
        )
    env = CarFollowingEnv(solution.env_cfg)
    clamps = [0]

    def policy(_obs: np.ndarray) -> float:
        u, c = greedy_action(solution, env.state, env.step_idx)
        clamps[0] += c
        return u

    result = rollout(env, policy)
    return DpRollout(result, clamps[0])


# Default per-case grid resolutions.  The kinematic and lag-only cases carry
# fine grids; the delay cases trade action-set resolution for the extra
# pending axes so the full value stack stays within desk-scale memory.
DEFAULT_RESOLUTION = {
    1: {"ne": 201, "nv": 101, "na": None, "m": 27},
    2: {"ne": 141, "nv": 71, "na": None, "m": 9},
    3: {"ne": 201, "nv": 101, "na": 27, "m": 27},
    4: {"ne": 81, "nv": 41, "na": 9, "m": 7},
}
E_RANGE = (-10.0, 10.0)
V_RANGE = (-5.0, 5.0)


def _scaled(n: int, scale: float) -> int:
    return max(2, int(round((n - 1) * scale)) + 1)


def default_grid(cfg: EnvConfig, scale: float = 1.0) -> tuple[Grid, ActionSet]:
    """Default grid and action set for the config's case, optionally rescaled.

    ``scale`` multiplies the point density of the continuous axes only; the
    action set (and with it the pending axes) is untouched.
    """
    res = DEFAULT_RESOLUTION[cfg.case]
    actions = ActionSet(cfg.plant.u_max, res["m"])
    e_axis = Axis.from_range(*E_RANGE, _scaled(res["ne"], scale))
    v_axis = Axis.from_range(*V_RANGE, _scaled(res["nv"], scale))
    a_axis = None
    if cfg.plant.lag_enabled:
        a_axis = Axis.from_range(-cfg.plant.u_max, cfg.plant.u_max, _scaled(res["na"], scale))
    pending = (actions.axis,) * cfg.plant.k
    return Grid(e=e_axis, v=v_axis, a=a_axis, pending=pending), actions


def exact_reachable_grid(
    start: PlantState,
    actions: ActionSet,
    horizon: int,
    cfg: EnvConfig,
    max_axis_points: int = 100_000,
) -> Grid:
    """Lattice covering every state reachable within ``horizon`` steps, exactly.

    Enumerates all reachable states through the real plant, infers each
    axis's lattice pitch from the smallest gap, and verifies every reachable
    value sits on a node bitwise.  Intended for small dyadic test instances
    where plant arithmetic is exact; raises if the values do not form a
    lattice.
    """
    plant = cfg.plant
    vals = actions.values
    states = {(start.e, start.e_dot, start.a, start.pending)}
    frontier = [start]
    for _ in range(horizon):
        nxt_frontier = []
        seen_level = set()
        for st in frontier:
            for j in range(actions.m):
                nxt = plant_step(st, float(vals[j]), plant)
                key = (nxt.e, nxt.e_dot, nxt.a, nxt.pending)
                if key not in seen_level:
                    seen_level.add(key)
                    nxt_frontier.append(nxt)
        states.update(seen_level)
        frontier = nxt_frontier

    def lattice(values_set: set[float], name: str) -> Axis:
        pts = sorted(values_set)
        if len(pts) == 1:
            # Degenerate axis: pad with one action-scaled pitch.
            pitch = plant.dt * actions.spacing
            return Axis(pts[0], pitch, 2)
        diffs = np.diff(pts)
        pitch = float(diffs[diffs > 0].min())
        n = int(round((pts[-1] - pts[0]) / pitch)) + 1
        if n > max_axis_points:
            raise BudgetExceededError(f"{name} lattice needs {n} points")
        axis = Axis(pts[0], pitch, n)
        node_vals = axis.points
        for vv in pts:
            i = int(round((vv - axis.lo) / pitch))
            if not (0 <= i < n and node_vals[i] == vv):
                raise GridEscapeError(
                    f"reachable {name} values do not form an exact lattice"
                )
        return axis

    e_axis = lattice({s[0] for s in states}, "error")
    v_axis = lattice({s[1] for s in states}, "error-rate")
    a_axis = lattice({s[2] for s in states}, "acceleration") if plant.lag_enabled else None
    pending = (actions.axis,) * plant.k
    return Grid(e=e_axis, v=v_axis, a=a_axis, pending=pending)


def save_solution(solution: DpSolution, path: str) -> None:
    """Persist tables with hashes of the grid/actions/config they came from."""
    from .configio import digest, to_jsonable
    from .serialize import save_bundle

    meta = {
        "kind": "dp-solution",
        "horizon": solution.horizon,
        "grid": solution.grid.describe(),
        "actions": {"u_max": solution.actions.u_max, "m": solution.actions.m},
        "env_cfg": to_jsonable(solution.env_cfg),
        "config_hash": digest(solution.env_cfg),
        "grid_hash": digest(solution.grid.describe()),
        "value_dtype": str(solution.values.dtype),
        "diagnostics": {
            "escaped_transitions_per_step": solution.diagnostics.escaped_transitions_per_step,
            "transitions_per_step": solution.diagnostics.transitions_per_step,
        },
    }
    save_bundle(path, {"values": solution.values, "policy": solution.policy}, meta)


def load_solution(path: str) -> DpSolution:
    from .configio import env_config_from_dict
    from .serialize import load_bundle

    arrays, meta = load_bundle(path)
    if meta.get("kind") != "dp-solution":
        raise ValueError(f"{path} is not a DP solution bundle")
    cfg = env_config_from_dict(meta["env_cfg"])
    gd = meta["grid"]
    axes = [Axis(d["lo"], d["spacing"], d["n"]) for d in gd["axes"]]
    ncont = 3 if gd["has_accel"] else 2
    grid = Grid(
        e=axes[0],
        v=axes[1],
        a=axes[2] if gd["has_accel"] else None,
        pending=tuple(axes[ncont:]),
    )
    actions = ActionSet(meta["actions"]["u_max"], meta["actions"]["m"])
    diag_meta = meta["diagnostics"]
    diags = DpDiagnostics(
        escaped_transitions_per_step=diag_meta["escaped_transitions_per_step"],
        transitions_per_step=diag_meta["transitions_per_step"],
        horizon=meta["horizon"],
    )
    return DpSolution(
        grid, actions, cfg, meta["horizon"], arrays["values"], arrays["policy"], diags
    )
