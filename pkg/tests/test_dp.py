import numpy as np
import pytest

from acclab import dp
from acclab.env import EnvConfig
from acclab.plant import PlantConfig, PlantState, ScenarioConfig, initial_state


def dyadic_case(case, horizon, phi=0.25, tau=0.25, e0=0.25, edot0=0.5):
    """Instance whose plant arithmetic is exact in binary floating point."""
    plant = PlantConfig(dt=0.125, tau=tau, phi=phi, u_max=1.0)
    scenario = ScenarioConfig(v_lead=2.0, v_follow0=2.0 - edot0, e0=e0, episode_len=horizon)
    return EnvConfig.for_case(case, plant=plant, scenario=scenario)


def test_action_set_validation():
    with pytest.raises(ValueError):
        dp.ActionSet(2.6, 4)  # even
    with pytest.raises(ValueError):
        dp.ActionSet(2.6, 1)
    with pytest.raises(ValueError):
        dp.ActionSet(0.0, 5)
    acts = dp.ActionSet(2.6, 27)
    assert acts.values[13] == 0.0
    assert acts.values[0] == -2.6 and acts.values[-1] == 2.6
    assert np.all(np.diff(acts.values) > 0)


def test_action_evaluation_order_prefers_small_then_negative():
    acts = dp.ActionSet(1.0, 5)  # values [-1, -0.5, 0, 0.5, 1]
    assert acts.evaluation_order() == [2, 1, 3, 0, 4]


def test_axis_points_and_validation():
    ax = dp.Axis.from_range(-10.0, 10.0, 201)
    pts = ax.points
    assert len(pts) == 201 and pts[0] == -10.0 and ax.spacing == 0.1
    with pytest.raises(ValueError):
        dp.Axis(0.0, 0.1, 1)
    with pytest.raises(ValueError):
        dp.Axis(0.0, -0.1, 5)


def test_interpolate_exact_at_nodes_and_midpoints():
    ax = dp.Axis(0.0, 0.5, 5)
    vals = np.array([1.0, 3.0, -2.0, 7.0, 4.0])
    for i, p in enumerate(ax.points):
        v, clamped = dp.interpolate(vals, (ax,), [p])
        assert v == vals[i] and clamped == 0
    v, _ = dp.interpolate(vals, (ax,), [0.25])
    assert v == pytest.approx(2.0)
    # clamped beyond the ends
    v, clamped = dp.interpolate(vals, (ax,), [9.0])
    assert v == vals[-1] and clamped == 1
    v, clamped = dp.interpolate(vals, (ax,), [-9.0])
    assert v == vals[0] and clamped == 1


def test_interpolate_multi_axis_midpoint():
    axes = (dp.Axis(0.0, 1.0, 2), dp.Axis(0.0, 1.0, 2))
    vals = np.array([[0.0, 2.0], [4.0, 6.0]])
    v, _ = dp.interpolate(vals, axes, [0.5, 0.5])
    assert v == pytest.approx(3.0)


def test_horizon_zero_value_identically_zero():
    cfg = dyadic_case(1, 1, phi=0.0)
    actions = dp.ActionSet(1.0, 3)
    grid = dp.Grid(e=dp.Axis(-1.0, 0.25, 9), v=dp.Axis(-1.0, 0.25, 9))
    sol = dp.backward_induction(grid, actions, 0, cfg)
    assert np.all(sol.values == 0.0)
    assert sol.policy.shape == (0, 9, 9)
    assert sol.start_value(PlantState(e=0.0, e_dot=0.0)) == 0.0


def test_horizon_one_equilibrium_prefers_zero_action():
    cfg = dyadic_case(1, 1, phi=0.0, e0=0.0, edot0=0.0)
    actions = dp.ActionSet(1.0, 3)
    grid = dp.Grid(e=dp.Axis(-1.0, 0.25, 9), v=dp.Axis(-1.0, 0.25, 9))
    sol = dp.backward_induction(grid, actions, 1, cfg)
    mid = (4, 4)  # (e=0, e_dot=0)
    assert sol.values[0][mid] == 0.0
    assert sol.actions.values[sol.policy[0][mid]] == 0.0


def test_brute_force_trivial_and_budget():
    cfg = dyadic_case(1, 1, phi=0.0, e0=0.0, edot0=0.0)
    actions = dp.ActionSet(1.0, 3)
    cost, seq = dp.brute_force_cost(PlantState(e=0.0, e_dot=0.0), actions, 1, cfg)
    assert cost == 0.0 and seq == (1,)
    with pytest.raises(dp.BudgetExceededError):
        dp.brute_force_cost(PlantState(e=0.0, e_dot=0.0), actions, 20, cfg)


def test_brute_force_horizon_two_matches_hand_enumeration():
    cfg = dyadic_case(1, 2, phi=0.0)
    actions = dp.ActionSet(1.0, 3)
    start = PlantState(e=0.25, e_dot=0.5)
    best = np.inf
    from acclab.plant import plant_step

    for j0 in range(3):
        s1 = plant_step(start, float(actions.values[j0]), cfg.plant)
        c0 = cfg.alpha * abs(s1.e) / cfg.e_nmax + cfg.beta * abs(actions.values[j0]) / 1.0
        for j1 in range(3):
            s2 = plant_step(s1, float(actions.values[j1]), cfg.plant)
            c1 = cfg.alpha * abs(s2.e) / cfg.e_nmax + cfg.beta * abs(actions.values[j1]) / 1.0
            best = min(best, c0 + c1)
    cost, _ = dp.brute_force_cost(start, actions, 2, cfg)
    assert cost == pytest.approx(best, rel=1e-15)


@pytest.mark.parametrize("case,horizon,m", [(1, 3, 3), (2, 4, 3), (4, 2, 3)])
def test_kernel_matches_naive_oracle_bitwise(case, horizon, m):
    # the scalar oracle steps the real plant, so agreement also certifies the
    # kernel's pending-queue shifts against plant_step
    cfg = dyadic_case(case, horizon, phi=0.25 if case != 4 else 0.125)
    actions = dp.ActionSet(1.0, m)
    start = initial_state(cfg.scenario, cfg.plant)
    grid = dp.exact_reachable_grid(start, actions, horizon, cfg)
    sol = dp.backward_induction(grid, actions, horizon, cfg)
    naive_vals, naive_pol = dp.naive_backward_induction(grid, actions, horizon, cfg)
    assert np.array_equal(naive_vals, sol.values)
    assert np.array_equal(naive_pol.astype(sol.policy.dtype), sol.policy)


def test_exact_grid_dp_equals_brute_force_randomized():
    rng = np.random.default_rng(42)
    checked = 0
    for trial in range(8):
        case = int(rng.choice([1, 2, 3, 4]))
        horizon = int(rng.integers(2, 4 if case == 3 else 5))
        m = int(rng.choice([3, 5]))
        e0 = float(rng.integers(-8, 9)) * 0.03125
        edot0 = float(rng.integers(-8, 9)) * 0.0625
        cfg = dyadic_case(
            case,
            horizon,
            phi=0.125 if case in (2, 4) else 0.0,
            e0=e0,
            edot0=edot0,
        )
        actions = dp.ActionSet(1.0, m)
        start = initial_state(cfg.scenario, cfg.plant)
        grid = dp.exact_reachable_grid(start, actions, horizon, cfg)
        sol = dp.backward_induction(grid, actions, horizon, cfg)
        cost, _ = dp.brute_force_cost(start, actions, horizon, cfg)
        assert sol.start_value() == cost, (case, horizon, m, e0, edot0)
        checked += 1
    assert checked == 8


def test_value_monotone_in_horizon():
    cfg = dyadic_case(1, 6, phi=0.0)
    actions = dp.ActionSet(1.0, 3)
    grid = dp.Grid(e=dp.Axis(-2.0, 0.125, 33), v=dp.Axis(-2.0, 0.125, 33))
    sol = dp.backward_induction(grid, actions, 6, cfg)
    for t in range(6):
        assert np.all(sol.values[t] >= sol.values[t + 1])
    assert np.all(sol.values >= 0.0)


def test_dp_rollout_equilibrium_is_identically_zero():
    plant = PlantConfig(dt=0.125, phi=0.0, u_max=1.0)
    scenario = ScenarioConfig(v_lead=2.0, v_follow0=2.0, e0=0.0, episode_len=20)
    cfg = EnvConfig.for_case(1, plant=plant, scenario=scenario)
    actions = dp.ActionSet(1.0, 5)
    grid = dp.Grid(e=dp.Axis(-1.0, 0.125, 17), v=dp.Axis(-1.0, 0.125, 17))
    sol = dp.backward_induction(grid, actions, 20, cfg)
    ro = dp.dp_rollout(sol)
    assert np.all(ro.result.trajectory.e == 0.0)
    assert np.all(ro.result.trajectory.u == 0.0)
    assert ro.result.episode_cost == 0.0


def test_dp_rollout_cost_close_to_reported_value():
    cfg = EnvConfig.for_case(
        1, scenario=ScenarioConfig(episode_len=80)
    )
    grid, actions = dp.default_grid(cfg, scale=0.25)
    sol = dp.backward_induction(grid, actions, 80, cfg)
    ro = dp.dp_rollout(sol)
    v0 = sol.start_value()
    assert ro.result.episode_cost == pytest.approx(v0, rel=0.25)


def test_grid_refinement_does_not_raise_cost_much():
    cfg = EnvConfig.for_case(1, scenario=ScenarioConfig(episode_len=60))
    coarse_grid, actions = dp.default_grid(cfg, scale=0.2)
    fine_grid, _ = dp.default_grid(cfg, scale=0.4)
    v_coarse = dp.backward_induction(coarse_grid, actions, 60, cfg).start_value()
    v_fine = dp.backward_induction(fine_grid, actions, 60, cfg).start_value()
    assert v_fine <= v_coarse * 1.05


def test_setup_validation_errors():
    cfg = dyadic_case(2, 3)
    actions = dp.ActionSet(1.0, 3)
    no_pending = dp.Grid(e=dp.Axis(-1.0, 0.25, 9), v=dp.Axis(-1.0, 0.25, 9))
    with pytest.raises(dp.GridEscapeError):
        dp.backward_induction(no_pending, actions, 3, cfg)
    wrong_pending = dp.Grid(
        e=dp.Axis(-1.0, 0.25, 9),
        v=dp.Axis(-1.0, 0.25, 9),
        pending=(dp.Axis(-1.0, 0.5, 5),) * 2,
    )
    with pytest.raises(dp.GridEscapeError):
        dp.backward_induction(wrong_pending, actions, 3, cfg)
    cfg3 = dyadic_case(3, 2, phi=0.0)
    no_accel = dp.Grid(e=dp.Axis(-1.0, 0.25, 9), v=dp.Axis(-1.0, 0.25, 9))
    with pytest.raises(dp.GridEscapeError):
        dp.backward_induction(no_accel, actions, 2, cfg3)


def test_table_budget_guard():
    cfg = dyadic_case(1, 3, phi=0.0)
    actions = dp.ActionSet(1.0, 3)
    grid = dp.Grid(e=dp.Axis(-1.0, 0.001, 2001), v=dp.Axis(-1.0, 0.001, 2001))
    with pytest.raises(dp.BudgetExceededError):
        dp.backward_induction(grid, actions, 3, cfg, max_table_bytes=1_000_000)


def test_escape_diagnostics_counts_boundary_transitions():
    cfg = dyadic_case(1, 2, phi=0.0)
    actions = dp.ActionSet(1.0, 3)
    # grid so tight that edge states must escape
    grid = dp.Grid(e=dp.Axis(-0.25, 0.125, 5), v=dp.Axis(-0.5, 0.25, 5))
    sol = dp.backward_induction(grid, actions, 2, cfg)
    assert sol.diagnostics.escaped_transitions_per_step > 0
    assert 0 < sol.diagnostics.escape_fraction < 1


def test_solution_round_trip(tmp_path):
    cfg = dyadic_case(2, 3)
    actions = dp.ActionSet(1.0, 3)
    start = initial_state(cfg.scenario, cfg.plant)
    grid = dp.exact_reachable_grid(start, actions, 3, cfg)
    sol = dp.backward_induction(grid, actions, 3, cfg)
    path = str(tmp_path / "tables.npz")
    dp.save_solution(sol, path)
    loaded = dp.load_solution(path)
    assert np.array_equal(loaded.values, sol.values)
    assert np.array_equal(loaded.policy, sol.policy)
    assert loaded.horizon == sol.horizon
    assert loaded.grid.shape == sol.grid.shape
    assert loaded.env_cfg == sol.env_cfg
    assert loaded.start_value() == sol.start_value()
    with pytest.raises(ValueError):
        dp.load_solution(__file__)  # not a bundle at all


def test_case2_default_pipeline_smoke():
    # delay-only case at reduced resolution: solve, roll out, beat doing nothing
    cfg = EnvConfig.for_case(2, scenario=ScenarioConfig(episode_len=60))
    grid, actions = dp.default_grid(cfg, scale=0.25)
    sol = dp.backward_induction(grid, actions, 60, cfg, value_dtype=np.float32)
    ro = dp.dp_rollout(sol)
    from acclab.env import CarFollowingEnv, rollout as env_rollout

    zero = env_rollout(CarFollowingEnv(cfg), lambda obs: 0.0)
    assert ro.result.episode_cost < 0.5 * zero.episode_cost
    assert abs(ro.result.trajectory.e[-1]) < abs(zero.trajectory.e[-1])


def test_default_grid_shapes():
    for case, ncont in ((1, 2), (2, 2), (3, 3), (4, 3)):
        cfg = EnvConfig.for_case(case)
        grid, actions = dp.default_grid(cfg)
        k = cfg.plant.k
        assert len(grid.shape) == ncont + k
        for ax in grid.pending:
            assert np.array_equal(ax.points, actions.values)
    small, _ = dp.default_grid(EnvConfig.for_case(1), scale=0.1)
    assert small.e.n == 21
