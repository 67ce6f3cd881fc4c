import numpy as np
import pytest

from uavtrust.attacks import AttackSchedule, ChannelDeltas, apply_attack_effects
from uavtrust.detector import Classification, DetectorConfig
from uavtrust.fleet import (
    MissionPlan,
    Outcome,
    RoutePlanner,
    SimConfig,
    SimConfigError,
    UavState,
    WindField,
    audit_observe,
    consume_energy,
    execute_task,
    interval_steps,
    run_mission,
    step_kinematics,
)

from .helpers import UAVS, small_config, square_plans

CLUSTERS = [list(UAVS)]


def test_calm_flight_matches_expected_track():
    r = run_mission(small_config(), square_plans(), WindField(), [], CLUSTERS)
    for uav in UAVS:
        np.testing.assert_array_equal(r.true_position[uav], r.expected[uav])
    assert all(v.classification is Classification.CLEAR for v in r.verdicts)
    assert all(tc.deviation_trust < 5.0 for v in r.verdicts for tc in v.trust.values())


def test_hover_drifts_with_wind():
    plan = MissionPlan(np.array([[0.0, 0.0, 50.0]]))
    state = UavState.at_start("u", plan)
    wind = WindField(mean_wind=(5.0, 0.0, 0.0))
    for k in range(1, 4):
        state = step_kinematics(state, plan, wind, 1.0)
        assert state.true_position[0] == pytest.approx(5.0 * k)
        assert state.speed == 0.0


def test_capture_advances_cursor():
    plan = MissionPlan(np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [500.0, 0.0, 0.0]]))
    state = step_kinematics(UavState.at_start("u", plan), plan, WindField(), 1.0)
    assert state.plan_cursor == 2


def test_no_capture_outside_radius():
    plan = MissionPlan(np.array([[0.0, 0.0, 0.0], [100.0, 0.0, 0.0]]))
    state = step_kinematics(UavState.at_start("u", plan), plan, WindField(), 1.0)
    assert state.plan_cursor == 1
    assert state.true_position[0] == 10.0


@pytest.mark.parametrize(
    "speed, factor, move, expected",
    [(0.0, 1.0, 6.0, 100.0), (0.0, 1.5, 6.0, 150.0), (10.0, 1.0, 20.0, 300.0)],
)
def test_consume_energy_examples(speed, factor, move, expected):
    e = consume_energy(
        speed, WindField(energy_factor=factor), 0, 1.0,
        base_power=100.0, move_power_per_speed=move, task_energy=150.0,
    )
    assert e == expected


def test_consume_energy_channels():
    kw = dict(base_power=100.0, move_power_per_speed=0.0, task_energy=150.0)
    assert consume_energy(0.0, WindField(), 1, 1.0, **kw) == 250.0
    assert consume_energy(0.0, WindField(), 0, 1.0, deltas=ChannelDeltas(extra_power=200.0), **kw) == 300.0
    assert consume_energy(0.0, WindField(), 0, 1.0, deltas=ChannelDeltas(energy_factor=0.5), **kw) == 50.0


def test_execute_task_extremes():
    rng = np.random.default_rng(0)
    assert all(execute_task(rng, 1.0) is Outcome.SUCCESS for _ in range(200))
    assert all(execute_task(rng, 0.0) is Outcome.FAIL for _ in range(200))


def test_execute_task_rate():
    rng = np.random.default_rng(123)
    wins = sum(execute_task(rng, 0.95) is Outcome.SUCCESS for _ in range(1000))
    assert abs(wins / 1000 - 0.95) <= 0.03


def test_selfish_skip_returns_none():
    rng = np.random.default_rng(1)
    assert execute_task(rng, 1.0, ChannelDeltas(task_skip_prob=1.0)) is None


def test_audit_observe():
    rng = np.random.default_rng(5)
    assert all(audit_observe(Outcome.FAIL, rng, 0.0) is Outcome.FAIL for _ in range(100))
    assert all(audit_observe(Outcome.SUCCESS, rng, 1.0) is Outcome.UNCERTAIN for _ in range(100))
    unsure = sum(audit_observe(Outcome.SUCCESS, rng, 0.2) is Outcome.UNCERTAIN for _ in range(1000))
    assert abs(unsure / 1000 - 0.2) <= 0.04
    assert audit_observe(None, rng, 0.0) is Outcome.FAIL


def test_mission_determinism():
    cfg = SimConfig(rng_seed=99)
    wind = WindField((4.0, 1.0, 0.0), 0.3, 1.5)
    a = run_mission(cfg, RoutePlanner(), wind, [], CLUSTERS)
    b = run_mission(cfg, RoutePlanner(), wind, [], CLUSTERS)
    for uav in UAVS:
        for field in ("true_position", "reported", "energy", "observed"):
            np.testing.assert_array_equal(getattr(a, field)[uav], getattr(b, field)[uav])
    assert [(v.flagged, v.trust) for v in a.verdicts] == [(v.flagged, v.trust) for v in b.verdicts]
    assert list(a.telemetry()) == list(b.telemetry())


def test_three_verdicts_for_twelve_minutes():
    cfg = small_config(mission_duration=720.0)
    r = run_mission(cfg, square_plans(), WindField(), [], CLUSTERS, DetectorConfig(evaluation_interval=240.0))
    assert [v.interval_index for v in r.verdicts] == [0, 1, 2]


def test_energy_non_decreasing():
    r = run_mission(SimConfig(rng_seed=3), RoutePlanner(), WindField((3, 0, 0), 0.5, 1.2), [], CLUSTERS)
    for uav in UAVS:
        assert np.all(np.diff(r.energy[uav]) >= 0)


def test_telemetry_records():
    r = run_mission(small_config(), square_plans(), WindField(), [], CLUSTERS)
    recs = list(r.telemetry())
    assert len(recs) == 480 * 3
    assert recs[0].time == 1.0 and recs[0].uav == "uav1"
    total = sum(rec.interval_energy for rec in recs if rec.uav == "uav2")
    assert total == pytest.approx(r.energy["uav2"][-1])
    assert any(rec.task_events for rec in recs)


def test_planner_routes_stay_in_area():
    rng = np.random.default_rng(11)
    plans = RoutePlanner().generate(rng, 1500.0, [["a", "b", "c"], ["d", "e", "f"]], 12_000.0)
    assert set(plans) == set("abcdef")
    for p in plans.values():
        p.check_bounds(1500.0)
    # cluster members share tasks and route shape
    assert plans["a"].tasks == plans["b"].tasks
    np.testing.assert_allclose(plans["b"].waypoints - plans["a"].waypoints, [[40.0, 0, 0]] * len(plans["a"].waypoints))


def test_config_errors():
    with pytest.raises(SimConfigError):
        SimConfig(timestep=0.0)
    with pytest.raises(SimConfigError):
        WindField(energy_factor=0.5)
    with pytest.raises(SimConfigError):
        MissionPlan(np.zeros((2, 3)), [(5, "survey")])
    with pytest.raises(SimConfigError):
        MissionPlan(np.zeros((2, 3)), [(1, "juggling")])
    with pytest.raises(SimConfigError):
        interval_steps(DetectorConfig(evaluation_interval=2.5), 1.0)
    with pytest.raises(SimConfigError, match="K >= 3"):
        run_mission(small_config(), {u: p for u, p in square_plans().items() if u != "uav3"}, WindField())
    with pytest.raises(SimConfigError):
        run_mission(SimConfig(area_side=100.0), square_plans(), WindField(), [], CLUSTERS)


def test_step_operations_reproduce_mission():
    """Driving the public per-step operations reproduces the kernel's tracks and energy."""
    cfg = small_config(task_success_prob=1.0, obs_uncertainty_prob=0.0)
    wind = WindField((2.0, -1.0, 0.0), 0.0, 1.3)
    attack = AttackSchedule("uav1", "gps-spoofing", 60, 300, spoof_heading=0.7)
    plans = square_plans()
    r = run_mission(cfg, plans, wind, [attack], CLUSTERS)

    plan = plans["uav1"]
    state = UavState.at_start("uav1", plan)
    energy = 0.0
    task_energy = dict(zip(range(len(plan.waypoints)), plan.task_arrays(cfg.task_energy)[1]))
    for k in range(cfg.n_steps):
        deltas = apply_attack_effects(state, attack, k * cfg.timestep)
        before = state.plan_cursor
        state = step_kinematics(state, plan, wind, cfg.timestep, deltas=deltas, gust=(0.0, 0.0, 0.0))
        captured = state.plan_cursor > before
        e = consume_energy(
            state.speed, wind, 0, cfg.timestep, base_power=cfg.base_power,
            move_power_per_speed=cfg.move_power_per_speed, task_energy=cfg.task_energy, deltas=deltas,
        )
        if captured:
            e = e + task_energy[before]
        energy = energy + e
        np.testing.assert_array_equal(state.true_position, r.true_position["uav1"][k + 1])
        assert energy == r.energy["uav1"][k + 1]
