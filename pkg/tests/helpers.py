import numpy as np

from uavtrust.fleet import MissionPlan, SimConfig

UAVS = ("uav1", "uav2", "uav3")


def square_plans(side=300.0, origin=(500.0, 500.0), alt=100.0, kind="survey"):
    """Three parallel square routes with a task at every waypoint after the start."""
    ox, oy = origin
    corners = [(0, 0), (side, 0), (side, side), (0, side)] * 4
    plans = {}
    for j, uav in enumerate(UAVS):
        wps = np.array([(ox + x + 40.0 * j, oy + y, alt) for x, y in corners])
        plans[uav] = MissionPlan(wps, [(i, kind) for i in range(1, len(wps))])
    return plans


def small_config(**kw):
    base = dict(area_side=2000.0, mission_duration=480.0, rng_seed=7)
    base.update(kw)
    return SimConfig(**base)
