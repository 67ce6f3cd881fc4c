"""Pure-Python flight kernel.

Reference implementation of the per-step UAV loop. ``_ckernels.pyx`` is a
line-for-line port; both must perform the same floating-point operations in
the same order so that results are bit-identical across backends.
"""

import math

import numpy as np

NO_ATTACK, DDOS, GPS, MITM, SELFISH = 0, 1, 2, 3, 4
OBS_SUCCESS, OBS_FAIL, OBS_UNCERTAIN = 0, 1, 2


def fly(
    waypoints,
    task_energy,
    has_task,
    dt,
    cruise,
    capture_radius,
    base_power,
    move_power,
    energy_factor,
    p_success,
    p_uncertain,
    wind,
    gusts,
    uniforms,
    attack_kind=NO_ATTACK,
    attack_start=0,
    attack_end=0,
    flood_power=0.0,
    spoof_velocity=(0.0, 0.0, 0.0),
    spoof_speed=0.0,
    falsify=False,
    drop_prob=0.0,
    skip_prob=0.0,
    selfish_factor=1.0,
):
    """Step one UAV through ``len(gusts)`` steps of its plan.

    Returns ``(true_pos, reported_pos, energy, true_outcome, observed, task_wp)``:
    positions and cumulative energy have ``n + 1`` rows (row 0 is the start);
    the per-step task arrays hold -1 when no task completed in that step.
    """
    wps = np.asarray(waypoints, dtype=np.float64).tolist()
    tenergy = np.asarray(task_energy, dtype=np.float64).tolist()
    htask = np.asarray(has_task).astype(bool).tolist()
    gl = np.asarray(gusts, dtype=np.float64).tolist()
    ul = np.asarray(uniforms, dtype=np.float64).tolist()
    n = len(gl)
    nw = len(wps)
    windx, windy, windz = (float(v) for v in wind)
    spx, spy, spz = (float(v) for v in spoof_velocity)
    falsify = bool(falsify)

    px, py, pz = wps[0]
    ox = oy = oz = 0.0
    cursor = 1
    e_total = 0.0

    true_pos = [(px, py, pz)]
    rep_pos = [(px, py, pz)]
    energy = [0.0]
    true_out = [-1] * n
    observed = [-1] * n
    task_wp = [-1] * n

    for k in range(n):
        active = attack_kind != NO_ATTACK and attack_start <= k < attack_end
        gps_active = active and attack_kind == GPS
        if attack_kind == GPS and k >= attack_end:
            ox = oy = oz = 0.0

        qx = px - ox
        qy = py - oy
        qz = pz - oz
        cx = cy = cz = 0.0
        speed = 0.0
        if cursor < nw:
            w = wps[cursor]
            dx = w[0] - qx
            dy = w[1] - qy
            dz = w[2] - qz
            dist = math.sqrt(dx * dx + dy * dy + dz * dz)
            if dist > 0.0:
                v = dist / dt
                speed = v if v < cruise else cruise
                s = speed / dist
                cx = dx * s
                cy = dy * s
                cz = dz * s

        if gps_active:
            sx, sy, sz = spx, spy, spz
        else:
            sx = sy = sz = 0.0
        g = gl[k]
        px = px + (((cx + sx) + windx) + g[0]) * dt
        py = py + (((cy + sy) + windy) + g[1]) * dt
        pz = pz + (((cz + sz) + windz) + g[2]) * dt
        if gps_active:
            ox = ox + sx * dt
            oy = oy + sy * dt
            oz = oz + sz * dt
        qx = px - ox
        qy = py - oy
        qz = pz - oz

        move = speed + spoof_speed if gps_active else speed
        e = (base_power + move_power * move) * energy_factor * dt
        if active and attack_kind == SELFISH:
            e = e * selfish_factor
        if active and attack_kind == DDOS:
            e = e + flood_power * dt

        if cursor < nw:
            w = wps[cursor]
            dx = w[0] - qx
            dy = w[1] - qy
            dz = w[2] - qz
            if math.sqrt(dx * dx + dy * dy + dz * dz) <= capture_radius:
                if htask[cursor]:
                    u = ul[k]
                    task_wp[k] = cursor
                    if active and attack_kind == SELFISH and u[0] < skip_prob:
                        outcome = 0
                    else:
                        e = e + tenergy[cursor]
                        if active and attack_kind == MITM:
                            ps = p_success * (1.0 - drop_prob)
                        else:
                            ps = p_success
                        outcome = 1 if u[1] < ps else 0
                    true_out[k] = outcome
                    if u[2] < p_uncertain:
                        observed[k] = OBS_UNCERTAIN
                    else:
                        observed[k] = OBS_SUCCESS if outcome == 1 else OBS_FAIL
                cursor += 1

        e_total = e_total + e
        true_pos.append((px, py, pz))
        if gps_active and falsify:
            rep_pos.append((qx, qy, qz))
        else:
            rep_pos.append((px, py, pz))
        energy.append(e_total)

    return (
        np.array(true_pos, dtype=np.float64),
        np.array(rep_pos, dtype=np.float64),
        np.array(energy, dtype=np.float64),
        np.array(true_out, dtype=np.int8),
        np.array(observed, dtype=np.int8),
        np.array(task_wp, dtype=np.int32),
    )
