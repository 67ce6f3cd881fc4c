# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled flight kernel. Port of ``_pykernels.fly``; keep the two in lockstep."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef enum:
    NO_ATTACK = 0
    DDOS = 1
    GPS = 2
    MITM = 3
    SELFISH = 4


def fly(
    waypoints,
    task_energy,
    has_task,
    double dt,
    double cruise,
    double capture_radius,
    double base_power,
    double move_power,
    double energy_factor,
    double p_success,
    double p_uncertain,
    wind,
    gusts,
    uniforms,
    int attack_kind=0,
    long attack_start=0,
    long attack_end=0,
    double flood_power=0.0,
    spoof_velocity=(0.0, 0.0, 0.0),
    double spoof_speed=0.0,
    falsify=False,
    double drop_prob=0.0,
    double skip_prob=0.0,
    double selfish_factor=1.0,
):
    cdef const double[:, ::1] wps = np.ascontiguousarray(waypoints, dtype=np.float64)
    cdef const double[::1] tenergy = np.ascontiguousarray(task_energy, dtype=np.float64)
    cdef const cnp.int8_t[::1] htask = np.ascontiguousarray(has_task, dtype=np.int8)
    cdef const double[:, ::1] gl = np.ascontiguousarray(gusts, dtype=np.float64)
    cdef const double[:, ::1] ul = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n = gl.shape[0]
    cdef Py_ssize_t nw = wps.shape[0]
    cdef double windx = wind[0], windy = wind[1], windz = wind[2]
    cdef double spx = spoof_velocity[0], spy = spoof_velocity[1], spz = spoof_velocity[2]
    cdef bint fals = bool(falsify)

    true_np = np.empty((n + 1, 3), dtype=np.float64)
    rep_np = np.empty((n + 1, 3), dtype=np.float64)
    energy_np = np.empty(n + 1, dtype=np.float64)
    tout_np = np.full(n, -1, dtype=np.int8)
    obs_np = np.full(n, -1, dtype=np.int8)
    twp_np = np.full(n, -1, dtype=np.int32)
    cdef double[:, ::1] true_pos = true_np
    cdef double[:, ::1] rep_pos = rep_np
    cdef double[::1] energy = energy_np
    cdef cnp.int8_t[::1] true_out = tout_np
    cdef cnp.int8_t[::1] observed = obs_np
    cdef int[::1] task_wp = twp_np

    cdef double px = wps[0, 0], py = wps[0, 1], pz = wps[0, 2]
    cdef double ox = 0.0, oy = 0.0, oz = 0.0
    cdef double qx, qy, qz, cx, cy, cz, sx, sy, sz
    cdef double dx, dy, dz, dist, v, s, speed, move, e, ps
    cdef double e_total = 0.0
    cdef Py_ssize_t cursor = 1
    cdef Py_ssize_t k
    cdef bint active, gps_active
    cdef int outcome

    true_pos[0, 0] = px
    true_pos[0, 1] = py
    true_pos[0, 2] = pz
    rep_pos[0, 0] = px
    rep_pos[0, 1] = py
    rep_pos[0, 2] = pz
    energy[0] = 0.0

    for k in range(n):
        active = attack_kind != NO_ATTACK and attack_start <= k and k < attack_end
        gps_active = active and attack_kind == GPS
        if attack_kind == GPS and k >= attack_end:
            ox = 0.0
            oy = 0.0
            oz = 0.0

        qx = px - ox
        qy = py - oy
        qz = pz - oz
        cx = 0.0
        cy = 0.0
        cz = 0.0
        speed = 0.0
        if cursor < nw:
            dx = wps[cursor, 0] - qx
            dy = wps[cursor, 1] - qy
            dz = wps[cursor, 2] - qz
            dist = sqrt(dx * dx + dy * dy + dz * dz)
            if dist > 0.0:
                v = dist / dt
                speed = v if v < cruise else cruise
                s = speed / dist
                cx = dx * s
                cy = dy * s
                cz = dz * s

        if gps_active:
            sx = spx
            sy = spy
            sz = spz
        else:
            sx = 0.0
            sy = 0.0
            sz = 0.0
        px = px + (((cx + sx) + windx) + gl[k, 0]) * dt
        py = py + (((cy + sy) + windy) + gl[k, 1]) * dt
        pz = pz + (((cz + sz) + windz) + gl[k, 2]) * dt
        if gps_active:
            ox = ox + sx * dt
            oy = oy + sy * dt
            oz = oz + sz * dt
        qx = px - ox
        qy = py - oy
        qz = pz - oz

        if gps_active:
            move = speed + spoof_speed
        else:
            move = speed
        e = (base_power + move_power * move) * energy_factor * dt
        if active and attack_kind == SELFISH:
            e = e * selfish_factor
        if active and attack_kind == DDOS:
            e = e + flood_power * dt

        if cursor < nw:
            dx = wps[cursor, 0] - qx
            dy = wps[cursor, 1] - qy
            dz = wps[cursor, 2] - qz
            if sqrt(dx * dx + dy * dy + dz * dz) <= capture_radius:
                if htask[cursor]:
                    task_wp[k] = <int>cursor
                    if active and attack_kind == SELFISH and ul[k, 0] < skip_prob:
                        outcome = 0
                    else:
                        e = e + tenergy[cursor]
                        if active and attack_kind == MITM:
                            ps = p_success * (1.0 - drop_prob)
                        else:
                            ps = p_success
                        outcome = 1 if ul[k, 1] < ps else 0
                    true_out[k] = outcome
                    if ul[k, 2] < p_uncertain:
                        observed[k] = 2
                    elif outcome == 1:
                        observed[k] = 0
                    else:
                        observed[k] = 1
                cursor += 1

        e_total = e_total + e
        true_pos[k + 1, 0] = px
        true_pos[k + 1, 1] = py
        true_pos[k + 1, 2] = pz
        if gps_active and fals:
            rep_pos[k + 1, 0] = qx
            rep_pos[k + 1, 1] = qy
            rep_pos[k + 1, 2] = qz
        else:
            rep_pos[k + 1, 0] = px
            rep_pos[k + 1, 1] = py
            rep_pos[k + 1, 2] = pz
        energy[k + 1] = e_total

    return true_np, rep_np, energy_np, tout_np, obs_np, twp_np
