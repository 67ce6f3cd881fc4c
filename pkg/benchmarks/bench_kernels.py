"""Compare the compiled and pure-Python flight kernels.

    python3 benchmarks/bench_kernels.py [--missions N]

Times single-UAV kernel calls on a full default-length mission, then a
whole 200-replication scenario under each backend (in a subprocess, since
the backend is fixed at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from uavtrust import _pykernels, kernels
from uavtrust.fleet import RoutePlanner, SimConfig

SCENARIO_SNIPPET = (
    "import time\n"
    "from uavtrust import kernels\n"
    "from uavtrust.scenario import bundled_scenario_path, load_scenario, run_monte_carlo\n"
    "spec = load_scenario(bundled_scenario_path('wind+gps-spoof'))\n"
    "t = time.perf_counter(); run_monte_carlo(spec); print(kernels.BACKEND, time.perf_counter() - t)\n"
)


def kernel_inputs(seed=0):
    cfg = SimConfig()
    rng = np.random.default_rng(seed)
    plan = RoutePlanner().generate(rng, 2000.0, [["a", "b", "c"]], cfg.mission_duration * cfg.cruise_speed)["a"]
    has_task, task_energy = plan.task_arrays(cfg.task_energy)
    n = cfg.n_steps
    args = (
        plan.waypoints, task_energy, has_task, cfg.timestep, cfg.cruise_speed, cfg.capture_radius,
        cfg.base_power, cfg.move_power_per_speed, 1.5, cfg.task_success_prob, cfg.obs_uncertainty_prob,
        (4.0, 1.0, 0.0), rng.standard_normal((n, 3)) * 0.3, rng.random((n, 3)),
    )
    kw = dict(attack_kind=2, attack_start=0, attack_end=n, spoof_velocity=(2.0, 0.0, 0.0), spoof_speed=2.0)
    return args, kw


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--missions", type=int, default=200, help="kernel calls per backend")
    opts = parser.parse_args()

    args, kw = kernel_inputs()
    backends = kernels.available_backends()
    print(f"kernel: one UAV, {len(args[-1])} steps, {opts.missions} calls")
    timings = {}
    for name, mod in backends.items():
        best = min(timeit.repeat(lambda: mod.fly(*args, **kw), number=opts.missions, repeat=3))
        timings[name] = best / opts.missions
        print(f"  {name:7s} {timings[name] * 1e3:8.3f} ms/call")
    if "cython" in timings:
        print(f"  speedup {timings['python'] / timings['cython']:.1f}x")
        same = all(np.array_equal(a, b) for a, b in zip(_pykernels.fly(*args, **kw), backends["cython"].fly(*args, **kw)))
        print(f"  bit-identical results: {same}")

    print("scenario: wind+gps-spoof, 200 replications")
    for force in ("0", "1"):
        env = dict(os.environ, UAVTRUST_PURE_PYTHON=force)
        out = subprocess.run([sys.executable, "-c", SCENARIO_SNIPPET], env=env, capture_output=True, text=True, check=True)
        name, seconds = out.stdout.split()
        print(f"  {name:7s} {float(seconds):8.2f} s")


if __name__ == "__main__":
    main()
