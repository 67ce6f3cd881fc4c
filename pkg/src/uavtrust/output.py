"""CSV/JSON outputs of a scenario run.

``trust_scores.csv`` and ``trajectories.csv`` describe the first replication
(seed ``base_seed``); ``report.json`` holds the Monte Carlo aggregates.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

from uavtrust.fleet import MissionResult
from uavtrust.scenario import MonteCarloReport, ScenarioSpec, spec_to_dict
from uavtrust.trust import TrustComponents

TRUST_COLUMNS = ["interval_index", "uav_id", "T_task", "T_ene", "T_dev", "T_total", "flagged"]
TRAJECTORY_COLUMNS = [
    "time", "uav_id",
    "expected_x", "expected_y", "expected_z",
    "actual_x", "actual_y", "actual_z",
]


def write_trust_scores(path: Path, result: Optional[MissionResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUST_COLUMNS)
        if result is None:
            return
        for v in result.verdicts:
            for uav, tc in v.trust.items():
                w.writerow([
                    v.interval_index, uav,
                    repr(tc.task_trust), repr(tc.energy_trust),
                    repr(tc.deviation_trust), repr(tc.total_trust),
                    int(v.flagged == uav),
                ])


def write_trajectories(path: Path, result: Optional[MissionResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        if result is None:
            return
        for k, t in enumerate(result.times.tolist()):
            for uav in result.uav_ids:
                e = result.expected[uav][k]
                a = result.true_position[uav][k]
                w.writerow([repr(t), uav] + [repr(float(x)) for x in (*e, *a)])


def write_report(path: Path, report: MonteCarloReport, spec: Optional[ScenarioSpec] = None) -> None:
    doc = report.to_dict()
    if spec is not None:
        doc["config"] = spec_to_dict(spec)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def emit_outputs(
    out_dir,
    report: MonteCarloReport,
    result: Optional[MissionResult],
    spec: Optional[ScenarioSpec] = None,
) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trust_scores": out / "trust_scores.csv",
        "trajectories": out / "trajectories.csv",
        "report": out / "report.json",
    }
    write_trust_scores(paths["trust_scores"], result)
    write_trajectories(paths["trajectories"], result)
    write_report(paths["report"], report, spec)
    return paths


def read_trust_scores(path) -> list:
    """Rebuild ``[(interval_index, {uav: TrustComponents}, flagged_uav_or_None)]``."""
    stream: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRUST_COLUMNS:
            raise ValueError(f"unexpected trust_scores header {reader.fieldnames}")
        for row in reader:
            idx = int(row["interval_index"])
            trust, flagged = stream.setdefault(idx, ({}, []))
            trust[row["uav_id"]] = TrustComponents(
                float(row["T_task"]), float(row["T_ene"]), float(row["T_dev"]), float(row["T_total"])
            )
            if row["flagged"] == "1":
                flagged.append(row["uav_id"])
    return [(idx, trust, flagged[0] if flagged else None) for idx, (trust, flagged) in stream.items()]
