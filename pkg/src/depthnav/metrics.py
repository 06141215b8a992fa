"""Quantitative evaluation indicators: interventions and velocity decrease.

An intervention is a collision or a stuck event (events closer than 2 s
merge into one).  The velocity-decrease percentage compares mean commanded
linear velocity near a visible pedestrian against pedestrian-free driving;
it is independent of pedestrian behavior, unlike minimum-distance style
metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

EVALLOG_FORMAT = "depthnav-evallog"
EVALLOG_VERSION = 1

REFRACTORY_S = 2.0
NEAR_PED_DIST = 3.0


@dataclass(frozen=True)
class EvalStep:
    t: float
    pose: tuple  # (x, y, heading)
    v: float  # commanded linear velocity, m/s
    w: float  # commanded angular velocity, rad/s
    command: str
    ped_distance: Optional[float] = None  # center-to-center minus radius, m
    ped_in_fov: bool = False
    collision: bool = False
    stuck: bool = False

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "pose": list(self.pose),
            "v": self.v,
            "w": self.w,
            "command": self.command,
            "ped_distance": self.ped_distance,
            "ped_in_fov": self.ped_in_fov,
            "collision": self.collision,
            "stuck": self.stuck,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalStep":
        return cls(
            t=d["t"],
            pose=tuple(d["pose"]),
            v=d["v"],
            w=d["w"],
            command=d["command"],
            ped_distance=d.get("ped_distance"),
            ped_in_fov=d.get("ped_in_fov", False),
            collision=d.get("collision", False),
            stuck=d.get("stuck", False),
        )


@dataclass(frozen=True)
class EvalLog:
    """Closed-loop rollout record for one route."""

    route: str
    steps: tuple
    completed: bool
    duration: float  # seconds
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ts = [s.t for s in self.steps]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("step times must be strictly increasing")
        object.__setattr__(self, "steps", tuple(self.steps))

    def save(self, path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            head = {
                "format": EVALLOG_FORMAT,
                "version": EVALLOG_VERSION,
                "route": self.route,
                "completed": self.completed,
                "duration": self.duration,
                "meta": self.meta,
            }
            fh.write(json.dumps(head, sort_keys=True, separators=(",", ":")) + "\n")
            for s in self.steps:
                fh.write(json.dumps(s.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "EvalLog":
        lines = [ln for ln in Path(path).read_text("utf-8").splitlines() if ln.strip()]
        head = json.loads(lines[0])
        if head.get("format") != EVALLOG_FORMAT:
            raise ValueError(f"{path}: not an {EVALLOG_FORMAT} file")
        if head.get("version") != EVALLOG_VERSION:
            raise ValueError(f"{path}: unsupported version {head.get('version')}")
        steps = tuple(EvalStep.from_dict(json.loads(ln)) for ln in lines[1:])
        return cls(
            route=head["route"],
            steps=steps,
            completed=head["completed"],
            duration=head["duration"],
            meta=head.get("meta", {}),
        )


def intervention_count(log: EvalLog, refractory: float = REFRACTORY_S) -> int:
    """Collision plus stuck events; events within ``refractory`` seconds of
    the previous event merge into one."""
    count = 0
    last_event_t = None
    for s in log.steps:
        if not (s.collision or s.stuck):
            continue
        if last_event_t is None or s.t - last_event_t > refractory:
            count += 1
        last_event_t = s.t
    return count


def velocity_decrease(log: EvalLog, near_dist: float = NEAR_PED_DIST) -> float:
    """Percent drop of mean commanded v near a visible pedestrian vs. with no
    pedestrian within ``near_dist``.  Stop-commanded steps are excluded."""
    near: List[float] = []
    far: List[float] = []
    for s in log.steps:
        if s.command == "stop":
            continue
        if s.ped_distance is not None and s.ped_distance <= near_dist:
            if s.ped_in_fov:
                near.append(s.v)
        else:
            far.append(s.v)
    if not near or not far:
        raise ValueError(
            "insufficient data: need both near-pedestrian and pedestrian-free steps"
        )
    mean_near = sum(near) / len(near)
    mean_far = sum(far) / len(far)
    if mean_far == 0.0:
        raise ValueError("insufficient data: pedestrian-free velocity is zero")
    return 100.0 * (1.0 - mean_near / mean_far)


def summarize(runs: Sequence[EvalLog]) -> Dict:
    """Aggregate runs into the standard result columns.

    Velocity decrease is averaged over the runs where both strata exist.
    """
    if not runs:
        raise ValueError("summarize needs at least one run")
    rows = []
    decreases = []
    for log in runs:
        try:
            dec = velocity_decrease(log)
        except ValueError:
            dec = None
        if dec is not None:
            decreases.append(dec)
        rows.append(
            {
                "route": log.route,
                "interventions": intervention_count(log),
                "time_min": log.duration / 60.0,
                "vel_decrease_pct": dec,
                "completed": log.completed,
            }
        )
    report = {
        "runs": rows,
        "mean_interventions": sum(r["interventions"] for r in rows) / len(rows),
        "mean_time_min": sum(r["time_min"] for r in rows) / len(rows),
        "mean_vel_decrease_pct": (sum(decreases) / len(decreases)) if decreases else None,
        "n_runs": len(rows),
    }
    return report


def format_report(report: Dict) -> str:
    """Human-readable table matching the column layout of the result tables:
    Interventions | Time (min) | Vel. decrease."""
    lines = []
    lines.append(f"{'Route':<16} {'Interventions':>13} {'Time (min)':>11} {'Vel. decrease':>14}")
    for r in report["runs"]:
        dec = "-" if r["vel_decrease_pct"] is None else f"{r['vel_decrease_pct']:.1f}%"
        lines.append(
            f"{r['route']:<16} {r['interventions']:>13d} {r['time_min']:>11.2f} {dec:>14}"
        )
    dec = report["mean_vel_decrease_pct"]
    dec_s = "-" if dec is None else f"{dec:.1f}%"
    lines.append(
        f"{'mean':<16} {report['mean_interventions']:>13.2f} "
        f"{report['mean_time_min']:>11.2f} {dec_s:>14}"
    )
    return "\n".join(lines)
