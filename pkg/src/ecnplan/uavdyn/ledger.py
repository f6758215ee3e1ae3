"""Per-UAV mission time and energy."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .bangbang import SegmentPlan, segment_energy, segment_plan, uniform_energy, uniform_time
from .params import UavParams
from .power import hover_power


@dataclass(frozen=True)
class MissionLedger:
    motion_time: float
    receive_time: float
    motion_energy: float
    receive_energy: float
    segments: tuple[SegmentPlan, ...] = field(repr=False, default=())
    over_budget: bool = False

    @property
    def total_time(self) -> float:
        return self.motion_time + self.receive_time

    @property
    def total_energy(self) -> float:
        return self.motion_energy + self.receive_energy

    @property
    def mean_motion_power(self) -> float:
        return self.motion_energy / self.motion_time if self.motion_time > 0 else 0.0

    def as_dict(self) -> dict:
        return {"T_M": self.motion_time, "T_R": self.receive_time, "T_j": self.total_time,
                "E_motion": self.motion_energy, "E_receive": self.receive_energy, "E_j": self.total_energy,
                "over_budget": self.over_budget, "segments": len(self.segments)}


def receive_time(data_bytes: float, capacity_bps: float) -> float:
    if capacity_bps <= 0:
        return float("inf")
    return 8.0 * data_bytes / capacity_bps


def mission_ledger(start, waypoints: Sequence, data_bytes: Sequence[float], capacities: Sequence[float],
                   params: UavParams, wind: Callable | None = None, finish=None) -> MissionLedger:
    """Fly ``start -> waypoints[0] -> ...`` (and on to ``finish`` if given).

    ``wind(a, b)`` returns the constant force used to plan the segment a->b.
    Motion energy integrates the power profile of each bang-bang segment;
    receive energy charges receiver plus hover power for the download time.
    """
    if not (len(waypoints) == len(data_bytes) == len(capacities)):
        raise ValueError("waypoints, data sizes and capacities must align")
    stops = list(waypoints) + ([finish] if finish is not None else [])
    if not waypoints:
        return MissionLedger(0.0, 0.0, 0.0, 0.0)
    plans = []
    here = start
    for nxt in stops:
        force = None if wind is None else wind(here, nxt)
        plans.append(segment_plan(here, nxt, force, params))
        here = nxt
    t_m = sum(p.t_star for p in plans)
    e_m = sum(segment_energy(p, params) for p in plans)
    t_r = sum(receive_time(b, c) for b, c in zip(data_bytes, capacities))
    e_r = t_r * (params.receive_power + hover_power(params))
    return MissionLedger(float(t_m), float(t_r), float(e_m), float(e_r), tuple(plans),
                         bool(e_m + e_r > params.e_max))


def uniform_ledger(plans: Sequence[SegmentPlan], speed: float, params: UavParams) -> tuple[float, float]:
    """Motion time and energy of the same segments flown at constant ``speed``."""
    return (sum(uniform_time(p.distance, speed) for p in plans),
            sum(uniform_energy(p, speed, params) for p in plans))


def write_ledgers(path, ledgers: Sequence[MissionLedger]) -> None:
    with open(path, "w") as fh:
        json.dump({str(j): led.as_dict() for j, led in enumerate(ledgers)}, fh, indent=1, sort_keys=True)
