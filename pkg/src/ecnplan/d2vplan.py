"""Hover-point planning over caching centres and greedy UAV allocation.

A UAV serving a caching centre hovers straight above it, which maximises the
LoS probability and minimises the ground-to-air loss.  The hover height is the
lowest value admitted by the altitude window, the terrain buffer and the
clearance test.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import radio
from .errors import InfeasibleLinkError
from .radio import RadioParams
from .terrain import DemGrid, min_clear_altitude


def altitude_bounds(params: RadioParams, clearance_radius: float, interferer_count: int,
                    tx_power_mw: float | None = None) -> tuple[float, float]:
    """Lower and upper hover height (m above the caching centre).

    The upper bound is the height at which the overhead SINR drops to
    ``params.gamma`` with ``interferer_count`` co-channel transmitters each
    arriving at the sensitivity level.  The lower bound is the first-order
    log expansion around the terrain buffer ``clearance_radius``.
    """
    if not clearance_radius > 0:
        raise ValueError("clearance radius must be positive")
    if interferer_count < 0:
        raise ValueError("interferer count must be non-negative")
    p_tx = params.p_max_mw if tx_power_mw is None else tx_power_mw
    scale = params.gain * params.wavelength ** 2 / (4.0 * math.pi) ** 2
    offset = radio.overhead_offset_db(params)
    noise = params.n0_mw + interferer_count * params.p_min_mw
    h_high = math.sqrt(p_tx * scale * 10.0 ** (-offset / 10.0) / (params.gamma * noise))
    c = clearance_radius
    h_low = math.sqrt(c * (math.log(c / scale) + 1.0) * scale)
    return h_low, h_high


def ground_to_air_loss_db(uav, ground, params: RadioParams) -> float:
    """Blended LoS/NLoS loss between a UAV and a ground device at any geometry.

    Elevation angles below the horizon are clipped to zero degrees.
    """
    dx = np.asarray(uav, dtype=float) - np.asarray(ground, dtype=float)
    d = float(np.linalg.norm(dx))
    if dx[2] > 0:
        return radio.a2g_loss_db(d, min(float(dx[2]), d), params)
    return radio.fspl_db(d, params) + radio.blended_excess_db(radio.los_probability(0.0, params), params)


def capacity_at(uav, target, interferers: Sequence, params: RadioParams, tx_power_mw: float) -> float:
    """Uplink rate from ``target`` to a UAV at ``uav`` with co-channel ``interferers``."""
    signal = tx_power_mw / 10.0 ** (ground_to_air_loss_db(uav, target, params) / 10.0)
    noise = params.n0_mw + sum(tx_power_mw / 10.0 ** (ground_to_air_loss_db(uav, k, params) / 10.0)
                               for k in interferers)
    return radio.capacity(params.bandwidth_hz, signal / noise)


@dataclass(frozen=True)
class Waypoint:
    uav: int
    tdcc: int
    position: tuple[float, float, float]
    h_opt: float
    h_low: float
    h_high: float
    capacity: float
    feasible: bool = True


def optimal_waypoint(uav: int, tdcc: int, tdcc_position, grid: DemGrid, params: RadioParams,
                     clearance_radius: float, interferers: Sequence = (), tx_power_mw: float | None = None
                     ) -> Waypoint:
    """Hover point straight above a caching centre.

    Raises InfeasibleLinkError when the altitude window is empty or no
    clearance-feasible height exists inside it.
    """
    p_tx = params.p_max_mw if tx_power_mw is None else tx_power_mw
    x, y, z = (float(v) for v in tdcc_position)
    h_low, h_high = altitude_bounds(params, clearance_radius, len(interferers), p_tx)
    h = max(h_low, clearance_radius)
    if h > h_high:
        raise InfeasibleLinkError(h, h_high)
    alt = min_clear_altitude(grid, x, y, clearance_radius, z + h, ceiling=z + h_high)
    if alt is None:
        raise InfeasibleLinkError(h, h_high, "no clearance-feasible hover height below the upper bound")
    pos = (x, y, alt)
    cap = capacity_at(pos, (x, y, z), interferers, params, p_tx)
    return Waypoint(uav, tdcc, pos, alt - z, h_low, h_high, cap)


@dataclass(frozen=True)
class Allocation:
    visits: tuple[tuple[int, ...], ...]
    events: tuple[dict, ...] = field(repr=False, default=())


def euclidean_time(a, b, _target: int) -> float:
    return float(np.linalg.norm(np.asarray(b, dtype=float) - np.asarray(a, dtype=float)))


def allocate(tdcc_positions: Sequence, m_uavs: int, start_positions: Sequence, seed,
             time_estimate: Callable = euclidean_time) -> Allocation:
    """Random initial assignment, then nearest-first greedy claims.

    ``tdcc_positions[i]`` is the position of caching centre ``i``;
    ``start_positions[j]`` that of UAV ``j``.  The UAV with the smallest
    accumulated planned time claims next; ``time_estimate(a, b, i)`` gives the
    time to travel from ``a`` to centre ``i`` at ``b`` and collect its data.
    Visit lists hold centre indices.
    """
    n = len(tdcc_positions)
    if not 1 <= m_uavs <= n:
        raise ValueError(f"need 1 <= UAV count <= {n}, got {m_uavs}")
    if len(start_positions) != m_uavs:
        raise ValueError("one start position per UAV required")
    pts = [np.asarray(p, dtype=float) for p in tdcc_positions]
    rng = np.random.default_rng(seed)
    first = rng.permutation(n)[:m_uavs]
    visits = [[int(i)] for i in first]
    clock = [time_estimate(start_positions[j], pts[i], int(i)) for j, i in enumerate(first)]
    events = [{"uav": j, "tdcc": int(i), "kind": "initial", "clock": clock[j]} for j, i in enumerate(first)]
    remaining = sorted(set(range(n)) - set(int(i) for i in first))
    while remaining:
        j = min(range(m_uavs), key=lambda u: (clock[u], u))
        here = pts[visits[j][-1]]
        dists = {i: float(np.linalg.norm(pts[i] - here)) for i in remaining}
        target = min(remaining, key=lambda i: (dists[i], i))
        clock[j] += time_estimate(here, pts[target], target)
        visits[j].append(target)
        remaining.remove(target)
        events.append({"uav": j, "tdcc": target, "kind": "greedy", "distance": dists[target],
                       "min_candidate_distance": min(dists.values()), "clock": clock[j]})
    return Allocation(tuple(tuple(v) for v in visits), tuple(events))


def co_channel_interferers(visit: Sequence[int], channels: Sequence[int], target: int) -> list[int]:
    """Centres in the same UAV's set sharing the target's channel, target excluded."""
    return [k for k in visit if k != target and channels[k] == channels[target]]


def plan_waypoints(allocation: Allocation, tdcc_positions: Sequence, channels: Sequence[int], grid: DemGrid,
                   params: RadioParams, clearance_radius: float, tx_power_mw: float | None = None
                   ) -> list[list[Waypoint]]:
    """Hover points for every visit; infeasible links are kept but flagged."""
    plan = []
    for j, visit in enumerate(allocation.visits):
        row = []
        for i in visit:
            others = [tdcc_positions[k] for k in co_channel_interferers(visit, channels, i)]
            try:
                row.append(optimal_waypoint(j, i, tdcc_positions[i], grid, params, clearance_radius,
                                            others, tx_power_mw))
            except InfeasibleLinkError as exc:
                x, y, z = (float(v) for v in tdcc_positions[i])
                pos = (x, y, z + exc.h_low)
                p_tx = params.p_max_mw if tx_power_mw is None else tx_power_mw
                row.append(Waypoint(j, i, pos, exc.h_low, exc.h_low, exc.h_high,
                                    capacity_at(pos, tdcc_positions[i], others, params, p_tx), feasible=False))
        plan.append(row)
    return plan


def waypoints_to_json(plan: list[list[Waypoint]], tdcc_ids: Sequence[int] | None = None) -> dict:
    out = {}
    for j, row in enumerate(plan):
        out[str(j)] = [{"tdcc_id": int(tdcc_ids[w.tdcc]) if tdcc_ids is not None else w.tdcc,
                        "x": w.position[0], "y": w.position[1], "z": w.position[2],
                        "h_opt": w.h_opt, "capacity": w.capacity, "feasible": w.feasible} for w in row]
    return out


def write_waypoints(path, plan, tdcc_ids=None) -> None:
    Path(path).write_text(json.dumps(waypoints_to_json(plan, tdcc_ids), indent=1, sort_keys=True))
