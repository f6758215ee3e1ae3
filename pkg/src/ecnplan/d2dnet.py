"""Ground-device placement and the weighted directed D2D graph."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import radio
from .errors import DomainError
from .radio import RadioParams
from .terrain import DemGrid, interpolate_elevation

MAX_PLACEMENT_RETRIES = 100


@dataclass(frozen=True)
class GroundDevice:
    id: int
    position: tuple[float, float, float]
    tx_power: float
    channel: int

    def __post_init__(self):
        if not self.tx_power > 0:
            raise ValueError("device transmit power must be positive")

    @property
    def xyz(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class DeviceGraph:
    """Weighted directed D2D graph.

    ``adjacency[i, k]`` is the link i->k; ``weights`` are min-max normalised link
    delays (zero where there is no link) and ``raw_costs`` the delays in seconds
    (``inf`` where absent).  ``power`` holds the minimum transmit power each link
    needs and ``loss_db``/``outage`` the per-pair channel state.
    """

    devices: tuple[GroundDevice, ...]
    adjacency: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    raw_costs: np.ndarray = field(repr=False)
    loss_db: np.ndarray = field(repr=False)
    outage: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    sinr: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.devices)

    @property
    def positions(self) -> np.ndarray:
        return np.array([d.position for d in self.devices], dtype=float).reshape(-1, 3)

    @property
    def channels(self) -> np.ndarray:
        return np.array([d.channel for d in self.devices], dtype=int)

    @property
    def total_weight(self) -> float:
        return float(self.weights[self.adjacency].sum())

    @classmethod
    def unlinked(cls, devices) -> "DeviceGraph":
        devices = tuple(devices)
        n = len(devices)
        zeros = np.zeros((n, n))
        return cls(devices, np.zeros((n, n), dtype=bool), zeros, np.full((n, n), np.inf), zeros.copy(),
                   np.ones((n, n)), zeros.copy(), zeros.copy())

    def subgraph(self, members) -> "DeviceGraph":
        """Induced subgraph on ``members`` (device order preserved, weights not renormalised)."""
        idx = np.asarray(members, dtype=int)
        pick = np.ix_(idx, idx)
        return DeviceGraph(tuple(self.devices[i] for i in idx), self.adjacency[pick], self.weights[pick],
                           self.raw_costs[pick], self.loss_db[pick], self.outage[pick], self.power[pick],
                           self.sinr[pick])

    def check(self) -> None:
        """Raise AssertionError when a structural invariant is broken."""
        adj = self.adjacency
        assert adj.shape == (self.n, self.n)
        assert not np.any(np.diag(adj)), "self-loop present"
        assert np.all((self.weights >= 0) & (self.weights <= 1)), "weight outside [0, 1]"
        assert np.all(self.weights[~adj] == 0), "weight on absent link"


def generate_devices(n: int, r: float, grid: DemGrid, seed, params: RadioParams | None = None,
                     center=None, verbatim: bool = False) -> list[GroundDevice]:
    """Place ``n`` devices uniformly on a disk of radius ``r`` over the DEM.

    ``verbatim=True`` puts every device on the circle of radius ``r`` (uniform
    angle only).  Devices falling off the DEM are redrawn, at most
    ``MAX_PLACEMENT_RETRIES`` times each.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not r > 0:
        raise ValueError("radius must be positive")
    params = params or RadioParams()
    rng = np.random.default_rng(seed)
    cx, cy = grid.center if center is None else center
    devices = []
    for i in range(n):
        for _ in range(MAX_PLACEMENT_RETRIES):
            u_angle, u_radius = rng.random(2)
            theta = 2.0 * math.pi * u_angle
            rho = r if verbatim else r * math.sqrt(u_radius)
            x, y = cx + rho * math.cos(theta), cy + rho * math.sin(theta)
            if grid.contains(x, y):
                break
        else:
            raise DomainError(f"device {i} could not be placed on the DEM")
        z = interpolate_elevation(grid, x, y)
        devices.append(GroundDevice(i, (x, y, z), params.p_max_mw, i % params.channels))
    return devices


def link_weight(packet_bytes: float, capacity_bps: float) -> float:
    """Raw link delay ``8 * packet / capacity`` in seconds; ``inf`` for a dead link."""
    if capacity_bps <= 0:
        return math.inf
    return 8.0 * packet_bytes / capacity_bps


def normalize_costs(raw: np.ndarray, present: np.ndarray) -> np.ndarray:
    """Min-max normalise ``raw`` over present links; all-equal costs map to 0."""
    w = np.zeros(raw.shape)
    if not present.any():
        return w
    vals = raw[present]
    lo, hi = float(vals.min()), float(vals.max())
    if hi > lo:
        w[present] = (vals - lo) / (hi - lo)
    return w


def optimal_power(loss_db, params: RadioParams):
    """Minimum power reaching the sensitivity threshold through ``loss_db``.

    Returns ``(power_mw, feasible)``; the power is clamped to ``p_max_mw`` and
    ``feasible`` is False when clamping was needed.
    """
    need = radio.dbm_to_mw(params.p_min_dbm + np.asarray(loss_db, dtype=float))
    feasible = need <= params.p_max_mw
    power = np.minimum(need, params.p_max_mw)
    if np.ndim(loss_db) == 0:
        return float(power), bool(feasible)
    return power, feasible


def pair_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def update_topology(graph: DeviceGraph, params: RadioParams) -> DeviceGraph:
    """Recompute power, outage, adjacency and weights for every ordered pair.

    Each link gets the minimum power that reaches the sensitivity threshold; a
    link is feasible when that power is within the device cap.  Outage is
    evaluated at the transmitter's power level (its cap), the link exists when
    it is feasible and the outage does not exceed ``epsilon``, and its capacity
    is computed against co-channel in-neighbours of the receiver, each
    arriving at the sensitivity level.
    """
    n = graph.n
    if n == 0:
        return graph
    pos = graph.positions
    dist = pair_distances(pos)
    off = ~np.eye(n, dtype=bool)
    loss = np.zeros((n, n))
    loss[off] = radio.fspl_db(dist[off], params)
    power, feasible = optimal_power(loss, params)
    tx = np.array([d.tx_power for d in graph.devices])[:, None] * np.ones((1, n))
    outage = np.ones((n, n))
    outage[off] = radio.outage_probability(tx[off], loss[off], params)
    adjacency = off & feasible & (outage <= params.epsilon)

    interference = radio.co_channel_interference(None, adjacency, graph.channels, per_link_mw=params.p_min_mw)
    rx = tx / 10.0 ** (loss / 10.0)
    snr = np.zeros((n, n))
    snr[adjacency] = rx[adjacency] / (params.n0_mw + interference[adjacency])
    raw = np.full((n, n), np.inf)
    rate = radio.capacity(params.bandwidth_hz, snr[adjacency])
    raw[adjacency] = np.where(rate > 0, 8.0 * params.packet_bytes / np.where(rate > 0, rate, 1.0), np.inf)
    adjacency = adjacency & np.isfinite(raw)
    weights = normalize_costs(raw, adjacency)
    np.fill_diagonal(power, 0.0)
    return DeviceGraph(graph.devices, adjacency, weights, raw, loss, outage, power, snr)


def build_graph(devices, params: RadioParams) -> DeviceGraph:
    return update_topology(DeviceGraph.unlinked(devices), params)


def graph_to_json(graph: DeviceGraph) -> dict:
    nodes = [{"id": d.id, "x": d.position[0], "y": d.position[1], "z": d.position[2],
              "tx_power_mw": d.tx_power, "channel": d.channel} for d in graph.devices]
    edges = []
    for i, k in zip(*np.nonzero(graph.adjacency)):
        edges.append({"source": graph.devices[i].id, "target": graph.devices[k].id,
                      "loss_db": float(graph.loss_db[i, k]), "outage": float(graph.outage[i, k]),
                      "power_mw": float(graph.power[i, k]), "sinr": float(graph.sinr[i, k]),
                      "raw_cost_s": float(graph.raw_costs[i, k]), "weight": float(graph.weights[i, k])})
    return {"nodes": nodes, "edges": edges}


def write_graph(graph: DeviceGraph, json_path, csv_path) -> None:
    Path(json_path).write_text(json.dumps(graph_to_json(graph), indent=1, sort_keys=True))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + [d.id for d in graph.devices])
        for d, row in zip(graph.devices, graph.weights):
            writer.writerow([d.id] + [repr(float(v)) for v in row])


def with_devices(graph: DeviceGraph, devices) -> DeviceGraph:
    return replace(graph, devices=tuple(devices))
