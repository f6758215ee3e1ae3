"""End-to-end pipeline: terrain, D2D graph, partition, caching centres, flights, trade-off search."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import community, d2dnet, keynode, moea, terrain
from .d2vplan import capacity_at, ground_to_air_loss_db, write_waypoints
from .errors import StageError
from .radio import RadioParams
from .uavdyn import UavParams, motion_power, segment_wind, simulate_tracking, uniform_ledger
from .uavdyn.ledger import write_ledgers


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    area_x: float = 3000.0
    area_y: float = 3000.0
    cellsize: float = 30.0
    hills: int = 6
    hill_height: float = 60.0
    dem_path: str = ""
    n_devices: int = 50
    radius: float = 1000.0
    verbatim_alg1: bool = False
    bytes_per_device: float = 2.0e6
    clearance_radius: float = 10.0
    depot_x: float = 0.0
    depot_y: float = -1400.0
    depot_agl: float = 30.0
    wind_speed: float = 5.0
    wind_direction: float = 0.7853981633974483
    wind_rotation: float = 0.1
    onp_max_iter: int = 20
    onp_tolerance: float = 1e-6
    uniform_speed: float = 10.0
    return_to_depot: bool = False
    track: bool = True
    track_record_every: int = 20
    x1: int = 0
    x2: float = 0.0
    skip_moea: bool = False
    pop_size: int = 12
    generations: int = 10
    neighborhood_size: int = 4
    emit_plots: bool = False
    out: str = "results"
    radio: RadioParams = field(default_factory=RadioParams)
    uav: UavParams = field(default_factory=UavParams)

    def with_(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _coerce(kind, text: str):
    kind = str(kind)
    if "bool" in kind:
        return text.strip().lower() in ("1", "true", "yes", "on")
    if "int" in kind and "float" not in kind:
        return int(text)
    if "float" in kind:
        return None if text.strip().lower() == "none" else float(text)
    return text


def _section(cls, items: dict[str, str], where: str) -> dict[str, Any]:
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    out = {}
    for key, value in items.items():
        if key not in types or key in ("radio", "uav"):
            raise ValueError(f"unknown key '{key}' in [{where}]")
        out[key] = _coerce(types[key], value)
    return out


def load_config(path, **overrides) -> ScenarioConfig:
    """Read an INI file with [scenario], [radio], [uav] and [moea] sections."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(path)
    main = dict(parser["scenario"]) if parser.has_section("scenario") else {}
    main.update(dict(parser["moea"]) if parser.has_section("moea") else {})
    values = _section(ScenarioConfig, main, "scenario")
    radio = RadioParams(**_section(RadioParams, dict(parser["radio"]), "radio")) \
        if parser.has_section("radio") else RadioParams()
    uav = UavParams(**_section(UavParams, dict(parser["uav"]), "uav")) \
        if parser.has_section("uav") else UavParams()
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in values:
        raise ValueError("a seed is required")
    return ScenarioConfig(radio=radio, uav=uav, **values)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    data = dataclasses.asdict(cfg)
    return data


@dataclass
class ResultBundle:
    config: ScenarioConfig
    grid: Any = None
    wind: Any = None
    graph: Any = None
    partition: Any = None
    election: Any = None
    problem: Any = None
    single: Any = None
    moead: Any = None
    knee: Any = None
    chosen: Any = None
    trajectories: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _stage(name: str, inputs: dict, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, exc, inputs) from exc


def _dump(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True, allow_nan=True) + "\n")


def _terrain(cfg: ScenarioConfig):
    if cfg.dem_path:
        grid = terrain.read_esri_ascii(cfg.dem_path)
    else:
        grid = terrain.synthetic_dem(cfg.seed, (cfg.area_x, cfg.area_y), cfg.cellsize, cfg.hills, cfg.hill_height)
    wind = terrain.WindField.build(grid, cfg.wind_direction, cfg.wind_rotation, cfg.wind_speed)
    return grid, wind


def _depot(cfg: ScenarioConfig, grid) -> tuple[float, float, float]:
    x, y = grid.clamp_xy(cfg.depot_x, cfg.depot_y)
    return (x, y, terrain.interpolate_elevation(grid, x, y) + cfg.depot_agl)


def build_problem(cfg: ScenarioConfig, grid, wind, graph, partition, election) -> moea.MissionProblem:
    pos = graph.positions
    tdcc_pos = [tuple(float(v) for v in pos[i]) for i in election.tdccs]
    sizes = np.bincount(partition.labels)
    data = [float(sizes[partition.labels[i]] * cfg.bytes_per_device) for i in election.tdccs]
    channels = [int(graph.channels[i]) for i in election.tdccs]
    cd = cfg.uav.drag_coefficient

    def force(a, b):
        return segment_wind(lambda p: terrain.wind_at(wind, grid, p, cd), a, b)

    return moea.MissionProblem(tdcc_pos, channels, data, grid, cfg.radio, cfg.uav, _depot(cfg, grid),
                               cfg.clearance_radius, cfg.seed, force, cfg.return_to_depot)


def _track(plans, cfg: ScenarioConfig):
    """Closed-loop flight over consecutive segments; rows t, x, y, z, roll, pitch, yaw, lift, power."""
    rows = []
    clock = 0.0
    saturation = 0
    for plan in plans:
        res = simulate_tracking(plan, cfg.uav, record_every=cfg.track_record_every)
        saturation += res.clamp_events
        for t, s, f in zip(res.times, res.states, res.lift):
            v = s[3:6]
            p = motion_power(float(v[2]), float(math.hypot(v[0], v[1])), cfg.uav)
            rows.append([clock + t, *s[0:3], *s[6:9], f, p])
        clock += res.elapsed
    return rows, saturation


def run_pipeline(cfg: ScenarioConfig, out_dir=None, write: bool = True) -> ResultBundle:
    """Run every stage; raises StageError naming the failing stage."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    res = ResultBundle(cfg)
    res.grid, res.wind = _stage("terrain", {"seed": cfg.seed, "dem_path": cfg.dem_path}, _terrain, cfg)

    def d2d():
        devices = d2dnet.generate_devices(cfg.n_devices, cfg.radius, res.grid, cfg.seed, cfg.radio,
                                          verbatim=cfg.verbatim_alg1)
        g = d2dnet.build_graph(devices, cfg.radio)
        g.check()
        return g

    res.graph = _stage("d2dnet", {"n": cfg.n_devices, "r": cfg.radius, "seed": cfg.seed}, d2d)

    def onp():
        g, part = community.optimal_network_partition(res.graph, cfg.radio, cfg.onp_max_iter, cfg.onp_tolerance)
        g.check()
        if len(part.labels) != g.n:
            raise ValueError("partition does not label every device")
        return g, part

    res.graph, res.partition = _stage("community", {"max_iter": cfg.onp_max_iter}, onp)
    res.election = _stage("keynode", {"communities": res.partition.count},
                          keynode.elect_tdccs, res.graph, res.partition)
    res.problem = _stage("d2vplan", {"tdccs": list(res.election.tdccs)}, build_problem, cfg, res.grid, res.wind,
                         res.graph, res.partition, res.election)
    n_t = res.problem.x1_max
    x1 = cfg.x1 if cfg.x1 > 0 else max(1, (n_t + 1) // 2)
    x2 = cfg.x2 if cfg.x2 > 0 else cfg.radio.p_max_mw
    if not 1 <= x1 <= n_t:
        raise StageError("flights", ValueError(f"x1 = {x1} outside [1, {n_t}]"), {"x1": x1})
    res.single = _stage("flights", {"x1": x1, "x2": x2}, res.problem.evaluate, x1, x2)
    res.chosen = res.single
    if not cfg.skip_moea:
        cached = moea.CachedProblem(res.problem)
        res.moead = _stage("moea", {"pop_size": cfg.pop_size, "generations": cfg.generations}, moea.run_moead,
                           cached, cfg.pop_size, cfg.generations, cfg.neighborhood_size, cfg.seed)
        res.knee = _stage("knee", {"archive": len(res.moead.archive)}, moea.knee_select, res.moead.archive)
        res.chosen = res.knee
    if cfg.track and "ledgers" in res.chosen.details:
        for j, led in enumerate(res.chosen.details["ledgers"]):
            res.trajectories[j] = _stage("tracking", {"uav": j}, _track, led.segments, cfg)
    res.summary = summarize(res)
    if write:
        _stage("output", {"out": str(out)}, write_bundle, res, out)
        if cfg.emit_plots:
            _stage("plots", {"out": str(out)}, emit_plot_data, res, out)
    return res


def _solution_dict(s) -> dict | None:
    if s is None:
        return None
    return {"x1": s.x1, "x2": s.x2, "f1": s.f1, "f2": s.f2, "feasible": s.feasible,
            "violation": s.violation, "g1": s.g1, "g2": s.g2}


def summarize(res: ResultBundle) -> dict:
    chosen = res.chosen
    ledgers = chosen.details.get("ledgers", [])
    saving = []
    for led in ledgers:
        t_u, _ = uniform_ledger(led.segments, res.config.uniform_speed, res.config.uav)
        if t_u > 0:
            saving.append(1.0 - led.motion_time / t_u)
    return {
        "seed": res.config.seed,
        "devices": res.graph.n,
        "links": int(res.graph.adjacency.sum()),
        "community_count": res.partition.count,
        "modularity": res.partition.modularity,
        "onp_iterations": len(res.partition.history),
        "tdcc_count": len(res.election.tdccs),
        "tdccs": [int(res.graph.devices[i].id) for i in res.election.tdccs],
        "single_evaluation": _solution_dict(res.single),
        "archive_size": len(res.moead.archive) if res.moead else 0,
        "knee": _solution_dict(res.knee),
        "mean_motion_time_saving": float(np.mean(saving)) if saving else None,
        "tracking_saturation": {str(j): tr[1] for j, tr in res.trajectories.items()},
    }


def write_bundle(res: ResultBundle, out: Path) -> None:
    d2dnet.write_graph(res.graph, out / "graph.json", out / "graph.csv")
    community.write_partition(res.partition, res.graph, out / "partition.json", out / "partition.csv")
    keynode.write_centrality_csv(out / "centrality.csv", res.graph, res.election)
    details = res.chosen.details
    if "waypoints" in details:
        write_waypoints(out / "waypoints.json", details["waypoints"],
                        [res.graph.devices[i].id for i in res.election.tdccs])
        write_ledgers(out / "ledgers.json", details["ledgers"])
    for j, (rows, _) in res.trajectories.items():
        with open(out / f"trajectory_uav{j}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "z", "roll", "pitch", "yaw", "lift", "power"])
            w.writerows([[repr(float(v)) for v in row] for row in rows])
    if res.moead is not None:
        moea.write_archive_csv(out / "archive.csv", res.moead.archive, res.knee)
        moea.write_log_json(out / "moea_log.json", res.moead.log)
        _dump(out / "knee.json", _solution_dict(res.knee))
    _dump(out / "summary.json", res.summary)


def emit_plot_data(res: ResultBundle, out) -> list[Path]:
    """CSV series behind the partition, capacity, profile, front and per-UAV plots."""
    out = Path(out)
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    written = []

    def table(name, header, rows):
        path = plots / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        written.append(path)

    table("q_history.csv", ["iteration", "modularity"],
          [[k + 1, repr(q)] for k, q in enumerate(res.partition.history)])
    table("membership.csv", ["device", "x", "y", "community", "is_tdcc"],
          [[d.id, repr(d.position[0]), repr(d.position[1]), int(c), int(i in res.election.tdccs)]
           for i, (d, c) in enumerate(zip(res.graph.devices, res.partition.labels))])
    details = res.chosen.details
    cfg = res.config
    if "waypoints" in details:
        rows = []
        x2 = res.chosen.x2
        step = 0
        for row in details["waypoints"]:
            for w in row:
                ground = res.problem.tdcc_positions[w.tdcc]
                high = (w.position[0], w.position[1], ground[2] + w.h_high)
                for label, pos in (("unplanned", high), ("planned", w.position)):
                    gain = -ground_to_air_loss_db(pos, ground, cfg.radio)
                    rows.append([step, w.uav, w.tdcc, label, repr(gain),
                                 repr(capacity_at(pos, ground, (), cfg.radio, x2))])
                step += 1
        table("capacity_steps.csv", ["step", "uav", "tdcc", "stage", "path_gain_db", "capacity_bps"], rows)
        prof, power, bars = [], [], []
        for j, led in enumerate(details["ledgers"]):
            for k, seg in enumerate(led.segments):
                t_u = seg.distance / cfg.uniform_speed
                for s in np.linspace(0.0, max(seg.t_star, t_u), 41):
                    v_u = cfg.uniform_speed if 0 < s < t_u else 0.0
                    prof.append([j, k, repr(float(s)), repr(seg.speed_at(s)), repr(v_u)])
                    if s <= seg.t_star:
                        v = seg.speed_at(s)
                        ux, uy, uz = seg.direction
                        power.append([j, k, repr(float(s)),
                                      repr(motion_power(v * uz, v * math.hypot(ux, uy), cfg.uav))])
            t_u, e_u = uniform_ledger(led.segments, cfg.uniform_speed, cfg.uav)
            bars.append([j, repr(led.motion_time), repr(led.receive_time), repr(led.total_time),
                         repr(led.total_energy), repr(t_u), repr(e_u)])
        table("velocity_profiles.csv", ["uav", "segment", "t", "v_optimal", "v_uniform"], prof)
        table("power_profile.csv", ["uav", "segment", "t", "power_w"], power)
        table("uav_bars.csv", ["uav", "T_M", "T_R", "T_j", "E_j", "T_M_uniform", "E_M_uniform"], bars)
    if res.moead is not None:
        table("pareto.csv", ["x1", "x2", "f1", "f2", "feasible", "is_knee"],
              [[s.x1, repr(s.x2), repr(s.f1), repr(s.f2), int(s.feasible), int(s is res.knee)]
               for s in res.moead.archive.sorted()])
    return written


def replication_seeds(master: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(count)]
