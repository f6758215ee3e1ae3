import json
import math

import numpy as np
import pytest

from ecnplan import scenario, terrain
from ecnplan.errors import StageError
from ecnplan.scenario import ScenarioConfig

FAST = ScenarioConfig(seed=1, skip_moea=True, track=False)


def test_load_config_sections_and_overrides(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[scenario]\nseed = 4\nn_devices = 30\nreturn_to_depot = yes\n"
                    "[radio]\np_min_dbm = -80\nexcess_mode = printed\n"
                    "[uav]\nrotor_speed = none\ne_max = 1e6\n[moea]\npop_size = 8\n")
    cfg = scenario.load_config(path, seed=9, out=None)
    assert cfg.seed == 9 and cfg.n_devices == 30 and cfg.return_to_depot
    assert cfg.radio.p_min_dbm == -80 and cfg.radio.excess_mode == "printed"
    assert cfg.uav.rotor_speed is None and cfg.uav.e_max == 1e6
    assert cfg.pop_size == 8
    assert scenario.config_to_dict(cfg)["radio"]["p_min_dbm"] == -80


def test_load_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        scenario.load_config(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nseed = 1\nbogus = 3\n")
    with pytest.raises(ValueError):
        scenario.load_config(bad)
    noseed = tmp_path / "noseed.ini"
    noseed.write_text("[scenario]\nn_devices = 5\n")
    with pytest.raises(ValueError):
        scenario.load_config(noseed)


def test_pipeline_single_evaluation_contents():
    res = scenario.run_pipeline(FAST, write=False)
    s = res.summary
    assert s["devices"] == 50 and s["tdcc_count"] == res.partition.count
    assert s["single_evaluation"]["x1"] == math.ceil(s["tdcc_count"] / 2)
    assert s["single_evaluation"]["x2"] == FAST.radio.p_max_mw
    assert res.moead is None and res.knee is None
    sizes = np.bincount(res.partition.labels)
    for i, t in enumerate(res.election.tdccs):
        assert res.problem.data_bytes[i] == sizes[res.partition.labels[t]] * FAST.bytes_per_device
    assert s["mean_motion_time_saving"] > 0.2


def test_depot_clamped_onto_grid():
    grid = terrain.synthetic_dem(0, size=(1000.0, 1000.0), cellsize=30.0)
    x, y, z = scenario._depot(FAST, grid)
    xmin, xmax, ymin, ymax = grid.extent
    assert xmin <= x <= xmax and ymin <= y <= ymax
    assert z == pytest.approx(terrain.interpolate_elevation(grid, x, y) + FAST.depot_agl)


def test_out_of_range_uav_count_names_stage():
    with pytest.raises(StageError) as info:
        scenario.run_pipeline(FAST.with_(x1=999), write=False)
    assert info.value.stage == "flights"


def test_bad_dem_path_names_terrain_stage(tmp_path):
    with pytest.raises(StageError) as info:
        scenario.run_pipeline(FAST.with_(dem_path=str(tmp_path / "nope.asc")), write=False)
    assert info.value.stage == "terrain"


def test_bundle_and_plot_files(tmp_path):
    cfg = FAST.with_(skip_moea=False, pop_size=4, generations=1, neighborhood_size=2, track=True,
                     emit_plots=True, track_record_every=200)
    res = scenario.run_pipeline(cfg, tmp_path)
    for name in ("graph.json", "graph.csv", "partition.json", "partition.csv", "centrality.csv",
                 "waypoints.json", "ledgers.json", "archive.csv", "moea_log.json", "knee.json", "summary.json"):
        assert (tmp_path / name).exists(), name
    assert len(list(tmp_path.glob("trajectory_uav*.csv"))) == res.knee.x1
    plots = {p.name for p in (tmp_path / "plots").iterdir()}
    assert plots == {"q_history.csv", "membership.csv", "capacity_steps.csv", "velocity_profiles.csv",
                     "power_profile.csv", "uav_bars.csv", "pareto.csv"}
    steps = (tmp_path / "plots" / "capacity_steps.csv").read_text().strip().splitlines()[1:]
    for unplanned, planned in zip(steps[::2], steps[1::2]):
        assert float(planned.split(",")[-1]) >= float(unplanned.split(",")[-1])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["knee"]["x1"] == res.knee.x1


def test_replication_seeds_distinct_and_stable():
    a = scenario.replication_seeds(7, 5)
    assert a == scenario.replication_seeds(7, 5)
    assert len(set(a)) == 5
    assert a[:3] == scenario.replication_seeds(7, 3)
