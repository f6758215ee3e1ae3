import math

import numpy as np
import pytest

from ecnplan.errors import TrackingError
from ecnplan.uavdyn import Gains, Mixer, UavParams, segment_plan, simulate_hover, simulate_tracking

P = UavParams()


def test_hover_settles_at_weight_and_level():
    res = simulate_hover((0.0, 0.0, 50.0), P, duration=6.0)
    assert res.lift[-1] == pytest.approx(39.2, rel=1e-3)
    att = res.states[-1, 6:9]
    assert np.all(np.abs(att[:2]) < 1e-3)
    assert np.linalg.norm(res.states[-1, 0:3] - (0, 0, 50)) < 0.05


def test_hundred_metre_segment():
    plan = segment_plan((0.0, 0.0, 50.0), (100.0, 0.0, 50.0), None, P)
    res = simulate_tracking(plan, P)
    assert res.converged
    assert math.dist(res.states[-1, 0:3], plan.end) < 0.5
    assert res.elapsed <= 1.25 * plan.t_star
    assert res.max_lift <= P.f_max + 1e-9
    assert np.all(res.states[:, 12:16] >= 0)


def test_windy_climbing_segment_respects_lift_limit():
    plan = segment_plan((0.0, 0.0, 20.0), (80.0, 40.0, 60.0), (2.0, -1.5, 0.0), P)
    res = simulate_tracking(plan, P, record_every=10)
    assert res.converged
    assert res.max_lift <= P.f_max + 1e-9
    assert np.all(res.lift <= P.f_max + 1e-9)


def test_start_equals_target():
    plan = segment_plan((5.0, 5.0, 5.0), (5.0, 5.0, 5.0), None, P)
    res = simulate_tracking(plan, P)
    assert res.elapsed == 0.0 and res.converged


def test_timeout_and_step_validation():
    plan = segment_plan((0.0, 0.0, 50.0), (100.0, 0.0, 50.0), None, P)
    with pytest.raises(TrackingError):
        simulate_tracking(plan, P, timeout_factor=0.5)
    for dt in (0.0, 0.05):
        with pytest.raises(ValueError):
            simulate_tracking(plan, P, dt=dt)
    with pytest.raises(ValueError):
        Gains(pos_p=0.0)


def test_mixer_round_trip():
    mix = Mixer(P)
    w2 = mix.speeds_squared(40.0, 0.1, -0.2, 0.01)
    np.testing.assert_allclose(mix.wrench(w2), (40.0, 0.1, -0.2, 0.01), rtol=1e-10, atol=1e-12)


def test_mixer_allocation_stays_in_motor_range():
    mix = Mixer(P)
    rng = np.random.default_rng(0)
    for _ in range(500):
        f = rng.uniform(-10, 120)
        tx, ty, tz = rng.uniform(-20, 20, 3)
        w2, altered = mix.allocate(f, tx, ty, tz)
        assert all(0.0 <= w <= mix.limit for w in w2)
        if not altered:
            np.testing.assert_allclose(mix.wrench(w2), (f, tx, ty, tz), rtol=1e-9, atol=1e-9)
