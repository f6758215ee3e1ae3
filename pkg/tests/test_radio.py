import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecnplan import radio
from ecnplan.errors import DomainError
from ecnplan.radio import RadioParams

P = RadioParams()


def test_params_validation():
    with pytest.raises(ValueError):
        RadioParams(epsilon=0.0)
    with pytest.raises(ValueError):
        RadioParams(channels=0)
    with pytest.raises(ValueError):
        RadioParams(sigma_mode="other")
    with pytest.raises(ValueError):
        RadioParams(excess_mode="other")


def test_fspl_examples():
    assert radio.fspl_db(P.wavelength / (4 * math.pi), P) == pytest.approx(0.0, abs=1e-12)
    assert radio.fspl_db(200.0, P) - radio.fspl_db(100.0, P) == pytest.approx(20 * math.log10(2), rel=1e-12)
    mpmath.mp.dps = 40
    lam = mpmath.mpf(299792458) / mpmath.mpf(433e6)
    ref = 10 * mpmath.log10((4 * mpmath.pi * 100) ** 2 / lam ** 2)
    assert radio.fspl_db(100.0, P) == pytest.approx(float(ref), abs=1e-10)
    assert radio.fspl_db(100.0, P) == pytest.approx(65.18, abs=0.01)
    with pytest.raises(DomainError):
        radio.fspl_db(0.0, P)


@given(st.floats(0.1, 1e5), st.floats(1.0001, 10))
def test_fspl_increasing(d, k):
    assert radio.fspl_db(d * k, P) > radio.fspl_db(d, P)


def test_los_probability_examples():
    assert radio.los_probability(P.a, P) == pytest.approx(1 / 12.95, rel=1e-12)
    # hand evaluation of the logistic at 90 degrees with a = 11.95, b = 0.14
    assert radio.los_probability(90.0, P) == pytest.approx(1 / (1 + 11.95 * math.exp(-0.14 * 78.05)), rel=1e-14)
    assert radio.los_probability(90.0, P) == pytest.approx(0.999785, abs=1e-6)
    grid = np.linspace(0, 90, 181)
    assert np.all(np.diff(radio.los_probability(grid, P)) > 0)


def test_a2g_overhead_is_offset_from_free_space():
    for h in (5.0, 50.0, 700.0):
        assert radio.a2g_loss_db(h, h, P) == pytest.approx(radio.fspl_db(h, P) + radio.overhead_offset_db(P),
                                                           abs=1e-12)
    p90 = 1 / (1 + 11.95 * math.exp(-0.14 * 78.05))
    assert radio.overhead_offset_db(P) == pytest.approx(p90 * 3.0 + (1 - p90) * 23.0, abs=1e-12)
    assert radio.overhead_offset_db(P) == pytest.approx(3.0043, abs=1e-4)
    printed = P.with_(excess_mode="printed")
    assert radio.overhead_offset_db(printed) == pytest.approx(-radio.overhead_offset_db(P), abs=1e-15)


def test_a2g_equal_excess_collapses():
    q = P.with_(eta_los_db=7.0, eta_nlos_db=7.0)
    for d, h in [(100, 10), (300, 299), (50, 50)]:
        assert radio.a2g_loss_db(d, h, q) == pytest.approx(radio.fspl_db(d, q) + 7.0, abs=1e-12)
        printed = q.with_(excess_mode="printed")
        assert radio.a2g_loss_db(d, h, printed) == pytest.approx(radio.fspl_db(d, q) - 7.0, abs=1e-12)


def test_a2g_thirty_degrees_by_hand():
    d, h = 200.0, 100.0
    p_los = 1 / (1 + 11.95 * math.exp(-0.14 * (30.0 - 11.95)))
    fs = 20 * math.log10(4 * math.pi * d / (299792458 / 433e6))
    ref = p_los * (fs + 3) + (1 - p_los) * (fs + 23)
    assert radio.a2g_loss_db(d, h, P) == pytest.approx(ref, abs=1e-10)
    ref = p_los * (fs - 3) + (1 - p_los) * (fs - 23)
    assert radio.a2g_loss_db(d, h, P.with_(excess_mode="printed")) == pytest.approx(ref, abs=1e-10)
    with pytest.raises(DomainError):
        radio.a2g_loss_db(10.0, 20.0, P)


@given(st.floats(1, 1e4), st.floats(0.01, 1))
def test_a2g_between_los_and_nlos(d, frac):
    fs = radio.fspl_db(d, P)
    loss = radio.a2g_loss_db(d, d * frac, P)
    assert fs + P.eta_los_db - 1e-9 <= loss <= fs + P.eta_nlos_db + 1e-9
    loss = radio.a2g_loss_db(d, d * frac, P.with_(excess_mode="printed"))
    assert fs - P.eta_nlos_db - 1e-9 <= loss <= fs - P.eta_los_db + 1e-9


@given(st.floats(1, 500), st.floats(0.02, 0.999))
def test_overhead_minimises_loss_at_fixed_height(h, frac):
    # with additive excess, moving sideways at the same height never helps
    assert radio.a2g_loss_db(h / frac, h, P) >= radio.a2g_loss_db(h, h, P) - 1e-9


def test_outage_examples():
    loss = 40.0
    p_at_threshold = radio.dbm_to_mw(P.p_min_dbm + loss)
    assert radio.outage_probability(p_at_threshold, loss, P) == pytest.approx(0.5, abs=1e-12)
    assert radio.outage_probability(10.0, 0.0, P) < 1e-12
    assert radio.outage_probability(1e-12, 200.0, P) > 1 - 1e-12
    with pytest.raises(DomainError):
        radio.outage_probability(0.0, 10.0, P)


def test_outage_monotone_in_power():
    powers = np.logspace(-6, 1, 200)
    out = radio.outage_probability(powers, 85.0, P)
    assert np.all(np.diff(out) <= 0)


def test_outage_sigma_modes_differ():
    conv = P.with_(sigma_mode="conventional")
    assert conv.shadowing_db == pytest.approx(math.sqrt(3.65))
    assert radio.outage_probability(1.0, 77.0, conv) != radio.outage_probability(1.0, 77.0, P)


def test_outage_matches_monte_carlo():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        p = rng.uniform(0.01, 10.0)
        loss = rng.uniform(60, 95)
        rx = 10 * math.log10(p) - loss
        shadow = rng.normal(0.0, P.shadowing_db, 100_000)
        empirical = float(np.mean(rx - shadow < P.p_min_dbm))
        assert abs(empirical - radio.outage_probability(p, loss, P)) < 0.01


def test_sinr_and_capacity_examples():
    assert radio.sinr(4.0, [], 2.0) == 2.0
    assert radio.sinr(1.0, [1.0], 1.0) == 0.5
    assert radio.capacity(1e6, 0.0) == 0.0
    assert radio.capacity(1e6, 1.0) == pytest.approx(1e6)
    assert radio.capacity(1e6, 3.0) == pytest.approx(2e6)
    with pytest.raises(DomainError):
        radio.capacity(1e6, -0.1)
    with pytest.raises(DomainError):
        radio.sinr(1.0, [], 0.0)


@given(st.floats(0, 1e3), st.floats(0, 1e3))
def test_capacity_concave_increasing(a, b):
    lo, hi = sorted((a, b))
    mid = 0.5 * (lo + hi)
    assert radio.capacity(1e6, hi) >= radio.capacity(1e6, lo)
    assert radio.capacity(1e6, mid) >= 0.5 * (radio.capacity(1e6, lo) + radio.capacity(1e6, hi)) - 1e-6


def test_round_robin_channels():
    np.testing.assert_array_equal(radio.assign_channels(6, 4), [0, 1, 2, 3, 0, 1])


@given(st.integers(2, 8), st.integers(1, 4), st.integers(0, 2 ** 16))
def test_co_channel_interference_against_pairing(n, channels, seed):
    rng = np.random.default_rng(seed)
    adj = rng.random((n, n)) < 0.5
    np.fill_diagonal(adj, False)
    rx = rng.uniform(0, 1, (n, n))
    ch = radio.assign_channels(n, channels)
    got = radio.co_channel_interference(rx, adj, ch)
    for i in range(n):
        for k in range(n):
            if i == k:
                continue
            ref = sum(rx[l, k] for l in range(n) if l not in (i, k) and adj[l, k] and ch[l] == ch[i])
            assert got[i, k] == pytest.approx(ref, abs=1e-12)
