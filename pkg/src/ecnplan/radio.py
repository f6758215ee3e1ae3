"""Channel models shared by the D2D and D2V layers.

All losses are in dB, powers in mW unless the name says dBm.  The LoS/NLoS
excess terms are added to the free-space loss by default; ``excess_mode="printed"``
subtracts them instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class RadioParams:
    a: float = 11.95
    b: float = 0.14
    eta_los_db: float = 3.0
    eta_nlos_db: float = 23.0
    gain: float = 1.0
    carrier_hz: float = 433e6
    n0_dbm: float = -130.0
    # value of the tabulated "standard deviation of path loss"
    sigma_db: float = 3.65
    # "printed": Q argument divided by the tabulated value; "conventional": by its square root
    sigma_mode: str = "printed"
    # "additive": loss = fspl + excess (NLoS costs more); "printed": fspl - excess
    excess_mode: str = "additive"
    epsilon: float = 0.01
    # received-power threshold; see README for why this is not the tabulated 5
    p_min_dbm: float = -75.0
    p_max_mw: float = 10.0
    bandwidth_hz: float = 1e6
    channels: int = 4
    gamma: float = 1.0
    packet_bytes: float = 124.0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.p_max_mw <= 0 or self.bandwidth_hz <= 0 or self.gamma <= 0:
            raise ValueError("p_max_mw, bandwidth_hz and gamma must be positive")
        if self.channels < 1:
            raise ValueError("need at least one channel")
        if self.sigma_mode not in ("printed", "conventional"):
            raise ValueError("sigma_mode must be 'printed' or 'conventional'")
        if self.excess_mode not in ("additive", "printed"):
            raise ValueError("excess_mode must be 'additive' or 'printed'")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def shadowing_db(self) -> float:
        """Scale dividing the dB margin inside the Q-function."""
        return self.sigma_db if self.sigma_mode == "printed" else math.sqrt(self.sigma_db)

    @property
    def excess_sign(self) -> float:
        return 1.0 if self.excess_mode == "additive" else -1.0

    @property
    def n0_mw(self) -> float:
        return dbm_to_mw(self.n0_dbm)

    @property
    def p_min_mw(self) -> float:
        return dbm_to_mw(self.p_min_dbm)

    def with_(self, **changes) -> "RadioParams":
        return replace(self, **changes)


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) if np.ndim(dbm) else 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw) if np.ndim(mw) else 10.0 * math.log10(mw)


def fspl_db(d, params: RadioParams):
    """Free-space loss ``10 log10((4 pi d)^2 / (G lambda^2))``."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise DomainError("distance must be positive")
    out = 20.0 * np.log10(4.0 * math.pi * d_arr / params.wavelength) - 10.0 * math.log10(params.gain)
    return float(out) if np.ndim(d) == 0 else out


def los_probability(theta_deg, params: RadioParams):
    """Logistic LoS probability for elevation angle in degrees."""
    th = np.asarray(theta_deg, dtype=float)
    out = 1.0 / (1.0 + params.a * np.exp(-params.b * (th - params.a)))
    return float(out) if np.ndim(theta_deg) == 0 else out


def a2g_loss_db(d, h, params: RadioParams):
    """Air-to-ground loss blending LoS and NLoS excess by elevation probability."""
    d_arr = np.asarray(d, dtype=float)
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr <= 0) or np.any(h_arr > d_arr * (1.0 + 1e-12)):
        raise DomainError("a2g loss needs 0 < h <= d")
    theta = np.degrees(np.arcsin(np.minimum(h_arr / d_arr, 1.0)))
    out = fspl_db(d_arr, params) + blended_excess_db(los_probability(theta, params), params)
    return float(out) if np.ndim(d) == 0 and np.ndim(h) == 0 else out


def blended_excess_db(p_los, params: RadioParams):
    """LoS-probability weighted excess loss, signed per ``params.excess_mode``."""
    return params.excess_sign * (p_los * params.eta_los_db + (1.0 - p_los) * params.eta_nlos_db)


def overhead_offset_db(params: RadioParams) -> float:
    """Constant ``C`` with ``a2g_loss_db(h, h) == fspl_db(h) + C`` (hover straight above)."""
    return float(blended_excess_db(los_probability(90.0, params), params))


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(Z > x)``."""
    out = ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(x) == 0 else out


def outage_probability(p_tx_mw, loss_db, params: RadioParams):
    """``1 - Q((P_min - rx) / s)`` with rx and P_min in dBm and s the shadowing scale."""
    p = np.asarray(p_tx_mw, dtype=float)
    if np.any(p <= 0):
        raise DomainError("transmit power must be positive")
    rx_dbm = 10.0 * np.log10(p) - np.asarray(loss_db, dtype=float)
    out = 1.0 - ndtr(-(params.p_min_dbm - rx_dbm) / params.shadowing_db)
    return float(out) if np.ndim(out) == 0 else out


def sinr(rx_signal_mw: float, interferers_mw, n0_mw: float) -> float:
    if n0_mw <= 0:
        raise DomainError("noise power must be positive")
    return float(rx_signal_mw) / (n0_mw + float(np.sum(interferers_mw)))


def capacity(bandwidth_hz: float, sinr_value):
    """Shannon rate in bit/s."""
    s = np.asarray(sinr_value, dtype=float)
    if np.any(s < 0):
        raise DomainError("SINR must be non-negative")
    out = bandwidth_hz * np.log2(1.0 + s)
    return float(out) if np.ndim(sinr_value) == 0 else out


def assign_channels(n: int, channels: int) -> np.ndarray:
    """FDMA channel per device, round-robin over device index."""
    return np.arange(n) % channels


def co_channel_interference(rx_mw_matrix, adjacency, channels, per_link_mw: float | None = None) -> np.ndarray:
    """Interference on each link i->k from co-channel in-neighbours of k other than i.

    With ``per_link_mw`` every interferer contributes that received power (the
    sensitivity level reached under minimum-power assignment); otherwise entry
    ``rx_mw_matrix[l, k]`` is used for interferer l.
    """
    adj = np.asarray(adjacency, dtype=bool)
    ch = np.asarray(channels)
    same = (ch[:, None] == ch[None, :]).astype(float)
    contrib = adj.astype(float) if per_link_mw is not None else adj * np.asarray(rx_mw_matrix, dtype=float)
    out = same @ contrib - contrib
    if per_link_mw is not None:
        out = out * per_link_mw
    np.fill_diagonal(out, 0.0)
    return out
