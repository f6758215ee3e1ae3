"""Rotary-wing motion power: vertical branch plus horizontal blade/parasite terms."""
from __future__ import annotations

import math

from scipy.optimize import brentq

from ..errors import ConvergenceError
from .params import UavParams


def induced_ratio(v_h: float, params: UavParams) -> float:
    """Solve ``K a sqrt(v^3/(w r)^2 + a^2) = m g`` for ``a >= 0`` by bracketing."""
    if v_h < 0:
        raise ValueError("horizontal speed must be non-negative")
    w, r = params.omega, params.rotor_radius
    k = 2.0 * math.pi * params.rho * w * w * r ** 4
    c = v_h ** 3 / (w * w * r * r)
    mg = params.weight

    def residual(a):
        return k * a * math.sqrt(c + a * a) - mg

    # residual is increasing; at a = sqrt(mg/k) it is non-negative
    hi = math.sqrt(mg / k)
    while residual(hi) < 0:
        hi *= 2.0
    try:
        return brentq(residual, 0.0, hi, xtol=1e-14, rtol=1e-13, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"induced ratio root not bracketed in [0, {hi}]: {exc}") from exc


def vertical_power(v_v: float, params: UavParams) -> float:
    """Climb/descent branch; a negative descent value is clamped to zero."""
    mg = params.weight
    root = math.sqrt(v_v * v_v + 2.0 * mg / (params.rho * math.pi * params.rotor_radius))
    if v_v >= 0:
        return 0.5 * mg * v_v + 0.5 * mg * root
    return max(0.0, 0.5 * mg * v_v - 0.5 * mg * root)


def horizontal_power(v_h: float, params: UavParams) -> float:
    p = params
    w, r = p.omega, p.rotor_radius
    parasite = 0.5 * p.rho * p.drag_coefficient * p.equivalent_area * v_h ** 3
    blade = (math.pi / 4.0) * p.blade_count * p.blade_chord * p.rho * p.drag_coefficient * w ** 3 * r ** 4 \
        * (1.0 + 3.0 * (v_h / (w * r)) ** 2)
    induced = w * r * p.weight * induced_ratio(v_h, p)
    return parasite + blade + induced


def motion_power(v_v: float, v_h: float, params: UavParams) -> float:
    """Total motion power (W) at signed vertical speed ``v_v`` and horizontal speed ``v_h``."""
    return vertical_power(v_v, params) + horizontal_power(v_h, params)


def hover_power(params: UavParams) -> float:
    return params.hover_power if params.hover_power is not None else motion_power(0.0, 0.0, params)
