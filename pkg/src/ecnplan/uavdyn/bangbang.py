"""Time-optimal rest-to-rest flight along a straight segment.

Gravity plus wind drag gives a constant external force ``E``.  The lift must
cancel the component of ``E`` across the segment, so the largest lift share
left along it is ``sqrt(f_max^2 - e_perp^2)``.  Full lift forward then full
lift backward gives the two accelerations of the bang-bang profile, unless
keeping the airframe upright forbids the backward push.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InfeasibleSegmentError
from .params import UavParams
from .power import motion_power


@dataclass(frozen=True)
class SegmentPlan:
    start: tuple[float, float, float]
    end: tuple[float, float, float]
    distance: float
    direction: tuple[float, float, float]
    t_star: float
    t_bar: float
    a_max: float
    a_min: float
    theta_ab: float
    psi_ab: float
    theta_w: float
    psi_w: float
    p: float
    q: float
    thrust_tilt: float
    wind_force: tuple[float, float, float]
    # the printed closed form, kept for the discrepancy log
    t_star_printed: float

    @property
    def peak_speed(self) -> float:
        return self.a_max * self.t_bar

    def speed_at(self, t: float) -> float:
        if t <= 0 or t >= self.t_star:
            return 0.0
        if t <= self.t_bar:
            return self.a_max * t
        return self.peak_speed + self.a_min * (t - self.t_bar)

    def accel_at(self, t: float) -> float:
        if t < 0 or t >= self.t_star:
            return 0.0
        return self.a_max if t < self.t_bar else self.a_min

    def progress_at(self, t: float) -> float:
        """Distance travelled along the segment at time ``t``."""
        if t <= 0:
            return 0.0
        if t >= self.t_star:
            return self.distance
        if t <= self.t_bar:
            return 0.5 * self.a_max * t * t
        tau = t - self.t_bar
        return 0.5 * self.a_max * self.t_bar ** 2 + self.peak_speed * tau + 0.5 * self.a_min * tau * tau


def _angle(u, v) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(math.acos(max(-1.0, min(1.0, float(np.dot(u, v)) / (nu * nv)))))


def printed_t_star(distance: float, a_max: float, cos_theta: float, g: float) -> float:
    """The closed form as printed, which drops ``a_max`` from the numerator."""
    den = a_max * a_max + 2.0 * a_max * g * cos_theta
    num = 4.0 * distance * g * cos_theta
    if den <= 0 or num < 0:
        return math.nan
    return math.sqrt(num / den)


def closed_form_t_star(distance: float, a_max: float, cos_theta: float, g: float) -> float:
    """Calm-air switching-time solution with ``a_min = -(a_max + 2 g cos(theta))``."""
    return math.sqrt(4.0 * distance * (a_max + g * cos_theta) / (a_max * (a_max + 2.0 * g * cos_theta)))


def segment_plan(start, end, wind_force, params: UavParams, lift_fraction: float = 1.0,
                 min_vertical_lift: float | None = 0.0) -> SegmentPlan:
    """Bang-bang plan from ``start`` to ``end`` under a constant wind force.

    Rotors only push along the body axis, so by default the lift keeps at
    least ``min_vertical_lift`` newtons upward; this caps braking on steep
    climbs and acceleration on steep descents.  ``None`` lifts the restriction
    and lets lift point anywhere.
    """
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    wind = np.zeros(3) if wind_force is None else np.asarray(wind_force, dtype=float)
    delta = b - a
    d = float(np.linalg.norm(delta))
    f_max = params.f_max * lift_fraction
    m = params.mass
    external = wind + np.array([0.0, 0.0, -params.weight])
    if np.linalg.norm(external) >= f_max:
        raise InfeasibleSegmentError(f"|gravity + wind| = {np.linalg.norm(external):.3f} N exceeds lift {f_max:.3f} N")
    if d == 0.0:
        u = np.array([1.0, 0.0, 0.0])
    else:
        u = delta / d
    e_par = float(external @ u)
    e_perp2 = max(0.0, float(external @ external) - e_par * e_par)
    along = math.sqrt(f_max * f_max - e_perp2)
    a_max = (e_par + along) / m
    a_min = (e_par - along) / m
    if min_vertical_lift is not None and abs(u[2]) > 1e-12:
        # vertical lift m*a*u_z - E_z must stay >= min_vertical_lift
        bound = (min_vertical_lift + external[2]) / (m * u[2])
        if u[2] > 0:
            a_min = max(a_min, bound)
        else:
            a_max = min(a_max, bound)
    if not (a_max > 0 and a_min < 0):
        raise InfeasibleSegmentError("no accelerating and braking lift along the segment")
    t_star = math.sqrt(2.0 * d * (a_max - a_min) / (-a_max * a_min))
    t_bar = -t_star * a_min / (a_max - a_min)
    lift = m * a_max * u - external
    theta_ab = math.acos(max(-1.0, min(1.0, float(u[2]))))
    wnorm = float(np.linalg.norm(wind))
    return SegmentPlan(
        start=tuple(a), end=tuple(b), distance=d, direction=tuple(u), t_star=t_star, t_bar=t_bar,
        a_max=a_max, a_min=a_min, theta_ab=theta_ab, psi_ab=math.atan2(u[1], u[0]),
        theta_w=math.acos(max(-1.0, min(1.0, wind[2] / wnorm))) if wnorm > 0 else 0.0,
        psi_w=math.atan2(wind[1], wind[0]) if wnorm > 0 else 0.0,
        p=_angle(u, lift), q=_angle(u, wind), thrust_tilt=_angle(np.array([0.0, 0.0, 1.0]), lift),
        wind_force=tuple(wind), t_star_printed=printed_t_star(d, a_max, math.cos(theta_ab), params.g))


def simulate_profile(plan: SegmentPlan, steps: int = 2000) -> tuple[float, float]:
    """Integrate the bang-bang acceleration exactly per step; returns (distance, final speed)."""
    if plan.t_star == 0:
        return 0.0, 0.0
    x = v = 0.0
    h1 = plan.t_bar / steps
    for _ in range(steps):
        x += v * h1 + 0.5 * plan.a_max * h1 * h1
        v += plan.a_max * h1
    h2 = (plan.t_star - plan.t_bar) / steps
    for _ in range(steps):
        x += v * h2 + 0.5 * plan.a_min * h2 * h2
        v += plan.a_min * h2
    return x, v


def segment_energy(plan: SegmentPlan, params: UavParams, samples: int = 64) -> float:
    """Motion energy (J) over the profile by composite Simpson in each phase."""
    if plan.t_star == 0:
        return 0.0
    ux, uy, uz = plan.direction
    horiz = math.hypot(ux, uy)

    def power(t):
        s = plan.speed_at(t)
        return motion_power(s * uz, s * horiz, params)

    total = 0.0
    n = samples if samples % 2 == 0 else samples + 1
    for lo, hi in ((0.0, plan.t_bar), (plan.t_bar, plan.t_star)):
        if hi <= lo:
            continue
        h = (hi - lo) / n
        acc = power(lo) + power(hi)
        for k in range(1, n):
            acc += (4.0 if k % 2 else 2.0) * power(lo + k * h)
        total += acc * h / 3.0
    return total


def uniform_time(distance: float, speed: float) -> float:
    if not speed > 0:
        raise ValueError("uniform speed must be positive")
    return distance / speed


def uniform_energy(plan: SegmentPlan, speed: float, params: UavParams) -> float:
    ux, uy, uz = plan.direction
    return motion_power(speed * uz, speed * math.hypot(ux, uy), params) * uniform_time(plan.distance, speed)


def segment_wind(force_at, start, end, samples: int = 16) -> np.ndarray:
    """Mean of ``force_at(point)`` over evenly spaced points on the segment."""
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    pts = [a + (b - a) * (k + 0.5) / samples for k in range(samples)]
    return np.mean([np.asarray(force_at(p), dtype=float) for p in pts], axis=0)
