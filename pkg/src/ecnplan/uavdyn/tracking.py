"""Closed-loop quadrotor flight along a bang-bang reference.

Cascade: position PID gives a thrust vector, which is inverted to lift and
desired roll/pitch; attitude PID gives body torques; the mixer inverse gives
per-motor speed commands (clamped to the motor limit); a motor speed loop
drives the rotors.  The rigid body is integrated with fixed-step RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrackingError
from .bangbang import SegmentPlan, segment_plan
from .params import UavParams


@dataclass(frozen=True)
class Gains:
    pos_p: float = 3.0
    pos_i: float = 0.2
    pos_d: float = 6.0
    att_p: float = 120.0
    att_i: float = 0.0
    att_d: float = 32.0
    yaw_p: float = 4.0
    yaw_d: float = 4.0
    motor_p: float = 80.0
    motor_i: float = 0.0
    motor_d: float = 0.0

    def __post_init__(self):
        for name in ("pos_p", "pos_d", "att_p", "att_d", "yaw_p", "yaw_d", "motor_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive")


@dataclass
class UavState:
    position: list
    velocity: list
    attitude: list
    rates: list
    motors: list

    @classmethod
    def hovering(cls, position, params: UavParams, yaw: float = 0.0) -> "UavState":
        w = math.sqrt(params.weight / (4.0 * params.c_t))
        return cls(list(map(float, position)), [0.0] * 3, [0.0, 0.0, yaw], [0.0] * 3, [w] * 4)

    def flat(self) -> list:
        return self.position + self.velocity + self.attitude + self.rates + self.motors


@dataclass
class TrackingResult:
    elapsed: float
    converged: bool
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    lift: np.ndarray = field(repr=False)
    clamp_events: int = 0
    max_lift: float = 0.0


class Mixer:
    """Map ``(f, tau_x, tau_y, tau_z)`` to squared motor speeds and back."""

    def __init__(self, params: UavParams):
        ct, cm, d = params.c_t, params.c_m, params.arm_length
        self.forward = np.array([[ct, ct, ct, ct],
                                 [0.0, -d * ct, 0.0, d * ct],
                                 [d * ct, 0.0, -d * ct, 0.0],
                                 [cm, -cm, cm, -cm]])
        self.inverse = np.linalg.inv(self.forward)
        self._inv = self.inverse.tolist()
        self._fwd = self.forward.tolist()
        self.limit = params.motor_speed_max ** 2

    def speeds_squared(self, f, tx, ty, tz):
        """Unconstrained inverse of the mixing matrix."""
        cmd = (f, tx, ty, tz)
        return [sum(row[k] * cmd[k] for k in range(4)) for row in self._inv]

    def allocate(self, f, tx, ty, tz) -> tuple[list, bool]:
        """Squared speeds within ``[0, limit]``, giving up yaw, then lift, then roll/pitch.

        Returns the speeds and whether the raw command had to be altered.
        """
        inv, top = self._inv, self.limit
        rp = [row[1] * tx + row[2] * ty for row in inv]
        yaw = [row[3] * tz for row in inv]
        base = f * inv[0][0]
        raw = [base + a + b for a, b in zip(rp, yaw)]
        if min(raw) >= 0.0 and max(raw) <= top:
            return raw, False
        spread = max(rp) - min(rp)
        if spread > top:
            rp = [v * top / spread for v in rp]
        base = min(max(base, -min(rp)), top - max(rp))
        scale = 1.0
        for a, b in zip(rp, yaw):
            level = base + a
            if b > 0:
                scale = min(scale, (top - level) / b)
            elif b < 0:
                scale = min(scale, level / -b)
        scale = max(scale, 0.0)
        out = [min(max(base + a + scale * b, 0.0), top) for a, b in zip(rp, yaw)]
        return out, True

    def wrench(self, w2):
        return [sum(row[k] * w2[k] for k in range(4)) for row in self._fwd]


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _derivative(x, cmd_motor, motor_integral, wind, params: UavParams, gains: Gains, mixer: Mixer, w_max):
    px, py, pz, vx, vy, vz, phi, theta, psi, p, q, r, w1, w2, w3, w4 = x
    ws = [min(max(w, 0.0), w_max) for w in (w1, w2, w3, w4)]
    f, tx, ty, tz = mixer.wrench([w * w for w in ws])
    m = params.mass
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    spsi, cpsi = math.sin(psi), math.cos(psi)
    ax = f / m * (spsi * sphi + cpsi * sth * cphi) + wind[0] / m
    ay = f / m * (-cpsi * sphi + cphi * sth * spsi) + wind[1] / m
    az = f / m * cth * cphi - params.g + wind[2] / m
    dw = [gains.motor_p * (cmd_motor[k] - (w1, w2, w3, w4)[k]) + gains.motor_i * motor_integral[k] for k in range(4)]
    return [vx, vy, vz, ax, ay, az, p, q, r, tx / params.i_xx, ty / params.i_yy, tz / params.i_zz, *dw]


def _rk4(x, h, *args):
    k1 = _derivative(x, *args)
    k2 = _derivative([a + 0.5 * h * b for a, b in zip(x, k1)], *args)
    k3 = _derivative([a + 0.5 * h * b for a, b in zip(x, k2)], *args)
    k4 = _derivative([a + h * b for a, b in zip(x, k3)], *args)
    return [a + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]


# share of the weight the reference keeps as upward lift while braking
REFERENCE_VERTICAL_MARGIN = 0.15


def reference_plan(plan: SegmentPlan, params: UavParams, lift_fraction: float) -> SegmentPlan:
    """Slower copy of ``plan`` leaving lift headroom for the feedback loops."""
    return segment_plan(plan.start, plan.end, plan.wind_force, params, lift_fraction,
                        min_vertical_lift=REFERENCE_VERTICAL_MARGIN * params.weight)


class CascadeController:
    """Position PID -> thrust inversion -> attitude PID -> mixer -> motor loop."""

    def __init__(self, params: UavParams, gains: Gains, dt: float, wind_estimate, yaw: float):
        self.params, self.gains, self.dt = params, gains, dt
        self.mixer = Mixer(params)
        self.wind = list(wind_estimate)
        self.yaw = yaw
        self.pos_int = [0.0] * 3
        self.att_int = [0.0] * 3
        self.motor_int = [0.0] * 4
        self.prev_motor_err = None
        self.clamps = 0

    def command(self, x, p_ref, v_ref, a_ref):
        """Motor speed targets for state ``x``; returns (targets, motor integral)."""
        p, gk, dt = self.params, self.gains, self.dt
        m, g = p.mass, p.g
        e_p = [p_ref[k] - x[k] for k in range(3)]
        e_v = [v_ref[k] - x[3 + k] for k in range(3)]
        self.pos_int = [self.pos_int[k] + e_p[k] * dt for k in range(3)]
        a_cmd = [a_ref[k] + gk.pos_p * e_p[k] + gk.pos_i * self.pos_int[k] + gk.pos_d * e_v[k] for k in range(3)]
        thrust = [m * a_cmd[0] - self.wind[0], m * a_cmd[1] - self.wind[1], m * (a_cmd[2] + g) - self.wind[2]]
        # rotors cannot push downward: keep a small upward share and fall otherwise
        thrust[2] = max(thrust[2], 0.05 * p.weight)
        f = math.sqrt(thrust[0] ** 2 + thrust[1] ** 2 + thrust[2] ** 2)
        bx, by, bz = thrust[0] / f, thrust[1] / f, thrust[2] / f
        sp, cp = math.sin(self.yaw), math.cos(self.yaw)
        phi_d = math.asin(max(-1.0, min(1.0, sp * bx - cp * by)))
        theta_d = math.atan2(cp * bx + sp * by, bz)
        if f > p.f_max:
            f = p.f_max
            self.clamps += 1
        err = [phi_d - x[6], theta_d - x[7], _wrap(self.yaw - x[8])]
        self.att_int = [self.att_int[k] + err[k] * dt for k in range(3)]
        tx = p.i_xx * (gk.att_p * err[0] + gk.att_i * self.att_int[0] - gk.att_d * x[9])
        ty = p.i_yy * (gk.att_p * err[1] + gk.att_i * self.att_int[1] - gk.att_d * x[10])
        tz = p.i_zz * (gk.yaw_p * err[2] - gk.yaw_d * x[11])
        w2, clipped = self.mixer.allocate(f, tx, ty, tz)
        self.clamps += clipped
        cmd = [math.sqrt(v) for v in w2]
        motor_err = [cmd[k] - x[12 + k] for k in range(4)]
        self.motor_int = [self.motor_int[k] + motor_err[k] * dt for k in range(4)]
        if self.prev_motor_err is None or gk.motor_d == 0.0:
            targets = cmd
        else:
            targets = [cmd[k] + gk.motor_d / gk.motor_p * (motor_err[k] - self.prev_motor_err[k]) / dt
                       for k in range(4)]
        self.prev_motor_err = motor_err
        return targets, self.motor_int


def _lift(x, params: UavParams, w_max: float) -> float:
    return params.c_t * sum(min(max(w, 0.0), w_max) ** 2 for w in x[12:16])


def simulate_tracking(plan: SegmentPlan, params: UavParams, gains: Gains | None = None, dt: float = 0.005,
                      wind=None, pos_tol: float = 0.5, vel_tol: float = 0.5, reference_lift: float = 0.9,
                      timeout_factor: float = 5.0, record_every: int = 1, lead: float = 0.2) -> TrackingResult:
    """Fly ``plan`` in closed loop; raises TrackingError past ``timeout_factor * t_star``.

    ``wind`` is the true force on the airframe (defaults to the force the plan
    was built for, which is also what the controller compensates).  The
    reference profile uses ``reference_lift`` of the lift limit, and its
    acceleration feed-forward is taken ``lead`` seconds ahead to cover the
    attitude lag.
    """
    if not 0 < dt <= 0.02:
        raise ValueError("dt must lie in (0, 0.02] s")
    gains = gains or Gains()
    true_wind = list(plan.wind_force if wind is None else map(float, wind))
    target = list(plan.end)
    x = UavState.hovering(plan.start, params, plan.psi_ab).flat()
    times, rows, lifts = [0.0], [list(x)], [params.weight]
    if plan.distance <= pos_tol:
        return TrackingResult(0.0, True, np.array(times), np.array(rows), np.array(lifts), 0, params.weight)

    ref = reference_plan(plan, params, reference_lift)
    u = ref.direction
    ctrl = CascadeController(params, gains, dt, plan.wind_force, plan.psi_ab)
    w_max = params.motor_speed_max
    limit = timeout_factor * plan.t_star
    max_lift = params.weight
    steps = 0
    t = 0.0
    while True:
        s, v, a = ref.progress_at(t), ref.speed_at(t), ref.accel_at(t + lead)
        targets, integral = ctrl.command(x, [plan.start[k] + s * u[k] for k in range(3)],
                                         [v * u[k] for k in range(3)], [a * u[k] for k in range(3)])
        x = _rk4(x, dt, targets, integral, true_wind, params, gains, ctrl.mixer, w_max)
        t += dt
        steps += 1
        lift = _lift(x, params, w_max)
        max_lift = max(max_lift, lift)
        err = math.dist(x[0:3], target)
        speed = math.sqrt(x[3] ** 2 + x[4] ** 2 + x[5] ** 2)
        done = t >= ref.t_star and err < pos_tol and speed < vel_tol
        if steps % record_every == 0 or done:
            times.append(t)
            rows.append(list(x))
            lifts.append(lift)
        if done:
            return TrackingResult(t, True, np.array(times), np.array(rows), np.array(lifts), ctrl.clamps, max_lift)
        if t > limit:
            raise TrackingError(f"target not reached within {limit:.2f} s (error {err:.2f} m, speed {speed:.2f} m/s)")


def simulate_hover(position, params: UavParams, duration: float = 5.0, dt: float = 0.005,
                   gains: Gains | None = None, tilt: float = 0.05) -> TrackingResult:
    """Hold position starting from a small roll/pitch offset."""
    gains = gains or Gains()
    x = UavState.hovering(position, params).flat()
    x[6], x[7] = tilt, -tilt
    ctrl = CascadeController(params, gains, dt, (0.0, 0.0, 0.0), 0.0)
    w_max = params.motor_speed_max
    target = [float(v) for v in position]
    times, rows, lifts = [0.0], [list(x)], [params.weight]
    t = 0.0
    while t < duration - 1e-12:
        targets, integral = ctrl.command(x, target, [0.0] * 3, [0.0] * 3)
        x = _rk4(x, dt, targets, integral, [0.0] * 3, params, gains, ctrl.mixer, w_max)
        t += dt
        times.append(t)
        rows.append(list(x))
        lifts.append(_lift(x, params, w_max))
    return TrackingResult(t, True, np.array(times), np.array(rows), np.array(lifts), ctrl.clamps, max(lifts))
