"""Airframe constants and derived quantities."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class UavParams:
    mass: float = 4.0
    g: float = 9.8
    rho: float = 1.225
    drag_coefficient: float = 0.117
    blade_chord: float = 0.1
    blade_count: int = 4
    arm_length: float = 0.3
    rotor_radius: float = 0.15
    i_xx: float = 6.302e-2
    i_yy: float = 6.302e-2
    i_zz: float = 1.171e-2
    f_max: float = 68.1
    c_t: float = 2.646e-5
    c_m: float = 4.411e-7
    # fuselage equivalent flat-plate area in the parasite term
    equivalent_area: float = 0.05
    # rotor angular speed in the blade-power terms; None means the hover speed
    rotor_speed: float | None = None
    # None means motion_power(0, 0)
    hover_power: float | None = None
    receive_power: float = 5.0
    e_max: float = 2.0e6

    def __post_init__(self):
        for name in ("mass", "g", "rho", "drag_coefficient", "blade_chord", "arm_length", "rotor_radius",
                     "i_xx", "i_yy", "i_zz", "f_max", "c_t", "c_m", "equivalent_area", "receive_power", "e_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.blade_count < 1:
            raise ValueError("blade_count must be positive")
        if self.f_max <= self.weight:
            raise ValueError("maximum lift must exceed the weight")

    @property
    def weight(self) -> float:
        return self.mass * self.g

    @property
    def omega(self) -> float:
        if self.rotor_speed is not None:
            return self.rotor_speed
        return math.sqrt(self.weight / (4.0 * self.c_t))

    @property
    def motor_speed_max(self) -> float:
        """Per-motor speed at which four motors together give ``f_max``."""
        return math.sqrt(self.f_max / (4.0 * self.c_t))

    def with_(self, **changes) -> "UavParams":
        return replace(self, **changes)
