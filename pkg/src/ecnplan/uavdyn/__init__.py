"""Quadrotor motion: power model, time-optimal segments, closed-loop tracking, mission ledger."""
from .bangbang import (SegmentPlan, closed_form_t_star, printed_t_star, segment_energy, segment_plan,
                       segment_wind, simulate_profile, uniform_energy, uniform_time)
from .ledger import MissionLedger, mission_ledger, receive_time, uniform_ledger
from .params import UavParams
from .power import horizontal_power, hover_power, induced_ratio, motion_power, vertical_power
from .tracking import Gains, Mixer, TrackingResult, UavState, simulate_hover, simulate_tracking

__all__ = [
    "SegmentPlan", "closed_form_t_star", "printed_t_star", "segment_energy", "segment_plan", "segment_wind",
    "simulate_profile", "uniform_energy", "uniform_time", "MissionLedger", "mission_ledger", "receive_time",
    "uniform_ledger", "UavParams", "horizontal_power", "hover_power", "induced_ratio", "motion_power",
    "vertical_power", "Gains", "Mixer", "TrackingResult", "UavState", "simulate_hover", "simulate_tracking",
]
