"""Decomposition-based evolutionary search over (UAV count, caching-centre power).

Each weight vector defines a Tchebycheff subproblem; neighbouring subproblems
share offspring.  Every evaluated solution is offered to an external archive
that keeps only mutually non-dominated members.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .d2vplan import Waypoint, allocate, capacity_at, ground_to_air_loss_db, optimal_waypoint, plan_waypoints
from .errors import InfeasibleError, InfeasibleLinkError
from .radio import RadioParams
from .terrain import DemGrid
from .uavdyn.bangbang import segment_plan
from .uavdyn.ledger import MissionLedger, mission_ledger, receive_time
from .uavdyn.params import UavParams

TIME_PENALTY = 1.0e4
ENERGY_PENALTY = 1.0e7
POWER_QUANTUM = 0.01


@dataclass(frozen=True)
class MopSolution:
    x1: int
    x2: float
    f1: float
    f2: float
    feasible: bool = True
    violation: float = 0.0
    # g1 is the power slack (mW), g2 the smallest energy slack over UAVs (J)
    g1: float = 0.0
    g2: float = 0.0
    details: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.f1, self.f2)


def pareto_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def constrained_dominates(a: MopSolution, b: MopSolution) -> bool:
    """Feasible beats infeasible; among infeasible, smaller violation wins."""
    if a.feasible != b.feasible:
        return a.feasible
    if not a.feasible and a.violation != b.violation:
        return a.violation < b.violation
    return pareto_dominates(a.objectives, b.objectives)


class ParetoArchive:
    def __init__(self):
        self.solutions: list[MopSolution] = []
        self.ideal = [math.inf, math.inf]

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def add(self, sol: MopSolution) -> bool:
        """Insert ``sol`` unless it is dominated or duplicates a member's objectives."""
        self.ideal = [min(self.ideal[0], sol.f1), min(self.ideal[1], sol.f2)]
        for other in self.solutions:
            if constrained_dominates(other, sol) or other.objectives == sol.objectives:
                return False
        self.solutions = [o for o in self.solutions if not constrained_dominates(sol, o)]
        self.solutions.append(sol)
        return True

    def sorted(self) -> list[MopSolution]:
        return sorted(self.solutions, key=lambda s: (s.f1, s.f2, s.x1, s.x2))

    def audit(self) -> bool:
        """Quadratic check that no member dominates another."""
        return not any(i != j and constrained_dominates(a, b)
                       for i, a in enumerate(self.solutions) for j, b in enumerate(self.solutions))


def tchebycheff(f: Sequence[float], weights: Sequence[float], ideal: Sequence[float]) -> float:
    return max(w * abs(fi - zi) for fi, w, zi in zip(f, weights, ideal))


def das_dennis(divisions: int) -> np.ndarray:
    """Evenly spread two-objective weight vectors, ``divisions + 1`` rows."""
    if divisions < 1:
        raise ValueError("need at least one division")
    k = np.arange(divisions + 1) / divisions
    return np.column_stack([k, 1.0 - k])


def neighborhoods(weights: np.ndarray, size: int) -> np.ndarray:
    d = np.linalg.norm(weights[:, None, :] - weights[None, :, :], axis=2)
    # stable sort keeps index order among equal distances
    return np.argsort(d, axis=1, kind="stable")[:, :min(size, len(weights))]


class Problem(Protocol):
    x1_max: int
    x2_bounds: tuple[float, float]

    def evaluate(self, x1: int, x2: float) -> MopSolution: ...


class CachedProblem:
    """Memoises ``evaluate`` on (x1, x2 rounded to the power quantum)."""

    def __init__(self, problem: Problem, quantum: float = POWER_QUANTUM):
        self.problem = problem
        self.quantum = quantum
        self.cache: dict[tuple[int, float], MopSolution] = {}
        self.hits = 0

    @property
    def x1_max(self) -> int:
        return self.problem.x1_max

    @property
    def x2_bounds(self) -> tuple[float, float]:
        return self.problem.x2_bounds

    def evaluate(self, x1: int, x2: float) -> MopSolution:
        key = (int(x1), round(round(x2 / self.quantum) * self.quantum, 10))
        if key in self.cache:
            self.hits += 1
            return self.cache[key]
        sol = self.problem.evaluate(*key)
        self.cache[key] = sol
        return sol


class AnalyticStub:
    """Front known in closed form: f1 = 1/x1, f2 = x1, power irrelevant."""

    def __init__(self, x1_max: int = 10, x2_bounds=(0.1, 10.0)):
        self.x1_max = x1_max
        self.x2_bounds = tuple(x2_bounds)

    def evaluate(self, x1: int, x2: float) -> MopSolution:
        return MopSolution(int(x1), float(x2), 1.0 / x1, float(x1))

    def front(self) -> list[tuple[float, float]]:
        return [(1.0 / k, float(k)) for k in range(1, self.x1_max + 1)]


@dataclass
class MoeadResult:
    archive: ParetoArchive
    log: list[dict]
    population: list[MopSolution]
    weights: np.ndarray


def _repair_x1(value: float, x1_max: int) -> int:
    return int(min(max(int(round(value)), 1), x1_max))


def _vary(rng: np.random.Generator, a: MopSolution, b: MopSolution, x1_max: int, bounds,
          crossover_rate: float, eta_c: float, eta_m: float) -> tuple[int, float]:
    lo, hi = bounds
    # x2: simulated binary crossover and polynomial mutation
    x2 = a.x2
    if rng.random() < crossover_rate and a.x2 != b.x2:
        u = rng.random()
        beta = (2 * u) ** (1 / (eta_c + 1)) if u <= 0.5 else (1 / (2 * (1 - u))) ** (1 / (eta_c + 1))
        x2 = 0.5 * ((1 + beta) * a.x2 + (1 - beta) * b.x2)
    if rng.random() < 0.5:
        u = rng.random()
        delta = (2 * u) ** (1 / (eta_m + 1)) - 1 if u < 0.5 else 1 - (2 * (1 - u)) ** (1 / (eta_m + 1))
        x2 += delta * (hi - lo)
    x2 = float(min(max(x2, lo), hi))
    # x1: blend then round with repair; occasional unit step
    w = rng.random()
    x1 = w * a.x1 + (1 - w) * b.x1 if rng.random() < crossover_rate else float(a.x1)
    if rng.random() < 0.5:
        x1 += rng.choice((-1.0, 1.0))
    return _repair_x1(x1, x1_max), x2


def _improves(child: MopSolution, current: MopSolution, weight, ideal) -> bool:
    if child.feasible != current.feasible:
        return child.feasible
    if not child.feasible and child.violation != current.violation:
        return child.violation < current.violation
    return tchebycheff(child.objectives, weight, ideal) < tchebycheff(current.objectives, weight, ideal)


def run_moead(problem: Problem, pop_size: int = 20, generations: int = 30, neighborhood_size: int = 5,
              seed: int = 0, crossover_rate: float = 0.9, eta_c: float = 20.0, eta_m: float = 20.0,
              on_generation: Callable[[int, ParetoArchive], None] | None = None) -> MoeadResult:
    if pop_size < 2:
        raise ValueError("population needs at least two members")
    rng = np.random.default_rng(seed)
    weights = das_dennis(pop_size - 1)
    hood = neighborhoods(weights, neighborhood_size)
    lo, hi = problem.x2_bounds
    archive = ParetoArchive()
    ideal = [math.inf, math.inf]
    evaluations = 0

    def offer(sol):
        nonlocal evaluations
        evaluations += 1
        ideal[0] = min(ideal[0], sol.f1)
        ideal[1] = min(ideal[1], sol.f2)
        archive.add(sol)

    x1s = rng.integers(1, problem.x1_max + 1, size=pop_size)
    x2s = rng.uniform(lo, hi, size=pop_size)
    population = []
    for x1, x2 in zip(x1s, x2s):
        sol = problem.evaluate(int(x1), float(x2))
        population.append(sol)
        offer(sol)

    def record(gen):
        entry = {"generation": gen, "evaluations": evaluations, "archive_size": len(archive),
                 "ideal": list(ideal), "archive_audit": archive.audit()}
        hits = getattr(problem, "hits", None)
        if hits is not None:
            entry["cache_hits"] = hits
        log.append(entry)
        if on_generation is not None:
            on_generation(gen, archive)

    log: list[dict] = []
    record(0)
    for gen in range(1, generations + 1):
        for i in range(pop_size):
            p, q = rng.choice(hood[i], size=2, replace=len(hood[i]) < 2)
            x1, x2 = _vary(rng, population[p], population[q], problem.x1_max, (lo, hi),
                           crossover_rate, eta_c, eta_m)
            child = problem.evaluate(x1, x2)
            offer(child)
            for k in hood[i]:
                if _improves(child, population[k], weights[k], ideal):
                    population[k] = child
        record(gen)
    return MoeadResult(archive, log, population, weights)


def knee_ratios(points: Sequence[Sequence[float]], normalize: bool = True) -> list[float]:
    """Loss-to-gain ratio of each point against all others.

    With ``normalize`` each objective is scaled by its range over ``points``
    so time and energy contribute in comparable units.
    """
    f = np.asarray(points, dtype=float)
    if normalize and len(f) > 1:
        span = f.max(axis=0) - f.min(axis=0)
        span[span == 0] = 1.0
        f = (f - f.min(axis=0)) / span
    out = []
    for i in range(len(f)):
        diff = f[i] - np.delete(f, i, axis=0)
        loss = float(np.clip(diff, 0, None).sum())
        gain = float(np.clip(-diff, 0, None).sum())
        out.append(0.0 if loss == 0 else (math.inf if gain == 0 else loss / gain))
    return out


def knee_select(archive, normalize: bool = True) -> MopSolution:
    """Member with the smallest loss-to-gain ratio; ties go to the lexicographically smallest (f1, f2)."""
    members = list(archive)
    if not members:
        raise ValueError("empty archive")
    ratios = knee_ratios([m.objectives for m in members], normalize)
    best = min(range(len(members)), key=lambda i: (ratios[i], members[i].f1, members[i].f2))
    return members[best]


def write_archive_csv(path, archive, knee: MopSolution | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "f1", "f2", "feasible", "is_knee"])
        for s in sorted(archive, key=lambda s: (s.f1, s.f2, s.x1, s.x2)):
            w.writerow([s.x1, repr(s.x2), repr(s.f1), repr(s.f2), int(s.feasible), int(s is knee)])


def write_log_json(path, log: list[dict]) -> None:
    Path(path).write_text(json.dumps(log, indent=1, sort_keys=True))


# --- mission evaluation -------------------------------------------------------------------------


@dataclass
class MissionProblem:
    """Full flight evaluation for one scenario instance.

    ``tdcc_positions`` are ground positions of the caching centres,
    ``data_bytes[i]`` the volume cached at centre ``i``.  ``wind(a, b)``
    returns the planning force for the segment a->b.
    """
    tdcc_positions: Sequence
    channels: Sequence[int]
    data_bytes: Sequence[float]
    grid: DemGrid
    radio: RadioParams
    uav: UavParams
    depot: tuple[float, float, float]
    clearance_radius: float
    seed: int
    wind: Callable | None = None
    return_to_depot: bool = False

    @property
    def x1_max(self) -> int:
        return len(self.tdcc_positions)

    @property
    def x2_bounds(self) -> tuple[float, float]:
        return (min(0.1, self.radio.p_max_mw), self.radio.p_max_mw)

    def _nominal_hover(self, i: int, x2: float):
        try:
            return optimal_waypoint(0, i, self.tdcc_positions[i], self.grid, self.radio,
                                    self.clearance_radius, (), x2).position
        except InfeasibleLinkError as exc:
            x, y, z = self.tdcc_positions[i]
            return (x, y, z + exc.h_low)

    def plan(self, x1: int, x2: float):
        """Allocation, hover points and per-UAV ledgers for (x1, x2)."""
        hovers = [self._nominal_hover(i, x2) for i in range(self.x1_max)]
        nominal = [capacity_at(hovers[i], self.tdcc_positions[i], (), self.radio, x2) for i in range(self.x1_max)]

        def estimate(a, b, i):
            force = None if self.wind is None else self.wind(a, b)
            try:
                flight = segment_plan(a, b, force, self.uav).t_star
            except InfeasibleError:
                flight = math.inf
            return flight + receive_time(self.data_bytes[i], nominal[i])

        alloc = allocate(hovers, x1, [self.depot] * x1, self.seed, estimate)
        waypoints = plan_waypoints(alloc, self.tdcc_positions, self.channels, self.grid, self.radio,
                                   self.clearance_radius, x2)
        ledgers = [mission_ledger(self.depot, [w.position for w in row], [self.data_bytes[w.tdcc] for w in row],
                                  [w.capacity for w in row], self.uav, self.wind,
                                  self.depot if self.return_to_depot else None) for row in waypoints]
        return alloc, waypoints, ledgers

    def required_power(self, waypoints: Sequence[Sequence[Waypoint]]) -> float:
        """Smallest power meeting the sensitivity threshold on every served link."""
        need = 0.0
        for row in waypoints:
            for w in row:
                loss = ground_to_air_loss_db(w.position, self.tdcc_positions[w.tdcc], self.radio)
                need = max(need, self.radio.p_min_mw * 10.0 ** (loss / 10.0))
        return need

    def evaluate(self, x1: int, x2: float) -> MopSolution:
        x1 = int(x1)
        if not 1 <= x1 <= self.x1_max or not 0 < x2 <= self.radio.p_max_mw:
            raise ValueError(f"(x1, x2) = ({x1}, {x2}) outside the decision bounds")
        try:
            _, waypoints, ledgers = self.plan(x1, x2)
        except InfeasibleError as exc:
            return MopSolution(x1, x2, TIME_PENALTY * 1e3, ENERGY_PENALTY * 1e3, False, 1e3,
                               details={"error": str(exc)})
        g1 = x2 - self.required_power(waypoints)
        g2 = min(self.uav.e_max - led.total_energy for led in ledgers)
        blocked = sum(not w.feasible for row in waypoints for w in row)
        violation = (max(0.0, -g1) / self.radio.p_max_mw
                     + sum(max(0.0, led.total_energy - self.uav.e_max) for led in ledgers) / self.uav.e_max
                     + blocked)
        f1 = max(led.total_time for led in ledgers)
        f2 = sum(led.total_energy for led in ledgers)
        feasible = violation == 0.0 and math.isfinite(f1)
        if not feasible:
            f1 = f1 + TIME_PENALTY * violation if math.isfinite(f1) else TIME_PENALTY * 1e3
            f2 = f2 + ENERGY_PENALTY * violation if math.isfinite(f2) else ENERGY_PENALTY * 1e3
        return MopSolution(x1, x2, f1, f2, feasible, violation, g1, g2,
                           details={"ledgers": ledgers, "waypoints": waypoints})


def ledgers_summary(ledgers: Sequence[MissionLedger]) -> list[dict]:
    return [led.as_dict() for led in ledgers]
