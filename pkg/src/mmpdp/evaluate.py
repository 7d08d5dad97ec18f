"""Objective evaluation and constraint checking for complete solutions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .model import (
    TIME_EPS,
    CostBreakdown,
    Instance,
    Platoon,
    PlatoonConfig,
    Solution,
    distance_factor,
    fleet_factor,
)
from .schedule import CapacityViolation, ScheduleInfeasible, compute_arrival_times, propagate_loads


def route_km(sequence: Sequence[int], instance: Instance) -> float:
    d = instance.fast.dist
    return sum(d[u][v] for u, v in zip(sequence, sequence[1:]))


def make_platoon(instance: Instance, origin: int, modules: Sequence[int], visits: Sequence[int]) -> Platoon:
    """Platoon with arrival times and loads filled in.

    Raises ScheduleInfeasible / CapacityViolation if the route cannot run.
    """
    dest = instance.destination_of(origin)
    seq = [origin, *visits, dest]
    arrivals = compute_arrival_times(seq, instance)
    loads = propagate_loads(seq, modules, instance)
    return Platoon(PlatoonConfig(tuple(int(m) for m in modules)), origin, dest, list(visits), arrivals, loads)


def platoon_duration(platoon: Platoon, instance: Instance) -> float:
    s = platoon.arrival_times
    if len(s) != len(platoon.visits) + 2:
        s = compute_arrival_times(platoon.sequence, instance)
    return s[-1] - s[0]


def evaluate(solution: Solution, instance: Instance) -> CostBreakdown:
    p = instance.params
    dist_cost = fleet_cost = dur_min = 0.0
    for pl in solution.platoons:
        n = pl.config.total_length
        dist_cost += distance_factor(n) * route_km(pl.sequence, instance)
        fleet_cost += n * fleet_factor(n, p.eta)
        dur_min += platoon_duration(pl, instance)
    return CostBreakdown(
        distance_cost=p.alpha1 * dist_cost,
        fleet_cost=p.alpha2_eff * fleet_cost,
        duration_cost=p.alpha3 * dur_min / 60.0,
        unserved_cost=p.alpha4_eff * len(solution.unserved),
    )


def objective(solution: Solution, instance: Instance) -> float:
    return evaluate(solution, instance).total


@dataclass(frozen=True)
class Violation:
    kind: str
    platoon: Optional[int] = None
    node: Optional[int] = None
    detail: str = ""


# violation kinds, grouped by the constraint family they stand for
ASSIGNMENT = "Assignment"
PAIRING = "Pairing"
PRECEDENCE = "PrecedenceViolation"
DEPOT_START = "DepotStart"
DEPOT_END = "DepotEnd"
DEPOT_REUSE = "DepotReuse"
FLOW = "FlowConservation"
SELF_LOOP = "SelfLoop"
DEST_DEPARTURE = "DestinationDeparture"
TIME_PROPAGATION = "TimePropagation"
TIME_WINDOW = "TimeWindow"
RANGE = "RangeViolation"
PLATOON_SIZE = "PlatoonSize"
FLEET_SIZE = "FleetSize"
PLATOON_COUNT = "PlatoonCount"
CAPACITY = "CapacityViolation"
LOAD_BOUNDARY = "LoadBoundary"
REPRESENTATION = "Representation"


def check_feasibility(solution: Solution, instance: Instance) -> list[Violation]:
    """Every violated constraint family, as data. Empty list means feasible."""
    out: list[Violation] = []
    f = instance.fast
    prm = instance.params
    n_types = f.n_types

    seen: Counter = Counter()
    for li, pl in enumerate(solution.platoons):
        for v in pl.visits:
            if instance.is_request_node(v):
                seen[f.req_of[v]] += 1
    for r in range(instance.n_r):
        served = seen[r] // 2 if seen[r] else 0
        total = served + (1 if r in solution.unserved else 0)
        if total != 1:
            out.append(Violation(ASSIGNMENT, detail=f"request {r} appears {total} times (served visits {seen[r]})"))
    for r in solution.unserved:
        if not 0 <= r < instance.n_r:
            out.append(Violation(ASSIGNMENT, detail=f"unknown unserved request {r}"))

    if len(solution.platoons) > prm.l_max:
        out.append(Violation(PLATOON_COUNT, detail=f"{len(solution.platoons)} platoons > l_max {prm.l_max}"))
    origins = Counter(pl.origin_depot for pl in solution.platoons)
    for o, c in origins.items():
        if c > 1:
            out.append(Violation(DEPOT_REUSE, node=o, detail=f"origin {o} departs {c} platoons"))

    deployed = [0] * n_types
    for li, pl in enumerate(solution.platoons):
        mods = pl.config.modules_per_type
        if len(mods) != n_types or any(m < 0 for m in mods):
            out.append(Violation(REPRESENTATION, li, detail=f"bad module vector {mods}"))
            continue
        for k in range(n_types):
            deployed[k] += mods[k]
        p = sum(mods)
        if p < 1 or p > prm.z_max:
            out.append(Violation(PLATOON_SIZE, li, detail=f"{p} modules outside [1, {prm.z_max}]"))
        out.extend(_check_route(li, pl, instance))
    for k in range(n_types):
        if deployed[k] > prm.z_per_type[k]:
            out.append(Violation(FLEET_SIZE, detail=f"type {k}: {deployed[k]} modules > {prm.z_per_type[k]}"))
    return out


def _check_route(li: int, pl: Platoon, instance: Instance) -> list[Violation]:
    out: list[Violation] = []
    f = instance.fast
    prm = instance.params
    if not instance.is_origin(pl.origin_depot):
        out.append(Violation(DEPOT_START, li, pl.origin_depot, "route does not start at an origin depot"))
        return out
    if pl.destination_depot != instance.destination_of(pl.origin_depot):
        out.append(Violation(DEPOT_END, li, pl.destination_depot, "route does not end at its paired destination"))
        return out
    seq = pl.sequence
    for v in pl.visits:
        if instance.is_destination(v):
            out.append(Violation(DEST_DEPARTURE, li, v, "destination depot visited mid-route"))
        elif not instance.is_request_node(v):
            out.append(Violation(FLOW, li, v, "non-request node inside route"))
    if out:
        return out
    for u, v in zip(seq, seq[1:]):
        if u == v:
            out.append(Violation(SELF_LOOP, li, u, "consecutive repeat of a node"))
    counts = Counter(pl.visits)
    for v, c in counts.items():
        if c > 1:
            out.append(Violation(FLOW, li, v, f"node visited {c} times"))
    pos = {v: i for i, v in enumerate(pl.visits)}
    for v in pl.visits:
        r = f.req_of[v]
        pu, do = f.pickup[r], f.dropoff[r]
        if v == pu:
            if do not in pos:
                out.append(Violation(PAIRING, li, v, f"request {r} picked up but not dropped in the same platoon"))
            elif pos[do] < pos[pu]:
                out.append(Violation(PRECEDENCE, li, v, f"request {r} dropped before pickup"))
        elif pu not in pos:
            out.append(Violation(PAIRING, li, v, f"request {r} dropped without pickup in the same platoon"))

    km = sum(f.dist[u][v] for u, v in zip(seq, seq[1:]))
    if km > prm.range_limit + 1e-9:
        out.append(Violation(RANGE, li, detail=f"route {km:.4f} km > range {prm.range_limit}"))

    s = pl.arrival_times
    if len(s) != len(seq):
        out.append(Violation(REPRESENTATION, li, detail="arrival times do not match the route"))
    else:
        for i, v in enumerate(seq):
            if s[i] < f.a[v] - TIME_EPS or s[i] > f.b[v] + TIME_EPS:
                out.append(Violation(TIME_WINDOW, li, v, f"arrival {s[i]:.4f} outside [{f.a[v]}, {f.b[v]}]"))
        for i in range(len(seq) - 1):
            u, v = seq[i], seq[i + 1]
            if s[i] + f.tt[u][v] > s[i + 1] + TIME_EPS:
                out.append(Violation(TIME_PROPAGATION, li, v, f"arrival at {v} earlier than travel from {u} allows"))

    mods = pl.config.modules_per_type
    load = [0] * f.n_types
    for i, v in enumerate(pl.visits, start=1):
        k = f.ktype[v]
        load[k] += f.q[v]
        if load[k] > f.Q[k] * mods[k]:
            out.append(Violation(CAPACITY, li, v, f"type-{k} load {load[k]} > {f.Q[k] * mods[k]}"))
        if load[k] < 0:
            out.append(Violation(LOAD_BOUNDARY, li, v, f"type-{k} load negative"))
    if any(load):
        out.append(Violation(LOAD_BOUNDARY, li, pl.destination_depot, f"platoon not empty at destination: {load}"))
    if pl.loads_per_type:
        if len(pl.loads_per_type) != len(seq) or any(pl.loads_per_type[0]):
            out.append(Violation(LOAD_BOUNDARY, li, pl.origin_depot, "recorded loads inconsistent with route"))
    return out


def rebuild(solution: Solution, instance: Instance) -> Solution:
    """Recompute arrivals and loads of every platoon from its route."""
    platoons = []
    for pl in solution.platoons:
        try:
            platoons.append(make_platoon(instance, pl.origin_depot, pl.config.modules_per_type, pl.visits))
        except (ScheduleInfeasible, CapacityViolation):
            platoons.append(pl)
    return Solution(platoons, set(solution.unserved))
