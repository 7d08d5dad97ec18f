"""Operational indicators of a solved instance."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .evaluate import evaluate
from .model import FREIGHT, PASSENGER, CostBreakdown, Instance, Solution
from .schedule import compute_arrival_times

TYPE_NAMES = {PASSENGER: "passenger", FREIGHT: "freight"}


@dataclass
class KpiReport:
    fill_rate: float
    request_km: float
    request_km_per_type: list[float]
    request_min: float
    request_min_per_type: list[float]
    load_per_platoon_km: float
    empty_km: float
    platoon_km: float
    avg_platoon_length: float
    n_platoons: int
    modules_used: list[int]
    served: int
    unserved: int
    served_per_type: list[int]
    demand_served: int
    capacity_deployed: int
    cost: CostBreakdown = field(default_factory=lambda: CostBreakdown(0.0, 0.0, 0.0, 0.0))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cost"] = self.cost.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def flat_row(self) -> dict:
        """Single-level dict for CSV export."""
        row = {}
        for key, val in self.to_dict().items():
            if key == "cost":
                for ck, cv in val.items():
                    row[f"cost_{ck}"] = cv
            elif isinstance(val, list):
                for k, v in enumerate(val):
                    row[f"{key}_{TYPE_NAMES.get(k, k)}"] = v
            else:
                row[key] = val
        return row


def compute_kpis(solution: Solution, instance: Instance) -> KpiReport:
    f = instance.fast
    n_types = f.n_types
    req_km = [0.0] * n_types
    req_min = [0.0] * n_types
    served_t = [0] * n_types
    modules = [0] * n_types
    empty = 0.0
    total_km = 0.0
    lengths = []
    demand = 0
    for pl in solution.platoons:
        seq = pl.sequence
        s = pl.arrival_times
        if len(s) != len(seq):
            s = compute_arrival_times(seq, instance)
        lengths.append(pl.config.total_length)
        for k, m in enumerate(pl.config.modules_per_type):
            modules[k] += m
        # cumulative distance at each position
        cum = [0.0]
        for u, v in zip(seq, seq[1:]):
            cum.append(cum[-1] + f.dist[u][v])
        total_km += cum[-1]
        onboard = 0
        for i in range(len(seq) - 1):
            v = seq[i]
            if i > 0:
                onboard += f.q[v]
            if onboard == 0:
                empty += f.dist[v][seq[i + 1]]
        pos = {v: i for i, v in enumerate(seq)}
        for v in pl.visits:
            r = f.req_of[v]
            if v != f.pickup[r]:
                continue
            k = f.rtype[r]
            ip, idr = pos[v], pos[f.dropoff[r]]
            req_km[k] += cum[idr] - cum[ip]
            req_min[k] += s[idr] - s[ip]
            served_t[k] += 1
            demand += f.rq[r]
    capacity = sum(f.Q[k] * modules[k] for k in range(n_types))
    n_served = sum(served_t)
    return KpiReport(
        fill_rate=demand / capacity if capacity else 0.0,
        request_km=sum(req_km),
        request_km_per_type=req_km,
        request_min=sum(req_min),
        request_min_per_type=req_min,
        load_per_platoon_km=demand / total_km if total_km else 0.0,
        empty_km=empty,
        platoon_km=total_km,
        avg_platoon_length=sum(lengths) / len(lengths) if lengths else 0.0,
        n_platoons=len(lengths),
        modules_used=modules,
        served=n_served,
        unserved=len(solution.unserved),
        served_per_type=served_t,
        demand_served=demand,
        capacity_deployed=capacity,
        cost=evaluate(solution, instance),
    )


def combine_reports(reports: Sequence[KpiReport]) -> KpiReport:
    """KPIs of the union of independently solved sub-problems."""
    if not reports:
        raise ValueError("nothing to combine")
    n_types = len(reports[0].modules_used)

    def vec(name):
        return [sum(getattr(r, name)[k] for r in reports) for k in range(n_types)]

    modules = vec("modules_used")
    platoons = sum(r.n_platoons for r in reports)
    km = sum(r.platoon_km for r in reports)
    demand = sum(r.demand_served for r in reports)
    capacity = sum(r.capacity_deployed for r in reports)
    return KpiReport(
        fill_rate=demand / capacity if capacity else 0.0,
        request_km=sum(r.request_km for r in reports),
        request_km_per_type=vec("request_km_per_type"),
        request_min=sum(r.request_min for r in reports),
        request_min_per_type=vec("request_min_per_type"),
        load_per_platoon_km=demand / km if km else 0.0,
        empty_km=sum(r.empty_km for r in reports),
        platoon_km=km,
        avg_platoon_length=sum(r.avg_platoon_length * r.n_platoons for r in reports) / platoons if platoons else 0.0,
        n_platoons=platoons,
        modules_used=modules,
        served=sum(r.served for r in reports),
        unserved=sum(r.unserved for r in reports),
        served_per_type=vec("served_per_type"),
        demand_served=demand,
        capacity_deployed=capacity,
        cost=CostBreakdown(
            sum(r.cost.distance_cost for r in reports),
            sum(r.cost.fleet_cost for r in reports),
            sum(r.cost.duration_cost for r in reports),
            sum(r.cost.unserved_cost for r in reports),
        ),
    )
