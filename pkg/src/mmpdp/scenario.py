"""Seeded synthetic demand scenarios (spatial and temporal classes)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.stats import truncnorm

from .model import FREIGHT, PASSENGER, Instance, ModelParams, RequestSpec, assemble_instance

CLUSTER_SIGMA_KM = 0.5
PEAK_CENTER_MIN = 840.0
PEAK_SIGMA_MIN = 120.0
DELTA_RANGE = (5.0, 20.0)
SERVICE_RANGE = (1.0, 5.0)
MAX_WINDOW_TRIES = 100


class Spatial(str, Enum):
    Clustered = "Clustered"
    Distributed = "Distributed"


class Temporal(str, Enum):
    Even = "Even"
    Peak = "Peak"


@dataclass(frozen=True)
class ScenarioSpec:
    n_requests: int = 80
    n_depots: int = 5
    area_side: float = 3.5
    spatial: Spatial = Spatial.Distributed
    temporal: Temporal = Temporal.Even
    passenger_share: float = 0.5
    planning_period: tuple[float, float] = (360.0, 1320.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "spatial", Spatial(self.spatial))
        object.__setattr__(self, "temporal", Temporal(self.temporal))
        object.__setattr__(self, "planning_period", tuple(float(x) for x in self.planning_period))
        if self.n_requests < 1:
            raise ValueError("n_requests must be >= 1")
        if self.n_depots < 1:
            raise ValueError("n_depots must be >= 1")
        if self.area_side <= 0:
            raise ValueError("area_side must be positive")
        if not 0.0 <= self.passenger_share <= 1.0:
            raise ValueError("passenger_share must lie in [0, 1]")

    @property
    def label(self) -> str:
        return f"{self.spatial.value.lower()}-{self.temporal.value.lower()}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spatial"] = self.spatial.value
        d["temporal"] = self.temporal.value
        d["planning_period"] = list(self.planning_period)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown scenario fields: {unknown}")
        return cls(**d)


def _inside(rng: np.random.Generator, center: Sequence[float], sigma: float, side: float) -> tuple[float, float]:
    while True:
        x, y = rng.normal(center, sigma)
        if 0.0 <= x <= side and 0.0 <= y <= side:
            return float(x), float(y)


def _draw_anchor(spec: ScenarioSpec, rng: np.random.Generator) -> float:
    lo, hi = spec.planning_period
    if spec.temporal is Temporal.Even:
        return float(rng.uniform(lo, hi))
    a, b = (lo - PEAK_CENTER_MIN) / PEAK_SIGMA_MIN, (hi - PEAK_CENTER_MIN) / PEAK_SIGMA_MIN
    return float(truncnorm.rvs(a, b, loc=PEAK_CENTER_MIN, scale=PEAK_SIGMA_MIN, random_state=rng))


def sample_anchor_times(spec: ScenarioSpec, rng: np.random.Generator) -> list[float]:
    """One anchor minute per request (uniform for Even, truncated normal for Peak)."""
    lo, hi = spec.planning_period
    n = spec.n_requests
    if spec.temporal is Temporal.Even:
        return [float(t) for t in rng.uniform(lo, hi, size=n)]
    a, b = (lo - PEAK_CENTER_MIN) / PEAK_SIGMA_MIN, (hi - PEAK_CENTER_MIN) / PEAK_SIGMA_MIN
    draws = truncnorm.rvs(a, b, loc=PEAK_CENTER_MIN, scale=PEAK_SIGMA_MIN, size=n, random_state=rng)
    return [float(t) for t in draws]


def sample_time_windows(
    demand_type: int,
    anchor: float,
    rng: np.random.Generator,
    direct_time: float = 0.0,
    planning_period: tuple[float, float] = (360.0, 1320.0),
) -> tuple[tuple[float, float], tuple[float, float]]:
    """(pickup window, dropoff window) around ``anchor``.

    ``direct_time`` is the pickup-to-dropoff travel time including the pickup
    service; a passenger dropoff window never opens before the passenger can
    get there.
    """
    lo, hi = planning_period
    if demand_type == PASSENGER:
        delta = rng.uniform(*DELTA_RANGE)
        a_p = rng.uniform(anchor - delta, anchor + delta)
        pickup = (float(a_p), float(a_p + delta))
        delta_d = rng.uniform(*DELTA_RANGE)
        a_d = rng.uniform(a_p - direct_time, a_p + 60.0)
        if a_d < a_p + direct_time:
            a_d = a_p + direct_time
        return pickup, (float(a_d), float(a_d + delta_d))
    delta = rng.uniform(*DELTA_RANGE)
    a_d = rng.uniform(anchor - delta, anchor + delta)
    return (lo, hi), (float(a_d), float(a_d + delta))


def _travel(p: Sequence[float], q: Sequence[float], speed: float) -> tuple[float, float]:
    d = math.hypot(p[0] - q[0], p[1] - q[1])
    return d, d / speed * 60.0


def direct_service_ok(
    rs: RequestSpec, depots: Sequence[tuple[float, float]], params: ModelParams
) -> bool:
    """Can a dedicated platoon from some depot serve this request alone?"""
    lo, hi = params.planning_period
    k = rs.demand_type
    if -(-rs.quantity // params.capacity_per_type[k]) > min(params.z_per_type[k], params.z_max):
        return False
    d_pd, t_pd = _travel(rs.pickup_location, rs.dropoff_location, params.speed)
    for depot in depots:
        d_op, t_op = _travel(depot, rs.pickup_location, params.speed)
        d_do, t_do = _travel(rs.dropoff_location, depot, params.speed)
        if d_op + d_pd + d_do > params.range_limit:
            continue
        s_p = max(rs.pickup_tw[0], lo + t_op)
        if s_p > rs.pickup_tw[1]:
            continue
        s_d = max(rs.dropoff_tw[0], s_p + rs.pickup_service + t_pd)
        if s_d > rs.dropoff_tw[1]:
            continue
        if s_d + rs.dropoff_service + t_do <= hi:
            return True
    return False


def generate(spec: ScenarioSpec, params: Optional[ModelParams] = None) -> Instance:
    params = params or ModelParams(planning_period=spec.planning_period)
    rng = np.random.default_rng(spec.seed)
    side = spec.area_side
    center = (side / 2.0, side / 2.0)
    depots = [_inside(rng, center, side / 4.0, side) for _ in range(spec.n_depots)]

    def point() -> tuple[float, float]:
        if spec.spatial is Spatial.Clustered:
            return _inside(rng, depots[int(rng.integers(len(depots)))], CLUSTER_SIGMA_KM, side)
        return _inside(rng, center, side / 4.0, side)

    n = spec.n_requests
    n_pass = int(round(n * spec.passenger_share))
    types = rng.permutation([PASSENGER] * n_pass + [FREIGHT] * (n - n_pass))
    anchors = sample_anchor_times(spec, rng)
    specs = []
    for idx in range(n):
        k = int(types[idx])
        q = int(rng.integers(1, 16))
        s_p, s_d = (float(x) for x in rng.uniform(*SERVICE_RANGE, size=2))
        if k == FREIGHT:
            pick = depots[int(rng.integers(len(depots)))]
        else:
            pick = point()
        drop = point()
        t_pd = _travel(pick, drop, params.speed)[1] + s_p
        anchor = anchors[idx]
        tries = 0
        while True:
            pw, dw = sample_time_windows(k, anchor, rng, t_pd, spec.planning_period)
            rs = RequestSpec(k, q, pick, drop, pw, dw, s_p, s_d)
            if direct_service_ok(rs, depots, params):
                break
            tries += 1
            if tries % MAX_WINDOW_TRIES == 0:
                anchor = _draw_anchor(spec, rng)
            if tries > 100 * MAX_WINDOW_TRIES:
                raise RuntimeError("could not sample serviceable time windows; check the parameters")
        specs.append(rs)
    return assemble_instance(depots, specs, params, metadata={"scenario": spec.to_dict(), "label": spec.label})
