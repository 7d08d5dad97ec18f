"""Domain types for the modular multi-purpose pickup and delivery problem.

Node indexing follows one fixed scheme for every instance::

    [0, V)                  virtual origin depots
    [V, V + n_r)            pickups, in request order
    [V + n_r, V + 2 n_r)    dropoffs, dropoff = pickup + n_r
    [V + 2 n_r, 2V + 2 n_r) virtual destination depots, dest = origin + V + 2 n_r

Each physical depot is replicated into several virtual origin/destination
pairs at the same coordinates so that more than one platoon can leave it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

PASSENGER = 0
FREIGHT = 1
DEMAND_TYPES = (PASSENGER, FREIGHT)

# absolute slack on time comparisons, minutes
TIME_EPS = 1e-6


class NodeKind(str, enum.Enum):
    DepotOrigin = "DepotOrigin"
    DepotDestination = "DepotDestination"
    PassengerPickup = "PassengerPickup"
    PassengerDropoff = "PassengerDropoff"
    FreightPickup = "FreightPickup"
    FreightDropoff = "FreightDropoff"

    @property
    def is_depot(self) -> bool:
        return self in (NodeKind.DepotOrigin, NodeKind.DepotDestination)

    @property
    def is_pickup(self) -> bool:
        return self in (NodeKind.PassengerPickup, NodeKind.FreightPickup)

    @property
    def is_dropoff(self) -> bool:
        return self in (NodeKind.PassengerDropoff, NodeKind.FreightDropoff)

    @property
    def demand_type(self) -> Optional[int]:
        if self in (NodeKind.PassengerPickup, NodeKind.PassengerDropoff):
            return PASSENGER
        if self in (NodeKind.FreightPickup, NodeKind.FreightDropoff):
            return FREIGHT
        return None


class InstanceError(ValueError):
    """Raised when nodes, requests and parameters do not form a valid instance."""


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    location: tuple[float, float]
    demand: int = 0
    service_time: float = 0.0
    tw_open: float = 0.0
    tw_close: float = 0.0


@dataclass(frozen=True)
class Request:
    id: int
    demand_type: int
    pickup_node: int
    dropoff_node: int
    quantity: int


@dataclass(frozen=True)
class ModelParams:
    """Cost and fleet parameters.

    ``alpha2_eff`` is charged per module for the whole planning period and
    ``alpha4_eff`` per unserved request; both are already scaled.
    """

    alpha1: float = 0.096
    alpha2_eff: float = 19.37 * 16
    alpha3: float = 6.9
    alpha4_eff: float = 19.37 * 16 * 8
    eta: float = 0.6
    speed: float = 30.0
    range_limit: float = 200.0
    z_max: int = 10
    z_per_type: tuple[int, ...] = (10, 10)
    capacity_per_type: tuple[int, ...] = (15, 15)
    l_max: int = 20
    planning_period: tuple[float, float] = (360.0, 1320.0)

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise InstanceError(f"eta must lie in [0, 1], got {self.eta}")
        if self.speed <= 0 or self.range_limit <= 0:
            raise InstanceError("speed and range_limit must be positive")
        if self.z_max < 1 or self.l_max < 1:
            raise InstanceError("z_max and l_max must be at least 1")
        if len(self.z_per_type) != len(self.capacity_per_type):
            raise InstanceError("z_per_type and capacity_per_type differ in length")
        if any(z < 0 for z in self.z_per_type) or any(c <= 0 for c in self.capacity_per_type):
            raise InstanceError("fleet caps must be >= 0 and capacities > 0")
        start, end = self.planning_period
        if end < start:
            raise InstanceError("planning period ends before it starts")
        # tolerate lists coming from JSON
        object.__setattr__(self, "z_per_type", tuple(int(z) for z in self.z_per_type))
        object.__setattr__(self, "capacity_per_type", tuple(int(c) for c in self.capacity_per_type))
        object.__setattr__(self, "planning_period", (float(start), float(end)))

    @property
    def planning_hours(self) -> float:
        start, end = self.planning_period
        return (end - start) / 60.0

    def with_capacity(self, capacity: float, mean_demand: float = 8.0) -> "ModelParams":
        """Module capacity ``capacity`` for every type, costs from the capacity model."""
        a1, a2 = capacity_cost_params(capacity)
        hours = self.planning_hours
        return replace(
            self,
            alpha1=a1,
            alpha2_eff=a2 * hours,
            alpha4_eff=a2 * hours * mean_demand,
            capacity_per_type=tuple(int(capacity) for _ in self.capacity_per_type),
        )

    def to_dict(self) -> dict:
        return {
            "alpha1": self.alpha1,
            "alpha2_eff": self.alpha2_eff,
            "alpha3": self.alpha3,
            "alpha4_eff": self.alpha4_eff,
            "eta": self.eta,
            "speed": self.speed,
            "range_limit": self.range_limit,
            "z_max": self.z_max,
            "z_per_type": list(self.z_per_type),
            "capacity_per_type": list(self.capacity_per_type),
            "l_max": self.l_max,
            "planning_period": list(self.planning_period),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InstanceError(f"unknown model parameters: {sorted(unknown)}")
        kw = dict(d)
        for key in ("z_per_type", "capacity_per_type", "planning_period"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


def distance_factor(p: int) -> float:
    """Distance cost multiplier W_p of a platoon with ``p`` modules."""
    if p < 1:
        raise ValueError(f"platoon length must be >= 1, got {p}")
    return (1.0 + 0.95 * (p - 1)) / p


def fleet_factor(p: int, eta: float) -> float:
    """Per-module fleet cost multiplier U_p under train incentive ``eta``."""
    if p < 1:
        raise ValueError(f"platoon length must be >= 1, got {p}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return (1.0 + (1.0 - eta) * (p - 1)) / p


def capacity_cost_params(capacity: float) -> tuple[float, float]:
    """Linear cost model: (EUR/km, EUR/h) for a module of the given capacity."""
    if capacity <= 0:
        raise ValueError(f"capacity must be positive, got {capacity}")
    return 0.003599 * capacity + 0.04162, 0.1753 * capacity + 16.8


@dataclass(frozen=True)
class PlatoonConfig:
    modules_per_type: tuple[int, ...]

    @property
    def total_length(self) -> int:
        return sum(self.modules_per_type)


@dataclass
class Platoon:
    config: PlatoonConfig
    origin_depot: int
    destination_depot: int
    visits: list[int]
    arrival_times: list[float] = field(default_factory=list)
    loads_per_type: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def sequence(self) -> list[int]:
        return [self.origin_depot, *self.visits, self.destination_depot]

    @property
    def length(self) -> int:
        return self.config.total_length


@dataclass
class Solution:
    platoons: list[Platoon] = field(default_factory=list)
    unserved: set[int] = field(default_factory=set)

    def served(self, instance: "Instance") -> set[int]:
        req_of = instance.fast.req_of
        return {req_of[v] for p in self.platoons for v in p.visits}


@dataclass(frozen=True)
class CostBreakdown:
    distance_cost: float
    fleet_cost: float
    duration_cost: float
    unserved_cost: float

    @property
    def total(self) -> float:
        return self.distance_cost + self.fleet_cost + self.duration_cost + self.unserved_cost

    def to_dict(self) -> dict:
        return {
            "distance": self.distance_cost,
            "fleet": self.fleet_cost,
            "duration": self.duration_cost,
            "unserved": self.unserved_cost,
            "total": self.total,
        }


class _Fast:
    """Plain-list views of an instance for the solver inner loops."""

    def __init__(self, inst: "Instance"):
        self.dist = inst.distance.tolist()
        self.tt = inst.travel_time.tolist()
        self.a = [n.tw_open for n in inst.nodes]
        self.b = [n.tw_close for n in inst.nodes]
        self.q = [n.demand for n in inst.nodes]
        self.ktype = [(-1 if n.kind.demand_type is None else n.kind.demand_type) for n in inst.nodes]
        self.pickup = [r.pickup_node for r in inst.requests]
        self.dropoff = [r.dropoff_node for r in inst.requests]
        self.rtype = [r.demand_type for r in inst.requests]
        self.rq = [r.quantity for r in inst.requests]
        self.req_of = [-1] * len(inst.nodes)
        for r in inst.requests:
            self.req_of[r.pickup_node] = r.id
            self.req_of[r.dropoff_node] = r.id
        self.n_r = inst.n_r
        self.n_origins = inst.n_origins
        self.dest_offset = inst.n_origins + 2 * inst.n_r
        self.depot_copies = [list(g) for g in inst.depot_groups]
        self.depot_of = [0] * inst.n_origins
        for d, group in enumerate(inst.depot_groups):
            for o in group:
                self.depot_of[o] = d
        p = inst.params
        self.Q = list(p.capacity_per_type)
        self.Z = list(p.z_per_type)
        self.z_max = p.z_max
        self.l_max = p.l_max
        self.R = p.range_limit
        self.alpha1 = p.alpha1
        self.alpha2 = p.alpha2_eff
        self.alpha3 = p.alpha3 / 60.0  # per minute
        self.alpha4 = p.alpha4_eff
        # dist_w[p] = alpha1 * W_p, fleet[p] = alpha2 * p * U_p
        self.dist_w = [0.0] + [p.alpha1 * distance_factor(k) for k in range(1, p.z_max + 1)]
        self.fleet = [0.0] + [p.alpha2_eff * k * fleet_factor(k, p.eta) for k in range(1, p.z_max + 1)]
        self.n_types = len(self.Q)


@dataclass(frozen=True, eq=False)
class Instance:
    nodes: tuple[Node, ...]
    requests: tuple[Request, ...]
    n_r: int
    n_origins: int
    distance: np.ndarray
    travel_time: np.ndarray
    params: ModelParams
    depot_groups: tuple[tuple[int, ...], ...]
    metadata: dict = field(default_factory=dict)

    @property
    def n_d(self) -> int:
        """Number of physical depots."""
        return len(self.depot_groups)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def destination_of(self, origin: int) -> int:
        return origin + self.n_origins + 2 * self.n_r

    def is_origin(self, node: int) -> bool:
        return 0 <= node < self.n_origins

    def is_destination(self, node: int) -> bool:
        return self.n_origins + 2 * self.n_r <= node < self.n_nodes

    def is_request_node(self, node: int) -> bool:
        return self.n_origins <= node < self.n_origins + 2 * self.n_r

    def request_of(self, node: int) -> int:
        return self.fast.req_of[node]

    @cached_property
    def fast(self) -> _Fast:
        return _Fast(self)


def euclidean_matrix(points: Sequence[tuple[float, float]]) -> np.ndarray:
    xy = np.asarray(points, dtype=float).reshape(-1, 2)
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=-1))
    np.fill_diagonal(d, 0.0)
    return d


def _group_origins(nodes: Sequence[Node], n_origins: int) -> tuple[tuple[int, ...], ...]:
    groups: dict[tuple[float, float], list[int]] = {}
    for node in nodes[:n_origins]:
        groups.setdefault(tuple(node.location), []).append(node.id)
    return tuple(tuple(g) for g in groups.values())


def build_instance(
    nodes: Sequence[Node],
    requests: Sequence[Request],
    params: ModelParams,
    distance: Optional[np.ndarray] = None,
    metadata: Optional[dict] = None,
) -> Instance:
    """Validate the node/request layout and precompute distance and travel time."""
    nodes = tuple(nodes)
    requests = tuple(requests)
    n_r = len(requests)
    n = len(nodes)
    for i, node in enumerate(nodes):
        if node.id != i:
            raise InstanceError(f"node at position {i} has id {node.id}")
        if node.tw_open > node.tw_close:
            raise InstanceError(f"node {i} has an empty time window")
        if node.location[0] < 0 or node.location[1] < 0:
            raise InstanceError(f"node {i} has negative coordinates")
        if node.service_time < 0:
            raise InstanceError(f"node {i} has negative service time")
    n_origins = sum(1 for nd in nodes if nd.kind is NodeKind.DepotOrigin)
    n_dest = sum(1 for nd in nodes if nd.kind is NodeKind.DepotDestination)
    if n_origins != n_dest or n_origins == 0:
        raise InstanceError(f"need matching origin/destination depots, got {n_origins}/{n_dest}")
    if n != 2 * n_origins + 2 * n_r:
        raise InstanceError(f"{n} nodes do not match {n_origins} depot pairs and {n_r} requests")
    for i in range(n_origins):
        o, d = nodes[i], nodes[i + n_origins + 2 * n_r]
        if o.kind is not NodeKind.DepotOrigin or d.kind is not NodeKind.DepotDestination:
            raise InstanceError(f"depot layout broken at origin {i}")
        if tuple(o.location) != tuple(d.location):
            raise InstanceError(f"origin {i} and its destination are not co-located")
        for dep in (o, d):
            if dep.demand != 0 or dep.service_time != 0:
                raise InstanceError(f"depot node {dep.id} must have zero demand and service")
    for idx, r in enumerate(requests):
        if r.id != idx:
            raise InstanceError(f"request at position {idx} has id {r.id}")
        pu = n_origins + idx
        if r.pickup_node != pu or r.dropoff_node != pu + n_r:
            raise InstanceError(f"request {idx} does not follow the pickup/dropoff indexing")
        if r.quantity < 1:
            raise InstanceError(f"request {idx} has non-positive quantity")
        if r.demand_type not in range(len(params.capacity_per_type)):
            raise InstanceError(f"request {idx} has unknown demand type {r.demand_type}")
        p, d = nodes[r.pickup_node], nodes[r.dropoff_node]
        if not p.kind.is_pickup or not d.kind.is_dropoff:
            raise InstanceError(f"request {idx} nodes have wrong kinds")
        if p.kind.demand_type != r.demand_type or d.kind.demand_type != r.demand_type:
            raise InstanceError(f"request {idx} node kinds disagree with its demand type")
        if p.demand != r.quantity or d.demand != -r.quantity:
            raise InstanceError(f"request {idx} node demands must be +q/-q")

    if distance is None:
        dist = euclidean_matrix([nd.location for nd in nodes])
    else:
        dist = np.array(distance, dtype=float)
        if dist.shape != (n, n):
            raise InstanceError(f"distance matrix shape {dist.shape} != ({n}, {n})")
        if (dist < 0).any():
            raise InstanceError("distance matrix has negative entries")
        np.fill_diagonal(dist, 0.0)
    service = np.array([nd.service_time for nd in nodes], dtype=float)
    travel = dist / params.speed * 60.0 + service[:, None]
    dist.setflags(write=False)
    travel.setflags(write=False)
    return Instance(
        nodes=nodes,
        requests=requests,
        n_r=n_r,
        n_origins=n_origins,
        distance=dist,
        travel_time=travel,
        params=params,
        depot_groups=_group_origins(nodes, n_origins),
        metadata=dict(metadata or {}),
    )


def expand_depots(
    depot_locations: Sequence[tuple[float, float]],
    copies: int,
    planning_period: tuple[float, float],
) -> tuple[list[Node], list[Node]]:
    """Virtual origin and destination nodes, ``copies`` per physical depot.

    Destination ids are left relative (0-based); :func:`assemble_nodes`
    shifts them behind the request nodes.
    """
    a, b = planning_period
    origins, dests = [], []
    for loc in depot_locations:
        for _ in range(copies):
            origins.append(Node(len(origins), NodeKind.DepotOrigin, tuple(loc), 0, 0.0, a, b))
            dests.append(Node(len(dests), NodeKind.DepotDestination, tuple(loc), 0, 0.0, a, b))
    return origins, dests


@dataclass(frozen=True)
class RequestSpec:
    """User-facing description of one request, before node ids are assigned."""

    demand_type: int
    quantity: int
    pickup_location: tuple[float, float]
    dropoff_location: tuple[float, float]
    pickup_tw: tuple[float, float]
    dropoff_tw: tuple[float, float]
    pickup_service: float = 0.0
    dropoff_service: float = 0.0


def assemble_instance(
    depot_locations: Sequence[tuple[float, float]],
    request_specs: Sequence[RequestSpec],
    params: ModelParams,
    copies: Optional[int] = None,
    metadata: Optional[dict] = None,
) -> Instance:
    """Lay out nodes per the indexing scheme and build the instance."""
    copies = params.l_max if copies is None else copies
    origins, dests = expand_depots(depot_locations, copies, params.planning_period)
    n_o = len(origins)
    n_r = len(request_specs)
    kinds = {
        PASSENGER: (NodeKind.PassengerPickup, NodeKind.PassengerDropoff),
        FREIGHT: (NodeKind.FreightPickup, NodeKind.FreightDropoff),
    }
    pickups, dropoffs, requests = [], [], []
    for idx, rs in enumerate(request_specs):
        pk, dk = kinds[rs.demand_type]
        pid, did = n_o + idx, n_o + n_r + idx
        pickups.append(Node(pid, pk, tuple(rs.pickup_location), rs.quantity, rs.pickup_service, *rs.pickup_tw))
        dropoffs.append(Node(did, dk, tuple(rs.dropoff_location), -rs.quantity, rs.dropoff_service, *rs.dropoff_tw))
        requests.append(Request(idx, rs.demand_type, pid, did, rs.quantity))
    shift = n_o + 2 * n_r
    dests = [replace(d, id=d.id + shift) for d in dests]
    return build_instance(origins + pickups + dropoffs + dests, requests, params, metadata=metadata)


def request_specs_of(instance: Instance) -> list[RequestSpec]:
    out = []
    for r in instance.requests:
        p, d = instance.nodes[r.pickup_node], instance.nodes[r.dropoff_node]
        out.append(
            RequestSpec(
                r.demand_type, r.quantity, p.location, d.location,
                (p.tw_open, p.tw_close), (d.tw_open, d.tw_close), p.service_time, d.service_time,
            )
        )
    return out


def physical_depots(instance: Instance) -> list[tuple[float, float]]:
    return [instance.nodes[g[0]].location for g in instance.depot_groups]


def sub_instance(instance: Instance, request_ids: Sequence[int], params: Optional[ModelParams] = None) -> Instance:
    """Instance restricted to ``request_ids`` (re-indexed in the given order).

    Only valid for geometric instances; an explicit distance matrix is
    carried over by index mapping.
    """
    params = instance.params if params is None else params
    specs = request_specs_of(instance)
    chosen = [specs[i] for i in request_ids]
    copies = len(instance.depot_groups[0])
    depots = physical_depots(instance)
    sub = assemble_instance(depots, chosen, params, copies=copies,
                            metadata={**instance.metadata, "parent_requests": list(request_ids)})
    if instance.metadata.get("explicit_distance"):
        old = _node_map(instance, sub, request_ids)
        dist = instance.distance[np.ix_(old, old)]
        sub = build_instance(sub.nodes, sub.requests, params, distance=dist,
                             metadata={**sub.metadata, "explicit_distance": True})
    return sub


def _node_map(parent: Instance, sub: Instance, request_ids: Sequence[int]) -> list[int]:
    """For each node of ``sub`` the corresponding node id in ``parent``."""
    out = []
    for node in sub.nodes:
        i = node.id
        if sub.is_origin(i):
            out.append(i)
        elif sub.is_destination(i):
            out.append(parent.destination_of(i - sub.n_origins - 2 * sub.n_r))
        else:
            r = sub.fast.req_of[i]
            pr = parent.requests[request_ids[r]]
            out.append(pr.pickup_node if i < sub.n_origins + sub.n_r else pr.dropoff_node)
    return out


def big_h(instance: Instance) -> float:
    """Big-M constant of the time propagation constraints, minutes."""
    a = np.array([n.tw_open for n in instance.nodes])
    b = np.array([n.tw_close for n in instance.nodes])
    val = (b[:, None] + instance.travel_time - a[None, :]).max()
    return max(0.0, float(val))


def ceil_div(x: float, q: float) -> int:
    return int(math.ceil(x / q - 1e-12)) if x > 0 else 0
