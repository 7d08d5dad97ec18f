"""JSON files for instances and solutions (km, minutes, EUR)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .evaluate import evaluate
from .model import Instance, ModelParams, Node, NodeKind, Platoon, PlatoonConfig, Request, Solution, build_instance

PathLike = Union[str, Path]


def instance_to_dict(instance: Instance, include_distance: Optional[bool] = None) -> dict:
    if include_distance is None:
        include_distance = bool(instance.metadata.get("explicit_distance"))
    d: dict[str, Any] = {
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "x_km": n.location[0],
                "y_km": n.location[1],
                "demand": n.demand,
                "service_min": n.service_time,
                "tw": [n.tw_open, n.tw_close],
            }
            for n in instance.nodes
        ],
        "requests": [
            {
                "id": r.id,
                "demand_type": r.demand_type,
                "pickup_node": r.pickup_node,
                "dropoff_node": r.dropoff_node,
                "quantity": r.quantity,
            }
            for r in instance.requests
        ],
        "params": instance.params.to_dict(),
        "metadata": instance.metadata,
    }
    if include_distance:
        d["distance_matrix"] = instance.distance.tolist()
    return d


def instance_from_dict(d: dict) -> Instance:
    nodes = [
        Node(
            id=int(n["id"]),
            kind=NodeKind(n["kind"]),
            location=(float(n["x_km"]), float(n["y_km"])),
            demand=int(n["demand"]),
            service_time=float(n["service_min"]),
            tw_open=float(n["tw"][0]),
            tw_close=float(n["tw"][1]),
        )
        for n in d["nodes"]
    ]
    requests = [
        Request(int(r["id"]), int(r["demand_type"]), int(r["pickup_node"]), int(r["dropoff_node"]), int(r["quantity"]))
        for r in d["requests"]
    ]
    params = ModelParams.from_dict(d.get("params", {}))
    meta = dict(d.get("metadata", {}))
    dist = d.get("distance_matrix")
    if dist is not None:
        meta["explicit_distance"] = True
        dist = np.asarray(dist, dtype=float)
    return build_instance(nodes, requests, params, distance=dist, metadata=meta)


def save_instance(instance: Instance, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(instance_to_dict(instance), indent=1))
    return path


def load_instance(path: PathLike) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def solution_to_dict(solution: Solution, instance: Instance, extra: Optional[dict] = None) -> dict:
    d = {
        "platoons": [
            {
                "modules_per_type": list(p.config.modules_per_type),
                "origin": p.origin_depot,
                "visits": list(p.visits),
                "arrivals": list(p.arrival_times),
            }
            for p in solution.platoons
        ],
        "unserved": sorted(solution.unserved),
        "cost": evaluate(solution, instance).to_dict(),
    }
    if extra:
        d.update(extra)
    return d


def solution_from_dict(d: dict, instance: Instance) -> Solution:
    platoons = []
    for p in d["platoons"]:
        origin = int(p["origin"])
        platoons.append(
            Platoon(
                PlatoonConfig(tuple(int(m) for m in p["modules_per_type"])),
                origin,
                instance.destination_of(origin),
                [int(v) for v in p["visits"]],
                [float(s) for s in p.get("arrivals", [])],
            )
        )
    return Solution(platoons, {int(r) for r in d.get("unserved", [])})


def save_solution(solution: Solution, instance: Instance, path: PathLike, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(solution_to_dict(solution, instance, extra), indent=1))
    return path


def load_solution(path: PathLike, instance: Instance) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text()), instance)
