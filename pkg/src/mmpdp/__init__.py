"""Modular multi-purpose pickup-and-delivery: model, solvers, experiments."""

from .evaluate import Violation, check_feasibility, evaluate, make_platoon, objective
from .model import (
    FREIGHT,
    PASSENGER,
    CostBreakdown,
    Instance,
    InstanceError,
    ModelParams,
    Node,
    NodeKind,
    Platoon,
    PlatoonConfig,
    Request,
    RequestSpec,
    Solution,
    assemble_instance,
    build_instance,
    capacity_cost_params,
    distance_factor,
    fleet_factor,
    sub_instance,
)
from .schedule import compute_arrival_times, propagate_loads

__version__ = "0.1.0"
