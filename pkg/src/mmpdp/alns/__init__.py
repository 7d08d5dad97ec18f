from .adaptive import OperatorState, cool, removal_count, sa_accept, select_operator, should_terminate, update_weights
from .destroy import (
    DESTROY_OPERATORS,
    module_removal,
    platoon_removal,
    random_removal,
    relatedness,
    shaw_removal,
    worst_removal,
)
from .params import DESK, FULL, AlnsParams
from .repair import REPAIR_OPERATORS, best_insert, first_fit_insert, inter_route_insert
from .solver import AlnsResult, EnsembleResult, TraceRow, solve, solve_ensemble, write_trace
from .state import SearchContext, WorkingSolution

__all__ = [
    "AlnsParams",
    "AlnsResult",
    "DESK",
    "DESTROY_OPERATORS",
    "EnsembleResult",
    "OperatorState",
    "FULL",
    "REPAIR_OPERATORS",
    "SearchContext",
    "TraceRow",
    "WorkingSolution",
    "best_insert",
    "cool",
    "first_fit_insert",
    "inter_route_insert",
    "module_removal",
    "platoon_removal",
    "random_removal",
    "relatedness",
    "removal_count",
    "sa_accept",
    "select_operator",
    "shaw_removal",
    "should_terminate",
    "solve",
    "solve_ensemble",
    "update_weights",
    "worst_removal",
    "write_trace",
]
