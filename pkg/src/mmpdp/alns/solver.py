"""The adaptive large neighbourhood search loop and ensemble runner."""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from ..evaluate import Violation, check_feasibility, objective
from ..model import Instance, Solution
from .adaptive import OperatorState, cool, sa_accept, select_operator, should_terminate, update_weights
from .destroy import DESTROY_OPERATORS
from .params import AlnsParams
from .repair import REPAIR_OPERATORS, best_insert
from .state import SearchContext, WorkingSolution

TRACE_COLUMNS = ("iteration", "current_obj", "best_obj", "destroy_op", "repair_op", "accepted", "temperature")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    current_obj: float
    best_obj: float
    destroy_op: str
    repair_op: str
    accepted: bool
    temperature: float


@dataclass
class AlnsResult:
    best: Solution
    best_cost: float
    trace: list[TraceRow]
    iterations: int
    wall_time_s: float
    seed: int
    destroy_weights: dict[str, float] = field(default_factory=dict)
    repair_weights: dict[str, float] = field(default_factory=dict)
    violations: list[tuple[int, Violation]] = field(default_factory=list)
    candidates_checked: int = 0


def initial_solution(ctx: SearchContext, rng: random.Random) -> WorkingSolution:
    return best_insert(WorkingSolution(ctx), rng)


def solve(
    instance: Instance,
    params: Optional[AlnsParams] = None,
    initial: Optional[Solution] = None,
    check_candidates: bool = False,
    time_limit_s: Optional[float] = None,
) -> AlnsResult:
    """Run one seeded search; returns the best solution and the per-iteration trace.

    ``check_candidates`` runs the full constraint checker on every candidate and
    records any violation (used by the invariant tests; slow).
    """
    params = params or AlnsParams()
    t0 = time.perf_counter()
    rng = random.Random(params.seed)
    ctx = SearchContext(instance)
    if initial is not None:
        cur = WorkingSolution.from_solution(ctx, initial)
        if cur.unserved:
            cur = best_insert(cur, rng)
    else:
        cur = initial_solution(ctx, rng)
    cur_cost = cur.total
    best = cur.copy()
    best_cost = cur_cost

    d_names = list(DESTROY_OPERATORS)
    r_names = list(REPAIR_OPERATORS)
    d_state = OperatorState.uniform(len(d_names))
    r_state = OperatorState.uniform(len(r_names))
    history = [cur_cost]
    trace: list[TraceRow] = []
    violations: list[tuple[int, Violation]] = []
    checked = 0
    T = params.t_start
    it = 0
    while not should_terminate(it, history, params):
        if time_limit_s is not None and time.perf_counter() - t0 > time_limit_s:
            break
        it += 1
        di = select_operator(d_state, rng)
        ri = select_operator(r_state, rng)
        cand = cur.copy()
        DESTROY_OPERATORS[d_names[di]](cand, rng, params)
        REPAIR_OPERATORS[r_names[ri]](cand, rng)
        c = cand.total
        if check_candidates:
            checked += 1
            violations.extend((it, v) for v in check_feasibility(cand.to_solution(), instance))
        accepted = True
        if c < best_cost - 1e-9:
            score = params.sigma1
            best = cand.copy()
            best_cost = c
        elif c < cur_cost - 1e-9:
            score = params.sigma2
        elif sa_accept(c, cur_cost, T, rng):
            score = params.sigma3
        else:
            score = params.sigma4
            accepted = False
        if accepted:
            cur, cur_cost = cand, c
        update_weights(d_state, di, score, params.delta)
        update_weights(r_state, ri, score, params.delta)
        trace.append(TraceRow(it, cur_cost, best_cost, d_names[di], r_names[ri], accepted, T))
        T = cool(T, params)
        history.append(cur_cost)

    sol = best.to_solution()
    return AlnsResult(
        best=sol,
        best_cost=objective(sol, instance),
        trace=trace,
        iterations=it,
        wall_time_s=time.perf_counter() - t0,
        seed=params.seed,
        destroy_weights=dict(zip(d_names, d_state.weights)),
        repair_weights=dict(zip(r_names, r_state.weights)),
        violations=violations,
        candidates_checked=checked,
    )


@dataclass
class EnsembleResult:
    best: AlnsResult
    runs: list[AlnsResult]

    @property
    def best_cost(self) -> float:
        return self.best.best_cost

    @property
    def mean_cost(self) -> float:
        return sum(r.best_cost for r in self.runs) / len(self.runs)

    @property
    def wall_time_s(self) -> float:
        return sum(r.wall_time_s for r in self.runs)


def solve_ensemble(
    instance: Instance,
    params: Optional[AlnsParams] = None,
    initial: Optional[Solution] = None,
    ensemble_size: Optional[int] = None,
    time_limit_s: Optional[float] = None,
) -> EnsembleResult:
    """Independent runs with seeds base_seed + run_index; keeps the cheapest."""
    params = params or AlnsParams()
    n = ensemble_size or params.ensemble_size
    runs = [solve(instance, replace(params, seed=params.seed + i), initial, time_limit_s=time_limit_s) for i in range(n)]
    best = min(runs, key=lambda r: (r.best_cost, r.seed))
    return EnsembleResult(best, runs)


def write_trace(trace: list[TraceRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in trace:
            w.writerow(
                [row.iteration, repr(row.current_obj), repr(row.best_obj), row.destroy_op, row.repair_op,
                 int(row.accepted), repr(row.temperature)]
            )
    return path
