"""Exact solver for small instances.

Two stages:

1. For every physical depot a label-setting dynamic program enumerates all
   elementary routes and keeps, per request subset, the cheapest platoon for
   each admissible module configuration.
2. A branch-and-bound over request-to-platoon assignment (set partitions plus
   an "unserved" option) combines those routes under the fleet, platoon-count
   and depot-copy limits.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .evaluate import make_platoon, objective
from .model import TIME_EPS, Instance, Solution

INF = float("inf")


@dataclass(frozen=True)
class ExactLimits:
    time_limit: float = 3600.0
    gap: float = 1e-4
    max_nodes_hint: int = 16

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError("gap must be >= 0")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class ExactResult:
    solution: Solution
    objective: float
    lower_bound: float
    proven_optimal: bool
    nodes_explored: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "proven_optimal": self.proven_optimal,
            "nodes_explored": self.nodes_explored,
            "wall_time_s": self.wall_time_s,
        }


@dataclass
class RouteOption:
    modules: tuple[int, ...]
    depot: int
    cost: float
    visits: tuple[int, ...]


@dataclass
class RouteTable:
    n_r: int
    options: list[list[RouteOption]]  # per subset mask, cheapest first
    best: list[float]
    supmin: list[float]  # cheapest route over all supersets of the mask
    build_time_s: float = 0.0
    per_depot_limit: bool = False


def _extras_may_pay(f) -> bool:
    """Whether a platoon could ever profit from more modules than it needs."""
    for p in range(1, f.z_max):
        gain = (f.dist_w[p] - f.dist_w[p + 1]) * f.R - (f.fleet[p + 1] - f.fleet[p])
        if gain > 1e-12:
            return True
    return False


def _configs(needs: tuple[int, ...], f, extras: bool) -> list[tuple[int, ...]]:
    if sum(needs) > f.z_max or any(n > z for n, z in zip(needs, f.Z)):
        return []
    if not extras:
        return [needs]
    ranges = [range(n, min(z, f.z_max) + 1) for n, z in zip(needs, f.Z)]
    return [m for m in itertools.product(*ranges) if 1 <= sum(m) <= f.z_max]


def _dominated(label, others) -> bool:
    km, C, B, hi, needs = label[:5]
    for o in others:
        if o[0] <= km + 1e-12 and o[1] <= C + 1e-12 and o[2] <= B + 1e-12 and o[3] >= hi - 1e-12 and all(
            x <= y for x, y in zip(o[4], needs)
        ):
            return True
    return False


def _depot_routes(instance: Instance, origin: int) -> dict[int, list[tuple]]:
    """Closed routes from ``origin``: subset mask -> [(needs, km, duration, visits)]."""
    f = instance.fast
    a, b, tt, dist = f.a, f.b, f.tt, f.dist
    n = f.n_r
    Q = f.Q
    n_types = f.n_types
    cap_max = [Q[k] * min(f.Z[k], f.z_max) for k in range(n_types)]
    dest = origin + f.dest_offset
    R = f.R + 1e-9

    # state -> list of labels (km, C, B, hi, needs, load, visits)
    start = (0.0, 0.0, a[origin], b[origin], (0,) * n_types, (0,) * n_types, ())
    layer: dict[tuple[int, int, int], list[tuple]] = {(0, 0, origin): [start]}
    closed: dict[int, list[tuple]] = {}
    for _ in range(2 * n):
        nxt: dict[tuple[int, int, int], list[tuple]] = {}
        for (picked, dropped, last), labels in layer.items():
            moves = []
            for r in range(n):
                bit = 1 << r
                if not picked & bit:
                    moves.append((r, f.pickup[r], bit, 0))
                elif not dropped & bit:
                    moves.append((r, f.dropoff[r], 0, bit))
            for r, v, pb, db in moves:
                t = tt[last][v]
                k = f.rtype[r]
                for km, C, B, hi, needs, load, visits in labels:
                    arr = B + t
                    if arr > b[v] + TIME_EPS:
                        continue
                    km2 = km + dist[last][v]
                    if km2 > R:
                        continue
                    if pb:
                        lk = load[k] + f.rq[r]
                        if lk > cap_max[k]:
                            continue
                        load2 = load[:k] + (lk,) + load[k + 1:]
                        nk = -(-lk // Q[k])
                        needs2 = needs if nk <= needs[k] else needs[:k] + (nk,) + needs[k + 1:]
                        if sum(needs2) > f.z_max:
                            continue
                    else:
                        load2 = load[:k] + (load[k] - f.rq[r],) + load[k + 1:]
                        needs2 = needs
                    h = b[v] - C - t
                    lab = (km2, C + t, arr if arr > a[v] else a[v], hi if hi < h else h, needs2, load2, visits + (v,))
                    key = (picked | pb, dropped | db, v)
                    bucket = nxt.get(key)
                    if bucket is None:
                        nxt[key] = [lab]
                    elif not _dominated(lab, bucket):
                        bucket[:] = [o for o in bucket if not _dominated(o, [lab])]
                        bucket.append(lab)
        layer = nxt
        for (picked, dropped, last), labels in layer.items():
            if picked != dropped:
                continue
            t = tt[last][dest]
            for km, C, B, hi, needs, load, visits in labels:
                arr = B + t
                if arr > b[dest] + TIME_EPS:
                    continue
                km2 = km + dist[last][dest]
                if km2 > R:
                    continue
                h = b[dest] - C - t
                hi2 = hi if hi < h else h
                Cf = C + t
                Bf = arr if arr > a[dest] else a[dest]
                dur = max(Cf, Bf - hi2)
                closed.setdefault(picked, []).append((needs, km2, dur, visits))
    return closed


def build_route_table(instance: Instance) -> RouteTable:
    t0 = time.perf_counter()
    f = instance.fast
    n = f.n_r
    extras = _extras_may_pay(f)
    size = 1 << n
    by_key: list[dict] = [dict() for _ in range(size)]
    for d, copies in enumerate(f.depot_copies):
        if not copies:
            continue
        for mask, routes in _depot_routes(instance, copies[0]).items():
            cell = by_key[mask]
            for needs, km, dur, visits in routes:
                for m in _configs(needs, f, extras):
                    p = sum(m)
                    cost = f.dist_w[p] * km + f.fleet[p] + f.alpha3 * dur
                    key = (m, d)
                    if key not in cell or cost < cell[key].cost - 1e-12:
                        cell[key] = RouteOption(m, d, cost, visits)
    per_depot = any(len(c) < f.l_max for c in f.depot_copies)
    options: list[list[RouteOption]] = []
    for cell in by_key:
        opts = sorted(cell.values(), key=lambda o: (o.cost, o.modules, o.depot))
        kept: list[RouteOption] = []
        for o in opts:
            # an option is useless if a cheaper one needs no more modules of any type
            # (and, when depot copies can run out, sits at the same depot)
            if any(
                all(x <= y for x, y in zip(k.modules, o.modules)) and (not per_depot or k.depot == o.depot)
                for k in kept
            ):
                continue
            kept.append(o)
        options.append(kept)
    best = [opts[0].cost if opts else INF for opts in options]
    supmin = list(best)
    for mask in range(size - 1, -1, -1):
        for r in range(n):
            bit = 1 << r
            if not mask & bit and supmin[mask | bit] < supmin[mask]:
                supmin[mask] = supmin[mask | bit]
    return RouteTable(n, options, best, supmin, time.perf_counter() - t0, per_depot)


@dataclass
class PartialAssignment:
    groups: list[set[int]] = field(default_factory=list)
    unserved: set[int] = field(default_factory=set)

    def assigned(self) -> set[int]:
        out = set(self.unserved)
        for g in self.groups:
            out |= g
        return out


def _mask(g) -> int:
    m = 0
    for r in g:
        m |= 1 << r
    return m


def _select_configs(masks: Sequence[int], table: RouteTable, f, limit: float = INF):
    """Cheapest option per group under fleet and depot-copy limits, or (INF, None)."""
    opts = [table.options[m] for m in masks]
    if any(not o for o in opts):
        return INF, None
    order = sorted(range(len(masks)), key=lambda i: len(opts[i]))
    mins = [opts[i][0].cost for i in order]
    tail = [0.0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        tail[i] = tail[i + 1] + mins[i]
    used = [0] * f.n_types
    copies_left = [len(c) for c in f.depot_copies]
    best = [limit, None]
    chosen: list[Optional[RouteOption]] = [None] * len(order)

    def rec(i: int, acc: float) -> None:
        if acc + tail[i] >= best[0] - 1e-9:
            return
        if i == len(order):
            best[0] = acc
            picks = [None] * len(masks)
            for j, gi in enumerate(order):
                picks[gi] = chosen[j]
            best[1] = picks
            return
        for o in opts[order[i]]:
            if acc + o.cost + tail[i + 1] >= best[0] - 1e-9:
                break
            if any(used[k] + o.modules[k] > f.Z[k] for k in range(f.n_types)) or copies_left[o.depot] == 0:
                continue
            for k in range(f.n_types):
                used[k] += o.modules[k]
            copies_left[o.depot] -= 1
            chosen[i] = o
            rec(i + 1, acc + o.cost)
            copies_left[o.depot] += 1
            for k in range(f.n_types):
                used[k] -= o.modules[k]

    rec(0, 0.0)
    if best[1] is None:
        return INF, None
    return best[0], best[1]


def lower_bound(partial: PartialAssignment, instance: Instance, table: Optional[RouteTable] = None) -> float:
    """Admissible bound on every completion of ``partial``.

    Open groups are charged their cheapest superset route. A request still
    unassigned adds nothing unless it cannot be routed at all, in which case it
    must stay unserved. A fully assigned state is priced exactly.
    """
    table = table or build_route_table(instance)
    f = instance.fast
    done = partial.assigned()
    rest = [r for r in range(f.n_r) if r not in done]
    if not rest:
        masks = [_mask(g) for g in partial.groups]
        leaf, _ = _select_configs(masks, table, f)
        return leaf + f.alpha4 * len(partial.unserved)
    bound = f.alpha4 * len(partial.unserved)
    for g in partial.groups:
        bound += table.supmin[_mask(g)]
    for r in rest:
        if table.supmin[1 << r] == INF:
            bound += f.alpha4
    return bound


def solve_exact(
    instance: Instance,
    limits: Optional[ExactLimits] = None,
    order: Optional[Sequence[int]] = None,
    table: Optional[RouteTable] = None,
    trace: Optional[list] = None,
) -> ExactResult:
    """Optimal solution (or incumbent plus bound when the time limit hits).

    ``order`` permutes the branching sequence of requests; ``trace``, when a
    list, receives (depth, group masks, unserved count, bound, parent bound)
    for every explored node.
    """
    limits = limits or ExactLimits()
    t0 = time.perf_counter()
    f = instance.fast
    n = f.n_r
    if 2 * n > 4 * limits.max_nodes_hint:
        raise ValueError(f"{2 * n} request nodes is far beyond the exact solver's reach")
    table = table or build_route_table(instance)
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the request ids")
    a4 = f.alpha4
    single_inf = [table.supmin[1 << r] == INF for r in range(n)]
    # suffix count of requests that can never be routed
    forced = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        forced[i] = forced[i + 1] + (1 if single_inf[order[i]] else 0)

    incumbent = a4 * n
    inc_groups: list[int] = []
    inc_picks: list = []
    pruned_min = INF
    explored = 0
    timed_out = False

    # node: (depth, group masks, n_unserved, bound, parent bound)
    root = a4 * forced[0]
    stack = [(0, (), 0, root, root)]
    while stack:
        if time.perf_counter() - t0 > limits.time_limit:
            timed_out = True
            break
        depth, groups, n_uns, bound, parent = stack.pop()
        explored += 1
        if trace is not None:
            trace.append((depth, groups, n_uns, bound, parent))
        tol = limits.gap * abs(incumbent)
        if bound >= incumbent - tol - 1e-9:
            pruned_min = min(pruned_min, bound)
            continue
        if depth == n:
            leaf, picks = _select_configs(groups, table, f, limit=incumbent - a4 * n_uns)
            if picks is not None and leaf + a4 * n_uns < incumbent:
                incumbent = leaf + a4 * n_uns
                inc_groups, inc_picks = list(groups), picks
            continue
        r = order[depth]
        bit = 1 << r
        base = bound - (a4 if single_inf[r] else 0.0)
        children = []
        # unserved
        children.append((depth + 1, groups, n_uns + 1, base + a4, bound))
        if not single_inf[r]:
            # open a new platoon
            if len(groups) < f.l_max:
                children.append((depth + 1, groups + (bit,), n_uns, base + table.supmin[bit], bound))
            # join an existing one
            for gi, g in enumerate(groups):
                s = table.supmin[g | bit]
                if s == INF:
                    continue
                ng = groups[:gi] + (g | bit,) + groups[gi + 1:]
                children.append((depth + 1, ng, n_uns, base - table.supmin[g] + s, bound))
        # explore cheapest child first
        children.sort(key=lambda c: -c[3])
        for c in children:
            if c[3] >= incumbent - limits.gap * abs(incumbent) - 1e-9:
                pruned_min = min(pruned_min, c[3])
            else:
                stack.append(c)

    if timed_out:
        lb = min([incumbent, pruned_min] + [node[3] for node in stack])
    else:
        lb = min(incumbent, pruned_min)
    solution = _materialize(instance, inc_groups, inc_picks)
    obj = objective(solution, instance)
    return ExactResult(
        solution=solution,
        objective=obj,
        lower_bound=min(lb, obj),
        proven_optimal=not timed_out,
        nodes_explored=explored,
        wall_time_s=time.perf_counter() - t0,
    )


def _materialize(instance: Instance, groups: Sequence[int], picks) -> Solution:
    f = instance.fast
    platoons = []
    served = 0
    next_copy = [0] * len(f.depot_copies)
    for g, opt in zip(groups, picks or []):
        served |= g
        origin = f.depot_copies[opt.depot][next_copy[opt.depot]]
        next_copy[opt.depot] += 1
        platoons.append(make_platoon(instance, origin, opt.modules, list(opt.visits)))
    unserved = {r for r in range(f.n_r) if not served >> r & 1}
    return Solution(platoons, unserved)
