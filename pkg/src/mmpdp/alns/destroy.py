"""Destroy operators. Each one mutates a WorkingSolution in place."""

from __future__ import annotations

import math
import random

from .adaptive import removal_count
from .params import AlnsParams
from .state import WorkingSolution, route_cost, route_schedule
from ..schedule import route_stats


def served_requests(ws: WorkingSolution) -> list[int]:
    return sorted(ws.loc)


def random_removal(ws: WorkingSolution, n: int, rng: random.Random) -> WorkingSolution:
    served = served_requests(ws)
    for rid in rng.sample(served, min(n, len(served))):
        if rid in ws.loc:
            ws.remove_request(rid)
    return ws


def platoon_removal(ws: WorkingSolution, rng: random.Random) -> WorkingSolution:
    if ws.routes:
        ws.drop_route(rng.choice(ws.routes))
    return ws


def module_removal(ws: WorkingSolution, rng: random.Random, params: AlnsParams) -> WorkingSolution:
    """Take modules off platoons, then shed requests until the loads fit again."""
    f = ws.f
    total = sum(ws.deployed)
    if total == 0:
        return ws
    n_mod = rng.randint(1, max(1, math.ceil(params.xi * total)))
    for _ in range(n_mod):
        slots = [(route, k) for route in ws.routes for k in range(f.n_types) for _ in range(route.mods[k])]
        if not slots:
            break
        route, k = rng.choice(slots)
        route.mods[k] -= 1
        ws.deployed[k] -= 1
        cap = f.Q[k] * route.mods[k]
        while route in ws.routes and ws.peaks(route)[k] > cap:
            of_type = [rid for rid in route.requests(f) if f.rtype[rid] == k]
            ws.remove_request(rng.choice(of_type))
        if route in ws.routes:
            if route.p == 0:
                ws.drop_route(route)
            else:
                route.cost = route_cost(f, route.p, route.km, route.dur)
    return ws


def relatedness(ws: WorkingSolution, i: int, j: int, times: dict, params: AlnsParams) -> float:
    f = ws.f
    d = f.dist
    pi, di, pj, dj = f.pickup[i], f.dropoff[i], f.pickup[j], f.dropoff[j]
    return (
        params.phi * (d[pi][pj] + d[di][dj])
        + params.chi * (abs(times[pi] - times[pj]) + abs(times[di] - times[dj]))
        + params.psi * abs(f.rq[i] - f.rq[j])
    )


def visit_times(ws: WorkingSolution) -> dict[int, float]:
    times = {}
    for route in ws.routes:
        s = route_schedule(ws.f, route.origin, route.seq)
        for v, t in zip(route.seq, s[1:-1]):
            times[v] = t
    return times


def shaw_removal(ws: WorkingSolution, n: int, params: AlnsParams, rng: random.Random) -> WorkingSolution:
    """Remove a random seed request, then its most related ones (rank-randomised)."""
    served = served_requests(ws)
    if n <= 0 or not served:
        return ws
    times = visit_times(ws)
    seed = rng.choice(served)
    ranked = sorted((r for r in served if r != seed), key=lambda r: (relatedness(ws, seed, r, times, params), r))
    ws.remove_request(seed)
    removed = 1
    while removed < n:
        ranked = [r for r in ranked if r in ws.loc]
        if not ranked:
            break
        idx = int(len(ranked) * rng.random() ** params.rho)
        ws.remove_request(ranked.pop(idx))
        removed += 1
    return ws


def contribution(ws: WorkingSolution, route, rid: int) -> float:
    """Routing cost saved by taking ``rid`` out of its platoon (modules unchanged)."""
    f = ws.f
    if len(route.seq) == 2:
        return route.cost
    seq = [v for v in route.seq if f.req_of[v] != rid]
    st = route_stats(f, route.origin, seq)
    if st is None:
        return route.cost
    return route.cost - route_cost(f, route.p, st[0], st[1])


def worst_removal(ws: WorkingSolution, n: int, params: AlnsParams, rng: random.Random) -> WorkingSolution:
    f = ws.f
    contrib = {rid: contribution(ws, route, rid) for rid, route in ws.loc.items()}
    for _ in range(n):
        if not contrib:
            break
        ranked = sorted(contrib, key=lambda r: (-contrib[r], r))
        rid = ranked[int(len(ranked) * rng.random() ** params.rho_worst)]
        route = ws.loc[rid]
        ws.remove_request(rid)
        contrib.pop(rid)
        for other in route.requests(f):
            if other in ws.loc:
                contrib[other] = contribution(ws, ws.loc[other], other)
        for other in list(contrib):
            if other not in ws.loc:
                contrib.pop(other)
    return ws


# registry: name -> operator(ws, rng, params)
DESTROY_OPERATORS = {
    "random": lambda ws, rng, prm: random_removal(ws, removal_count(ws.n_served, ws.f.n_r, prm, rng), rng),
    "module": lambda ws, rng, prm: module_removal(ws, rng, prm),
    "platoon": lambda ws, rng, prm: platoon_removal(ws, rng),
    "shaw": lambda ws, rng, prm: shaw_removal(ws, removal_count(ws.n_served, ws.f.n_r, prm, rng), prm, rng),
    "worst": lambda ws, rng, prm: worst_removal(ws, removal_count(ws.n_served, ws.f.n_r, prm, rng), prm, rng),
}
