"""Repair operators: reinsert the unserved pool in random order.

A request is only inserted when that is cheaper than leaving it unserved.
"""

from __future__ import annotations

import random

from .state import WorkingSolution


def _shuffled_pool(ws: WorkingSolution, rng: random.Random) -> list[int]:
    pool = sorted(ws.unserved)
    rng.shuffle(pool)
    return pool


def _finish(ws: WorkingSolution) -> WorkingSolution:
    ws.resize_modules()
    ws.removed_from.clear()
    return ws


def _insert_best_of(ws: WorkingSolution, rid: int, routes) -> bool:
    limit = ws.f.alpha4
    best = None
    target = None
    for route in routes:
        opt = ws.best_insertion(route, rid)
        if opt is not None and (best is None or opt[0] < best[0] - 1e-12):
            best, target = opt, route
    new = ws.new_route_option(rid)
    if new is not None and (best is None or new[0] < best[0] - 1e-12):
        if new[0] < limit:
            ws.open_route(rid, new[1], new[2])
            return True
        return False
    if best is not None and best[0] < limit:
        ws.apply_insertion(target, rid, best[1], best[2], best[3])
        return True
    return False


def best_insert(ws: WorkingSolution, rng: random.Random) -> WorkingSolution:
    for rid in _shuffled_pool(ws, rng):
        _insert_best_of(ws, rid, list(ws.routes))
    return _finish(ws)


def first_fit_insert(ws: WorkingSolution, rng: random.Random) -> WorkingSolution:
    limit = ws.f.alpha4
    for rid in _shuffled_pool(ws, rng):
        done = False
        for route in ws.routes:
            opt = ws.best_insertion(route, rid, first_below=limit)
            if opt is not None:
                ws.apply_insertion(route, rid, opt[1], opt[2], opt[3])
                done = True
                break
        if not done:
            new = ws.new_route_option(rid, first_below=limit)
            if new is not None:
                ws.open_route(rid, new[1], new[2])
    return _finish(ws)


def inter_route_insert(ws: WorkingSolution, rng: random.Random) -> WorkingSolution:
    """Best slot in the platoon the request came from, else in a random platoon."""
    for rid in _shuffled_pool(ws, rng):
        uid = ws.removed_from.get(rid)
        home = next((r for r in ws.routes if r.uid == uid), None) if uid is not None else None
        if home is None and ws.routes:
            home = rng.choice(ws.routes)
        _insert_best_of(ws, rid, [home] if home is not None else [])
    return _finish(ws)


REPAIR_OPERATORS = {
    "first_fit": first_fit_insert,
    "inter_route": inter_route_insert,
    "best": best_insert,
}
