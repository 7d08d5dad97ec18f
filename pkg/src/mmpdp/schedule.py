"""Arrival times and loads along a fixed visit sequence."""

from __future__ import annotations

from typing import Optional, Sequence

from .model import TIME_EPS, Instance, ceil_div


class ScheduleInfeasible(Exception):
    """No schedule meets every time window; ``position`` is the first failing visit."""

    def __init__(self, position: int, node: int, arrival: float, close: float):
        super().__init__(f"arrival {arrival:.4f} at node {node} (position {position}) after window close {close:.4f}")
        self.position = position
        self.node = node


class CapacityViolation(Exception):
    def __init__(self, position: int, node: int, demand_type: int, load: int, capacity: int):
        super().__init__(
            f"type-{demand_type} load {load} exceeds capacity {capacity} at node {node} (position {position})"
        )
        self.position = position
        self.node = node
        self.demand_type = demand_type


def compute_arrival_times(sequence: Sequence[int], instance: Instance) -> list[float]:
    """Minimal-duration arrival times for ``sequence`` (origin ... destination).

    The origin departure is set so that the platoon reaches the first stop
    exactly when its window opens (clamped to the depot window). Walking
    forward, any waiting in front of a stop is removed by pushing all earlier
    arrivals later, as far as the tightest upper window among them allows.
    """
    f = instance.fast
    a, b, tt = f.a, f.b, f.tt
    seq = list(sequence)
    if len(seq) < 2:
        raise ValueError("sequence must contain at least origin and destination")
    o, first = seq[0], seq[1]
    s = [0.0] * len(seq)
    s[0] = min(max(a[first] - tt[o][first], a[o]), b[o])
    for i in range(len(seq) - 1):
        u, v = seq[i], seq[i + 1]
        arr = s[i] + tt[u][v]
        if arr > b[v] + TIME_EPS:
            raise ScheduleInfeasible(i + 1, v, arr, b[v])
        if arr < a[v]:
            wait = a[v] - arr
            gap = min(b[seq[k]] - s[k] for k in range(i + 1))
            shift = min(wait, gap)
            if shift > 0:
                for k in range(i + 1):
                    s[k] += shift
                arr = s[i] + tt[u][v]
            arr = max(arr, a[v])
        s[i + 1] = arr
    return s


def propagate_loads(sequence: Sequence[int], modules_per_type: Sequence[int], instance: Instance) -> list[tuple[int, ...]]:
    """Per-type onboard load after each visit; raises on the first overload."""
    f = instance.fast
    load = [0] * f.n_types
    out = [tuple(load)]
    for pos, v in enumerate(sequence[1:], start=1):
        k = f.ktype[v]
        if k >= 0:
            load[k] += f.q[v]
            cap = f.Q[k] * modules_per_type[k]
            if load[k] > cap:
                raise CapacityViolation(pos, v, k, load[k], cap)
        out.append(tuple(load))
    return out


def peak_loads(visits: Sequence[int], instance: Instance) -> list[int]:
    f = instance.fast
    load = [0] * f.n_types
    peak = [0] * f.n_types
    for v in visits:
        k = f.ktype[v]
        load[k] += f.q[v]
        if load[k] > peak[k]:
            peak[k] = load[k]
    return peak


def modules_needed(peaks: Sequence[int], instance: Instance) -> list[int]:
    Q = instance.fast.Q
    return [ceil_div(p, Q[k]) for k, p in enumerate(peaks)]


def route_stats(f, origin: int, visits: Sequence[int]) -> Optional[tuple[float, float]]:
    """(km, minimal duration) of a route, or None when a window is missed.

    Each prefix is summarised by (C, B, hi): arrival at the last stop is
    max(x + C, B) for an origin departure x <= hi. The best duration is
    reached by leaving at hi.
    """
    a, b, tt, dist = f.a, f.b, f.tt, f.dist
    prev = origin
    C = 0.0
    B = a[origin]
    hi = b[origin]
    km = 0.0
    for n in visits:
        t = tt[prev][n]
        arr = B + t
        if arr > b[n] + TIME_EPS:
            return None
        h = b[n] - C - t
        if h < hi:
            hi = h
        C += t
        B = arr if arr > a[n] else a[n]
        km += dist[prev][n]
        prev = n
    dest = origin + f.dest_offset
    t = tt[prev][dest]
    arr = B + t
    if arr > b[dest] + TIME_EPS:
        return None
    h = b[dest] - C - t
    if h < hi:
        hi = h
    C += t
    B = arr if arr > a[dest] else a[dest]
    km += dist[prev][dest]
    dur = B - hi
    return km, (C if C > dur else dur)


def route_duration(sequence: Sequence[int], instance: Instance) -> float:
    s = compute_arrival_times(sequence, instance)
    return s[-1] - s[0]
