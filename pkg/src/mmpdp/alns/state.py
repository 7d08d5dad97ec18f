"""Mutable search state: routes with cached prefix/suffix summaries.

A route segment is summarised by (C, B, hi): for an origin departure x <= hi
the platoon reaches the last stop at max(x + C, B). Two summaries concatenate
in O(1), so every pickup/dropoff position pair of a request can be priced
without re-walking the route.
"""

from __future__ import annotations

from typing import Optional

from ..evaluate import make_platoon
from ..model import TIME_EPS, Instance, Solution
from ..schedule import route_stats

EPS = TIME_EPS


class SearchContext:
    """Read-only data shared by all states of one run."""

    def __init__(self, instance: Instance):
        self.instance = instance
        f = instance.fast
        self.f = f
        # solo[r][d]: (km, min duration) of a dedicated platoon from depot d, or None
        self.solo: list[list[Optional[tuple[float, float]]]] = []
        for r in range(f.n_r):
            k = f.rtype[r]
            need = -(-f.rq[r] // f.Q[k])
            row: list[Optional[tuple[float, float]]] = []
            for copies in f.depot_copies:
                st = None
                if need <= min(f.Z[k], f.z_max) and copies:
                    st = route_stats(f, copies[0], [f.pickup[r], f.dropoff[r]])
                    if st is not None and st[0] > f.R + 1e-9:
                        st = None
                row.append(st)
            self.solo.append(row)


class Route:
    __slots__ = ("origin", "mods", "seq", "km", "dur", "cost", "uid", "_cache")

    def __init__(self, origin: int, mods: list[int], seq: list[int], uid: int):
        self.origin = origin
        self.mods = mods
        self.seq = seq
        self.uid = uid
        self.km = 0.0
        self.dur = 0.0
        self.cost = 0.0
        self._cache = None

    @property
    def p(self) -> int:
        return sum(self.mods)

    def copy(self) -> "Route":
        r = Route(self.origin, list(self.mods), list(self.seq), self.uid)
        r.km, r.dur, r.cost, r._cache = self.km, self.dur, self.cost, self._cache
        return r

    def requests(self, f) -> list[int]:
        return [f.req_of[v] for v in self.seq if v == f.pickup[f.req_of[v]]]


def route_cost(f, p: int, km: float, dur: float) -> float:
    return f.dist_w[p] * km + f.fleet[p] + f.alpha3 * dur


def route_schedule(f, origin: int, seq: list[int]) -> list[float]:
    """Arrival times (origin, *seq, destination) of a minimal-duration schedule."""
    a, b, tt = f.a, f.b, f.tt
    nodes = [origin, *seq, origin + f.dest_offset]
    C = 0.0
    hi = b[origin]
    for u, v in zip(nodes, nodes[1:]):
        t = tt[u][v]
        h = b[v] - C - t
        if h < hi:
            hi = h
        C += t
    x = max(hi, a[origin])
    s = [x]
    for u, v in zip(nodes, nodes[1:]):
        arr = s[-1] + tt[u][v]
        s.append(arr if arr > a[v] else a[v])
    return s


class WorkingSolution:
    def __init__(self, ctx: SearchContext):
        self.ctx = ctx
        self.f = ctx.f
        self.routes: list[Route] = []
        self.unserved: set[int] = set(range(self.f.n_r))
        self.used: set[int] = set()
        self.deployed = [0] * self.f.n_types
        self.loc: dict[int, Route] = {}
        self.removed_from: dict[int, int] = {}
        self._next_uid = 0

    # bookkeeping ---------------------------------------------------------
    @property
    def total(self) -> float:
        return sum(r.cost for r in self.routes) + self.f.alpha4 * len(self.unserved)

    @property
    def n_served(self) -> int:
        return self.f.n_r - len(self.unserved)

    def idle(self, k: int) -> int:
        return self.f.Z[k] - self.deployed[k]

    def copy(self) -> "WorkingSolution":
        w = WorkingSolution.__new__(WorkingSolution)
        w.ctx, w.f = self.ctx, self.f
        w.routes = [r.copy() for r in self.routes]
        w.unserved = set(self.unserved)
        w.used = set(self.used)
        w.deployed = list(self.deployed)
        w.removed_from = dict(self.removed_from)
        w._next_uid = self._next_uid
        w.loc = {}
        f = self.f
        for r in w.routes:
            for v in r.seq:
                rid = f.req_of[v]
                if v == f.pickup[rid]:
                    w.loc[rid] = r
        return w

    def refresh(self, route: Route) -> bool:
        route._cache = None
        st = route_stats(self.f, route.origin, route.seq)
        if st is None or st[0] > self.f.R + 1e-9:
            return False
        route.km, route.dur = st
        route.cost = route_cost(self.f, route.p, route.km, route.dur)
        return True

    # conversion ----------------------------------------------------------
    @classmethod
    def from_solution(cls, ctx: SearchContext, solution: Solution) -> "WorkingSolution":
        w = cls(ctx)
        f = ctx.f
        for pl in solution.platoons:
            route = Route(pl.origin_depot, list(pl.config.modules_per_type), list(pl.visits), w._new_uid())
            if not w.refresh(route):
                raise ValueError("initial solution contains an infeasible platoon")
            w.routes.append(route)
            w.used.add(route.origin)
            for k, m in enumerate(route.mods):
                w.deployed[k] += m
            for rid in route.requests(f):
                w.loc[rid] = route
                w.unserved.discard(rid)
        return w

    def to_solution(self) -> Solution:
        inst = self.ctx.instance
        return Solution([make_platoon(inst, r.origin, r.mods, r.seq) for r in self.routes], set(self.unserved))

    def _new_uid(self) -> int:
        self._next_uid += 1
        return self._next_uid

    # removal -------------------------------------------------------------
    def drop_route(self, route: Route) -> None:
        f = self.f
        self.routes.remove(route)
        self.used.discard(route.origin)
        for k, m in enumerate(route.mods):
            self.deployed[k] -= m
        for rid in route.requests(f):
            self.loc.pop(rid, None)
            self.unserved.add(rid)
            self.removed_from[rid] = route.uid

    def remove_request(self, rid: int) -> None:
        f = self.f
        route = self.loc.pop(rid)
        route.seq.remove(f.pickup[rid])
        route.seq.remove(f.dropoff[rid])
        self.unserved.add(rid)
        self.removed_from[rid] = route.uid
        if not route.seq:
            self.drop_route(route)
        elif not self.refresh(route):
            # only reachable with non-metric travel times
            self.drop_route(route)

    # insertion -----------------------------------------------------------
    def _summaries(self, route: Route):
        if route._cache is not None:
            return route._cache
        f = self.f
        a, b, tt, dist = f.a, f.b, f.tt, f.dist
        nodes = [route.origin, *route.seq, route.origin + f.dest_offset]
        L = len(route.seq)
        pC = [0.0] * (L + 1)
        pB = [0.0] * (L + 1)
        pH = [0.0] * (L + 1)
        pK = [0.0] * (L + 1)
        C, B, hi, km = 0.0, a[nodes[0]], b[nodes[0]], 0.0
        pB[0], pH[0] = B, hi
        for i in range(1, L + 1):
            u, v = nodes[i - 1], nodes[i]
            t = tt[u][v]
            h = b[v] - C - t
            if h < hi:
                hi = h
            C += t
            arr = B + t
            B = arr if arr > a[v] else a[v]
            km += dist[u][v]
            pC[i], pB[i], pH[i], pK[i] = C, B, hi, km
        sC = [0.0] * (L + 1)
        sB = [0.0] * (L + 1)
        sH = [0.0] * (L + 1)
        sK = [0.0] * (L + 1)
        last = nodes[L + 1]
        C, B, hi, km = 0.0, a[last], b[last], 0.0
        sB[L], sH[L] = B, hi
        for j in range(L - 1, -1, -1):
            n = nodes[j + 1]
            nxt = nodes[j + 2]
            t = tt[n][nxt]
            B2 = a[n] + t + C
            B = B2 if B2 > B else B
            h = hi - t
            hi = b[n] if b[n] < h else h
            C += t
            km += dist[n][nxt]
            sC[j], sB[j], sH[j], sK[j] = C, B, hi, km
        loads = []
        peaks = []
        for k in range(f.n_types):
            ld = [0] * (L + 1)
            cur = 0
            pk = 0
            for i in range(1, L + 1):
                v = nodes[i]
                if f.ktype[v] == k:
                    cur += f.q[v]
                    if cur > pk:
                        pk = cur
                ld[i] = cur
            loads.append(ld)
            peaks.append(pk)
        route._cache = (nodes, pC, pB, pH, pK, sC, sB, sH, sK, loads, peaks)
        return route._cache

    def best_insertion(self, route: Route, rid: int, first_below: Optional[float] = None):
        """Cheapest (delta, i, j, modules of the request type) or None.

        With ``first_below`` set, the first position pair whose delta is
        below that value is returned instead of the cheapest.
        """
        f = self.f
        a, b, tt, dist = f.a, f.b, f.tt, f.dist
        nodes, pC, pB, pH, pK, sC, sB, sH, sK, loads, peaks = self._summaries(route)
        L = len(route.seq)
        P, D = f.pickup[rid], f.dropoff[rid]
        k = f.rtype[rid]
        qq = f.rq[rid]
        Qk = f.Q[k]
        mk = route.mods[k]
        p0 = route.p
        max_cap = Qk * (mk + min(self.idle(k), f.z_max - p0))
        peak_k = peaks[k]
        ld = loads[k]
        R = f.R + 1e-9
        a3 = f.alpha3
        base = route.cost
        aP, bP, aD, bD = a[P], b[P], a[D], b[D]
        tP, tD = tt[P], tt[D]
        dP, dD = dist[P], dist[D]
        best = None
        best_delta = float("inf")
        for i in range(L + 1):
            lk = ld[i]
            if lk + qq > max_cap:
                continue
            last = nodes[i]
            t = tt[last][P]
            B = pB[i] + t
            if B > bP + EPS:
                continue
            C0 = pC[i]
            hi = pH[i]
            h = bP - C0 - t
            if h < hi:
                hi = h
            C = C0 + t
            if B < aP:
                B = aP
            km = pK[i] + dist[last][P]
            cur = P
            mx = lk
            for j in range(i, L + 1):
                t1 = tt[cur][D]
                Bd = B + t1
                if Bd <= bD + EPS:
                    nxt = nodes[j + 1]
                    t2 = tD[nxt]
                    B2 = Bd if Bd > aD else aD
                    if B2 + t2 <= sH[j] + EPS:
                        kmf = km + dist[cur][D] + dD[nxt] + sK[j]
                        if kmf <= R:
                            C2 = C + t1
                            hi2 = bD - C - t1
                            if hi < hi2:
                                hi2 = hi
                            h = sH[j] - C2 - t2
                            if h < hi2:
                                hi2 = h
                            Cf = C2 + t2 + sC[j]
                            Bf = B2 + t2 + sC[j]
                            if sB[j] > Bf:
                                Bf = sB[j]
                            dur = Bf - hi2
                            if Cf > dur:
                                dur = Cf
                            pk = mx + qq
                            if peak_k > pk:
                                pk = peak_k
                            need = -(-pk // Qk)
                            pn = p0 + need - mk if need > mk else p0
                            delta = f.dist_w[pn] * kmf + f.fleet[pn] + a3 * dur - base
                            if first_below is not None:
                                if delta < first_below:
                                    return delta, i, j, (need if need > mk else mk)
                            elif delta < best_delta - 1e-12:
                                best_delta = delta
                                best = (delta, i, j, need if need > mk else mk)
                if j == L:
                    break
                n = nodes[j + 1]
                t = tt[cur][n]
                Bn = B + t
                if Bn > b[n] + EPS:
                    break
                h = b[n] - C - t
                if h < hi:
                    hi = h
                C += t
                B = Bn if Bn > a[n] else a[n]
                km += dist[cur][n]
                cur = n
                if ld[j + 1] > mx:
                    mx = ld[j + 1]
                    if mx + qq > max_cap:
                        break
        return best

    def new_route_option(self, rid: int, first_below: Optional[float] = None):
        """(delta, origin, modules) for a dedicated new platoon, or None."""
        f = self.f
        if len(self.routes) >= f.l_max:
            return None
        k = f.rtype[rid]
        need = -(-f.rq[rid] // f.Q[k])
        if need > self.idle(k) or need > f.z_max:
            return None
        best = None
        for d, st in enumerate(self.ctx.solo[rid]):
            if st is None:
                continue
            origin = next((o for o in f.depot_copies[d] if o not in self.used), None)
            if origin is None:
                continue
            cost = route_cost(f, need, st[0], st[1])
            if first_below is not None:
                if cost < first_below:
                    return cost, origin, need
            elif best is None or cost < best[0] - 1e-12:
                best = (cost, origin, need)
        return best

    def apply_insertion(self, route: Route, rid: int, i: int, j: int, mk_new: int) -> None:
        f = self.f
        k = f.rtype[rid]
        seq = route.seq
        route.seq = seq[:i] + [f.pickup[rid]] + seq[i:j] + [f.dropoff[rid]] + seq[j:]
        if mk_new > route.mods[k]:
            self.deployed[k] += mk_new - route.mods[k]
            route.mods[k] = mk_new
        self.unserved.discard(rid)
        self.loc[rid] = route
        ok = self.refresh(route)
        assert ok, "insertion evaluated as feasible but route check failed"

    def open_route(self, rid: int, origin: int, need: int) -> Route:
        f = self.f
        mods = [0] * f.n_types
        mods[f.rtype[rid]] = need
        route = Route(origin, mods, [f.pickup[rid], f.dropoff[rid]], self._new_uid())
        ok = self.refresh(route)
        assert ok
        self.routes.append(route)
        self.used.add(origin)
        self.deployed[f.rtype[rid]] += need
        self.unserved.discard(rid)
        self.loc[rid] = route
        return route

    # module sizing ---------------------------------------------------------
    def peaks(self, route: Route) -> list[int]:
        return list(self._summaries(route)[10])

    def resize_modules(self) -> None:
        """Set each platoon to its cheapest module count.

        Surplus modules are dropped when they cost more than they save on
        distance; idle modules are added when the train discount outweighs
        their fleet cost (only possible for large eta).
        """
        f = self.f
        for route in self.routes:
            pk = self.peaks(route)
            minimal = [-(-pk[k] // f.Q[k]) for k in range(f.n_types)]
            if sum(minimal) == 0:
                minimal[f.rtype[route.requests(f)[0]]] = 1
            if minimal != route.mods:
                pm = sum(minimal)
                c_min = f.dist_w[pm] * route.km + f.fleet[pm] + f.alpha3 * route.dur
                if c_min < route.cost - 1e-12:
                    for k in range(f.n_types):
                        self.deployed[k] += minimal[k] - route.mods[k]
                    route.mods = minimal
                    route.cost = c_min
        for route in sorted(self.routes, key=lambda r: -r.km):
            while route.p < f.z_max:
                k = next((k for k in range(f.n_types) if self.idle(k) > 0), None)
                if k is None:
                    return
                p = route.p
                gain = (f.dist_w[p] - f.dist_w[p + 1]) * route.km - (f.fleet[p + 1] - f.fleet[p])
                if gain <= 1e-12:
                    break
                route.mods[k] += 1
                self.deployed[k] += 1
                route.cost -= gain
