import itertools
import random

import pytest

from conftest import make_instance, random_small_instance
from mmpdp.evaluate import check_feasibility, make_platoon, objective
from mmpdp.exact import ExactLimits, PartialAssignment, build_route_table, lower_bound, solve_exact
from mmpdp.model import FREIGHT, PASSENGER, ModelParams, Solution
from mmpdp.schedule import ScheduleInfeasible, route_stats


def test_limits_defaults_and_validation():
    lim = ExactLimits()
    assert lim.time_limit == 3600 and lim.gap == 1e-4
    with pytest.raises(ValueError):
        ExactLimits(gap=-1)


def test_single_request_optimum():
    params = ModelParams(z_per_type=(1, 0), l_max=1)
    inst = make_instance([(PASSENGER, 5, (1, 1), (2, 2), (400, 420), (420, 480))], params=params, copies=1)
    res = solve_exact(inst, ExactLimits(gap=0))
    f = inst.fast
    km, dur = route_stats(f, 0, [f.pickup[0], f.dropoff[0]])
    serve = f.dist_w[1] * km + f.fleet[1] + f.alpha3 * dur
    assert res.proven_optimal
    assert res.objective == pytest.approx(min(serve, params.alpha4_eff))
    cheap = make_instance([(PASSENGER, 5, (1, 1), (2, 2), (400, 420), (420, 480))],
                          params=ModelParams(z_per_type=(1, 0), l_max=1, alpha4_eff=10.0), copies=1)
    assert solve_exact(cheap, ExactLimits(gap=0)).objective == pytest.approx(10.0)


def test_two_identical_requests_pool():
    reqs = [(PASSENGER, 7, (1, 0), (2, 0), (400, 430), (400, 500))] * 2
    inst = make_instance(reqs, copies=2)
    res = solve_exact(inst, ExactLimits(gap=0))
    assert len(res.solution.platoons) == 1
    assert res.solution.platoons[0].config.modules_per_type == (1, 0)
    assert check_feasibility(res.solution, inst) == []


def brute_force(inst):
    """Every assignment of requests to platoons (or unserved), every visit order."""
    f = inst.fast
    n = f.n_r
    best = objective(Solution([], set(range(n))), inst)
    for labels in itertools.product(range(n + 1), repeat=n):  # label n = unserved
        groups = {}
        for r, g in enumerate(labels):
            if g < n:
                groups.setdefault(g, []).append(r)
        # canonical labelling only
        seen = []
        for g in labels:
            if g < n and g not in seen:
                seen.append(g)
        if seen != sorted(seen) or (seen and seen != list(range(len(seen)))):
            continue
        if len(groups) > f.l_max:
            continue
        per_group = []
        for rs in groups.values():
            opts = []
            nodes = [f.pickup[r] for r in rs] + [f.dropoff[r] for r in rs]
            for perm in itertools.permutations(nodes):
                pos = {v: i for i, v in enumerate(perm)}
                if any(pos[f.pickup[r]] > pos[f.dropoff[r]] for r in rs):
                    continue
                for d, copies in enumerate(f.depot_copies):
                    for m in itertools.product(range(3), repeat=f.n_types):
                        if sum(m) == 0:
                            continue
                        try:
                            pl = make_platoon(inst, copies[0], m, list(perm))
                        except Exception:
                            continue
                        opts.append((objective(Solution([pl], set()), inst) - 0.0, m, d))
            if not opts:
                break
            per_group.append(opts)
        else:
            unserved = sum(1 for g in labels if g == n)
            for combo in itertools.product(*per_group):
                used = [sum(c[1][k] for c in combo) for k in range(f.n_types)]
                if any(u > z for u, z in zip(used, f.Z)):
                    continue
                cost = sum(c[0] for c in combo) + f.alpha4 * unserved
                if cost < best:
                    best = cost
    return best


def test_matches_brute_force_on_tiny_instances():
    rng = random.Random(21)
    for _ in range(6):
        inst = random_small_instance(rng, rng.randint(2, 3), n_depots=rng.randint(1, 2), copies=2,
                                     z_per_type=(2, 2))
        res = solve_exact(inst, ExactLimits(gap=0))
        assert res.proven_optimal
        assert res.objective == pytest.approx(brute_force(inst), rel=1e-9)
        assert check_feasibility(res.solution, inst) == []


@pytest.fixture(scope="module")
def mid():
    rng = random.Random(3)
    return random_small_instance(rng, 5, n_depots=2, copies=3)


def test_branch_order_invariance(mid):
    base = solve_exact(mid, ExactLimits(gap=0)).objective
    table = build_route_table(mid)
    rng = random.Random(0)
    for _ in range(3):
        order = list(range(mid.n_r))
        rng.shuffle(order)
        assert solve_exact(mid, ExactLimits(gap=0), order=order, table=table).objective == pytest.approx(base)


def test_lower_bound_root_leaf_and_monotone(mid):
    table = build_route_table(mid)
    trace = []
    res = solve_exact(mid, ExactLimits(gap=0), table=table, trace=trace)
    assert lower_bound(PartialAssignment(), mid, table) <= res.objective + 1e-9
    assert res.lower_bound == pytest.approx(res.objective)
    # leaf exactness on the optimal partition
    f = mid.fast
    groups = [{f.req_of[v] for v in pl.visits} for pl in res.solution.platoons]
    leaf = lower_bound(PartialAssignment(groups, set(res.solution.unserved)), mid, table)
    assert leaf == pytest.approx(res.objective)
    # monotone along every explored path, and equal to the public bound function
    order = list(range(f.n_r))
    assert trace
    for depth, groups_t, n_uns, bound, parent in trace:
        assert bound >= parent - 1e-9
        if depth == f.n_r:
            continue
        members = [{r for r in range(f.n_r) if g >> r & 1} for g in groups_t]
        grouped = set().union(*members) if members else set()
        unserved = set(order[:depth]) - grouped
        assert len(unserved) == n_uns
        assert lower_bound(PartialAssignment(members, unserved), mid, table) == pytest.approx(bound)


def test_bound_never_exceeds_alns_solutions(mid):
    from mmpdp.alns import DESK, solve
    from dataclasses import replace

    res = solve_exact(mid, ExactLimits(gap=0))
    heur = solve(mid, replace(DESK, lam=500, lam_min=300, omega=50))
    assert heur.best_cost >= res.objective - 1e-6


def test_time_limit_returns_incumbent_and_bound():
    rng = random.Random(8)
    inst = random_small_instance(rng, 7, n_depots=2, copies=3)
    table = build_route_table(inst)
    res = solve_exact(inst, ExactLimits(time_limit=1e-6, gap=0), table=table)
    assert not res.proven_optimal
    assert res.lower_bound <= res.objective + 1e-9
    assert check_feasibility(res.solution, inst) == []
