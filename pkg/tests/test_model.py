import json
import math

import numpy as np
import pytest

from conftest import make_instance
from mmpdp.io import instance_from_dict, instance_to_dict, load_instance, load_solution, save_instance, save_solution
from mmpdp.model import (
    FREIGHT,
    PASSENGER,
    InstanceError,
    ModelParams,
    Node,
    NodeKind,
    Request,
    big_h,
    build_instance,
    capacity_cost_params,
    ceil_div,
    distance_factor,
    fleet_factor,
    sub_instance,
)
from mmpdp.evaluate import check_feasibility, make_platoon, objective
from mmpdp.model import Solution


def test_distance_factor_values():
    assert distance_factor(1) == 1.0
    assert distance_factor(2) == pytest.approx(0.975, abs=1e-12)
    assert distance_factor(10) == pytest.approx(0.955, abs=1e-12)
    for p in range(1, 10):
        assert distance_factor(p + 1) < distance_factor(p)


def test_fleet_factor_values():
    assert fleet_factor(1, 0.6) == 1.0
    assert fleet_factor(2, 0.6) == pytest.approx(0.7, abs=1e-12)
    # eta = 0: no train discount, eta = 1: the whole train costs one module
    assert fleet_factor(5, 0.0) == pytest.approx(1.0)
    assert 5 * fleet_factor(5, 1.0) == pytest.approx(1.0)


def test_factor_domain_errors():
    with pytest.raises(ValueError):
        distance_factor(0)
    with pytest.raises(ValueError):
        fleet_factor(2, 1.5)


def test_capacity_cost_model():
    a1, a2 = capacity_cost_params(15)
    assert a1 == pytest.approx(0.003599 * 15 + 0.04162)
    assert a2 == pytest.approx(0.1753 * 15 + 16.8)
    lo, hi = capacity_cost_params(15), capacity_cost_params(45)
    assert hi[0] > lo[0] and hi[1] > lo[1]
    with pytest.raises(ValueError):
        capacity_cost_params(0)


def test_default_params():
    p = ModelParams()
    assert p.alpha1 == 0.096 and p.alpha3 == 6.9 and p.eta == 0.6
    assert p.alpha2_eff == pytest.approx(19.37 * 16)
    assert p.z_max == 10 and p.z_per_type == (10, 10) and p.capacity_per_type == (15, 15)
    assert p.planning_hours == 16.0


def test_params_roundtrip_and_unknown_keys():
    p = ModelParams(eta=0.4, range_limit=120.0)
    assert ModelParams.from_dict(json.loads(json.dumps(p.to_dict()))) == p
    with pytest.raises(InstanceError):
        ModelParams.from_dict({"alpha9": 1.0})
    with pytest.raises(InstanceError):
        ModelParams(eta=-0.1)


def test_with_capacity_rescales_costs():
    p = ModelParams().with_capacity(45)
    a1, a2 = capacity_cost_params(45)
    assert p.capacity_per_type == (45, 45)
    assert p.alpha1 == pytest.approx(a1)
    assert p.alpha2_eff == pytest.approx(a2 * 16)


def test_travel_time_includes_service_of_origin_node():
    # 3 km at 30 km/h is 6 min, plus 2 min of service at the pickup
    inst = make_instance([(PASSENGER, 4, (0.0, 0.0), (3.0, 0.0), (400, 500), (400, 600), 2.0, 1.0)])
    pu, do = inst.requests[0].pickup_node, inst.requests[0].dropoff_node
    assert inst.travel_time[pu, do] == pytest.approx(8.0)
    assert inst.travel_time[do, pu] == pytest.approx(7.0)
    assert inst.distance[pu, do] == pytest.approx(3.0)


def test_node_layout_and_copies():
    inst = make_instance(
        [(PASSENGER, 1, (1, 1), (2, 2), (400, 500), (400, 600)), (FREIGHT, 2, (0, 0), (2, 1), (360, 1320), (500, 600))],
        depots=[(0, 0), (3, 3)],
        copies=2,
    )
    assert inst.n_origins == 4 and inst.n_r == 2 and inst.n_d == 2
    assert inst.n_nodes == 2 * 4 + 2 * 2
    assert [inst.nodes[i].kind for i in range(4)] == [NodeKind.DepotOrigin] * 4
    assert inst.nodes[4].kind is NodeKind.PassengerPickup
    assert inst.nodes[5].kind is NodeKind.FreightPickup
    assert inst.nodes[6].kind is NodeKind.PassengerDropoff
    assert inst.destination_of(3) == 11 and inst.nodes[11].kind is NodeKind.DepotDestination
    assert inst.depot_groups == ((0, 1), (2, 3))
    assert inst.nodes[6].demand == -1


def test_build_instance_rejects_bad_layouts():
    origin = Node(0, NodeKind.DepotOrigin, (0, 0), 0, 0.0, 360, 1320)
    pu = Node(1, NodeKind.PassengerPickup, (1, 0), 3, 0.0, 400, 500)
    do = Node(2, NodeKind.PassengerDropoff, (2, 0), -2, 0.0, 400, 600)  # demand mismatch
    dest = Node(3, NodeKind.DepotDestination, (0, 0), 0, 0.0, 360, 1320)
    with pytest.raises(InstanceError):
        build_instance([origin, pu, do, dest], [Request(0, PASSENGER, 1, 2, 3)], ModelParams(l_max=1))
    do_ok = Node(2, NodeKind.PassengerDropoff, (2, 0), -3, 0.0, 400, 600)
    far_dest = Node(3, NodeKind.DepotDestination, (5, 5), 0, 0.0, 360, 1320)
    with pytest.raises(InstanceError):
        build_instance([origin, pu, do_ok, far_dest], [Request(0, PASSENGER, 1, 2, 3)], ModelParams(l_max=1))
    neg = Node(1, NodeKind.PassengerPickup, (-1, 0), 3, 0.0, 400, 500)
    with pytest.raises(InstanceError):
        build_instance([origin, neg, do_ok, dest], [Request(0, PASSENGER, 1, 2, 3)], ModelParams(l_max=1))
    inst = build_instance([origin, pu, do_ok, dest], [Request(0, PASSENGER, 1, 2, 3)], ModelParams(l_max=1))
    assert inst.n_r == 1


def test_big_h_bounds_time_gaps():
    inst = make_instance([(PASSENGER, 1, (1, 1), (2, 2), (400, 500), (400, 600))])
    H = big_h(inst)
    f = inst.fast
    for i in range(inst.n_nodes):
        for j in range(inst.n_nodes):
            assert f.b[i] + f.tt[i][j] - f.a[j] <= H + 1e-9


def test_ceil_div():
    assert ceil_div(15, 15) == 1
    assert ceil_div(16, 15) == 2
    assert ceil_div(0, 15) == 0


def test_sub_instance_keeps_geometry():
    inst = make_instance(
        [
            (PASSENGER, 1, (1, 1), (2, 2), (400, 500), (400, 600)),
            (FREIGHT, 2, (0, 0), (2, 1), (360, 1320), (500, 600)),
            (PASSENGER, 3, (1, 2), (0.5, 2), (700, 720), (720, 760)),
        ]
    )
    sub = sub_instance(inst, [2, 0])
    assert sub.n_r == 2
    assert sub.metadata["parent_requests"] == [2, 0]
    assert sub.requests[0].quantity == 3
    p_sub, p_par = sub.requests[0].pickup_node, inst.requests[2].pickup_node
    d_sub, d_par = sub.requests[1].dropoff_node, inst.requests[0].dropoff_node
    assert sub.distance[p_sub, d_sub] == pytest.approx(inst.distance[p_par, d_par])


def test_explicit_distance_matrix_roundtrip(tmp_path):
    inst = make_instance([(PASSENGER, 1, (1, 1), (2, 2), (400, 500), (400, 600))], copies=1)
    dist = inst.distance.copy() * 1.5
    inst2 = build_instance(list(inst.nodes), list(inst.requests), inst.params, distance=dist,
                           metadata={"explicit_distance": True})
    loaded = instance_from_dict(json.loads(json.dumps(instance_to_dict(inst2))))
    assert np.allclose(loaded.distance, dist)
    sub = sub_instance(inst2, [0])
    assert np.allclose(sub.distance, dist)


def test_instance_and_solution_files(tmp_path):
    inst = make_instance(
        [(PASSENGER, 5, (1, 1), (2, 2), (400, 500), (400, 600), 2.0, 1.0),
         (FREIGHT, 7, (0, 0), (2, 1), (360, 1320), (500, 600), 3.0, 1.0)],
        copies=2,
    )
    path = save_instance(inst, tmp_path / "i.json")
    again = load_instance(path)
    assert instance_to_dict(again) == instance_to_dict(inst)
    f = inst.fast
    pl = make_platoon(inst, 0, (1, 1), [f.pickup[1], f.pickup[0], f.dropoff[0], f.dropoff[1]])
    sol = Solution([pl], set())
    spath = save_solution(sol, inst, tmp_path / "s.json")
    data = json.loads(spath.read_text())
    assert set(data["cost"]) == {"distance", "fleet", "duration", "unserved", "total"}
    loaded = load_solution(spath, again)
    assert check_feasibility(loaded, again) == []
    assert objective(loaded, again) == pytest.approx(objective(sol, inst))
