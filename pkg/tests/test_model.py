import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeoffload.latency import total_delay
from edgeoffload.model import (
    CapacityError, Cloudlet, DecisionPair, SystemState, TaskRequest, Topology, UnknownUserError,
    apply_join, apply_leave, feasible_pairs,
)

from factories import make_request, default_topology, random_state, record_for


def brute_force_pairs(state, topo, req):
    out = []
    for i in range(topo.size):
        c = topo.cloudlets[i]
        dist = ((req.position[0] - c.position[0]) ** 2 + (req.position[1] - c.position[1]) ** 2) ** 0.5
        for j in range(topo.size):
            if dist <= c.coverage_radius and state.u[i] + 1 <= c.ap_capacity \
                    and req.data_size <= state.remaining_memory[j]:
                out.append((i, j))
    return out


def test_cloudlet_rejects_bad_fields():
    with pytest.raises(ValueError):
        Cloudlet(0, (0, 0), 50, 0, 100, 1e9, 100)
    with pytest.raises(ValueError):
        Cloudlet(0, (0, 0), 50, 1, 0, 1e9, 100)
    with pytest.raises(ValueError):
        Cloudlet(0, (0, 0), 50, 1, 100, 1e9, 100, alpha=-1)


def test_topology_rejects_asymmetric_transfer():
    cl = [Cloudlet(k, (0, 0), 50, 1, 100, 1e9, 100) for k in range(2)]
    with pytest.raises(ValueError):
        Topology(cl, [[0, 0.1], [0.2, 0]])
    with pytest.raises(ValueError):
        Topology(cl, [[0.1, 0.1], [0.1, 0]])


def test_coverage_is_inclusive_at_radius():
    c = Cloudlet(0, (0.0, 0.0), 100.0, 1, 100, 1e9, 100)
    assert c.covers((100.0, 0.0))
    assert not c.covers((100.0, 0.01))


def test_request_validation():
    with pytest.raises(ValueError):
        TaskRequest(0, 0.0, (0, 0), 1.0, 1.0, 0.0)


def grid_topology(radius=75.0):
    cl = [Cloudlet(k, ((k % 4 + 0.5) * 125.0, (k // 4 + 0.5) * 250.0), radius, 20, 100.0, 8e9,
                   8000.0) for k in range(8)]
    lf = np.full((8, 8), 0.2)
    np.fill_diagonal(lf, 0.0)
    return Topology(cl, lf)


def test_single_covering_cloudlet_pairs_with_every_server():
    topo = grid_topology()
    req = TaskRequest(1, 0.0, topo.cloudlets[3].position, 8e9, 10.0, 500.0)
    assert feasible_pairs(SystemState(topo), topo, req) == [(3, j) for j in range(8)]


def test_full_aps_leave_no_pairs():
    topo = default_topology()
    state = SystemState(topo)
    state.u[:] = topo.ap_capacity
    req = TaskRequest(1, 0.0, topo.cloudlets[0].position, 8e9, 10.0, 500.0)
    assert feasible_pairs(state, topo, req) == []


def test_feasible_pairs_match_brute_force():
    rng = np.random.default_rng(7)
    for seed in range(20):
        topo = default_topology(seed)
        state = random_state(topo, rng, int(rng.integers(0, 120)))
        # squeeze memory so the memory filter is exercised too
        state.remaining_memory[:] = rng.uniform(0, 80, topo.size)
        for uid in range(20):
            req = make_request(uid, rng)
            got = feasible_pairs(state, topo, req)
            assert got == brute_force_pairs(state, topo, req)
            assert got == sorted(got)


def test_join_updates_counters():
    topo = default_topology()
    state = SystemState(topo)
    req = TaskRequest(1, 0.0, topo.cloudlets[2].position, 8e10, 10.0, 1e4)
    pair = DecisionPair(2, 5)
    apply_join(state, req, pair, record_for(req, pair, total_delay(state, topo, req, pair)))
    expected_u = np.zeros(8, dtype=int)
    expected_u[2] = 1
    expected_v = np.zeros(8, dtype=int)
    expected_v[5] = 1
    assert state.u.tolist() == expected_u.tolist()
    assert state.v.tolist() == expected_v.tolist()
    assert state.x[2, 5] == 1 and state.x.sum() == 1
    assert state.remaining_memory[5] == topo.memory_capacity[5] - 10.0
    assert state.violations() == []


def test_join_then_leave_restores_empty_state():
    topo = default_topology()
    state = SystemState(topo)
    req = TaskRequest(1, 0.0, topo.cloudlets[2].position, 8e10, 10.0, 1e4)
    pair = DecisionPair(2, 5)
    apply_join(state, req, pair, record_for(req, pair, total_delay(state, topo, req, pair)))
    apply_leave(state, 1)
    fresh = SystemState(topo)
    for name in ("u", "v", "x", "remaining_memory", "ap_load", "server_load"):
        assert np.array_equal(getattr(state, name), getattr(fresh, name)), name
    assert state.roster == {}


def test_leave_twice_raises():
    topo = default_topology()
    state = SystemState(topo)
    req = TaskRequest(1, 0.0, topo.cloudlets[0].position, 8e10, 10.0, 1e4)
    pair = DecisionPair(0, 0)
    apply_join(state, req, pair, record_for(req, pair, total_delay(state, topo, req, pair)))
    apply_leave(state, 1)
    with pytest.raises(UnknownUserError):
        apply_leave(state, 1)


def test_join_rejects_capacity_violation():
    topo = default_topology()
    state = SystemState(topo)
    state.u[0] = topo.ap_capacity[0]
    req = TaskRequest(1, 0.0, topo.cloudlets[0].position, 8e10, 10.0, 1e4)
    with pytest.raises(CapacityError):
        apply_join(state, req, DecisionPair(0, 0),
                   record_for(req, DecisionPair(0, 0), total_delay(state, topo, req, (0, 0))))
    state = SystemState(topo)
    state.remaining_memory[1] = 5.0
    with pytest.raises(CapacityError):
        apply_join(state, req, DecisionPair(0, 1),
                   record_for(req, DecisionPair(0, 1), total_delay(state, topo, req, (0, 1))))


def test_hundred_random_joins_match_recount():
    topo = default_topology(3)
    state = random_state(topo, np.random.default_rng(1), 100)
    assert len(state) == 100
    assert state.violations() == []
    assert state.u.sum() == state.v.sum() == 100


def test_interleaved_joins_and_leaves_keep_invariants():
    rng = np.random.default_rng(11)
    topo = default_topology(5)
    state = SystemState(topo)
    uid = 0
    for _ in range(1000):
        if state.roster and rng.random() < 0.45:
            victim = list(state.roster)[int(rng.integers(len(state.roster)))]
            apply_leave(state, victim)
        else:
            req = make_request(uid, rng)
            pairs = feasible_pairs(state, topo, req)
            if pairs:
                pair = pairs[int(rng.integers(len(pairs)))]
                apply_join(state, req, pair, record_for(req, pair, total_delay(state, topo, req, pair)))
            uid += 1
        assert state.violations() == []
        assert np.all(state.u <= topo.ap_capacity)
        assert np.all(state.remaining_memory >= 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 60))
def test_join_leave_is_identity(seed, n):
    rng = np.random.default_rng(seed)
    topo = default_topology(seed % 7)
    state = random_state(topo, rng, n)
    before = state.copy()
    req = make_request(1, rng)
    pairs = feasible_pairs(state, topo, req)
    if not pairs:
        return
    pair = pairs[0]
    apply_join(state, req, pair, record_for(req, pair, total_delay(state, topo, req, pair)))
    apply_leave(state, 1)
    assert np.array_equal(state.u, before.u)
    assert np.array_equal(state.v, before.v)
    assert np.array_equal(state.x, before.x)
    assert np.allclose(state.remaining_memory, before.remaining_memory, rtol=0, atol=1e-9)
    assert state.roster.keys() == before.roster.keys()
    assert feasible_pairs(state, topo, req) == pairs
