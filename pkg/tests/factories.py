"""Builders shared by the test modules."""
import numpy as np

from edgeoffload.latency import total_delay
from edgeoffload.model import (
    ActiveUserRecord, Cloudlet, DecisionPair, SystemState, TaskRequest, Topology, apply_join,
    feasible_pairs,
)
from edgeoffload.simulator import Scenario, generate_topology

PSI = 1 / 3600


def default_topology(seed=0):
    return generate_topology(Scenario(seed=seed), np.random.default_rng(seed))


def two_cloudlets(bw=(100.0, 100.0), cpu=(8e9, 8e9), lf=0.3, cap=(10, 10), mem=8000.0,
                  radius=(1000.0, 1000.0), rate=50 / 3600):
    cl = [
        Cloudlet(k, (0.0, 0.0), radius[k], cap[k], bw[k], cpu[k], mem, rate, rate)
        for k in range(2)
    ]
    return Topology(cl, [[0.0, lf], [lf, 0.0]], np.full((2, 2), rate))


def make_request(uid, rng, width=500.0, height=500.0, deadline=None, t=0.0, psi=PSI):
    d = float(rng.uniform(5, 60))
    return TaskRequest(uid, t, (float(rng.uniform(0, width)), float(rng.uniform(0, height))),
                       d * 8e9, d, deadline if deadline is not None else 1e6, psi)


def record_for(req, pair, bd, payment=0.0):
    return ActiveUserRecord(req.user_id, pair, req.arrival_time, bd.transmission, bd.transfer,
                            bd.computation, payment, req.data_size, req.cycles)


def random_state(topo, rng, n_users, first_id=10_000):
    """Admit ``n_users`` random requests on uniformly random feasible pairs."""
    state = SystemState(topo)
    uid = first_id
    tries = 0
    while len(state) < n_users and tries < 50 * n_users + 50:
        tries += 1
        req = make_request(uid, rng)
        pairs = feasible_pairs(state, topo, req)
        if not pairs:
            continue
        pair = pairs[int(rng.integers(len(pairs)))]
        apply_join(state, req, pair, record_for(req, pair, total_delay(state, topo, req, pair)))
        uid += 1
    return state


def covered_request(topo, state, rng, uid=1, deadline=None):
    """A request with at least one feasible pair."""
    while True:
        req = make_request(uid, rng, deadline=deadline)
        if feasible_pairs(state, topo, req):
            return req
