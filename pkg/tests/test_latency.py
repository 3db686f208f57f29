import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeoffload.latency import (
    DelayBreakdown, computation_delay, meets_deadline, total_delay, transmission_delay,
)
from edgeoffload.model import DecisionPair, SystemState, TaskRequest
from edgeoffload.simulator import task_cycles

from factories import make_request, default_topology, random_state, two_cloudlets


def req(data_mb=12.5, cycles=8e9):
    return TaskRequest(1, 0.0, (0.0, 0.0), cycles, data_mb, 100.0)


def test_transmission_delay_examples():
    assert transmission_delay(req(12.5), 0, 1, 100.0) == 1.0
    assert transmission_delay(req(12.5), 0, 4, 100.0) == 4.0


def test_transmission_delay_matches_reference():
    rng = np.random.default_rng(0)
    for bw in np.maximum(rng.normal(100, 25, 50), 1.0):
        assert transmission_delay(req(60.0), 0, 10, bw) == pytest.approx(60 * 8 * 10 / bw, rel=1e-15)


def test_computation_delay_examples():
    assert computation_delay(req(cycles=8e9), 0, 1, 8e9) == 1.0
    assert computation_delay(req(cycles=8e9), 0, 3, 8e9) == 3.0


def test_cycles_from_data_size():
    assert task_cycles(5.0, 1000) == 4e10


def test_counts_must_include_the_user():
    with pytest.raises(ValueError):
        transmission_delay(req(), 0, 0, 100.0)
    with pytest.raises(ValueError):
        computation_delay(req(), 0, 0, 8e9)


def test_same_cloudlet_has_no_transfer_term():
    topo = two_cloudlets()
    bd = total_delay(SystemState(topo), topo, req(12.5, 16e9), DecisionPair(1, 1))
    assert bd.transfer == 0.0
    assert bd.total == bd.transmission + bd.computation == 3.0


def test_total_delay_arithmetic():
    topo = two_cloudlets(lf=0.3)
    bd = total_delay(SystemState(topo), topo, req(12.5, 16e9), DecisionPair(0, 1))
    assert bd == DelayBreakdown(1.0, 0.3, 2.0)
    assert bd.total == pytest.approx(3.6, abs=1e-15)


def test_total_delay_composes_components():
    rng = np.random.default_rng(4)
    for seed in range(10):
        topo = default_topology(seed)
        state = random_state(topo, rng, int(rng.integers(0, 80)))
        for uid in range(10):
            r = make_request(uid, rng)
            i, j = (int(x) for x in rng.integers(0, 8, 2))
            bd = total_delay(state, topo, r, DecisionPair(i, j))
            lt = transmission_delay(r, i, state.u[i] + 1, topo.bandwidth[i])
            lc = computation_delay(r, j, state.v[j] + 1, topo.compute[j])
            lf = topo.transfer_delay[i, j]
            assert bd.total == pytest.approx(lt + 2 * lf + lc, rel=1e-12)


def test_deadline_is_inclusive():
    bd = DelayBreakdown(1.0, 0.3, 2.0)
    assert meets_deadline(bd, bd.total)
    assert not meets_deadline(bd, math.nextafter(bd.total, 0.0))
    assert not meets_deadline(DelayBreakdown(1.0, 0.3, 2.0 + 1e-9), bd.total)


@settings(max_examples=200)
@given(
    st.floats(5, 60), st.integers(1, 50), st.floats(1, 200),
    st.floats(1e9, 1e12), st.integers(1, 50), st.floats(1e9, 1e10),
)
def test_delays_are_monotone_and_equal_share(d, u, bw, c, v, f):
    r = TaskRequest(1, 0.0, (0, 0), c, d, 1.0)
    t1, t2 = transmission_delay(r, 0, u, bw), transmission_delay(r, 0, u + 1, bw)
    assert t2 > t1
    assert transmission_delay(TaskRequest(1, 0.0, (0, 0), c, d * 1.5, 1.0), 0, u, bw) > t1
    assert t1 * bw / u == pytest.approx(d * 8, rel=1e-12)
    c1, c2 = computation_delay(r, 0, v, f), computation_delay(r, 0, v + 1, f)
    assert c2 > c1
    assert computation_delay(TaskRequest(1, 0.0, (0, 0), c * 1.5, d, 1.0), 0, v, f) > c1
    # pure: identical inputs give identical bits
    assert transmission_delay(r, 0, u, bw) == t1
