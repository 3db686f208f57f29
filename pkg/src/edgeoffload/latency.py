"""End-to-end delay model: uplink transmission, inter-cloudlet transfer, computation."""
from __future__ import annotations

from typing import NamedTuple

from .model import MBIT_PER_MB, DecisionPair, SystemState, TaskRequest, Topology


class DelayBreakdown(NamedTuple):
    transmission: float
    transfer: float  # one way
    computation: float

    @property
    def total(self) -> float:
        return self.transmission + 2 * self.transfer + self.computation


def transmission_delay(req: TaskRequest, ap: int, u_after: int, bandwidth: float) -> float:
    """Uplink time when AP bandwidth is split equally among ``u_after`` users.

    ``ap`` is accepted for symmetry with the other delay terms; the AP enters
    only through its bandwidth.
    """
    if u_after < 1:
        raise ValueError("u_after counts the user itself and must be >= 1")
    return req.data_size * MBIT_PER_MB * u_after / bandwidth


def computation_delay(req: TaskRequest, server: int, v_after: int, compute: float) -> float:
    if v_after < 1:
        raise ValueError("v_after counts the task itself and must be >= 1")
    return req.cycles * v_after / compute


def total_delay(state: SystemState, topo: Topology, req: TaskRequest,
                pair: DecisionPair) -> DelayBreakdown:
    """Delay the new user would see on ``pair``, using post-join counts."""
    i, j = pair
    lt = transmission_delay(req, i, int(state.u[i]) + 1, topo.bandwidth[i])
    lf = 0.0 if i == j else float(topo.transfer_delay[i, j])
    lc = computation_delay(req, j, int(state.v[j]) + 1, topo.compute[j])
    return DelayBreakdown(float(lt), lf, float(lc))


def meets_deadline(breakdown: DelayBreakdown, deadline: float) -> bool:
    return breakdown.total <= deadline
