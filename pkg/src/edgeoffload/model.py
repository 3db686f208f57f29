"""Domain types for the cloudlet system and the join/leave state transitions.

Units used throughout the package: seconds, megabytes (data sizes and
memory), megabits per second (bandwidth), CPU cycles and cycles per second,
money per second (rates).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MBIT_PER_MB = 8.0


class CapacityError(ValueError):
    """Raised when a join would break an AP or memory capacity."""


class UnknownUserError(KeyError):
    """Raised when a departure names a user that is not in the roster."""


@dataclass(frozen=True)
class Cloudlet:
    id: int
    position: tuple[float, float]
    coverage_radius: float
    ap_capacity: int
    bandwidth: float  # Mbps
    compute: float  # cycles/s
    memory_capacity: float  # MB
    alpha: float = 0.0  # money/s of AP time
    gamma: float = 0.0  # money/s of server time

    def __post_init__(self):
        if self.ap_capacity < 1:
            raise ValueError(f"cloudlet {self.id}: ap_capacity must be >= 1")
        for name in ("bandwidth", "compute", "memory_capacity", "coverage_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"cloudlet {self.id}: {name} must be > 0")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError(f"cloudlet {self.id}: rates must be >= 0")

    def covers(self, position) -> bool:
        dx = position[0] - self.position[0]
        dy = position[1] - self.position[1]
        return math.hypot(dx, dy) <= self.coverage_radius


class Topology:
    """Cloudlets plus the inter-cloudlet transfer delay and transfer rate matrices."""

    def __init__(self, cloudlets, transfer_delay, beta=None):
        self.cloudlets = list(cloudlets)
        m = len(self.cloudlets)
        if m == 0:
            raise ValueError("topology needs at least one cloudlet")
        for idx, c in enumerate(self.cloudlets):
            if c.id != idx:
                raise ValueError(f"cloudlet at position {idx} has id {c.id}")
        lf = np.array(transfer_delay, dtype=float)
        if lf.shape != (m, m):
            raise ValueError(f"transfer_delay must be {m}x{m}, got {lf.shape}")
        if np.any(np.diag(lf) != 0):
            raise ValueError("transfer_delay diagonal must be zero")
        if np.any(lf < 0) or not np.array_equal(lf, lf.T):
            raise ValueError("transfer_delay must be symmetric and non-negative")
        beta = np.zeros((m, m)) if beta is None else np.array(beta, dtype=float)
        if beta.shape != (m, m) or np.any(beta < 0):
            raise ValueError("beta must be a non-negative MxM matrix")
        self.transfer_delay = lf
        self.beta = beta
        # flat per-cloudlet arrays used by the scoring kernels
        self.bandwidth = np.array([c.bandwidth for c in self.cloudlets], dtype=float)
        self.compute = np.array([c.compute for c in self.cloudlets], dtype=float)
        self.ap_capacity = np.array([c.ap_capacity for c in self.cloudlets], dtype=np.int64)
        self.memory_capacity = np.array([c.memory_capacity for c in self.cloudlets], dtype=float)
        self.alpha = np.array([c.alpha for c in self.cloudlets], dtype=float)
        self.gamma = np.array([c.gamma for c in self.cloudlets], dtype=float)

    @property
    def size(self) -> int:
        return len(self.cloudlets)

    def coverage(self, position) -> np.ndarray:
        """0/1 availability of every AP for a user standing at ``position``."""
        return np.array([c.covers(position) for c in self.cloudlets], dtype=np.uint8)

    def to_dict(self) -> dict:
        return {
            "cloudlets": [
                {
                    "id": c.id,
                    "position": list(c.position),
                    "coverage_radius": c.coverage_radius,
                    "ap_capacity": c.ap_capacity,
                    "bandwidth": c.bandwidth,
                    "compute": c.compute,
                    "memory_capacity": c.memory_capacity,
                    "alpha": c.alpha,
                    "gamma": c.gamma,
                }
                for c in self.cloudlets
            ],
            "transfer_delay": self.transfer_delay.tolist(),
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        cloudlets = [
            Cloudlet(
                id=int(c["id"]),
                position=(float(c["position"][0]), float(c["position"][1])),
                coverage_radius=float(c["coverage_radius"]),
                ap_capacity=int(c["ap_capacity"]),
                bandwidth=float(c["bandwidth"]),
                compute=float(c["compute"]),
                memory_capacity=float(c["memory_capacity"]),
                alpha=float(c.get("alpha", 0.0)),
                gamma=float(c.get("gamma", 0.0)),
            )
            for c in data["cloudlets"]
        ]
        return cls(cloudlets, data["transfer_delay"], data.get("beta"))


@dataclass(frozen=True)
class TaskRequest:
    user_id: int
    arrival_time: float
    position: tuple[float, float]
    cycles: float
    data_size: float  # MB
    deadline: float  # seconds, as declared
    psi: float = 0.0  # money/s

    def __post_init__(self):
        if not (self.cycles > 0 and self.data_size > 0 and self.deadline > 0):
            raise ValueError(f"user {self.user_id}: cycles, data_size and deadline must be > 0")
        if self.psi < 0:
            raise ValueError(f"user {self.user_id}: psi must be >= 0")

    @property
    def data_mbit(self) -> float:
        return self.data_size * MBIT_PER_MB


class DecisionPair(NamedTuple):
    ap: int
    server: int


@dataclass
class ActiveUserRecord:
    user_id: int
    pair: DecisionPair
    start_time: float
    transmission: float
    transfer: float
    computation: float
    payment: float
    data_size: float  # MB, reserved on the server for the whole residency
    cycles: float
    end_time: float = field(default=None)

    def __post_init__(self):
        if min(self.transmission, self.transfer, self.computation) < 0:
            raise ValueError("delay components must be >= 0")
        if self.end_time is None:
            self.end_time = (
                self.start_time + self.transmission + 2 * self.transfer + self.computation
            )


class SystemState:
    """Live occupancy counters and the roster of admitted, unfinished users.

    ``ap_load`` and ``server_load`` cache, per AP and per server, the summed
    data volume (Mbit) and summed cycles of resident users; they feed the
    closed-form delay-increase terms.
    """

    def __init__(self, topo: Topology, time: float = 0.0):
        m = topo.size
        self.topo = topo
        self.time = time
        self.u = np.zeros(m, dtype=np.int64)
        self.v = np.zeros(m, dtype=np.int64)
        self.x = np.zeros((m, m), dtype=np.int64)
        self.remaining_memory = topo.memory_capacity.copy()
        self.ap_load = np.zeros(m)
        self.server_load = np.zeros(m)
        self.roster: dict[int, ActiveUserRecord] = {}

    def copy(self) -> "SystemState":
        new = SystemState.__new__(SystemState)
        new.topo = self.topo
        new.time = self.time
        new.u = self.u.copy()
        new.v = self.v.copy()
        new.x = self.x.copy()
        new.remaining_memory = self.remaining_memory.copy()
        new.ap_load = self.ap_load.copy()
        new.server_load = self.server_load.copy()
        new.roster = dict(self.roster)
        return new

    def __len__(self):
        return len(self.roster)

    def users_on_ap(self, i):
        return [r for r in self.roster.values() if r.pair.ap == i]

    def users_on_server(self, j):
        return [r for r in self.roster.values() if r.pair.server == j]

    def violations(self, rtol=1e-9) -> list[str]:
        """Check every counter against a recount from the roster; returns problems found."""
        topo = self.topo
        m = topo.size
        u = np.zeros(m, dtype=np.int64)
        v = np.zeros(m, dtype=np.int64)
        x = np.zeros((m, m), dtype=np.int64)
        used = np.zeros(m)
        for r in self.roster.values():
            i, j = r.pair
            u[i] += 1
            v[j] += 1
            x[i, j] += 1
            used[j] += r.data_size
        out = []
        if self.u.sum() != self.v.sum():
            out.append("flow conservation: sum(u) != sum(v)")
        if not np.array_equal(u, self.u):
            out.append("u does not match roster")
        if not np.array_equal(v, self.v):
            out.append("v does not match roster")
        if not np.array_equal(x, self.x):
            out.append("x does not match roster")
        if np.any(self.u > topo.ap_capacity):
            out.append("AP capacity exceeded")
        expected_mem = topo.memory_capacity - used
        if not np.allclose(self.remaining_memory, expected_mem, rtol=rtol, atol=1e-9):
            out.append("remaining memory does not match roster")
        if np.any(self.remaining_memory < -1e-9):
            out.append("memory capacity exceeded")
        return out


def feasible_pairs(state: SystemState, topo: Topology, req: TaskRequest) -> list[DecisionPair]:
    """Pairs (i, j) with AP i covering the user and spare, and server j holding D_k.

    The deadline is deliberately not checked here.
    """
    cov = topo.coverage(req.position)
    aps = [i for i in range(topo.size) if cov[i] and state.u[i] + 1 <= topo.ap_capacity[i]]
    servers = [j for j in range(topo.size) if req.data_size <= state.remaining_memory[j]]
    return [DecisionPair(i, j) for i in aps for j in servers]


def apply_join(state: SystemState, req: TaskRequest, pair: DecisionPair,
               record: ActiveUserRecord) -> SystemState:
    """Admit ``record`` on ``pair``; mutates and returns ``state``."""
    i, j = pair
    topo = state.topo
    if record.user_id in state.roster:
        raise ValueError(f"user {record.user_id} already admitted")
    if state.u[i] + 1 > topo.ap_capacity[i]:
        raise CapacityError(f"AP {i} is full")
    if req.data_size > state.remaining_memory[j]:
        raise CapacityError(f"server {j} lacks memory for {req.data_size} MB")
    state.u[i] += 1
    state.v[j] += 1
    state.x[i, j] += 1
    state.remaining_memory[j] -= req.data_size
    state.ap_load[i] += req.data_mbit
    state.server_load[j] += req.cycles
    state.roster[record.user_id] = record
    return state


def apply_leave(state: SystemState, user_id: int) -> SystemState:
    """Release the resources of ``user_id``; mutates and returns ``state``."""
    try:
        rec = state.roster.pop(user_id)
    except KeyError:
        raise UnknownUserError(user_id) from None
    i, j = rec.pair
    state.u[i] -= 1
    state.v[j] -= 1
    state.x[i, j] -= 1
    state.remaining_memory[j] += rec.data_size
    # reset the float accumulators once a resource is idle so no rounding residue survives
    if state.u[i] == 0:
        state.ap_load[i] = 0.0
    else:
        state.ap_load[i] -= rec.data_size * MBIT_PER_MB
    if state.v[j] == 0:
        state.server_load[j] = 0.0
        state.remaining_memory[j] = state.topo.memory_capacity[j]
    else:
        state.server_load[j] -= rec.cycles
    return state
