"""Seeded discrete-event simulation of users arriving, being placed, and leaving."""
from __future__ import annotations

import dataclasses
import heapq
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import mechanism as mech
from .latency import DelayBreakdown
from .model import (
    MBIT_PER_MB,
    Cloudlet,
    DecisionPair,
    SystemState,
    TaskRequest,
    Topology,
    apply_join,
    apply_leave,
    feasible_pairs,
)

log = logging.getLogger(__name__)

STRATEGIES = ("dapa", "ue", "rs")
URGENCY_CLASSES = ("urgent", "mid", "nonurgent")


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    width: float = 500.0
    height: float = 500.0
    n_cloudlets: int = 8
    grid: tuple = (4, 2)  # columns x rows
    radius_choices: tuple = (75.0, 100.0, 125.0)
    bandwidth_mean: float = 100.0  # Mbps
    bandwidth_std: float = 25.0
    bandwidth_floor: float = 1.0
    ap_capacity_range: tuple = (10, 30)
    compute_ghz_range: tuple = (5.0, 10.0)
    transfer_delay_range: tuple = (0.1, 0.5)  # seconds
    memory_mb: float = 8000.0
    arrivals_per_hour: float = 1200.0
    duration: float = 3 * 3600.0
    urgency_mix: tuple = (1 / 3, 1 / 3, 1 / 3)
    slacks: tuple = (100.0, 200.0, 300.0)
    data_size_mb: tuple = (5.0, 60.0)
    cycles_per_bit: float = 1000.0
    psi_per_hour: float = 1.0
    alpha_per_hour: float = 50.0
    gamma_per_hour: float = 50.0
    beta_per_hour: float = 50.0
    seed: int = 0
    strategy: str = "dapa"
    # resolved cloudlet draw; None means draw it from the seed
    topology: Optional[dict] = None

    @property
    def arrival_rate(self) -> float:
        return self.arrivals_per_hour / 3600.0

    def validate(self) -> "Scenario":
        def need(cond, msg):
            if not cond:
                raise ScenarioError(msg)

        need(self.arrivals_per_hour > 0, "arrival rate must be > 0")
        need(self.duration > 0, "duration must be > 0")
        need(self.width > 0 and self.height > 0, "area must be positive")
        need(len(self.urgency_mix) == len(self.slacks) == 3,
             "urgency_mix and slacks need one entry per urgency class")
        need(all(p >= 0 for p in self.urgency_mix), "urgency probabilities must be >= 0")
        need(math.isclose(sum(self.urgency_mix), 1.0, abs_tol=1e-9),
             "urgency probabilities must sum to 1")
        need(all(s >= 0 for s in self.slacks), "slacks must be >= 0")
        for name in ("ap_capacity_range", "compute_ghz_range", "transfer_delay_range",
                     "data_size_mb"):
            lo, hi = getattr(self, name)
            need(lo < hi, f"{name} must satisfy low < high")
        need(self.ap_capacity_range[0] >= 1, "AP capacity must be >= 1")
        need(self.compute_ghz_range[0] > 0, "compute must be > 0")
        need(self.transfer_delay_range[0] >= 0, "transfer delay must be >= 0")
        need(self.data_size_mb[0] > 0, "data size must be > 0")
        need(len(self.radius_choices) > 0 and min(self.radius_choices) > 0,
             "coverage radii must be > 0")
        need(self.bandwidth_mean > 0 and self.bandwidth_std >= 0 and self.bandwidth_floor > 0,
             "bandwidth distribution must be positive")
        need(self.memory_mb > 0, "memory must be > 0")
        need(self.cycles_per_bit > 0, "cycles_per_bit must be > 0")
        need(min(self.psi_per_hour, self.alpha_per_hour, self.gamma_per_hour,
                 self.beta_per_hour) >= 0, "monetary rates must be >= 0")
        need(len(self.grid) == 2 and self.grid[0] * self.grid[1] == self.n_cloudlets,
             "grid columns x rows must equal n_cloudlets")
        need(self.strategy in STRATEGIES, f"strategy must be one of {STRATEGIES}")
        need(isinstance(self.seed, int) and 0 <= self.seed < 2**64,
             "seed must be an unsigned 64-bit integer")
        if self.topology is not None:
            try:
                topo = Topology.from_dict(self.topology)
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioError(f"invalid topology: {exc}") from None
            need(topo.size == self.n_cloudlets, "topology size must equal n_cloudlets")
        return self

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for k, val in out.items():
            if isinstance(val, tuple):
                out[k] = list(val)
        return out


def _streams(seed: int):
    topo_ss, arrival_ss, strategy_ss = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(topo_ss), np.random.default_rng(arrival_ss),
            np.random.default_rng(strategy_ss))


def generate_topology(scenario: Scenario, rng: np.random.Generator) -> Topology:
    cols, rows = scenario.grid
    m = scenario.n_cloudlets
    cw, ch = scenario.width / cols, scenario.height / rows
    radii = rng.choice(np.asarray(scenario.radius_choices, dtype=float), size=m)
    bw = rng.normal(scenario.bandwidth_mean, scenario.bandwidth_std, size=m)
    bw = np.maximum(bw, scenario.bandwidth_floor)
    lo, hi = scenario.ap_capacity_range
    cap = rng.integers(lo, hi, size=m, endpoint=True)
    lo, hi = scenario.compute_ghz_range
    cpu = rng.uniform(lo, hi, size=m) * 1e9
    lo, hi = scenario.transfer_delay_range
    upper = np.triu(rng.uniform(lo, hi, size=(m, m)), k=1)
    lf = upper + upper.T
    cloudlets = [
        Cloudlet(
            id=k,
            position=((k % cols + 0.5) * cw, (k // cols + 0.5) * ch),
            coverage_radius=float(radii[k]),
            ap_capacity=int(cap[k]),
            bandwidth=float(bw[k]),
            compute=float(cpu[k]),
            memory_capacity=float(scenario.memory_mb),
            alpha=scenario.alpha_per_hour / 3600.0,
            gamma=scenario.gamma_per_hour / 3600.0,
        )
        for k in range(m)
    ]
    beta = np.full((m, m), scenario.beta_per_hour / 3600.0)
    return Topology(cloudlets, lf, beta)


def resolve_topology(scenario: Scenario) -> Topology:
    if scenario.topology is not None:
        return Topology.from_dict(scenario.topology)
    return generate_topology(scenario, _streams(scenario.seed)[0])


def min_latency(topo: Topology, req: TaskRequest) -> Optional[float]:
    """Best end-to-end latency the user could get alone in the system, or None if uncovered."""
    best = None
    cov = topo.coverage(req.position)
    for i in range(topo.size):
        if not cov[i]:
            continue
        lt = req.data_size * MBIT_PER_MB * 1 / topo.bandwidth[i]
        for j in range(topo.size):
            lf = 0.0 if i == j else topo.transfer_delay[i, j]
            lc = req.cycles * 1 / topo.compute[j]
            total = DelayBreakdown(lt, lf, lc).total
            if best is None or total < best:
                best = float(total)
    return best


def task_cycles(data_mb: float, cycles_per_bit: float = 1000.0) -> float:
    """CPU cycles needed to process ``data_mb`` megabytes."""
    return data_mb * MBIT_PER_MB * 1e6 * cycles_per_bit


def generate_arrivals(scenario: Scenario, rng: np.random.Generator,
                      topo: Topology) -> list[TaskRequest]:
    """Poisson arrivals over ``[0, duration)`` with synthesized task parameters.

    Deadlines are the user's stand-alone minimum latency plus the urgency
    slack; an uncovered user gets the slack alone.
    """
    times = []
    t = 0.0
    scale = 1.0 / scenario.arrival_rate
    while True:
        t += rng.exponential(scale)
        if t >= scenario.duration:
            break
        times.append(t)
    n = len(times)
    xs = rng.uniform(0.0, scenario.width, size=n)
    ys = rng.uniform(0.0, scenario.height, size=n)
    sizes = rng.uniform(*scenario.data_size_mb, size=n)
    classes = rng.choice(3, size=n, p=np.asarray(scenario.urgency_mix, dtype=float))
    psi = scenario.psi_per_hour / 3600.0
    out = []
    for k in range(n):
        d = float(sizes[k])
        cycles = task_cycles(d, scenario.cycles_per_bit)
        probe = TaskRequest(k, times[k], (float(xs[k]), float(ys[k])), cycles, d, 1.0, psi)
        t_min = min_latency(topo, probe) or 0.0
        slack = scenario.slacks[int(classes[k])]
        out.append(dataclasses.replace(probe, deadline=t_min + slack))
    return out


@dataclass
class Event:
    time: float
    kind: str  # "join" | "leave"
    user_id: int
    strategy: str
    pair: Optional[DecisionPair] = None
    breakdown: Optional[DelayBreakdown] = None
    payment: Optional[float] = None
    fallback: Optional[str] = None
    u: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    outcome: object = None


@dataclass
class EventLog:
    events: list = field(default_factory=list)

    def joins(self):
        return [e for e in self.events if e.kind == "join"]

    def __len__(self):
        return len(self.events)


@dataclass
class UserRow:
    user_id: int
    arrival_time: float
    deadline: float
    min_latency: float
    latency: float
    payment: float
    valuation: float

    @property
    def ratio(self) -> float:
        return self.latency / self.deadline

    @property
    def min_ratio(self) -> float:
        return self.min_latency / self.deadline

    @property
    def cost(self) -> float:
        return self.payment - self.valuation


@dataclass
class RunMetrics:
    duration: float
    times: list = field(default_factory=list)
    u_series: list = field(default_factory=list)
    v_series: list = field(default_factory=list)
    users: list = field(default_factory=list)
    fallbacks: Counter = field(default_factory=Counter)
    deadline_miss_with_alternative: int = 0
    resident_deadline_violations: int = 0
    invariant_violations: list = field(default_factory=list)
    oracle_checks: int = 0
    oracle_agreements: int = 0
    payment_identity_max_rel_error: float = 0.0

    @property
    def arrivals(self) -> int:
        return len(self.users) + sum(self.fallbacks.values())

    def mean_latency(self, since: float = 0.0) -> float:
        vals = [r.latency for r in self.users if r.arrival_time >= since]
        return float(np.mean(vals)) if vals else math.nan

    def mean_payment(self) -> float:
        return float(np.mean([r.payment for r in self.users])) if self.users else math.nan

    def time_avg_std(self, which: str = "u", until: Optional[float] = None) -> float:
        """Time-weighted mean over [0, until] of the spread (population std) of the counts."""
        series = self.u_series if which == "u" else self.v_series
        until = self.duration if until is None else until
        if not series or until <= 0:
            return 0.0
        acc = 0.0
        for k, snap in enumerate(series):
            start = self.times[k]
            end = self.times[k + 1] if k + 1 < len(series) else until
            start, end = min(start, until), min(end, until)
            if end > start:
                acc += float(np.std(snap)) * (end - start)
        return acc / until


def run(scenario: Scenario, strategy: Optional[str] = None, debug: bool = False,
        oracle_check: bool = False,
        on_decision: Optional[Callable[[SystemState, TaskRequest], None]] = None):
    """Simulate one scenario; returns ``(EventLog, RunMetrics)``.

    ``on_decision`` is called with the live state right before every
    admission decision.
    """
    strategy = strategy or scenario.strategy
    scenario.validate()
    if strategy not in STRATEGIES:
        raise ScenarioError(f"strategy must be one of {STRATEGIES}")
    topo_rng, arrival_rng, strategy_rng = _streams(scenario.seed)
    topo = (Topology.from_dict(scenario.topology) if scenario.topology is not None
            else generate_topology(scenario, topo_rng))
    rates = mech.Rates.from_topology(topo)
    arrivals = generate_arrivals(scenario, arrival_rng, topo)

    state = SystemState(topo)
    elog = EventLog()
    metrics = RunMetrics(duration=scenario.duration)
    departures: list[tuple[float, int]] = []
    deadlines: dict[int, float] = {}
    flagged: set[int] = set()

    def record(ev: Event):
        ev.u = state.u.copy()
        ev.v = state.v.copy()
        elog.events.append(ev)
        metrics.times.append(ev.time)
        metrics.u_series.append(ev.u)
        metrics.v_series.append(ev.v)
        if debug:
            for problem in state.violations():
                metrics.invariant_violations.append((ev.time, ev.kind, ev.user_id, problem))

    def leave(et, uid):
        rec = state.roster[uid]
        state.time = et
        apply_leave(state, uid)
        record(Event(et, "leave", uid, strategy, pair=rec.pair))

    for req in arrivals:
        while departures and departures[0][0] <= req.arrival_time:
            leave(*heapq.heappop(departures))
        state.time = req.arrival_time
        if on_decision is not None:
            on_decision(state, req)

        if strategy == "dapa":
            out = mech.dapa_decide(state, topo, rates, req)
        elif strategy == "ue":
            out = mech.ue_decide(state, topo, req)
        else:
            out = mech.rs_decide(state, topo, req, strategy_rng)

        if oracle_check and strategy == "dapa" and out.pair is not None:
            metrics.oracle_checks += 1
            if mech.oracle_best_pair(state, topo, rates, req) == out.pair:
                metrics.oracle_agreements += 1

        if out.admitted:
            if strategy == "dapa":
                diff = out.system_valuation_after - out.system_valuation_before
                scale = max(abs(diff), abs(out.payment))
                err = abs(out.payment - diff) / scale if scale else 0.0
                metrics.payment_identity_max_rel_error = max(
                    metrics.payment_identity_max_rel_error, err)
            rec = mech.admission_record(req, out)
            apply_join(state, req, out.pair, rec)
            heapq.heappush(departures, (rec.end_time, req.user_id))
            deadlines[req.user_id] = req.deadline
            _flag_resident_violations(state, topo, out.pair, deadlines, flagged, req.user_id)
            t_min = min_latency(topo, req)
            metrics.users.append(UserRow(req.user_id, req.arrival_time, req.deadline, t_min,
                                         out.breakdown.total, out.payment, out.user_valuation))
            record(Event(req.arrival_time, "join", req.user_id, strategy, out.pair,
                         out.breakdown, out.payment, outcome=out))
        else:
            metrics.fallbacks[out.reason.value] += 1
            if out.alternative_existed:
                metrics.deadline_miss_with_alternative += 1
            record(Event(req.arrival_time, "join", req.user_id, strategy,
                         fallback=out.reason.value, outcome=out))

    while departures:
        leave(*heapq.heappop(departures))
    metrics.resident_deadline_violations = len(flagged)
    return elog, metrics


def _flag_resident_violations(state, topo, pair, deadlines, flagged, newcomer):
    """Mark residents sharing the newcomer's AP or server whose live latency now exceeds T_k."""
    i_new, j_new = pair
    for uid, rec in state.roster.items():
        if uid == newcomer or uid in flagged:
            continue
        i, j = rec.pair
        if i != i_new and j != j_new:
            continue
        live = DelayBreakdown(
            rec.data_size * MBIT_PER_MB * state.u[i] / topo.bandwidth[i],
            rec.transfer,
            rec.cycles * state.v[j] / topo.compute[j],
        ).total
        if live > deadlines[uid]:
            flagged.add(uid)


def arrival_stream(scenario: Scenario) -> list[TaskRequest]:
    """The request sequence a run of ``scenario`` sees, for any strategy."""
    topo_rng, arrival_rng, _ = _streams(scenario.seed)
    topo = (Topology.from_dict(scenario.topology) if scenario.topology is not None
            else generate_topology(scenario, topo_rng))
    return generate_arrivals(scenario, arrival_rng, topo)


__all__ = [
    "Scenario", "ScenarioError", "Event", "EventLog", "RunMetrics", "UserRow",
    "generate_topology", "generate_arrivals", "task_cycles", "min_latency", "resolve_topology", "run",
    "arrival_stream", "feasible_pairs", "STRATEGIES",
]
