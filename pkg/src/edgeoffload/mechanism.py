"""Valuations, marginal-cost payments and the three admission rules.

``dapa_decide`` picks the feasible pair that minimizes the monetized delay
increase imposed on resident users plus the newcomer's own monetized delay,
checks the declared deadline on that pair only, and charges the newcomer
the increase in system valuation.  ``miss_value`` recomputes the instant
social surplus the slow way (copy the state, join, re-value everything) and
exists to cross-check the fast rule.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .latency import DelayBreakdown, meets_deadline, total_delay
from .model import (
    MBIT_PER_MB,
    ActiveUserRecord,
    DecisionPair,
    SystemState,
    TaskRequest,
    Topology,
    apply_join,
    feasible_pairs,
)


@dataclass(frozen=True)
class Rates:
    alpha: np.ndarray  # per AP, money/s
    beta: np.ndarray  # per (AP, server), money/s
    gamma: np.ndarray  # per server, money/s

    @classmethod
    def from_topology(cls, topo: Topology) -> "Rates":
        return cls(topo.alpha, topo.beta, topo.gamma)


class FallbackReason(str, enum.Enum):
    NO_COVERAGE = "NoCoverage"
    NO_FEASIBLE_PAIR = "NoFeasiblePair"
    DEADLINE_VIOLATED = "DeadlineViolated"


@dataclass(frozen=True)
class Admission:
    pair: DecisionPair
    breakdown: DelayBreakdown
    payment: float
    user_valuation: float
    system_valuation_before: float = 0.0
    system_valuation_after: float = 0.0
    objective: float = math.nan
    admitted = True

    @property
    def user_utility(self) -> float:
        return self.user_valuation - self.payment

    @property
    def system_credit(self) -> float:
        # budget balance: whatever the user pays, the system receives
        return self.payment

    @property
    def surplus(self) -> float:
        return self.user_valuation - self.system_valuation_after


@dataclass(frozen=True)
class CloudFallback:
    reason: FallbackReason
    pair: Optional[DecisionPair] = None
    breakdown: Optional[DelayBreakdown] = None
    # only meaningful for DEADLINE_VIOLATED: some other feasible pair met the deadline
    alternative_existed: bool = False
    admitted = False
    payment = 0.0


AdmissionOutcome = Union[Admission, CloudFallback]


def user_valuation(req: TaskRequest, breakdown: DelayBreakdown, deadline: float = None) -> float:
    """psi_k * (T_k - latency); ``deadline`` overrides the declared one."""
    t = req.deadline if deadline is None else deadline
    return req.psi * (t - breakdown.total)


def _record_delays(rec: ActiveUserRecord, topo: Topology, u: int, v: int):
    i, j = rec.pair
    lt = rec.data_size * MBIT_PER_MB * u / topo.bandwidth[i]
    lc = rec.cycles * v / topo.compute[j]
    return lt, lc


def system_valuation(state: SystemState, topo: Topology, rates: Rates = None,
                     exclude: Optional[int] = None) -> float:
    """Monetized delay of every resident user at the current occupancy counts.

    ``exclude`` drops one user (the newcomer) from the sum while its
    presence still counts toward u and v.
    """
    rates = rates or Rates.from_topology(topo)
    total = 0.0
    x = np.zeros_like(state.x)
    for uid, rec in state.roster.items():
        if uid == exclude:
            continue
        i, j = rec.pair
        lt, lc = _record_delays(rec, topo, state.u[i], state.v[j])
        total += rates.alpha[i] * lt + rates.gamma[j] * lc
        x[i, j] += 1
    total += float(np.sum(rates.beta * x * 2.0 * topo.transfer_delay))
    return float(total)


def _increase_terms(state: SystemState, topo: Topology, rates: Rates, pair: DecisionPair):
    # each resident on AP i gains D_n/B_i of uplink time when u_i -> u_i + 1;
    # likewise C_n/F_j on server j
    i, j = pair
    dt = sum(r.data_size * MBIT_PER_MB / topo.bandwidth[i] for r in state.users_on_ap(i))
    dc = sum(r.cycles / topo.compute[j] for r in state.users_on_server(j))
    return rates.alpha[i] * dt, rates.gamma[j] * dc


def miss2_value(state: SystemState, topo: Topology, rates: Rates, req: TaskRequest,
                pair: DecisionPair) -> float:
    """Delay-increase objective of ``pair`` (lower is better)."""
    inc_t, inc_c = _increase_terms(state, topo, rates, pair)
    return float(inc_t + inc_c + req.psi * total_delay(state, topo, req, pair).total)


def miss_value(state: SystemState, topo: Topology, rates: Rates, req: TaskRequest,
               pair: DecisionPair) -> float:
    """Instant social surplus of ``pair`` by direct simulation of the join (higher is better)."""
    bd = total_delay(state, topo, req, pair)
    after = state.copy()
    rec = _make_record(req, pair, bd, 0.0)
    apply_join(after, req, pair, rec)
    return user_valuation(req, bd) - system_valuation(after, topo, rates, exclude=req.user_id)


def payment(state_before: SystemState, topo: Topology, rates: Rates,
            pair: DecisionPair) -> float:
    """Marginal-cost price: the monetized delay the join adds to resident users."""
    inc_t, inc_c = _increase_terms(state_before, topo, rates, pair)
    return float(inc_t + inc_c)


def _make_record(req: TaskRequest, pair: DecisionPair, bd: DelayBreakdown,
                 price: float) -> ActiveUserRecord:
    return ActiveUserRecord(
        user_id=req.user_id,
        pair=pair,
        start_time=req.arrival_time,
        transmission=bd.transmission,
        transfer=bd.transfer,
        computation=bd.computation,
        payment=price,
        data_size=req.data_size,
        cycles=req.cycles,
    )


def admission_record(req: TaskRequest, outcome: Admission) -> ActiveUserRecord:
    return _make_record(req, outcome.pair, outcome.breakdown, outcome.payment)


def _search(mode, state, topo, rates, req, cov):
    return kernels.best_pair(
        mode, req.psi, req.data_mbit, req.cycles, req.data_size,
        cov, state.u, topo.ap_capacity, state.v, state.remaining_memory,
        topo.bandwidth, topo.compute, rates.alpha, rates.gamma,
        state.ap_load, state.server_load, topo.transfer_delay,
    )


def _deadline_fallback(state, topo, req, pair, bd) -> CloudFallback:
    alt = any(
        meets_deadline(total_delay(state, topo, req, p), req.deadline)
        for p in feasible_pairs(state, topo, req)
    )
    return CloudFallback(FallbackReason.DEADLINE_VIOLATED, pair, bd, alternative_existed=alt)


def dapa_decide(state: SystemState, topo: Topology, rates: Rates,
                req: TaskRequest) -> AdmissionOutcome:
    """Online allocation and pricing for one arriving request.

    Departures due before ``req.arrival_time`` must already be applied.
    """
    cov = topo.coverage(req.position)
    if not cov.any():
        return CloudFallback(FallbackReason.NO_COVERAGE)
    i, j, score = _search(kernels.DAPA, state, topo, rates, req, cov)
    if i < 0:
        return CloudFallback(FallbackReason.NO_FEASIBLE_PAIR)
    pair = DecisionPair(int(i), int(j))
    bd = total_delay(state, topo, req, pair)
    if not meets_deadline(bd, req.deadline):
        return _deadline_fallback(state, topo, req, pair, bd)

    before = system_valuation(state, topo, rates)
    after_state = state.copy()
    apply_join(after_state, req, pair, _make_record(req, pair, bd, 0.0))
    after = system_valuation(after_state, topo, rates, exclude=req.user_id)
    return Admission(
        pair=pair,
        breakdown=bd,
        payment=payment(state, topo, rates, pair),
        user_valuation=user_valuation(req, bd),
        system_valuation_before=before,
        system_valuation_after=after,
        objective=float(score),
    )


def ue_decide(state: SystemState, topo: Topology, req: TaskRequest) -> AdmissionOutcome:
    """Selfish baseline: the feasible pair with the smallest own delay, unpriced."""
    cov = topo.coverage(req.position)
    if not cov.any():
        return CloudFallback(FallbackReason.NO_COVERAGE)
    rates = Rates.from_topology(topo)
    i, j, score = _search(kernels.UE, state, topo, rates, req, cov)
    if i < 0:
        return CloudFallback(FallbackReason.NO_FEASIBLE_PAIR)
    pair = DecisionPair(int(i), int(j))
    bd = total_delay(state, topo, req, pair)
    if not meets_deadline(bd, req.deadline):
        return _deadline_fallback(state, topo, req, pair, bd)
    return Admission(pair, bd, 0.0, user_valuation(req, bd), objective=float(score))


def rs_decide(state: SystemState, topo: Topology, req: TaskRequest,
              rng: np.random.Generator) -> AdmissionOutcome:
    """Random baseline: a uniform draw among feasible pairs, unpriced."""
    cov = topo.coverage(req.position)
    if not cov.any():
        return CloudFallback(FallbackReason.NO_COVERAGE)
    pairs = feasible_pairs(state, topo, req)
    if not pairs:
        return CloudFallback(FallbackReason.NO_FEASIBLE_PAIR)
    pair = pairs[int(rng.integers(len(pairs)))]
    bd = total_delay(state, topo, req, pair)
    if not meets_deadline(bd, req.deadline):
        return _deadline_fallback(state, topo, req, pair, bd)
    return Admission(pair, bd, 0.0, user_valuation(req, bd))


def oracle_best_pair(state: SystemState, topo: Topology, rates: Rates,
                     req: TaskRequest) -> Optional[DecisionPair]:
    """Brute-force argmax of the instant social surplus over all feasible pairs."""
    best, best_val = None, -math.inf
    for p in feasible_pairs(state, topo, req):
        val = miss_value(state, topo, rates, req, p)
        if val > best_val:
            best, best_val = p, val
    return best


@dataclass
class ProbeRow:
    declared: float
    pair: Optional[DecisionPair]
    valuation: float  # true valuation, 0 on fallback
    payment: float
    utility: float
    meets_true_deadline: bool


@dataclass
class ProbeReport:
    true_deadline: float
    truthful: ProbeRow
    rows: list = field(default_factory=list)
    tol: float = 1e-9

    @property
    def max_gain(self) -> float:
        """Largest utility gain of a misreport whose pair honors the true deadline."""
        gains = [r.utility - self.truthful.utility for r in self.rows if r.meets_true_deadline]
        return max(gains, default=-math.inf)

    @property
    def profitable(self) -> list:
        return [r for r in self.rows
                if r.meets_true_deadline and r.utility > self.truthful.utility + self.tol]


def _probe_row(state, topo, rates, req, declared) -> ProbeRow:
    lie = TaskRequest(req.user_id, req.arrival_time, req.position, req.cycles,
                      req.data_size, declared, req.psi)
    out = dapa_decide(state, topo, rates, lie)
    if not out.admitted:
        return ProbeRow(declared, None, 0.0, 0.0, 0.0, False)
    val = user_valuation(req, out.breakdown)  # true T_k, not the declared one
    ok = meets_deadline(out.breakdown, req.deadline)
    return ProbeRow(declared, out.pair, val, out.payment, val - out.payment, ok)


def truthfulness_probe(state: SystemState, topo: Topology, rates: Rates, req: TaskRequest,
                       misreports: Sequence[float], tol: float = 1e-9) -> ProbeReport:
    """Compare the truthful outcome against each declared deadline in ``misreports``.

    Utilities are always measured against the true deadline ``req.deadline``.
    A fallback outcome is worth 0.
    """
    report = ProbeReport(req.deadline, _probe_row(state, topo, rates, req, req.deadline), tol=tol)
    for t in misreports:
        report.rows.append(_probe_row(state, topo, rates, req, float(t)))
    return report
