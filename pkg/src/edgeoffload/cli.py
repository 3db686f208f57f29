"""Command line: ``run``, ``compare`` and ``probe-truthfulness``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 invariant
violation (only with ``--debug-invariants`` / ``--oracle-check``).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from . import mechanism as mech
from .simulator import STRATEGIES, Scenario, ScenarioError, resolve_topology, run

log = logging.getLogger("edgeoffload")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4

EVENT_COLUMNS = ["time", "kind", "user", "i", "j", "lt", "lf", "lc", "ltotal", "payment", "fallback"]
WORKLOAD_COLUMNS = ["time", "id", "count"]
USER_COLUMNS = ["user", "Tk", "Tkmin", "ltotal", "ratio", "payment", "valuation", "cost"]


@dataclass
class RunConfig:
    scenario_path: Optional[str] = None
    strategy: Optional[str] = None
    seed: Optional[int] = None
    out_dir: str = "out"
    stride: int = 1
    debug_invariants: bool = False
    oracle_check: bool = False

    def validate(self):
        if self.stride < 1:
            raise ScenarioError("stride must be >= 1")
        if self.strategy is not None and self.strategy not in STRATEGIES:
            raise ScenarioError(f"strategy must be one of {STRATEGIES}")


def fmt(x) -> str:
    """12 significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.12g" % x


def _round_floats(obj):
    if isinstance(obj, float):
        return float("%.12g" % obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


# -- scenarios --------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(Scenario)}


def scenario_from_dict(data: dict, source: str = "<dict>") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: top level must be a JSON object")
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ScenarioError(f"{source}: unknown field(s) {', '.join(unknown)}")
    defaults = Scenario()
    kwargs = {}
    for name in _FIELDS:
        if name not in data:
            log.info("%s: %s not given, using default %r", source, name, getattr(defaults, name))
            continue
        val = data[name]
        default = getattr(defaults, name)
        try:
            if isinstance(default, tuple):
                val = tuple(val)
            elif isinstance(default, bool):
                val = bool(val)
            elif isinstance(default, int) and name != "topology":
                if isinstance(val, float) and not val.is_integer():
                    raise ValueError("expected an integer")
                val = int(val)
            elif isinstance(default, float):
                val = float(val)
            elif isinstance(default, str) and not isinstance(val, str):
                raise ValueError("expected a string")
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{source}: field {name!r}: {exc}") from None
        kwargs[name] = val
    return Scenario(**kwargs).validate()


def load_scenario(path: Optional[str]) -> Scenario:
    """Read a JSON scenario; missing fields fall back to the defaults (each logged)."""
    if path is None:
        return scenario_from_dict({}, "<defaults>")
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data, path)


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True)


def resolved(scenario: Scenario) -> Scenario:
    """Copy of ``scenario`` with the drawn topology written in."""
    if scenario.topology is not None:
        return scenario
    return dataclasses.replace(scenario, topology=resolve_topology(scenario).to_dict())


# -- outputs ----------------------------------------------------------------

def summarize(scenario: Scenario, strategy: str, elog, metrics) -> dict:
    users = metrics.users
    payments = [r.payment for r in users]
    return {
        "strategy": strategy,
        "arrivals": metrics.arrivals,
        "admitted": len(users),
        "fallbacks": {k: metrics.fallbacks[k] for k in sorted(metrics.fallbacks)},
        "deadline_miss_with_alternative": metrics.deadline_miss_with_alternative,
        "resident_deadline_violations": metrics.resident_deadline_violations,
        "events": len(elog),
        "mean_latency": metrics.mean_latency(),
        "mean_latency_final_hour": metrics.mean_latency(since=scenario.duration - 3600.0),
        "mean_payment": metrics.mean_payment(),
        "total_payment": float(sum(payments)),
        "time_avg_std_u": metrics.time_avg_std("u"),
        "time_avg_std_v": metrics.time_avg_std("v"),
        "invariant_violations": len(metrics.invariant_violations),
        "oracle_checks": metrics.oracle_checks,
        "oracle_agreements": metrics.oracle_agreements,
        "scenario": resolved(scenario).to_dict(),
    }


def emit_outputs(elog, metrics, out_dir: str, summary: dict, stride: int = 1):
    """Write events.csv, workload_ap.csv, workload_server.csv, users.csv, summary.json."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "events.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for e in elog.events:
            i, j = e.pair if e.pair is not None else (None, None)
            bd = e.breakdown
            w.writerow([
                fmt(e.time), e.kind, e.user_id, fmt(i), fmt(j),
                fmt(bd.transmission if bd else None), fmt(bd.transfer if bd else None),
                fmt(bd.computation if bd else None), fmt(bd.total if bd else None),
                fmt(e.payment), e.fallback or "",
            ])
    for name, series in (("workload_ap.csv", metrics.u_series),
                         ("workload_server.csv", metrics.v_series)):
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(WORKLOAD_COLUMNS)
            for k in range(0, len(series), stride):
                for idx, count in enumerate(series[k]):
                    w.writerow([fmt(metrics.times[k]), idx, int(count)])
    with open(os.path.join(out_dir, "users.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(USER_COLUMNS)
        for r in metrics.users:
            w.writerow([r.user_id, fmt(r.deadline), fmt(r.min_latency), fmt(r.latency),
                        fmt(r.ratio), fmt(r.payment), fmt(r.valuation), fmt(r.cost)])
    # aggregates at 12 digits; the scenario echo keeps exact floats so it replays bit-for-bit
    body = _round_floats({k: v for k, v in summary.items() if k != "scenario"})
    if "scenario" in summary:
        body["scenario"] = summary["scenario"]
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_summary(s: dict, out=sys.stdout):
    fb = ", ".join(f"{k}={v}" for k, v in s["fallbacks"].items()) or "none"
    print(f"[{s['strategy']}] arrivals={s['arrivals']} admitted={s['admitted']} "
          f"fallbacks: {fb}", file=out)
    print(f"  mean latency {s['mean_latency']:.3f} s (final hour {s['mean_latency_final_hour']:.3f} s)"
          f"  mean payment {s['mean_payment']:.6g}", file=out)
    print(f"  load spread (time-avg std): APs {s['time_avg_std_u']:.4f}  "
          f"servers {s['time_avg_std_v']:.4f}", file=out)
    if s["oracle_checks"]:
        print(f"  oracle agreement {s['oracle_agreements']}/{s['oracle_checks']}", file=out)
    if s["invariant_violations"]:
        print(f"  INVARIANT VIOLATIONS: {s['invariant_violations']}", file=out)


# -- commands ---------------------------------------------------------------

def _scenario_for(config: RunConfig) -> Scenario:
    scenario = load_scenario(config.scenario_path)
    changes = {}
    if config.seed is not None:
        changes["seed"] = config.seed
    if config.strategy is not None:
        changes["strategy"] = config.strategy
    return dataclasses.replace(scenario, **changes).validate()


def _execute(scenario: Scenario, config: RunConfig, out_dir: str) -> dict:
    elog, metrics = run(scenario, debug=config.debug_invariants, oracle_check=config.oracle_check)
    summary = summarize(scenario, scenario.strategy, elog, metrics)
    emit_outputs(elog, metrics, out_dir, summary, stride=config.stride)
    return summary


def _status(summary: dict) -> int:
    if summary["invariant_violations"] or summary["oracle_agreements"] != summary["oracle_checks"]:
        return EXIT_INVARIANT
    return EXIT_OK


def run_command(config: RunConfig) -> int:
    try:
        config.validate()
        scenario = _scenario_for(config)
    except (ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = _execute(scenario, config, config.out_dir)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    _print_summary(summary)
    return _status(summary)


def _compare_one(args):
    scenario, config, out_dir = args
    return _execute(scenario, config, out_dir)


def compare_command(config: RunConfig, strategies, jobs: int = 1) -> int:
    try:
        config.validate()
        bad = [s for s in strategies if s not in STRATEGIES]
        if bad:
            raise ScenarioError(f"unknown strategies: {', '.join(bad)}")
        base = _scenario_for(config)
    except (ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    work = [(dataclasses.replace(base, strategy=s), config, os.path.join(config.out_dir, s))
            for s in strategies]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                summaries = list(pool.map(_compare_one, work))
        else:
            summaries = [_compare_one(w) for w in work]
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{'strategy':8} {'admitted':>8} {'fallback':>8} {'mean_lat':>10} "
          f"{'final_hr':>10} {'mean_pay':>10} {'std_u':>7} {'std_v':>7}")
    for s in summaries:
        print(f"{s['strategy']:8} {s['admitted']:8d} {sum(s['fallbacks'].values()):8d} "
              f"{s['mean_latency']:10.3f} {s['mean_latency_final_hour']:10.3f} "
              f"{s['mean_payment']:10.4g} {s['time_avg_std_u']:7.3f} {s['time_avg_std_v']:7.3f}")
    try:
        os.makedirs(config.out_dir, exist_ok=True)
        with open(os.path.join(config.out_dir, "compare.json"), "w") as fh:
            rows = [{k: v for k, v in s.items() if k != "scenario"} for s in summaries]
            json.dump(_round_floats(rows), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return max(_status(s) for s in summaries)


def probe_command(config: RunConfig, samples: int, misreports: int, tol: float = 1e-9) -> int:
    """Sample decision points from a DAPA run and probe each with misreported deadlines."""
    try:
        config.validate()
        scenario = dataclasses.replace(_scenario_for(config), strategy="dapa")
    except (ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed).spawn(4)[3])
    captured = []

    def grab(state, req):
        captured.append((state.copy(), req))

    run(scenario, on_decision=grab)
    topo = resolve_topology(scenario)
    rates = mech.Rates.from_topology(topo)
    picks = rng.choice(len(captured), size=min(samples, len(captured)), replace=False)
    worst = -math.inf
    profitable = 0
    for k in sorted(picks):
        state, req = captured[k]
        lies = rng.uniform(0.25 * req.deadline, 2.0 * req.deadline, size=misreports)
        report = mech.truthfulness_probe(state, topo, rates, req, lies, tol=tol)
        worst = max(worst, report.max_gain)
        profitable += len(report.profitable)
    print(f"probed {len(picks)} decisions x {misreports} misreports; "
          f"max gain from lying {worst:.3g}; profitable deviations {profitable}")
    return EXIT_OK if profitable == 0 else EXIT_INVARIANT


def _add_run_flags(p):
    p.add_argument("--scenario", dest="scenario_path", help="JSON scenario file (defaults if omitted)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="out_dir", default="out")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="edgeoffload", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log scenario defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one strategy")
    _add_run_flags(p_run)
    p_run.add_argument("--strategy", choices=STRATEGIES)
    p_run.add_argument("--stride", type=int, default=1, help="workload sample stride")
    p_run.add_argument("--debug-invariants", action="store_true")
    p_run.add_argument("--oracle-check", action="store_true")

    p_cmp = sub.add_parser("compare", help="simulate several strategies on one arrival stream")
    _add_run_flags(p_cmp)
    p_cmp.add_argument("--strategies", default="dapa,ue,rs")
    p_cmp.add_argument("--stride", type=int, default=1)
    p_cmp.add_argument("--jobs", type=int, default=1)
    p_cmp.add_argument("--debug-invariants", action="store_true")
    p_cmp.add_argument("--oracle-check", action="store_true")

    p_probe = sub.add_parser("probe-truthfulness", help="misreport deadlines at sampled decisions")
    _add_run_flags(p_probe)
    p_probe.add_argument("--samples", type=int, default=200)
    p_probe.add_argument("--misreports", type=int, default=20)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.debug("scoring kernel backend: %s", kernels.BACKEND)

    config = RunConfig(
        scenario_path=args.scenario_path,
        strategy=getattr(args, "strategy", None),
        seed=args.seed,
        out_dir=args.out_dir,
        stride=getattr(args, "stride", 1),
        debug_invariants=getattr(args, "debug_invariants", False),
        oracle_check=getattr(args, "oracle_check", False),
    )
    if args.command == "run":
        return run_command(config)
    if args.command == "compare":
        strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
        return compare_command(config, strategies, jobs=args.jobs)
    return probe_command(config, args.samples, args.misreports)


if __name__ == "__main__":
    sys.exit(main())
