#!/usr/bin/env python3
"""
Acceptance Checklist

Runs the routing oracles and the directional comparisons end to end and
prints a pass/fail line per criterion.
Run with: python scripts/acceptance.py [--quick]
"""

import argparse
import sys
import tempfile
from collections.abc import Callable
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import settings  # noqa: E402
from llnroute.cli import configure_logging  # noqa: E402
from llnroute.netsim.engine import Protocol  # noqa: E402
from llnroute.netsim.oracle import (  # noqa: E402
    LOSSLESS_RADIO,
    bfs_hops,
    discover_routes_to_sink,
    discovered_hops_to_sink,
    empirical_unicast_success,
    find_routing_loops,
    follow_route,
)
from llnroute.netsim.radio import RadioModel  # noqa: E402
from llnroute.netsim.topology import generate_topology  # noqa: E402
from llnroute.scenario import ScenarioConfig, SweepAxis, SweepConfig  # noqa: E402
from llnroute.sweep import RunResult, emit_results, run_sweep  # noqa: E402

# Color codes for terminal output
GREEN = "\033[92m"
YELLOW = "\033[93m"
RED = "\033[91m"
BLUE = "\033[94m"
BOLD = "\033[1m"
RESET = "\033[0m"

PROTOCOLS = (Protocol.LOADNG, Protocol.AODV)
ACCEPT = settings.yaml.acceptance


class Runs:
    """Sweeps shared by several criteria, computed once."""

    def __init__(self, seeds: int, duration_s: float, jobs: int) -> None:
        self.seeds = tuple(range(1, seeds + 1))
        self.duration_s = duration_s
        self.jobs = jobs
        self._cache: dict[str, list[RunResult]] = {}

    def scenario(self, name: str) -> ScenarioConfig:
        base = {"protocol": PROTOCOLS, "seeds": self.seeds, "duration_s": self.duration_s}
        if name == "nodes":
            return ScenarioConfig(**base, sweep=SweepConfig(axis=SweepAxis.NODES, values=(25, 50, 75)))
        if name == "distance":
            return ScenarioConfig(
                **base,
                n_nodes=50,
                sweep=SweepConfig(axis=SweepAxis.DISTANCE, values=(50, 100, 150, 200, 250)),
            )
        return ScenarioConfig(
            **base,
            dist_to_sink=100.0,
            sweep=SweepConfig(axis=SweepAxis.NODES, values=(25, 50, 75)),
        )

    def get(self, name: str) -> list[RunResult]:
        if name not in self._cache:
            self._cache[name] = run_sweep(self.scenario(name), jobs=self.jobs)
        return self._cache[name]

    def all(self) -> list[RunResult]:
        return [r for results in self._cache.values() for r in results]


def _mean(results: list[RunResult], protocol: Protocol, value: float, metric: str) -> float:
    samples = [
        float(getattr(r.row, metric))
        for r in results
        if r.row.protocol is protocol and r.row.axis_value == value
    ]
    return float(np.mean(samples))


def check_oracle_routes(topologies: int) -> tuple[bool, str]:
    """Discovered hop counts to the sink equal BFS distances."""
    rng = np.random.default_rng(2024)
    mismatches = 0
    for i in range(topologies):
        n = int(rng.integers(5, 11))
        nodes = generate_topology(n, (300.0, 300.0), LOSSLESS_RADIO.range_m, i)
        sink = nodes[0].id
        expected = bfs_hops(nodes, LOSSLESS_RADIO.range_m, sink)
        for protocol in PROTOCOLS:
            found = discovered_hops_to_sink(nodes, protocol, seed=i)
            mismatches += sum(1 for client, hops in found.items() if hops != expected[client])
    if mismatches:
        return False, f"{mismatches} routes differ from BFS over {topologies} topologies"
    return True, f"{topologies} topologies, every route matches BFS"


def check_loop_freedom(topologies: int) -> tuple[bool, str]:
    violations = 0
    for i in range(topologies):
        nodes = generate_topology(8, (300.0, 300.0), LOSSLESS_RADIO.range_m, 10_000 + i)
        for protocol in PROTOCOLS:
            snapshot = discover_routes_to_sink(nodes, protocol, seed=i).route_snapshot()
            violations += len(find_routing_loops(snapshot))
            for node, table in snapshot.items():
                for dest in table:
                    if follow_route(snapshot, node, dest) is None:
                        violations += 1
    if violations:
        return False, f"{violations} next-hop walks loop or break"
    return True, f"{topologies} stable runs, every next-hop walk reaches its destination"


def check_destination_only_rrep(runs: Runs) -> tuple[bool, str]:
    total = sum(
        r.report.router_counters.get("rrep_generated_by_non_owner", 0)
        for r in runs.all()
        if r.row.protocol is Protocol.LOADNG
    )
    if total:
        return False, f"{total} LOADng RREPs generated by non-owners"
    return True, "no LOADng RREP generated by a non-owner"


def check_directional_pdr(runs: Runs) -> tuple[bool, str]:
    results = runs.get("nodes")
    worse = [
        v
        for v in (25, 50, 75)
        if _mean(results, Protocol.LOADNG, v, "mp2p_pdr") <= _mean(results, Protocol.AODV, v, "mp2p_pdr")
    ]
    gap = _mean(results, Protocol.LOADNG, 75, "mp2p_pdr") - _mean(results, Protocol.AODV, 75, "mp2p_pdr")
    if worse:
        return False, f"LOADng PDR not above AODV at {worse}"
    if gap < ACCEPT.pdr_gap_at_75_nodes:
        return False, f"PDR gap at 75 nodes is {gap:.3f}"
    return True, f"LOADng ahead everywhere, gap {gap:.3f} at 75 nodes"


def check_directional_delay(runs: Runs) -> tuple[bool, str]:
    results = runs.get("nodes")
    bad = [
        (v, metric)
        for v in (25, 50, 75)
        for metric in ("mp2p_delay_mean_ms", "p2mp_delay_mean_ms")
        if _mean(results, Protocol.LOADNG, v, metric) >= _mean(results, Protocol.AODV, v, metric)
    ]
    if bad:
        return False, f"LOADng not faster at {bad}"
    return True, "LOADng delay below AODV in both directions"


def check_directional_overhead(runs: Runs) -> tuple[bool, str]:
    results = runs.get("nodes")
    ratios = [
        _mean(results, Protocol.LOADNG, v, "ctl_bytes_per_s")
        / max(_mean(results, Protocol.AODV, v, "ctl_bytes_per_s"), 1e-9)
        for v in (25, 50, 75)
    ]
    worst = max(ratios)
    if worst >= ACCEPT.overhead_ratio_max:
        return False, f"overhead ratio {worst:.2f}"
    return True, f"worst overhead ratio {worst:.2f}"


def check_p2mp(runs: Runs) -> tuple[bool, str]:
    results = runs.get("p2mp")
    low = [
        (p.value, v)
        for p in PROTOCOLS
        for v in (25, 50, 75)
        if _mean(results, p, v, "p2mp_pdr") < ACCEPT.p2mp_pdr_min
    ]
    if low:
        return False, f"P2MP PDR below {ACCEPT.p2mp_pdr_min} at {low}"
    return True, "P2MP PDR high for both protocols"


def check_distance(runs: Runs) -> tuple[bool, str]:
    results = runs.get("distance")
    far = _mean(results, Protocol.LOADNG, 250, "mp2p_pdr")
    near = _mean(results, Protocol.LOADNG, 100, "mp2p_pdr")
    behind = [
        v
        for v in (50, 100, 150, 200, 250)
        if _mean(results, Protocol.LOADNG, v, "mp2p_pdr") < _mean(results, Protocol.AODV, v, "mp2p_pdr")
    ]
    if far >= near:
        return False, f"LOADng PDR at 250 m ({far:.3f}) not below 100 m ({near:.3f})"
    if behind:
        return False, f"LOADng behind AODV at {behind} m"
    return True, f"PDR {near:.3f} at 100 m falls to {far:.3f} at 250 m"


def check_determinism(runs: Runs) -> tuple[bool, str]:
    with tempfile.TemporaryDirectory() as tmp:
        first = Path(tmp, "a")
        second = Path(tmp, "b")
        emit_results([r.row for r in runs.get("nodes")], "csv", first)
        emit_results([r.row for r in run_sweep(runs.scenario("nodes"), jobs=runs.jobs)], "csv", second)
        same = (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()
    if not same:
        return False, "repeated sweep produced different CSV bytes"
    return True, "repeated sweep is byte-identical"


def check_radio() -> tuple[bool, str]:
    rate = empirical_unicast_success(75.0, RadioModel(), 10_000)
    if abs(rate - 0.75) > ACCEPT.radio_check_tolerance:
        return False, f"empirical success {rate:.4f} at 75 m"
    return True, f"empirical success {rate:.4f} at 75 m"


def main(argv: list[str] | None = None) -> int:
    """Run all acceptance checks."""
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--quick", action="store_true", help="2 seeds, 300 s, 20 topologies")
    parser.add_argument("--jobs", type=int, default=settings.env.jobs or 1)
    parser.add_argument("--log-level", help="Override the configured log level")
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    seeds = 2 if args.quick else ACCEPT.sweep_seeds
    duration = 300.0 if args.quick else ACCEPT.sweep_duration_s
    topologies = 20 if args.quick else 200
    runs = Runs(seeds, duration, args.jobs)

    print(f"\n{BOLD}{BLUE}{'='*70}{RESET}")
    print(f"{BOLD}{BLUE}  LOADng vs AODV acceptance{RESET}")
    print(f"{BOLD}{BLUE}{'='*70}{RESET}\n")

    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("Oracle routes", lambda: check_oracle_routes(topologies)),
        ("Loop freedom", lambda: check_loop_freedom(topologies)),
        ("Monte-Carlo radio", check_radio),
        ("Directional PDR", lambda: check_directional_pdr(runs)),
        ("Directional delay", lambda: check_directional_delay(runs)),
        ("Directional overhead", lambda: check_directional_overhead(runs)),
        ("P2MP delivery", lambda: check_p2mp(runs)),
        ("Distance degradation", lambda: check_distance(runs)),
        ("Destination-only RREP", lambda: check_destination_only_rrep(runs)),
        ("Determinism", lambda: check_determinism(runs)),
    ]

    all_passed = True
    for name, check_func in checks:
        passed, message = check_func()
        if passed:
            print(f"  {GREEN}✓{RESET} {name:<30} {GREEN}{message}{RESET}")
        else:
            print(f"  {RED}✗{RESET} {name:<30} {YELLOW}{message}{RESET}")
            all_passed = False

    print(f"\n{BOLD}{BLUE}{'='*70}{RESET}\n")

    if all_passed:
        print(f"{BOLD}{GREEN}✅ All acceptance criteria met.{RESET}\n")
        return 0
    print(f"{BOLD}{YELLOW}⚠️  Some criteria failed; see the lines above.{RESET}\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
