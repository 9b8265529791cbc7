"""
Runs, sweeps and result files.

A sweep is the cartesian product protocols x axis values x seeds. Cells are
independent engines and may run in worker processes; rows are sorted by
(protocol, axis_value, seed) before anything is written, so the output
bytes never depend on `jobs`.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats

from config import settings
from llnroute.errors import LlnRouteError, ResultsWriteError, RunAborted
from llnroute.metrics import MetricsReport
from llnroute.netsim.engine import Engine, Protocol, RngPurpose, seed_sequence
from llnroute.netsim.topology import generate_topology
from llnroute.scenario import ScenarioConfig, SweepAxis
from llnroute.simtime import from_seconds

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "protocol",
    "axis",
    "axis_value",
    "seed",
    "mp2p_sent",
    "mp2p_delivered",
    "mp2p_pdr",
    "mp2p_delay_mean_ms",
    "mp2p_delay_p95_ms",
    "p2mp_sent",
    "p2mp_delivered",
    "p2mp_pdr",
    "p2mp_delay_mean_ms",
    "p2mp_delay_p95_ms",
    "ctl_packets",
    "ctl_bytes",
    "ctl_bytes_per_s",
    "drops_total",
)

SUMMARY_METRICS = (
    "mp2p_pdr",
    "mp2p_delay_mean_ms",
    "p2mp_pdr",
    "p2mp_delay_mean_ms",
    "ctl_packets",
    "ctl_bytes_per_s",
)


class ResultRow(BaseModel):
    """One (protocol, axis value, seed) cell, flattened for CSV/JSON."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    protocol: Protocol
    axis: SweepAxis
    axis_value: float
    seed: int
    mp2p_sent: int
    mp2p_delivered: int
    mp2p_pdr: float
    mp2p_delay_mean_ms: float
    mp2p_delay_p95_ms: float
    p2mp_sent: int
    p2mp_delivered: int
    p2mp_pdr: float
    p2mp_delay_mean_ms: float
    p2mp_delay_p95_ms: float
    ctl_packets: int
    ctl_bytes: int
    ctl_bytes_per_s: float
    drops_total: int

    @classmethod
    def from_report(
        cls, protocol: Protocol, axis: SweepAxis, axis_value: float, seed: int, report: MetricsReport
    ) -> ResultRow:
        return cls(
            protocol=protocol,
            axis=axis,
            axis_value=axis_value,
            seed=seed,
            mp2p_sent=report.mp2p.sent,
            mp2p_delivered=report.mp2p.delivered,
            mp2p_pdr=report.mp2p.pdr,
            mp2p_delay_mean_ms=report.mp2p.delay_mean_ms,
            mp2p_delay_p95_ms=report.mp2p.delay_p95_ms,
            p2mp_sent=report.p2mp.sent,
            p2mp_delivered=report.p2mp.delivered,
            p2mp_pdr=report.p2mp.pdr,
            p2mp_delay_mean_ms=report.p2mp.delay_mean_ms,
            p2mp_delay_p95_ms=report.p2mp.delay_p95_ms,
            ctl_packets=report.control.packets,
            ctl_bytes=report.control.total_bytes,
            ctl_bytes_per_s=report.control.bytes_per_second,
            drops_total=report.drops_total,
        )

    def sort_key(self) -> tuple[str, float, int]:
        return (self.protocol.value, self.axis_value, self.seed)

    def csv_values(self) -> list[str]:
        return [_csv_cell(getattr(self, c)) for c in CSV_COLUMNS]


class SummaryRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    protocol: str
    axis: str
    axis_value: float | None
    runs: int
    means: dict[str, float]
    ci95: dict[str, float]


@dataclass(frozen=True)
class RunResult:
    row: ResultRow
    report: MetricsReport


@dataclass(frozen=True)
class Cell:
    protocol: Protocol
    axis: SweepAxis
    axis_value: float
    seed: int


def _csv_cell(value: Any) -> str:
    if isinstance(value, Protocol | SweepAxis):
        return value.value
    return str(value)


# --- 1. Running ---


def cells(cfg: ScenarioConfig) -> list[Cell]:
    """Every (protocol, axis value, seed) the scenario asks for."""
    if cfg.sweep is not None:
        axis, values = cfg.sweep.axis, cfg.sweep.values
    elif cfg.dist_to_sink is not None:
        axis, values = SweepAxis.DISTANCE, (cfg.dist_to_sink,)
    else:
        axis, values = SweepAxis.NODES, (float(cfg.n_nodes),)
    return [
        Cell(protocol, axis, value, seed)
        for protocol in cfg.protocol
        for value in values
        for seed in cfg.seeds
    ]


def trace_name(cell: Cell) -> str:
    return f"trace-{cell.protocol.value}-{cell.axis_value:g}-{cell.seed}.tsv"


@contextmanager
def _trace_file(trace_dir: Path | None, cell: Cell) -> Iterator[IO[str] | None]:
    if trace_dir is None:
        yield None
        return
    path = trace_dir / trace_name(cell)
    try:
        handle = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ResultsWriteError(str(path), exc) from exc
    with handle:
        yield handle


def build_engine(cfg: ScenarioConfig, cell: Cell, trace: IO[str] | None = None) -> Engine:
    if cell.axis is SweepAxis.NODES:
        n, dist = int(cell.axis_value), cfg.dist_to_sink
    else:
        n, dist = cfg.n_nodes, cell.axis_value
    nodes = generate_topology(
        n,
        cfg.field_m,
        cfg.radio.range_m,
        seed_sequence(cell.seed, RngPurpose.TOPOLOGY),
        dist_to_sink=dist,
        placement=cfg.placement,
        address_width=cfg.address_width,
    )
    focus = next((node.id for node in nodes if node.is_focus), None)
    return Engine(
        nodes,
        cell.protocol,
        cfg.timers,
        cfg.radio,
        cfg.mac,
        cell.seed,
        traffic=cfg.traffic,
        focus=focus,
        trace=trace,
    )


def run_single(cfg: ScenarioConfig, cell: Cell, trace_dir: Path | None = None) -> RunResult:
    """Run one cell; any failure is re-raised as RunAborted naming the cell."""
    try:
        with _trace_file(trace_dir, cell) as trace:
            engine = build_engine(cfg, cell, trace)
            duration = from_seconds(cfg.duration_s)
            engine.install_traffic(duration)
            report = engine.run(duration)
    except ResultsWriteError:
        raise
    except (LlnRouteError, ValueError) as exc:
        raise RunAborted(cell.protocol.value, cell.axis.value, cell.axis_value, cell.seed, exc) from exc
    logger.debug(
        "%s %s=%g seed=%d: mp2p pdr=%.3f ctl=%d B",
        cell.protocol.value,
        cell.axis.value,
        cell.axis_value,
        cell.seed,
        report.mp2p.pdr,
        report.control.total_bytes,
    )
    row = ResultRow.from_report(cell.protocol, cell.axis, cell.axis_value, cell.seed, report)
    return RunResult(row, report)


def run_sweep(cfg: ScenarioConfig, jobs: int = 1, trace_dir: Path | None = None) -> list[RunResult]:
    todo = cells(cfg)
    logger.info("running %d cells with %d job(s)", len(todo), jobs)
    if jobs <= 1 or len(todo) == 1:
        results = [run_single(cfg, cell, trace_dir) for cell in todo]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_single, cfg, cell, trace_dir) for cell in todo]
            results = [f.result() for f in futures]
    results.sort(key=lambda r: r.row.sort_key())
    logger.info("sweep finished: %d rows", len(results))
    return results


# --- 2. Aggregation ---


def _mean_ci(samples: list[float]) -> tuple[float, float]:
    mean = float(np.mean(samples))
    if len(samples) < 2:
        return mean, 0.0
    sem = float(stats.sem(samples))
    if sem == 0.0 or math.isnan(sem):
        return mean, 0.0
    low, high = stats.t.interval(0.95, len(samples) - 1, loc=mean, scale=sem)
    return mean, float(high - low) / 2.0


def summarize(rows: list[ResultRow]) -> list[SummaryRow]:
    """Mean and 95% Student-t half-width over seeds, per (protocol, axis value)."""
    groups: dict[tuple[str, str, float], list[ResultRow]] = {}
    for row in sorted(rows, key=ResultRow.sort_key):
        groups.setdefault((row.protocol.value, row.axis.value, row.axis_value), []).append(row)
    summary = []
    for (protocol, axis, value), members in groups.items():
        means: dict[str, float] = {}
        ci95: dict[str, float] = {}
        for metric in SUMMARY_METRICS:
            means[metric], ci95[metric] = _mean_ci([float(getattr(r, metric)) for r in members])
        summary.append(
            SummaryRow(
                protocol=protocol,
                axis=axis,
                axis_value=value,
                runs=len(members),
                means=means,
                ci95=ci95,
            )
        )
    return summary


def published_reference_row() -> SummaryRow:
    """Static RPL figures quoted by the evaluated deployment; never simulated."""
    ref = settings.yaml.reference
    return SummaryRow(
        protocol="rpl",
        axis="published",
        axis_value=None,
        runs=0,
        means={"mp2p_pdr": ref.rpl_pdr, "mp2p_delay_mean_ms": ref.rpl_delay_ms},
        ci95={},
    )


# --- 3. Output ---


def _open_for_write(path: Path) -> IO[str]:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ResultsWriteError(str(path), exc) from exc


def emit_results(rows: list[ResultRow], fmt: str, out_dir: Path) -> Path:
    """Write rows as results.csv or results.json; returns the file written."""
    if not rows:
        raise ValueError("no result rows to write")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown result format: {fmt}")
    rows = sorted(rows, key=ResultRow.sort_key)
    path = out_dir / f"results.{fmt}"
    try:
        with _open_for_write(path) as handle:
            if fmt == "csv":
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                writer.writerows(row.csv_values() for row in rows)
            else:
                envelope = {
                    "schema": SCHEMA_VERSION,
                    "rows": [row.model_dump(mode="json") for row in rows],
                }
                handle.write(json.dumps(envelope, indent=2) + "\n")
    except OSError as exc:
        raise ResultsWriteError(str(path), exc) from exc
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def load_results_json(path: Path) -> list[ResultRow]:
    envelope = json.loads(path.read_text(encoding="utf-8"))
    if envelope.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported result schema {envelope.get('schema')!r}")
    return [ResultRow.model_validate(item) for item in envelope["rows"]]


def load_results_csv(path: Path) -> list[ResultRow]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: header does not match result schema {SCHEMA_VERSION}")
        return [ResultRow.model_validate(record) for record in reader]


def emit_summary(summary: list[SummaryRow], out_dir: Path, with_reference: bool = True) -> Path:
    path = out_dir / "summary.csv"
    header = ["protocol", "axis", "axis_value", "runs"]
    for metric in SUMMARY_METRICS:
        header += [f"{metric}_mean", f"{metric}_ci95"]
    lines = [*summary, published_reference_row()] if with_reference else summary
    try:
        with _open_for_write(path) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for s in lines:
                cells_out = [s.protocol, s.axis, "" if s.axis_value is None else str(s.axis_value)]
                cells_out.append(str(s.runs) if s.runs else "")
                for metric in SUMMARY_METRICS:
                    cells_out.append(str(s.means[metric]) if metric in s.means else "")
                    cells_out.append(str(s.ci95[metric]) if metric in s.ci95 else "")
                writer.writerow(cells_out)
    except OSError as exc:
        raise ResultsWriteError(str(path), exc) from exc
    return path


def emit_config_echo(text: str, out_dir: Path) -> Path:
    path = out_dir / "scenario.resolved"
    try:
        with _open_for_write(path) as handle:
            handle.write(text)
    except OSError as exc:
        raise ResultsWriteError(str(path), exc) from exc
    return path
