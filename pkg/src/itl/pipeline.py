"""End-to-end run: load, prepare, solve n-0/n-1, aggregate, write results.

Output directory layout::

    itl.csv              one row per interface, direction and contingency level
    flows/*.csv          line,flow_mw,rating_mw,dual for every solve
    injections/*.csv     bus,injection_mw for every solve
    stats.csv            scope,interface,level,metric,value (long format)
    region_itl.csv       region-level rows, same columns as itl.csv   (with regions)
    aggregation.csv      direct vs summed region limits               (with regions)
    run_manifest.json    config echo, input hashes, library versions, counts,
                         and per-stage seconds when record_timings is set

Without record_timings every file is byte-identical across runs on the same
inputs. MW values carry 3 decimals, ratios and duals 6.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import re
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import networkx
import numpy
import scipy
import shapely

from . import __version__
from .contingency import (
    ContingencyResult,
    aggregate_direct,
    aggregate_direct_n1,
    aggregate_summed,
    compare_direct_vs_summed,
    compute_all_contingencies,
)
from .errors import ItlError
from .io import RunConfig, load_network, load_region_mapping
from .lp import Tolerances
from .network import Network, build_interfaces
from .prep import prepare_network
from .solver import BOTH_DIRECTIONS, Direction, ItlResult, compute_all_itls
from .stats import ItlRecord, compute_summary

log = logging.getLogger(__name__)

ITL_HEADER = ["interface", "direction", "level", "itl_mw", "rating_sum_mw", "removed_line", "binding_lines", "status"]

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def fmt_mw(x: float) -> str:
    if x is None or math.isnan(x):
        return ""
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def fmt_ratio(x: float) -> str:
    if x is None or math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf"
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def directions_for(setting: str) -> tuple[Direction, ...]:
    return {"both": BOTH_DIRECTIONS, "forward": (Direction.FORWARD,), "reverse": (Direction.REVERSE,)}[setting]


def to_record(result: ItlResult, level: str, removed_line: str | None = None) -> ItlRecord:
    itl = result.itl_mw if math.isnan(result.itl_mw) else round(result.itl_mw, 3) + 0.0
    return ItlRecord(
        interface=result.interface.name,
        direction=result.direction.value,
        level=level,
        itl_mw=itl,
        rating_sum_mw=round(result.rating_sum_mw, 3) + 0.0,
        removed_line=removed_line or "",
        binding_lines=";".join(result.binding_lines),
        status=result.status,
    )


def contingency_records(results: Sequence[ContingencyResult], run_n1: bool) -> list[ItlRecord]:
    out = []
    for c in results:
        out.append(to_record(c.n0, "n-0"))
        if run_n1:
            out.append(to_record(c.n1, "n-1", c.removed_line))
    return out


def read_itl_csv(path: str | Path) -> list[ItlRecord]:
    """Read itl.csv (or region_itl.csv) back into records."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            ItlRecord(
                interface=row["interface"],
                direction=row["direction"],
                level=row["level"],
                itl_mw=float(row["itl_mw"]) if row["itl_mw"] else math.nan,
                rating_sum_mw=float(row["rating_sum_mw"]),
                removed_line=row["removed_line"],
                binding_lines=row["binding_lines"],
                status=row["status"],
            )
            for row in csv.DictReader(fh)
        ]


class _Writer:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []

    def csv(self, rel: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        self.files.append(rel)

    def json(self, rel: str, payload) -> None:
        path = self.root / rel
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.files.append(rel)


def _itl_rows(records: Iterable[ItlRecord]):
    for r in records:
        yield [r.interface, r.direction, r.level, fmt_mw(r.itl_mw), fmt_mw(r.rating_sum_mw), r.removed_line, r.binding_lines, r.status]


def _solve_files(writer: _Writer, prefix: str, result: ItlResult, level: str) -> None:
    if not result.ok or not result.flows:
        return
    stem = f"{prefix}{_safe(result.interface.zone_a)}__{_safe(result.interface.zone_b)}_{result.direction.value}_{level.replace('-', '')}"
    writer.csv(
        f"flows/{stem}.csv",
        ["line", "flow_mw", "rating_mw", "dual"],
        (
            [lid, fmt_mw(result.flows[lid]), fmt_mw(result.ratings[lid]), fmt_ratio(result.rating_duals[lid])]
            for lid in sorted(result.flows)
        ),
    )
    writer.csv(
        f"injections/{stem}.csv",
        ["bus", "injection_mw"],
        ([b, fmt_mw(result.injections[b])] for b in sorted(result.injections)),
    )


def _stat_value(metric: str, value: float) -> str:
    if metric == "interfaces" or metric.startswith("count_"):
        return str(int(value))
    return fmt_mw(value) if metric.endswith("_mw") else fmt_ratio(value)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class PipelineOutcome:
    exit_code: int
    output_dir: Path
    files: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    error: str | None = None
    network: Network | None = None
    zonal: list[ContingencyResult] = field(default_factory=list)
    regional: list[ContingencyResult] = field(default_factory=list)


def run_pipeline(config: RunConfig) -> PipelineOutcome:
    """Run every stage and write the output directory.

    Fatal problems (unreadable inputs, failed validation) give exit code 1 and
    an ``error.json`` report; individual interface failures give exit code 2.
    """
    out_dir = config.output_dir
    timings: dict[str, float] = {}

    @contextmanager
    def timed(stage: str):
        t0 = time.perf_counter()
        yield
        timings[stage] = round(time.perf_counter() - t0, 6)

    try:
        config.check_paths()
        out_dir.mkdir(parents=True, exist_ok=True)
        for sub in ("flows", "injections"):
            shutil.rmtree(out_dir / sub, ignore_errors=True)
        (out_dir / "error.json").unlink(missing_ok=True)

        with timed("load"):
            raw = load_network(config.buses, config.lines)
            mapping = load_region_mapping(config.regions) if config.regions else None
        with timed("prep"):
            network = prepare_network(raw, config.prep)
        directions = directions_for(config.directions)
        with timed("zonal"):
            zonal = _zonal(network, directions, config)
        regional: list[ContingencyResult] = []
        comparison = []
        if mapping is not None:
            with timed("aggregation"):
                regional, comparison = _regional(network, mapping, zonal, directions, config)
    except (ItlError, OSError) as exc:
        log.error("fatal: %s", exc)
        out_dir.mkdir(parents=True, exist_ok=True)
        report = {"error": type(exc).__name__, "message": str(exc)}
        (out_dir / "error.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return PipelineOutcome(EXIT_FATAL, out_dir, error=str(exc))

    writer = _Writer(out_dir)
    with timed("write"):
        records = contingency_records(zonal, config.run_n1)
        writer.csv("itl.csv", ITL_HEADER, _itl_rows(records))
        for c in zonal:
            _solve_files(writer, "", c.n0, "n-0")
            if config.run_n1:
                _solve_files(writer, "", c.n1, "n-1")
        stats = compute_summary(records)
        writer.csv(
            "stats.csv",
            ["scope", "interface", "level", "metric", "value"],
            ([s, i, lvl, m, _stat_value(m, v)] for s, i, lvl, m, v in stats.rows()),
        )
        if mapping is not None:
            writer.csv("region_itl.csv", ITL_HEADER, _itl_rows(contingency_records(regional, config.run_n1)))
            for c in regional:
                _solve_files(writer, "region_", c.n0, "n-0")
                if config.run_n1:
                    _solve_files(writer, "region_", c.n1, "n-1")
            writer.csv(
                "aggregation.csv",
                ["region_a", "region_b", "direction", "direct_n0_mw", "summed_n0_mw", "direct_n1_mw",
                 "summed_n1_mw", "rating_sum_mw", "summed_n0_ge_direct", "summed_n1_le_direct", "partial"],
                (
                    [row.region_a, row.region_b, row.direction.value, fmt_mw(row.direct_n0), fmt_mw(row.summed_n0),
                     fmt_mw(row.direct_n1), fmt_mw(row.summed_n1), fmt_mw(row.rating_sum_mw),
                     str(row.summed_n0_ge_direct).lower(),
                     "" if math.isnan(row.direct_n1) else str(row.summed_n1_le_direct).lower(),
                     str(row.partial).lower()]
                    for row in comparison
                ),
            )

    failures = sorted(
        {f"{c.interface.name} {c.direction.value}" for c in zonal + regional
         if c.n0.status == "error" or (config.run_n1 and c.n1.status == "error")}
    )
    exit_code = EXIT_PARTIAL if failures else EXIT_OK
    manifest = {
        "tool": "itl",
        "version": __version__,
        "config": config.source,
        "inputs": {
            p.name: _sha256(p) for p in (config.buses, config.lines, config.regions) if p is not None
        },
        "versions": {
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "networkx": networkx.__version__,
            "shapely": shapely.__version__,
        },
        "counts": {
            "raw_buses": len(raw.buses),
            "raw_lines": len(raw.lines),
            "buses": len(network.buses),
            "lines": len(network.lines),
            "zones": len(network.zones),
            "interfaces": len(build_interfaces(network)),
            "solves": sum(1 + (1 if config.run_n1 and c.removed_line and c.n1.flows else 0) for c in zonal + regional),
        },
        "exit_code": exit_code,
        "failures": failures,
        "outputs": sorted(writer.files),
    }
    if config.record_timings:
        # wall-clock seconds; leaves the manifest non-reproducible, hence opt-in
        manifest["timings"] = timings
    for stage, secs in timings.items():
        log.info("stage %s: %.3f s", stage, secs)
    writer.json("run_manifest.json", manifest)
    return PipelineOutcome(exit_code, out_dir, sorted(writer.files), failures, None, network, zonal, regional)


def _tol(config: RunConfig) -> Tolerances:
    return Tolerances(config.feasibility_tol, config.optimality_tol)


def _zonal(network: Network, directions, config: RunConfig) -> list[ContingencyResult]:
    if config.run_n1:
        return compute_all_contingencies(network, directions, config.prep, config.slack_bus, _tol(config))
    return [
        ContingencyResult(r.interface, r.direction, r, None, r)
        for r in compute_all_itls(network, directions, config.prep, config.slack_bus, tol=_tol(config))
    ]


def _regional(network, mapping, zonal, directions, config: RunConfig):
    if config.run_n1:
        regional = aggregate_direct_n1(network, mapping, directions, config.prep, config.slack_bus, _tol(config))
        direct_n0 = [c.n0 for c in regional]
    else:
        direct_n0 = aggregate_direct(network, mapping, directions, config.prep, config.slack_bus, _tol(config))
        regional = [ContingencyResult(r.interface, r.direction, r, None, r) for r in direct_n0]
    expected = build_interfaces(network)
    summed_n0 = aggregate_summed([c.n0 for c in zonal], mapping, "n-0", directions, expected)
    if config.run_n1:
        summed_n1 = aggregate_summed([c.n1 for c in zonal], mapping, "n-1", directions, expected)
        comparison = compare_direct_vs_summed(direct_n0, summed_n0, regional, summed_n1)
    else:
        comparison = compare_direct_vs_summed(direct_n0, summed_n0)
    return regional, comparison
