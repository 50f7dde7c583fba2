"""n-1 interface limits and aggregation of zones into planning regions."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ItlError
from .lp import Tolerances
from .network import Interface, Network, build_interfaces
from .prep import PrepConfig
from .ptdf import remove_line_recompute
from .solver import (
    BOTH_DIRECTIONS,
    CaseBuilder,
    Direction,
    InterfaceCase,
    ItlResult,
    SkipInterface,
    compute_all_itls,
    compute_itl,
    failed_result,
    solve_case,
    zero_result,
)

log = logging.getLogger(__name__)

RegionMapping = Mapping[str, str]

FLOW_TIE_TOL = 1e-6


@dataclass
class ContingencyResult:
    interface: Interface
    direction: Direction
    n0: ItlResult
    removed_line: str | None
    n1: ItlResult

    @property
    def ok(self) -> bool:
        return self.n0.ok and self.n1.ok


def select_outage(n0: ItlResult) -> str:
    """Crossing line with the largest absolute n-0 flow; smallest id among near-ties."""
    flows = {lid: abs(n0.flows.get(lid, 0.0)) for lid in n0.interface.line_ids}
    top = max(flows.values())
    return min(lid for lid, f in flows.items() if f >= top - FLOW_TIE_TOL)


def n1_for_case(case: InterfaceCase, n0: ItlResult, slack_bus: str | None = None) -> ContingencyResult:
    """Drop the heaviest crossing line of ``n0`` and re-solve on what is left.

    If the removal splits the network, each island with a remaining crossing
    line keeps its own balance row; islands without one are ignored.
    """
    iface, d = case.interface, n0.direction
    if not n0.ok:
        note = f"n-0 {n0.status}"
        return ContingencyResult(iface, d, n0, None, failed_result(iface, d, n0.rating_sum_mw, n0.status, note))
    removed = select_outage(n0)
    remaining = iface.without(removed)
    if not remaining.crossing_lines:
        n1 = zero_result(remaining, d, n0.rating_sum_mw, f"no crossing line left after removing {removed}")
        return ContingencyResult(iface, d, n0, removed, n1)

    islands = [
        isl
        for p in case.ptdfs
        if removed in p.line_index
        for isl in remove_line_recompute(
            case.network.subnetwork(p.bus_order), removed, slack_bus or p.slack_bus, remaining
        )
        if isl.has_crossing_lines
    ]
    untouched = [p for p in case.ptdfs if removed not in p.line_index]
    reduced = case.network.without_lines([removed])
    n1 = compute_itl(
        reduced, untouched + [isl.ptdf for isl in islands], remaining, d, n0.rating_sum_mw, case.tol
    )
    if len(islands) > 1:
        n1.notes += (f"removing {removed} split the network into {len(islands)} islands with crossing lines",)
    return ContingencyResult(iface, d, n0, removed, n1)


def compute_n1(
    network: Network,
    interface: Interface,
    direction: Direction,
    n0: ItlResult | None = None,
    config: PrepConfig | None = None,
    slack_bus: str | None = None,
) -> ContingencyResult:
    """n-1 ITL for one interface direction; solves n-0 first unless given."""
    case = CaseBuilder(network, config, slack_bus).build(interface)
    if n0 is None:
        n0 = solve_case(case, direction)
    return n1_for_case(case, n0)


def compute_all_contingencies(
    network: Network,
    directions: Sequence[Direction] = BOTH_DIRECTIONS,
    config: PrepConfig | None = None,
    slack_bus: str | None = None,
    tol: Tolerances = Tolerances(),
) -> list[ContingencyResult]:
    """n-0 and n-1 for every interface direction, ordered by zone pair then direction."""
    builder = CaseBuilder(network, config, slack_bus, tol)
    out = []
    for iface in build_interfaces(network):
        rating_sum = iface.rating_sum(network)
        try:
            case = builder.build(iface)
        except ItlError as exc:
            status = "skipped" if isinstance(exc, SkipInterface) else "error"
            for d in directions:
                bad = failed_result(iface, d, rating_sum, status, str(exc))
                out.append(ContingencyResult(iface, d, bad, None, bad))
            continue
        for d in directions:
            try:
                n0 = solve_case(case, d)
            except ItlError as exc:
                bad = failed_result(iface, d, rating_sum, "error", str(exc))
                out.append(ContingencyResult(iface, d, bad, None, bad))
                continue
            try:
                out.append(n1_for_case(case, n0, slack_bus))
            except ItlError as exc:
                log.warning("%s %s n-1 failed: %s", iface.name, d.value, exc)
                out.append(ContingencyResult(iface, d, n0, None, failed_result(iface, d, rating_sum, "error", str(exc))))
    return out


# -- aggregation ---------------------------------------------------------------------


def _check_mapping(network: Network, mapping: RegionMapping) -> None:
    missing = sorted(set(network.zones) - set(mapping))
    if missing:
        raise ItlError(f"region mapping has no entry for zones {missing}")


def aggregate_direct(
    network: Network,
    mapping: RegionMapping,
    directions: Sequence[Direction] = BOTH_DIRECTIONS,
    config: PrepConfig | None = None,
    slack_bus: str | None = None,
    tol: Tolerances = Tolerances(),
) -> list[ItlResult]:
    """Region-level n-0 limits computed from the region-crossing lines themselves.

    Bus zones are relabelled to regions and the zonal machinery is rerun, so
    each region interface's crossing set is the union of the zone-level lines
    between the two regions.
    """
    _check_mapping(network, mapping)
    return compute_all_itls(network.with_zones(mapping), directions, config, slack_bus, tol=tol)


def aggregate_direct_n1(
    network: Network,
    mapping: RegionMapping,
    directions: Sequence[Direction] = BOTH_DIRECTIONS,
    config: PrepConfig | None = None,
    slack_bus: str | None = None,
    tol: Tolerances = Tolerances(),
) -> list[ContingencyResult]:
    """Like :func:`aggregate_direct`, plus n-1: one line out of the whole region crossing set."""
    _check_mapping(network, mapping)
    return compute_all_contingencies(network.with_zones(mapping), directions, config, slack_bus, tol)


@dataclass
class SummedItl:
    """Region-pair limit obtained by adding constituent zonal limits."""

    region_a: str
    region_b: str
    direction: Direction
    level: str
    itl_mw: float
    constituents: list[tuple[str, Direction]] = field(default_factory=list)
    missing: list[tuple[str, Direction]] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.missing)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.region_a, self.region_b, self.direction.value)


def aggregate_summed(
    zonal_results: Sequence[ItlResult],
    mapping: RegionMapping,
    level: str = "n-0",
    directions: Sequence[Direction] = BOTH_DIRECTIONS,
    expected: Sequence[Interface] | None = None,
) -> list[SummedItl]:
    """Sum zonal ITLs into region-pair ITLs.

    A zonal interface ``za||zb`` contributes to regions ``ra < rb`` in its own
    direction when ``za`` maps to ``ra`` and in the opposite direction when
    ``za`` maps to ``rb``. Constituents without a usable result are listed in
    ``missing`` and the sum covers only what is available. Pass the zonal
    interfaces as ``expected`` to also catch constituents absent from
    ``zonal_results`` altogether.
    """
    by_key = {(r.interface.zone_a, r.interface.zone_b, r.direction): r for r in zonal_results}
    pairs: dict[tuple[str, str], list[tuple[str, str, bool]]] = defaultdict(list)
    zone_pairs = {(r.interface.zone_a, r.interface.zone_b) for r in zonal_results}
    if expected is not None:
        zone_pairs |= {(i.zone_a, i.zone_b) for i in expected}
    for za, zb in sorted(zone_pairs):
        ra, rb = mapping[za], mapping[zb]
        if ra == rb:
            continue
        aligned = ra < rb
        pairs[(ra, rb) if aligned else (rb, ra)].append((za, zb, aligned))

    out = []
    for (ra, rb), members in sorted(pairs.items()):
        for d in directions:
            total, used, missing = 0.0, [], []
            for za, zb, aligned in members:
                zd = d if aligned else d.opposite
                name = f"{za}||{zb}"
                r = by_key.get((za, zb, zd))
                if r is None or not r.ok or math.isnan(r.itl_mw):
                    missing.append((name, zd))
                    continue
                total += r.itl_mw
                used.append((name, zd))
            out.append(SummedItl(ra, rb, d, level, total, used, missing))
    return out


@dataclass
class ComparisonRow:
    region_a: str
    region_b: str
    direction: Direction
    direct_n0: float
    direct_n1: float
    summed_n0: float
    summed_n1: float
    rating_sum_mw: float
    partial: bool

    @property
    def summed_n0_ge_direct(self) -> bool:
        return self.summed_n0 >= self.direct_n0 - 1e-6

    @property
    def summed_n1_le_direct(self) -> bool:
        return self.summed_n1 <= self.direct_n1 + 1e-6


def compare_direct_vs_summed(
    direct_n0: Sequence[ItlResult],
    summed_n0: Sequence[SummedItl],
    direct_n1: Sequence[ContingencyResult] = (),
    summed_n1: Sequence[SummedItl] = (),
) -> list[ComparisonRow]:
    """Side-by-side region-pair table of direct and summed limits.

    The n-0 flag is a guaranteed property (the direct optimum is feasible for
    every constituent problem); the n-1 flag is only an observed tendency.
    n-1 columns are NaN when no n-1 inputs are given.
    """
    s0 = {s.key: s for s in summed_n0}
    s1 = {s.key: s for s in summed_n1}
    d1 = {c.n0.key: c.n1 for c in direct_n1}
    rows = []
    for r in direct_n0:
        key = r.key
        a, b = s0.get(key), s1.get(key)
        rows.append(
            ComparisonRow(
                region_a=key[0],
                region_b=key[1],
                direction=r.direction,
                direct_n0=r.itl_mw,
                direct_n1=d1[key].itl_mw if key in d1 else math.nan,
                summed_n0=a.itl_mw if a else math.nan,
                summed_n1=b.itl_mw if b else math.nan,
                rating_sum_mw=r.rating_sum_mw,
                partial=a is None or a.partial or bool(b and b.partial),
            )
        )
    return rows
