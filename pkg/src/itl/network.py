"""Core domain types: buses, lines, networks and zonal interfaces.

Networks are immutable. Every transformation in the package returns a new
``Network`` built with :meth:`Network.replace_buses` / :meth:`Network.replace_lines`
or one of the subsetting helpers.

Zone ordering is plain ``str`` comparison. Python compares strings by code
point, which coincides with byte-wise comparison of their UTF-8 encodings, so
"the alphanumerically first zone" is the same on every platform.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx


class BusType(Enum):
    GENERATOR = "gen"
    LOAD = "load"
    TRANSMISSION = "trans"
    UNCONSTRAINED = ""

    @classmethod
    def from_flags(cls, can_inject: bool, can_withdraw: bool) -> "BusType":
        """Map injection capabilities to a type; both capabilities means no constraint."""
        if can_inject and can_withdraw:
            return cls.UNCONSTRAINED
        if can_inject:
            return cls.GENERATOR
        if can_withdraw:
            return cls.LOAD
        return cls.TRANSMISSION

    @property
    def can_inject(self) -> bool:
        return self in (BusType.GENERATOR, BusType.UNCONSTRAINED)

    @property
    def can_withdraw(self) -> bool:
        return self in (BusType.LOAD, BusType.UNCONSTRAINED)


class LineKind(Enum):
    LINE = "line"
    TRANSFORMER = "transformer"


@dataclass(frozen=True)
class Bus:
    """A network node.

    Attributes:
        id: Unique bus identifier.
        zone: Zone the bus belongs to.
        bus_type: Injection constraint class of the bus.
        location: ``(latitude, longitude)`` in degrees, or ``None`` if unknown.
    """

    id: str
    zone: str
    bus_type: BusType = BusType.UNCONSTRAINED
    location: tuple[float, float] | None = None


@dataclass(frozen=True)
class Line:
    """A branch (line or transformer) from ``from_bus`` to ``to_bus``.

    ``reactance`` is per-unit on the system base and ``rating`` is in MW; either
    may be ``None`` before data preparation fills it in.
    """

    id: str
    from_bus: str
    to_bus: str
    reactance: float | None
    rating: float | None
    voltage_kv: float
    kind: LineKind = LineKind.LINE
    is_dc: bool = False


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_mva: float = 100.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))

    @cached_property
    def bus_by_id(self) -> dict[str, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def line_by_id(self) -> dict[str, Line]:
        return {ln.id: ln for ln in self.lines}

    @cached_property
    def zone_of(self) -> dict[str, str]:
        return {b.id: b.zone for b in self.buses}

    @cached_property
    def bus_ids(self) -> list[str]:
        """Bus ids in sorted order."""
        return sorted(self.bus_by_id)

    @cached_property
    def line_ids(self) -> list[str]:
        """Line ids in sorted order."""
        return sorted(self.line_by_id)

    @cached_property
    def lines_at(self) -> dict[str, list[Line]]:
        """Incident lines per bus, sorted by line id."""
        at: dict[str, list[Line]] = defaultdict(list)
        for ln in sorted(self.lines, key=lambda x: x.id):
            at[ln.from_bus].append(ln)
            at[ln.to_bus].append(ln)
        return {b: at.get(b, []) for b in self.bus_by_id}

    @cached_property
    def zones(self) -> list[str]:
        return sorted({b.zone for b in self.buses})

    def graph(self) -> nx.MultiGraph:
        """AC connectivity graph; DC lines and dangling lines are left out."""
        g = nx.MultiGraph()
        g.add_nodes_from(self.bus_ids)
        for ln in self.lines:
            if ln.is_dc or ln.from_bus not in self.bus_by_id or ln.to_bus not in self.bus_by_id:
                continue
            g.add_edge(ln.from_bus, ln.to_bus, key=ln.id)
        return g

    def crosses_zones(self, line: Line) -> bool:
        return self.zone_of[line.from_bus] != self.zone_of[line.to_bus]

    def line_length_km(self, line: Line) -> float:
        """Great-circle distance between the line's endpoints; zero for transformers."""
        from .geo import haversine_km

        if line.kind is LineKind.TRANSFORMER:
            return 0.0
        a = self.bus_by_id[line.from_bus].location
        b = self.bus_by_id[line.to_bus].location
        if a is None or b is None:
            raise ValueError(f"line {line.id} has an endpoint without a location")
        return float(haversine_km(a[0], a[1], b[0], b[1]))

    # -- derived networks -------------------------------------------------

    def replace_buses(self, buses: Iterable[Bus]) -> "Network":
        return Network(tuple(buses), self.lines, self.base_mva)

    def replace_lines(self, lines: Iterable[Line]) -> "Network":
        return Network(self.buses, tuple(lines), self.base_mva)

    def subnetwork(self, bus_ids: Iterable[str]) -> "Network":
        """Buses in ``bus_ids`` and every line with both endpoints among them."""
        keep = set(bus_ids)
        return Network(
            tuple(b for b in self.buses if b.id in keep),
            tuple(ln for ln in self.lines if ln.from_bus in keep and ln.to_bus in keep),
            self.base_mva,
        )

    def without_lines(self, line_ids: Iterable[str]) -> "Network":
        drop = set(line_ids)
        return self.replace_lines(ln for ln in self.lines if ln.id not in drop)

    def with_zones(self, mapping: Mapping[str, str]) -> "Network":
        """Relabel every bus zone through ``mapping`` (zone -> new zone)."""
        return self.replace_buses(replace(b, zone=mapping[b.zone]) for b in self.buses)


@dataclass(frozen=True)
class Interface:
    """Zone pair ``zone_a < zone_b`` with its oriented crossing lines.

    Orientation is ``+1`` when the line's ``from_bus`` lies in ``zone_a`` and
    ``-1`` when it lies in ``zone_b``. Lines themselves are never flipped.
    """

    zone_a: str
    zone_b: str
    crossing_lines: tuple[tuple[str, int], ...]

    @property
    def name(self) -> str:
        return f"{self.zone_a}||{self.zone_b}"

    @property
    def line_ids(self) -> list[str]:
        return [lid for lid, _ in self.crossing_lines]

    @property
    def orientation(self) -> dict[str, int]:
        return dict(self.crossing_lines)

    def rating_sum(self, network: Network) -> float:
        """Unsigned sum of crossing-line ratings."""
        return float(sum(network.line_by_id[lid].rating or 0.0 for lid in self.line_ids))

    def without(self, line_id: str) -> "Interface":
        """The same zone pair minus one crossing line (may leave it empty)."""
        return replace(self, crossing_lines=tuple(c for c in self.crossing_lines if c[0] != line_id))


def build_interfaces(network: Network) -> list[Interface]:
    """One interface per zone pair joined by at least one AC line.

    The result is sorted by ``(zone_a, zone_b)`` and each interface lists its
    crossing lines sorted by id, so the output does not depend on input order.
    """
    by_pair: dict[tuple[str, str], list[tuple[str, int]]] = defaultdict(list)
    zone_of = network.zone_of
    for ln in network.lines:
        if ln.is_dc or ln.from_bus not in zone_of or ln.to_bus not in zone_of:
            continue
        zf, zt = zone_of[ln.from_bus], zone_of[ln.to_bus]
        if zf == zt:
            continue
        if zf < zt:
            by_pair[(zf, zt)].append((ln.id, +1))
        else:
            by_pair[(zt, zf)].append((ln.id, -1))
    return [
        Interface(za, zb, tuple(sorted(by_pair[(za, zb)])))
        for za, zb in sorted(by_pair)
    ]


def connected_components(network: Network) -> list[frozenset[str]]:
    """Maximal sets of buses joined by AC lines, ordered by their smallest bus id."""
    comps = [frozenset(c) for c in nx.connected_components(network.graph())]
    return sorted(comps, key=min)


@dataclass(frozen=True)
class Violation:
    kind: str
    element: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.element}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def kinds(self) -> list[str]:
        return [v.kind for v in self.violations]


def _positive(x: float | None) -> bool:
    return x is not None and math.isfinite(x) and x > 0


def validate_network(network: Network) -> ValidationReport:
    """Collect every invariant violation; an empty report means solver-ready."""
    report = ValidationReport()
    add = report.violations.append

    seen: set[str] = set()
    for b in network.buses:
        if b.id in seen:
            add(Violation("duplicate-bus", b.id, "bus id appears more than once"))
        seen.add(b.id)
        if not b.zone:
            add(Violation("missing-zone", b.id, "bus has no zone"))

    seen = set()
    for ln in network.lines:
        if ln.id in seen:
            add(Violation("duplicate-line", ln.id, "line id appears more than once"))
        seen.add(ln.id)
        for end in (ln.from_bus, ln.to_bus):
            if end not in network.bus_by_id:
                add(Violation("dangling-endpoint", ln.id, f"references unknown bus {end!r}"))
        if ln.from_bus == ln.to_bus:
            add(Violation("self-loop", ln.id, "from_bus equals to_bus"))
        if ln.reactance is None:
            add(Violation("missing-reactance", ln.id, "reactance is missing"))
        elif not _positive(ln.reactance):
            add(Violation("nonpositive-reactance", ln.id, f"reactance {ln.reactance} is not > 0"))
        if ln.rating is None:
            add(Violation("missing-rating", ln.id, "rating is missing"))
        elif not _positive(ln.rating):
            add(Violation("nonpositive-rating", ln.id, f"rating {ln.rating} is not > 0"))
        if not _positive(ln.voltage_kv):
            add(Violation("nonpositive-voltage", ln.id, f"voltage {ln.voltage_kv} kV is not > 0"))
        if ln.is_dc:
            add(Violation("dc-line", ln.id, "DC lines must be dropped before solving"))
    return report
