"""Cleaning and imputation steps that turn raw nodal data into a solver-ready network.

Each step is a pure ``Network -> Network`` function. :func:`prepare_network`
chains them in the order the CLI uses.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, ImputationError, ImputationWarning, LocationError, NetworkValidationError
from .geo import distance_to_polygon_km, haversine_km
from .network import (
    Bus,
    BusType,
    Interface,
    Line,
    LineKind,
    Network,
    connected_components,
    validate_network,
)

log = logging.getLogger(__name__)

LENGTH_FLOOR_KM = 1.0


@dataclass(frozen=True)
class VoltageClass:
    thermal_limit_mw: float
    reactance_ohm_per_km: float
    sil_mw: float

    def __post_init__(self) -> None:
        if not (self.thermal_limit_mw > 0 and self.reactance_ohm_per_km > 0):
            raise ConfigError("thermal limit and reactance per km must be positive")


# Typical overhead-line values; NOT authoritative. Override per study.
DEFAULT_VOLTAGE_CLASSES: dict[float, VoltageClass] = {
    69.0: VoltageClass(100.0, 0.48, 12.0),
    115.0: VoltageClass(200.0, 0.47, 35.0),
    138.0: VoltageClass(250.0, 0.47, 50.0),
    161.0: VoltageClass(300.0, 0.47, 70.0),
    230.0: VoltageClass(500.0, 0.49, 135.0),
    345.0: VoltageClass(1200.0, 0.37, 390.0),
    500.0: VoltageClass(2500.0, 0.34, 910.0),
    765.0: VoltageClass(5000.0, 0.33, 2250.0),
}


@dataclass(frozen=True)
class LoadabilityParams:
    """Inputs to the line loadability curve used for missing ratings.

    The voltage drop limit is not applied by :func:`loadability_limit`; it is
    assumed to be reflected in the per-voltage table values.
    """

    voltage_classes: dict[float, VoltageClass] = field(
        default_factory=lambda: dict(DEFAULT_VOLTAGE_CLASSES)
    )
    max_angle_deg: float = 45.0
    max_voltage_drop_frac: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.max_angle_deg < 90.0:
            raise ConfigError(f"max_angle_deg must be in (0, 90), got {self.max_angle_deg}")
        if not 0.0 <= self.max_voltage_drop_frac < 1.0:
            raise ConfigError("max_voltage_drop_frac must be in [0, 1)")

    def voltage_class(self, voltage_kv: float) -> tuple[float, VoltageClass]:
        """Exact class if tabulated, else the nearest one (lower voltage on ties)."""
        if not self.voltage_classes:
            raise ConfigError("loadability table is empty")
        if voltage_kv in self.voltage_classes:
            return voltage_kv, self.voltage_classes[voltage_kv]
        key = min(self.voltage_classes, key=lambda v: (abs(v - voltage_kv), v))
        return key, self.voltage_classes[key]


@dataclass(frozen=True)
class PrepConfig:
    boundary_polygon: tuple[tuple[float, float], ...] | None = None
    boundary_buffer_km: float = 100.0
    neighborhood_radius_km: float = 800.0
    large_component_threshold: int | None = 10_000
    loadability: LoadabilityParams = field(default_factory=LoadabilityParams)

    def __post_init__(self) -> None:
        if self.boundary_buffer_km < 0 or self.neighborhood_radius_km < 0:
            raise ConfigError("buffer and radius must be >= 0")


# -- locations --------------------------------------------------------------


def infer_missing_locations(network: Network) -> Network:
    """Give unlocated buses the location of the nearest located bus by hop count.

    Ties at the same hop distance resolve to the mean latitude/longitude of all
    equally near located buses. Only buses that had a location on input count
    as donors.
    """
    missing = [b.id for b in network.buses if b.location is None]
    if not missing:
        return network
    graph = network.graph()
    located = {b.id: b.location for b in network.buses if b.location is not None}

    for comp in connected_components(network):
        if comp.isdisjoint(located):
            raise LocationError(
                f"component containing bus {min(comp)!r} ({len(comp)} buses) has no located bus"
            )

    new_loc: dict[str, tuple[float, float]] = {}
    for bid in missing:
        seen = {bid}
        frontier = [bid]
        while frontier:
            nxt: list[str] = []
            for u in frontier:
                for v in graph.neighbors(u):
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            hits = sorted(v for v in nxt if v in located)
            if hits:
                lat = float(np.mean([located[h][0] for h in hits]))
                lon = float(np.mean([located[h][1] for h in hits]))
                new_loc[bid] = (lat, lon)
                break
            frontier = nxt
    return network.replace_buses(
        replace(b, location=new_loc[b.id]) if b.id in new_loc else b for b in network.buses
    )


def _drop_buses(network: Network, drop: set[str]) -> Network:
    if not drop:
        return network
    return network.subnetwork(b.id for b in network.buses if b.id not in drop)


def filter_by_geography(network: Network, config: PrepConfig) -> Network:
    """Remove buses farther than ``boundary_buffer_km`` outside the boundary polygon."""
    if config.boundary_polygon is None or not network.buses:
        return network
    unlocated = [b.id for b in network.buses if b.location is None]
    if unlocated:
        raise LocationError(f"{len(unlocated)} buses lack locations, e.g. {unlocated[0]!r}")
    lats = [b.location[0] for b in network.buses]
    lons = [b.location[1] for b in network.buses]
    dist = distance_to_polygon_km(lats, lons, config.boundary_polygon)
    drop = {b.id for b, d in zip(network.buses, dist) if d > config.boundary_buffer_km}
    if drop:
        log.info("geographic filter dropped %d buses", len(drop))
    return _drop_buses(network, drop)


# -- topology reduction -------------------------------------------------------


def reduce_radial_buses(network: Network) -> Network:
    """Repeatedly remove buses attached to exactly one other bus.

    Buses whose only neighbour is in another zone are kept so that no
    interface-crossing line disappears. The injection capability of a removed
    bus is passed to its neighbour: a neighbour that gains both injection and
    withdrawal capability becomes unconstrained.
    """
    buses = {b.id: b for b in network.buses}
    lines = {ln.id: ln for ln in network.lines}
    nbrs: dict[str, dict[str, set[str]]] = {bid: {} for bid in buses}
    for ln in lines.values():
        if ln.from_bus == ln.to_bus or ln.from_bus not in buses or ln.to_bus not in buses:
            continue
        nbrs[ln.from_bus].setdefault(ln.to_bus, set()).add(ln.id)
        nbrs[ln.to_bus].setdefault(ln.from_bus, set()).add(ln.id)

    def removable(bid: str) -> bool:
        if len(nbrs[bid]) != 1:
            return False
        (other,) = nbrs[bid]
        return buses[other].zone == buses[bid].zone

    queue = deque(sorted(bid for bid in buses if removable(bid)))
    while queue:
        bid = queue.popleft()
        if bid not in buses or not removable(bid):
            continue
        (other,) = nbrs[bid]
        gone, keep = buses[bid].bus_type, buses[other].bus_type
        merged = BusType.from_flags(
            keep.can_inject or gone.can_inject, keep.can_withdraw or gone.can_withdraw
        )
        buses[other] = replace(buses[other], bus_type=merged)
        for lid in nbrs[bid][other]:
            del lines[lid]
        del nbrs[other][bid]
        del nbrs[bid]
        del buses[bid]
        if removable(other):
            queue.append(other)

    return Network(
        tuple(buses[b.id] for b in network.buses if b.id in buses),
        tuple(ln for ln in network.lines if ln.id in lines),
        network.base_mva,
    )


def drop_dc_elements(network: Network) -> Network:
    """Remove DC lines and any bus they leave without a line."""
    dc = [ln for ln in network.lines if ln.is_dc]
    if not dc:
        return network
    kept = network.replace_lines(ln for ln in network.lines if not ln.is_dc)
    touched = {ln.from_bus for ln in dc} | {ln.to_bus for ln in dc}
    isolated = {bid for bid in touched if bid in kept.bus_by_id and not kept.lines_at[bid]}
    return _drop_buses(kept, isolated)


# -- ratings and reactances ---------------------------------------------------


def loadability_limit(length_km: float, voltage_kv: float, params: LoadabilityParams) -> float:
    """Practical MW limit of a line: thermal when short, angle-limited when long.

    The angular limit is that of a lossless line at nominal voltage on both
    ends, ``V**2 / X * sin(max_angle)``, with ``X`` the total series reactance
    in ohms. Lengths below one kilometre are treated as one kilometre.
    """
    if length_km < 0:
        raise ValueError("length must be >= 0")
    _, vc = params.voltage_class(voltage_kv)
    x_total = vc.reactance_ohm_per_km * max(length_km, LENGTH_FLOOR_KM)
    angular = voltage_kv**2 / x_total * math.sin(math.radians(params.max_angle_deg))
    return min(vc.thermal_limit_mw, angular)


def loadability_curve(lengths_km: Sequence[float], voltage_kv: float, params: LoadabilityParams):
    """Limits over a length sweep, in MW and as multiples of SIL (plot-ready)."""
    _, vc = params.voltage_class(voltage_kv)
    mw = np.array([loadability_limit(d, voltage_kv, params) for d in lengths_km])
    return mw, mw / vc.sil_mw


def _has_rating(ln: Line) -> bool:
    return ln.rating is not None and math.isfinite(ln.rating) and ln.rating > 0


def impute_ratings(network: Network, params: LoadabilityParams) -> Network:
    """Fill missing (or non-positive) ratings from the loadability curve."""
    out = []
    for ln in network.lines:
        if _has_rating(ln):
            out.append(ln)
            continue
        rating = loadability_limit(network.line_length_km(ln), ln.voltage_kv, params)
        out.append(replace(ln, rating=rating))
    return network.replace_lines(out)


def _median(values: list[float]) -> float:
    return float(np.median(values))


def impute_reactances(network: Network) -> Network:
    """Copy missing reactances from same-voltage donors.

    Lines take the reactance of the same-voltage line whose length is nearest
    (smaller id on ties). Transformers take the median of same-voltage
    transformers. Without a same-voltage donor the nearest voltage class is
    used and an :class:`ImputationWarning` is issued.
    """
    targets = [ln for ln in network.lines if ln.reactance is None]
    if not targets:
        return network

    donors: dict[LineKind, dict[float, list[Line]]] = {k: {} for k in LineKind}
    for ln in sorted(network.lines, key=lambda x: x.id):
        if ln.reactance is not None and ln.reactance > 0 and not ln.is_dc:
            donors[ln.kind].setdefault(ln.voltage_kv, []).append(ln)

    lengths: dict[str, float] = {}

    def length(ln: Line) -> float:
        if ln.id not in lengths:
            lengths[ln.id] = network.line_length_km(ln)
        return lengths[ln.id]

    filled: dict[str, float] = {}
    for ln in targets:
        pool = donors[ln.kind]
        if not pool:
            raise ImputationError(f"no {ln.kind.value} with known reactance to copy for {ln.id!r}")
        voltage = ln.voltage_kv
        if voltage not in pool:
            voltage = min(pool, key=lambda v: (abs(v - ln.voltage_kv), v))
            warnings.warn(
                f"{ln.id}: no {ln.voltage_kv:g} kV {ln.kind.value} donor, using {voltage:g} kV",
                ImputationWarning,
                stacklevel=2,
            )
        candidates = pool[voltage]
        if ln.kind is LineKind.TRANSFORMER:
            filled[ln.id] = _median([d.reactance for d in candidates])
        else:
            target_len = length(ln)
            best = min(candidates, key=lambda d: (abs(length(d) - target_len), d.id))
            filled[ln.id] = best.reactance

    return network.replace_lines(
        replace(ln, reactance=filled[ln.id]) if ln.id in filled else ln for ln in network.lines
    )


# -- per-interface neighbourhood -----------------------------------------------


def neighborhood_filter(network: Network, interface: Interface, config: PrepConfig) -> Network:
    """Restrict a large component to buses near the interface.

    Keeps buses within ``neighborhood_radius_km`` of an endpoint of any
    crossing line, then only the connected pieces that still contain crossing
    lines. Networks at or below ``large_component_threshold`` buses are
    returned unchanged.
    """
    threshold = config.large_component_threshold
    if threshold is None or len(network.buses) <= threshold:
        return network
    unlocated = [b.id for b in network.buses if b.location is None]
    if unlocated:
        raise LocationError(f"neighborhood filter needs locations; {unlocated[0]!r} has none")

    ends = sorted(
        {e for lid in interface.line_ids for e in (network.line_by_id[lid].from_bus, network.line_by_id[lid].to_bus)}
    )
    end_lat = np.array([network.bus_by_id[e].location[0] for e in ends])
    end_lon = np.array([network.bus_by_id[e].location[1] for e in ends])
    lat = np.array([b.location[0] for b in network.buses])
    lon = np.array([b.location[1] for b in network.buses])
    dist = haversine_km(lat[:, None], lon[:, None], end_lat[None, :], end_lon[None, :]).min(axis=1)
    near = network.subnetwork(
        b.id for b, d in zip(network.buses, dist) if d <= config.neighborhood_radius_km
    )

    crossing_ends = set(ends)
    keep: set[str] = set()
    for comp in connected_components(near):
        if comp & crossing_ends:
            keep |= comp
    return near.subnetwork(keep)


# -- full pipeline ---------------------------------------------------------------


def prepare_network(network: Network, config: PrepConfig | None = None) -> Network:
    """Run every cleaning step and check the result.

    Order: drop DC elements, infer locations, geographic filter, radial
    reduction, reactance imputation, rating imputation. Location inference is
    skipped for datasets that carry no locations at all.

    Raises:
        NetworkValidationError: if the cleaned network is still not solver-ready.
    """
    config = config or PrepConfig()
    net = drop_dc_elements(network)
    if any(b.location is not None for b in net.buses):
        net = infer_missing_locations(net)
    net = filter_by_geography(net, config)
    net = reduce_radial_buses(net)
    net = impute_reactances(net)
    net = impute_ratings(net, config.loadability)
    report = validate_network(net)
    if not report.ok:
        raise NetworkValidationError(report)
    return net
