"""Random test networks: tiny ones for property sweeps and a meshed 500-bus grid."""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay

from .geo import haversine_km
from .network import Bus, BusType, Line, LineKind, Network
from .prep import DEFAULT_VOLTAGE_CLASSES, LoadabilityParams, loadability_limit

_TYPES = (BusType.UNCONSTRAINED, BusType.GENERATOR, BusType.LOAD, BusType.TRANSMISSION)


def random_network(
    rng: np.random.Generator,
    n_buses: int = 8,
    n_lines: int = 12,
    n_zones: int = 3,
    typed: bool = False,
) -> Network:
    """Connected random network: a random spanning tree plus extra (possibly parallel) lines.

    Every zone gets at least one bus. With ``typed`` each bus draws a random
    bus type; otherwise all buses are unconstrained.
    """
    if n_lines < n_buses - 1:
        raise ValueError("need at least n_buses - 1 lines for a connected network")
    if not 1 <= n_zones <= n_buses:
        raise ValueError("need 1 <= n_zones <= n_buses")
    ids = [f"b{i:02d}" for i in range(n_buses)]
    zones = np.concatenate([np.arange(n_zones), rng.integers(0, n_zones, n_buses - n_zones)])
    rng.shuffle(zones)
    types = rng.choice(len(_TYPES), n_buses) if typed else np.zeros(n_buses, dtype=int)
    buses = tuple(Bus(ids[i], f"z{zones[i]}", _TYPES[types[i]]) for i in range(n_buses))

    order = rng.permutation(n_buses)
    edges = [(order[k], order[rng.integers(0, k)]) for k in range(1, n_buses)]
    while len(edges) < n_lines:
        a, b = rng.choice(n_buses, 2, replace=False)
        edges.append((a, b))
    lines = tuple(
        Line(
            id=f"L{k:02d}",
            from_bus=ids[a],
            to_bus=ids[b],
            reactance=float(np.round(rng.uniform(0.01, 0.2), 4)),
            rating=float(np.round(rng.uniform(50.0, 500.0))),
            voltage_kv=230.0,
        )
        for k, (a, b) in enumerate(edges)
    )
    return Network(buses, lines)


def random_mapping(rng: np.random.Generator, zones, n_regions: int) -> dict[str, str]:
    """Random surjective zone -> region map (fewer regions if there are fewer zones)."""
    zones = sorted(zones)
    n_regions = min(n_regions, len(zones))
    labels = np.concatenate([np.arange(n_regions), rng.integers(0, n_regions, len(zones) - n_regions)])
    rng.shuffle(labels)
    return {z: f"R{labels[i]}" for i, z in enumerate(zones)}


def _reactance_pu(length_km: float, voltage_kv: float, base_mva: float = 100.0) -> float:
    ohm = DEFAULT_VOLTAGE_CLASSES[voltage_kv].reactance_ohm_per_km * max(length_km, 1.0)
    return ohm * base_mva / voltage_kv**2


def synthetic_grid(
    n_buses: int = 500,
    n_zones: int = 20,
    seed: int = 0,
    n_regions: int = 4,
    extra_edge_frac: float = 0.25,
) -> tuple[Network, dict[str, str]]:
    """Meshed synthetic transmission grid with the defects real nodal data has.

    Buses are scattered over a 15 x 20 degree box and grouped into zones by
    nearest zone seed. Lines are a minimum spanning tree of the Delaunay
    triangulation plus a random share of the remaining Delaunay edges. On top
    of that the case carries: a few radial spur buses, one DC link, missing
    ratings, missing reactances and missing bus locations, and a mix of bus
    types. Returns the network and a zone -> region map grouping zones by
    longitude.
    """
    rng = np.random.default_rng(seed)
    lat = rng.uniform(30.0, 45.0, n_buses)
    lon = rng.uniform(-110.0, -90.0, n_buses)
    seeds = rng.choice(n_buses, n_zones, replace=False)
    d2 = (lat[:, None] - lat[seeds][None, :]) ** 2 + (lon[:, None] - lon[seeds][None, :]) ** 2
    zone_idx = np.argmin(d2, axis=1)

    tri = Delaunay(np.column_stack([lon, lat]))
    edges = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = sorted((int(simplex[i]), int(simplex[(i + 1) % 3])))
            edges.add((a, b))
    edges = sorted(edges)
    ea = np.array([e[0] for e in edges])
    eb = np.array([e[1] for e in edges])
    length = haversine_km(lat[ea], lon[ea], lat[eb], lon[eb])
    mst = minimum_spanning_tree(coo_matrix((length, (ea, eb)), shape=(n_buses, n_buses))).tocoo()
    tree = {tuple(sorted((int(a), int(b)))) for a, b in zip(mst.row, mst.col)}
    keep = [e for e in edges if e in tree or rng.random() < extra_edge_frac]

    ids = [f"N{i:04d}" for i in range(n_buses)]
    type_draw = rng.choice(4, n_buses, p=[0.55, 0.2, 0.2, 0.05])
    buses = [
        Bus(ids[i], f"Z{zone_idx[i]:02d}", _TYPES[type_draw[i]], (float(lat[i]), float(lon[i])))
        for i in range(n_buses)
    ]

    params = LoadabilityParams()
    lines = []
    for k, (a, b) in enumerate(keep):
        km = float(haversine_km(lat[a], lon[a], lat[b], lon[b]))
        kv = 500.0 if km > 150 else (345.0 if km > 80 else 230.0)
        rating = round(loadability_limit(km, kv, params) * rng.uniform(0.8, 1.2), 1)
        lines.append(
            Line(f"L{k:04d}", ids[a], ids[b], round(_reactance_pu(km, kv), 6), rating, kv)
        )

    # radial spurs: chains of one or two buses hanging off random buses
    n_spurs = max(1, n_buses // 40)
    for s, host in enumerate(rng.choice(n_buses, n_spurs, replace=False)):
        prev = ids[host]
        for depth in range(1 + s % 2):
            bid = f"S{s:03d}{depth}"
            hlat, hlon = lat[host] + 0.05 * (depth + 1), lon[host] + 0.05 * (depth + 1)
            buses.append(Bus(bid, f"Z{zone_idx[host]:02d}", _TYPES[rng.choice(3)], (float(hlat), float(hlon))))
            lines.append(Line(f"R{s:03d}{depth}", prev, bid, 0.01, 200.0, 230.0))
            prev = bid

    # one DC link between two distant buses
    a, b = int(np.argmin(lon)), int(np.argmax(lon))
    lines.append(Line("DC0001", ids[a], ids[b], None, 2000.0, 500.0, LineKind.LINE, True))

    # transformers between a 345/500 kV pair of co-located buses (one per zone seed)
    for z, host in enumerate(seeds[: max(1, n_zones // 4)]):
        bid = f"T{z:03d}"
        buses.append(Bus(bid, f"Z{zone_idx[host]:02d}", BusType.UNCONSTRAINED, (float(lat[host]), float(lon[host]))))
        lines.append(Line(f"X{z:03d}", ids[host], bid, 0.005 + 0.001 * z, 1500.0, 345.0, LineKind.TRANSFORMER))
        lines.append(Line(f"X{z:03d}b", bid, ids[(host + 1) % n_buses], 0.02, 800.0, 345.0))

    # missing data
    lines = [
        Line(
            ln.id, ln.from_bus, ln.to_bus,
            None if (not ln.is_dc and ln.kind is LineKind.LINE and rng.random() < 0.05) else ln.reactance,
            None if (not ln.is_dc and rng.random() < 0.08) else ln.rating,
            ln.voltage_kv, ln.kind, ln.is_dc,
        )
        for ln in lines
    ]
    buses = [
        Bus(bus.id, bus.zone, bus.bus_type, None) if rng.random() < 0.03 else bus for bus in buses
    ]

    network = Network(tuple(buses), tuple(lines))
    centers = sorted(network.zones, key=lambda z: (float(np.mean(lon[zone_idx == int(z[1:])])), z))
    mapping = {z: f"R{i * n_regions // len(centers)}" for i, z in enumerate(centers)}
    return network, mapping
