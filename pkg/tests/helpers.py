"""Small network builders shared by the test modules."""

from itl.network import Bus, BusType, Line, LineKind, Network


def net(buses, lines) -> Network:
    """``buses``: (id, zone[, type[, (lat, lon)]]); ``lines``: (id, from, to[, x[, rating[, kv]]])."""
    bs = []
    for spec in buses:
        bid, zone, *rest = spec
        btype = rest[0] if rest else BusType.UNCONSTRAINED
        loc = rest[1] if len(rest) > 1 else None
        bs.append(Bus(bid, zone, btype, loc))
    ls = []
    for spec in lines:
        lid, f, t, *rest = spec
        x = rest[0] if rest else 0.1
        r = rest[1] if len(rest) > 1 else 100.0
        kv = rest[2] if len(rest) > 2 else 230.0
        ls.append(Line(lid, f, t, x, r, kv))
    return Network(tuple(bs), tuple(ls))


def triangle(zones=("z1", "z2", "z2"), x=(0.1, 0.1, 0.1), ratings=(100.0, 100.0, 100.0)) -> Network:
    """Buses A, B, C and lines A|B, B|C, C|A."""
    return net(
        [(b, z) for b, z in zip("ABC", zones)],
        [(f"{f}|{t}", f, t, xi, r) for (f, t), xi, r in zip((("A", "B"), ("B", "C"), ("C", "A")), x, ratings)],
    )


__all__ = ["net", "triangle", "Bus", "BusType", "Line", "LineKind", "Network"]
