"""CSV network files, region mappings and run configuration.

buses.csv   id,zone,type,lat,lon
            type is one of gen, load, trans or blank (no constraint);
            lat/lon may both be blank.
lines.csv   id,from,to,reactance_pu,rating_mw,voltage_kv,kind,is_dc
            reactance_pu and rating_mw may be blank (imputed during prep);
            kind is line or transformer; is_dc is true/false (also 1/0).
regions.csv zone,region

All files are UTF-8, comma separated, with the header row above.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError, ParseError
from .network import Bus, BusType, Line, LineKind, Network
from .prep import LoadabilityParams, PrepConfig, VoltageClass

BUS_HEADER = ["id", "zone", "type", "lat", "lon"]
LINE_HEADER = ["id", "from", "to", "reactance_pu", "rating_mw", "voltage_kv", "kind", "is_dc"]
REGION_HEADER = ["zone", "region"]

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no", ""}


def _read_rows(path: Path, header: list[str]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(path), None, None, f"cannot open: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise ParseError(str(path), 1, None, "missing header row")
        first = [h.strip() for h in first]
        if first != header:
            raise ParseError(str(path), 1, None, f"header must be {','.join(header)}, got {','.join(first)}")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(str(path), rowno, None, f"expected {len(header)} fields, got {len(row)}")
            yield rowno, dict(zip(header, (c.strip() for c in row)))


def _float(path, rowno, col, text, *, optional=False) -> float | None:
    if text == "":
        if optional:
            return None
        raise ParseError(str(path), rowno, col, "value is required")
    try:
        value = float(text)
    except ValueError:
        raise ParseError(str(path), rowno, col, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(str(path), rowno, col, f"not finite: {text!r}")
    return value


def load_network(buses_path: str | Path, lines_path: str | Path, base_mva: float = 100.0) -> Network:
    """Parse bus and line CSVs into a :class:`Network`.

    Raises:
        ParseError: naming file, row and column of the first schema violation.
    """
    buses_path, lines_path = Path(buses_path), Path(lines_path)
    types = {t.value: t for t in BusType}
    kinds = {k.value: k for k in LineKind}

    buses = []
    for rowno, row in _read_rows(buses_path, BUS_HEADER):
        if not row["id"]:
            raise ParseError(str(buses_path), rowno, "id", "value is required")
        if not row["zone"]:
            raise ParseError(str(buses_path), rowno, "zone", "value is required")
        t = row["type"].lower()
        if t not in types:
            raise ParseError(str(buses_path), rowno, "type", f"unknown bus type {row['type']!r}")
        lat = _float(buses_path, rowno, "lat", row["lat"], optional=True)
        lon = _float(buses_path, rowno, "lon", row["lon"], optional=True)
        if (lat is None) != (lon is None):
            raise ParseError(str(buses_path), rowno, "lat" if lat is None else "lon", "lat and lon must both be given or both blank")
        loc = None if lat is None else (lat, lon)
        buses.append(Bus(row["id"], row["zone"], types[t], loc))

    lines = []
    for rowno, row in _read_rows(lines_path, LINE_HEADER):
        for col in ("id", "from", "to"):
            if not row[col]:
                raise ParseError(str(lines_path), rowno, col, "value is required")
        kind = row["kind"].lower() or "line"
        if kind not in kinds:
            raise ParseError(str(lines_path), rowno, "kind", f"unknown kind {row['kind']!r}")
        dc = row["is_dc"].lower()
        if dc not in _TRUE | _FALSE:
            raise ParseError(str(lines_path), rowno, "is_dc", f"not a boolean: {row['is_dc']!r}")
        lines.append(
            Line(
                id=row["id"],
                from_bus=row["from"],
                to_bus=row["to"],
                reactance=_float(lines_path, rowno, "reactance_pu", row["reactance_pu"], optional=True),
                rating=_float(lines_path, rowno, "rating_mw", row["rating_mw"], optional=True),
                voltage_kv=_float(lines_path, rowno, "voltage_kv", row["voltage_kv"]),
                kind=kinds[kind],
                is_dc=dc in _TRUE,
            )
        )
    return Network(tuple(buses), tuple(lines), base_mva)


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_network(network: Network, buses_path: str | Path, lines_path: str | Path) -> None:
    """Write a network so that :func:`load_network` reads back the same values."""
    with open(buses_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BUS_HEADER)
        for b in network.buses:
            lat, lon = b.location if b.location is not None else (None, None)
            w.writerow([b.id, b.zone, b.bus_type.value, _num(lat), _num(lon)])
    with open(lines_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LINE_HEADER)
        for ln in network.lines:
            w.writerow([
                ln.id, ln.from_bus, ln.to_bus, _num(ln.reactance), _num(ln.rating),
                _num(ln.voltage_kv), ln.kind.value, "true" if ln.is_dc else "false",
            ])


def load_region_mapping(path: str | Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for rowno, row in _read_rows(Path(path), REGION_HEADER):
        if not row["zone"] or not row["region"]:
            raise ParseError(str(path), rowno, "zone" if not row["zone"] else "region", "value is required")
        if row["zone"] in mapping:
            raise ParseError(str(path), rowno, "zone", f"zone {row['zone']!r} mapped twice")
        mapping[row["zone"]] = row["region"]
    return mapping


def write_region_mapping(mapping: Mapping[str, str], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_HEADER)
        for zone in sorted(mapping):
            w.writerow([zone, mapping[zone]])


def load_loadability_table(path: str | Path) -> dict[float, VoltageClass]:
    """CSV with header voltage_kv,thermal_limit_mw,reactance_ohm_per_km,sil_mw."""
    header = ["voltage_kv", "thermal_limit_mw", "reactance_ohm_per_km", "sil_mw"]
    table = {}
    for rowno, row in _read_rows(Path(path), header):
        vals = [_float(path, rowno, h, row[h]) for h in header]
        try:
            table[vals[0]] = VoltageClass(*vals[1:])
        except ConfigError as exc:
            raise ParseError(str(path), rowno, None, str(exc)) from None
    return table


# -- run configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything a pipeline run needs; see :func:`load_config` for the file format."""

    buses: Path
    lines: Path
    output_dir: Path
    regions: Path | None = None
    prep: PrepConfig = field(default_factory=PrepConfig)
    run_n1: bool = True
    directions: str = "both"
    slack_bus: str | None = None
    feasibility_tol: float = 1e-6
    optimality_tol: float = 1e-6
    record_timings: bool = False
    source: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.directions not in ("both", "forward", "reverse"):
            raise ConfigError(f"directions must be both, forward or reverse, got {self.directions!r}")
        if not (self.feasibility_tol > 0 and self.optimality_tol > 0):
            raise ConfigError("tolerances must be > 0")

    def check_paths(self) -> None:
        for p in (self.buses, self.lines, self.regions):
            if p is not None and not p.exists():
                raise ConfigError(f"input file not found: {p}")


CONFIG_KEYS = {
    "buses", "lines", "regions", "output_dir", "boundary_polygon", "boundary_buffer_km",
    "neighborhood_radius_km", "large_component_threshold", "loadability_table",
    "max_angle_deg", "max_voltage_drop_frac", "run_n1", "directions", "slack_bus",
    "feasibility_tol", "optimality_tol", "record_timings",
}


def parse_config_text(text: str, base_dir: Path = Path(".")) -> RunConfig:
    """Parse ``key = value`` lines (``#`` comments) into a :class:`RunConfig`.

    Relative paths are resolved against ``base_dir``.
    """
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = dict(cp["run"])
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("buses", "lines", "output_dir"):
        if not raw.get(key):
            raise ConfigError(f"config key {key!r} is required")

    def path(key: str) -> Path | None:
        v = raw.get(key)
        if not v:
            return None
        p = Path(v)
        return p if p.is_absolute() else base_dir / p

    def num(key: str, default, cast=float):
        v = raw.get(key, "")
        if v == "":
            return default
        try:
            return cast(v)
        except ValueError:
            raise ConfigError(f"config key {key!r}: bad value {v!r}") from None

    def flag(key: str, default: bool) -> bool:
        v = raw.get(key, "").lower()
        if v == "":
            return default
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ConfigError(f"config key {key!r}: not a boolean: {v!r}")

    polygon = None
    if raw.get("boundary_polygon"):
        try:
            ring = json.loads(raw["boundary_polygon"])
            polygon = tuple((float(lon), float(lat)) for lon, lat in ring)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"boundary_polygon must be a JSON list of [lon, lat] pairs: {exc}") from None

    table_path = path("loadability_table")
    table = load_loadability_table(table_path) if table_path else None
    loadability = LoadabilityParams(
        **({"voltage_classes": table} if table else {}),
        max_angle_deg=num("max_angle_deg", 45.0),
        max_voltage_drop_frac=num("max_voltage_drop_frac", 0.05),
    )
    threshold_text = raw.get("large_component_threshold", "").lower()
    if threshold_text in ("none", "off"):
        threshold = None
    else:
        threshold = num("large_component_threshold", 10_000, int)
    prep = PrepConfig(
        boundary_polygon=polygon,
        boundary_buffer_km=num("boundary_buffer_km", 100.0),
        neighborhood_radius_km=num("neighborhood_radius_km", 800.0),
        large_component_threshold=threshold,
        loadability=loadability,
    )
    return RunConfig(
        buses=path("buses"),
        lines=path("lines"),
        output_dir=path("output_dir"),
        regions=path("regions"),
        prep=prep,
        run_n1=flag("run_n1", True),
        directions=raw.get("directions", "both") or "both",
        slack_bus=raw.get("slack_bus") or None,
        feasibility_tol=num("feasibility_tol", 1e-6),
        optimality_tol=num("optimality_tol", 1e-6),
        record_timings=flag("record_timings", False),
        source={k: raw[k] for k in sorted(raw)},
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, path.parent)
