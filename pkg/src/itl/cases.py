"""Bundled test cases."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .io import load_network
from .network import Network

FIVE_BUS_ZONES = {"A": "1", "B": "1", "C": "1", "D": "2", "E": "3"}


def five_bus_dir() -> Path:
    """Directory holding the 5-bus buses.csv, lines.csv, regions.csv and run.cfg."""
    return Path(str(resources.files("itl") / "data" / "five_bus"))


def five_bus() -> Network:
    """5-bus, 3-zone system: A, B, C in zone 1, D in zone 2, E in zone 3; no bus types."""
    d = five_bus_dir()
    return load_network(d / "buses.csv", d / "lines.csv")
