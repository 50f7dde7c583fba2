"""Zonal interface transfer limits from nodal DC power-flow models."""

from .network import Bus, BusType, Interface, Line, LineKind, Network, build_interfaces, connected_components, validate_network
from .ptdf import PtdfMatrix, compute_ptdf
from .solver import Direction, ItlResult, compute_all_itls, compute_itl, upgrade_supply_curve

__version__ = "0.1.0"

__all__ = [
    "Bus",
    "BusType",
    "Direction",
    "Interface",
    "ItlResult",
    "Line",
    "LineKind",
    "Network",
    "PtdfMatrix",
    "build_interfaces",
    "compute_all_itls",
    "compute_itl",
    "compute_ptdf",
    "connected_components",
    "upgrade_supply_curve",
    "validate_network",
]
