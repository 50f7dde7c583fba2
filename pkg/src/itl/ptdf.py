"""Power transfer distribution factors from line reactances and topology."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConnectivityError, NetworkValidationError
from .network import Interface, Network, ValidationReport, Violation, connected_components


@dataclass(frozen=True)
class Incidence:
    """Signed line-bus incidence: +1 at the from bus, -1 at the to bus."""

    matrix: sp.csr_matrix
    line_order: tuple[str, ...]
    bus_order: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class PtdfMatrix:
    """Dense ``L x B`` sensitivities of line flows to bus injections.

    The column of ``slack_bus`` is zero: an injection there is absorbed there.
    """

    values: np.ndarray
    slack_bus: str
    line_order: tuple[str, ...]
    bus_order: tuple[str, ...]

    @cached_property
    def line_index(self) -> dict[str, int]:
        return {lid: i for i, lid in enumerate(self.line_order)}

    @cached_property
    def bus_index(self) -> dict[str, int]:
        return {bid: j for j, bid in enumerate(self.bus_order)}

    def __getitem__(self, key: tuple[str, str]) -> float:
        line, bus = key
        return float(self.values[self.line_index[line], self.bus_index[bus]])

    def flows(self, injections: dict[str, float]) -> dict[str, float]:
        g = np.array([injections.get(b, 0.0) for b in self.bus_order])
        return dict(zip(self.line_order, (self.values @ g).tolist()))


def build_incidence(network: Network) -> Incidence:
    """Incidence matrix of a connected network, rows and columns sorted by id.

    Raises:
        ConnectivityError: if the network is not a single component.
    """
    comps = connected_components(network)
    if len(comps) > 1:
        raise ConnectivityError(comps)
    dc = [ln.id for ln in network.lines if ln.is_dc]
    if dc:
        raise NetworkValidationError(
            ValidationReport([Violation("dc-line", lid, "DC line in PTDF network") for lid in dc])
        )
    bus_order = tuple(network.bus_ids)
    line_order = tuple(network.line_ids)
    col = {b: j for j, b in enumerate(bus_order)}
    rows = np.repeat(np.arange(len(line_order)), 2)
    cols = np.empty(2 * len(line_order), dtype=int)
    for i, lid in enumerate(line_order):
        ln = network.line_by_id[lid]
        cols[2 * i] = col[ln.from_bus]
        cols[2 * i + 1] = col[ln.to_bus]
    data = np.tile([1.0, -1.0], len(line_order))
    mat = sp.csr_matrix((data, (rows, cols)), shape=(len(line_order), len(bus_order)))
    return Incidence(mat, line_order, bus_order)


def compute_ptdf(network: Network, slack_bus: str | None = None) -> PtdfMatrix:
    """PTDF of a connected network.

    Solves the reduced nodal susceptance system (slack row and column removed)
    by sparse LU against all line right-hand sides; no explicit inverse is
    formed. ``slack_bus`` defaults to the smallest bus id.
    """
    if not network.buses:
        raise ValueError("empty network")
    slack_bus = slack_bus if slack_bus is not None else min(network.bus_by_id)
    if slack_bus not in network.bus_by_id:
        raise KeyError(f"slack bus {slack_bus!r} not in network")
    bad = [
        Violation("nonpositive-reactance", ln.id, f"reactance {ln.reactance}")
        for ln in network.lines
        if ln.reactance is None or not ln.reactance > 0
    ]
    if bad:
        raise NetworkValidationError(ValidationReport(bad))

    inc = build_incidence(network)
    n_bus, n_line = len(inc.bus_order), len(inc.line_order)
    values = np.zeros((n_line, n_bus))
    if n_line == 0 or n_bus == 1:
        return PtdfMatrix(values, slack_bus, inc.line_order, inc.bus_order)

    x = np.array([network.line_by_id[lid].reactance for lid in inc.line_order])
    da = sp.diags(1.0 / x) @ inc.matrix  # (L, B)
    s = inc.bus_order.index(slack_bus)
    keep = np.r_[0:s, s + 1 : n_bus]
    b_red = (inc.matrix.T @ da).tocsc()[keep][:, keep].tocsc()
    try:
        lu = spla.splu(b_red)
    except RuntimeError as exc:  # singular factor
        raise ConnectivityError(connected_components(network)) from exc
    # B_red is symmetric, so PTDF^T = B_red^-1 (D A)^T
    rhs = da[:, keep].T.toarray()
    values[:, keep] = lu.solve(rhs).T
    if not np.all(np.isfinite(values)):
        raise ConnectivityError(connected_components(network))
    return PtdfMatrix(values, slack_bus, inc.line_order, inc.bus_order)


@dataclass(frozen=True)
class IslandPtdf:
    """PTDF of one island left after a line removal."""

    buses: frozenset[str]
    ptdf: PtdfMatrix
    has_crossing_lines: bool


def remove_line_recompute(
    network: Network,
    line_id: str,
    slack_bus: str | None = None,
    interface: Interface | None = None,
) -> list[IslandPtdf]:
    """Recompute PTDFs after removing one line, one matrix per resulting island.

    Islands keep ``slack_bus`` when they contain it and otherwise use their
    smallest bus id. When ``interface`` is given, islands without any of its
    remaining crossing lines are flagged so callers can skip them.
    """
    if line_id not in network.line_by_id:
        raise KeyError(f"line {line_id!r} not in network")
    reduced = network.without_lines([line_id])
    crossing = set(interface.line_ids) - {line_id} if interface is not None else set()
    islands = []
    for comp in connected_components(reduced):
        sub = reduced.subnetwork(comp)
        slack = slack_bus if slack_bus in comp else min(comp)
        has = bool(crossing & set(sub.line_by_id)) if interface is not None else True
        islands.append(IslandPtdf(comp, compute_ptdf(sub, slack), has))
    return islands
