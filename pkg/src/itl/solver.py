"""Interface transfer limit LP: build, solve and read back one interface direction.

For interface ``a||b`` and direction d the LP is

    max (Forward) / min (Reverse)   sum_k o_k F(k)         over crossing lines k
    s.t.  -r(l) <= F(l) <= r(l)                            every line
          F(l) - sum_b p(l, b) G(b) = 0                    every line
          sum_b G(b) = 0                                   every island
          G >= 0 (generator), G <= 0 (load), G = 0 (transmission)

where ``o_k`` is the crossing orientation. The explicit balance row matters:
without it the slack bus silently absorbs any imbalance, so a sign constraint
placed on the slack would be meaningless and the result would depend on which
bus is the slack.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InterfaceMismatchError, ItlError, SolverError
from .lp import LpProblem, LpStatus, Sense, Tolerances, solve
from .network import BusType, Interface, Network, build_interfaces, connected_components
from .prep import PrepConfig, neighborhood_filter
from .ptdf import PtdfMatrix, compute_ptdf

log = logging.getLogger(__name__)

BINDING_REL_TOL = 1e-4


class Direction(Enum):
    FORWARD = "forward"
    REVERSE = "reverse"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.FORWARD else -1

    @property
    def opposite(self) -> "Direction":
        return Direction.REVERSE if self is Direction.FORWARD else Direction.FORWARD


BOTH_DIRECTIONS = (Direction.FORWARD, Direction.REVERSE)


@dataclass
class ItlResult:
    """Outcome of one interface-direction solve.

    ``itl_mw`` is NaN when the solve was skipped or failed; ``status`` says which.
    ``rating_duals`` holds d(ITL)/d(rating) per line.
    """

    interface: Interface
    direction: Direction
    itl_mw: float
    rating_sum_mw: float
    flows: dict[str, float] = field(default_factory=dict)
    injections: dict[str, float] = field(default_factory=dict)
    binding_lines: tuple[str, ...] = ()
    rating_duals: dict[str, float] = field(default_factory=dict)
    ratings: dict[str, float] = field(default_factory=dict)
    status: str = "optimal"
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.interface.zone_a, self.interface.zone_b, self.direction.value)


def _injection_bounds(bus_type: BusType) -> tuple[float, float]:
    if bus_type is BusType.GENERATOR:
        return 0.0, math.inf
    if bus_type is BusType.LOAD:
        return -math.inf, 0.0
    if bus_type is BusType.TRANSMISSION:
        return 0.0, 0.0
    return -math.inf, math.inf


def _as_list(ptdf: PtdfMatrix | Sequence[PtdfMatrix]) -> list[PtdfMatrix]:
    return [ptdf] if isinstance(ptdf, PtdfMatrix) else list(ptdf)


def build_itl_lp(
    ptdf: PtdfMatrix | Sequence[PtdfMatrix],
    interface: Interface,
    direction: Direction,
    network: Network,
) -> LpProblem:
    """Assemble the ITL LP over one or more islands.

    Variables are named ``F[<line>]`` and ``G[<bus>]``; rows ``flow[<line>]``
    and ``balance[<slack bus>]``. PTDF terms of buses pinned to zero injection
    are left out of the flow rows since they multiply a fixed zero.
    """
    islands = _as_list(ptdf)
    covered = {lid for p in islands for lid in p.line_order}
    missing = [lid for lid in interface.line_ids if lid not in covered]
    if missing:
        raise InterfaceMismatchError(
            f"interface {interface.name}: crossing lines {missing} are not in the PTDF"
        )

    sense = Sense.MAXIMIZE if direction is Direction.FORWARD else Sense.MINIMIZE
    lp = LpProblem(name=f"itl_{direction.value}", sense=sense)
    for p in islands:
        ratings = [network.line_by_id[lid].rating for lid in p.line_order]
        f_idx = lp.add_variables([f"F[{lid}]" for lid in p.line_order], [-r for r in ratings], ratings)
        bounds = [_injection_bounds(network.bus_by_id[b].bus_type) for b in p.bus_order]
        g_idx = lp.add_variables(
            [f"G[{b}]" for b in p.bus_order], [lo for lo, _ in bounds], [up for _, up in bounds]
        )
        free = np.array([not (lo == 0.0 and up == 0.0) for lo, up in bounds], dtype=bool)
        n = len(p.line_order)
        block = sp.hstack([sp.identity(n, format="csr"), sp.csr_matrix(-p.values[:, free])])
        lp.add_equalities([f"flow[{lid}]" for lid in p.line_order], block, np.r_[f_idx, g_idx[free]])
        lp.add_equality(f"balance[{p.slack_bus}]", {f"G[{b}]": 1.0 for b in p.bus_order})

    lp.set_objective({f"F[{lid}]": float(o) for lid, o in interface.crossing_lines})
    return lp


def zero_result(
    interface: Interface, direction: Direction, rating_sum_mw: float, note: str
) -> ItlResult:
    """Record for an interface with no crossing line left: ITL is exactly zero."""
    return ItlResult(interface, direction, 0.0, rating_sum_mw, status="optimal", notes=(note,))


def failed_result(
    interface: Interface, direction: Direction, rating_sum_mw: float, status: str, note: str
) -> ItlResult:
    return ItlResult(interface, direction, math.nan, rating_sum_mw, status=status, notes=(note,))


def compute_itl(
    network: Network,
    ptdf: PtdfMatrix | Sequence[PtdfMatrix],
    interface: Interface,
    direction: Direction,
    rating_sum_mw: float | None = None,
    tol: Tolerances = Tolerances(),
) -> ItlResult:
    """Solve the ITL LP for one direction and unpack flows, injections and duals.

    Raises:
        SolverError: if the LP is not solved to a certified optimum. The
            all-zero point is always feasible and the objective is capped by
            the crossing ratings, so infeasible or unbounded means a bug.
    """
    islands = _as_list(ptdf)
    if rating_sum_mw is None:
        rating_sum_mw = interface.rating_sum(network)
    if not interface.crossing_lines:
        return zero_result(interface, direction, rating_sum_mw, "no crossing lines")

    lp = build_itl_lp(islands, interface, direction, network)
    sol = solve(lp, tol.feasibility, tol.optimality)
    if sol.status is not LpStatus.OPTIMAL:
        raise SolverError(f"{interface.name} {direction.value}: {sol.status.value} ({sol.message})")

    values = sol.x
    s = direction.sign
    itl = s * sol.objective_value
    if itl < 0:
        if itl < -1e-6:
            raise SolverError(f"{interface.name} {direction.value}: negative ITL {itl}")
        itl = 0.0

    flows, ratings, duals, binding = {}, {}, {}, []
    zl, zu = sol.lower_duals_arr, sol.upper_duals_arr
    for p in islands:
        for lid in p.line_order:
            j = lp.variable_index(f"F[{lid}]")
            r = network.line_by_id[lid].rating
            flows[lid] = float(values[j])
            ratings[lid] = r
            duals[lid] = float(s * (zu[j] - zl[j])) + 0.0
            if abs(values[j]) >= r - BINDING_REL_TOL * max(1.0, r):
                binding.append(lid)
    injections = {
        b: float(values[lp.variable_index(f"G[{b}]")]) for p in islands for b in p.bus_order
    }
    return ItlResult(
        interface=interface,
        direction=direction,
        itl_mw=float(itl),
        rating_sum_mw=rating_sum_mw,
        flows=flows,
        injections=injections,
        binding_lines=tuple(sorted(binding)),
        rating_duals=duals,
        ratings=ratings,
    )


def upgrade_supply_curve(result: ItlResult, tol: float = 1e-9) -> list[tuple[str, float]]:
    """Lines whose rating limits the ITL, most valuable upgrade first."""
    curve = [(lid, d) for lid, d in result.rating_duals.items() if d > tol]
    return sorted(curve, key=lambda item: (-item[1], item[0]))


# -- batch driver -------------------------------------------------------------------


class SkipInterface(ItlError):
    """The interface cannot be studied as a single synchronous system."""


@dataclass
class InterfaceCase:
    """The network an interface is solved on, with its PTDF per island."""

    interface: Interface
    network: Network
    ptdfs: list[PtdfMatrix]
    rating_sum_mw: float
    notes: tuple[str, ...] = ()
    tol: Tolerances = Tolerances()


class CaseBuilder:
    """Builds :class:`InterfaceCase` objects, sharing PTDFs between interfaces of a component."""

    def __init__(
        self,
        network: Network,
        config: PrepConfig | None = None,
        slack_bus: str | None = None,
        tol: Tolerances = Tolerances(),
    ):
        self.network = network
        self.tol = tol
        self.config = config or PrepConfig()
        self.slack_bus = slack_bus
        self.components = connected_components(network)
        self._comp_of = {b: k for k, comp in enumerate(self.components) for b in comp}
        self._cache: dict[int, tuple[Network, PtdfMatrix]] = {}

    def _slack_for(self, buses) -> str:
        return self.slack_bus if self.slack_bus in buses else min(buses)

    def _component(self, k: int) -> tuple[Network, PtdfMatrix]:
        if k not in self._cache:
            sub = self.network.subnetwork(self.components[k])
            self._cache[k] = (sub, compute_ptdf(sub, self._slack_for(self.components[k])))
        return self._cache[k]

    def build(self, interface: Interface) -> InterfaceCase:
        net = self.network
        rating_sum = interface.rating_sum(net)
        comps = {self._comp_of[net.line_by_id[lid].from_bus] for lid in interface.line_ids}
        if len(comps) > 1:
            raise SkipInterface(
                f"crossing lines of {interface.name} lie in {len(comps)} asynchronous components"
            )
        (k,) = comps
        threshold = self.config.large_component_threshold
        if threshold is None or len(self.components[k]) <= threshold:
            sub, ptdf = self._component(k)
            return InterfaceCase(interface, sub, [ptdf], rating_sum, tol=self.tol)

        sub = neighborhood_filter(net.subnetwork(self.components[k]), interface, self.config)
        ptdfs = [
            compute_ptdf(sub.subnetwork(c), self._slack_for(c)) for c in connected_components(sub)
        ]
        note = f"neighborhood filter kept {len(sub.buses)} of {len(self.components[k])} buses"
        return InterfaceCase(interface, sub, ptdfs, rating_sum, (note,), self.tol)


def solve_case(case: InterfaceCase, direction: Direction) -> ItlResult:
    res = compute_itl(case.network, case.ptdfs, case.interface, direction, case.rating_sum_mw, case.tol)
    res.notes = case.notes + res.notes
    return res


def compute_all_itls(
    network: Network,
    directions: Sequence[Direction] = BOTH_DIRECTIONS,
    config: PrepConfig | None = None,
    slack_bus: str | None = None,
    interfaces: Sequence[Interface] | None = None,
    tol: Tolerances = Tolerances(),
) -> list[ItlResult]:
    """ITLs of every interface in every requested direction.

    Failures are recorded on the affected result (``status`` other than
    ``"optimal"``) and do not stop the batch. Results are ordered by zone
    pair, then direction.
    """
    builder = CaseBuilder(network, config, slack_bus, tol)
    results = []
    for iface in interfaces if interfaces is not None else build_interfaces(network):
        try:
            case = builder.build(iface)
        except SkipInterface as exc:
            for d in directions:
                results.append(failed_result(iface, d, iface.rating_sum(network), "skipped", str(exc)))
            continue
        except ItlError as exc:
            for d in directions:
                results.append(failed_result(iface, d, iface.rating_sum(network), "error", str(exc)))
            continue
        for d in directions:
            try:
                results.append(solve_case(case, d))
            except ItlError as exc:
                log.warning("%s %s failed: %s", iface.name, d.value, exc)
                results.append(failed_result(iface, d, case.rating_sum_mw, "error", str(exc)))
    return results
