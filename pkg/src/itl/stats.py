"""Summary statistics over interface results, computed from itl.csv rows alone."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DIRECTION_EPS_MW = 1e-6
FULL_RATING_TOL = 1e-6
LARGE_LOSS_MW = 4000.0
LEVELS = ("n-0", "n-1")


@dataclass(frozen=True)
class ItlRecord:
    """One row of itl.csv."""

    interface: str
    direction: str
    level: str
    itl_mw: float
    rating_sum_mw: float
    removed_line: str = ""
    binding_lines: str = ""
    status: str = "optimal"

    @property
    def usable(self) -> bool:
        return self.status == "optimal" and not math.isnan(self.itl_mw)


@dataclass
class InterfaceStats:
    interface: str
    level: str
    forward_mw: float
    reverse_mw: float
    rating_sum_mw: float

    @property
    def high_mw(self) -> float:
        return max(self.forward_mw, self.reverse_mw)

    @property
    def low_mw(self) -> float:
        return min(self.forward_mw, self.reverse_mw)

    @property
    def direction_ratio(self) -> float:
        return self.high_mw / max(self.low_mw, DIRECTION_EPS_MW)

    @property
    def high_to_rating_sum(self) -> float:
        return self.high_mw / self.rating_sum_mw if self.rating_sum_mw > 0 else math.nan

    @property
    def low_to_rating_sum(self) -> float:
        return self.low_mw / self.rating_sum_mw if self.rating_sum_mw > 0 else math.nan


@dataclass
class ContingencyImpact:
    """n-1 versus n-0 for one interface; 'high' is the direction with the larger n-0 ITL."""

    interface: str
    high_n0_mw: float
    high_n1_mw: float
    low_n0_mw: float
    low_n1_mw: float

    @property
    def high_diff_mw(self) -> float:
        return self.high_n1_mw - self.high_n0_mw

    @property
    def low_diff_mw(self) -> float:
        return self.low_n1_mw - self.low_n0_mw

    @property
    def high_ratio(self) -> float:
        return self.high_n1_mw / self.high_n0_mw if self.high_n0_mw > 0 else math.nan

    @property
    def low_ratio(self) -> float:
        return self.low_n1_mw / self.low_n0_mw if self.low_n0_mw > 0 else math.nan


@dataclass
class SummaryStats:
    interfaces: list[InterfaceStats] = field(default_factory=list)
    impacts: list[ContingencyImpact] = field(default_factory=list)
    summary: dict[str, float] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str, str, str, float]]:
        """Long-format ``(scope, interface, level, metric, value)`` rows for stats.csv."""
        out = []
        for s in self.interfaces:
            for metric, value in (
                ("forward_mw", s.forward_mw),
                ("reverse_mw", s.reverse_mw),
                ("rating_sum_mw", s.rating_sum_mw),
                ("direction_ratio", s.direction_ratio),
                ("high_to_rating_sum", s.high_to_rating_sum),
                ("low_to_rating_sum", s.low_to_rating_sum),
            ):
                out.append(("interface", s.interface, s.level, metric, value))
        for c in self.impacts:
            for metric, value in (
                ("high_n1_minus_n0_mw", c.high_diff_mw),
                ("low_n1_minus_n0_mw", c.low_diff_mw),
                ("high_n1_over_n0", c.high_ratio),
                ("low_n1_over_n0", c.low_ratio),
            ):
                out.append(("interface", c.interface, "n-1 vs n-0", metric, value))
        for key in sorted(self.summary):
            level, metric = key.split(":", 1)
            out.append(("summary", "", level, metric, self.summary[key]))
        return out


def _median(values: Iterable[float]) -> float:
    v = [x for x in values if not math.isnan(x)]
    return float(np.median(v)) if v else math.nan


def _fraction(flags: list[bool]) -> float:
    return sum(flags) / len(flags) if flags else math.nan


def compute_summary(records: Iterable[ItlRecord]) -> SummaryStats:
    """Direction and contingency statistics in the style of interface-limit studies.

    Only interfaces with usable results in both directions at a level count
    toward that level's statistics.
    """
    table: dict[tuple[str, str], dict[str, ItlRecord]] = defaultdict(dict)
    for r in records:
        table[(r.interface, r.level)][r.direction] = r

    per_level: dict[str, dict[str, InterfaceStats]] = {lvl: {} for lvl in LEVELS}
    for (iface, level), dirs in sorted(table.items()):
        fwd, rev = dirs.get("forward"), dirs.get("reverse")
        if fwd is None or rev is None or not (fwd.usable and rev.usable):
            continue
        per_level.setdefault(level, {})[iface] = InterfaceStats(
            iface, level, fwd.itl_mw, rev.itl_mw, fwd.rating_sum_mw
        )

    stats = SummaryStats()
    for level in sorted(per_level):
        stats.interfaces.extend(per_level[level][k] for k in sorted(per_level[level]))

    summary: dict[str, float] = {}
    for level in sorted(per_level):
        rows = list(per_level[level].values())
        if not rows:
            continue
        dr = [s.direction_ratio for s in rows]
        summary[f"{level}:interfaces"] = float(len(rows))
        summary[f"{level}:median_high_to_rating_sum"] = _median(s.high_to_rating_sum for s in rows)
        summary[f"{level}:median_low_to_rating_sum"] = _median(s.low_to_rating_sum for s in rows)
        summary[f"{level}:median_direction_ratio"] = _median(dr)
        summary[f"{level}:frac_direction_ratio_le_1.05"] = _fraction([x <= 1.05 for x in dr])
        summary[f"{level}:frac_direction_ratio_gt_2"] = _fraction([x > 2.0 for x in dr])
        summary[f"{level}:frac_high_equals_rating_sum"] = _fraction(
            [s.high_to_rating_sum >= 1.0 - FULL_RATING_TOL for s in rows]
        )
        summary[f"{level}:frac_high_below_half_rating_sum"] = _fraction(
            [s.high_to_rating_sum < 0.5 for s in rows]
        )
        summary[f"{level}:frac_zero_either_direction"] = _fraction([s.low_mw <= 0.0 for s in rows])

    n0, n1 = per_level.get("n-0", {}), per_level.get("n-1", {})
    for iface in sorted(set(n0) & set(n1)):
        a, b = n0[iface], n1[iface]
        high = "forward" if a.forward_mw >= a.reverse_mw else "reverse"
        pick = lambda s, d: s.forward_mw if d == "forward" else s.reverse_mw  # noqa: E731
        low = "reverse" if high == "forward" else "forward"
        stats.impacts.append(
            ContingencyImpact(iface, pick(a, high), pick(b, high), pick(a, low), pick(b, low))
        )
    if stats.impacts:
        imp = stats.impacts
        summary["n-1 vs n-0:median_high_n1_minus_n0_mw"] = _median(c.high_diff_mw for c in imp)
        summary["n-1 vs n-0:median_low_n1_minus_n0_mw"] = _median(c.low_diff_mw for c in imp)
        summary["n-1 vs n-0:median_high_n1_over_n0"] = _median(c.high_ratio for c in imp)
        summary["n-1 vs n-0:median_low_n1_over_n0"] = _median(c.low_ratio for c in imp)
        summary["n-1 vs n-0:count_high_loss_ge_4000_mw"] = float(
            sum(c.high_diff_mw <= -LARGE_LOSS_MW for c in imp)
        )
        summary["n-1 vs n-0:count_low_loss_ge_4000_mw"] = float(
            sum(c.low_diff_mw <= -LARGE_LOSS_MW for c in imp)
        )
    stats.summary = summary
    return stats
