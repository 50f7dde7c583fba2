import math

import pytest

from itl.pipeline import contingency_records
from itl.contingency import compute_all_contingencies
from itl.stats import ItlRecord, compute_summary
from itl.synthetic import random_network


def _rec(iface, direction, level, itl, rating=100.0, status="optimal"):
    return ItlRecord(iface, direction, level, itl, rating, status=status)


def test_five_bus_summary(net5):
    stats = compute_summary(contingency_records(compute_all_contingencies(net5), True))
    by = {(s.interface, s.level): s for s in stats.interfaces}
    s = by[("1||2", "n-0")]
    assert s.high_to_rating_sum == pytest.approx(718.684 / 800, abs=1e-6)
    assert s.direction_ratio == pytest.approx(1.0)
    assert by[("1||3", "n-0")].high_to_rating_sum == pytest.approx(1.0)
    assert by[("2||3", "n-1")].high_mw == 0.0
    assert stats.summary["n-0:interfaces"] == 3
    assert stats.summary["n-1:frac_zero_either_direction"] == pytest.approx(2 / 3)
    assert stats.summary["n-0:frac_high_equals_rating_sum"] == pytest.approx(2 / 3)
    imp = {c.interface: c for c in stats.impacts}
    assert imp["1||2"].high_diff_mw == pytest.approx(-400.0, abs=1e-3)
    assert imp["1||3"].high_ratio == 0.0


def test_direction_ratio_floor():
    stats = compute_summary([_rec("a||b", "forward", "n-0", 50.0), _rec("a||b", "reverse", "n-0", 0.0)])
    (s,) = stats.interfaces
    assert s.direction_ratio == pytest.approx(50.0 / 1e-6)
    assert stats.summary["n-0:frac_direction_ratio_gt_2"] == 1.0


def test_unusable_rows_are_dropped():
    recs = [
        _rec("a||b", "forward", "n-0", 10.0),
        _rec("a||b", "reverse", "n-0", math.nan, status="skipped"),
        _rec("c||d", "forward", "n-0", 10.0),
        _rec("c||d", "reverse", "n-0", 20.0),
    ]
    stats = compute_summary(recs)
    assert [s.interface for s in stats.interfaces] == ["c||d"]
    assert stats.summary["n-0:median_direction_ratio"] == pytest.approx(2.0)


def test_large_loss_counts():
    recs = [
        _rec("a||b", "forward", "n-0", 9000.0, 10000.0),
        _rec("a||b", "reverse", "n-0", 100.0, 10000.0),
        _rec("a||b", "forward", "n-1", 4500.0, 10000.0),
        _rec("a||b", "reverse", "n-1", 100.0, 10000.0),
    ]
    s = compute_summary(recs).summary
    assert s["n-1 vs n-0:count_high_loss_ge_4000_mw"] == 1.0
    assert s["n-1 vs n-0:count_low_loss_ge_4000_mw"] == 0.0


def test_rows_long_format(net5):
    stats = compute_summary(contingency_records(compute_all_contingencies(net5), False))
    rows = stats.rows()
    assert all(len(r) == 5 for r in rows)
    assert ("summary", "", "n-0", "interfaces", 3.0) in rows
    assert not stats.impacts


def test_ratio_bounded_on_random_networks(rng):
    for _ in range(10):
        n = random_network(rng, 9, 13, 3, typed=True)
        stats = compute_summary(contingency_records(compute_all_contingencies(n), True))
        for s in stats.interfaces:
            if s.rating_sum_mw > 0:
                assert 0.0 <= s.low_to_rating_sum <= s.high_to_rating_sum <= 1.0 + 1e-6
