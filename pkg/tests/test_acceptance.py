"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (see ``RESULTS``); conftest prints them in
the terminal summary so a plain ``pytest`` run shows the scorecard.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest

from itl.cases import five_bus, five_bus_dir
from itl.cli import main
from itl.contingency import (
    aggregate_direct,
    aggregate_summed,
    compare_direct_vs_summed,
    compute_all_contingencies,
)
from itl.io import load_config
from itl.network import BusType, build_interfaces, connected_components
from itl.pipeline import run_pipeline
from itl.prep import DEFAULT_VOLTAGE_CLASSES, LoadabilityParams, loadability_curve, loadability_limit
from itl.ptdf import compute_ptdf
from itl.solver import Direction, compute_all_itls, compute_itl
from itl.synthetic import random_mapping, random_network
from oracles import oracle_itl

FWD, REV = Direction.FORWARD, Direction.REVERSE
RESULTS: dict[int, tuple[bool, str]] = {}

# slack A, printed to four decimals in the reference table
TABLE_PTDF = {
    "A|B": [0, -0.6698, -0.5429, -0.1939, -0.0344],
    "B|C": [0, 0.3302, -0.5429, -0.1939, -0.0344],
    "C|D": [0, 0.3302, 0.4571, -0.1939, -0.0344],
    "D|E": [0, 0.1509, 0.2090, 0.3685, -0.1120],
    "A|E": [0, -0.1509, -0.2090, -0.3685, -0.8880],
    "A|D": [0, -0.1792, -0.2481, -0.4376, -0.0776],
}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def rel_close(a: float, b: float, rel: float) -> bool:
    # zero limits come back as ~1e-12 from the solver; the floor keeps them comparable
    return abs(a - b) <= rel * max(abs(a), abs(b)) + 1e-9


def _iface(network, name):
    return next(i for i in build_interfaces(network) if i.name == name)


def _small_network(rng, max_buses, max_lines, typed):
    n_buses = int(rng.integers(3, max_buses + 1))
    n_lines = int(rng.integers(n_buses - 1, max_lines + 1))
    n_zones = int(rng.integers(2, min(4, n_buses) + 1))
    return random_network(rng, n_buses, n_lines, n_zones, typed=typed)


# -- shared random sweep (criteria 6 and 8) ------------------------------------------


@pytest.fixture(scope="module")
def sweep():
    """Random networks (<= 12 buses, <= 20 lines, half typed) until 1000 n-0 solves."""
    rng = np.random.default_rng(20240601)
    out = []
    solves = 0
    k = 0
    while solves < 1000:
        n = _small_network(rng, 12, 20, typed=bool(k % 2))
        k += 1
        for c in compute_all_contingencies(n):
            out.append((n, c))
            solves += 1
    return out


# -- criteria -----------------------------------------------------------------------


def test_c01_ptdf_golden():
    t0 = time.perf_counter()
    net = five_bus()
    p = compute_ptdf(net, "A")
    elapsed = time.perf_counter() - t0
    worst = max(abs(p[line, bus] - v) for line, row in TABLE_PTDF.items() for bus, v in zip("ABCDE", row))
    ok = worst < 1e-3 and elapsed < 1.0
    record(1, ok, f"max |PTDF - table| = {worst:.2e} (< 1e-3), {elapsed * 1000:.1f} ms (< 1 s)")
    assert ok


def test_c02_itl_golden():
    t0 = time.perf_counter()
    net = five_bus()
    r = compute_itl(net, compute_ptdf(net, "A"), _iface(net, "1||2"), FWD)
    elapsed = time.perf_counter() - t0
    expected = {"C|D": 400.0, "A|E": 400.0, "D|E": -240.0, "A|D": 319.0}
    worst = max(abs(r.flows[k] - v) for k, v in expected.items())
    ok = abs(r.itl_mw - 719.0) < 0.5 and worst < 0.5 and elapsed < 1.0
    record(2, ok, f"ITL(1||2 fwd) = {r.itl_mw:.3f} MW (719 +/- 0.5), max flow error {worst:.3f} MW, {elapsed * 1000:.1f} ms")
    assert ok


def test_c03_single_line_interfaces():
    """The reference table prints 400 for 2||3 and 240 for 1||3.

    Each of those interfaces is a single line (D|E rated 240, A|E rated 400),
    and both the solver and the oracle give 240 for 2||3 and 400 for 1||3, so
    the two table entries are read as transposed.
    """
    net = five_bus()
    p = compute_ptdf(net, "A")
    got = {}
    for name, want in (("2||3", 240.0), ("1||3", 400.0)):
        iface = _iface(net, name)
        got[name] = (compute_itl(net, p, iface, FWD).itl_mw, oracle_itl(net, iface, True), want)
    ok = all(abs(s - w) < 0.5 and abs(o - w) < 0.5 for s, o, w in got.values())
    record(3, ok, ", ".join(f"{k}: solver {s:.3f} oracle {o:.3f} (want {w:.0f})" for k, (s, o, w) in got.items()))
    assert ok


def test_c04_direction_symmetry():
    rng = np.random.default_rng(4)
    cases = [five_bus()] + [_small_network(rng, 12, 20, typed=False) for _ in range(100)]
    checked, bad = 0, []
    for n in cases:
        res = {(r.interface.name, r.direction): r.itl_mw for r in compute_all_itls(n)}
        for (name, d), v in res.items():
            if d is FWD:
                checked += 1
                if not rel_close(v, res[(name, REV)], 1e-6):
                    bad.append((name, v, res[(name, REV)]))
    ok = not bad and len(cases) == 101
    record(4, ok, f"{checked} interfaces on 5-bus + 100 random networks, {len(bad)} asymmetric (rel 1e-6)")
    assert ok, bad[:5]


def test_c05_slack_invariance():
    net = five_bus()
    worst = 0.0
    for iface in build_interfaces(net):
        for d in Direction:
            vals = [compute_itl(net, compute_ptdf(net, s), iface, d).itl_mw for s in "ABCDE"]
            worst = max(worst, (max(vals) - min(vals)) / max(1.0, max(vals)))
    ok = worst <= 1e-6
    record(5, ok, f"max relative spread over 5 slacks = {worst:.2e} (<= 1e-6)")
    assert ok


def test_c06_rating_sum_bound(sweep):
    bad = [
        (c.interface.name, c.n0.itl_mw, c.interface.rating_sum(n))
        for n, c in sweep
        if not (c.n0.ok and c.n0.itl_mw <= c.interface.rating_sum(n) * (1 + 1e-9) + 1e-9)
    ]
    ok = len(sweep) >= 1000 and not bad
    record(6, ok, f"{len(sweep)} interface-direction solves, {len(bad)} above the crossing-line rating sum")
    assert ok, bad[:5]


def test_c07_oracle_equivalence():
    rng = np.random.default_rng(7)
    checked, bad = 0, []
    for k in range(100):
        n = _small_network(rng, 10, 16, typed=bool(k % 2))
        p = compute_ptdf(n)
        for iface in build_interfaces(n):
            for d in Direction:
                got = compute_itl(n, p, iface, d).itl_mw
                want = oracle_itl(n, iface, d is FWD)
                checked += 1
                if not rel_close(got, want, 1e-6):
                    bad.append((k, iface.name, d.value, got, want))
    ok = not bad
    record(7, ok, f"{checked} solves on 100 networks (<= 10 buses), {len(bad)} differ from the oracle (rel 1e-6)")
    assert ok, bad[:5]


def test_c08_contingency_ordering(sweep):
    """n-1 <= n-0 on the sweep, and n-1 = 0 for single-line interfaces.

    Removing a line also removes its loop-flow constraint, so the n-1 limit can
    exceed n-0 on meshed networks. The oracle confirms those cases (see
    test_contingency.py::test_outage_can_raise_the_limit), so failures here are
    reported as found rather than masked.
    """
    above = [
        (c.interface.name, c.direction.value, c.removed_line, c.n0.itl_mw, c.n1.itl_mw)
        for _, c in sweep
        if c.n1.itl_mw > c.n0.itl_mw + 1e-6 * max(1.0, c.n0.itl_mw)
    ]
    # independent check that each violation is real and not a solver artefact
    confirmed = 0
    for n, c in sweep:
        if c.n1.itl_mw > c.n0.itl_mw + 1e-6 * max(1.0, c.n0.itl_mw):
            fwd = c.direction is FWD
            reduced = n.without_lines([c.removed_line])
            o0 = oracle_itl(n, c.interface, fwd)
            o1 = oracle_itl(reduced, c.interface.without(c.removed_line), fwd)
            confirmed += rel_close(o0, c.n0.itl_mw, 1e-6) and rel_close(o1, c.n1.itl_mw, 1e-6)
    single = [c for _, c in sweep if len(c.interface.crossing_lines) == 1]
    single_bad = [c for c in single if c.n1.itl_mw != 0.0]
    ok = not above and not single_bad
    worst = max((b[4] - b[3] for b in above), default=0.0)
    record(
        8,
        ok,
        f"{len(above)}/{len(sweep)} interface-directions with n-1 > n-0 (worst +{worst:.1f} MW, "
        f"{confirmed} confirmed by the oracle); "
        f"{len(single) - len(single_bad)}/{len(single)} single-line interfaces with n-1 = 0",
    )
    assert ok, above[:5]


def test_c09_aggregation_bound():
    rng = np.random.default_rng(9)
    rows_checked, bad, ident_bad = 0, [], []
    for _ in range(50):
        n_buses = int(rng.integers(6, 13))
        n = random_network(rng, n_buses, int(rng.integers(n_buses, 21)), int(rng.integers(4, 7)), typed=True)
        zonal = compute_all_itls(n)
        mapping = random_mapping(rng, n.zones, int(rng.integers(2, 5)))
        for row in compare_direct_vs_summed(aggregate_direct(n, mapping), aggregate_summed(zonal, mapping)):
            rows_checked += 1
            if row.partial or row.summed_n0 < row.direct_n0 - 1e-6 * max(1.0, row.direct_n0):
                bad.append((row.region_a, row.region_b, row.direction.value, row.direct_n0, row.summed_n0))
        ident = {z: z for z in n.zones}
        for row in compare_direct_vs_summed(aggregate_direct(n, ident), aggregate_summed(zonal, ident)):
            if row.summed_n0 != row.direct_n0:
                ident_bad.append((row.region_a, row.region_b, row.direct_n0, row.summed_n0))
    ok = not bad and not ident_bad and rows_checked > 0
    record(9, ok, f"{rows_checked} region-pair directions, {len(bad)} with summed < direct; identity mismatches {len(ident_bad)}")
    assert ok, (bad[:5], ident_bad[:5])


def test_c10_loadability():
    params = LoadabilityParams()
    lengths = np.linspace(0.0, 1500.0, 1000)
    bad = []
    for kv, vc in sorted(DEFAULT_VOLTAGE_CLASSES.items()):
        mw, _ = loadability_curve(lengths, kv, params)
        if np.any(np.diff(mw) > 0):
            bad.append(f"{kv:g} kV increases")
        for d in (0.0, 1e-9, 1e-3):
            if loadability_limit(d, kv, params) != vc.thermal_limit_mw:
                bad.append(f"{kv:g} kV at {d} km")
    ok = not bad
    record(10, ok, f"{len(DEFAULT_VOLTAGE_CLASSES)} voltage classes x 1000 lengths, non-increasing and thermal at 0: {bad or 'ok'}")
    assert ok


def test_c11_determinism(tmp_path):
    cfg = str(five_bus_dir() / "run.cfg")
    a, b = tmp_path / "a", tmp_path / "b"
    codes = (main(["run", "--config", cfg, "--output-dir", str(a)]), main(["run", "--config", cfg, "--output-dir", str(b)]))
    fa = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    fb = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    diff = [str(f) for f in fa if (a / f).read_bytes() != (b / f).read_bytes()]
    ok = codes == (0, 0) and fa == fb and not diff and len(fa) > 0
    record(11, ok, f"{len(fa)} output files, {len(diff)} differ between runs")
    assert ok, diff


# -- criterion 12: synthetic 500-bus, 20-zone run -------------------------------------

# Ratio metrics from one run on synthetic_grid(500, 20, seed=0), frozen as
# regression values. They describe this synthetic network only.
BASELINES = {
    ("n-0", "interfaces"): 43,
    ("n-0", "median_high_to_rating_sum"): 1.000000,
    ("n-0", "median_low_to_rating_sum"): 0.972915,
    ("n-1", "interfaces"): 43,
    ("n-1", "median_high_to_rating_sum"): 0.435579,
    ("n-1", "median_low_to_rating_sum"): 0.351762,
    ("n-1 vs n-0", "median_high_n1_over_n0"): 0.471211,
    ("n-1 vs n-0", "median_low_n1_over_n0"): 0.476140,
    ("n-0", "frac_high_equals_rating_sum"): 0.744186,
    ("n-1", "frac_zero_either_direction"): 0.255814,
}
RATIO_METRICS = [
    "median_high_to_rating_sum", "median_low_to_rating_sum", "median_direction_ratio",
    "frac_direction_ratio_le_1.05", "frac_direction_ratio_gt_2", "frac_high_equals_rating_sum",
    "frac_zero_either_direction",
]


@pytest.mark.slow
def test_c12_synthetic_500_bus(tmp_path):
    case = tmp_path / "syn"
    assert main(["synth", "--out", str(case), "--buses", "500", "--zones", "20", "--seed", "0"]) == 0
    config = load_config(case / "run.cfg")
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        outcome = run_pipeline(config)
    elapsed = time.perf_counter() - t0
    checks: dict[str, bool] = {"exit 0": outcome.exit_code == 0, "< 5 min": elapsed < 300.0}

    net = outcome.network
    zonal = outcome.zonal
    n0 = {(c.interface.name, c.direction): c.n0 for c in zonal}
    # 4: symmetry presumes unconstrained buses; the synthetic case is typed, so
    # check it on an untyped copy over a sample of interfaces
    free = net.replace_buses(replace(b, bus_type=BusType.UNCONSTRAINED) for b in net.buses)
    sample = build_interfaces(free)[::5]
    sym = {(r.interface.name, r.direction): r.itl_mw for r in compute_all_itls(free, interfaces=sample)}
    checks["symmetry"] = all(rel_close(v, sym[(name, REV)], 1e-6) for (name, d), v in sym.items() if d is FWD)
    # 5: three slacks on a handful of interfaces
    spread = 0.0
    for iface in build_interfaces(net)[:5]:
        lid = iface.crossing_lines[0][0]
        comp = next(c for c in connected_components(net) if net.line_by_id[lid].from_bus in c)
        sub = net.subnetwork(comp)
        slacks = sorted(comp)[:: max(1, len(comp) // 3)][:3]
        vals = [compute_itl(sub, compute_ptdf(sub, s), iface, FWD).itl_mw for s in slacks]
        spread = max(spread, (max(vals) - min(vals)) / max(1.0, max(vals)))
    checks["slack invariance"] = spread <= 1e-6
    # 6
    checks["rating-sum bound"] = all(
        r.itl_mw <= r.rating_sum_mw * (1 + 1e-9) + 1e-9 for c in zonal for r in (c.n0, c.n1)
    )
    # 7: oracle on the three interfaces with the fewest crossing lines plus the largest
    ifs = sorted(build_interfaces(net), key=lambda i: (len(i.crossing_lines), i.name))
    checks["oracle"] = all(
        rel_close(n0[(i.name, FWD)].itl_mw, oracle_itl(net, i, True), 1e-6) for i in ifs[:3] + ifs[-1:]
    )
    # 8
    n1_above = sum(c.n1.itl_mw > c.n0.itl_mw + 1e-6 * max(1.0, c.n0.itl_mw) for c in zonal)
    single_ok = all(c.n1.itl_mw == 0.0 for c in zonal if len(c.interface.crossing_lines) == 1)
    checks["n-1 <= n-0"] = n1_above == 0 and single_ok
    # 9
    with open(case / "out" / "aggregation.csv", newline="") as fh:
        agg = list(csv.DictReader(fh))
    checks["summed >= direct"] = bool(agg) and all(r["summed_n0_ge_direct"] == "true" and r["partial"] == "false" for r in agg)
    # 10: the imputed ratings came from the loadability curve, which is monotone
    params = config.prep.loadability
    checks["loadability"] = all(
        np.all(np.diff(loadability_curve(np.linspace(0, 1500, 1000), kv, params)[0]) <= 0)
        for kv in params.voltage_classes
    )

    with open(case / "out" / "stats.csv", newline="") as fh:
        summary = {(r["level"], r["metric"]): r["value"] for r in csv.DictReader(fh) if r["scope"] == "summary"}
    checks["stats metrics"] = all((lvl, m) in summary for lvl in ("n-0", "n-1") for m in RATIO_METRICS)
    drift = {
        k: (summary.get(k), v) for k, v in BASELINES.items()
        if v is None or summary.get(k) is None or abs(float(summary[k]) - v) > 1e-4
    }
    checks["baselines"] = not drift

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    record(
        12,
        ok,
        f"{len(net.buses)} buses, {len(build_interfaces(net))} interfaces, run {elapsed:.0f} s; "
        f"n-0 medians {summary.get(('n-0', 'median_high_to_rating_sum'))}/{summary.get(('n-0', 'median_low_to_rating_sum'))}, "
        f"n-1 medians {summary.get(('n-1', 'median_high_to_rating_sum'))}/{summary.get(('n-1', 'median_low_to_rating_sum'))}"
        + (f"; failed: {failed}" if failed else ""),
    )
    assert ok, (failed, drift)
