"""Command-line entry point: ``itl run|validate|ptdf|synth``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import ItlError, NetworkValidationError
from .io import load_config, load_network, write_network, write_region_mapping
from .network import build_interfaces, connected_components
from .pipeline import EXIT_FATAL, EXIT_OK, EXIT_PARTIAL, run_pipeline
from .prep import prepare_network
from .ptdf import compute_ptdf

log = logging.getLogger("itl")


def _report(exc: BaseException) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, NetworkValidationError):
        payload["violations"] = [
            {"kind": v.kind, "element": v.element, "message": v.message} for v in exc.report.violations
        ]
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.output_dir:
        config.output_dir = Path(args.output_dir)
    outcome = run_pipeline(config)
    if outcome.exit_code == EXIT_FATAL:
        print(json.dumps({"error": "fatal", "message": outcome.error}, sort_keys=True), file=sys.stderr)
    else:
        print(f"wrote {len(outcome.files)} files to {outcome.output_dir}")
        for f in outcome.failures:
            print(f"failed: {f}", file=sys.stderr)
    return outcome.exit_code


def cmd_validate(args) -> int:
    config = load_config(args.config)
    config.check_paths()
    raw = load_network(config.buses, config.lines)
    net = prepare_network(raw, config.prep)
    comps = connected_components(net)
    print(
        f"ok: {len(net.buses)} buses, {len(net.lines)} lines, {len(net.zones)} zones, "
        f"{len(build_interfaces(net))} interfaces, {len(comps)} components "
        f"(raw: {len(raw.buses)} buses, {len(raw.lines)} lines)"
    )
    return EXIT_OK


def cmd_ptdf(args) -> int:
    config = load_config(args.config)
    config.check_paths()
    net = prepare_network(load_network(config.buses, config.lines), config.prep)
    comp = next((c for c in connected_components(net) if args.slack in c), None)
    if comp is None:
        raise ItlError(f"slack bus {args.slack!r} is not in the prepared network")
    ptdf = compute_ptdf(net.subnetwork(comp), args.slack)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["line", *ptdf.bus_order])
        for i, lid in enumerate(ptdf.line_order):
            w.writerow([lid, *(f"{v:.6f}" if v != 0 else "0.000000" for v in ptdf.values[i])])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import synthetic_grid

    net, mapping = synthetic_grid(n_buses=args.buses, n_zones=args.zones, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_network(net, out / "buses.csv", out / "lines.csv")
    write_region_mapping(mapping, out / "regions.csv")
    (out / "run.cfg").write_text(
        "buses = buses.csv\nlines = lines.csv\nregions = regions.csv\noutput_dir = out\n"
        "run_n1 = true\ndirections = both\n",
        encoding="utf-8",
    )
    print(f"wrote synthetic case ({len(net.buses)} buses, {len(net.lines)} lines) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itl", description="Interface transfer limits under DC power flow.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="full pipeline: prep, n-0, n-1, aggregation, statistics")
    r.add_argument("--config", required=True)
    r.add_argument("--output-dir", help="override output_dir from the config")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="load and prepare the network, report problems")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)

    t = sub.add_parser("ptdf", help="dump the PTDF of the slack bus's component as CSV")
    t.add_argument("--config", required=True)
    t.add_argument("--slack", required=True)
    t.add_argument("--out", help="output file (default stdout)")
    t.set_defaults(func=cmd_ptdf)

    s = sub.add_parser("synth", help="write a synthetic meshed test case")
    s.add_argument("--out", required=True)
    s.add_argument("--buses", type=int, default=500)
    s.add_argument("--zones", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ItlError as exc:
        _report(exc)
        return EXIT_FATAL
    except OSError as exc:
        _report(exc)
        return EXIT_FATAL


__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_FATAL", "EXIT_PARTIAL"]

if __name__ == "__main__":
    sys.exit(main())
