"""Command-line interface.

Every verb is a thin client of the same handlers the HTTP API uses, so
identical inputs produce identical documents and results through either
surface. Cubes travel between invocations as their JSON export, which holds
enough provenance (axes, filters, member orders) to rebuild them against the
warehouse.
"""

from __future__ import annotations

import argparse
import json
import sys

from .cube import cube_from_json, cube_to_json, cube_to_table
from .errors import EngineError
from .ingestion import FIXTURES, generate_fixture, ingest, mapping_from_json
from .service import Session, apply_operator, render_cube
from .xmlio import write_warehouse


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_cube(cube, fmt: str, out: str | None) -> None:
    if fmt == "table":
        _emit(cube_to_table(cube), out)
    else:
        _emit(json.dumps(cube_to_json(cube), indent=2) + "\n", out)


def _print_report(report: dict) -> int:
    for finding in report["findings"]:
        print(f"{finding['severity']}: [{finding['kind']}] {finding['message']} "
              f"({finding['where']})")
    print("ok" if report["ok"] else "invalid")
    return 0 if report["ok"] else 1


def _load_cube_arg(session: Session, path: str):
    return cube_from_json(session.warehouse, _read_json(path))


def cmd_load(args) -> int:
    session = Session(args.directory)
    info = session.model_info()
    for dim in info["dimensions"]:
        levels = " > ".join(f"{lv['id']}({len(lv['members'])})" for lv in dim["levels"])
        print(f"dimension {dim['id']}: {levels}")
    facts = info["facts"]
    print(f"facts {facts['id']}: {facts['rows']} rows, "
          f"measures {[m['id'] for m in facts['measures']]}")
    return _print_report(info["validation"])


def cmd_cube(args) -> int:
    session = Session(args.directory)
    body = {
        "axes": [{"dimension": d, "level": lv}
                 for d, lv in (a.split(":", 1) for a in args.axis)],
        "measure": args.measure,
        "aggregate": args.agg,
    }
    rendering = session.create_cube(body)
    cube, _ = session.cubes[rendering["id"]]
    _emit_cube(cube, args.format, args.out)
    return 0


def cmd_op(args) -> int:
    session = Session(args.directory)
    cube = _load_cube_arg(session, args.cube)
    request: dict = {"op": args.op}
    if args.dimension:
        request["dimension"] = args.dimension
    if args.level:
        request["level"] = args.level
    if args.member:
        request["member"] = args.member
    if args.members:
        request["members"] = args.members.split(",")
    if args.order:
        request["order"] = [int(x) for x in args.order.split(",")]
    if args.predicates:
        request["predicates"] = json.loads(args.predicates)
    result = apply_operator(cube, request)
    _emit_cube(result, args.format, args.out)
    return 0


def cmd_evolve(args) -> int:
    session = Session(args.directory)
    if args.rules.endswith(".json"):
        body = _read_json(args.rules)
    else:
        with open(args.rules, encoding="utf-8") as fh:
            body = {"text": fh.read()}
    result = session.apply_rules(body, dry_run=args.dry_run)
    code = _print_report(result)
    if result.get("applied"):
        change = result["change"]
        print(f"applied: new level {change['new_level']!r} on dimension "
              f"{change['dimension']!r} with groups {change['groups']}")
    elif args.dry_run:
        print("dry run: no documents were written")
    return code


def cmd_mine(args) -> int:
    session = Session(args.directory)
    body: dict = {}
    if args.task in ("opac", "mca"):
        cube = _load_cube_arg(session, args.cube)
        body["cube"] = session.register_cube(cube)
    if args.task == "opac":
        body["dimension"] = args.dimension
        body["linkage"] = args.linkage
        if args.k is not None:
            body["k"] = args.k
        if args.names:
            body["names"] = args.names.split(",")
        if args.target_level:
            body["target_level"] = args.target_level
    if args.task == "rules":
        body["meta"] = _read_json(args.meta)
        body["min_support"] = args.min_support
        body["min_confidence"] = args.min_confidence
    result = session.mine(args.task, body)
    _emit(json.dumps(result, indent=2) + "\n", args.out)
    return 0


def cmd_export(args) -> int:
    session = Session(args.directory)
    cube = _load_cube_arg(session, args.cube)
    _emit_cube(cube, args.format, args.out)
    return 0


def cmd_fixture(args) -> int:
    documents = generate_fixture(args.name, args.seed)
    import os
    os.makedirs(args.out, exist_ok=True)
    for name, text in documents.items():
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    print(f"wrote {len(documents)} documents to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    with open(args.table, encoding="utf-8") as fh:
        table = fh.read()
    mapping = mapping_from_json(_read_json(args.mapping))
    warehouse = ingest(table, mapping)
    write_warehouse(warehouse, args.directory)
    print(f"ingested {len(warehouse.facts.rows)} facts into {args.directory}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    session = Session(args.directory)
    app = create_app(session, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubehouse")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", help="parse and validate a warehouse directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("cube", help="build a cube")
    p.add_argument("directory")
    p.add_argument("--axis", action="append", required=True,
                   metavar="DIM:LEVEL")
    p.add_argument("--measure", required=True)
    p.add_argument("--agg", default="SUM",
                   choices=["SUM", "COUNT", "AVG", "MIN", "MAX"])
    p.add_argument("--format", default="table", choices=["table", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_cube)

    p = sub.add_parser("op", help="apply an operator to an exported cube")
    p.add_argument("directory")
    p.add_argument("cube", help="cube JSON file")
    p.add_argument("--op", required=True,
                   choices=["roll-up", "drill-down", "slice", "dice", "rotate",
                            "switch", "push", "pull"])
    p.add_argument("--dimension")
    p.add_argument("--level")
    p.add_argument("--member")
    p.add_argument("--members", help="comma-separated member list (switch)")
    p.add_argument("--order", help="comma-separated axis indices (rotate)")
    p.add_argument("--predicates", help="JSON object dim -> member list (dice)")
    p.add_argument("--format", default="table", choices=["table", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("evolve", help="validate and apply aggregation rules")
    p.add_argument("directory")
    p.add_argument("rules", help="rule text file, or structured rules as .json")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("mine", help="run a mining task")
    mine_sub = p.add_subparsers(dest="task", required=True)
    for task in ("opac", "mca", "rules"):
        mp = mine_sub.add_parser(task)
        mp.add_argument("directory")
        mp.add_argument("--out")
        if task in ("opac", "mca"):
            mp.add_argument("--cube", required=True, help="cube JSON file")
        if task == "opac":
            mp.add_argument("--dimension", required=True)
            mp.add_argument("--linkage", default="ward",
                            choices=["single", "complete", "average", "ward"])
            mp.add_argument("--k", type=int)
            mp.add_argument("--names", help="comma-separated cluster names")
            mp.add_argument("--target-level", dest="target_level")
        if task == "rules":
            mp.add_argument("--meta", required=True, help="meta-rule JSON file")
            mp.add_argument("--min-support", dest="min_support", type=float,
                            default=0.1)
            mp.add_argument("--min-confidence", dest="min_confidence", type=float,
                            default=0.5)
        mp.set_defaults(func=cmd_mine)

    p = sub.add_parser("export", help="re-render an exported cube")
    p.add_argument("directory")
    p.add_argument("cube", help="cube JSON file")
    p.add_argument("--format", default="table", choices=["table", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("fixture", help="write a seeded demo warehouse")
    p.add_argument("name", choices=list(FIXTURES))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("ingest", help="build a warehouse from a CSV table")
    p.add_argument("directory", help="output directory")
    p.add_argument("table", help="CSV file with a header row")
    p.add_argument("mapping", help="ingestion mapping JSON file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8050)
    p.add_argument("--ui", help="static frontend directory to mount at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
