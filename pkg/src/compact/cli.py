"""``compact`` command line.

Machine-readable results go to stdout as one JSON object per line;
summaries and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .errors import CompactError
from .ledger import EventRecord, LedgerStore


def default_spec_path() -> Path:
    return Path(str(resources.files("compact") / "data" / "privacy.hrc"))


def _load_tables(spec_path):
    from .norms import build_tables
    from .parser import load_compact

    return build_tables(load_compact(spec_path or default_spec_path()))


def _out(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _err(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def _scalar(text: str):
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        return text
    return value if isinstance(value, (str, int, float, bool)) else text


def _pairs(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {item!r}")
        out[key] = _scalar(value)
    return out


# -- commands ---------------------------------------------------------------


def cmd_check(args) -> int:
    from .views import compile_views

    tables = _load_tables(args.spec_file or args.spec)
    for table in tables.values():
        views = compile_views(table)
        _out({"norm": table.norm, "kind": table.kind, "states": [v.state for v in views]})
    _err(f"ok: {len(tables)} norm(s)")
    return 0


def cmd_create_history(args) -> int:
    store = LedgerStore.load(args.store)
    before = store.seq
    doc = store.create_history(args.history_id, _pairs(args.role), _pairs(args.attr))
    store.append_to(args.store, before)
    _out({"historyId": doc.id, "seq": store.seq})
    return 0


def cmd_submit(args) -> int:
    payload = json.loads(args.event)
    if not isinstance(payload, dict) or len(payload) != 1:
        raise CompactError('event must look like {"Name": {"$by": ..., "$time": ..., ...}}')
    (name, body), = payload.items()
    store = LedgerStore.load(args.store)
    before = store.seq
    doc = store.submit_event(args.history_id, EventRecord.from_json(name, body))
    store.append_to(args.store, before)
    _out({"historyId": doc.id, "seq": store.seq})
    return 0


def cmd_query(args) -> int:
    from .views import ViewEngine

    store = LedgerStore.load(args.store)
    engine = ViewEngine(store, _load_tables(args.spec), threads=args.threads)
    rows = engine.query(args.norm, args.state, now=args.now)
    for row in rows:
        _out(row.to_json())
    _err(f"{args.norm}.{args.state}: {len(rows)} row(s)")
    return 0


def cmd_emit(args) -> int:
    from .couch import emit_design_document

    tables = _load_tables(args.spec)
    for table in tables.values():
        design = emit_design_document(table, args.mode, now_offset=args.now_offset)
        if args.out:
            path = design.write(args.out)
            _out({"norm": table.norm, "path": str(path)})
        else:
            _out(design.to_json())
    return 0


def cmd_gen(args) -> int:
    from .enactments import EnactmentGeneratorConfig, generate

    store = generate(EnactmentGeneratorConfig(count=args.count, seed=args.seed))
    store.persist(args.store)
    _out({"store": str(args.store), "histories": len(store), "seq": store.seq})
    return 0


def cmd_bench(args) -> int:
    from .bench import run_bench

    store = LedgerStore.load(args.store)
    report = run_bench(
        store,
        _load_tables(args.spec),
        batch_size=args.batch_size,
        threads=args.threads,
        now_offset=args.now_offset,
    )
    for line in report.lines():
        sys.stdout.write(line + "\n")
    if args.report:
        from .report import write_report

        paths = write_report(report, args.report)
        _err(f"report: {paths['jsonl']} {paths['figure']}")
    _err(f"{len(report.stats)} view(s) over {len(store)} histories in {report.total_elapsed:.2f}s; "
         f"slowest {report.min_rate():.0f} changes/s")
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .bench import BENCH_NOW_OFFSET
    from .couch import MODES

    p = argparse.ArgumentParser(prog="compact", description="Norm-based compact engine.")
    sub = p.add_subparsers(dest="command", required=True)

    def spec_opt(sp):
        sp.add_argument("--spec", type=Path, default=None,
                        help="compact specification (.hrc); defaults to the bundled privacy compact")

    def store_opt(sp):
        sp.add_argument("--store", type=Path, required=True, help="line-delimited ledger file")

    sp = sub.add_parser("check", help="parse, resolve and compile a specification")
    sp.add_argument("spec_file", nargs="?", type=Path)
    spec_opt(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("create-history", help="start a new history")
    store_opt(sp)
    sp.add_argument("history_id")
    sp.add_argument("--role", action="append", metavar="ROLE=AGENT")
    sp.add_argument("--attr", action="append", metavar="KEY=VALUE")
    sp.set_defaults(func=cmd_create_history)

    sp = sub.add_parser("submit", help="append an event to a history")
    store_opt(sp)
    sp.add_argument("history_id")
    sp.add_argument("event", help='JSON, e.g. {"Store": {"$by": "H", "item": "Diagnosis", "$time": 3}}')
    sp.set_defaults(func=cmd_submit)

    sp = sub.add_parser("query", help="list histories in a norm state")
    store_opt(sp)
    spec_opt(sp)
    sp.add_argument("norm")
    sp.add_argument("state")
    sp.add_argument("--now", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("emit", help="render CouchDB design documents")
    spec_opt(sp)
    sp.add_argument("--mode", choices=MODES, default="simplified")
    sp.add_argument("--out", type=Path, default=None, help="directory for _design/<Norm>.json files")
    sp.add_argument("--now-offset", type=int, default=0)
    sp.set_defaults(func=cmd_emit)

    sp = sub.add_parser("gen", help="generate a random enactment corpus")
    store_opt(sp)
    sp.add_argument("--count", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="time cold view construction")
    store_opt(sp)
    spec_opt(sp)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--batch-size", type=int, default=1000)
    sp.add_argument("--now-offset", type=int, default=BENCH_NOW_OFFSET)
    sp.add_argument("--report", type=Path, default=None, help="directory for bench.jsonl and throughput.png")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CompactError as exc:
        _err(f"error: {type(exc).__name__}: {exc}")
        return 1
    except (OSError, json.JSONDecodeError, argparse.ArgumentTypeError) as exc:
        _err(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
