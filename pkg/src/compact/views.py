"""Materialized per-state views over a ledger store.

Each norm state compiles to a per-document predicate. Collections are kept
up to date by replaying the store's change feed, re-evaluating every touched
history once per refresh, the same map-per-document model a document
database uses for its views.
"""

from __future__ import annotations

import itertools
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import UnknownNorm, UnknownState
from .ledger import HistoryDoc, LedgerStore
from .norms import NormStateTable, default_now
from .syntax import (
    And,
    Compare,
    Const,
    EventExpr,
    Except,
    Formula,
    Interval,
    Label,
    Not,
    NormRef,
    NowAfter,
    Or,
    uses_now,
)

# compiled node: (doc, env, now, k) -> result of k, or None
Node = Callable

_OPS = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def _accept(doc, env, now):
    return env


def _compile(f: Formula, counter: Optional[list]) -> Node:
    if isinstance(f, EventExpr):
        return _compile_event(f, counter)
    if isinstance(f, And):
        left, right = _compile(f.left, counter), _compile(f.right, counter)

        def run_and(doc, env, now, k):
            return left(doc, env, now, lambda d, e, n: right(d, e, n, k))

        return run_and
    if isinstance(f, Or):
        left, right = _compile(f.left, counter), _compile(f.right, counter)

        def run_or(doc, env, now, k):
            r = left(doc, env, now, k)
            return r if r is not None else right(doc, env, now, k)

        return run_or
    if isinstance(f, Except):
        body, exc = _compile(f.body, counter), _compile(f.exception, counter)

        def run_except(doc, env, now, k):
            def unless(d, e, n):
                if exc(d, e, n, _accept) is not None:
                    return None
                return k(d, e, n)

            return body(doc, env, now, unless)

        return run_except
    if isinstance(f, Not):
        inner = _compile(f.operand, counter)

        def run_not(doc, env, now, k):
            if inner(doc, env, now, _accept) is not None:
                return None
            return k(doc, env, now)

        return run_not
    if isinstance(f, Const):
        if f.value:
            return lambda doc, env, now, k: k(doc, env, now)
        return lambda doc, env, now, k: None
    if isinstance(f, NowAfter):
        bound = f.bound

        def run_late(doc, env, now, k):
            b = bound.value(env[0], now)
            if b is None or not now > b:
                return None
            return k(doc, env, now)

        return run_late
    if isinstance(f, NormRef):
        raise TypeError(f"norm reference {f.norm}:{f.state} must be inlined before compiling")
    raise TypeError(f"not a formula: {f!r}")


def _compile_event(f: EventExpr, counter: Optional[list]) -> Node:
    name, role, attrs, annot = f.event, f.role, f.attrs, f.time

    def check_time(ev_time, times, now):
        return times

    if isinstance(annot, Interval):
        lo, hi = annot.lo, annot.hi

        def check_time(ev_time, times, now):
            a, b = lo.value(times, now), hi.value(times, now)
            if a is None or b is None or not a <= ev_time <= b:
                return None
            return times

    elif isinstance(annot, (Label, Compare)):
        var = annot.var
        cmp = _OPS[annot.op] if isinstance(annot, Compare) else None
        rhs = annot.rhs if isinstance(annot, Compare) else None

        def check_time(ev_time, times, now):
            prior = times.get(var)
            if prior is None:
                times = {**times, var: ev_time}
            elif prior != ev_time:
                return None
            if cmp is not None:
                r = rhs.value(times, now)
                if r is None or not cmp(ev_time, r):
                    return None
            return times

    def run_event(doc, env, now, k):
        if counter is not None:
            counter[0] += 1
        ev = doc.events.get(name)
        if ev is None:
            return None
        agent = doc.attrs.get(role)
        if agent is None or ev.by != agent:
            return None
        ev_attrs = ev.attrs
        for a in attrs:
            if a not in ev_attrs:
                return None
        times = check_time(ev.time, env[0], now)
        if times is None:
            return None
        roles = env[1] if role in env[1] else {**env[1], role: agent}
        params = {**env[2], **{a: ev_attrs[a] for a in attrs}}
        return k(doc, (times, roles, params), now)

    return run_event


def compile_predicate(f: Formula, counter: Optional[list] = None):
    """Compile ``f`` to ``match(doc, now) -> binding dict | None``.

    When ``counter`` is a one-element list, every event-atom test adds one
    to ``counter[0]``.
    """
    node = _compile(f, counter)
    empty = ({}, {}, {})

    def match(doc, now):
        env = node(doc, empty, now, _accept)
        if env is None:
            return None
        return {"times": env[0], "roles": env[1], "params": env[2]}

    return match


@dataclass
class ViewDef:
    norm: str
    state: str
    predicate: Formula
    match: Callable = field(repr=False, compare=False, default=None)
    uses_now: bool = False

    def __post_init__(self):
        if self.match is None:
            self.match = compile_predicate(self.predicate)
        self.uses_now = uses_now(self.predicate)

    @property
    def key(self) -> tuple[str, str]:
        return (self.norm, self.state)


def compile_views(table: NormStateTable) -> list[ViewDef]:
    return [ViewDef(table.norm, state, f) for state, f in table.states.items()]


# -- collections ------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    history_id: str
    binding: dict
    seq: int

    def to_json(self) -> dict:
        return {"historyId": self.history_id, "binding": self.binding}


@dataclass
class ViewCollection:
    view: ViewDef
    rows: dict = field(default_factory=dict)
    last_seq: int = 0
    evaluations: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def sorted_rows(self) -> list[Row]:
        return [self.rows[k] for k in sorted(self.rows)]

    def ids(self) -> set[str]:
        return set(self.rows)


def _doc_now(doc: HistoryDoc, now: Optional[int], now_offset: int) -> int:
    return now if now is not None else default_now(doc) + now_offset


def _evaluate_docs(view: ViewDef, docs: list[HistoryDoc], now, now_offset, threads: int):
    def one(doc):
        return view.match(doc, _doc_now(doc, now, now_offset))

    if threads > 1 and len(docs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, docs, chunksize=max(1, len(docs) // (threads * 4))))
    return [one(d) for d in docs]


def refresh(
    collection: ViewCollection,
    store: LedgerStore,
    now: Optional[int] = None,
    now_offset: int = 0,
    threads: int = 1,
) -> ViewCollection:
    """Bring ``collection`` up to the store's current feed position.

    Histories touched several times since the last refresh are evaluated
    once; ``collection.evaluations`` records how many documents this call
    re-evaluated.
    """
    with collection.lock:
        entries = store.changes_since(collection.last_seq)
        if not entries:
            collection.evaluations = 0
            return collection
        touched = list(dict.fromkeys(e.history_id for e in entries))
        docs = [store.get(h) for h in touched]
        target = entries[-1].seq
        results = _evaluate_docs(collection.view, docs, now, now_offset, threads)
        for doc, binding in zip(docs, results):
            if binding is None:
                collection.rows.pop(doc.id, None)
            else:
                collection.rows[doc.id] = Row(doc.id, binding, target)
        collection.last_seq = target
        collection.evaluations = len(docs)
        return collection


def recompute(view: ViewDef, store: LedgerStore, now=None, now_offset: int = 0) -> ViewCollection:
    """Materialize ``view`` from scratch over every document."""
    return refresh(ViewCollection(view), store, now, now_offset)


class ViewEngine:
    """Holds one collection per (norm, state) and answers state queries."""

    def __init__(
        self,
        store: LedgerStore,
        tables: dict[str, NormStateTable],
        now_offset: int = 0,
        threads: int = 1,
    ):
        self.store = store
        self.tables = tables
        self.now_offset = now_offset
        self.threads = threads
        self.views: dict[tuple[str, str], ViewDef] = {}
        for table in tables.values():
            for v in compile_views(table):
                self.views[v.key] = v
        self.collections = {k: ViewCollection(v) for k, v in self.views.items()}

    def view(self, norm: str, state: str) -> ViewDef:
        if norm not in self.tables:
            raise UnknownNorm(f"no norm named {norm!r}")
        if (norm, state) not in self.views:
            known = ", ".join(self.tables[norm].states)
            raise UnknownState(f"norm {norm} has no state {state!r} (known: {known})")
        return self.views[(norm, state)]

    def refresh(self, norm: str, state: str) -> ViewCollection:
        self.view(norm, state)
        return refresh(
            self.collections[(norm, state)], self.store, now_offset=self.now_offset, threads=self.threads
        )

    def refresh_all(self) -> None:
        for norm, state in self.views:
            self.refresh(norm, state)

    def query(self, norm: str, state: str, now: Optional[int] = None) -> list[Row]:
        """Current rows for one state, sorted by history id.

        An explicit ``now`` only changes states whose formula reads the
        clock; those are evaluated afresh instead of from the collection.
        """
        view = self.view(norm, state)
        if now is not None and view.uses_now:
            return recompute(view, self.store, now=now).sorted_rows()
        return self.refresh(norm, state).sorted_rows()


# -- verification oracle ----------------------------------------------------


def _definitions(f: Formula, out: dict) -> dict:
    """Map each time variable bound outside negation to its defining events."""
    if isinstance(f, EventExpr):
        if isinstance(f.time, (Label, Compare)):
            out.setdefault(f.time.var, set()).add(f.event)
    elif isinstance(f, (And, Or)):
        _definitions(f.left, out)
        _definitions(f.right, out)
    elif isinstance(f, Except):
        _definitions(f.body, out)
    return out


def _arith(a, sigma, now):
    if a.base is None:
        return a.offset
    if a.base == "now":
        return now + a.offset
    v = sigma.get(a.base)
    return None if v is None else v + a.offset


def _check(f: Formula, doc: HistoryDoc, now: int, sigma: dict) -> bool:
    if isinstance(f, EventExpr):
        ev = doc.events.get(f.event)
        if ev is None:
            return False
        conds = [
            f.role in doc.attrs and ev.by == doc.attrs[f.role],
            all(a in ev.attrs for a in f.attrs),
        ]
        t = f.time
        if isinstance(t, Label):
            conds.append(sigma.get(t.var) == ev.time)
        elif isinstance(t, Compare):
            rhs = _arith(t.rhs, sigma, now)
            conds.append(sigma.get(t.var) == ev.time)
            conds.append(rhs is not None and _OPS[t.op](ev.time, rhs))
        elif isinstance(t, Interval):
            lo, hi = _arith(t.lo, sigma, now), _arith(t.hi, sigma, now)
            conds.append(lo is not None and hi is not None and lo <= ev.time <= hi)
        return all(conds)
    if isinstance(f, And):
        a = _check(f.left, doc, now, sigma)
        b = _check(f.right, doc, now, sigma)
        return a and b
    if isinstance(f, Or):
        a = _check(f.left, doc, now, sigma)
        b = _check(f.right, doc, now, sigma)
        return a or b
    if isinstance(f, Except):
        a = _check(f.body, doc, now, sigma)
        b = _exists(f.exception, doc, now, sigma)
        return a and not b
    if isinstance(f, Not):
        return not _exists(f.operand, doc, now, sigma)
    if isinstance(f, Const):
        return f.value
    if isinstance(f, NowAfter):
        b = _arith(f.bound, sigma, now)
        return b is not None and now > b
    raise TypeError(f"cannot check {f!r}")


def _exists(f: Formula, doc: HistoryDoc, now: int, sigma: dict) -> bool:
    defs = {v: evs for v, evs in _definitions(f, {}).items() if v not in sigma}
    names = sorted(defs)
    choices = []
    for v in names:
        times = sorted({doc.events[e].time for e in defs[v] if e in doc.events})
        choices.append(times + [None])
    found = False
    for combo in itertools.product(*choices):
        extended = {**sigma, **dict(zip(names, combo))}
        if _check(f, doc, now, extended):
            found = True
    return found


def oracle_evaluate(f: Formula, doc: HistoryDoc, now: Optional[int] = None) -> bool:
    """Decide ``f`` by enumerating every assignment of its time labels.

    Each label may only take the time of an event that defines it, since a
    history holds one event per name. No connective short-circuits.
    """
    if now is None:
        now = default_now(doc)
    return _exists(f, doc, now, {})


# -- throughput -------------------------------------------------------------


@dataclass(frozen=True)
class ThroughputStats:
    norm: str
    state: str
    docs_processed: int
    elapsed: float
    changes_per_second: float
    rows: int

    def to_json(self) -> dict:
        return {
            "norm": self.norm,
            "state": self.state,
            "docsProcessed": self.docs_processed,
            "elapsed": round(self.elapsed, 6),
            "changesPerSecond": round(self.changes_per_second, 2),
            "rows": self.rows,
        }


def measure_throughput(
    views: Iterable[ViewDef],
    store: LedgerStore,
    batch_size: int = 1000,
    now_offset: int = 0,
    threads: int = 1,
) -> list[ThroughputStats]:
    """Time a cold materialization of each view over the whole store.

    Documents are fed through the view in batches of ``batch_size``, each
    view starting from a freshly compiled predicate and an empty collection.
    """
    docs = store.docs()
    out = []
    for v in views:
        fresh = ViewDef(v.norm, v.state, v.predicate)
        rows = 0
        start = time.perf_counter()
        for i in range(0, len(docs), max(1, batch_size)):
            batch = docs[i : i + batch_size]
            for b in _evaluate_docs(fresh, batch, None, now_offset, threads):
                if b is not None:
                    rows += 1
        elapsed = time.perf_counter() - start
        n = len(docs)
        rate = n / elapsed if n and elapsed > 0 else 0.0
        out.append(ThroughputStats(v.norm, v.state, n, elapsed, rate, rows))
    return out


def count_work(view: ViewDef, docs: Iterable[HistoryDoc], now_offset: int = 0) -> int:
    """Total event-atom evaluations spent deciding ``view`` on ``docs``."""
    counter = [0]
    match = compile_predicate(view.predicate, counter)
    for d in docs:
        match(d, _doc_now(d, None, now_offset))
    return counter[0]
