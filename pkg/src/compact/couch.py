"""Design-document emission for CouchDB-compatible stores.

Each norm becomes one design document holding a JavaScript map function
per state. ``simplified`` mode compiles the full normalized formula,
including reporter and attribute checks. ``verbatim`` mode reproduces the
layout of the reference StoreData document: event presence tests only,
each state prefixed by its ``created`` guard, and commitment discharge
written as ``created and consequent, or detached and consequent``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import ServerRejectedDesignDoc, ServerUnavailable, UnsupportedConstruct
from .norms import NormStateTable
from .syntax import (
    NOW,
    And,
    Arith,
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
    conj,
    uses_now,
)

MODES = ("simplified", "verbatim")

# JS expression tree: ("atom", text) | ("and", [..]) | ("or", [..]) | ("not", node)
_FALSE = ("atom", "false")
_TRUE = ("atom", "true")


def _and(items):
    flat = []
    for it in items:
        if it == _TRUE:
            continue
        if it[0] == "and":
            flat.extend(it[1])
        else:
            flat.append(it)
    if not flat:
        return _TRUE
    return flat[0] if len(flat) == 1 else ("and", flat)


def _or(items):
    flat = []
    for it in items:
        flat.extend(it[1] if it[0] == "or" else [it])
    return flat[0] if len(flat) == 1 else ("or", flat)


def render(node) -> str:
    kind = node[0]
    if kind == "atom":
        return node[1]
    if kind == "not":
        return f"!({render(node[1])})"
    if kind == "and":
        return " && ".join(f"({render(n)})" if n[0] == "or" else render(n) for n in node[1])
    return " || ".join(render(n) for n in node[1])


class _Translator:
    def __init__(self, checks: bool):
        self.checks = checks

    def arith(self, a: Arith, scope: dict) -> Optional[str]:
        if a.base is None:
            return str(a.offset)
        base = NOW if a.base == NOW else scope.get(a.base)
        if base is None:
            return None
        if a.offset > 0:
            return f"{base} + {a.offset}"
        if a.offset < 0:
            return f"{base} - {-a.offset}"
        return base

    def formula(self, f: Formula, scope: dict):
        """Return ``(js_node, scope_after)``."""
        if isinstance(f, EventExpr):
            return self.event(f, scope)
        if isinstance(f, And):
            left, scope = self.formula(f.left, scope)
            right, scope = self.formula(f.right, scope)
            return _and([left, right]), scope
        if isinstance(f, Or):
            left, ls = self.formula(f.left, scope)
            right, rs = self.formula(f.right, scope)
            if ls != scope or rs != scope:
                raise UnsupportedConstruct("time labels bound inside 'or' cannot be compiled to a map function")
            return _or([left, right]), scope
        if isinstance(f, Except):
            body, scope = self.formula(f.body, scope)
            exc, _ = self.formula(f.exception, dict(scope))
            return _and([body, ("not", exc)]), scope
        if isinstance(f, Not):
            inner, _ = self.formula(f.operand, dict(scope))
            return ("not", inner), scope
        if isinstance(f, Const):
            return (_TRUE if f.value else _FALSE), scope
        if isinstance(f, NowAfter):
            bound = self.arith(f.bound, scope)
            if bound is None:
                return _FALSE, scope
            return ("atom", f"now > {bound}"), scope
        if isinstance(f, NormRef):
            raise UnsupportedConstruct(f"norm reference {f.norm}:{f.state} was not inlined")
        raise UnsupportedConstruct(f"cannot compile {f!r}")

    def event(self, f: EventExpr, scope: dict):
        ev = f"doc.{f.event}"
        parts = [("atom", ev)]
        if self.checks:
            parts.append(("atom", f"{ev}.$by === doc.{f.role}"))
            parts += [("atom", f"{ev}.{a} !== undefined") for a in f.attrs]
        t = f.time
        stamp = f"{ev}.$time"
        if isinstance(t, (Label, Compare)):
            if t.var in scope:
                parts.append(("atom", f"{stamp} === {scope[t.var]}"))
            else:
                scope = {**scope, t.var: stamp}
            if isinstance(t, Compare):
                rhs = self.arith(t.rhs, scope)
                parts.append(_FALSE if rhs is None else ("atom", f"{stamp} {t.op} {rhs}"))
        elif isinstance(t, Interval):
            lo, hi = self.arith(t.lo, scope), self.arith(t.hi, scope)
            if lo is None or hi is None:
                parts.append(_FALSE)
            else:
                parts.append(("atom", f"{stamp} >= {lo}"))
                parts.append(("atom", f"{stamp} <= {hi}"))
        return _and(parts), scope


def compile_js(f: Formula, checks: bool = True) -> str:
    """JavaScript boolean expression over ``doc`` equivalent to ``f``."""
    node, _ = _Translator(checks).formula(f, {})
    return render(node)


_NOW_PRELUDE = (
    "  var now = 0;\n"
    "  for (var k in doc) {\n"
    "    var v = doc[k];\n"
    "    if (v !== null && typeof v === 'object' && typeof v.$time === 'number' && v.$time > now) now = v.$time;\n"
    "  }\n"
)


def _function(lines: list[str], needs_now: bool, now_offset: int) -> str:
    prelude = ""
    if needs_now:
        prelude = _NOW_PRELUDE
        if now_offset:
            prelude += f"  now = now + {now_offset};\n"
    body = "\n".join(f"  {line}" for line in lines)
    return f"function (doc) {{\n{prelude}{body}\n  && emit(doc)\n}}"


def _guard(expr: str) -> str:
    # a top-level disjunction would otherwise bind looser than the emit guard
    return f"({expr})" if _top_level_or(expr) else expr


def _top_level_or(expr: str) -> bool:
    depth = 0
    for i, ch in enumerate(expr):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and expr.startswith("||", i):
            return True
    return False


def verbatim_discharged(table: NormStateTable) -> Formula:
    """Commitment discharge in the redundant two-way form."""
    c = table.components["created"]
    s = table.components["discharged"]
    d = table.components.get("detached")
    if d is None:
        return conj(c, s)
    return Or(conj(c, s), conj(c, d, s))


def _verbatim_map(table: NormStateTable, state: str, now_offset: int) -> str:
    c = table.components["created"]
    cjs = _guard(compile_js(c, checks=False))
    lines = ["// created", cjs]
    needs_now = uses_now(table.states[state])
    if state == "created":
        pass
    elif table.kind == "commitment" and state in ("discharged", "violated"):
        discharged = compile_js(verbatim_discharged(table), checks=False)
        if state == "discharged":
            lines += ["// discharged", f"&& ({discharged})"]
        else:
            detached = compile_js(table.states["detached"], checks=False)
            lines += ["// detached", f"&& ({detached}", "// not discharged", f"&& !({discharged}))"]
    else:
        lines += [f"// {state}", f"&& ({compile_js(table.states[state], checks=False)})"]
    return _function(lines, needs_now, now_offset)


def _simplified_map(table: NormStateTable, state: str, now_offset: int) -> str:
    f = table.states[state]
    return _function([_guard(compile_js(f, checks=True))], uses_now(f), now_offset)


@dataclass
class DesignDocument:
    norm: str
    views: dict[str, dict[str, str]]
    language: str = "javascript"

    def to_json(self) -> dict:
        return {self.norm: {"language": self.language, "views": self.views}}

    def to_couch(self) -> dict:
        return {"_id": f"_design/{self.norm}", "language": self.language, "views": self.views}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, ensure_ascii=False) + "\n"

    def write(self, directory) -> Path:
        """Write ``<directory>/_design/<Norm>.json`` and return its path."""
        path = Path(directory) / "_design" / f"{self.norm}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path


def emit_design_document(table: NormStateTable, mode: str = "simplified", now_offset: int = 0) -> DesignDocument:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    build = _verbatim_map if mode == "verbatim" else _simplified_map
    views = {state: {"map": build(table, state, now_offset)} for state in table.states}
    return DesignDocument(table.norm, views)


# -- optional live server ---------------------------------------------------


def push_and_query(
    url: str,
    db: str,
    docs: Iterable[dict],
    design: DesignDocument,
    view: str,
    timeout: float = 30.0,
) -> list[str]:
    """Upload ``docs`` and ``design`` to a CouchDB server and return the view's row ids."""
    import requests

    base = url.rstrip("/")
    session = requests.Session()

    def call(method, path, **kw):
        try:
            return session.request(method, f"{base}/{path}", timeout=timeout, **kw)
        except requests.RequestException as exc:
            raise ServerUnavailable(f"{base}: {exc}") from exc

    r = call("PUT", db)
    if r.status_code not in (201, 202, 412):
        raise ServerUnavailable(f"cannot create database {db!r}: HTTP {r.status_code} {r.text}")
    docs = list(docs)
    if docs:
        r = call("POST", f"{db}/_bulk_docs", json={"docs": docs})
        if r.status_code not in (201, 202):
            raise ServerUnavailable(f"bulk insert failed: HTTP {r.status_code} {r.text}")
    body = design.to_couch()
    path = f"{db}/_design/{design.norm}"
    existing = call("GET", path)
    if existing.status_code == 200:
        body["_rev"] = existing.json()["_rev"]
    r = call("PUT", path, json=body)
    if r.status_code not in (201, 202):
        raise ServerRejectedDesignDoc(f"HTTP {r.status_code}: {r.text}")
    r = call("GET", f"{path}/_view/{view}")
    if r.status_code != 200:
        raise ServerRejectedDesignDoc(f"view query failed: HTTP {r.status_code}: {r.text}")
    return sorted(row["id"] for row in r.json().get("rows", []))
